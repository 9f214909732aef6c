"""Discrete spectra: bound states of the coupled device and the
Dirichlet spectrum of the isolated interior.

Bound states live strictly below v_b.  A candidate solution starts on
the decaying branch e^{+kappa_a (x-a)} in the left lead; propagating
its state vector (u, w) to b+0 and demanding the decaying branch
e^{-kappa_b (x-b)} on the right gives the matching function

    D(lam) = w(b+0) + (kappa_b / (2 m_b)) u(b+0),

whose simple roots are the eigenvalues.  Roots are located by a sign
scan over 10^3 points and polished by bisection to 1e-12.

The isolated interior (Dirichlet at a and b) is handled the same way:
u(a) = 0, w(a) = 1, and eigenvalues are the zeros of u(b; lam), i.e.
of the (1, 2) entry of the interior transfer matrix.

L2 norms are assembled from per-segment closed forms (the solutions
are trigonometric/hyperbolic per segment) plus exact lead tails, so
normalization carries no quadrature error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .device import DeviceProfile, channel_wavenumber
from .scattering import DeltaCouplings, interior_transfer, segment_matrix

__all__ = ["BoundState", "WellMode", "find_bound_states", "closed_well_spectrum"]

_NO_COUPLING = DeltaCouplings(0.0, 0.0)
_BRANCH_EPS = 1.0e-12
_BISECT_TOL = 1.0e-12
_SCAN_POINTS = 1000


@dataclass(frozen=True)
class BoundState:
    """One bound state of the coupled device.

    psi holds the L2-normalized eigenfunction on grid; psi_at_a and
    psi_at_b are its (normalized) boundary amplitudes, which fix the
    exact lead tails psi_at_a * e^{kappa_a (x-a)} and
    psi_at_b * e^{-kappa_b (x-b)}.  Sign convention: psi(a) > 0.
    """

    lam: float
    kappa_a: float
    kappa_b: float
    grid: np.ndarray
    psi: np.ndarray
    psi_at_a: float
    psi_at_b: float
    _device: DeviceProfile
    _couplings: DeltaCouplings
    _norm: float

    def evaluate(self, x) -> np.ndarray:
        """Eigenfunction samples at arbitrary sorted positions."""
        return _sample_real_solution(self._device, self.lam, self._couplings,
                                     np.asarray(x, dtype=float),
                                     (1.0, self.kappa_a / (2.0 * self._device.m_a)),
                                     self.kappa_a, -self.kappa_b) / self._norm


@dataclass(frozen=True)
class WellMode:
    """One Dirichlet eigenmode of the isolated interior (a, b).

    chi is L2-normalized on (a, b) and vanishes at both endpoints;
    sign convention: chi'(a) > 0.
    """

    xi: float
    grid: np.ndarray
    chi: np.ndarray
    _device: DeviceProfile
    _norm: float

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        inside = (x >= self._device.a) & (x <= self._device.b)
        if np.any(inside):
            u, _ = _propagate_real(self._device, self.xi, x[inside], (0.0, 1.0))
            out[inside] = u / self._norm
        return out


def _propagate_real(device, lam, x, state):
    """Real (u, w) samples at sorted interior points from state at a(+0)."""
    u = np.empty(x.shape)
    w = np.empty(x.shape)
    bp = device.breakpoints
    s = np.asarray(state, dtype=float)
    for i in range(device.segment_count):
        last = i == device.segment_count - 1
        sel = (x >= bp[i]) & ((x <= bp[i + 1]) if last else (x < bp[i + 1]))
        if np.any(sel):
            xi = x[sel] - bp[i]
            m, v = device.masses[i], device.potentials[i]
            d = lam - v
            u0, w0 = s
            if abs(d) < _BRANCH_EPS:
                u[sel] = u0 + 2.0 * m * xi * w0
                w[sel] = w0
            elif d > 0:
                k = math.sqrt(2.0 * m * d)
                u[sel] = np.cos(k * xi) * u0 + (2.0 * m / k) * np.sin(k * xi) * w0
                w[sel] = -(k / (2.0 * m)) * np.sin(k * xi) * u0 + np.cos(k * xi) * w0
            else:
                kap = math.sqrt(-2.0 * m * d)
                u[sel] = np.cosh(kap * xi) * u0 + (2.0 * m / kap) * np.sinh(kap * xi) * w0
                w[sel] = (kap / (2.0 * m)) * np.sinh(kap * xi) * u0 + np.cosh(kap * xi) * w0
        s = segment_matrix(device.masses[i], device.potentials[i], lam, bp[i + 1] - bp[i]) @ s
    return u, w


def _sample_real_solution(device, lam, couplings, x, state_a, kappa_a, neg_kappa_b):
    """Unnormalized bound-type solution on a grid spanning leads and interior."""
    u = np.empty(x.shape)
    left = x <= device.a
    right = x >= device.b
    inner = ~(left | right)
    u[left] = state_a[0] * np.exp(kappa_a * (x[left] - device.a))
    state = np.array([[1.0, 0.0], [couplings.g_a, 1.0]]) @ np.asarray(state_a, dtype=float)
    if np.any(inner):
        u[inner], _ = _propagate_real(device, lam, x[inner], state)
    t = interior_transfer(device, lam, couplings).mat
    u_b = float(t[0] @ np.asarray(state_a, dtype=float))
    u[right] = u_b * np.exp(neg_kappa_b * (x[right] - device.b))
    return u


def _segment_l2(state, m, v, lam, dx):
    """Exact integral of u^2 over one constant-coefficient segment."""
    u0, w0 = state
    d = lam - v
    if abs(d) < _BRANCH_EPS:
        c = 2.0 * m * w0
        return u0 * u0 * dx + u0 * c * dx * dx + c * c * dx**3 / 3.0
    if d > 0:
        k = math.sqrt(2.0 * m * d)
        aa, bb = u0, 2.0 * m * w0 / k
        s2 = math.sin(2.0 * k * dx) / (4.0 * k)
        return (aa * aa * (dx / 2.0 + s2) + bb * bb * (dx / 2.0 - s2)
                + aa * bb * math.sin(k * dx) ** 2 / k)
    kap = math.sqrt(-2.0 * m * d)
    aa, bb = u0, 2.0 * m * w0 / kap
    sh2 = math.sinh(2.0 * kap * dx) / (4.0 * kap)
    return (aa * aa * (dx / 2.0 + sh2) + bb * bb * (sh2 - dx / 2.0)
            + aa * bb * math.sinh(kap * dx) ** 2 / kap)


def _interior_l2(device, lam, state_at_a_plus):
    total = 0.0
    s = np.asarray(state_at_a_plus, dtype=float)
    bp = device.breakpoints
    for i in range(device.segment_count):
        total += _segment_l2(s, device.masses[i], device.potentials[i], lam, bp[i + 1] - bp[i])
        s = segment_matrix(device.masses[i], device.potentials[i], lam, bp[i + 1] - bp[i]) @ s
    return total


def find_bound_states(device: DeviceProfile, grid=None,
                      couplings: DeltaCouplings = _NO_COUPLING) -> list:
    """All bound states below v_b, sorted ascending.

    Parameters
    ----------
    device : DeviceProfile
    grid : array_like, optional
        Sample positions for the eigenfunctions.  Defaults to a grid
        covering the interior plus lead tails out to 30 decay lengths.
    couplings : DeltaCouplings
        Point barrier strengths (0 = fully coupled device).

    Returns
    -------
    list of BoundState (possibly empty).
    """
    v_b = device.v_b
    floor = min(v_b, min(device.potentials, default=v_b)) - 1.0
    if floor >= v_b:  # pragma: no cover - floor construction forbids this
        return []

    def matching(lam):
        qt_a = channel_wavenumber(device, "left", lam).q
        qt_b = channel_wavenumber(device, "right", lam).q
        t = interior_transfer(device, lam, couplings).mat
        state_b = t @ np.array([1.0, qt_a])
        return state_b[1] + qt_b * state_b[0]

    edge = v_b - 1.0e-9 * max(1.0, abs(v_b))
    lams = np.linspace(floor, edge, _SCAN_POINTS)
    vals = np.array([matching(l) for l in lams])
    roots = []
    for i in range(len(lams) - 1):
        if vals[i] == 0.0:
            roots.append(lams[i])
            continue
        if vals[i] * vals[i + 1] < 0.0:
            lo, hi = lams[i], lams[i + 1]
            flo = vals[i]
            while hi - lo > _BISECT_TOL:
                mid = 0.5 * (lo + hi)
                fm = matching(mid)
                if fm == 0.0:
                    lo = hi = mid
                elif flo * fm < 0.0:
                    hi = mid
                else:
                    lo, flo = mid, fm
            roots.append(0.5 * (lo + hi))
    if vals[-1] == 0.0:
        roots.append(lams[-1])

    states = []
    for lam in roots:
        kappa_a = channel_wavenumber(device, "left", lam).k
        kappa_b = channel_wavenumber(device, "right", lam).k
        state_a = np.array([1.0, kappa_a / (2.0 * device.m_a)])
        jump_a = np.array([[1.0, 0.0], [couplings.g_a, 1.0]])
        t = interior_transfer(device, lam, couplings).mat
        u_b = float(t[0] @ state_a)
        norm_sq = (1.0 / (2.0 * kappa_a)
                   + _interior_l2(device, lam, jump_a @ state_a)
                   + u_b * u_b / (2.0 * kappa_b))
        norm = math.sqrt(norm_sq)
        if grid is None:
            # tails out to e^{-30}; interior sampled densely on its own
            g = np.concatenate([
                np.linspace(device.a - 30.0 / kappa_a, device.a, 800, endpoint=False),
                np.linspace(device.a, device.b, 1601, endpoint=False),
                np.linspace(device.b, device.b + 30.0 / kappa_b, 801),
            ])
        else:
            g = np.asarray(grid, dtype=float)
        psi = _sample_real_solution(device, lam, couplings, g, state_a,
                                    kappa_a, -kappa_b) / norm
        states.append(BoundState(lam=float(lam), kappa_a=kappa_a, kappa_b=kappa_b,
                                 grid=g, psi=psi, psi_at_a=1.0 / norm,
                                 psi_at_b=u_b / norm, _device=device,
                                 _couplings=couplings, _norm=norm))
    return states


def closed_well_spectrum(device: DeviceProfile, k_max: int, grid=None) -> list:
    """First k_max Dirichlet eigenmodes of the isolated interior.

    Eigenvalues are the zeros of u(b; lam) for the solution with
    u(a) = 0, u'(a)/(2 M) = 1, scanned upward from the interior
    potential minimum and refined by bisection to 1e-12.
    """
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    length = device.b - device.a
    v_lo = min(device.potentials)
    v_hi = max(device.potentials)
    m_min = min(device.masses)

    def u_at_b(lam):
        return float(interior_transfer(device, lam).mat[0, 1])

    modes = []
    lam_lo = v_lo
    lam_hi = v_hi + math.pi**2 * (k_max + 1) ** 2 / (2.0 * m_min * length**2)
    for _ in range(6):
        n_scan = max(4000, 400 * k_max)
        lams = np.linspace(lam_lo, lam_hi, n_scan)
        vals = np.array([u_at_b(l) for l in lams])
        roots = []
        for i in range(len(lams) - 1):
            if vals[i] == 0.0:
                roots.append(lams[i])
            elif vals[i] * vals[i + 1] < 0.0:
                lo, hi = lams[i], lams[i + 1]
                flo = vals[i]
                while hi - lo > _BISECT_TOL * max(1.0, abs(hi)):
                    mid = 0.5 * (lo + hi)
                    fm = u_at_b(mid)
                    if fm == 0.0:
                        lo = hi = mid
                    elif flo * fm < 0.0:
                        hi = mid
                    else:
                        lo, flo = mid, fm
                roots.append(0.5 * (lo + hi))
            if len(roots) >= k_max:
                break
        if len(roots) >= k_max:
            break
        lam_hi = v_hi + 2.0 * (lam_hi - v_hi)  # pragma: no cover - generous first bound

    g = np.linspace(device.a, device.b, 801) if grid is None else np.asarray(grid, dtype=float)
    for xi in roots[:k_max]:
        norm = math.sqrt(_interior_l2(device, xi, (0.0, 1.0)))
        chi, _ = _propagate_real(device, xi, g, (0.0, 1.0))
        modes.append(WellMode(xi=float(xi), grid=g, chi=chi / norm,
                              _device=device, _norm=norm))
    return modes
