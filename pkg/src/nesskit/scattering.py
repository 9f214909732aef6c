"""Stationary scattering for the coupled device.

Solutions of H phi = lam phi are propagated through the interior with
exact per-segment 2x2 transfer matrices acting on the state vector
(u, w) = (phi, phi' / (2 M)).  Both components are continuous across
coefficient jumps; a delta coupling of strength g at a point p adds
g * phi(p) to w.  Matching the lead asymptotics

    phi~_a(x) = e^{i k_a (x-a)} + S_aa e^{-i k_a (x-a)}   (x <= a)
              = S_ba e^{i k_b (x-b)}                      (x >= b)
    phi~_b(x) = S_ab e^{-i k_a (x-a)}                     (x <= a)
              = e^{-i k_b (x-b)} + S_bb e^{i k_b (x-b)}   (x >= b)

gives the S-matrix in closed form from the transfer matrix T.  With
P  = i q_b T11 - T21,          Q  = i q_a (i q_b T12 - T22),
P' = i q_b T11 + T21,          Q' = i q_a (i q_b T12 + T22):

    S_aa = (P + Q)/(Q - P)     S_ba = -2 i q_a/(Q - P)
    S_ab = -2 i q_b/(Q - P)    S_bb = (Q' - P')/(Q - P)

Because det T = 1 exactly per segment, the identity
|Q - P|^2 - |P + Q|^2 = 4 q_a q_b holds to rounding, so flux unitarity
and reciprocity are satisfied to rounding as well.  In the one-channel
band v_b <= lam < v_a the left lead carries the decaying branch
e^{+kappa_a (x-a)} and |S_bb| = 1 holds exactly by construction.

Generalized eigenfunctions are delta-normalized in energy:
phi_p = phi~_p / sqrt(4 pi q_p).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .device import DeviceProfile, channel_wavenumber

__all__ = [
    "DeltaCouplings",
    "TransferMatrix",
    "ScatteringSolution",
    "interior_transfer",
    "scattering_matrix",
    "eigenfunctions",
    "transmission",
    "generalized_fourier",
]

# branch switch for the lam = v_segment linear limit
_BRANCH_EPS = 1.0e-12


@dataclass(frozen=True)
class DeltaCouplings:
    """Strengths of the point barriers at a and b.

    Each imposes the jump w(p+0) - w(p-0) = g_p * phi(p) on the state
    vector.  g = 0 is the fully coupled device; g -> infinity decouples
    it into Dirichlet blocks.
    """

    g_a: float = 0.0
    g_b: float = 0.0

    def __post_init__(self):
        if self.g_a < 0 or self.g_b < 0:
            raise ValueError(f"delta strengths must be >= 0, got g_a = {self.g_a}, g_b = {self.g_b}")


_NO_COUPLING = DeltaCouplings(0.0, 0.0)


@dataclass(frozen=True)
class TransferMatrix:
    """2x2 matrix taking (u, w) at a-0 to (u, w) at b+0 at energy lam.

    det = 1 identically: the propagated pair is Wronskian-compatible,
    and every segment factor and jump factor is unimodular.
    """

    mat: np.ndarray
    lam: float

    def det(self) -> float:
        m = self.mat
        return float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])


def segment_matrix(m: float, v: float, lam: float, dx: float) -> np.ndarray:
    """Exact propagator of (u, w) across a constant-coefficient segment.

    u solves u'' = 2 m (v - lam) u, and w = u' / (2 m).  The three
    branches (oscillatory, linear, hyperbolic) join continuously at
    lam = v.
    """
    d = lam - v
    if abs(d) < _BRANCH_EPS:
        return np.array([[1.0, 2.0 * m * dx], [0.0, 1.0]])
    if d > 0:
        k = math.sqrt(2.0 * m * d)
        c, s = math.cos(k * dx), math.sin(k * dx)
        return np.array([[c, (2.0 * m / k) * s], [-(k / (2.0 * m)) * s, c]])
    kap = math.sqrt(-2.0 * m * d)
    ch, sh = math.cosh(kap * dx), math.sinh(kap * dx)
    return np.array([[ch, (2.0 * m / kap) * sh], [(kap / (2.0 * m)) * sh, ch]])


def _jump_matrix(g: float) -> np.ndarray:
    return np.array([[1.0, 0.0], [g, 1.0]])


def interior_transfer(device: DeviceProfile, lam: float,
                      couplings: DeltaCouplings = _NO_COUPLING) -> TransferMatrix:
    """Transfer matrix of the interior, delta jumps at a and b included."""
    t = _jump_matrix(couplings.g_a)
    bp = device.breakpoints
    for i in range(device.segment_count):
        t = segment_matrix(device.masses[i], device.potentials[i], lam, bp[i + 1] - bp[i]) @ t
    t = _jump_matrix(couplings.g_b) @ t
    return TransferMatrix(mat=t, lam=float(lam))


@dataclass(frozen=True)
class ScatteringSolution:
    """Scattering data at one energy.

    S entries follow the asymptotic convention in the module docstring;
    in the one-channel band (v_b <= lam < v_a) only S_bb exists and the
    other entries are None.  q_a is the open-channel wavenumber factor
    when two_channel, else None (kappa_a holds the left decay rate).

    phi_a, phi_b are the delta-normalized eigenfunctions sampled on
    grid; dphi_a, dphi_b hold w = phi' / (2 M) on the same grid, so the
    probability flux is 2 Im(conj(phi) * w) without further mass
    factors.  Eigenfunction fields are None unless requested.
    """

    lam: float
    two_channel: bool
    S_aa: complex | None
    S_ab: complex | None
    S_ba: complex | None
    S_bb: complex
    q_a: float | None
    q_b: float
    kappa_a: float | None = None
    grid: np.ndarray | None = None
    phi_a: np.ndarray | None = None
    phi_b: np.ndarray | None = None
    dphi_a: np.ndarray | None = None
    dphi_b: np.ndarray | None = None

    def transmission(self) -> float:
        """Flux-normalized transmission (q_b / q_a) |S_ba|^2; 0 below v_a."""
        if not self.two_channel or self.q_a == 0.0 or self.q_b == 0.0:
            return 0.0
        return (self.q_b / self.q_a) * abs(self.S_ba) ** 2


def _smatrix_entries(device: DeviceProfile, lam: float, couplings: DeltaCouplings):
    """S entries plus boundary-state data for eigenfunction assembly."""
    t = interior_transfer(device, lam, couplings).mat
    ch_b = channel_wavenumber(device, "right", lam)
    if ch_b.evanescent:
        raise ValueError(f"lam = {lam} below v_b = {device.v_b}: no scattering channel is open")
    q_b = ch_b.q
    ch_a = channel_wavenumber(device, "left", lam)

    if not ch_a.evanescent:
        q_a = ch_a.q
        p = 1j * q_b * t[0, 0] - t[1, 0]
        q = 1j * q_a * (1j * q_b * t[0, 1] - t[1, 1])
        pp = 1j * q_b * t[0, 0] + t[1, 0]
        qp = 1j * q_a * (1j * q_b * t[0, 1] + t[1, 1])
        den = q - p
        s_aa = (p + q) / den
        s_ba = -2j * q_a / den
        s_ab = -2j * q_b / den
        s_bb = (qp - pp) / den
        return ScatteringSolution(lam=float(lam), two_channel=True, S_aa=s_aa, S_ab=s_ab,
                                  S_ba=s_ba, S_bb=s_bb, q_a=q_a, q_b=q_b), t

    # one channel: decaying branch e^{+kappa_a (x-a)} on the left
    kappa_a = ch_a.k
    qt = ch_a.q  # kappa_a / (2 m_a)
    a1 = t[0, 0] + t[0, 1] * qt
    b1 = t[1, 0] + t[1, 1] * qt
    s_bb = (b1 + 1j * q_b * a1) / (-b1 + 1j * q_b * a1)
    return ScatteringSolution(lam=float(lam), two_channel=False, S_aa=None, S_ab=None,
                              S_ba=None, S_bb=s_bb, q_a=None, q_b=q_b, kappa_a=kappa_a), t


def scattering_matrix(device: DeviceProfile, lam: float,
                      couplings: DeltaCouplings = _NO_COUPLING) -> ScatteringSolution:
    """S-matrix entries at energy lam >= v_b (no eigenfunction sampling)."""
    sol, _ = _smatrix_entries(device, lam, couplings)
    return sol


def _propagate_interior(device: DeviceProfile, lam: float, couplings: DeltaCouplings,
                        x: np.ndarray, state_a):
    """Sample (u, w) at interior points x from the state at a-0.

    Points must be sorted ascending and lie in (a, b).  Exact partial
    segment propagation, vectorized per segment.
    """
    u = np.empty(x.shape, dtype=complex)
    w = np.empty(x.shape, dtype=complex)
    bp = device.breakpoints
    state = _jump_matrix(couplings.g_a) @ np.asarray(state_a, dtype=complex)
    for i in range(device.segment_count):
        sel = (x >= bp[i]) & (x < bp[i + 1]) if i < device.segment_count - 1 else (x >= bp[i])
        if np.any(sel):
            xi = x[sel] - bp[i]
            m, v = device.masses[i], device.potentials[i]
            d = lam - v
            u0, w0 = state
            if abs(d) < _BRANCH_EPS:
                u[sel] = u0 + 2.0 * m * xi * w0
                w[sel] = w0
            elif d > 0:
                k = math.sqrt(2.0 * m * d)
                c, s = np.cos(k * xi), np.sin(k * xi)
                u[sel] = c * u0 + (2.0 * m / k) * s * w0
                w[sel] = -(k / (2.0 * m)) * s * u0 + c * w0
            else:
                kap = math.sqrt(-2.0 * m * d)
                ch, sh = np.cosh(kap * xi), np.sinh(kap * xi)
                u[sel] = ch * u0 + (2.0 * m / kap) * sh * w0
                w[sel] = (kap / (2.0 * m)) * sh * u0 + ch * w0
        state = segment_matrix(device.masses[i], device.potentials[i], lam,
                               bp[i + 1] - bp[i]) @ state
    return u, w


def _sample_channel(device, lam, couplings, grid, sol, t, incident):
    """Delta-normalized (phi, w) samples on grid for one incident channel."""
    a, b = device.a, device.b
    m_a, m_b = device.m_a, device.m_b
    q_b = sol.q_b
    k_b = 2.0 * m_b * q_b
    left = grid <= a
    right = grid >= b
    inner = ~(left | right)
    u = np.empty(grid.shape, dtype=complex)
    w = np.empty(grid.shape, dtype=complex)

    if sol.two_channel:
        q_a = sol.q_a
        k_a = 2.0 * m_a * q_a
        if incident == "a":
            norm = 1.0 / math.sqrt(4.0 * math.pi * q_a)
            xi = grid[left] - a
            u[left] = np.exp(1j * k_a * xi) + sol.S_aa * np.exp(-1j * k_a * xi)
            w[left] = 1j * q_a * (np.exp(1j * k_a * xi) - sol.S_aa * np.exp(-1j * k_a * xi))
            xb = grid[right] - b
            u[right] = sol.S_ba * np.exp(1j * k_b * xb)
            w[right] = 1j * q_b * u[right]
            state_a = (1.0 + sol.S_aa, 1j * q_a * (1.0 - sol.S_aa))
        else:
            norm = 1.0 / math.sqrt(4.0 * math.pi * q_b)
            xi = grid[left] - a
            u[left] = sol.S_ab * np.exp(-1j * k_a * xi)
            w[left] = -1j * q_a * u[left]
            xb = grid[right] - b
            u[right] = np.exp(-1j * k_b * xb) + sol.S_bb * np.exp(1j * k_b * xb)
            w[right] = 1j * q_b * (-np.exp(-1j * k_b * xb) + sol.S_bb * np.exp(1j * k_b * xb))
            state_a = (sol.S_ab, -1j * q_a * sol.S_ab)
    else:
        if incident == "a":
            raise ValueError(f"channel a is closed at lam = {lam}")
        norm = 1.0 / math.sqrt(4.0 * math.pi * q_b)
        qt = sol.kappa_a / (2.0 * m_a)
        # amplitude of the left evanescent branch from whichever matched
        # component is better conditioned
        a1 = t[0, 0] + t[0, 1] * qt
        b1 = t[1, 0] + t[1, 1] * qt
        if abs(a1) >= abs(b1):
            c_left = (1.0 + sol.S_bb) / a1
        else:
            c_left = 1j * q_b * (sol.S_bb - 1.0) / b1
        xi = grid[left] - a
        u[left] = c_left * np.exp(sol.kappa_a * xi)
        w[left] = qt * u[left]
        xb = grid[right] - b
        u[right] = np.exp(-1j * k_b * xb) + sol.S_bb * np.exp(1j * k_b * xb)
        w[right] = 1j * q_b * (-np.exp(-1j * k_b * xb) + sol.S_bb * np.exp(1j * k_b * xb))
        state_a = (c_left, qt * c_left)

    if np.any(inner):
        u[inner], w[inner] = _propagate_interior(device, lam, couplings, grid[inner], state_a)
    return norm * u, norm * w


def eigenfunctions(device: DeviceProfile, lam: float, couplings: DeltaCouplings = _NO_COUPLING,
                   grid=None) -> ScatteringSolution:
    """Scattering solution with delta-normalized eigenfunctions on grid.

    Parameters
    ----------
    device : DeviceProfile
    lam : float
        Energy, lam >= v_b.
    couplings : DeltaCouplings
        Point barrier strengths at a and b (0 = fully coupled).
    grid : array_like
        Sorted sample positions; may span leads and interior.

    Returns
    -------
    ScatteringSolution with phi_b (and phi_a when the left channel is
    open) plus the matching w = phi' / (2 M) samples.
    """
    grid = np.asarray(grid, dtype=float)
    sol, t = _smatrix_entries(device, lam, couplings)
    phi_b, dphi_b = _sample_channel(device, lam, couplings, grid, sol, t, "b")
    phi_a = dphi_a = None
    if sol.two_channel:
        phi_a, dphi_a = _sample_channel(device, lam, couplings, grid, sol, t, "a")
    return ScatteringSolution(lam=sol.lam, two_channel=sol.two_channel, S_aa=sol.S_aa,
                              S_ab=sol.S_ab, S_ba=sol.S_ba, S_bb=sol.S_bb, q_a=sol.q_a,
                              q_b=sol.q_b, kappa_a=sol.kappa_a, grid=grid,
                              phi_a=phi_a, phi_b=phi_b, dphi_a=dphi_a, dphi_b=dphi_b)


def transmission(device: DeviceProfile, lam: float) -> float:
    """Transmission probability T(lam) of the fully coupled device.

    T = (q_b / q_a) |S_ba|^2 = 4 q_a q_b / |Q - P|^2 at zero delta
    coupling; T = 0 for lam < v_a (closed channel) and at the threshold
    itself (measure-zero convention; quadrature nodes never land there).
    """
    if lam < device.v_a:
        return 0.0
    ch_a = channel_wavenumber(device, "left", lam)
    ch_b = channel_wavenumber(device, "right", lam)
    if ch_a.q == 0.0 or ch_b.q == 0.0:
        return 0.0
    t = interior_transfer(device, lam).mat
    p = 1j * ch_b.q * t[0, 0] - t[1, 0]
    q = 1j * ch_a.q * (1j * ch_b.q * t[0, 1] - t[1, 1])
    return 4.0 * ch_a.q * ch_b.q / abs(q - p) ** 2


def generalized_fourier(device: DeviceProfile, grid, f, spectral,
                        couplings: DeltaCouplings = _NO_COUPLING):
    """Channelwise overlap coefficients of f against conj(phi_p).

    Parameters
    ----------
    grid : array_like
        Sorted positions carrying the samples of f; the support of f
        must lie inside the grid.
    f : array_like
        Complex samples of the function to transform.
    spectral : SpectralGrid
        Energy nodes at which coefficients are evaluated.

    Returns
    -------
    dict with complex coefficient arrays under keys "b" and "a"
    (channel a entries are 0 where the channel is closed).
    """
    grid = np.asarray(grid, dtype=float)
    f = np.asarray(f, dtype=complex)
    if f.shape != grid.shape:
        raise ValueError(f"f has shape {f.shape}, grid has shape {grid.shape}")
    fmax = np.max(np.abs(f))
    if fmax > 0 and max(abs(f[0]), abs(f[-1])) > 1.0e-12 * fmax:
        raise ValueError("support of f reaches the edge of the sampling grid")
    coeff_b = np.zeros(spectral.lam.shape, dtype=complex)
    coeff_a = np.zeros(spectral.lam.shape, dtype=complex)
    for i, lam in enumerate(spectral.lam):
        sol = eigenfunctions(device, lam, couplings, grid)
        coeff_b[i] = np.trapezoid(f * np.conj(sol.phi_b), grid)
        if sol.two_channel:
            coeff_a[i] = np.trapezoid(f * np.conj(sol.phi_a), grid)
    return {"b": coeff_b, "a": coeff_a}
