"""Steady-state distribution functions, carrier density, and current.

Continuum states are labeled by energy lam and incident channel:
channel b (from the right lead) exists on [v_b, lambda_max], channel a
(from the left lead) opens at v_a.  A distribution assigns each node
an occupation per open channel, plus point weights on the discrete
part of the spectrum.

Two distribution kinds are supported.  "decoupled" describes the
system before the point barriers are removed: the continuum modes are
lead modes that vanish on (a, b) and the point part sits on the
isolated-well eigenvalues.  "ness" describes the steady state of the
coupled device: same continuum occupations carried over to the coupled
scattering states, point part on the bound states.  Bound-state
weights for the coupled steady state come from the sudden-removal
expansion of each bound state over the decoupled basis, or from values
measured by time evolution.

Quadrature: Gauss-Legendre panels in s after the substitution
lam = v_p + s^2 on each band (p = b below v_a, p = a above), which
removes the 1/sqrt(q_p) normalization singularity at the band edge
exactly.  Node weights integrate dlam, so plain weighted sums below
are integrals over energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import simpson

from .device import DeviceProfile, ReservoirState, SpectralParams, SystemConfig
from .errors import ConfigError
from .scattering import DeltaCouplings, eigenfunctions, transmission
from .spectrum import closed_well_spectrum, find_bound_states

__all__ = [
    "SpectralGrid", "DistributionFunction", "CarrierDensity",
    "occupation", "distribution_D", "distribution_ness",
    "carrier_density", "current_density", "landauer_current",
    "current_truncation_bound",
]

_NO_COUPLING = DeltaCouplings(0.0, 0.0)


@dataclass(frozen=True)
class SpectralGrid:
    """Energy quadrature nodes on [v_b, lambda_max].

    Nodes never coincide with v_a or v_b (Gauss nodes are interior);
    two_channel marks nodes at which the left channel is open.  The
    weights integrate dlam: sum(w) = lambda_max - v_b to rounding.
    """

    lam: np.ndarray
    w: np.ndarray
    two_channel: np.ndarray
    v_a: float
    v_b: float
    lambda_max: float

    def __post_init__(self):
        if self.lam.size < 64:
            raise ValueError(f"need at least 64 quadrature nodes, got {self.lam.size}")
        if np.any(self.w <= 0.0):
            raise ValueError("quadrature weights must be positive")

    @property
    def multiplicity(self) -> np.ndarray:
        return np.where(self.two_channel, 2, 1)

    @classmethod
    def build(cls, device: DeviceProfile, spectral: SpectralParams) -> "SpectralGrid":
        xs, ws = leggauss(spectral.nodes_per_panel)
        xs = (xs + 1.0) / 2.0  # panel-local nodes on (0, 1)
        ws = ws / 2.0

        def band(v_edge, s_max, n_panels):
            # lam = v_edge + s^2; the Jacobian 2s is linear, so the
            # panel sums telescope to the exact band length.
            edges = np.linspace(0.0, s_max, n_panels + 1)
            s = (edges[:-1, None] + np.diff(edges)[:, None] * xs[None, :]).ravel()
            w_s = (np.diff(edges)[:, None] * ws[None, :]).ravel()
            return v_edge + s * s, 2.0 * s * w_s

        lam_parts, w_parts, flags = [], [], []
        if device.v_a > device.v_b:
            lam1, w1 = band(device.v_b, math.sqrt(device.v_a - device.v_b),
                            spectral.panels_one_channel)
            lam_parts.append(lam1)
            w_parts.append(w1)
            flags.append(np.zeros(lam1.shape, dtype=bool))
        lam2, w2 = band(device.v_a, math.sqrt(spectral.lambda_max - device.v_a),
                        spectral.panels_two_channel)
        lam_parts.append(lam2)
        w_parts.append(w2)
        flags.append(np.ones(lam2.shape, dtype=bool))
        return cls(lam=np.concatenate(lam_parts), w=np.concatenate(w_parts),
                   two_channel=np.concatenate(flags), v_a=device.v_a,
                   v_b=device.v_b, lambda_max=spectral.lambda_max)


def occupation(lam, r: ReservoirState):
    """Reservoir occupation c * ln(1 + e^{-beta (lam - mu)}).

    logaddexp evaluates the large-|argument| branches without overflow
    or underflow to zero on the filled side.
    """
    return r.c * np.logaddexp(0.0, -r.beta * (np.asarray(lam, dtype=float) - r.mu))


@dataclass(frozen=True)
class DistributionFunction:
    """Occupations on the continuum grid plus point weights.

    occ_b and occ_a give the diagonal occupation per incident channel
    at each grid node (occ_a is zero where the channel is closed).
    point_energies / point_weights hold the discrete part: well-mode
    eigenvalues for kind "decoupled", bound-state energies for "ness".
    """

    kind: str
    grid: SpectralGrid
    occ_b: np.ndarray
    occ_a: np.ndarray
    point_energies: np.ndarray
    point_weights: np.ndarray

    def __post_init__(self):
        if self.kind not in ("decoupled", "ness"):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        for arr in (self.occ_b, self.occ_a, self.point_weights):
            if arr.size and (not np.all(np.isfinite(arr)) or np.min(arr) < 0.0):
                raise ValueError("occupations must be finite and non-negative")
        if np.any(self.occ_a[~self.grid.two_channel] != 0.0):
            raise ValueError("occ_a must vanish on the one-channel band")


def _well_point_part(config: SystemConfig, k_start: int = 8, k_cap: int = 512):
    """Well-mode energies and occupations, extended until negligible."""
    res = config.reservoir_well
    k = k_start
    while True:
        modes = closed_well_spectrum(config.device, k_max=k)
        weights = occupation(np.array([m.xi for m in modes]), res)
        if weights[-1] <= 1.0e-15 * (1.0 + weights.max()) or k >= k_cap:
            keep = weights > 1.0e-15 * (1.0 + weights.max())
            keep[0] = True
            return [m for m, kp in zip(modes, keep) if kp], weights[keep]
        k *= 2


def distribution_D(config: SystemConfig) -> DistributionFunction:
    """Distribution of the decoupled steady state.

    Lead-b occupation on the whole grid, lead-a occupation where that
    channel is open, well occupations on the isolated-well levels.
    """
    grid = SpectralGrid.build(config.device, config.spectral)
    occ_b = occupation(grid.lam, config.reservoir_right)
    occ_a = np.where(grid.two_channel, occupation(grid.lam, config.reservoir_left), 0.0)
    modes, weights = _well_point_part(config)
    return DistributionFunction(kind="decoupled", grid=grid, occ_b=occ_b,
                                occ_a=occ_a,
                                point_energies=np.array([m.xi for m in modes]),
                                point_weights=weights)


def _lead_overlap_sq(state, device: DeviceProfile, side: str, lam: np.ndarray):
    """|<lead mode, bound state>|^2 = psi(p)^2 q_p / (pi (lam - lam_j)^2).

    Closed form from the exponential tail against the sine lead mode;
    the denominator is (k_p^2 + kappa_p^2)^2 / (2 m_p)^2 = ...
    (lam - lam_j)^2, which never vanishes since lam_j < v_b <= lam.
    """
    if side in ("left", "a"):
        amp, m, v = state.psi_at_a, device.m_a, device.v_a
    else:
        amp, m, v = state.psi_at_b, device.m_b, device.v_b
    q = np.sqrt((lam - v) / (2.0 * m))
    return amp * amp * q / (math.pi * (lam - state.lam) ** 2)


def _sudden_weights(config: SystemConfig, states) -> np.ndarray:
    """Sudden-removal weight of each bound state.

    Expands the bound state over the decoupled basis and sums the
    decoupled occupations against the squared overlaps: well modes by
    quadrature on (a, b), lead continua in closed form per node.
    """
    device = config.device
    grid = SpectralGrid.build(device, config.spectral)
    occ_b = occupation(grid.lam, config.reservoir_right)
    occ_a = np.where(grid.two_channel, occupation(grid.lam, config.reservoir_left), 0.0)
    modes, mode_occ = _well_point_part(config)
    x = np.linspace(device.a, device.b, 2001)
    chi = np.array([m.evaluate(x) for m in modes])
    weights = np.empty(len(states))
    for j, s in enumerate(states):
        psi = s.evaluate(x)
        overlaps = simpson(chi * psi[None, :], x=x, axis=-1)
        w = float(np.sum(mode_occ * overlaps**2))
        w += float(np.sum(grid.w * occ_b * _lead_overlap_sq(s, device, "right", grid.lam)))
        sel = grid.two_channel
        w += float(np.sum(grid.w[sel] * occ_a[sel]
                          * _lead_overlap_sq(s, device, "left", grid.lam[sel])))
        weights[j] = w
    return weights


def distribution_ness(config: SystemConfig, bound_weights="sudden") -> DistributionFunction:
    """Distribution of the coupled steady state.

    The continuum part carries the decoupled reservoir occupations over
    to the scattering states unchanged.  Bound-state weights come from
    bound_weights: "sudden" for the sudden-removal expansion, or an
    explicit sequence of measured values.
    """
    grid = SpectralGrid.build(config.device, config.spectral)
    occ_b = occupation(grid.lam, config.reservoir_right)
    occ_a = np.where(grid.two_channel, occupation(grid.lam, config.reservoir_left), 0.0)
    states = find_bound_states(config.device)
    energies = np.array([s.lam for s in states])
    if not states:
        weights = np.zeros(0)
    elif isinstance(bound_weights, str) and bound_weights == "sudden":
        weights = _sudden_weights(config, states)
    elif bound_weights is None:
        raise ConfigError(
            f"device has {len(states)} bound state(s); bound weights are required")
    else:
        weights = np.asarray(bound_weights, dtype=float)
        if weights.shape != energies.shape:
            raise ConfigError(
                f"expected {len(states)} bound weight(s), got {weights.size}")
    return DistributionFunction(kind="ness", grid=grid, occ_b=occ_b, occ_a=occ_a,
                                point_energies=energies, point_weights=weights)


@dataclass(frozen=True)
class CarrierDensity:
    """Sampled density with its bound/continuum split."""

    x: np.ndarray
    u: np.ndarray
    u_bound: np.ndarray
    u_continuum: np.ndarray


def _point_states(config: SystemConfig, dist: DistributionFunction):
    if dist.kind == "ness":
        states = find_bound_states(config.device)
    else:
        states, _ = _well_point_part(config)
    if len(states) != dist.point_energies.size:
        raise ConfigError("distribution does not match this device's point spectrum")
    return states


def carrier_density(config: SystemConfig, dist: DistributionFunction,
                    grid) -> CarrierDensity:
    """Density u(x) = point part + integral of occupied |phi_p|^2.

    For the decoupled distribution the continuum modes vanish on (a, b),
    so only the well levels contribute there; positions must then lie
    inside [a, b].
    """
    x = np.asarray(grid, dtype=float)
    device = config.device
    u_bound = np.zeros(x.shape)
    for s, w in zip(_point_states(config, dist), dist.point_weights):
        psi = s.evaluate(x)
        u_bound += w * psi * psi
    u_cont = np.zeros(x.shape)
    if dist.kind == "ness":
        for i, lam in enumerate(dist.grid.lam):
            sol = eigenfunctions(device, float(lam), _NO_COUPLING, x)
            u_cont += dist.grid.w[i] * dist.occ_b[i] * np.abs(sol.phi_b) ** 2
            if sol.two_channel:
                u_cont += dist.grid.w[i] * dist.occ_a[i] * np.abs(sol.phi_a) ** 2
    elif np.any((x < device.a) | (x > device.b)):
        raise ValueError("decoupled density is only defined on [a, b]")
    return CarrierDensity(x=x, u=u_bound + u_cont, u_bound=u_bound,
                          u_continuum=u_cont)


def current_density(config: SystemConfig, dist: DistributionFunction,
                    x_points) -> np.ndarray:
    """Steady current density at each position.

    Per mode the flux is (1/M) Im(conj(phi) phi') = 2 Im(conj(phi) w)
    with w = phi'/(2M) taken from the analytic segment solution; the
    occupied sum over the spectral grid is then x-independent up to
    quadrature error.  Decoupled distributions carry no current.
    """
    x = np.asarray(x_points, dtype=float)
    j = np.zeros(x.shape)
    if dist.kind == "decoupled":
        return j
    for i, lam in enumerate(dist.grid.lam):
        sol = eigenfunctions(config.device, float(lam), _NO_COUPLING, x)
        j += (dist.grid.w[i] * dist.occ_b[i]
              * 2.0 * np.imag(np.conj(sol.phi_b) * sol.dphi_b))
        if sol.two_channel:
            j += (dist.grid.w[i] * dist.occ_a[i]
                  * 2.0 * np.imag(np.conj(sol.phi_a) * sol.dphi_a))
    return j


def landauer_current(config: SystemConfig) -> float:
    """Transmission-integrated current (1/2pi) int T (f_a - f_b) dlam.

    Integrates over the two-channel band only; the one-channel band
    cannot carry current.
    """
    grid = SpectralGrid.build(config.device, config.spectral)
    sel = grid.two_channel
    lam = grid.lam[sel]
    t_vals = np.array([transmission(config.device, float(l)) for l in lam])
    diff = occupation(lam, config.reservoir_left) - occupation(lam, config.reservoir_right)
    return float(np.sum(grid.w[sel] * t_vals * diff) / (2.0 * math.pi))


def current_truncation_bound(config: SystemConfig) -> float:
    """Upper bound on the current missed above lambda_max.

    Occupations fall off like c e^{-beta (lam - mu)} and T <= 1, so the
    discarded tail is below sum_p c_p e^{-beta_p (lambda_max - mu_p)} /
    (2 pi beta_p).
    """
    lam_max = config.spectral.lambda_max
    total = 0.0
    for r in (config.reservoir_left, config.reservoir_right):
        total += r.c * math.exp(-r.beta * (lam_max - r.mu)) / (2.0 * math.pi * r.beta)
    return total
