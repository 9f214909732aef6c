"""Finite-box time evolution of the coupling process.

The line is truncated to [x_min, x_max] with Dirichlet ends and
discretized by the conservative three-point stencil; the two point
barriers at a and b enter as on-site g(t)/h terms, the grid version of
the delta jump condition.  The decoupled initial state is an ensemble
of Dirichlet block eigenmodes weighted by their reservoir occupations,
evolved member by member under Crank-Nicolson with the coupling
evaluated at the step midpoint.

Link masses and site potentials are cell averages of the piecewise
coefficients, which keeps the stencil consistent when a coefficient
jump lands on or between grid nodes.

The box is trustworthy only until the fastest occupied mode can reach
an end wall and return; evolve_ensemble truncates the requested window
to 0.8 * (shortest device-to-wall distance) / v_max and says so in the
trace metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import eigh_tridiagonal, solve_banded

from .device import CouplingSchedule, SystemConfig
from .errors import ConfigError, ResolutionError, WindowError
from .scattering import eigenfunctions
from .spectrum import find_bound_states

__all__ = [
    "BoxDiscretization", "EnsembleState", "TransientTrace", "Observable",
    "MollerResult", "AlphaSweepReport", "build_box", "decoupled_modes",
    "cn_step", "evolve_ensemble", "current_observable",
    "projection_observable", "region_charge_observable", "alpha_sweep",
    "moller_probe",
]

# group velocities of modes below this share of the peak weight do not
# constrain the reflection window; their contamination is bounded by
# the same share
_WINDOW_WEIGHT_FLOOR = 1.0e-4
_MODE_WEIGHT_FLOOR = 1.0e-8


@dataclass(frozen=True)
class BoxDiscretization:
    """Dirichlet box grid and stencil data.

    x holds the interior nodes (the unknowns); m_link the cell-averaged
    mass per link including the two wall links; v_site the cell-averaged
    potential per interior node.  n_a and n_b index the interior nodes
    nearest a and b (snap distances < h/2 recorded).
    """

    h: float
    x: np.ndarray
    m_link: np.ndarray
    v_site: np.ndarray
    n_a: int
    n_b: int
    snap_a: float
    snap_b: float
    x_left_wall: float
    x_right_wall: float
    k_max: float
    schedule: CouplingSchedule

    @property
    def n_sites(self) -> int:
        return self.x.size

    def hamiltonian(self, g: float):
        """Tridiagonal (diagonal, off-diagonal) at coupling strength g."""
        inv = 1.0 / self.m_link
        d = (inv[:-1] + inv[1:]) / (2.0 * self.h * self.h) + self.v_site
        if g != 0.0:
            d = d.copy()
            d[self.n_a] += g / self.h
            d[self.n_b] += g / self.h
        e = -inv[1:-1] / (2.0 * self.h * self.h)
        return d, e

    def h_norm(self, psi: np.ndarray):
        return np.sqrt(self.h * np.sum(np.abs(psi) ** 2, axis=0))

    def link_flux(self, psi: np.ndarray, link: int):
        """Probability flux through one global link (1..n_sites-1).

        J = Im(conj(psi_n) psi_{n+1}) / (m_link h) per member column.
        """
        return (np.imag(np.conj(psi[link - 1]) * psi[link])
                / (self.m_link[link] * self.h))


def build_box(config: SystemConfig) -> BoxDiscretization:
    """Assemble the box discretization for this configuration.

    The wall at x_max is moved by less than h/2 so the span is an
    integer number of steps.  Resolution precondition: the fastest
    occupied wavenumber k_max = sqrt(2 max(m) (lambda_max - min v))
    must satisfy k_max h < 0.5.
    """
    dev = config.device
    box = config.box
    h = box.h
    n_cells = int(round((box.x_max - box.x_min) / h))
    x_right = box.x_min + n_cells * h

    all_m = (dev.m_a, dev.m_b, *dev.masses)
    all_v = (dev.v_a, dev.v_b, *dev.potentials)
    k_max = math.sqrt(2.0 * max(all_m) * (config.spectral.lambda_max - min(all_v)))
    if k_max * h >= 0.5:
        raise ResolutionError(
            f"grid step h = {h} cannot resolve k_max = {k_max:.4g}; "
            f"need h < {0.5 / k_max:.4g}")

    nodes = box.x_min + h * np.arange(n_cells + 1)
    x = nodes[1:-1]
    n_a_node = int(round((dev.a - box.x_min) / h))
    n_b_node = int(round((dev.b - box.x_min) / h))
    if not (1 <= n_a_node and n_b_node <= n_cells - 1):
        raise ConfigError("device interval must lie strictly inside the box")
    if n_b_node - n_a_node < 2:
        raise ResolutionError(
            f"h = {h} leaves no grid site strictly between a and b; "
            f"need h < {(dev.b - dev.a) / 2.0:.4g}")

    knots = np.array([box.x_min, *dev.breakpoints, x_right])
    m_vals = np.array([dev.m_a, *dev.masses, dev.m_b])
    v_vals = np.array([dev.v_a, *dev.potentials, dev.v_b])
    cum_m = np.concatenate([[0.0], np.cumsum(m_vals * np.diff(knots))])
    cum_v = np.concatenate([[0.0], np.cumsum(v_vals * np.diff(knots))])

    def cell_avg(cum, lo, hi):
        return (np.interp(hi, knots, cum) - np.interp(lo, knots, cum)) / (hi - lo)

    m_link = cell_avg(cum_m, nodes[:-1], nodes[1:])
    v_site = cell_avg(cum_v, x - 0.5 * h, x + 0.5 * h)

    return BoxDiscretization(
        h=h, x=x, m_link=m_link, v_site=v_site,
        n_a=n_a_node - 1, n_b=n_b_node - 1,
        snap_a=abs(nodes[n_a_node] - dev.a), snap_b=abs(nodes[n_b_node] - dev.b),
        x_left_wall=box.x_min, x_right_wall=x_right,
        k_max=k_max, schedule=config.schedule)


@dataclass(frozen=True)
class EnsembleState:
    """Weighted pure-state ensemble on the box grid.

    psis has one column per member, each of unit grid norm; weights are
    the reservoir occupations of the originating block eigenmode.
    dropped_weight reports the floored mass plus an upper bound on the
    never-computed tail above the eigensolve cap.
    """

    weights: np.ndarray
    psis: np.ndarray
    energies: np.ndarray
    blocks: tuple
    velocities: np.ndarray
    dropped_weight: float

    @property
    def n_members(self) -> int:
        return self.weights.size


def _block_ranges(box: BoxDiscretization):
    return (("lead_a", 0, box.n_a), ("well", box.n_a + 1, box.n_b),
            ("lead_b", box.n_b + 1, box.n_sites))


def decoupled_modes(box: BoxDiscretization, config: SystemConfig) -> EnsembleState:
    """Eigenmodes of the three Dirichlet blocks with their occupations.

    Modes are computed up to max(mu) + 40/beta_min, where occupations
    are ~e^-40 of the filled scale; weights below 1e-8 of the largest
    are dropped and accounted in dropped_weight.

    Mode signs are fixed for reproducibility: in each lead block the
    sample adjacent to the device is tied to the sign of the continuum
    lead mode sin(k (x - p)) there, and well modes start with positive
    slope at a.
    """
    from .ness import occupation

    reservoirs = {"lead_a": config.reservoir_left, "well": config.reservoir_well,
                  "lead_b": config.reservoir_right}
    dev = config.device
    cap = max(r.mu for r in reservoirs.values()) + 40.0 / config.beta_min()

    d0, e0 = box.hamiltonian(0.0)
    cols, weights, energies, blocks, velocities = [], [], [], [], []
    v_escape = min(dev.v_a, dev.v_b)
    m_escape = min(dev.m_a, dev.m_b)
    for name, lo, hi in _block_ranges(box):
        if hi <= lo:
            continue
        d, e = d0[lo:hi], e0[lo:hi - 1]
        vl = float(np.min(d) - 2.0 * np.max(np.abs(e0)) - 1.0)
        if cap <= vl:
            continue
        vals, vecs = eigh_tridiagonal(d, e, select="v", select_range=(vl, cap))
        occ = occupation(vals, reservoirs[name])
        for i in range(vals.size):
            psi = np.zeros(box.n_sites)
            psi[lo:hi] = vecs[:, i] / math.sqrt(box.h)
            if name == "lead_b" and psi[box.n_b + 1] < 0.0:
                psi = -psi
            elif name == "lead_a" and psi[box.n_a - 1] > 0.0:
                psi = -psi
            elif name == "well" and psi[box.n_a + 1] < 0.0:
                psi = -psi
            cols.append(psi)
            weights.append(occ[i])
            energies.append(vals[i])
            blocks.append(name)
            velocities.append(math.sqrt(2.0 * max(vals[i] - v_escape, 0.0) / m_escape))

    if not cols:
        raise ConfigError("no decoupled modes below the occupation cap; "
                          "check the reservoir temperatures")
    weights = np.array(weights)
    w_floor = _MODE_WEIGHT_FLOOR * weights.max()
    keep = weights >= w_floor
    floored = float(np.sum(weights[~keep]))

    # tail above the eigensolve cap, bounded by occupation decay times
    # the box density of states at the cap
    tail = 0.0
    for name, lo, hi in _block_ranges(box):
        if name == "well" or hi <= lo:
            continue
        r = reservoirs[name]
        m_lead = dev.m_a if name == "lead_a" else dev.m_b
        v_lead = dev.v_a if name == "lead_a" else dev.v_b
        k_cap = math.sqrt(2.0 * m_lead * max(cap - v_lead, 1.0e-12))
        dos = (hi - lo) * box.h * m_lead / (math.pi * k_cap)
        tail += float(occupation(cap, r)) * dos / r.beta

    return EnsembleState(
        weights=weights[keep],
        psis=np.array(cols).T[:, keep].astype(complex),
        energies=np.array(energies)[keep],
        blocks=tuple(b for b, k in zip(blocks, keep) if k),
        velocities=np.array(velocities)[keep],
        dropped_weight=floored + tail)


def cn_step(box: BoxDiscretization, psi: np.ndarray, t: float, dt: float,
            g: float | None = None) -> np.ndarray:
    """One Crank-Nicolson step from t to t + dt.

    The coupling is evaluated at the step midpoint (g defaults to
    box.schedule.g(t + dt/2)); the Cayley form preserves every member
    norm to rounding.  psi may hold one column per ensemble member.
    """
    if g is None:
        g = float(box.schedule.g(t + 0.5 * dt))
    d, e = box.hamiltonian(g)
    z = 0.5j * dt
    cols = psi.reshape(box.n_sites, -1)
    rhs = (1.0 - z * d)[:, None] * cols
    rhs[:-1] -= z * e[:, None] * cols[1:]
    rhs[1:] -= z * e[:, None] * cols[:-1]
    ab = np.zeros((3, box.n_sites), dtype=complex)
    ab[0, 1:] = z * e
    ab[1] = 1.0 + z * d
    ab[2, :-1] = z * e
    out = solve_banded((1, 1), ab, rhs)
    return out.reshape(psi.shape)


class Observable:
    """Named ensemble observable Tr(rho O) = sum_k w_k <psi_k, O psi_k>."""

    def __init__(self, name: str, member_values):
        self.name = name
        self._member_values = member_values

    def measure(self, psis: np.ndarray, weights: np.ndarray) -> float:
        return float(np.real(np.sum(weights * self._member_values(psis))))


def current_observable(box: BoxDiscretization, variant: str = "smoothed",
                       x_c: float | None = None, ramp_width: int = 10) -> Observable:
    """Current observable in the right lead.

    variant "point": probability flux through the link nearest x_c.
    variant "smoothed": expectation of i[H, phi_c] with phi_c a
    raised-cosine 0 -> 1 ramp of width ramp_width * h centered at x_c,
    which reduces to a Delta-phi-weighted average of link fluxes.

    x_c defaults to sit just past the device: the steady region spreads
    ballistically from the coupling points, so a probe close to b
    settles long before one in the middle of the lead.
    """
    if variant not in ("point", "smoothed"):
        raise ValueError(f"unknown current variant {variant!r}")
    x_b = box.x[box.n_b]
    if x_c is None:
        x_c = x_b + min(2.0, 0.25 * (box.x_right_wall - x_b))
    half = (ramp_width // 2 + 1) if variant == "smoothed" else 1
    center = int(round((x_c - box.x_left_wall) / box.h)) - 1  # interior index
    if not (box.n_b + 1 < center - half and center + half < box.n_sites - 1):
        raise ValueError(
            f"current support around x = {x_c} must lie inside the right "
            f"lead, away from the device and the wall")

    if variant == "point":
        link = center + 1  # global link between interior center and center+1
        scale = 1.0 / (box.m_link[link] * box.h)

        def member_values(psis):
            return scale * np.imag(np.conj(psis[center]) * psis[center + 1])

        return Observable(f"point_flux@{x_c:.6g}", member_values)

    width = ramp_width * box.h
    links = np.arange(center - half + 1, center + half + 1)  # global link ids
    s_nodes = box.x_left_wall + box.h * np.arange(box.n_sites + 2) - x_c
    phi = np.clip(0.5 * (1.0 + np.sin(math.pi * np.clip(s_nodes, -width / 2,
                                                        width / 2) / width)), 0.0, 1.0)
    dphi = np.diff(phi)[links]  # Delta phi_c on the selected links
    scale = dphi / (box.m_link[links] * box.h)

    def member_values(psis):
        return np.einsum("l,lm->m", scale,
                         np.imag(np.conj(psis[links - 1]) * psis[links]))

    return Observable(f"smoothed_current@{x_c:.6g}", member_values)


def projection_observable(box: BoxDiscretization, vec: np.ndarray,
                          name: str) -> Observable:
    """Occupation of one normalized grid state: sum_k w_k |<vec, psi_k>_h|^2."""
    v = np.asarray(vec, dtype=complex)
    v = v / box.h_norm(v)

    def member_values(psis):
        return np.abs(box.h * (np.conj(v) @ psis)) ** 2

    return Observable(name, member_values)


def region_charge_observable(box: BoxDiscretization, x_lo: float, x_hi: float,
                             name: str | None = None) -> Observable:
    """Total weighted probability in [x_lo, x_hi]."""
    sel = (box.x >= x_lo) & (box.x <= x_hi)

    def member_values(psis):
        return box.h * np.sum(np.abs(psis[sel]) ** 2, axis=0)

    return Observable(name or f"charge[{x_lo:.6g},{x_hi:.6g}]", member_values)


@dataclass(frozen=True)
class TransientTrace:
    """Sampled observable with its running ergodic mean.

    running_mean[i] is the trapezoidal average of the samples over
    [0, t_i]; samples before the coupling switch-on (t < 0) carry NaN
    there, mirroring the time-average definition on [0, T].
    """

    t: np.ndarray
    values: np.ndarray
    running_mean: np.ndarray
    meta: dict = field(default_factory=dict)

    def late_window_mean(self, fraction: float = 0.25) -> float:
        """Plain average of the samples over the last `fraction` of t >= 0."""
        t_end = self.t[-1]
        sel = self.t >= (1.0 - fraction) * t_end
        return float(np.mean(self.values[sel]))


def _running_mean(t: np.ndarray, values: np.ndarray) -> np.ndarray:
    out = np.full(t.shape, np.nan)
    sel = t >= 0.0
    ts, vs = t[sel], values[sel]
    if ts.size == 0:
        return out
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (vs[1:] + vs[:-1]) * np.diff(ts))])
    means = np.empty(ts.shape)
    means[0] = vs[0]
    means[1:] = integral[1:] / (ts[1:] - ts[0])
    out[sel] = means
    return out


def evolve_ensemble(box: BoxDiscretization, ensemble: EnsembleState,
                    schedule: CouplingSchedule, observables, t_end: float,
                    dt: float, sample_every: int = 1):
    """Propagate the ensemble and record the observables.

    Returns one TransientTrace per observable.  If t_end exceeds the
    reflection window the run is truncated there and a warning is put
    in the trace metadata; callers wanting a hard failure check it.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    warnings = []
    w_max = ensemble.weights.max() if ensemble.n_members else 0.0
    relevant = ensemble.weights >= _WINDOW_WEIGHT_FLOOR * w_max
    v_max = float(np.max(ensemble.velocities[relevant])) if np.any(relevant) else 0.0
    wall_distance = min(box.x_right_wall - box.x[box.n_b],
                        box.x[box.n_a] - box.x_left_wall)
    t_allowed = math.inf if v_max == 0.0 else 0.8 * wall_distance / v_max
    t_end_eff = t_end
    if t_end > t_allowed:
        t_end_eff = t_allowed
        warnings.append(
            f"window truncated: t_end = {t_end:.6g} exceeds the reflection "
            f"bound 0.8 * {wall_distance:.6g} / {v_max:.6g} = {t_allowed:.6g}")

    t_start = schedule.t_start
    n_steps = max(1, int(math.ceil((t_end_eff - t_start) / dt - 1.0e-12)))
    psis = ensemble.psis.copy()
    times = [t_start]
    samples = [[obs.measure(psis, ensemble.weights) for obs in observables]]
    t = t_start
    for step in range(1, n_steps + 1):
        psis = cn_step(box, psis, t, dt)
        t = t_start + step * dt
        if step % sample_every == 0 or step == n_steps:
            times.append(t)
            samples.append([obs.measure(psis, ensemble.weights) for obs in observables])

    times = np.array(times)
    samples = np.array(samples)
    meta_common = {
        "schedule": {"kind": schedule.kind, "alpha": schedule.alpha,
                     "t_start": schedule.t_start, "g_cap": schedule.g_cap},
        "t_end_requested": t_end,
        "t_end": float(times[-1]),
        "dt": dt,
        "v_max": v_max,
        "dropped_weight": ensemble.dropped_weight,
        "warnings": tuple(warnings),
    }
    return [TransientTrace(t=times, values=samples[:, i],
                           running_mean=_running_mean(times, samples[:, i]),
                           meta={**meta_common, "observable": obs.name})
            for i, obs in enumerate(observables)]


@dataclass(frozen=True)
class AlphaSweepReport:
    """Comparison of runs across coupling schedules.

    late_means holds the late-window current mean per schedule label;
    pairwise_rel_diff the relative spread between schedule pairs.
    bound_traces maps each schedule label to the occupation traces of
    the bound states (the alpha-dependent part); oscillation_amplitude
    is half the peak-to-peak excursion of the current about its late
    mean over the second half of the window, the transient size the
    sweep exists to measure.  No threshold is attached to it.
    """

    labels: tuple
    current_traces: dict
    bound_traces: dict
    late_means: dict
    pairwise_rel_diff: dict
    oscillation_amplitude: dict
    bound_energies: np.ndarray
    amplitude_monotone_in_alpha: bool | None


def _schedule_for(config: SystemConfig, alpha) -> tuple[str, CouplingSchedule]:
    if isinstance(alpha, str):
        if alpha != "sudden":
            raise ConfigError(f"unknown schedule {alpha!r}")
        return "sudden", CouplingSchedule(kind="sudden", alpha=None,
                                          g_cap=config.schedule.g_cap)
    return (f"alpha={alpha:g}",
            CouplingSchedule(kind="exponential", alpha=float(alpha),
                             g_cap=config.schedule.g_cap))


def alpha_sweep(config: SystemConfig, alphas, t_end: float, dt: float,
                observable_variant: str = "smoothed") -> AlphaSweepReport:
    """Evolve the same initial ensemble under several schedules.

    alphas may contain positive rates and the string "sudden".  The
    late-window current means quantify the steady current's schedule
    independence; bound-state occupations are recorded separately since
    only they may retain schedule dependence.
    """
    box = build_box(config)
    ensemble = decoupled_modes(box, config)
    current = current_observable(box, observable_variant)
    bound_states = find_bound_states(config.device)
    observables = [current] + [
        projection_observable(box, s.evaluate(box.x), f"bound_occ[{i}]")
        for i, s in enumerate(bound_states)]

    labels, current_traces, bound_traces = [], {}, {}
    late_means, amplitudes = {}, {}
    for alpha in alphas:
        label, schedule = _schedule_for(config, alpha)
        traces = evolve_ensemble(box, ensemble, schedule, observables, t_end, dt)
        labels.append(label)
        current_traces[label] = traces[0]
        bound_traces[label] = traces[1:]
        late_means[label] = traces[0].late_window_mean()
        tr = traces[0]
        half = tr.t >= 0.5 * tr.t[-1]
        resid = tr.values[half] - late_means[label]
        amplitudes[label] = float(0.5 * (resid.max() - resid.min()))

    pairwise = {}
    for i, la in enumerate(labels):
        for lb in labels[i + 1:]:
            scale = max(abs(late_means[la]), abs(late_means[lb]), 1.0e-300)
            pairwise[(la, lb)] = abs(late_means[la] - late_means[lb]) / scale

    monotone = None
    rates = [(a, f"alpha={a:g}") for a in alphas if not isinstance(a, str)]
    if len(rates) >= 3:
        ordered = [amplitudes[lbl] for _, lbl in sorted(rates)]
        diffs = np.diff(ordered)
        monotone = bool(np.all(diffs <= 0.0) or np.all(diffs >= 0.0))

    return AlphaSweepReport(
        labels=tuple(labels), current_traces=current_traces,
        bound_traces=bound_traces, late_means=late_means,
        pairwise_rel_diff=pairwise, oscillation_amplitude=amplitudes,
        bound_energies=np.array([s.lam for s in bound_states]),
        amplitude_monotone_in_alpha=monotone)


@dataclass(frozen=True)
class MollerResult:
    """Overlap of the evolved decoupled packet with its coupled image."""

    lambda0: float
    channel: str
    overlap: complex
    t_prep: float
    n_modes: int

    @property
    def phase(self) -> float:
        return float(np.angle(self.overlap))

    @property
    def modulus(self) -> float:
        return float(abs(self.overlap))


def moller_probe(box: BoxDiscretization, config: SystemConfig, lam0: float,
                 channel: str, t_prep: float | None = None,
                 dt: float = 0.004, sigma_x: float | None = None) -> MollerResult:
    """Measure the incoming-wave phase between decoupled and coupled states.

    Builds a narrow energy packet of decoupled lead-block modes around
    lam0 heading for the device, applies the product
    e^{-i t_prep H} e^{+i t_prep H_D} with Crank-Nicolson steps (g = 0
    and g = g_cap respectively), and projects the result onto the same
    packet assembled from coupled scattering states.  The overlap phase
    approaches +pi/2 for channel b and -pi/2 for channel a.
    """
    dev = config.device
    if channel == "b":
        m_lead, v_lead = dev.m_b, dev.v_b
        lead_len = box.x_right_wall - box.x[box.n_b]
        lo, hi = box.n_b + 1, box.n_sites
        anchor = box.x[box.n_b]
    elif channel == "a":
        m_lead, v_lead = dev.m_a, dev.v_a
        lead_len = box.x[box.n_a] - box.x_left_wall
        lo, hi = 0, box.n_a
        anchor = box.x[box.n_a]
    else:
        raise ValueError(f"channel must be 'a' or 'b', got {channel!r}")
    if lam0 <= v_lead:
        raise ValueError(f"lam0 = {lam0} is below the channel floor {v_lead}")

    v_g = math.sqrt(2.0 * (lam0 - v_lead) / m_lead)
    if sigma_x is None:
        sigma_x = lead_len / 12.0
    sigma_lam = v_g / (2.0 * sigma_x)
    if lam0 - 4.5 * sigma_lam <= v_lead:
        raise ValueError(
            f"packet energy window reaches the channel floor; need "
            f"lam0 > {v_lead + 4.5 * sigma_lam:.4g} or a wider packet")
    if t_prep is None:
        t_prep = 0.3 * lead_len / v_g
    # packet start 0.3 lead lengths from the device; drifts away during
    # the decoupled leg, returns during the coupled leg
    x0_off = 0.3 * lead_len
    drift = v_g * t_prep
    if x0_off + drift + 4.0 * sigma_x > lead_len - 2.0 * box.h:
        raise WindowError(
            f"preparation time {t_prep:.4g} drives the packet into the wall; "
            f"need t_prep < {(lead_len - 2.0 * box.h - x0_off - 4.0 * sigma_x) / v_g:.4g}")

    d0, e0 = box.hamiltonian(0.0)
    vals, vecs = eigh_tridiagonal(
        d0[lo:hi], e0[lo:hi - 1], select="v",
        select_range=(lam0 - 5.0 * sigma_lam, lam0 + 5.0 * sigma_lam))
    if vals.size < 8:
        raise WindowError(
            f"only {vals.size} block modes in the packet window; enlarge the box")

    spacing = np.gradient(vals)
    amp = (2.0 * math.pi * sigma_lam**2) ** -0.25 * np.exp(
        -((vals - lam0) ** 2) / (4.0 * sigma_lam**2))
    k_of = np.sqrt(2.0 * m_lead * (vals - v_lead))
    if channel == "b":
        x0 = anchor + x0_off
        phases = np.exp(1j * k_of * (x0 - anchor))
        edge = vecs[0]  # sample adjacent to the device
        signs = np.where(edge > 0.0, 1.0, -1.0)
    else:
        x0 = anchor - x0_off
        phases = np.exp(1j * k_of * (anchor - x0))
        edge = vecs[-1]
        signs = np.where(edge < 0.0, 1.0, -1.0)
    coeff = amp * np.sqrt(spacing) * phases * signs
    psi = np.zeros(box.n_sites, dtype=complex)
    psi[lo:hi] = (vecs / math.sqrt(box.h)) @ coeff
    psi /= box.h_norm(psi)

    n_steps = max(1, int(round(t_prep / dt)))
    step = t_prep / n_steps
    g_cap = config.schedule.g_cap
    for _ in range(n_steps):  # e^{+i t_prep H_D}
        psi = cn_step(box, psi, 0.0, -step, g=g_cap)
    for _ in range(n_steps):  # e^{-i t_prep H}
        psi = cn_step(box, psi, 0.0, step, g=0.0)

    gl_x, gl_w = leggauss(64)
    lam_nodes = lam0 + 4.5 * sigma_lam * gl_x
    lam_w = 4.5 * sigma_lam * gl_w
    target = np.zeros(box.n_sites, dtype=complex)
    for lam, w in zip(lam_nodes, lam_w):
        sol = eigenfunctions(dev, float(lam), grid=box.x)
        phi = sol.phi_b if channel == "b" else sol.phi_a
        k = math.sqrt(2.0 * m_lead * (lam - v_lead))
        ph = k * (x0 - anchor) if channel == "b" else k * (anchor - x0)
        g_amp = (2.0 * math.pi * sigma_lam**2) ** -0.25 * math.exp(
            -((lam - lam0) ** 2) / (4.0 * sigma_lam**2))
        target += w * g_amp * np.exp(1j * ph) * phi
    target /= box.h_norm(target)

    overlap = complex(box.h * np.vdot(target, psi))
    return MollerResult(lambda0=lam0, channel=channel, overlap=overlap,
                        t_prep=t_prep, n_modes=int(vals.size))
