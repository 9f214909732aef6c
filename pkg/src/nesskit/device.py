"""Physical model of the device and its reservoirs.

A device is a finite interval (a, b) with piecewise-constant effective
mass and potential, attached to two homogeneous leads with constants
(m_a, v_a) on the left and (m_b, v_b) on the right, v_a >= v_b.  Natural
units hbar = 1 throughout; the kinetic term is -(1/2) d/dx (1/M) d/dx.

This module owns configuration ingestion and the coefficient lookups
that every other module consumes.  All types are immutable after
construction and all operations are pure.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .errors import ConfigError

__all__ = [
    "DeviceProfile",
    "ReservoirState",
    "SpectralParams",
    "BoxParams",
    "CouplingSchedule",
    "SystemConfig",
    "Channel",
    "load_config",
    "parse_config_text",
    "coefficients_at",
    "channel_wavenumber",
    "default_lambda_max",
]


@dataclass(frozen=True)
class DeviceProfile:
    """Geometry and material data of the two-lead device.

    Parameters
    ----------
    a, b : float
        Endpoints of the interior interval, a < b.
    m_a, m_b : float
        Lead effective masses, strictly positive.
    v_a, v_b : float
        Lead potential floors with v_a >= v_b (standing assumption).
    breakpoints : tuple of float
        Strictly increasing interior breakpoints; first element a,
        last element b.  K segments for K+1 breakpoints.
    masses, potentials : tuple of float
        Per-segment constant mass (> 0) and potential, length K.
    """

    a: float
    b: float
    m_a: float = 1.0
    m_b: float = 1.0
    v_a: float = 0.0
    v_b: float = 0.0
    breakpoints: tuple = ()
    masses: tuple = ()
    potentials: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "breakpoints",
                           tuple(float(x) for x in self.breakpoints) or (float(self.a), float(self.b)))
        k = len(self.breakpoints) - 1
        object.__setattr__(self, "masses",
                           tuple(float(x) for x in self.masses) or (1.0,) * k)
        object.__setattr__(self, "potentials",
                           tuple(float(x) for x in self.potentials) or (0.0,) * k)
        if not self.a < self.b:
            raise ConfigError(f"device requires a < b, got a = {self.a}, b = {self.b}")
        if self.m_a <= 0 or self.m_b <= 0:
            raise ConfigError(f"lead masses must be positive, got m_a = {self.m_a}, m_b = {self.m_b}")
        if self.v_a < self.v_b:
            raise ConfigError(
                f"lead floors must satisfy v_a >= v_b, got v_a = {self.v_a} < v_b = {self.v_b}")
        bp = self.breakpoints
        if bp[0] != self.a or bp[-1] != self.b:
            raise ConfigError(
                f"breakpoints must start at a = {self.a} and end at b = {self.b}, got {bp}")
        if any(x1 <= x0 for x0, x1 in zip(bp, bp[1:])):
            raise ConfigError(f"breakpoints must be strictly increasing, got {bp}")
        if len(self.masses) != k or len(self.potentials) != k:
            raise ConfigError(
                f"need {k} segment masses and potentials for {k + 1} breakpoints, "
                f"got {len(self.masses)} masses, {len(self.potentials)} potentials")
        if any(m <= 0 for m in self.masses):
            raise ConfigError(f"segment masses must be positive, got {self.masses}")

    @property
    def segment_count(self) -> int:
        return len(self.masses)

    def min_potential(self) -> float:
        return min((self.v_a, self.v_b) + self.potentials)

    def max_mass(self) -> float:
        return max((self.m_a, self.m_b) + self.masses)


@dataclass(frozen=True)
class ReservoirState:
    """One equilibrium reservoir: inverse temperature, chemical
    potential, and the density prefactor c of the occupation function
    f(lam) = c * ln(1 + exp(-beta * (lam - mu))).

    c may be supplied directly (default 1.0) or derived from a charge q
    and a reservoir effective mass via c = q * m_star / (pi * beta).
    """

    beta: float = 1.0
    mu: float = 0.0
    c: float = 1.0

    def __post_init__(self):
        if self.beta <= 0:
            raise ConfigError(f"reservoir beta must be positive, got {self.beta}")
        if self.c <= 0:
            raise ConfigError(f"reservoir prefactor c must be positive, got {self.c}")

    @staticmethod
    def from_charge(beta: float, mu: float, q: float, m_star: float) -> "ReservoirState":
        return ReservoirState(beta=beta, mu=mu, c=q * m_star / (math.pi * beta))


@dataclass(frozen=True)
class SpectralParams:
    """Parameters of the energy quadrature grid over [v_b, lambda_max]."""

    lambda_max: float
    nodes_per_panel: int = 32
    panels_one_channel: int = 2
    panels_two_channel: int = 4
    rule: str = "gauss-legendre"

    def __post_init__(self):
        if self.nodes_per_panel < 2:
            raise ConfigError(f"nodes_per_panel must be >= 2, got {self.nodes_per_panel}")
        if self.panels_one_channel < 1 or self.panels_two_channel < 1:
            raise ConfigError("panel counts must be >= 1")
        if self.rule != "gauss-legendre":
            raise ConfigError(f"unknown quadrature rule '{self.rule}' (only gauss-legendre)")


@dataclass(frozen=True)
class BoxParams:
    """Finite simulation box for the dynamics module."""

    x_min: float
    x_max: float
    h: float = 0.05

    def __post_init__(self):
        if self.h <= 0:
            raise ConfigError(f"box spacing h must be positive, got {self.h}")
        if self.x_min >= self.x_max:
            raise ConfigError(f"box requires x_min < x_max, got [{self.x_min}, {self.x_max}]")


@dataclass(frozen=True)
class CouplingSchedule:
    """Time dependence of the decoupling barrier strength g(t).

    kind = "exponential": g(t) = min(exp(-alpha * t), g_cap), alpha > 0.
    kind = "sudden":      g(t) = g_cap for t < 0, 0 for t >= 0.

    t_start is the simulation start time.  The default start for the
    exponential schedule is -ln(200)/alpha: for g >= 200 the decoupled
    ensemble is stationary to O((2 q / g)^2), so earlier times only
    accumulate phases on near-eigenstates.
    """

    kind: Literal["exponential", "sudden"] = "exponential"
    alpha: float | None = 1.0
    t_start: float | None = None
    g_cap: float = 1.0e4

    def __post_init__(self):
        if self.kind not in ("exponential", "sudden"):
            raise ConfigError(f"schedule kind must be exponential or sudden, got '{self.kind}'")
        if self.kind == "exponential":
            if self.alpha is None or self.alpha <= 0:
                raise ConfigError(f"exponential schedule requires alpha > 0, got {self.alpha}")
        if self.g_cap <= 0:
            raise ConfigError(f"g_cap must be positive, got {self.g_cap}")
        if self.t_start is None:
            start = 0.0 if self.kind == "sudden" else -math.log(200.0) / self.alpha
            object.__setattr__(self, "t_start", start)

    def g(self, t):
        """Barrier strength at time t (scalar or array)."""
        if self.kind == "sudden":
            return np.where(np.asarray(t) < 0.0, self.g_cap, 0.0)[()]
        return np.minimum(np.exp(-self.alpha * np.asarray(t)), self.g_cap)[()]


@dataclass(frozen=True)
class SystemConfig:
    """Validated bundle of everything a run needs."""

    device: DeviceProfile
    reservoir_left: ReservoirState = field(default_factory=ReservoirState)
    reservoir_well: ReservoirState = field(default_factory=ReservoirState)
    reservoir_right: ReservoirState = field(default_factory=ReservoirState)
    spectral: SpectralParams | None = None
    box: BoxParams | None = None
    schedule: CouplingSchedule = field(default_factory=CouplingSchedule)

    def __post_init__(self):
        dev = self.device
        if self.spectral is None:
            object.__setattr__(self, "spectral", SpectralParams(lambda_max=default_lambda_max(self)))
        if self.box is None:
            object.__setattr__(self, "box", BoxParams(x_min=dev.a - 40.0, x_max=dev.b + 40.0))
        if not (self.box.x_min < dev.a and dev.b < self.box.x_max):
            raise ConfigError(
                f"box [{self.box.x_min}, {self.box.x_max}] must contain the device interval "
                f"({dev.a}, {dev.b}) strictly")
        if self.spectral.lambda_max <= dev.v_a:
            raise ConfigError(
                f"lambda_max = {self.spectral.lambda_max} must exceed v_a = {dev.v_a}")

    def beta_min(self) -> float:
        return min(self.reservoir_left.beta, self.reservoir_well.beta, self.reservoir_right.beta)


def default_lambda_max(config: SystemConfig) -> float:
    """Default energy cutoff v_a + 20/beta_min.

    Occupations decay like exp(-beta * lam), so the omitted weight is
    below e^-20 of the occupied scale.
    """
    return config.device.v_a + 20.0 / config.beta_min()


# ---------------------------------------------------------------------------
# configuration parsing


_SECTION_KEYS = {
    "device": {"a", "b", "m_a", "m_b", "v_a", "v_b", "breakpoints", "masses", "potentials"},
    "reservoir.left": {"beta", "mu", "c", "q", "m_star"},
    "reservoir.well": {"beta", "mu", "c", "q", "m_star"},
    "reservoir.right": {"beta", "mu", "c", "q", "m_star"},
    "spectral": {"lambda_max", "nodes_per_panel", "panels_one_channel", "panels_two_channel", "rule"},
    "box": {"x_min", "x_max", "h"},
    "schedule": {"kind", "alpha", "t_start", "g_cap"},
}


def _float(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = '{raw}' is not a number") from None


def _int(section: str, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = '{raw}' is not an integer") from None


def _float_list(section: str, key: str, raw: str) -> tuple:
    try:
        return tuple(float(tok) for tok in raw.split(",") if tok.strip())
    except ValueError:
        raise ConfigError(f"[{section}] {key} = '{raw}' is not a comma-separated number list") from None


def _reservoir_from(section: str, items: dict) -> ReservoirState:
    beta = _float(section, "beta", items.get("beta", "1.0"))
    mu = _float(section, "mu", items.get("mu", "0.0"))
    if "c" in items and ("q" in items or "m_star" in items):
        raise ConfigError(f"[{section}] give either c or (q, m_star), not both")
    if "q" in items or "m_star" in items:
        if not ("q" in items and "m_star" in items):
            raise ConfigError(f"[{section}] q and m_star must be given together")
        return ReservoirState.from_charge(beta, mu,
                                          _float(section, "q", items["q"]),
                                          _float(section, "m_star", items["m_star"]))
    return ReservoirState(beta=beta, mu=mu, c=_float(section, "c", items.get("c", "1.0")))


def parse_config_text(text: str, origin: str = "<string>") -> SystemConfig:
    """Parse a config document; see load_config for the format."""
    parser = configparser.ConfigParser(strict=True, interpolation=None,
                                       inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ConfigError(f"{origin}: {exc}") from None

    for section in parser.sections():
        if section not in _SECTION_KEYS:
            raise ConfigError(f"{origin}: unknown section [{section}]")
        for key in parser[section]:
            if key not in _SECTION_KEYS[section]:
                raise ConfigError(f"{origin}: unknown key '{key}' in section [{section}]")

    if "device" not in parser:
        raise ConfigError(f"{origin}: missing required section [device]")
    dv = dict(parser["device"])
    for required in ("a", "b"):
        if required not in dv:
            raise ConfigError(f"{origin}: [device] missing required key '{required}'")
    a = _float("device", "a", dv["a"])
    b = _float("device", "b", dv["b"])
    breakpoints = _float_list("device", "breakpoints", dv["breakpoints"]) if "breakpoints" in dv else (a, b)
    k = max(len(breakpoints) - 1, 0)
    masses = _float_list("device", "masses", dv["masses"]) if "masses" in dv else (1.0,) * k
    potentials = _float_list("device", "potentials", dv["potentials"]) if "potentials" in dv else (0.0,) * k
    device = DeviceProfile(
        a=a, b=b,
        m_a=_float("device", "m_a", dv.get("m_a", "1.0")),
        m_b=_float("device", "m_b", dv.get("m_b", "1.0")),
        v_a=_float("device", "v_a", dv.get("v_a", "0.0")),
        v_b=_float("device", "v_b", dv.get("v_b", "0.0")),
        breakpoints=breakpoints, masses=masses, potentials=potentials)

    reservoirs = {}
    for tag in ("left", "well", "right"):
        section = f"reservoir.{tag}"
        items = dict(parser[section]) if section in parser else {}
        reservoirs[tag] = _reservoir_from(section, items)

    spectral = None
    if "spectral" in parser:
        sp = dict(parser["spectral"])
        beta_min = min(r.beta for r in reservoirs.values())
        spectral = SpectralParams(
            lambda_max=_float("spectral", "lambda_max", sp["lambda_max"])
            if "lambda_max" in sp else device.v_a + 20.0 / beta_min,
            nodes_per_panel=_int("spectral", "nodes_per_panel", sp.get("nodes_per_panel", "32")),
            panels_one_channel=_int("spectral", "panels_one_channel", sp.get("panels_one_channel", "2")),
            panels_two_channel=_int("spectral", "panels_two_channel", sp.get("panels_two_channel", "4")),
            rule=sp.get("rule", "gauss-legendre"))

    box = None
    if "box" in parser:
        bx = dict(parser["box"])
        box = BoxParams(
            x_min=_float("box", "x_min", bx.get("x_min", repr(a - 40.0))),
            x_max=_float("box", "x_max", bx.get("x_max", repr(b + 40.0))),
            h=_float("box", "h", bx.get("h", "0.05")))

    schedule_kwargs = {}
    if "schedule" in parser:
        sc = dict(parser["schedule"])
        schedule_kwargs["kind"] = sc.get("kind", "exponential").strip()
        if "alpha" in sc:
            schedule_kwargs["alpha"] = _float("schedule", "alpha", sc["alpha"])
        if "t_start" in sc:
            schedule_kwargs["t_start"] = _float("schedule", "t_start", sc["t_start"])
        if "g_cap" in sc:
            schedule_kwargs["g_cap"] = _float("schedule", "g_cap", sc["g_cap"])
    schedule = CouplingSchedule(**schedule_kwargs)

    return SystemConfig(device=device,
                        reservoir_left=reservoirs["left"],
                        reservoir_well=reservoirs["well"],
                        reservoir_right=reservoirs["right"],
                        spectral=spectral, box=box, schedule=schedule)


def load_config(path) -> SystemConfig:
    """Load and validate a config file.

    Format: INI-style sections [device], [reservoir.left],
    [reservoir.well], [reservoir.right], [spectral], [box], [schedule]
    with key = value lines; arrays are comma-separated.  Unknown keys
    and sections are rejected.  Only [device] with keys a and b is
    required; every other key has a documented default (see README).
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config '{path}': {exc}") from None
    return parse_config_text(text, origin=str(path))


# ---------------------------------------------------------------------------
# coefficient lookups


def coefficients_at(device: DeviceProfile, x):
    """Mass and potential (M(x), V(x)) at position x (scalar or array).

    Lead constants apply for x <= a and x >= b; interior breakpoints
    take the value of the segment to their right (right-continuous
    convention, fixed for determinism).
    """
    xa = np.asarray(x, dtype=float)
    bp = np.asarray(device.breakpoints)
    seg = np.clip(np.searchsorted(bp, xa, side="right") - 1, 0, device.segment_count - 1)
    m = np.asarray(device.masses)[seg]
    v = np.asarray(device.potentials)[seg]
    m = np.where(xa <= device.a, device.m_a, np.where(xa >= device.b, device.m_b, m))
    v = np.where(xa <= device.a, device.v_a, np.where(xa >= device.b, device.v_b, v))
    if np.isscalar(x):
        return float(m), float(v)
    return m, v


@dataclass(frozen=True)
class Channel:
    """Wavenumber data of one lead channel at one energy.

    For an open channel (lam >= v_p): q = sqrt((lam - v_p)/(2 m_p)) and
    k = 2 m_p q.  For a closed channel the decay rate
    kappa = sqrt(2 m_p (v_p - lam)) is stored in k, q = kappa/(2 m_p),
    and evanescent is True.
    """

    q: float
    k: float
    evanescent: bool


def channel_wavenumber(device: DeviceProfile, lead: str, lam: float) -> Channel:
    """Channel wavenumbers q_p, k_p of lead p in {'left', 'right'} at energy lam."""
    if lead in ("left", "a"):
        m, v = device.m_a, device.v_a
    elif lead in ("right", "b"):
        m, v = device.m_b, device.v_b
    else:
        raise ValueError(f"lead must be 'left' or 'right', got '{lead}'")
    if lam >= v:
        k = math.sqrt(2.0 * m * (lam - v))
        return Channel(q=k / (2.0 * m), k=k, evanescent=False)
    kappa = math.sqrt(2.0 * m * (v - lam))
    return Channel(q=kappa / (2.0 * m), k=kappa, evanescent=True)


def with_schedule(config: SystemConfig, kind: str, alpha: float | None = None,
                  t_start: float | None = None) -> SystemConfig:
    """Copy of config with a replaced coupling schedule (downstream helper)."""
    sched = CouplingSchedule(kind=kind, alpha=alpha, t_start=t_start,
                             g_cap=config.schedule.g_cap)
    return replace(config, schedule=sched)
