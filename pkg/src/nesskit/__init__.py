"""Steady-state and transient quantum transport for a 1D two-lead device.

The package computes stationary scattering (S-matrix, transmission,
delta-normalized eigenfunctions), discrete spectra, non-equilibrium
steady-state densities and currents, and finite-box time-dependent
simulations of the lead-coupling process, including the check that the
stationary current is independent of the switching rate.
"""

__version__ = "0.1.0"

from .device import (
    BoxParams,
    Channel,
    CouplingSchedule,
    DeviceProfile,
    ReservoirState,
    SpectralParams,
    SystemConfig,
    channel_wavenumber,
    coefficients_at,
    load_config,
)
from .dynamics import (
    AlphaSweepReport,
    BoxDiscretization,
    EnsembleState,
    MollerResult,
    Observable,
    TransientTrace,
    alpha_sweep,
    build_box,
    cn_step,
    current_observable,
    decoupled_modes,
    evolve_ensemble,
    moller_probe,
    projection_observable,
    region_charge_observable,
)
from .errors import ConfigError, NesskitError, ResolutionError, WindowError
from .ness import (
    CarrierDensity,
    DistributionFunction,
    SpectralGrid,
    carrier_density,
    current_density,
    current_truncation_bound,
    distribution_D,
    distribution_ness,
    landauer_current,
    occupation,
)
from .scattering import (
    DeltaCouplings,
    ScatteringSolution,
    TransferMatrix,
    eigenfunctions,
    generalized_fourier,
    interior_transfer,
    scattering_matrix,
    transmission,
)
from .spectrum import BoundState, WellMode, closed_well_spectrum, find_bound_states

__all__ = [
    "__version__",
    "BoxParams", "Channel", "CouplingSchedule", "DeviceProfile", "ReservoirState",
    "SpectralParams", "SystemConfig", "channel_wavenumber", "coefficients_at", "load_config",
    "ConfigError", "NesskitError", "ResolutionError", "WindowError",
    "DeltaCouplings", "ScatteringSolution", "TransferMatrix", "eigenfunctions",
    "generalized_fourier", "interior_transfer", "scattering_matrix", "transmission",
    "BoundState", "WellMode", "closed_well_spectrum", "find_bound_states",
    "CarrierDensity", "DistributionFunction", "SpectralGrid", "carrier_density",
    "current_density", "current_truncation_bound", "distribution_D",
    "distribution_ness", "landauer_current", "occupation",
    "AlphaSweepReport", "BoxDiscretization", "EnsembleState", "MollerResult",
    "Observable", "TransientTrace", "alpha_sweep", "build_box", "cn_step",
    "current_observable", "decoupled_modes", "evolve_ensemble", "moller_probe",
    "projection_observable", "region_charge_observable",
]
