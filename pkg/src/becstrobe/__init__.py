"""Stroboscopic dispersive probing of trapped-condensate density modes.

Gaussian-state simulation of collective density modes in a harmonically
trapped quasi-1D condensate under pixelated homodyne readout, with
pulse-train gating of the probe, mean-field feedback damping, and
entanglement/selectivity metrics.
"""

__version__ = "0.1.0"

from .bogoliubov import ModeBasis, solve_bdg
from .dynamics import (
    GaussianState,
    Segment,
    StroboSchedule,
    TimeSeries,
    build_schedule,
    simulate,
)
from .meanfield import CondensateGroundState, Grid, TrapConfig, solve_gpe_ground_state
from .metrics import (
    hellinger_distance,
    log_negativity,
    purity,
    qnd_entanglement_asymptote,
    qnd_entanglement_curve,
    qnd_variance,
    symplectic_eigenvalues,
    williamson,
)
from .optics import (
    DEFAULT_RESOLUTION,
    CouplingModel,
    DetectorArray,
    MeasurementKernel,
    build_coupling,
)
from .scenarios import (
    ConfigError,
    RunResult,
    ScenarioConfig,
    SegmentSpec,
    load_config,
    preset_names,
    presets,
    run,
    run_timeseries,
)

__all__ = [
    "__version__",
    "ModeBasis",
    "solve_bdg",
    "GaussianState",
    "Segment",
    "StroboSchedule",
    "TimeSeries",
    "build_schedule",
    "simulate",
    "CondensateGroundState",
    "Grid",
    "TrapConfig",
    "solve_gpe_ground_state",
    "hellinger_distance",
    "log_negativity",
    "purity",
    "qnd_entanglement_asymptote",
    "qnd_entanglement_curve",
    "qnd_variance",
    "symplectic_eigenvalues",
    "williamson",
    "DEFAULT_RESOLUTION",
    "CouplingModel",
    "DetectorArray",
    "MeasurementKernel",
    "build_coupling",
    "ConfigError",
    "RunResult",
    "ScenarioConfig",
    "SegmentSpec",
    "load_config",
    "preset_names",
    "presets",
    "run",
    "run_timeseries",
]
