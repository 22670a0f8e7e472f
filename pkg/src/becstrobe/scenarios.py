"""Named scenario configs and file-backed runs.

A ``ScenarioConfig`` gathers everything needed to reproduce a run: trap
and grid parameters, detector geometry, the protocol segment list, the
ensemble size, and which derived metric columns to tabulate.  ``run``
executes it and writes a fixed set of files into an output directory:

* ``timeseries.csv``      sampled variances, means and metric columns
* ``covariance_t*.csv``   full 2n x 2n comoving covariance snapshots
* ``trajectories.csv``    comoving means of the kept trajectories
* ``metadata.json``       resolved config plus derived tables
* ``sweep.csv``           endpoint rows, only for duty-cycle sweeps

Runs are deterministic: the same config and seed produce byte-identical
files, so none of the outputs carry timestamps.
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import __version__ as PACKAGE_VERSION
from .bogoliubov import solve_bdg
from .dynamics import Segment, TimeSeries, simulate
from .meanfield import Grid, TrapConfig, solve_gpe_ground_state
from .metrics import (
    beta_parameter,
    hellinger_distance,
    hellinger_target_state,
    log_negativity,
    purity,
    qnd_entanglement_asymptote,
    reduced_covariance,
    reduced_means,
)
from .optics import DEFAULT_RESOLUTION, DetectorArray, MeasurementKernel, build_coupling

SCHEMA_VERSION = 1
TWO_PI = 2.0 * np.pi

__all__ = [
    "SCHEMA_VERSION",
    "ConfigError",
    "SegmentSpec",
    "ScenarioConfig",
    "RunResult",
    "load_config",
    "preset_names",
    "presets",
    "resolve_frequency",
    "run",
    "run_timeseries",
]


class ConfigError(ValueError):
    """Invalid scenario config; ``errors`` lists one message per problem."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


# ------------------------------------------------------------ frequencies ---

_FREQ_TERM = re.compile(r"^(?:(\d+(?:\.\d+)?)\*)?w([1-9]\d*)$")


def resolve_frequency(spec: str | float, omegas: np.ndarray) -> float:
    """Turn a frequency spec into a number using the solved mode table.

    Accepts a plain positive number, or a symbolic sum of scaled mode
    frequencies such as ``"2*w3"`` or ``"w1+w3"`` (1-based mode labels).
    """
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        value = float(spec)
        if value <= 0:
            raise ValueError(f"frequency must be positive, got {value}")
        return value
    text = str(spec).replace(" ", "")
    total = 0.0
    for term in text.split("+"):
        m = _FREQ_TERM.match(term)
        if m is None:
            raise ValueError(
                f"cannot parse frequency {spec!r}; use a number, 'k*wJ' or 'wJ+wK'"
            )
        coeff = float(m.group(1)) if m.group(1) else 1.0
        j = int(m.group(2))
        if j > len(omegas):
            raise ValueError(
                f"frequency {spec!r} references mode {j} but only "
                f"{len(omegas)} modes are kept"
            )
        total += coeff * float(omegas[j - 1])
    return total


def _frequency_spec_errors(spec, n_modes: int) -> str | None:
    # syntax-only check; numeric resolution needs the solved basis
    if isinstance(spec, bool):
        return f"frequency {spec!r} must be a number or string"
    if isinstance(spec, (int, float)):
        return None if float(spec) > 0 else f"frequency must be positive, got {spec}"
    if not isinstance(spec, str):
        return f"frequency {spec!r} must be a number or string"
    for term in spec.replace(" ", "").split("+"):
        m = _FREQ_TERM.match(term)
        if m is None:
            return f"cannot parse frequency {spec!r}"
        if int(m.group(2)) > n_modes:
            return f"frequency {spec!r} references mode {m.group(2)} > n_modes"
    return None


# ----------------------------------------------------------------- config ---


@dataclass(frozen=True)
class SegmentSpec:
    """One protocol leg in config units.

    ``delta_phi_frac`` is the gate window as a fraction of the drive
    period (0 gates nothing and is only valid for continuous probing).
    ``feedback_mode`` is a 1-based mode number.
    """

    duration: float
    kappa_sq: float
    frequencies: tuple[str | float, ...] = ()
    delta_phi_frac: float = 0.0
    rule: str = "intersection"
    feedback_mode: int | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved inputs for one run (or one duty-cycle sweep)."""

    name: str = "custom"
    # trap and grid
    n_atoms: float = 1000.0
    omega_perp_ratio: float = 100.0
    mu_target: float | None = 2.0
    g1d: float | None = None
    grid_x_max: float = 8.0
    grid_n_points: int = 1024
    # readout chain
    kernel_resolution: float = DEFAULT_RESOLUTION
    detector_length: float = 10.0
    detector_pixel_size: float = 0.1
    n_modes: int = 10
    # protocol and ensemble
    segments: tuple[SegmentSpec, ...] = ()
    n_trajectories: int = 1
    seed: int = 0
    keep_trajectories: int = 16
    # outputs
    samples_per_period: int = 8
    metrics: tuple[str, ...] = ()
    covariance_times: tuple[float, ...] = ()
    sweep_delta_phi_frac: tuple[float, ...] = ()

    @property
    def total_duration(self) -> float:
        return float(sum(s.duration for s in self.segments))

    def validate(self) -> list[str]:
        """Return one message per problem; empty list means valid."""
        errs: list[str] = []
        if self.n_atoms <= 0:
            errs.append("trap.n_atoms must be positive")
        if self.omega_perp_ratio <= 0:
            errs.append("trap.omega_perp_ratio must be positive")
        if (self.mu_target is None) == (self.g1d is None):
            errs.append("trap: set exactly one of mu_target or g1d")
        if self.mu_target is not None and self.mu_target <= 1.0:
            errs.append("trap.mu_target must exceed 1 (single-particle floor)")
        if self.g1d is not None and self.g1d < 0:
            errs.append("trap.g1d must be non-negative")
        if self.grid_x_max <= 0:
            errs.append("grid.x_max must be positive")
        if self.grid_n_points < 16:
            errs.append("grid.n_points must be at least 16")
        if self.kernel_resolution <= 0:
            errs.append("kernel.resolution_length must be positive")
        if self.detector_length <= 0:
            errs.append("detector.length must be positive")
        if not 0 < self.detector_pixel_size <= self.detector_length:
            errs.append("detector.pixel_size must be in (0, detector.length]")
        if self.n_modes < 1:
            errs.append("n_modes must be at least 1")
        if self.n_trajectories < 1:
            errs.append("ensemble.n_trajectories must be at least 1")
        if self.keep_trajectories < 0:
            errs.append("ensemble.keep_trajectories must be non-negative")
        if self.seed < 0:
            errs.append("ensemble.seed must be non-negative")
        if self.samples_per_period < 1:
            errs.append("outputs.samples_per_period must be at least 1")
        for i, seg in enumerate(self.segments):
            where = f"protocol.segments[{i}]"
            if seg.duration <= 0:
                errs.append(f"{where}.duration must be positive")
            if seg.kappa_sq < 0:
                errs.append(f"{where}.kappa_sq must be non-negative")
            if seg.rule not in ("intersection", "union"):
                errs.append(f"{where}.rule must be 'intersection' or 'union'")
            if seg.frequencies and not 0 < seg.delta_phi_frac < 1:
                errs.append(f"{where}.delta_phi_frac must be in (0, 1) when gating")
            if not seg.frequencies and seg.delta_phi_frac:
                errs.append(f"{where}.delta_phi_frac set but no frequencies")
            for spec in seg.frequencies:
                msg = _frequency_spec_errors(spec, self.n_modes)
                if msg:
                    errs.append(f"{where}.frequencies: {msg}")
            if seg.feedback_mode is not None and not (
                1 <= seg.feedback_mode <= self.n_modes
            ):
                errs.append(f"{where}.feedback_mode must be in 1..{self.n_modes}")
        total = self.total_duration
        for t in self.covariance_times:
            if not 0 <= t <= total:
                errs.append(
                    f"outputs.covariance_times: {t} outside protocol [0, {total:g}]"
                )
        for frac in self.sweep_delta_phi_frac:
            if not 0 < frac < 1:
                errs.append("outputs.sweep_delta_phi_frac entries must be in (0, 1)")
        if self.sweep_delta_phi_frac and not any(
            s.frequencies for s in self.segments
        ):
            errs.append("sweep_delta_phi_frac needs at least one gated segment")
        for spec in self.metrics:
            msg = _metric_spec_errors(spec, self.n_modes)
            if msg:
                errs.append(f"outputs.metrics: {msg}")
        return errs

    def to_dict(self) -> dict:
        d = asdict(self)
        d["segments"] = [asdict(s) for s in self.segments]
        return d


# ------------------------------------------------------------ TOML loading ---

_TOP_KEYS = {"name", "n_modes", "trap", "grid", "detector", "kernel",
             "protocol", "ensemble", "outputs"}
_TRAP_KEYS = {"n_atoms", "omega_perp_ratio", "mu_target", "g1d"}
_GRID_KEYS = {"x_max", "n_points"}
_DET_KEYS = {"length", "pixel_size"}
_KERNEL_KEYS = {"resolution_length"}
_ENSEMBLE_KEYS = {"n_trajectories", "seed", "keep_trajectories"}
_OUTPUT_KEYS = {"samples_per_period", "metrics", "covariance_times",
                "sweep_delta_phi_frac"}
_SEGMENT_KEYS = {"duration", "duration_periods", "kappa_sq", "frequencies",
                 "delta_phi_frac", "rule", "feedback_mode"}


def _check_keys(table: dict, allowed: set, where: str, errs: list[str]):
    for key in table:
        if key not in allowed:
            errs.append(f"unknown key {where}.{key}" if where else f"unknown key {key}")


def _load_segment(raw: dict, index: int, errs: list[str]) -> SegmentSpec | None:
    where = f"protocol.segments[{index}]"
    _check_keys(raw, _SEGMENT_KEYS, where, errs)
    has_dur = "duration" in raw
    has_per = "duration_periods" in raw
    if has_dur == has_per:
        errs.append(f"{where}: set exactly one of duration or duration_periods")
        return None
    duration = float(raw["duration"]) if has_dur else float(raw["duration_periods"]) * TWO_PI
    try:
        return SegmentSpec(
            duration=duration,
            kappa_sq=float(raw.get("kappa_sq", 0.0)),
            frequencies=tuple(raw.get("frequencies", ())),
            delta_phi_frac=float(raw.get("delta_phi_frac", 0.0)),
            rule=str(raw.get("rule", "intersection")),
            feedback_mode=(
                None if raw.get("feedback_mode") is None else int(raw["feedback_mode"])
            ),
        )
    except (TypeError, ValueError) as exc:
        errs.append(f"{where}: {exc}")
        return None


def load_config(path: str | Path) -> ScenarioConfig:
    """Parse a TOML scenario file; raise ConfigError listing every problem."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"{path.name}: {exc}"]) from exc

    errs: list[str] = []
    _check_keys(raw, _TOP_KEYS, "", errs)
    trap = raw.get("trap", {})
    grid = raw.get("grid", {})
    det = raw.get("detector", {})
    kern = raw.get("kernel", {})
    ens = raw.get("ensemble", {})
    outs = raw.get("outputs", {})
    proto = raw.get("protocol", {})
    for table, allowed, where in (
        (trap, _TRAP_KEYS, "trap"),
        (grid, _GRID_KEYS, "grid"),
        (det, _DET_KEYS, "detector"),
        (kern, _KERNEL_KEYS, "kernel"),
        (ens, _ENSEMBLE_KEYS, "ensemble"),
        (outs, _OUTPUT_KEYS, "outputs"),
        (proto, {"segments"}, "protocol"),
    ):
        if not isinstance(table, dict):
            errs.append(f"{where} must be a table")
        else:
            _check_keys(table, allowed, where, errs)

    segments = []
    raw_segments = proto.get("segments", []) if isinstance(proto, dict) else []
    if not isinstance(raw_segments, list):
        errs.append("protocol.segments must be an array of tables")
        raw_segments = []
    for i, raw_seg in enumerate(raw_segments):
        seg = _load_segment(raw_seg, i, errs)
        if seg is not None:
            segments.append(seg)

    mu_default = 2.0 if "g1d" not in trap else None
    try:
        config = ScenarioConfig(
            name=str(raw.get("name", path.stem)),
            n_atoms=float(trap.get("n_atoms", 1000.0)),
            omega_perp_ratio=float(trap.get("omega_perp_ratio", 100.0)),
            mu_target=(
                None if trap.get("mu_target", mu_default) is None
                else float(trap.get("mu_target", mu_default))
            ),
            g1d=None if trap.get("g1d") is None else float(trap["g1d"]),
            grid_x_max=float(grid.get("x_max", 8.0)),
            grid_n_points=int(grid.get("n_points", 1024)),
            kernel_resolution=float(kern.get("resolution_length", DEFAULT_RESOLUTION)),
            detector_length=float(det.get("length", 10.0)),
            detector_pixel_size=float(det.get("pixel_size", 0.1)),
            n_modes=int(raw.get("n_modes", 10)),
            segments=tuple(segments),
            n_trajectories=int(ens.get("n_trajectories", 1)),
            seed=int(ens.get("seed", 0)),
            keep_trajectories=int(ens.get("keep_trajectories", 16)),
            samples_per_period=int(outs.get("samples_per_period", 8)),
            metrics=tuple(outs.get("metrics", ())),
            covariance_times=tuple(float(t) for t in outs.get("covariance_times", ())),
            sweep_delta_phi_frac=tuple(
                float(v) for v in outs.get("sweep_delta_phi_frac", ())
            ),
        )
    except (TypeError, ValueError) as exc:
        errs.append(str(exc))
        raise ConfigError(errs) from exc

    errs.extend(config.validate())
    if errs:
        raise ConfigError(errs)
    return config


# ---------------------------------------------------------------- metrics ---

_METRIC_RE = re.compile(r"^(E|P|DH):(\d+(?:,\d+)*)(?:>(\d+))?$")


def _parse_metric(spec: str) -> tuple[str, tuple[int, ...], int | None]:
    m = _METRIC_RE.match(spec.replace(" ", ""))
    if m is None:
        raise ValueError(
            f"cannot parse metric {spec!r}; use 'E:j,k', 'P:j,k,...' or 'DH:j,k,l>m'"
        )
    kind = m.group(1)
    modes = tuple(int(v) for v in m.group(2).split(","))
    keep = None if m.group(3) is None else int(m.group(3))
    if kind == "E" and len(modes) != 2:
        raise ValueError(f"metric {spec!r}: E takes exactly two modes")
    if kind == "DH" and keep is None:
        raise ValueError(f"metric {spec!r}: DH needs '>m' naming the kept mode")
    if kind != "DH" and keep is not None:
        raise ValueError(f"metric {spec!r}: only DH takes '>m'")
    if kind == "DH" and keep not in modes:
        raise ValueError(f"metric {spec!r}: kept mode must be in the subspace")
    if len(set(modes)) != len(modes):
        raise ValueError(f"metric {spec!r}: repeated mode")
    return kind, modes, keep


def _metric_spec_errors(spec: str, n_modes: int) -> str | None:
    try:
        _, modes, _ = _parse_metric(spec)
    except ValueError as exc:
        return str(exc)
    bad = [j for j in modes if not 1 <= j <= n_modes]
    if bad:
        return f"metric {spec!r}: mode {bad[0]} outside 1..{n_modes}"
    return None


def _metric_column(spec: str) -> str:
    kind, modes, keep = _parse_metric(spec)
    label = "_".join(str(j) for j in modes)
    return f"{kind}_{label}" + (f"_keep{keep}" if keep is not None else "")


def _evaluate_metric(spec: str, ts: TimeSeries) -> np.ndarray:
    """Metric value at every sample; entanglement and purity are invariant
    under the per-mode comoving rotation, so the frame choice is free."""
    kind, modes, keep = _parse_metric(spec)
    idx = tuple(j - 1 for j in modes)
    out = np.empty(len(ts.t))
    if kind == "E":
        for k, a in enumerate(ts.covariances_comoving):
            out[k] = log_negativity(a, (idx[0],), (idx[1],))
    elif kind == "P":
        for k, a in enumerate(ts.covariances_comoving):
            out[k] = purity(a, idx)
    else:  # DH against the subspace state with every mode but `keep` at vacuum
        local = idx.index(keep - 1)
        blocks = ((local, local),)
        for k, a in enumerate(ts.covariances_comoving):
            a_red = reduced_covariance(a, idx)
            r_red = reduced_means(ts.means_comoving[k, :, 0], idx)
            r_t, a_t = hellinger_target_state(r_red, a_red, blocks)
            out[k] = hellinger_distance(r_red, a_red, r_t, a_t)
    return out


# ---------------------------------------------------------------- presets ---

_MU = 2.0


def presets() -> dict[str, ScenarioConfig]:
    """Named ready-to-run configs covering the documented protocols."""
    squeeze3 = SegmentSpec(
        duration=25 * np.pi, kappa_sq=100.0, frequencies=("2*w3",),
        delta_phi_frac=0.05,
    )
    entangle_pairs = SegmentSpec(
        duration=20 * np.pi, kappa_sq=100.0, frequencies=("2*w1", "2*w5"),
        delta_phi_frac=0.10,
    )
    erase = SegmentSpec(duration=20 * np.pi, kappa_sq=0.5)
    fig1b = ScenarioConfig(
        name="fig1b",
        segments=(squeeze3, entangle_pairs, erase),
        metrics=("DH:1,3,5>3", "P:1,3,5"),
        covariance_times=(25 * np.pi, 45 * np.pi),
    )
    fig1c_i = ScenarioConfig(
        name="fig1c_i",
        segments=(SegmentSpec(duration=4 * np.pi, kappa_sq=1000.0),),
        metrics=("E:1,3", "E:3,5"),
        samples_per_period=16,
    )
    pair_drive = SegmentSpec(
        duration=200 * np.pi, kappa_sq=1.0, frequencies=("w1+w3",),
        delta_phi_frac=0.03,
    )
    fig1c_ii = ScenarioConfig(
        name="fig1c_ii",
        segments=(pair_drive,),
        metrics=("E:1,3", "E:1,5", "E:3,5", "P:1,3,5"),
    )
    fig2 = ScenarioConfig(
        name="fig2",
        segments=(
            SegmentSpec(duration=200 * np.pi, kappa_sq=100.0,
                        frequencies=("2*w3",), delta_phi_frac=0.01),
        ),
        metrics=("DH:1,3,5>3", "P:1,3,5"),
        sweep_delta_phi_frac=(0.01, 0.02, 0.03, 0.05, 0.08, 0.10, 0.15),
    )
    fig2_noninteracting = replace(
        fig2, name="fig2_noninteracting", mu_target=None, g1d=0.0,
    )
    fig3 = replace(
        fig1c_ii, name="fig3", metrics=("E:1,3", "P:1,3,5"), covariance_times=(),
    )
    fig4_nofeedback = ScenarioConfig(
        name="fig4_nofeedback",
        segments=(
            SegmentSpec(duration=200 * np.pi, kappa_sq=100.0,
                        frequencies=("2*w3",), delta_phi_frac=0.15),
        ),
        n_trajectories=1000,
        samples_per_period=4,
    )
    fig4_feedback = replace(
        fig4_nofeedback,
        name="fig4_feedback",
        segments=(replace(fig4_nofeedback.segments[0], feedback_mode=3),),
    )
    out = {
        "fig1b": fig1b,
        "fig1c_i": fig1c_i,
        "fig1c_ii": fig1c_ii,
        "fig2": fig2,
        "fig2_noninteracting": fig2_noninteracting,
        "fig3": fig3,
        "fig4_nofeedback": fig4_nofeedback,
        "fig4_feedback": fig4_feedback,
    }
    return out


def preset_names() -> list[str]:
    return sorted(presets())


# ------------------------------------------------------------------- runs ---


@dataclass
class RunResult:
    out_dir: Path
    files: list[str]
    metadata: dict
    timeseries: TimeSeries | None = None
    subruns: dict = field(default_factory=dict)


def _build_system(config: ScenarioConfig):
    trap = TrapConfig(
        n_atoms=config.n_atoms,
        omega_perp_ratio=config.omega_perp_ratio,
        g1d=config.g1d,
        mu_target=config.mu_target,
    )
    gs = solve_gpe_ground_state(trap, Grid(config.grid_x_max, config.grid_n_points))
    basis = solve_bdg(gs, n_modes=config.n_modes)
    coupling = build_coupling(
        basis,
        kernel=MeasurementKernel(config.kernel_resolution),
        detector=DetectorArray(config.detector_length, config.detector_pixel_size),
        kappa_sq=config.segments[0].kappa_sq if config.segments else 1.0,
    )
    return gs, basis, coupling


def _resolve_segments(config: ScenarioConfig, omegas: np.ndarray) -> list[Segment]:
    segs = []
    for spec in config.segments:
        segs.append(
            Segment(
                duration=spec.duration,
                kappa_sq=spec.kappa_sq,
                frequencies=tuple(
                    resolve_frequency(f, omegas) for f in spec.frequencies
                ),
                delta_phi=spec.delta_phi_frac * TWO_PI,
                rule=spec.rule,
                feedback_mode=(
                    None if spec.feedback_mode is None else spec.feedback_mode - 1
                ),
            )
        )
    return segs


def run_timeseries(config: ScenarioConfig, system=None) -> tuple[TimeSeries, tuple]:
    """Execute one config in memory; returns (timeseries, (gs, basis, coupling)).

    ``system`` reuses an already-solved basis, e.g. across sweep points.
    """
    errs = config.validate()
    if errs:
        raise ConfigError(errs)
    gs, basis, coupling = system if system is not None else _build_system(config)
    segments = _resolve_segments(config, coupling.omegas)
    ts = simulate(
        coupling,
        segments,
        n_trajectories=config.n_trajectories,
        seed=config.seed,
        samples_per_period=config.samples_per_period,
        keep_trajectories=config.keep_trajectories,
        extra_sample_times=config.covariance_times or None,
    )
    return ts, (gs, basis, coupling)


# ------------------------------------------------------------ file writers ---

_FMT = "%.17g"


def _write_csv(path: Path, kind: str, header: list[str], rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# becstrobe {kind} schema v{SCHEMA_VERSION}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_FMT % v for v in row) + "\n")


def _timeseries_table(config: ScenarioConfig, ts: TimeSeries):
    n = ts.covariances.shape[1] // 2
    labels = [str(j) for j in range(1, n + 1)]
    header = ["t", "tau", "probe_on", "segment"]
    for frame in ("com", "lab"):
        header += [f"var_x_{frame}_{j}" for j in labels]
        header += [f"var_p_{frame}_{j}" for j in labels]
    for frame in ("com", "lab"):
        header += [f"mean_x_{frame}_{j}" for j in labels]
        header += [f"mean_p_{frame}_{j}" for j in labels]
    for frame in ("com", "lab"):
        header += [f"sigma_x_{frame}_{j}" for j in labels]
        header += [f"sigma_p_{frame}_{j}" for j in labels]
    metric_cols = [_metric_column(spec) for spec in config.metrics]
    header += metric_cols

    blocks = [
        ts.t[:, None],
        ts.tau_total[:, None],
        ts.probe_on[:, None].astype(float),
        ts.segment_index[:, None].astype(float),
        ts.var_x(comoving=True), ts.var_p(comoving=True),
        ts.var_x(comoving=False), ts.var_p(comoving=False),
        ts.means_comoving[:, 0::2, 0], ts.means_comoving[:, 1::2, 0],
        ts.means[:, 0::2, 0], ts.means[:, 1::2, 0],
        ts.ensemble_std_comoving[:, 0::2], ts.ensemble_std_comoving[:, 1::2],
        ts.ensemble_std[:, 0::2], ts.ensemble_std[:, 1::2],
    ]
    for spec in config.metrics:
        blocks.append(_evaluate_metric(spec, ts)[:, None])
    return header, np.hstack(blocks)


def _write_timeseries(path: Path, config: ScenarioConfig, ts: TimeSeries) -> None:
    header, table = _timeseries_table(config, ts)
    _write_csv(path, "timeseries", header, table)


def _write_trajectories(path: Path, ts: TimeSeries) -> None:
    n = ts.covariances.shape[1] // 2
    kept = ts.means_comoving.shape[2]
    header = ["t", "trajectory"]
    header += [f"x_com_{j}" for j in range(1, n + 1)]
    header += [f"p_com_{j}" for j in range(1, n + 1)]
    rows = np.empty((len(ts.t) * kept, 2 + 2 * n))
    for k in range(kept):
        sl = slice(k * len(ts.t), (k + 1) * len(ts.t))
        rows[sl, 0] = ts.t
        rows[sl, 1] = k
        rows[sl, 2:2 + n] = ts.means_comoving[:, 0::2, k]
        rows[sl, 2 + n:] = ts.means_comoving[:, 1::2, k]
    _write_csv(path, "trajectories", header, rows)


def _covariance_snapshots(config: ScenarioConfig, ts: TimeSeries) -> list[tuple[float, int]]:
    wanted = list(config.covariance_times) + [float(ts.t[-1])]
    picks: list[tuple[float, int]] = []
    seen = set()
    for t in wanted:
        k = int(np.argmin(np.abs(ts.t - t)))
        if k not in seen:
            seen.add(k)
            picks.append((float(ts.t[k]), k))
    return picks


def _write_covariances(out_dir: Path, config: ScenarioConfig, ts: TimeSeries) -> list[str]:
    n = ts.covariances.shape[1] // 2
    header = []
    for j in range(1, n + 1):
        header += [f"x{j}", f"p{j}"]
    names = []
    for t, k in _covariance_snapshots(config, ts):
        name = f"covariance_t{t:010.4f}.csv"
        _write_csv(out_dir / name, "covariance", header, ts.covariances_comoving[k])
        names.append(name)
    return names


def _metadata(config: ScenarioConfig, ts: TimeSeries, coupling, segments) -> dict:
    from .dynamics import _segment_dt  # resolved step size, one per segment

    duties = []
    pulse_counts = []
    dts = []
    for seg, sched in zip(segments, ts.schedules):
        duties.append(float(sched.duty))
        pulse_counts.append(int(len(sched.pulses)))
        dts.append(float(_segment_dt(coupling.with_kappa_sq(seg.kappa_sq), sched)))

    meta = {
        "schema_version": SCHEMA_VERSION,
        "package_version": PACKAGE_VERSION,
        "config": config.to_dict(),
        "derived": {
            "omegas": [float(w) for w in coupling.omegas],
            "parities": [int(p) for p in coupling.parities],
            "f_bar_sq_diag": [float(v) for v in np.diag(coupling.f_bar_sq)],
            "nu_per_segment": [
                [float(v) for v in coupling.with_kappa_sq(s.kappa_sq).nu]
                for s in segments
            ],
            "dt_per_segment": dts,
            "resolved_frequencies": [list(map(float, s.frequencies)) for s in segments],
            "delta_phi": [float(s.delta_phi) for s in segments],
            "gating_rule": [s.rule for s in segments],
            "duty_per_segment": duties,
            "pulses_per_segment": pulse_counts,
            "n_pixels": int(coupling.detector.n_pixels),
            "detector_length": float(coupling.detector.length),
            "pixel_size": float(coupling.detector.pixel_size),
            "n_modes": int(coupling.n_modes),
            "total_duration": config.total_duration,
            "tau_total_end": float(ts.tau_total[-1]),
            "seed": config.seed,
            "n_trajectories": config.n_trajectories,
            "comoving_frame": "per-mode rotation referenced to segment start",
        },
    }
    # QND benchmark constants for each mode pair tracked by an E metric
    pair_info = {}
    for spec in config.metrics:
        kind, modes, _ = _parse_metric(spec)
        if kind != "E":
            continue
        j, k = modes
        beta = beta_parameter(coupling.f_bar_sq, j - 1, k - 1)
        pair_info[f"{j},{k}"] = {
            "beta": float(beta),
            "log_negativity_asymptote": float(qnd_entanglement_asymptote(beta)),
        }
    if pair_info:
        meta["derived"]["qnd_pair_benchmarks"] = pair_info
    return meta


def _write_metadata(path: Path, meta: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _single_run(config: ScenarioConfig, out_dir: Path, system=None) -> RunResult:
    out_dir.mkdir(parents=True, exist_ok=True)
    ts, system = run_timeseries(config, system=system)
    gs, basis, coupling = system
    segments = _resolve_segments(config, coupling.omegas)

    files = ["timeseries.csv", "trajectories.csv", "metadata.json"]
    _write_timeseries(out_dir / "timeseries.csv", config, ts)
    _write_trajectories(out_dir / "trajectories.csv", ts)
    files[3:3] = _write_covariances(out_dir, config, ts)
    meta = _metadata(config, ts, coupling, segments)
    _write_metadata(out_dir / "metadata.json", meta)
    return RunResult(out_dir=out_dir, files=files, metadata=meta, timeseries=ts)


def _sweep_gated(config: ScenarioConfig, frac: float) -> ScenarioConfig:
    segs = tuple(
        replace(s, delta_phi_frac=frac) if s.frequencies else s
        for s in config.segments
    )
    return replace(
        config, segments=segs, sweep_delta_phi_frac=(), name=f"{config.name}",
    )


def _sweep_endpoint_row(point: ScenarioConfig, result: RunResult) -> dict:
    ts = result.timeseries
    header, table = _timeseries_table(point, ts)
    row = {"delta_phi_frac": next(
        s.delta_phi_frac for s in point.segments if s.frequencies
    )}
    row["duty"] = float(result.metadata["derived"]["duty_per_segment"][0])
    row["tau_total"] = float(ts.tau_total[-1])
    last = table[-1]
    for col in ("var_x_com_3", "var_p_com_3"):
        row[col] = float(last[header.index(col)])
    for spec in point.metrics:
        col = _metric_column(spec)
        row[col] = float(last[header.index(col)])
    return row


def run(config: ScenarioConfig, out_dir: str | Path, system=None) -> RunResult:
    """Execute a config (or its duty-cycle sweep) and write every output file.

    ``system`` optionally reuses an already-solved (gs, basis, coupling)
    triple, e.g. when the caller has run the same trap before.
    """
    out_dir = Path(out_dir)
    errs = config.validate()
    if errs:
        raise ConfigError(errs)
    if not config.sweep_delta_phi_frac:
        return _single_run(config, out_dir, system=system)

    out_dir.mkdir(parents=True, exist_ok=True)
    if system is None:
        system = _build_system(config)
    subruns: dict[float, RunResult] = {}
    rows = []
    for frac in config.sweep_delta_phi_frac:
        point = _sweep_gated(config, frac)
        sub = _single_run(point, out_dir / f"dphi_{frac:.4f}", system=system)
        subruns[frac] = sub
        rows.append(_sweep_endpoint_row(point, sub))

    header = list(rows[0])
    table = [[row[c] for c in header] for row in rows]
    _write_csv(out_dir / "sweep.csv", "sweep", header, table)
    meta = {
        "schema_version": SCHEMA_VERSION,
        "package_version": PACKAGE_VERSION,
        "config": config.to_dict(),
        "sweep": {
            "parameter": "delta_phi_frac",
            "values": list(config.sweep_delta_phi_frac),
            "subdirectories": [f"dphi_{f:.4f}" for f in config.sweep_delta_phi_frac],
        },
    }
    _write_metadata(out_dir / "metadata.json", meta)
    files = ["sweep.csv", "metadata.json"]
    return RunResult(out_dir=out_dir, files=files, metadata=meta, subruns=subruns)
