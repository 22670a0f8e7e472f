"""Conditional Gaussian dynamics under pulsed dispersive probing.

The covariance matrix follows the deterministic Riccati flow

    dA/dt = E - D A - A D^T - A M A,

with the drive E and backaction M present only while the probe is on; the
conditional means follow dR = -D R dt + A m dW.  Between pulses only the
harmonic rotation acts and both moments are advanced by the exact rotation
propagator, so long idle stretches cost one matrix product and introduce no
integration error.  During pulses the covariance is advanced by classical
Runge-Kutta and the means by the exact drift propagator plus the Ito noise
kick evaluated at the start of each step.

Conventions: hbar = m = omega_x = 1, layout [x1, p1, x2, p2, ...], vacuum
A = I/2.  Feedback modifies only the means drift; the conditional covariance
of a linear feedback scheme is unaffected by record-dependent displacements.
"""

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .metrics import symplectic_eigenvalues
from .optics import CouplingModel

PHYSICALITY_TOL = 1e-6
MAX_STEP_HALVINGS = 8
_EDGE_EPS = 1e-12


def drift_matrix(omegas: np.ndarray) -> np.ndarray:
    n = len(omegas)
    d = np.zeros((2 * n, 2 * n))
    for j, w in enumerate(omegas):
        d[2 * j, 2 * j + 1] = -w
        d[2 * j + 1, 2 * j] = w
    return d


def rotation(omegas: np.ndarray, dt: float) -> np.ndarray:
    """Exact free propagator exp(-D dt): x(t) = x0 cos wt + p0 sin wt."""
    n = len(omegas)
    g = np.zeros((2 * n, 2 * n))
    c, s = np.cos(omegas * dt), np.sin(omegas * dt)
    for j in range(n):
        g[2 * j, 2 * j] = c[j]
        g[2 * j, 2 * j + 1] = s[j]
        g[2 * j + 1, 2 * j] = -s[j]
        g[2 * j + 1, 2 * j + 1] = c[j]
    return g


def feedback_propagator(omega: float, dt: float) -> np.ndarray:
    """Critically damped 2x2 block exp(-D_fb dt), D_fb = [[0,-w],[w,2w]]."""
    wt = omega * dt
    return np.exp(-wt) * np.array([[1.0 + wt, wt], [-wt, 1.0 - wt]])


def means_propagator(omegas: np.ndarray, dt: float,
                     feedback_mode: int | None) -> np.ndarray:
    g = rotation(omegas, dt)
    if feedback_mode is not None:
        j = feedback_mode
        g[2 * j:2 * j + 2, 2 * j:2 * j + 2] = feedback_propagator(
            omegas[j], dt)
    return g


def rotate_to_comoving(r: np.ndarray, a: np.ndarray, omegas: np.ndarray,
                       t: float):
    """Undo the free rotation accumulated since the frame reference time."""
    g = rotation(omegas, t)
    return g.T @ r, g.T @ a @ g


# -------------------------------------------------------------- schedule ---

def _pulse_train(freq: float, delta_phi: float, horizon: float):
    half = delta_phi / (2.0 * freq)
    period = 2.0 * np.pi / freq
    train = []
    for l in range(int(np.floor((horizon + half) / period)) + 1):
        start = max(0.0, l * period - half)
        end = min(horizon, l * period + half)
        if end > start + _EDGE_EPS:
            train.append((start, end))
    return train


def _intersect(a, b):
    out, i, j = [], 0, 0
    while i < len(a) and j < len(b):
        start = max(a[i][0], b[j][0])
        end = min(a[i][1], b[j][1])
        if end > start + _EDGE_EPS:
            out.append((start, end))
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return out


def _union(trains):
    merged = []
    for start, end in sorted(iv for train in trains for iv in train):
        if merged and start <= merged[-1][1] + _EDGE_EPS:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return [tuple(iv) for iv in merged]


@dataclass(frozen=True)
class StroboSchedule:
    """Probe on/off intervals over one protocol segment, times from 0."""

    frequencies: tuple[float, ...]
    delta_phi: float
    horizon: float
    rule: str
    pulses: np.ndarray  # (n_pulses, 2)

    @property
    def duty(self) -> float:
        if self.horizon == 0.0 or len(self.pulses) == 0:
            return 0.0
        return float(np.sum(self.pulses[:, 1] - self.pulses[:, 0])
                     / self.horizon)

    @property
    def total_on_time(self) -> float:
        if len(self.pulses) == 0:
            return 0.0
        return float(np.sum(self.pulses[:, 1] - self.pulses[:, 0]))

    def accumulated_probe_time(self, t) -> np.ndarray:
        """Piecewise-linear tau_T(t): probe exposure accumulated by time t."""
        if len(self.pulses) == 0:
            return np.zeros_like(np.asarray(t, dtype=float))
        knots = [0.0]
        values = [0.0]
        acc = 0.0
        for start, end in self.pulses:
            knots.extend((start, end))
            values.append(acc)
            acc += end - start
            values.append(acc)
        knots.append(self.horizon)
        values.append(acc)
        return np.interp(np.asarray(t, dtype=float), knots, values)

    def is_on(self, t: float) -> bool:
        if len(self.pulses) == 0:
            return False
        i = np.searchsorted(self.pulses[:, 0], t + _EDGE_EPS) - 1
        return i >= 0 and t <= self.pulses[i, 1] + _EDGE_EPS

    def pulse_centers(self) -> np.ndarray:
        """Nominal zero-phase instants, one per pulse.

        For a single gating frequency these are the multiples of its period
        (the first pulse is the half-window around t = 0); otherwise the
        interval midpoints are used.
        """
        if len(self.pulses) == 0:
            return np.array([])
        if len(self.frequencies) == 1:
            period = 2.0 * np.pi / self.frequencies[0]
            return np.round(self.pulses.mean(axis=1) / period) * period
        return self.pulses.mean(axis=1)


def build_schedule(frequencies: Sequence[float], delta_phi: float,
                   horizon: float, rule: str = "intersection"
                   ) -> StroboSchedule:
    """Pulse windows where every gating phase is within delta_phi/2 of zero.

    Empty ``frequencies`` means continuous probing.  The union rule (any
    phase in window) is available as an alternative reading of the
    multi-frequency gate.
    """
    frequencies = tuple(float(f) for f in frequencies)
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if rule not in ("intersection", "union"):
        raise ValueError("rule must be 'intersection' or 'union'")
    if not frequencies:
        pulses = np.array([[0.0, horizon]])
        return StroboSchedule(frequencies, 0.0, horizon, rule, pulses)
    if any(f <= 0 for f in frequencies):
        raise ValueError("gating frequencies must be positive")
    if not 0.0 < delta_phi < 2.0 * np.pi:
        raise ValueError("delta_phi must lie strictly between 0 and 2 pi")

    trains = [_pulse_train(f, delta_phi, horizon) for f in frequencies]
    if rule == "union":
        merged = _union(trains)
    else:
        merged = trains[0]
        for train in trains[1:]:
            merged = _intersect(merged, train)
    pulses = np.array(merged).reshape(-1, 2)
    schedule = StroboSchedule(frequencies, delta_phi, horizon, rule, pulses)
    if len(frequencies) > 1 and len(pulses) <= 1:
        warnings.warn(
            "gating frequencies share no pulse beyond t=0 over this "
            f"horizon; duty cycle {schedule.duty:.3e}", stacklevel=2)
    return schedule


# ------------------------------------------------------------- stepping ---

@dataclass
class GaussianState:
    """First and second moments at time t; r may hold an ensemble."""

    t: float
    r: np.ndarray  # (2n,) or (2n, n_traj)
    a: np.ndarray  # (2n, 2n)

    @classmethod
    def vacuum(cls, n_modes: int, n_trajectories: int = 1):
        return cls(t=0.0,
                   r=np.zeros((2 * n_modes, n_trajectories)),
                   a=np.eye(2 * n_modes) * 0.5)


def _riccati_rhs(a, d, drive, backaction):
    rotated = d @ a
    return drive - rotated - rotated.T - a @ backaction @ a


def _rk4(a, d, drive, backaction, dt):
    k1 = _riccati_rhs(a, d, drive, backaction)
    k2 = _riccati_rhs(a + 0.5 * dt * k1, d, drive, backaction)
    k3 = _riccati_rhs(a + 0.5 * dt * k2, d, drive, backaction)
    k4 = _riccati_rhs(a + dt * k3, d, drive, backaction)
    out = a + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return 0.5 * (out + out.T)


def _advance_covariance(a, d, drive, backaction, dt, t_label):
    """RK4 step with physicality guard; halves the substep on violation."""
    for halving in range(MAX_STEP_HALVINGS + 1):
        substeps = 2 ** halving
        h = dt / substeps
        candidate = a
        for _ in range(substeps):
            candidate = _rk4(candidate, d, drive, backaction, h)
        nu_min = symplectic_eigenvalues(candidate).min()
        if nu_min >= 0.5 - PHYSICALITY_TOL:
            return candidate
    raise RuntimeError(
        f"covariance step failed physicality at t={t_label:.6f}: "
        f"min symplectic eigenvalue {nu_min:.3e} after "
        f"{MAX_STEP_HALVINGS} halvings of dt={dt:.3e}")


def step_covariance(a: np.ndarray, coupling: CouplingModel, probe_on: bool,
                    dt: float) -> np.ndarray:
    """Single deterministic update of the covariance matrix.

    Off-pulse the flow is pure rotation, applied exactly (any dt).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if not probe_on:
        g = rotation(coupling.omegas, dt)
        return g @ a @ g.T
    d = drift_matrix(coupling.omegas)
    return _advance_covariance(a, d, coupling.drive_matrix,
                               coupling.backaction_matrix, dt, t_label=0.0)


def step_means(r: np.ndarray, a: np.ndarray, coupling: CouplingModel,
               probe_on: bool, dt: float, rng: np.random.Generator,
               feedback_mode: int | None = None) -> np.ndarray:
    """Stochastic update of the conditional means (Ito convention).

    The drift is applied through the exact propagator; the noise kick
    A m dW uses the covariance at the start of the step and one Wiener
    increment per pixel, shared by no one (fresh draws each call).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    g = means_propagator(coupling.omegas, dt, feedback_mode)
    out = g @ r
    if probe_on:
        columns = 1 if r.ndim == 1 else r.shape[1]
        dw = rng.standard_normal((coupling.detector.n_pixels, columns))
        dw *= np.sqrt(dt)
        kick = a @ coupling.measurement_matrix @ dw
        out = out + (kick[:, 0] if r.ndim == 1 else kick)
    return out


# ------------------------------------------------------------- protocols ---

@dataclass(frozen=True)
class Segment:
    """One leg of a piecewise protocol; times are relative to its start.

    Empty ``frequencies`` probes continuously.  ``delta_phi`` is the gate
    window in radians.  ``feedback_mode`` indexes the mode whose means
    drift is critically damped while this segment runs.
    """

    duration: float
    kappa_sq: float
    frequencies: tuple[float, ...] = ()
    delta_phi: float = 0.0
    rule: str = "intersection"
    feedback_mode: int | None = None

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("segment duration must be positive")
        if self.kappa_sq < 0:
            raise ValueError("kappa_sq must be non-negative")


@dataclass
class TimeSeries:
    """Sampled moments and schedule bookkeeping for one simulation run.

    Covariances are stored in both the lab frame and the comoving frame
    referenced to the start of the segment each sample belongs to.  Means
    are kept for the first ``means.shape[2]`` trajectories; the ensemble
    standard deviation covers all of them.
    """

    t: np.ndarray
    tau_total: np.ndarray
    probe_on: np.ndarray
    segment_index: np.ndarray
    covariances: np.ndarray
    covariances_comoving: np.ndarray
    means: np.ndarray
    means_comoving: np.ndarray
    ensemble_std: np.ndarray
    ensemble_std_comoving: np.ndarray
    n_trajectories: int
    seed: int
    schedules: list = field(default_factory=list)
    final_state: GaussianState | None = None

    def var_x(self, comoving: bool = True) -> np.ndarray:
        stack = self.covariances_comoving if comoving else self.covariances
        return stack[:, 0::2, 0::2].diagonal(axis1=1, axis2=2)

    def var_p(self, comoving: bool = True) -> np.ndarray:
        stack = self.covariances_comoving if comoving else self.covariances
        return stack[:, 1::2, 1::2].diagonal(axis1=1, axis2=2)

    def min_symplectic_eigenvalue(self) -> float:
        return min(symplectic_eigenvalues(a).min() for a in self.covariances)


def _segment_dt(coupling: CouplingModel, schedule: StroboSchedule) -> float:
    dt = 2.0 * np.pi / (200.0 * coupling.omegas.max())
    nu_max = coupling.nu.max() if coupling.kappa_sq > 0 else 0.0
    if nu_max > 0:
        dt = min(dt, 0.05 / nu_max)
    if len(schedule.frequencies) > 0 and len(schedule.pulses) > 0:
        shortest = float(np.min(schedule.pulses[:, 1] - schedule.pulses[:, 0]))
        dt = min(dt, shortest / 20.0)
    return dt


def simulate(coupling: CouplingModel, segments: Sequence[Segment], *,
             n_trajectories: int = 1, seed: int = 0,
             samples_per_period: int = 8, keep_trajectories: int = 16,
             extra_sample_times: Sequence[float] | None = None,
             initial_means: np.ndarray | None = None) -> TimeSeries:
    """Run a piecewise protocol from vacuum and sample moments along the way.

    Samples fall on a uniform grid (``samples_per_period`` per trap period),
    on every pulse center, and on segment boundaries.  The covariance flow
    is deterministic and shared by all trajectories; only the means consume
    randomness.  ``initial_means`` displaces every trajectory at t=0 (the
    covariance still starts from vacuum).
    """
    if n_trajectories < 1:
        raise ValueError("need at least one trajectory")
    n = coupling.n_modes
    omegas = coupling.omegas
    if any(s.feedback_mode is not None and not 0 <= s.feedback_mode < n
           for s in segments):
        raise ValueError("feedback mode out of range")

    rng = np.random.default_rng(seed)
    state = GaussianState.vacuum(n, n_trajectories)
    if initial_means is not None:
        r0 = np.asarray(initial_means, dtype=float)
        if r0.shape != (2 * n,):
            raise ValueError(f"initial_means must have shape ({2 * n},)")
        state.r = state.r + r0[:, None]
    d = drift_matrix(omegas)
    keep = min(keep_trajectories, n_trajectories)
    extra = np.asarray(extra_sample_times, dtype=float) \
        if extra_sample_times is not None else np.array([])

    rows = []  # (t, tau, on, seg, a_lab, a_com, r_lab, r_com, std, std_com)
    schedules = []
    tau_now = 0.0

    def record(t_abs, t_seg_start, on, seg_idx):
        g_ref = rotation(omegas, t_abs - t_seg_start)
        a_com = g_ref.T @ state.a @ g_ref
        r_com = g_ref.T @ state.r
        ddof = 1 if n_trajectories > 1 else 0
        std = state.r.std(axis=1, ddof=ddof) if n_trajectories > 1 \
            else np.zeros(2 * n)
        std_com = r_com.std(axis=1, ddof=ddof) if n_trajectories > 1 \
            else np.zeros(2 * n)
        rows.append((t_abs, tau_now, on, seg_idx, state.a.copy(), a_com,
                     state.r[:, :keep].copy(), r_com[:, :keep], std, std_com))

    record(0.0, 0.0, False, 0)
    t0 = 0.0
    for seg_idx, seg in enumerate(segments):
        schedule = build_schedule(seg.frequencies, seg.delta_phi,
                                  seg.duration, seg.rule)
        schedules.append(schedule)
        cm = coupling.with_kappa_sq(seg.kappa_sq)
        drive, backaction = cm.drive_matrix, cm.backaction_matrix
        m = cm.measurement_matrix
        dt_target = _segment_dt(cm, schedule)

        sample_rel = np.arange(0.0, seg.duration + _EDGE_EPS,
                               2.0 * np.pi / samples_per_period)
        in_seg = (extra > t0 + _EDGE_EPS) & (extra <= t0 + seg.duration)
        sample_rel = np.concatenate([
            sample_rel, schedule.pulse_centers(), [seg.duration],
            extra[in_seg] - t0])
        sample_rel = np.unique(np.clip(sample_rel, 0.0, seg.duration))

        events = np.unique(np.concatenate([
            sample_rel, schedule.pulses.ravel(), [0.0, seg.duration]]))
        events = events[(events >= 0.0) & (events <= seg.duration)]
        # collapse edges closer than the float tolerance
        keep_mask = np.ones(len(events), dtype=bool)
        keep_mask[1:] = np.diff(events) > _EDGE_EPS
        events = events[keep_mask]
        pos = np.searchsorted(sample_rel, events)
        lo = np.clip(pos - 1, 0, len(sample_rel) - 1)
        hi = np.clip(pos, 0, len(sample_rel) - 1)
        is_sample = ((np.abs(sample_rel[lo] - events) <= 1e-9)
                     | (np.abs(sample_rel[hi] - events) <= 1e-9))

        for k in range(len(events) - 1):
            ta, tb = events[k], events[k + 1]
            span = tb - ta
            # kappa = 0 makes the probe a no-op; exact rotation is both
            # faster and free of integrator truncation error
            mid_on = schedule.is_on(0.5 * (ta + tb)) and seg.kappa_sq > 0.0
            if not mid_on:
                g_rot = rotation(omegas, span)
                state.a = g_rot @ state.a @ g_rot.T
                state.r = means_propagator(
                    omegas, span, seg.feedback_mode) @ state.r
            else:
                steps = max(1, int(np.ceil(span / dt_target)))
                h = span / steps
                g_mean = means_propagator(omegas, h, seg.feedback_mode)
                sqrt_h = np.sqrt(h)
                for _ in range(steps):
                    dw = rng.standard_normal(
                        (cm.detector.n_pixels, n_trajectories)) * sqrt_h
                    kick = state.a @ m @ dw
                    state.r = g_mean @ state.r + kick
                    state.a = _advance_covariance(
                        state.a, d, drive, backaction, h, t_label=t0 + ta)
                tau_now += span
            state.t = t0 + tb
            if is_sample[k + 1]:
                record(t0 + tb, t0,
                       schedule.is_on(tb) and seg.kappa_sq > 0.0, seg_idx)
        t0 += seg.duration

    ts = TimeSeries(
        t=np.array([row[0] for row in rows]),
        tau_total=np.array([row[1] for row in rows]),
        probe_on=np.array([row[2] for row in rows], dtype=bool),
        segment_index=np.array([row[3] for row in rows], dtype=int),
        covariances=np.stack([row[4] for row in rows]),
        covariances_comoving=np.stack([row[5] for row in rows]),
        means=np.stack([row[6] for row in rows]),
        means_comoving=np.stack([row[7] for row in rows]),
        ensemble_std=np.stack([row[8] for row in rows]),
        ensemble_std_comoving=np.stack([row[9] for row in rows]),
        n_trajectories=n_trajectories,
        seed=seed,
        schedules=schedules,
        final_state=state,
    )
    return ts
