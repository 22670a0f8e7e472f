"""Pydantic models mirroring the scenario config for the HTTP API."""

from __future__ import annotations

from pydantic import BaseModel, Field

from .optics import DEFAULT_RESOLUTION
from .scenarios import ScenarioConfig, SegmentSpec

TWO_PI = 6.283185307179586


class SegmentModel(BaseModel):
    duration: float | None = None
    duration_periods: float | None = Field(
        default=None, description="Duration in trap periods; alternative to duration."
    )
    kappa_sq: float = 0.0
    frequencies: list[str | float] = []
    delta_phi_frac: float = 0.0
    rule: str = "intersection"
    feedback_mode: int | None = None

    def to_spec(self) -> SegmentSpec:
        if (self.duration is None) == (self.duration_periods is None):
            raise ValueError("set exactly one of duration or duration_periods")
        duration = (
            self.duration if self.duration is not None
            else self.duration_periods * TWO_PI
        )
        return SegmentSpec(
            duration=duration,
            kappa_sq=self.kappa_sq,
            frequencies=tuple(self.frequencies),
            delta_phi_frac=self.delta_phi_frac,
            rule=self.rule,
            feedback_mode=self.feedback_mode,
        )


class ScenarioModel(BaseModel):
    name: str = "custom"
    n_atoms: float = 1000.0
    omega_perp_ratio: float = 100.0
    mu_target: float | None = 2.0
    g1d: float | None = None
    grid_x_max: float = 8.0
    grid_n_points: int = 1024
    kernel_resolution: float = DEFAULT_RESOLUTION
    detector_length: float = 10.0
    detector_pixel_size: float = 0.1
    n_modes: int = 10
    segments: list[SegmentModel] = []
    n_trajectories: int = 1
    seed: int = 0
    keep_trajectories: int = 16
    samples_per_period: int = 8
    metrics: list[str] = []
    covariance_times: list[float] = []
    sweep_delta_phi_frac: list[float] = []

    def to_config(self) -> ScenarioConfig:
        # interacting by default; an explicit g1d supersedes the mu default
        mu = self.mu_target
        if self.g1d is not None and "mu_target" not in self.model_fields_set:
            mu = None
        return ScenarioConfig(
            name=self.name,
            n_atoms=self.n_atoms,
            omega_perp_ratio=self.omega_perp_ratio,
            mu_target=mu,
            g1d=self.g1d,
            grid_x_max=self.grid_x_max,
            grid_n_points=self.grid_n_points,
            kernel_resolution=self.kernel_resolution,
            detector_length=self.detector_length,
            detector_pixel_size=self.detector_pixel_size,
            n_modes=self.n_modes,
            segments=tuple(s.to_spec() for s in self.segments),
            n_trajectories=self.n_trajectories,
            seed=self.seed,
            keep_trajectories=self.keep_trajectories,
            samples_per_period=self.samples_per_period,
            metrics=tuple(self.metrics),
            covariance_times=tuple(self.covariance_times),
            sweep_delta_phi_frac=tuple(self.sweep_delta_phi_frac),
        )


class RunRequest(BaseModel):
    preset: str | None = None
    config: ScenarioModel | None = None
    seed: int | None = None
    trajectories: int | None = None


class ValidationReport(BaseModel):
    valid: bool
    errors: list[str] = []


class PresetSummary(BaseModel):
    name: str
    n_segments: int
    total_duration: float
    n_trajectories: int
    sweep_points: int


class RunInfo(BaseModel):
    id: str
    name: str
    files: list[str]
    subdirectories: list[str] = []
