"""HTTP service exposing presets, validation, and file-backed runs."""

from __future__ import annotations

import tempfile
from dataclasses import replace
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse

from . import __version__
from .scenarios import ConfigError, preset_names, presets, run
from .schemas import (
    PresetSummary,
    RunInfo,
    RunRequest,
    ScenarioModel,
    ValidationReport,
)


def _summary(name: str, cfg) -> PresetSummary:
    return PresetSummary(
        name=name,
        n_segments=len(cfg.segments),
        total_duration=cfg.total_duration,
        n_trajectories=cfg.n_trajectories,
        sweep_points=len(cfg.sweep_delta_phi_frac),
    )


def create_app(runs_dir: str | Path | None = None) -> FastAPI:
    """Build the service; ``runs_dir`` holds one subdirectory per run."""
    app = FastAPI(title="becstrobe", version=__version__)
    base = Path(runs_dir) if runs_dir is not None else Path(tempfile.mkdtemp())
    base.mkdir(parents=True, exist_ok=True)
    registry: dict[str, RunInfo] = {}

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.get("/presets", response_model=list[PresetSummary])
    def list_presets():
        table = presets()
        return [_summary(name, table[name]) for name in preset_names()]

    @app.get("/presets/{name}")
    def get_preset(name: str) -> dict:
        table = presets()
        if name not in table:
            raise HTTPException(status_code=404, detail=f"unknown preset {name!r}")
        return table[name].to_dict()

    @app.post("/validate", response_model=ValidationReport)
    def validate(model: ScenarioModel):
        try:
            errors = model.to_config().validate()
        except ValueError as exc:
            return ValidationReport(valid=False, errors=[str(exc)])
        return ValidationReport(valid=not errors, errors=errors)

    @app.post("/runs", response_model=RunInfo, status_code=201)
    def create_run(request: RunRequest):
        if (request.preset is None) == (request.config is None):
            raise HTTPException(
                status_code=400, detail="provide exactly one of preset or config"
            )
        if request.preset is not None:
            table = presets()
            if request.preset not in table:
                raise HTTPException(
                    status_code=404, detail=f"unknown preset {request.preset!r}"
                )
            cfg = table[request.preset]
        else:
            try:
                cfg = request.config.to_config()
            except ValueError as exc:
                raise HTTPException(status_code=422, detail=[str(exc)])
        if request.seed is not None:
            cfg = replace(cfg, seed=request.seed)
        if request.trajectories is not None:
            cfg = replace(cfg, n_trajectories=request.trajectories)

        run_id = f"{len(registry):04d}-{cfg.name}"
        try:
            result = run(cfg, base / run_id)
        except ConfigError as exc:
            raise HTTPException(status_code=422, detail=exc.errors)
        info = RunInfo(
            id=run_id,
            name=cfg.name,
            files=result.files,
            subdirectories=[f"dphi_{f:.4f}" for f in result.subruns],
        )
        registry[run_id] = info
        return info

    @app.get("/runs", response_model=list[RunInfo])
    def list_runs():
        return [registry[k] for k in sorted(registry)]

    @app.get("/runs/{run_id}", response_model=RunInfo)
    def get_run(run_id: str):
        if run_id not in registry:
            raise HTTPException(status_code=404, detail=f"unknown run {run_id!r}")
        return registry[run_id]

    @app.get("/runs/{run_id}/files/{name:path}")
    def get_file(run_id: str, name: str):
        if run_id not in registry:
            raise HTTPException(status_code=404, detail=f"unknown run {run_id!r}")
        root = (base / run_id).resolve()
        target = (root / name).resolve()
        # containment check: reject traversal out of the run directory
        if root not in target.parents and target != root:
            raise HTTPException(status_code=400, detail="invalid file name")
        if not target.is_file():
            raise HTTPException(status_code=404, detail=f"no file {name!r}")
        media = "application/json" if target.suffix == ".json" else "text/csv"
        return FileResponse(target, media_type=media)

    return app
