"""Command line front end; thin wrapper over :mod:`becstrobe.scenarios`."""

from __future__ import annotations

import sys
from dataclasses import replace
from pathlib import Path

import click

from . import __version__
from .scenarios import ConfigError, load_config, preset_names, presets, run


def _fail_config(err: ConfigError) -> None:
    click.echo("invalid config:", err=True)
    for msg in err.errors:
        click.echo(f"  - {msg}", err=True)
    sys.exit(2)


def _report(result) -> None:
    click.echo(f"wrote {result.out_dir}")
    for name in result.files:
        click.echo(f"  {name}")
    for frac, sub in result.subruns.items():
        click.echo(f"  dphi_{frac:.4f}/ ({len(sub.files)} files)")


@click.group()
@click.version_option(__version__, prog_name="becstrobe")
def main() -> None:
    """Simulate stroboscopically probed condensate density modes."""


@main.command("run")
@click.argument("config", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Output directory; defaults to ./<config name>_out.")
def run_cmd(config: Path, out: Path | None) -> None:
    """Execute the scenario described by a TOML CONFIG file."""
    try:
        cfg = load_config(config)
    except ConfigError as err:
        _fail_config(err)
    _report(run(cfg, out if out is not None else Path(f"{cfg.name}_out")))


@main.command("preset")
@click.argument("name")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Output directory; defaults to ./<preset name>.")
@click.option("--seed", type=int, default=None, help="Override the base seed.")
@click.option("--trajectories", type=int, default=None,
              help="Override the ensemble size.")
def preset_cmd(name: str, out: Path | None, seed: int | None,
               trajectories: int | None) -> None:
    """Execute a named preset scenario."""
    table = presets()
    if name not in table:
        click.echo(f"unknown preset {name!r}; choose from: "
                   + ", ".join(sorted(table)), err=True)
        sys.exit(2)
    cfg = table[name]
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if trajectories is not None:
        cfg = replace(cfg, n_trajectories=trajectories)
    try:
        _report(run(cfg, out if out is not None else Path(name)))
    except ConfigError as err:
        _fail_config(err)


@main.command("list-presets")
def list_presets_cmd() -> None:
    """List the named presets with a one-line summary each."""
    for name in preset_names():
        cfg = presets()[name]
        periods = cfg.total_duration / (2 * 3.141592653589793)
        parts = [f"{len(cfg.segments)} segment(s)", f"{periods:g} trap periods"]
        if cfg.n_trajectories > 1:
            parts.append(f"{cfg.n_trajectories} trajectories")
        if cfg.sweep_delta_phi_frac:
            parts.append(f"sweep over {len(cfg.sweep_delta_phi_frac)} duty cycles")
        click.echo(f"{name:22s} {', '.join(parts)}")


@main.command("validate")
@click.argument("config", type=click.Path(exists=True, dir_okay=False, path_type=Path))
def validate_cmd(config: Path) -> None:
    """Check a TOML CONFIG file and report every problem found."""
    try:
        cfg = load_config(config)
    except ConfigError as err:
        _fail_config(err)
    click.echo(
        f"ok: {cfg.name} ({len(cfg.segments)} segment(s), "
        f"total duration {cfg.total_duration:g})"
    )


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve_cmd(host: str, port: int) -> None:
    """Serve the HTTP API."""
    import uvicorn

    from .api import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
