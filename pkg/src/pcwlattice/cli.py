"""``pcwlattice`` command line.

Every option falls back to an environment variable (``PCWLAT_OUT``,
``PCWLAT_THREADS``, ``PCWLAT_FORMAT``); an explicit flag always wins.
Failures print a JSON object on stderr and exit nonzero: 2 for invalid
input (config, grid files), 1 for errors raised during the computation.
"""
import csv
import datetime as dt
import hashlib
import io
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__, config as cfg, gridio, scenarios
from .bandcoupling import fit_curvature
from .constants import CONSTANTS_VERSION, TWO_PI
from .errors import ConfigError, GridDataError, GridFormatError, PcwLatticeError


# ---------------------------------------------------------------- output


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _columns(rows):
    cols = []
    for row in rows:
        for k in row:
            if k not in cols:
                cols.append(k)
    return cols


def table_text(rows, fmt):
    if fmt == "json":
        clean = [{k: _jsonable(v) for k, v in row.items()} for row in rows]
        return json.dumps(clean, indent=1) + "\n"
    buf = io.StringIO()
    cols = _columns(rows)
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for row in rows:
        writer.writerow(_cell(row[c]) if c in row else "" for c in cols)
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if np.isfinite(v) else repr(v)
    return v


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_outputs(result, conf, out_dir, fmt, base_dir):
    """Write tables, summary and manifest; returns the manifest mapping."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    produced = {}
    for name, rows in result.tables.items():
        fname = f"{conf.kind}_{name}.{fmt}"
        (out_dir / fname).write_text(table_text(rows, fmt))
        produced[fname] = _sha256(out_dir / fname)
    summary_name = f"{conf.kind}_summary.json"
    summary = {k: _jsonable(v) for k, v in result.summary.items()}
    (out_dir / summary_name).write_text(json.dumps(summary, indent=1) + "\n")
    produced[summary_name] = _sha256(out_dir / summary_name)
    data_files = {}
    for rel in cfg.referenced_files(conf):
        path = scenarios._resolve(base_dir, rel)
        data_files[str(rel)] = _sha256(path)
    manifest = {
        "kind": conf.kind,
        "config_sha256": cfg.config_hash(conf),
        "data_files_sha256": data_files,
        "constants_version": CONSTANTS_VERSION,
        "tool_version": __version__,
        "timestamp": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
        "outputs_sha256": produced,
        "config": cfg.dump(conf),
    }
    (out_dir / f"{conf.kind}_manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    return manifest


def _fail(exc, code):
    payload = {"error": type(exc).__name__, "message": str(exc)}
    for attr in ("path", "line"):
        val = getattr(exc, attr, None)
        if val is not None:
            payload[attr] = str(val) if attr == "path" else val
    click.echo(json.dumps(payload), err=True)
    sys.exit(code)


def _threads_default():
    return os.cpu_count() or 1


# ---------------------------------------------------------------- commands


@click.group()
@click.version_option(__version__, prog_name="pcwlattice")
def main():
    """Atom lattices near photonic-crystal slabs and their band-edge spin models."""


def _scenario_command(kind, help_text):
    @click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False),
                  help="YAML or JSON scenario file.")
    @click.option("--out", "out_dir", envvar="PCWLAT_OUT", default="out", show_default=True,
                  type=click.Path(file_okay=False), help="Output directory [env PCWLAT_OUT].")
    @click.option("--threads", envvar="PCWLAT_THREADS", type=click.IntRange(min=1), default=None,
                  help="Worker threads (default: available cores) [env PCWLAT_THREADS].")
    @click.option("--format", "fmt", envvar="PCWLAT_FORMAT", type=click.Choice(["csv", "json"]),
                  default="csv", show_default=True, help="Table format [env PCWLAT_FORMAT].")
    def command(config_path, out_dir, threads, fmt):
        try:
            conf = cfg.load(config_path, kind)
        except (ConfigError, GridFormatError, GridDataError) as exc:
            _fail(exc, 2)
        base_dir = Path(config_path).resolve().parent
        try:
            result = scenarios.run(conf, base_dir, threads or _threads_default())
        except (ConfigError, GridFormatError, GridDataError) as exc:
            _fail(exc, 2)
        except (PcwLatticeError, ValueError, ArithmeticError) as exc:
            _fail(exc, 1)
        manifest = write_outputs(result, conf, out_dir, fmt, base_dir)
        click.echo(json.dumps({"outputs": sorted(manifest["outputs_sha256"]), "out": str(out_dir)}))

    command.__doc__ = help_text
    return main.command(name=kind)(command)


_scenario_command("slab", "Guided TE modes and the shortest lattice constant.")
_scenario_command("trap", "Trap scan: minima, harmonic frequencies, depths and line cuts.")
_scenario_command("vacuum-lattice", "Trap scan over an ingested Casimir-Polder grid.")
_scenario_command("coupling", "Coupling scale sweep, kernel curves and zone quadrature versus detuning.")
_scenario_command("budget", "Coherent-cycle budget versus detuning and its optimum.")
_scenario_command("spins", "Master-equation time series for a few spins.")
_scenario_command("sweep", "Cartesian parameter sweep of another scenario, one summary row per point.")


@main.command()
@click.argument("path", type=click.Path(dir_okay=False))
@click.option("--kind", required=True, type=click.Choice(gridio.KINDS))
def ingest(path, kind):
    """Validate a grid file and print a JSON summary."""
    try:
        grid = gridio.ingest_grid(path, kind)
    except (GridFormatError, GridDataError, ConfigError) as exc:
        _fail(exc, 2)
    info = {"kind": kind, "sha256": _sha256(path)}
    if kind == "band":
        info.update({
            "shape": [len(grid.kx), len(grid.ky)],
            "d_m": grid.d,
            "band_edge_2pi_Hz": float(grid.omega.min()) / TWO_PI,
            "A_X_M_m2_per_s": fit_curvature(grid, "X-M").A,
            "A_X_Gamma_m2_per_s": fit_curvature(grid, "X-Gamma").A,
        })
    elif kind == "field":
        info.update({"shape": list(grid.eps.shape), "L_m_m": grid.mode_length()})
    else:
        info.update({
            "shape": list(grid.values.shape),
            "min_value_J": float(grid.values.min()),
            "max_value_J": float(grid.values.max()),
        })
    click.echo(json.dumps(info))


if __name__ == "__main__":  # pragma: no cover
    main()
