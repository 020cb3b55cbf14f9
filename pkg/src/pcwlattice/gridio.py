"""Plain-text grid formats for band, field-density and CP data.

All three share one layout: ``#`` header lines of the form ``# key = value``
followed by whitespace-separated numeric rows. Blank lines are ignored.

band (``format = pcwlattice-band 1``)
    headers ``d_m`` (lattice constant, m) and optional ``r_a`` (free-text atom
    position tag). Rows ``kx_over_pi_d ky_over_pi_d omega_over_2pi_Hz Lm_m``;
    ``k`` is measured from the X point in units of ``pi/d``. Every (kx, ky)
    pair of the rectangular grid must appear exactly once, in any order.

field (``format = pcwlattice-field 1``)
    headers ``d_m`` and ``r_a_m`` (three numbers, m). Rows ``x y z eps E2``
    with positions in m covering a full rectilinear grid.

cp (``format = pcwlattice-cp 1``)
    headers ``shape`` (``nx ny nz``) and ``x_range_m``, ``y_range_m``,
    ``z_range_m`` (first and last sample; axes are uniform). Then
    ``nx*ny*nz`` values in J, row-major with z fastest, any number per line.
"""
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bandcoupling import BandGrid, effective_mode_length
from .errors import GridDataError, GridFormatError
from .potentials import CPGrid

BAND_COLUMNS = ("kx_over_pi_d", "ky_over_pi_d", "omega_over_2pi_Hz", "Lm_m")
FIELD_COLUMNS = ("x", "y", "z", "eps", "E2")
KINDS = ("band", "field", "cp")


@dataclass(frozen=True)
class FieldGrid:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    eps: np.ndarray
    E2: np.ndarray
    r_a: tuple
    d: float

    def mode_length(self):
        return effective_mode_length(self.x, self.y, self.z, self.eps, self.E2, self.r_a, self.d)


def _num(v):
    # shortest repr that round-trips exactly
    return repr(float(v))


def _read(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise GridFormatError(f"cannot read file: {exc.strerror}", path) from exc
    headers = {}
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:]
            if "=" in body:
                key, value = body.split("=", 1)
                headers[key.strip()] = (value.strip(), lineno)
            continue
        try:
            rows.append(([float(tok) for tok in line.split()], lineno))
        except ValueError:
            raise GridFormatError(f"non-numeric entry in {line!r}", path, lineno) from None
    return path, headers, rows


def _header(path, headers, key, count=1, cast=float):
    if key not in headers:
        raise GridFormatError(f"missing header '{key}'", path)
    value, lineno = headers[key]
    parts = value.split()
    if len(parts) != count:
        raise GridFormatError(f"header '{key}' needs {count} value(s)", path, lineno)
    try:
        out = [cast(p) for p in parts]
    except ValueError:
        raise GridFormatError(f"header '{key}' is not numeric", path, lineno) from None
    return out[0] if count == 1 else tuple(out)


def _check_format(path, headers, kind):
    expected = f"pcwlattice-{kind} 1"
    got = headers.get("format", (None, None))
    if got[0] != expected:
        raise GridFormatError(f"expected 'format = {expected}', found {got[0]!r}", path, got[1])


def _table(path, rows, ncol):
    if not rows:
        raise GridFormatError("no data rows", path)
    for values, lineno in rows:
        if len(values) != ncol:
            raise GridFormatError(f"expected {ncol} columns, found {len(values)}", path, lineno)
    return np.array([v for v, _ in rows], dtype=float)


def _tensor(path, coords, columns, last_line=None):
    """Reshape scattered rows onto the tensor grid spanned by ``coords``."""
    axes = [np.unique(c) for c in coords]
    shape = tuple(a.size for a in axes)
    n_expected = math.prod(shape)
    if len(coords[0]) != n_expected:
        raise GridFormatError(
            f"{len(coords[0])} rows do not fill the {' x '.join(map(str, shape))} grid", path, last_line
        )
    index = tuple(np.searchsorted(a, c) for a, c in zip(axes, coords))
    seen = np.zeros(shape, dtype=bool)
    seen[index] = True
    if not seen.all():
        raise GridFormatError("grid has duplicate or missing points", path, last_line)
    out = []
    for col in columns:
        arr = np.empty(shape)
        arr[index] = col
        out.append(arr)
    return axes, out


def read_band_grid(path):
    path, headers, rows = _read(path)
    _check_format(path, headers, "band")
    d = _header(path, headers, "d_m")
    r_a = headers.get("r_a", ("", None))[0]
    data = _table(path, rows, len(BAND_COLUMNS))
    (kx, ky), (omega, lm) = _tensor(
        path, (data[:, 0], data[:, 1]), (data[:, 2], data[:, 3]), rows[-1][1]
    )
    k_unit = math.pi / d
    return BandGrid(kx * k_unit, ky * k_unit, 2.0 * math.pi * omega, lm, d, r_a)


def write_band_grid(path, grid):
    k_unit = math.pi / grid.d
    lines = [
        "# format = pcwlattice-band 1",
        f"# d_m = {_num(grid.d)}",
        f"# r_a = {grid.r_a}",
        "# columns: " + " ".join(BAND_COLUMNS),
    ]
    for i, kx in enumerate(grid.kx):
        for j, ky in enumerate(grid.ky):
            lines.append(
                " ".join(_num(v) for v in (kx / k_unit, ky / k_unit, grid.omega[i, j] / (2.0 * math.pi), grid.L_m[i, j]))
            )
    Path(path).write_text("\n".join(lines) + "\n")


def read_field_grid(path):
    path, headers, rows = _read(path)
    _check_format(path, headers, "field")
    d = _header(path, headers, "d_m")
    r_a = _header(path, headers, "r_a_m", count=3)
    data = _table(path, rows, len(FIELD_COLUMNS))
    axes, (eps, e2) = _tensor(
        path, (data[:, 0], data[:, 1], data[:, 2]), (data[:, 3], data[:, 4]), rows[-1][1]
    )
    if not (np.all(np.isfinite(eps)) and np.all(np.isfinite(e2))):
        raise GridDataError("field samples must be finite")
    return FieldGrid(*axes, eps, e2, r_a, d)


def write_field_grid(path, grid):
    lines = [
        "# format = pcwlattice-field 1",
        f"# d_m = {_num(grid.d)}",
        "# r_a_m = " + " ".join(_num(c) for c in grid.r_a),
        "# columns: " + " ".join(FIELD_COLUMNS),
    ]
    for i, x in enumerate(grid.x):
        for j, y in enumerate(grid.y):
            for k, z in enumerate(grid.z):
                lines.append(" ".join(_num(v) for v in (x, y, z, grid.eps[i, j, k], grid.E2[i, j, k])))
    Path(path).write_text("\n".join(lines) + "\n")


def read_cp_grid(path):
    path, headers, rows = _read(path)
    _check_format(path, headers, "cp")
    shape = _header(path, headers, "shape", count=3, cast=int)
    if min(shape) < 2:
        raise GridFormatError("every axis needs at least 2 samples", path, headers["shape"][1])
    axes = [
        np.linspace(*_header(path, headers, f"{name}_range_m", count=2), n)
        for name, n in zip("xyz", shape)
    ]
    values = [v for vals, _ in rows for v in vals]
    need = math.prod(shape)
    if len(values) != need:
        last = rows[-1][1] if rows else None
        raise GridFormatError(f"expected {need} values, found {len(values)}", path, last)
    return CPGrid(*axes, np.array(values, dtype=float).reshape(shape))


def write_cp_grid(path, grid, per_line=None):
    shape = np.shape(grid.values)
    per_line = shape[2] if per_line is None else per_line
    lines = [
        "# format = pcwlattice-cp 1",
        "# shape = " + " ".join(str(n) for n in shape),
    ]
    for name in "xyz":
        axis = np.asarray(getattr(grid, name))
        step = np.diff(axis)
        if not np.allclose(step, step[0], rtol=1e-9, atol=0.0):
            raise GridDataError(f"CP file format needs a uniform {name} axis")
        lines.append(f"# {name}_range_m = {_num(axis[0])} {_num(axis[-1])}")
    flat = np.asarray(grid.values, dtype=float).ravel()
    for start in range(0, flat.size, per_line):
        lines.append(" ".join(_num(v) for v in flat[start:start + per_line]))
    Path(path).write_text("\n".join(lines) + "\n")


def ingest_grid(path, kind):
    """Read and validate a grid file of the given ``kind`` (band, field or cp)."""
    readers = {"band": read_band_grid, "field": read_field_grid, "cp": read_cp_grid}
    if kind not in readers:
        raise ValueError(f"unknown grid kind {kind!r}; expected one of {KINDS}")
    return readers[kind](path)
