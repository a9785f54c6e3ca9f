"""Observation ingestion, covariate formulas, and the grid output format.

Grid files start with the magic tag ``RKGRID1`` followed by plain-text
``key=value`` header lines, a blank line, and then the binary payload: for
each named field, ``ny * nx`` 64-bit floats, least significant byte first,
row major with x varying fastest.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "ObservationTable",
    "load_observations",
    "parse_formula",
    "build_covariates",
    "GridOutput",
    "write_grid_output",
    "read_grid_output",
    "GRID_MAGIC",
]

GRID_MAGIC = "RKGRID1"
FORMULA_TERMS = ("1", "x", "y", "x*y")


@dataclass(frozen=True)
class ObservationTable:
    """Parsed observation records: locations, values, extra columns."""

    locs: np.ndarray                 # (n, 2)
    z: np.ndarray                    # (n,)
    covariates: dict[str, np.ndarray]
    source: str = ""

    def __len__(self) -> int:
        return self.locs.shape[0]

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        """(x0, x1, y0, y1) bounding box of the locations."""
        return (float(self.locs[:, 0].min()), float(self.locs[:, 0].max()),
                float(self.locs[:, 1].min()), float(self.locs[:, 1].max()))


def load_observations(path) -> ObservationTable:
    """Read a delimited text file with header row and columns x, y, z.

    Comma or whitespace delimited; any extra numeric columns are returned as
    named covariates.  Duplicate exact locations produce a warning but are
    kept.
    """
    path = str(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as err:
        raise DomainError(f"cannot read observation file: {err}") from err
    if not lines:
        raise DomainError(f"{path}: empty observation file")
    delim = "," if "," in lines[0] else None
    header = [h.strip() for h in lines[0].split(delim)]
    for required in ("x", "y", "z"):
        if required not in header:
            raise DomainError(f"{path}: missing required column '{required}'")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = [p.strip() for p in line.split(delim)]
        if len(parts) != len(header):
            raise DomainError(
                f"{path}:{lineno}: expected {len(header)} fields, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as err:
            raise DomainError(f"{path}:{lineno}: non-numeric cell ({err})") from err
    data = np.asarray(rows, dtype=float)
    cols = {name: data[:, i] for i, name in enumerate(header)}
    locs = np.column_stack([cols["x"], cols["y"]])
    n_unique = np.unique(locs, axis=0).shape[0]
    if n_unique < locs.shape[0]:
        warnings.warn(
            f"{path}: {locs.shape[0] - n_unique} duplicate location(s) kept",
            RuntimeWarning, stacklevel=2)
    covars = {k: v for k, v in cols.items() if k not in ("x", "y", "z")}
    return ObservationTable(locs, cols["z"], covars, source=path)


def parse_formula(formula: str) -> list[str]:
    """Split a covariate formula like ``1+x+y+x*y`` into validated terms."""
    terms = [t.strip() for t in formula.split("+") if t.strip()]
    if not terms:
        raise DomainError(f"empty covariate formula: {formula!r}")
    for t in terms:
        if t not in FORMULA_TERMS:
            raise DomainError(
                f"unknown covariate term {t!r}; supported terms: {', '.join(FORMULA_TERMS)}")
    return terms


def build_covariates(terms, x, y) -> np.ndarray:
    """Design-matrix columns for the given terms at coordinates (x, y)."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    columns = {"1": np.ones_like(x), "x": x, "y": y, "x*y": x * y}
    return np.column_stack([columns[t] for t in terms])


@dataclass(frozen=True)
class GridOutput:
    """A parsed grid file: self-describing header plus named field arrays."""

    header: dict[str, str]
    fields: dict[str, np.ndarray]    # each (ny, nx)

    @property
    def dims(self) -> tuple[int, int]:
        return int(self.header["nx"]), int(self.header["ny"])


def write_grid_output(path, *, nx: int, ny: int, x0: float, y0: float,
                      dx: float, dy: float, fields: dict[str, np.ndarray],
                      extra: dict | None = None) -> None:
    """Write named (ny, nx) fields with a self-describing text header."""
    if not fields:
        raise DomainError("grid output requires at least one field")
    header = {
        "version": "1",
        "nx": str(int(nx)), "ny": str(int(ny)),
        "x0": repr(float(x0)), "y0": repr(float(y0)),
        "dx": repr(float(dx)), "dy": repr(float(dy)),
        "fields": ",".join(fields),
    }
    for key, value in (extra or {}).items():
        header[str(key)] = str(value)
    with open(path, "wb") as fh:
        fh.write((GRID_MAGIC + "\n").encode("ascii"))
        for key, value in header.items():
            fh.write(f"{key}={value}\n".encode("ascii"))
        fh.write(b"\n")
        for name, arr in fields.items():
            arr = np.asarray(arr, dtype=float)
            if arr.shape != (ny, nx):
                raise DomainError(
                    f"field {name!r} has shape {arr.shape}, expected ({ny}, {nx})")
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_grid_output(path) -> GridOutput:
    """Read a grid file back; payload round-trips bitwise."""
    with open(path, "rb") as fh:
        blob = fh.read()
    nl = blob.index(b"\n")
    if blob[:nl].decode("ascii", "replace") != GRID_MAGIC:
        raise DomainError(f"{path}: not a {GRID_MAGIC} file")
    end = blob.index(b"\n\n", nl)
    header: dict[str, str] = {}
    for line in blob[nl + 1:end].decode("ascii").splitlines():
        key, _, value = line.partition("=")
        header[key] = value
    payload = blob[end + 2:]
    nx, ny = int(header["nx"]), int(header["ny"])
    names = header["fields"].split(",")
    expected = nx * ny * 8 * len(names)
    if len(payload) != expected:
        raise DomainError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}")
    fields = {}
    for i, name in enumerate(names):
        start = i * nx * ny * 8
        arr = np.frombuffer(payload[start:start + nx * ny * 8], dtype="<f8")
        fields[name] = arr.reshape(ny, nx).copy()
    return GridOutput(header, fields)
