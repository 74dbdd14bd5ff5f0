"""Text formats for support fields and JSON run reports.

Support-field files look like::

    # sphere-grid ntheta=64 nphi=128
    0 0 1.0000000000000000
    0 1 1.0000000000000000
    ...

one ``i j value`` line per node in row-major order, values written with 17
significant digits so that a save/load round trip is lossless.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FieldFormatError
from .sphere import ScalarField, SphereGrid, build_grid

HEADER_GRAMMAR = "# sphere-grid ntheta=<int> nphi=<int>"
_HEADER = re.compile(r"^#\s*sphere-grid\s+ntheta=(\d+)\s+nphi=(\d+)\s*$")


def save_field(u: ScalarField, path) -> None:
    g = u.grid
    i, j = np.meshgrid(np.arange(g.n_theta), np.arange(g.n_phi), indexing="ij")
    lines = [f"# sphere-grid ntheta={g.n_theta} nphi={g.n_phi}"]
    lines += [f"{a} {b} {v:.17g}" for a, b, v in zip(i.ravel(), j.ravel(), u.flat)]
    _atomic_write(Path(path), "\n".join(lines) + "\n")


def load_field(path, grid: SphereGrid | None = None) -> ScalarField:
    """Read a support-field file; if ``grid`` is given its size must match the header."""
    path = Path(path)
    with open(path) as fh:
        text = fh.read().splitlines()
    if not text:
        raise FieldFormatError(f"{path}:1: empty file, expected header '{HEADER_GRAMMAR}'")
    m = _HEADER.match(text[0].strip())
    if m is None:
        raise FieldFormatError(f"{path}:1: malformed header {text[0]!r}, expected '{HEADER_GRAMMAR}'")
    nt, nph = int(m.group(1)), int(m.group(2))
    if grid is not None and (grid.n_theta, grid.n_phi) != (nt, nph):
        raise FieldFormatError(
            f"{path}:1: grid {nt}x{nph} in header does not match expected {grid.n_theta}x{grid.n_phi}"
        )
    g = grid if grid is not None else build_grid(nt, nph)
    values = np.full((nt, nph), np.nan)
    for lineno, line in enumerate(text[1:], start=2):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) != 3:
            raise FieldFormatError(f"{path}:{lineno}: expected 'i j value', got {line!r}")
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise FieldFormatError(f"{path}:{lineno}: cannot parse {line!r}") from None
        if not (0 <= i < nt and 0 <= j < nph):
            raise FieldFormatError(f"{path}:{lineno}: node ({i}, {j}) outside {nt}x{nph} grid")
        values[i, j] = v
    missing = np.argwhere(np.isnan(values))
    if missing.size:
        i, j = missing[0]
        raise FieldFormatError(f"{path}: no value for node ({i}, {j}) ({len(missing)} missing)")
    return ScalarField(g, values)


def parse_grid(text: str) -> tuple[int, int]:
    """'64x128' -> (64, 128)."""
    m = re.fullmatch(r"\s*(\d+)\s*[xX]\s*(\d+)\s*", text)
    if m is None:
        raise ValueError(f"grid must look like NxM, got {text!r}")
    return int(m.group(1)), int(m.group(2))


# --------------------------------------------------------------------------
# reports


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


@dataclass
class RunReport:
    spec: dict
    version: str
    wall_time: float = 0.0
    metrics: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)  # check name -> bool
    files: list = field(default_factory=list)
    error: dict | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(self.checks.values())

    def to_dict(self) -> dict:
        return _jsonable(
            {
                "spec": self.spec,
                "version": self.version,
                "wall_time": self.wall_time,
                "metrics": self.metrics,
                "checks": self.checks,
                "passed": self.passed,
                "files": self.files,
                "error": self.error,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write(self, path) -> None:
        _atomic_write(Path(path), self.to_json() + "\n")


def write_dat(path, columns: dict[str, list]) -> None:
    """Whitespace-separated columns with a '#' header, readable by gnuplot."""
    names = list(columns)
    rows = zip(*(columns[n] for n in names))
    body = "\n".join(" ".join(f"{float(v):.17g}" for v in r) for r in rows)
    _atomic_write(Path(path), "# " + " ".join(names) + "\n" + body + "\n")


def write_csv(path, rows: list[dict]) -> None:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.17g}" if isinstance(v, float) else v) for k, v in r.items()})
    _atomic_write(Path(path), buf.getvalue())


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
