"""Parameter sweeps, the published 30-row tables, and CSV/JSON surface export."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Sequence

from .bounds import (
    SampleSummary,
    TailBounds,
    lower_tail_bounds,
    make_quality_spec,
    upper_tail_bounds,
)
from .errors import ConvergenceError, DomainError

TAILS = ("lower_limit", "upper_limit")
SURFACE_HEADER = ("mean", "sd", "expected", "lower", "upper", "underflow")
TABLE_HEADER = ("mean", "sd", "tail", "expected", "lower", "upper", "underflow")
UNDERFLOW_TEXT = "0.000000e0"

# (n, e_max) for each published table; assigned value 100, gamma 0.95
PAPER_TABLES = {2: (20, 0.10), 3: (40, 0.10), 4: (20, 0.20), 5: (40, 0.20)}


@dataclass(frozen=True)
class GridSpec:
    mean_start: float
    mean_stop: float
    mean_step: float
    sd_start: float
    sd_stop: float
    sd_step: float
    n: int
    true_value: float = 100.0
    e_max: float = 0.10
    gamma: float = 0.95

    def __post_init__(self):
        for axis in ("mean", "sd"):
            start, stop, step = (getattr(self, f"{axis}_{k}") for k in ("start", "stop", "step"))
            if not (step > 0):
                raise DomainError(f"{axis}_step must be > 0, got {step!r}")
            if not (start <= stop):
                raise DomainError(f"{axis}_start must not exceed {axis}_stop")
        if not (self.sd_start > 0):
            raise DomainError("sd axis must be positive")
        if not (0.0 < self.gamma < 1.0):
            raise DomainError(f"gamma must lie in (0, 1), got {self.gamma!r}")
        make_quality_spec(self.true_value, self.e_max)
        SampleSummary(self.n, self.mean_start, self.sd_start)

    def means(self) -> list[float]:
        return axis_points(self.mean_start, self.mean_stop, self.mean_step)

    def sds(self) -> list[float]:
        return axis_points(self.sd_start, self.sd_stop, self.sd_step)

    def __len__(self):
        return len(self.means()) * len(self.sds())


def axis_points(start: float, stop: float, step: float) -> list[float]:
    """Lattice ``start + i*step`` up to ``stop``, tolerant to step rounding."""
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 10) for i in range(count)]


TABLE1_PRESETS = {
    f"table1-col{i}": GridSpec(100.0, 106.0, 0.1, 0.1, 6.0, 0.1, n=n, e_max=e)
    for i, (n, e) in enumerate(PAPER_TABLES.values(), start=1)
}


@dataclass(frozen=True)
class TableRow:
    """One lattice point; a tail is None when its solve failed (see ``errors``)."""

    mean: float
    sd: float
    lower_limit: TailBounds | None
    upper_limit: TailBounds | None
    errors: tuple[str, ...] = ()

    def tail(self, name: str) -> TailBounds | None:
        if name not in TAILS:
            raise DomainError(f"tail must be one of {TAILS}, got {name!r}")
        return getattr(self, name)

    def as_record(self) -> dict:
        rec = {"mean": self.mean, "sd": self.sd}
        for name in TAILS:
            tb = self.tail(name)
            rec[name] = None if tb is None else {
                "expected": tb.expected,
                "lower": tb.lower,
                "upper": tb.upper,
                "delta_hat_upper": tb.delta_hat_upper,
                "delta_hat_lower": tb.delta_hat_lower,
                "underflow": list(tb.underflow),
            }
        rec["errors"] = list(self.errors)
        return rec


def evaluate_point(mean: float, sd: float, n: int, true_value: float, e_max: float,
                   gamma: float) -> TableRow:
    spec = make_quality_spec(true_value, e_max)
    sample = SampleSummary(n, mean, sd)
    tails, errors = {}, []
    for name, fn, limit in (("lower_limit", lower_tail_bounds, spec.lsl),
                            ("upper_limit", upper_tail_bounds, spec.usl)):
        try:
            tails[name] = fn(sample, limit, gamma)
        except ConvergenceError as exc:
            tails[name] = None
            errors.append(f"{name}: {exc}")
    return TableRow(mean, sd, tails["lower_limit"], tails["upper_limit"], tuple(errors))


def _eval_chunk(args):
    points, n, c, e, g = args
    return [evaluate_point(m, s, n, c, e, g) for m, s in points]


def sweep(grid: GridSpec, jobs: int = 1) -> list[TableRow]:
    """Evaluate every lattice point, mean-major. ``jobs > 1`` uses processes;
    the rows are identical either way."""
    points = [(m, s) for m in grid.means() for s in grid.sds()]
    args = (grid.n, grid.true_value, grid.e_max, grid.gamma)
    if jobs <= 1 or len(points) < 2:
        return _eval_chunk((points, *args))
    size = max(1, math.ceil(len(points) / (4 * jobs)))
    chunks = [(points[i:i + size], *args) for i in range(0, len(points), size)]
    rows: list[TableRow] = []
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for part in pool.map(_eval_chunk, chunks):
            rows.extend(part)
    return rows


def paper_table(which: int, gamma: float = 0.95, jobs: int = 1) -> list[TableRow]:
    """The 30-row coarse grid (means 100..105, sd 1..5) behind one published table."""
    if which not in PAPER_TABLES:
        raise DomainError(f"which must be one of {sorted(PAPER_TABLES)}, got {which!r}")
    n, e_max = PAPER_TABLES[which]
    grid = GridSpec(100.0, 105.0, 1.0, 1.0, 5.0, 1.0, n=n, true_value=100.0,
                    e_max=e_max, gamma=gamma)
    return sweep(grid, jobs=jobs)


# -- serialization ---------------------------------------------------------

def format_value(x: float | None, underflow: bool = False) -> str:
    if underflow:
        return UNDERFLOW_TEXT
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return f"{x:.6e}"


def parse_number(text: str) -> float:
    """Parse a decimal written with either a point or a comma."""
    return float(text.strip().replace(",", "."))


def _tail_fields(tb: TailBounds | None) -> list[str]:
    if tb is None:
        return ["nan", "nan", "nan", "0"]
    flags = set(tb.underflow)
    cells = [format_value(getattr(tb, f), f in flags) for f in ("expected", "lower", "upper")]
    return cells + ["1" if flags else "0"]


def _open_sink(destination):
    if isinstance(destination, (str, os.PathLike)):
        try:
            return open(destination, "w", encoding="utf-8", newline=""), True
        except OSError as exc:
            raise OSError(f"cannot write to {os.fspath(destination)!r}: {exc}") from exc
    return destination, False


def export_surface(rows: Sequence[TableRow], tail: str, destination) -> None:
    """Write ``mean,sd,expected,lower,upper,underflow`` for one tail.

    ``destination`` is a path or a writable text stream.
    """
    if not rows:
        raise DomainError("cannot export an empty set of rows")
    if tail not in TAILS:
        raise DomainError(f"tail must be one of {TAILS}, got {tail!r}")
    sink, owned = _open_sink(destination)
    name = getattr(sink, "name", repr(sink))
    try:
        writer = csv.writer(sink, lineterminator="\n")
        writer.writerow(SURFACE_HEADER)
        for row in rows:
            writer.writerow([format_value(row.mean), format_value(row.sd),
                             *_tail_fields(row.tail(tail))])
    except OSError as exc:
        raise OSError(f"failed writing surface to {name}: {exc}") from exc
    finally:
        if owned:
            sink.close()


def write_table_csv(rows: Sequence[TableRow], destination) -> None:
    """Both tails, one line per (point, tail), in the golden-file layout."""
    sink, owned = _open_sink(destination)
    try:
        writer = csv.writer(sink, lineterminator="\n")
        writer.writerow(TABLE_HEADER)
        for row in rows:
            for name in TAILS:
                writer.writerow([f"{row.mean:.2f}", f"{row.sd:.2f}", name,
                                 *_tail_fields(row.tail(name))])
    finally:
        if owned:
            sink.close()


def rows_to_json(rows: Iterable[TableRow]) -> str:
    return json.dumps([r.as_record() for r in rows], indent=1)


def read_surface(source) -> list[dict]:
    """Parse a file written by ``export_surface`` back into dict records."""
    text = source.read() if hasattr(source, "read") else open(source, encoding="utf-8").read()
    reader = csv.DictReader(io.StringIO(text))
    out = []
    for rec in reader:
        out.append({k: (int(v) if k == "underflow" else parse_number(v)) for k, v in rec.items()})
    return out


# -- golden data -----------------------------------------------------------

GoldenKey = tuple  # (mean, sd, tail)


def load_golden(source=None, which: int | None = None) -> dict[GoldenKey, tuple[float, float, float]]:
    """Load a golden table keyed by ``(mean, sd, tail)``.

    Accepts comma- or tab/semicolon-delimited text; with a non-comma
    delimiter the numbers may use decimal commas as printed in the source
    tables. ``which`` selects a packaged table instead of ``source``.
    """
    if which is not None:
        text = resources.files("fncbounds.data").joinpath(f"table{which}.csv").read_text("utf-8")
    elif hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    first = text.splitlines()[0]
    delim = "\t" if "\t" in first else ";" if ";" in first else ","
    golden = {}
    for rec in csv.DictReader(io.StringIO(text), delimiter=delim):
        key = (round(parse_number(rec["mean"]), 6), round(parse_number(rec["sd"]), 6),
               rec["tail"].strip())
        golden[key] = tuple(parse_number(rec[f]) for f in ("expected", "lower", "upper"))
    return golden


@dataclass(frozen=True)
class CellComparison:
    mean: float
    sd: float
    tail: str
    field: str
    printed: float
    computed: float | None

    @property
    def rel_dev(self) -> float:
        if self.computed is None:
            return math.inf
        return abs(self.computed - self.printed) / abs(self.printed)


def compare_to_golden(rows: Sequence[TableRow], golden: dict, rel_tol: float = 1e-2):
    """Return ``(n_cells_checked, mismatches, deviations)`` against a golden table.

    ``deviations`` holds a ``CellComparison`` for every cell.
    """
    by_key = {}
    for row in rows:
        for name in TAILS:
            by_key[(round(row.mean, 6), round(row.sd, 6), name)] = row.tail(name)
    mismatches, deviations = [], []
    checked = 0
    for key, printed in sorted(golden.items()):
        tb = by_key.get(key)
        for field, p in zip(("expected", "lower", "upper"), printed):
            checked += 1
            c = None if tb is None else getattr(tb, field)
            cell = CellComparison(key[0], key[1], key[2], field, p, c)
            deviations.append(cell)
            if c is None or not (abs(c - p) <= rel_tol * abs(p)):
                mismatches.append(cell)
    return checked, mismatches, deviations
