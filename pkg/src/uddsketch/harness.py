"""Exact-quantile oracle, relative-error measurement and throughput runs."""

from __future__ import annotations

import csv
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .datagen import DATASET_NAMES, DatasetSpec, generate, read_dataset, spec_for
from .ddsketch import HIGH, LOW, DDSketch, DualDDSketch
from .sketch import DEFAULT_COLLAPSES, UDDSketch, alpha0_for, error_bound

log = logging.getLogger(__name__)

UDDSKETCH = "uddsketch"
DDSKETCH_L = "ddsketch-L"
DDSKETCH_H = "ddsketch-H"
DDSKETCH_D = "ddsketch-D"
ALGORITHMS = (UDDSKETCH, DDSKETCH_L, DDSKETCH_H, DDSKETCH_D)

DEFAULT_ALPHAS = (1e-5, 1e-4, 1e-3, 1e-2, 1e-1)
DEFAULT_BUDGETS = (128, 256, 512, 1024, 2048)
DEFAULT_Q_GRID = tuple(i / 10 for i in range(11))

BOUND_RTOL = 1e-9


def exact_quantiles(data, q_grid: Sequence[float]) -> List[float]:
    """Lower q-quantiles: the element of rank ``floor(1 + q(n-1))`` in sorted order."""
    arr = np.sort(np.asarray(data, dtype=np.float64))
    n = len(arr)
    if n == 0:
        raise ValueError("exact_quantiles of empty data")
    out = []
    for q in q_grid:
        if not (0.0 <= q <= 1.0):
            raise ValueError(f"q must lie in [0, 1], got {q!r}")
        out.append(float(arr[int(math.floor(1.0 + q * (n - 1))) - 1]))
    return out


@dataclass
class ExperimentGrid:
    datasets: List[DatasetSpec]
    alphas: Tuple[float, ...] = DEFAULT_ALPHAS
    budgets: Tuple[int, ...] = DEFAULT_BUDGETS
    q_grid: Tuple[float, ...] = DEFAULT_Q_GRID
    algorithms: Tuple[str, ...] = ALGORITHMS
    collapses: int = DEFAULT_COLLAPSES
    data_dir: Optional[Path] = None

    @classmethod
    def default(cls, n: int = 100_000, seed: int = 0, **kw) -> "ExperimentGrid":
        return cls([spec_for(name, n, seed) for name in DATASET_NAMES], **kw)

    def __post_init__(self):
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms: {sorted(unknown)}")


@dataclass
class ErrorRow:
    dataset: str
    algorithm: str
    alpha: float
    m: int
    q: float
    estimate: float
    exact: float
    relative_error: float
    final_alpha: float
    collapses: int
    buckets_used: int
    from_collapsed_bucket: bool


@dataclass
class ThroughputRow:
    dataset: str
    algorithm: str
    alpha: float
    m: int
    n: int
    seconds: float
    updates_per_ms: float


@dataclass
class FailedCell:
    dataset: str
    algorithm: str
    alpha: float
    m: int
    error: str


@dataclass
class EvalReport:
    rows: List[ErrorRow] = field(default_factory=list)
    throughput: List[ThroughputRow] = field(default_factory=list)
    failures: List[FailedCell] = field(default_factory=list)

    def extend(self, other: "EvalReport") -> None:
        self.rows.extend(other.rows)
        self.throughput.extend(other.throughput)
        self.failures.extend(other.failures)

    def bound_violations(self) -> List[ErrorRow]:
        """UDDSketch rows whose error exceeds the sketch's own final alpha."""
        return [
            r for r in self.rows
            if r.algorithm == UDDSKETCH
            and not (r.relative_error <= r.final_alpha * (1.0 + BOUND_RTOL))
        ]

    def dominance_violations(self) -> List[Tuple[ErrorRow, ErrorRow]]:
        """Collapsed baseline answers whose UDDSketch counterpart broke its bound."""
        udd = {(r.dataset, r.alpha, r.m, r.q): r for r in self.rows if r.algorithm == UDDSKETCH}
        bad = []
        for r in self.rows:
            if r.algorithm == UDDSKETCH or not r.from_collapsed_bucket:
                continue
            u = udd.get((r.dataset, r.alpha, r.m, r.q))
            if u is not None and not (u.relative_error <= u.final_alpha * (1.0 + BOUND_RTOL)):
                bad.append((r, u))
        return bad


def _relative_error(estimate: float, exact: float) -> float:
    if exact == 0.0:
        return math.nan
    return abs(estimate - exact) / abs(exact)


def _build(algorithm: str, alpha: float, m: int, collapses: int):
    if algorithm == UDDSKETCH:
        return UDDSketch(alpha0_for(alpha, collapses), m)
    if algorithm == DDSKETCH_L:
        return DDSketch(alpha, m, LOW)
    if algorithm == DDSKETCH_H:
        return DDSketch(alpha, m, HIGH)
    if algorithm == DDSKETCH_D:
        return DualDDSketch(alpha, m)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def run_cell(
    name: str,
    data: Sequence[float],
    exact: Sequence[float],
    algorithm: str,
    alpha: float,
    m: int,
    q_grid: Sequence[float],
    collapses: int = DEFAULT_COLLAPSES,
) -> EvalReport:
    """Feed one stream through one sketch configuration and score it."""
    report = EvalReport()
    try:
        sketch = _build(algorithm, alpha, m, collapses)
        values = data.tolist() if isinstance(data, np.ndarray) else list(data)
        insert = sketch.insert
        t0 = time.perf_counter()
        for x in values:
            insert(x)
        elapsed = time.perf_counter() - t0
        report.throughput.append(ThroughputRow(
            name, algorithm, alpha, m, len(values), elapsed,
            len(values) / (elapsed * 1e3) if elapsed > 0 else math.inf,
        ))
        if algorithm == UDDSKETCH:
            final_alpha, k, used = sketch.current_alpha, sketch.k, len(sketch.store)
        elif algorithm == DDSKETCH_D:
            final_alpha, k = alpha, sketch.collapse_count
            used = len(sketch.low.store) + len(sketch.high.store)
        else:
            final_alpha, k, used = alpha, sketch.collapse_count, len(sketch.store)
        for q, ex in zip(q_grid, exact):
            if algorithm == UDDSKETCH:
                est, collapsed = sketch.quantile(q), False
            else:
                est, collapsed = sketch.quantile(q)
            report.rows.append(ErrorRow(
                name, algorithm, alpha, m, q, est.value, ex,
                _relative_error(est.value, ex), final_alpha, k, used, collapsed,
            ))
    except Exception as exc:  # a broken cell is reported, not fatal
        log.warning("cell %s/%s alpha=%g m=%d failed: %s", name, algorithm, alpha, m, exc)
        report.failures.append(FailedCell(name, algorithm, alpha, m, f"{type(exc).__name__}: {exc}"))
    return report


def load_or_generate(spec: DatasetSpec, data_dir: Optional[Path] = None) -> np.ndarray:
    """Read ``<data_dir>/<name>.bin`` or ``.txt`` when present, else generate."""
    if data_dir is not None:
        for suffix in (".bin", ".txt"):
            path = Path(data_dir) / f"{spec.name}{suffix}"
            if path.exists():
                return read_dataset(path)
    return generate(spec)


def _run_dataset(spec: DatasetSpec, grid: ExperimentGrid) -> EvalReport:
    data = load_or_generate(spec, grid.data_dir)
    exact = exact_quantiles(data, grid.q_grid)
    report = EvalReport()
    for algorithm in grid.algorithms:
        for alpha in grid.alphas:
            for m in grid.budgets:
                report.extend(run_cell(spec.name, data, exact, algorithm, alpha, m,
                                       grid.q_grid, grid.collapses))
    return report


def run_experiment(grid: ExperimentGrid, jobs: int = 1) -> EvalReport:
    """Run every (dataset, algorithm, alpha, m) cell of the grid.

    With ``jobs > 1`` datasets are processed in separate worker processes;
    rows are assembled in grid order either way.
    """
    report = EvalReport()
    if jobs <= 1 or len(grid.datasets) <= 1:
        for spec in grid.datasets:
            report.extend(_run_dataset(spec, grid))
        return report
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for part in pool.map(_run_dataset, grid.datasets, [grid] * len(grid.datasets)):
            report.extend(part)
    return report


def worst_case_bound_for(data, m: int) -> float:
    """Worst-case UDDSketch accuracy for the observed range of ``data``."""
    arr = np.asarray(data)
    return error_bound(float(arr.min()), float(arr.max()), m)


# ---------------------------------------------------------------- CSV

ERROR_COLUMNS = [f.name for f in fields(ErrorRow)]
THROUGHPUT_COLUMNS = [f.name for f in fields(ThroughputRow)]


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _write_csv(path: Path, header: List[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in astuple(r)])


def emit_report(report: EvalReport, path, per_cell: bool = False) -> Dict[str, Path]:
    """Write ``errors.csv`` and ``throughput.csv`` under directory ``path``.

    With ``per_cell`` the error rows are also split into
    ``<dataset>/<algorithm>/alpha<a>_m<m>.csv``.
    """
    if not report.rows and not report.throughput:
        raise ValueError("empty report")
    out = Path(path)
    written = {
        "errors": out / "errors.csv",
        "throughput": out / "throughput.csv",
    }
    _write_csv(written["errors"], ERROR_COLUMNS, report.rows)
    _write_csv(written["throughput"], THROUGHPUT_COLUMNS, report.throughput)
    if report.failures:
        written["failures"] = out / "failures.csv"
        _write_csv(written["failures"], [f.name for f in fields(FailedCell)], report.failures)
    if per_cell:
        cells: Dict[Tuple[str, str, float, int], List[ErrorRow]] = {}
        for r in report.rows:
            cells.setdefault((r.dataset, r.algorithm, r.alpha, r.m), []).append(r)
        for (ds, algo, alpha, m), rows in cells.items():
            _write_csv(out / ds / algo / f"alpha{alpha:g}_m{m}.csv", ERROR_COLUMNS, rows)
    return written


def _parse(cls, record: List[str]):
    kwargs = {}
    for f, raw in zip(fields(cls), record):
        if f.type in ("float", float):
            kwargs[f.name] = float(raw)
        elif f.type in ("int", int):
            kwargs[f.name] = int(raw)
        elif f.type in ("bool", bool):
            kwargs[f.name] = raw == "1"
        else:
            kwargs[f.name] = raw
    return cls(**kwargs)


def read_report(path) -> EvalReport:
    """Parse a directory written by :func:`emit_report`."""
    out = Path(path)
    report = EvalReport()
    for name, cls, target in (
        ("errors.csv", ErrorRow, report.rows),
        ("throughput.csv", ThroughputRow, report.throughput),
        ("failures.csv", FailedCell, report.failures),
    ):
        p = out / name
        if not p.exists():
            continue
        with open(p, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            expected = [f.name for f in fields(cls)]
            if header != expected:
                raise ValueError(f"{p}: unexpected columns {header}")
            target.extend(_parse(cls, rec) for rec in reader)
    return report


def default_results_dir() -> Path:
    return Path(os.environ.get("UDDSKETCH_RESULTS_DIR", "results"))


def summarize_cells(report: EvalReport) -> List[Dict[str, object]]:
    """Max relative error per cell, joined with its throughput."""
    tp = {(t.dataset, t.algorithm, t.alpha, t.m): t.updates_per_ms for t in report.throughput}
    worst: Dict[Tuple[str, str, float, int], ErrorRow] = {}
    for r in report.rows:
        key = (r.dataset, r.algorithm, r.alpha, r.m)
        cur = worst.get(key)
        if cur is None or r.relative_error > cur.relative_error:
            worst[key] = r
    return [
        {
            "dataset": k[0], "algorithm": k[1], "alpha": k[2], "m": k[3],
            "max_relative_error": r.relative_error, "final_alpha": r.final_alpha,
            "updates_per_ms": tp.get(k, math.nan),
        }
        for k, r in worst.items()
    ]

