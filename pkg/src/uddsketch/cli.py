"""Command-line front end: dataset generation, grid evaluation, sketch files.

Exit codes: 0 success, 2 usage error, 3 data error, 4 accuracy assertion
failed during ``eval``.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from . import codec
from .core import SketchError
from .datagen import DATASET_NAMES, generate, spec_for, write_binary, write_text
from .harness import (
    ALGORITHMS,
    DEFAULT_ALPHAS,
    DEFAULT_BUDGETS,
    DEFAULT_Q_GRID,
    ExperimentGrid,
    default_results_dir,
    emit_report,
    run_experiment,
    summarize_cells,
)
from .signed import SignedUDDSketch
from .sketch import DEFAULT_COLLAPSES, UDDSketch, alpha0_for, merge

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_ACCURACY = 4

log = logging.getLogger("uddsketch")


class UsageError(Exception):
    pass


def _floats(text: str) -> List[float]:
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"not a list of numbers: {text!r}") from None


def _ints(text: str) -> List[int]:
    try:
        return [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"not a list of integers: {text!r}") from None


def _names(text: str) -> List[str]:
    return [t for t in text.replace(",", " ").split() if t]


CONFIG_KEYS = {
    "alphas": _floats,
    "budgets": _ints,
    "q_grid": _floats,
    "algorithms": _names,
    "datasets": _names,
    "n": int,
    "seed": int,
    "collapses": int,
    "jobs": int,
}


def read_config(path) -> Dict[str, object]:
    """Parse a ``key = value`` grid file; ``#`` starts a comment."""
    out: Dict[str, object] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key = key.strip()
            if not sep or key not in CONFIG_KEYS:
                raise UsageError(f"{path}:{lineno}: unknown or malformed entry {line!r}")
            try:
                out[key] = CONFIG_KEYS[key](value.strip())
            except ValueError:
                raise UsageError(f"{path}:{lineno}: bad value for {key}") from None
    return out


def _check_datasets(names: Sequence[str]) -> List[str]:
    if list(names) == ["all"]:
        return list(DATASET_NAMES)
    bad = [n for n in names if n not in DATASET_NAMES]
    if bad:
        raise UsageError(
            f"unknown dataset(s) {', '.join(bad)}; valid names: all, {', '.join(DATASET_NAMES)}"
        )
    return list(names)


# ---------------------------------------------------------------- generate

def cmd_generate(args) -> int:
    names = _check_datasets([args.dataset])
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = ["name,distribution,params,n,seed,min,max"]
    for name in names:
        spec = spec_for(name, args.n, args.seed)
        data = generate(spec)
        if args.format == "binary":
            path = out / f"{name}.bin"
            write_binary(spec, data, path)
        else:
            path = out / f"{name}.txt"
            write_text(spec, data, path)
        manifest.append(
            f"{name},{spec.distribution},{spec.params_text},{spec.n},{spec.seed},"
            f"{float(data.min())!r},{float(data.max())!r}"
        )
        if args.porcelain:
            print(f"{name}\t{path}")
        else:
            print(f"wrote {path} ({spec.n} values, min {data.min():.4g}, max {data.max():.4g})")
    (out / "manifest.csv").write_text("\n".join(manifest) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------- eval

def build_grid(args) -> ExperimentGrid:
    cfg: Dict[str, object] = {}
    if args.grid != "default":
        cfg = read_config(args.grid)
    for key in ("n", "seed", "collapses", "jobs"):
        if getattr(args, key) is not None:
            cfg[key] = getattr(args, key)
    if args.algorithms is not None:
        cfg["algorithms"] = _names(args.algorithms)
    if args.datasets is not None:
        cfg["datasets"] = _names(args.datasets)

    algorithms = tuple(cfg.get("algorithms", ALGORITHMS))
    bad = [a for a in algorithms if a not in ALGORITHMS]
    if bad:
        raise UsageError(f"unknown algorithm(s) {', '.join(bad)}; valid: {', '.join(ALGORITHMS)}")
    alphas = tuple(cfg.get("alphas", DEFAULT_ALPHAS))
    if not all(0.0 < a < 1.0 for a in alphas):
        raise UsageError("alphas must lie in (0, 1)")
    budgets = tuple(cfg.get("budgets", DEFAULT_BUDGETS))
    if not all(m >= 4 for m in budgets):
        raise UsageError("budgets must be >= 4")
    q_grid = tuple(cfg.get("q_grid", DEFAULT_Q_GRID))
    if not all(0.0 <= q <= 1.0 for q in q_grid):
        raise UsageError("q_grid values must lie in [0, 1]")
    n = int(cfg.get("n", 100_000))
    if n < 1:
        raise UsageError("n must be >= 1")
    collapses = int(cfg.get("collapses", DEFAULT_COLLAPSES))
    if collapses < 1:
        raise UsageError("collapses must be >= 1")
    seed = int(cfg.get("seed", 0))
    names = _check_datasets(cfg.get("datasets", ["all"]))
    args.jobs = int(cfg.get("jobs", 1))
    return ExperimentGrid(
        [spec_for(name, n, seed) for name in names],
        alphas=alphas, budgets=budgets, q_grid=q_grid, algorithms=algorithms,
        collapses=collapses, data_dir=Path(args.data_dir) if args.data_dir else None,
    )


def cmd_eval(args) -> int:
    grid = build_grid(args)
    report = run_experiment(grid, jobs=args.jobs)
    out = Path(args.out) if args.out else default_results_dir()
    written = emit_report(report, out, per_cell=args.per_cell)

    for cell in summarize_cells(report):
        if args.porcelain:
            print("\t".join(str(cell[k]) for k in (
                "dataset", "algorithm", "alpha", "m", "max_relative_error",
                "final_alpha", "updates_per_ms")))
        else:
            print(f"{cell['dataset']:16s} {cell['algorithm']:11s} alpha={cell['alpha']:<7g} "
                  f"m={cell['m']:<5d} max_err={cell['max_relative_error']:.3e} "
                  f"final_alpha={cell['final_alpha']:.3e} "
                  f"updates/ms={cell['updates_per_ms']:.1f}")
    if not args.porcelain:
        print(f"{len(report.rows)} error rows -> {written['errors']}")
        print(f"{len(report.throughput)} throughput rows -> {written['throughput']}")

    status = EXIT_OK
    for f in report.failures:
        print(f"FAILED cell {f.dataset}/{f.algorithm} alpha={f.alpha:g} m={f.m}: {f.error}",
              file=sys.stderr)
        if f.algorithm == "uddsketch":
            status = EXIT_ACCURACY
    for r in report.bound_violations():
        print(f"BOUND VIOLATED {r.dataset}/{r.algorithm} alpha={r.alpha:g} m={r.m} q={r.q:g}: "
              f"error {r.relative_error:.6e} > final alpha {r.final_alpha:.6e}", file=sys.stderr)
        status = EXIT_ACCURACY
    return status


# ---------------------------------------------------------------- sketch

def _read_values(path: Optional[str]) -> List[float]:
    fh = sys.stdin if path in (None, "-") else open(path)
    try:
        values = []
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            for tok in line.replace(",", " ").split():
                try:
                    values.append(float(tok))
                except ValueError:
                    raise ValueError(f"line {lineno}: not a number: {tok!r}") from None
        return values
    finally:
        if fh is not sys.stdin:
            fh.close()


def cmd_sketch_insert(args) -> int:
    path = Path(args.sketch)
    if path.exists():
        sketch = codec.load(path)
    else:
        if args.alpha0 is not None:
            alpha0 = args.alpha0
        else:
            alpha0 = alpha0_for(args.alpha, args.collapses)
        sketch = SignedUDDSketch(alpha0, args.m) if args.signed else UDDSketch(alpha0, args.m)
    if not isinstance(sketch, (UDDSketch, SignedUDDSketch)):
        raise UsageError(f"{path} is not a UDDSketch file")
    values = _read_values(args.input)
    for x in values:
        sketch.insert(x)
    codec.save(sketch, path)
    if not args.porcelain:
        print(f"inserted {len(values)} values into {path} (n={sketch.n})")
    return EXIT_OK


def cmd_sketch_query(args) -> int:
    sketch = codec.load(args.sketch)
    for q in _floats(args.q):
        if not (0.0 <= q <= 1.0):
            raise UsageError(f"q must lie in [0, 1], got {q}")
        est = sketch.quantile(q)
        if isinstance(est, tuple):
            est = est[0]
        if args.porcelain:
            print(f"{q!r}\t{est.value!r}\t{est.guaranteed_alpha!r}")
        else:
            print(f"q={q:g} value={est.value:.17g} alpha={est.guaranteed_alpha:.6g}")
    return EXIT_OK


def cmd_sketch_merge(args) -> int:
    a = codec.load(args.a)
    b = codec.load(args.b)
    if isinstance(a, UDDSketch) and isinstance(b, UDDSketch):
        result = merge(a, b)
    elif isinstance(a, SignedUDDSketch) and isinstance(b, SignedUDDSketch):
        result = SignedUDDSketch._from_parts(
            merge(a.positives, b.positives), merge(a.negatives, b.negatives),
            a.zero_count + b.zero_count,
        )
    else:
        raise UsageError("merge needs two UDDSketch files of the same kind")
    codec.save(result, args.output)
    if not args.porcelain:
        print(f"merged {args.a} + {args.b} -> {args.output} (n={result.n})")
    return EXIT_OK


def _info_fields(sketch) -> Dict[str, object]:
    if isinstance(sketch, UDDSketch):
        return {
            "kind": "uddsketch", "alpha0": sketch.alpha0, "alpha": sketch.current_alpha,
            "k": sketch.k, "m": sketch.m, "buckets": len(sketch.store), "total": sketch.n,
        }
    if isinstance(sketch, SignedUDDSketch):
        pos, neg = sketch.positives, sketch.negatives
        return {
            "kind": "signed-uddsketch", "alpha0": pos.alpha0, "alpha": sketch.current_alpha,
            "k": max(pos.k, neg.k), "m": pos.m,
            "buckets": len(pos.store) + len(neg.store), "total": sketch.n,
            "zeros": sketch.zero_count,
        }
    return {
        "kind": f"ddsketch-{sketch.strategy}", "alpha0": sketch.alpha, "alpha": sketch.alpha,
        "k": sketch.collapse_count, "m": sketch.m, "buckets": len(sketch.store),
        "total": sketch.n,
    }


def cmd_sketch_info(args) -> int:
    for key, value in _info_fields(codec.load(args.sketch)).items():
        if args.porcelain:
            print(f"{key}\t{value!r}")
        else:
            print(f"{key:8s} {value}")
    return EXIT_OK


# ---------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="uddsketch", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write synthetic datasets")
    g.add_argument("--dataset", required=True, help="dataset name or 'all'")
    g.add_argument("--n", type=int, default=100_000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--format", choices=("text", "binary"), default="text")
    g.add_argument("--out", default="data")
    g.add_argument("--porcelain", action="store_true")
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("eval", help="run the accuracy/throughput grid")
    e.add_argument("--grid", default="default", help="'default' or a key=value config file")
    e.add_argument("--algorithms", help=f"comma list from {', '.join(ALGORITHMS)}")
    e.add_argument("--datasets", help="comma list of dataset names, or 'all'")
    e.add_argument("--n", type=int)
    e.add_argument("--seed", type=int)
    e.add_argument("--collapses", type=int)
    e.add_argument("--jobs", type=int)
    e.add_argument("--data-dir", help="read <name>.bin/.txt from here instead of generating")
    e.add_argument("--out", help="results directory (default $UDDSKETCH_RESULTS_DIR or ./results)")
    e.add_argument("--per-cell", action="store_true",
                   help="also write <dataset>/<algorithm>/alpha<a>_m<m>.csv")
    e.add_argument("--porcelain", action="store_true")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sketch", help="operate on serialized sketch files")
    ssub = s.add_subparsers(dest="action", required=True, parser_class=_Parser)

    si = ssub.add_parser("insert", help="insert values (stdin or --input) into a sketch file")
    si.add_argument("sketch")
    si.add_argument("--input", help="file of numbers; default stdin")
    si.add_argument("--alpha", type=float, default=0.01, help="target accuracy for a new sketch")
    si.add_argument("--alpha0", type=float, help="starting accuracy (overrides --alpha)")
    si.add_argument("--collapses", type=int, default=DEFAULT_COLLAPSES)
    si.add_argument("--m", type=int, default=1024)
    si.add_argument("--signed", action="store_true", help="accept negative values and zero")
    si.add_argument("--porcelain", action="store_true")
    si.set_defaults(func=cmd_sketch_insert)

    sq = ssub.add_parser("query", help="print quantile estimates")
    sq.add_argument("sketch")
    sq.add_argument("--q", required=True, help="comma list of quantiles")
    sq.add_argument("--porcelain", action="store_true")
    sq.set_defaults(func=cmd_sketch_query)

    sm = ssub.add_parser("merge", help="merge two sketch files")
    sm.add_argument("a")
    sm.add_argument("b")
    sm.add_argument("-o", "--output", required=True)
    sm.add_argument("--porcelain", action="store_true")
    sm.set_defaults(func=cmd_sketch_merge)

    sn = ssub.add_parser("info", help="describe a sketch file")
    sn.add_argument("sketch")
    sn.add_argument("--porcelain", action="store_true")
    sn.set_defaults(func=cmd_sketch_info)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"uddsketch: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SketchError as exc:
        print(f"uddsketch: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, ValueError, KeyError) as exc:
        print(f"uddsketch: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
