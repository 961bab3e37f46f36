"""Command-line driver: ``check`` one model, or ``bench`` a corpus manifest.

Run as ``python -m symblicit check MODEL --prop '...'`` or
``python -m symblicit bench [MANIFEST]``.  Exit codes: 0 success,
1 usage error, 2 model or property error, 3 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import logging
import math
import sys
import time
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Sequence, TextIO

from . import arith as _arith
from .check import ENGINES, CheckResult, check, render_value
from .errors import CapExceeded, EngineError
from .explore import DEFAULT_MAX_STATES
from .lang import ModelError, ModelSyntaxError, load_model, parse_model, parse_property

__all__ = [
    "main",
    "run_check",
    "run_bench",
    "load_manifest",
    "resolve_model_path",
    "result_record",
    "EXIT_OK",
    "EXIT_USAGE",
    "EXIT_MODEL",
    "EXIT_CAP",
]

EXIT_OK, EXIT_USAGE, EXIT_MODEL, EXIT_CAP = 0, 1, 2, 3

RECORD_KEYS = (
    "model", "constants", "property", "engine", "arith", "value", "infinite",
    "states_total", "peak_states", "peak_transitions", "dd_nodes_peak",
    "time_explore_ms", "time_eliminate_ms", "peak_mem_mb",
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags, which is taken by model errors here
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _bundled_dir() -> Path:
    return Path(str(resources.files("symblicit") / "models"))


def resolve_model_path(name: str) -> Path:
    """A file on disk, else a model of the same name in the bundled corpus."""
    path = Path(name)
    if path.is_file():
        return path
    bundled = _bundled_dir() / path.name
    if bundled.is_file():
        return bundled
    if not path.suffix:
        bundled = bundled.with_suffix(".pm")
        if bundled.is_file():
            return bundled
    raise FileNotFoundError(name)


def parse_constants(items: Sequence[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise UsageError(f"--const expects NAME=VALUE, got {item!r}")
        out[name.strip()] = value.strip()
    return out


def result_record(
    result: CheckResult, *, model: str, constants: dict[str, Any], prop: str
) -> dict[str, Any]:
    """The machine-readable record for one run, keys in a fixed order."""
    ar = _arith.get_arith(result.arith)
    return {
        "model": model,
        "constants": {k: str(v) for k, v in sorted(constants.items())},
        "property": prop,
        "engine": result.engine,
        "arith": result.arith,
        "value": render_value(result.value, ar),
        "infinite": result.infinite,
        "states_total": result.states_total,
        "peak_states": result.peak_states,
        "peak_transitions": result.peak_transitions,
        "dd_nodes_peak": result.dd_nodes_peak,
        "time_explore_ms": round(result.time_explore_ms, 3),
        "time_eliminate_ms": round(result.time_eliminate_ms, 3),
        "peak_mem_mb": result.peak_mem_mb,
    }


def _check_parser(sub: Any) -> None:
    p = sub.add_parser("check", help="check one property of one model")
    p.add_argument("model", help="model file, or the name of a bundled model")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--prop", help="property text, e.g. 'P=? [ F \"ok\" ]'")
    g.add_argument("--prop-file", help="file whose first non-comment line is the property")
    p.add_argument("--engine", choices=ENGINES, default="symblicit")
    p.add_argument("--arith", default="f64", help="f64, rational or bigfloat[:bits]")
    p.add_argument("--const", action="append", default=[], metavar="NAME=VALUE")
    p.add_argument("--epsilon", type=float, default=1e-10, help="value iteration tolerance")
    p.add_argument("--stats-json", metavar="PATH", help="write the JSON record here ('-' for stdout)")
    p.add_argument("--trace", action="store_true", help="dump the partial chain after each step")
    p.add_argument("--max-states", type=int, default=DEFAULT_MAX_STATES)
    p.add_argument("--dd-node-budget", type=int, default=4_000_000)
    p.add_argument("-v", "--verbose", action="store_true")


def _bench_parser(sub: Any) -> None:
    p = sub.add_parser("bench", help="run every row of a corpus manifest")
    p.add_argument("manifest", nargs="?", help="manifest JSON (default: the bundled one)")
    p.add_argument("--only", action="append", default=[], help="run rows whose name contains this")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--stats-json", metavar="PATH", help="write all row records as a JSON list")
    p.add_argument("--include-slow", action="store_true", help="also run rows marked slow")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="python -m symblicit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _check_parser(sub)
    _bench_parser(sub)
    return parser


def _read_prop_file(path: str) -> str:
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line and not line.startswith("//"):
            return line
    raise UsageError(f"{path}: no property found")


def run_check(args: argparse.Namespace, out: TextIO = sys.stdout) -> tuple[Optional[CheckResult], int]:
    """Execute ``check``; returns the result (``None`` on failure) and the exit code."""
    err = sys.stderr
    try:
        constants = parse_constants(args.const)
        prop_text = args.prop if args.prop is not None else _read_prop_file(args.prop_file)
        ar = _arith.get_arith(args.arith)
    except (UsageError, ValueError, OSError, _arith.ArithError) as exc:
        print(f"error: {exc}", file=err)
        return None, EXIT_USAGE
    try:
        path = resolve_model_path(args.model)
        text = path.read_text()
    except OSError as exc:
        print(f"error: cannot read model {args.model!r}: {exc}", file=err)
        return None, EXIT_MODEL
    try:
        ast = parse_model(text)
        prop = parse_property(prop_text, ast)
        model = load_model(text, constants, ar)
        result = check(
            model, prop, args.engine,
            epsilon=args.epsilon, max_states=args.max_states,
            node_budget=args.dd_node_budget,
            trace=out if args.trace else None,
        )
    except (ModelError, ModelSyntaxError) as exc:
        print(f"error: {exc}", file=err)
        return None, EXIT_MODEL
    except (CapExceeded, MemoryError) as exc:
        print(f"error: resource limit: {exc}", file=err)
        return None, EXIT_CAP
    except EngineError as exc:
        print(f"error: {exc}", file=err)
        return None, EXIT_MODEL
    record = result_record(result, model=path.name, constants=constants, prop=prop_text)
    print(f"value = {record['value']}", file=out)
    _print_stats(record, out)
    if args.stats_json:
        payload = json.dumps(record, indent=None)
        if args.stats_json == "-":
            print(payload, file=out)
        else:
            Path(args.stats_json).write_text(payload + "\n")
    return result, EXIT_OK


def _print_stats(record: dict[str, Any], out: TextIO) -> None:
    width = max(len(k) for k in RECORD_KEYS)
    for key in RECORD_KEYS[3:]:
        if key in ("value", "infinite"):
            continue
        print(f"  {key:<{width}}  {record[key]}", file=out)


# -- benchmark runner -------------------------------------------------------

def load_manifest(path: Optional[str] = None) -> list[dict[str, Any]]:
    """Rows of a manifest; each row names a model, constants, property and expectation."""
    if path is None:
        text = (resources.files("symblicit") / "bench.json").read_text()
    else:
        text = Path(path).read_text()
    data = json.loads(text) if text.strip() else []
    rows = data["rows"] if isinstance(data, dict) else data
    for row in rows:
        for key in ("model", "property"):
            if key not in row:
                raise ValueError(f"manifest row {row.get('name', '?')!r} lacks {key!r}")
    return rows


def _relative_error(value: Any, expected: str, ar: _arith.Arith) -> float:
    exp = float(_arith.parse_literal(expected)) if expected != "inf" else math.inf
    got = math.inf if isinstance(value, float) and math.isinf(value) else ar.to_float(value)
    if math.isinf(exp) or math.isinf(got):
        return 0.0 if exp == got else math.inf
    if exp == 0:
        return abs(got)
    return abs(got - exp) / abs(exp)


def _run_row(row: dict[str, Any]) -> dict[str, Any]:
    name = row.get("name", row["model"])
    constants = {k: str(v) for k, v in row.get("constants", {}).items()}
    out: dict[str, Any] = {"name": name, "ok": False, "error": None}
    t0 = time.perf_counter()
    try:
        ar = _arith.get_arith(row.get("arith", "f64"))
        path = resolve_model_path(row["model"])
        text = path.read_text()
        prop = parse_property(row["property"], parse_model(text))
        model = load_model(text, constants, ar)
        result = check(
            model, prop, row.get("engine", "symblicit"),
            max_states=row.get("max_states", DEFAULT_MAX_STATES),
        )
    except Exception as exc:  # a failing row is reported, the run goes on
        out["error"] = f"{type(exc).__name__}: {exc}"
        out["seconds"] = time.perf_counter() - t0
        return out
    out.update(result_record(result, model=path.name, constants=constants, prop=row["property"]))
    out["seconds"] = time.perf_counter() - t0
    expected = row.get("expected")
    tol = float(row.get("tolerance", 0.0))
    if expected is None:
        out["ok"] = True
    else:
        rel = _relative_error(result.value, str(expected), ar)
        out["rel_error"] = rel
        out["ok"] = rel <= tol
    want_states = row.get("states")
    if want_states is not None and result.states_total != want_states:
        out["ok"] = False
        out["error"] = f"{result.states_total} states, expected {want_states}"
    return out


def run_bench(
    rows: Sequence[dict[str, Any]], jobs: int = 1, out: Optional[TextIO] = sys.stdout
) -> list[dict[str, Any]]:
    """Run every row, optionally in worker processes; print one table line per row."""
    if jobs > 1 and len(rows) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_row, rows))
    else:
        results = [_run_row(r) for r in rows]
    if out is not None:
        print(format_table(rows, results), file=out)
    return results


def format_table(rows: Sequence[dict[str, Any]], results: Sequence[dict[str, Any]]) -> str:
    header = ("instance", "states", "value", "expected", "peak st", "peak tr", "time s", "")
    lines = [header]
    for row, res in zip(rows, results):
        flag = "ok" if res["ok"] else "FAIL"
        if res.get("error"):
            flag += f" ({res['error']})"
        lines.append((
            res["name"],
            str(res.get("states_total", "-")),
            str(res.get("value", "-")),
            str(row.get("expected", "-")),
            str(res.get("peak_states", "-")),
            str(res.get("peak_transitions", "-")),
            f"{res['seconds']:.2f}",
            flag,
        ))
    widths = [max(len(line[i]) for line in lines) for i in range(len(header))]
    return "\n".join(
        "  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip() for line in lines
    )


def _bench(args: argparse.Namespace, out: TextIO) -> int:
    try:
        rows = load_manifest(args.manifest)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: manifest: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.only:
        rows = [r for r in rows if any(s in r.get("name", r["model"]) for s in args.only)]
    elif not args.include_slow:
        rows = [r for r in rows if not r.get("slow")]
    results = run_bench(rows, args.jobs, out)
    if args.stats_json:
        Path(args.stats_json).write_text(json.dumps(results, indent=1) + "\n")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None, out: TextIO = sys.stdout) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    level = logging.INFO if getattr(args, "verbose", False) else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "check":
        return run_check(args, out)[1]
    return _bench(args, out)
