"""Command line entry point: ``rbebp run | compare | sweep | replay``.

Exit codes: 0 success, 1 usage error, 2 runtime or I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .engine import (
    FLAT_KEYS,
    PROTOCOLS,
    config_from_flat,
    config_to_flat,
    parse_config_text,
    run_simulation,
    table1_preset,
)
from .errors import InvalidParameter
from .metrics import (
    CHART_METRICS,
    NOT_REACHED,
    average_series,
    emit_chart,
    emit_csv,
    emit_summary_json,
)

log = logging.getLogger("rbebp")

OUT_ENV = "RBEBP_OUT_DIR"
DEFAULT_OUT = "rbebp-out"
EXIT_USAGE, EXIT_RUNTIME = 1, 2
PRESETS = {"table1": table1_preset}
SUMMARY_COLUMNS = ["protocol", "n", "seed", "fnd", "hnd", "and", "throughput", "energy_j"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_seeds(text: str) -> list:
    """``"1..10"`` (inclusive), ``"3,5,8"`` or a mix such as ``"1..3,9"``."""
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ".." in part:
                lo, hi = (int(x) for x in part.split("..", 1))
                if hi < lo:
                    raise ValueError
                seeds.extend(range(lo, hi + 1))
            else:
                seeds.append(int(part))
        except ValueError:
            raise UsageError(f"bad seed list {text!r}; use a..b or comma-separated integers") from None
    if not seeds:
        raise UsageError("empty seed list")
    return seeds


def parse_int_list(text: str, what: str) -> list:
    try:
        values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad {what} list {text!r}") from None
    if not values:
        raise UsageError(f"empty {what} list")
    return values


# --- configuration resolution -------------------------------------------------

def _add_config_flags(p: argparse.ArgumentParser, single: bool = True) -> None:
    p.add_argument("--preset", choices=sorted(PRESETS), default="table1")
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key")
    if single:
        p.add_argument("--protocol", help="rbebp or leach")
        p.add_argument("--nodes", type=int, help="node count")
        p.add_argument("--seed", type=int)
    p.add_argument("--rounds", type=int, help="maximum rounds")
    p.add_argument("--inner-radius", type=float)
    p.add_argument("--ch-count", type=int)
    p.add_argument("--relay-rule", choices=["eq4", "nearest"])
    p.add_argument("--leach-p", type=float)
    p.add_argument("--round-seconds", type=float)
    p.add_argument("--no-control", action="store_true", help="do not charge control packets")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")


def resolve_config(args, single: bool = True) -> dict:
    """Preset < config file < --set < dedicated flags. Returns the resolved flat dict."""
    values = {}
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        try:
            values.update(parse_config_text(text))
        except InvalidParameter as exc:
            raise UsageError(f"{args.config}: {exc}") from exc
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        values[key.strip()] = value.strip()
    flags = {
        "protocol": args.protocol if single else None,
        "node_count": args.nodes if single else None,
        "seed": args.seed if single else None,
        "max_rounds": args.rounds,
        "inner_radius": args.inner_radius,
        "ch_count": args.ch_count,
        "relay_rule": args.relay_rule,
        "leach_p": args.leach_p,
        "round_seconds": args.round_seconds,
    }
    values.update({k: v for k, v in flags.items() if v is not None})
    if args.no_control:
        values["charge_control"] = False
    base = PRESETS[args.preset]()
    try:
        return config_to_flat(config_from_flat(values, base))
    except InvalidParameter as exc:
        raise UsageError(str(exc)) from exc


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- execution ---------------------------------------------------------------

def _simulate(flat: dict):
    return run_simulation(config_from_flat(flat))


def _run_many(flats: list, jobs: int) -> list:
    if jobs > 1 and len(flats) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_simulate, flats))
    return [_simulate(f) for f in flats]


def _fmt(summary, which: str):
    s = summary.seconds(which)
    return NOT_REACHED if s is None else s


def _summary_row(protocol, n, seed, summary) -> list:
    return [
        protocol,
        n,
        seed,
        _fmt(summary, "fnd"),
        _fmt(summary, "hnd"),
        _fmt(summary, "and_"),
        summary.total_throughput,
        repr(summary.total_energy_consumed),
    ]


def _write_rows(path: Path, header: list, rows: list) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def execute(spec: dict, out: Path) -> list:
    """Run a manifest-shaped job description, write its files, return their paths."""
    command = spec["command"]
    if command == "run":
        return _execute_run(spec, out)
    if command == "compare":
        return _execute_compare(spec, out)
    if command == "sweep":
        return _execute_sweep(spec, out)
    raise UsageError(f"unknown manifest command {command!r}")


def _execute_run(spec, out):
    flat = spec["config"]
    cfg = config_from_flat(flat)
    trace = None
    stem = f"{cfg.protocol}_n{cfg.node_count}_seed{cfg.seed}"
    if spec.get("trace"):
        trace = (out / f"{stem}_trace.jsonl").open("w", encoding="utf-8", newline="\n")

    def on_round(rec, plan, state):
        line = {"round": rec.round, "alive": rec.alive, "remaining": rec.remaining, "consumed": rec.consumed,
                "delivered": rec.delivered, "active_region": rec.active_region, "ch_count": rec.ch_count,
                "plan": plan.to_json()}
        trace.write(json.dumps(line, sort_keys=True) + "\n")

    try:
        series, summary = run_simulation(cfg, on_round if trace else None)
    finally:
        if trace:
            trace.close()
    files = [
        emit_csv(series, summary, out / f"{stem}.csv"),
        emit_summary_json(summary, out / f"{stem}.json", protocol=cfg.protocol, seed=cfg.seed),
    ]
    if trace:
        files.append(out / f"{stem}_trace.jsonl")
    print(f"{cfg.protocol} N={cfg.node_count} seed={cfg.seed} rounds={summary.rounds_run}")
    print(f"FND={_fmt(summary, 'fnd')} HND={_fmt(summary, 'hnd')} AND={_fmt(summary, 'and_')} "
          f"(seconds; round_seconds={cfg.round_seconds})")
    print(f"throughput={summary.total_throughput} energy={summary.total_energy_consumed:.6f} J")
    return files


def _mean(values):
    nums = [v for v in values if v is not None]
    if len(nums) < len(values):
        return NOT_REACHED
    return statistics.fmean(nums)


def _execute_compare(spec, out):
    base = spec["config"]
    combos = [(p, n, s) for p in spec["protocols"] for n in spec["nodes"] for s in spec["seeds"]]
    flats = [dict(base, protocol=p, node_count=n, seed=s) for p, n, s in combos]
    results = _run_many(flats, spec.get("jobs", 1))
    rows, table, curves = [], [], {}
    by_group = {}
    for (p, n, s), (series, summary) in zip(combos, results):
        rows.append(_summary_row(p, n, s, summary))
        by_group.setdefault((p, n), []).append((series, summary))
    for (p, n), runs in by_group.items():
        sums = [sm for _, sm in runs]
        table.append([
            p,
            n,
            len(runs),
            _mean([sm.seconds("fnd") for sm in sums]),
            _mean([sm.seconds("hnd") for sm in sums]),
            _mean([sm.seconds("and_") for sm in sums]),
            statistics.fmean(sm.total_throughput for sm in sums),
            statistics.fmean(sm.total_energy_consumed for sm in sums),
        ])
        if spec.get("chart_mode", "mean") == "mean":
            curves[f"{p} N={n}"] = average_series([se for se, _ in runs])
        else:
            curves[f"{p} N={n}"] = runs[0][0]
    files = [
        _write_rows(out / "summaries.csv", SUMMARY_COLUMNS, rows),
        _write_rows(out / "table2.csv",
                    ["protocol", "n", "seeds", "fnd_mean", "hnd_mean", "and_mean", "throughput_mean", "energy_mean_j"],
                    [[*r[:3], *(repr(v) if isinstance(v, float) else v for v in r[3:])] for r in table]),
    ]
    round_seconds = config_from_flat(base).round_seconds
    for metric in CHART_METRICS:
        files.append(emit_chart(curves, metric, out / f"{metric}.svg", round_seconds=round_seconds))
    print(f"{'Protocol':<9}{'N':>5}{'FND (s)':>12}{'HND (s)':>12}{'AND (s)':>12}{'throughput':>13}")
    for p, n, _, fnd, hnd, and_, tput, _ in table:
        cells = [f"{v:>12.1f}" if isinstance(v, float) else f"{v:>12}" for v in (fnd, hnd, and_)]
        print(f"{p:<9}{n:>5}{''.join(cells)}{tput:>13.1f}")
    return files


def _execute_sweep(spec, out):
    base, param = spec["config"], spec["param"]
    combos = [(v, s) for v in spec["values"] for s in spec["seeds"]]
    try:
        flats = [config_to_flat(config_from_flat({param: v, "seed": s}, config_from_flat(base))) for v, s in combos]
    except InvalidParameter as exc:
        raise UsageError(str(exc)) from exc
    results = _run_many(flats, spec.get("jobs", 1))
    rows = []
    for (v, s), flat, (_, summary) in zip(combos, flats, results):
        rows.append([param, v, *_summary_row(flat["protocol"], flat["node_count"], s, summary)])
    path = _write_rows(out / f"sweep_{param}.csv", ["param", "value", *SUMMARY_COLUMNS], rows)
    print(f"{len(rows)} runs written to {path}")
    return [path]


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(spec: dict, files: list, out: Path) -> Path:
    manifest = dict(spec)
    manifest["tool"] = "rbebp"
    manifest["version"] = __version__
    manifest["outputs"] = {p.name: _sha256(p) for p in files}
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


# --- sub-commands ------------------------------------------------------------

def cmd_run(args) -> int:
    flat = resolve_config(args)
    spec = {"command": "run", "config": flat, "seeds": [flat["seed"]], "trace": bool(args.trace)}
    out = _out_dir(args)
    write_manifest(spec, execute(spec, out), out)
    return 0


def cmd_compare(args) -> int:
    protocols = [p.strip() for p in args.protocols.split(",") if p.strip()]
    bad = [p for p in protocols if p not in PROTOCOLS]
    if bad:
        raise UsageError(f"unknown protocol(s): {', '.join(bad)}")
    if len(protocols) < 2:
        raise UsageError("compare needs at least two protocols")
    nodes = parse_int_list(args.nodes, "node count")
    if min(nodes) < 1:
        raise UsageError("node counts must be >= 1")
    spec = {
        "command": "compare",
        "config": resolve_config(args, single=False),
        "protocols": protocols,
        "nodes": nodes,
        "seeds": parse_seeds(args.seeds),
        "chart_mode": args.chart_mode,
        "jobs": args.jobs,
    }
    out = _out_dir(args)
    write_manifest(spec, execute(spec, out), out)
    return 0


def cmd_sweep(args) -> int:
    if args.param not in FLAT_KEYS or args.param == "seed":
        raise UsageError(f"cannot sweep {args.param!r}; choose one of: {', '.join(k for k in FLAT_KEYS if k != 'seed')}")
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise UsageError("empty --values list")
    spec = {
        "command": "sweep",
        "config": resolve_config(args),
        "param": args.param,
        "values": values,
        "seeds": parse_seeds(args.seeds),
        "jobs": args.jobs,
    }
    out = _out_dir(args)
    write_manifest(spec, execute(spec, out), out)
    return 0


def cmd_replay(args) -> int:
    try:
        manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read manifest {args.manifest}: {exc}") from exc
    out = Path(args.out) if args.out else Path(args.manifest).parent
    out.mkdir(parents=True, exist_ok=True)
    spec = {k: v for k, v in manifest.items() if k not in ("tool", "version", "outputs")}
    files = execute(spec, out)
    expected = manifest.get("outputs", {})
    mismatched = [p.name for p in files if expected.get(p.name) != _sha256(p)]
    missing = sorted(set(expected) - {p.name for p in files})
    if mismatched or missing:
        print(f"replay differs: {', '.join(mismatched + missing)}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"replay reproduced {len(files)} file(s) byte-identically")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rbebp", description="Round-based RBEBP / LEACH sensor network simulator")
    parser.add_argument("--version", action="version", version=f"rbebp {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run one simulation")
    _add_config_flags(p)
    p.add_argument("--trace", action="store_true", help="also write a JSONL per-round trace")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="paired protocol comparison over node counts and seeds")
    _add_config_flags(p, single=False)
    p.add_argument("--protocols", default="leach,rbebp")
    p.add_argument("--nodes", default="35,50,100")
    p.add_argument("--seeds", default="1..10")
    p.add_argument("--chart-mode", choices=["mean", "single"], default="mean")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="one-parameter sensitivity sweep")
    _add_config_flags(p)
    p.add_argument("--param", required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--seeds", default="1..3")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("replay", help="re-run a manifest and verify its outputs")
    p.add_argument("manifest")
    p.add_argument("--out", help="directory for regenerated files (default: the manifest's)")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"rbebp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"rbebp: I/O error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except InvalidParameter as exc:
        print(f"rbebp: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
