"""Command-line front end: ``towertopk {run,eval,gen,bench}``.

Exit codes: 0 success, 2 configuration error, 3 input error,
4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from collections import Counter
from pathlib import Path
from typing import Any, Iterable, Iterator

import numpy as np

from . import __version__
from .config import PRESETS, RunConfig, resolve_config
from .errors import ConfigError, InputError, InvariantViolation
from .evaluation import Summary, format_table, run_and_evaluate
from .hashing import FlowId, keys_to_flows
from .metrics import evaluate, exact_count
from .pipeline import TopKPipeline, build_sketch, queue_seed, run_windows, split_windows
from .pqa import TopKReport
from .traces import PCAP_MAGICS, PcapReader, ZipfSpec, gen_zipf, load_keys, read_flowlog, write_flowlog

SCHEMA = 1
log = logging.getLogger("towertopk")


def _write_json(path: str | Path, obj: dict) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _config_flags(args: argparse.Namespace) -> dict[str, Any]:
    flags = {
        "sketch": args.sketch,
        "queue": args.queue,
        "k": args.k,
        "slots": args.slots,
        "queues": args.queues,
        "m": args.m,
        "rows": args.rows,
        "width": args.width,
        "window": args.window,
        "reuse_row0_hash": True if args.reuse_row0_hash else None,
        "keep_other": True if getattr(args, "keep_other", False) else None,
        "input": getattr(args, "input", None),
        "input_format": getattr(args, "format", None),
        "out_json": getattr(args, "out_json", None),
        "out_csv": getattr(args, "out_csv", None),
    }
    if args.queue_seed is not None:
        flags["seeds"] = {"queue": args.queue_seed}
    return flags


def _resolve(args: argparse.Namespace) -> RunConfig:
    return resolve_config(args.preset, args.config, _config_flags(args))


def _echo(cfg: RunConfig, hash_seed: int) -> dict:
    return {"config": cfg.to_dict(), "seeds": dict(cfg.seeds), "hash_seed": hash_seed}


def _open_stream(cfg: RunConfig) -> tuple[Iterable[FlowId], dict]:
    if not cfg.input:
        raise ConfigError("no input given (use --input or 'input' in the config file)")
    path = Path(cfg.input)
    if not path.is_file():
        raise InputError(f"{path}: no such file")
    fmt = cfg.input_format
    if fmt == "auto":
        with open(path, "rb") as fh:
            fmt = "pcap" if fh.read(4) in PCAP_MAGICS else "flowlog"
    info: dict[str, Any] = {"path": str(path), "format": fmt}
    if fmt == "pcap":
        reader = PcapReader(path, cfg.keep_other)
        info["reader"] = reader
        return reader, info
    if fmt == "flowlog":
        return read_flowlog(path), info
    raise ConfigError(f"unknown input format {fmt!r}")


class _Tally:
    """Pass-through iterator that counts records and, optionally, flows."""

    def __init__(self, flows: Iterable[FlowId], oracle: bool):
        self._it = iter(flows)
        self.records = 0
        self.flows: Counter | None = Counter() if oracle else None

    def __iter__(self) -> Iterator[FlowId]:
        for f in self._it:
            self.records += 1
            if self.flows is not None:
                self.flows[f] += 1
            yield f


def _check_report(report: TopKReport) -> None:
    counts = report.counts
    if any(a < b for a, b in zip(counts, counts[1:])):
        raise InvariantViolation("report is not sorted by count")
    if len(set(report.hashes)) != len(report):
        raise InvariantViolation("report contains duplicate flow hashes")


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    flows, info = _open_stream(cfg)
    tally = _Tally(flows, args.oracle)
    seed = queue_seed(cfg, build_sketch(cfg))
    t0 = time.perf_counter()
    windows = run_windows(cfg, tally)
    elapsed = time.perf_counter() - t0
    for w in windows:
        _check_report(w.report)

    doc = {"schema": SCHEMA, "kind": "topk_report", **_echo(cfg, seed)}
    doc["input"] = {"path": info["path"], "format": info["format"], "records": tally.records}
    if "reader" in info:
        doc["input"]["skipped"] = dict(sorted(info["reader"].skipped.items()))
    doc["windows"] = [{"index": w.index, "packets": w.packets, "entries": w.report.to_records()} for w in windows]

    out_json = cfg.out_json or "report.json"
    _write_json(out_json, doc)
    if cfg.out_csv:
        if len(windows) == 1:
            Path(cfg.out_csv).write_text(windows[0].report.to_csv(), encoding="utf-8")
        else:
            base = Path(cfg.out_csv)
            for w in windows:
                base.with_name(f"{base.stem}.w{w.index}{base.suffix}").write_text(w.report.to_csv(), encoding="utf-8")

    pps = tally.records / elapsed if elapsed > 0 else 0.0
    print(f"packets: {tally.records}")
    if tally.flows is not None:
        print(f"flows (exact): {len(tally.flows)}")
    print(f"windows: {len(windows)}  reported: {sum(len(w.report) for w in windows)}")
    print(f"elapsed: {elapsed:.3f} s  ({pps:,.0f} packets/s)")
    print(f"report: {out_json}")
    return 0


def _load_report(path: str | Path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: {exc}") from None
    if doc.get("schema") != SCHEMA or doc.get("kind") != "topk_report":
        raise InputError(f"{path}: not a schema-{SCHEMA} top-K report")
    return doc


def _eval_report(args: argparse.Namespace) -> tuple[dict, list[Summary]]:
    doc = _load_report(args.report)
    cfg = RunConfig(**{**doc["config"], "seeds": doc["seeds"]})
    seed = int(doc["hash_seed"])
    if queue_seed(cfg, build_sketch(cfg)) != seed:
        raise ConfigError("seed mismatch: report hash seed disagrees with its embedded config")
    if args.truth_seed is not None and args.truth_seed != seed:
        raise ConfigError(f"seed mismatch: truth seed {args.truth_seed:#010x} vs report hash seed {seed:#010x}")
    source = args.input or doc["input"]["path"]
    keys, _ = load_keys(source, "auto", cfg.keep_other)
    k = args.k[0] if args.k else cfg.k
    parts = split_windows(keys, cfg.window)
    if len(parts) != len(doc["windows"]):
        raise InputError(f"{source}: {len(parts)} windows but the report has {len(doc['windows'])}")
    results = []
    for part, w in zip(parts, doc["windows"]):
        report = TopKReport.from_records(w["entries"])
        r = evaluate(report, exact_count(part), k, seed, args.by_identity)
        results.append({"window": w["index"], **r.to_dict()})
    label = cfg.preset or cfg.sketch
    summary = Summary(label, k, [r["are_mean"] for r in results], [r["precision"] for r in results])
    out = {"schema": SCHEMA, "kind": "eval", **_echo(cfg, seed), "input": str(source),
           "results": results, "summary": [summary.to_dict()]}
    return out, [summary]


def _eval_corpora(args: argparse.Namespace) -> tuple[dict, list[Summary]]:
    corpus_dir = Path(args.corpus_dir)
    if not corpus_dir.is_dir():
        raise InputError(f"{corpus_dir}: not a directory")
    files = sorted(p for p in corpus_dir.iterdir() if p.is_file() and not p.name.startswith("."))
    if not files:
        raise InputError(f"{corpus_dir}: no corpora found")
    presets = args.compare or [args.preset or None]
    ks = args.k or [None]
    corpora = []
    for path in files:
        keys, _ = load_keys(path)
        corpora.append((path, keys))
    summaries: list[Summary] = []
    results = []
    for preset in presets:
        for k in ks:
            flags = _config_flags(args)
            flags["k"] = k
            cfg = resolve_config(preset, args.config, flags)
            s = Summary(cfg.preset or cfg.sketch, cfg.k, [], [])
            for path, keys in corpora:
                for i, r in enumerate(run_and_evaluate(cfg, keys, args.by_identity)):
                    s.are.append(r.are_mean)
                    s.precision.append(r.precision)
                    results.append({"label": s.label, "corpus": path.name, "window": i, **r.to_dict()})
            summaries.append(s)
    out = {"schema": SCHEMA, "kind": "eval", "corpora": [p.name for p, _ in corpora],
           "results": results, "summary": [s.to_dict() for s in summaries]}
    return out, summaries


def cmd_eval(args: argparse.Namespace) -> int:
    if bool(args.report) == bool(args.corpus_dir):
        raise ConfigError("give exactly one of --report or --corpus-dir")
    out, summaries = _eval_report(args) if args.report else _eval_corpora(args)
    if args.out_json:
        _write_json(args.out_json, out)
    print("ARE")
    print(format_table(summaries, "are"))
    print()
    print("Precision")
    print(format_table(summaries, "precision"))
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    spec = ZipfSpec(args.flows, args.packets, args.alpha, args.seed)
    try:
        trace = gen_zipf(spec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    n = write_flowlog(args.output, trace.keys)
    if args.emission_log:
        order = np.nonzero(trace.emitted)[0]
        with open(args.emission_log, "w", encoding="utf-8") as fh:
            fh.write("flow,count\n")
            for f, c in zip(keys_to_flows(trace.flows[order]), trace.emitted[order]):
                fh.write(f'"{f}",{int(c)}\n')
    print(f"wrote {n} packets over {int(np.count_nonzero(trace.emitted))} flows to {args.output}")
    return 0


def bench_configs(cfgs: list[RunConfig], keys: np.ndarray, repeat: int = 3) -> list[dict]:
    """Packets per second of the insert path over an in-memory key array."""
    repeat = max(repeat, 3)
    rows = []
    for cfg in cfgs:
        warm = TopKPipeline(cfg)
        warm.process(keys[:16])  # JIT warm-up, excluded from timing
        times = []
        for _ in range(repeat):
            pipe = TopKPipeline(cfg)
            t0 = time.perf_counter()
            pipe.process(keys)
            pipe.report()
            times.append(time.perf_counter() - t0)
        rates = [keys.shape[0] / t if t > 0 else 0.0 for t in times]
        mean = sum(rates) / len(rates)
        rows.append({
            "label": cfg.preset or cfg.sketch,
            "packets": int(keys.shape[0]),
            "repeats": repeat,
            "seconds": times,
            "packets_per_sec": mean,
            "spread": (max(rates) - min(rates)) / mean if mean else 0.0,
        })
    return rows


def cmd_bench(args: argparse.Namespace) -> int:
    if args.input:
        keys, _ = load_keys(args.input)
    else:
        keys = gen_zipf(ZipfSpec(args.flows, args.packets, args.alpha, args.seed)).keys
    presets = args.compare or [args.preset or "paper-tower6-pqa6", "paper-cmcu"]
    cfgs = [resolve_config(p, args.config, {"k": args.k[0] if args.k else None}) for p in presets]
    rows = bench_configs(cfgs, keys, args.repeat)
    for r in rows:
        print(f"{r['label']:>20}: {r['packets_per_sec']:>14,.0f} packets/s  "
              f"({r['packets']} packets, {r['repeats']} runs, spread {r['spread']:.1%})")
    if args.out_json:
        _write_json(args.out_json, {"schema": SCHEMA, "kind": "bench", "results": rows})
    return 0


def _csv_list(kind):
    def parse(text: str):
        return [kind(x) for x in text.split(",") if x]
    return parse


def _int(text: str) -> int:
    return int(text, 0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="towertopk", description="Top-K flow detection with TowerSketch and a priority queue array.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def config_opts(p: argparse.ArgumentParser) -> None:
        g = p.add_argument_group("configuration")
        g.add_argument("--preset", choices=sorted(PRESETS))
        g.add_argument("--config", help="TOML config file (default: $TOWERTOPK_CONFIG)")
        g.add_argument("--sketch", choices=["tower6", "tower3", "tower", "cmcu", "cs"])
        g.add_argument("--queue", choices=["pqa", "ppq"])
        g.add_argument("--slots", type=int, help="PQA slots per queue (S)")
        g.add_argument("--queues", type=int, help="PQA queue count (R); default K/4")
        g.add_argument("--m", type=_int, help="tower bits per row")
        g.add_argument("--rows", type=int, help="cmcu/cs rows")
        g.add_argument("--width", type=_int, help="cmcu/cs counters per row")
        g.add_argument("--window", type=int, help="packets per observation window")
        g.add_argument("--queue-seed", type=_int)
        g.add_argument("--reuse-row0-hash", action="store_true", help="queue reuses the sketch's first-row hash")

    p = sub.add_parser("run", help="stream a trace and write the top-K report")
    config_opts(p)
    p.add_argument("--input", "-i")
    p.add_argument("--format", choices=["auto", "pcap", "flowlog"])
    p.add_argument("-k", "--k", type=int)
    p.add_argument("--keep-other", action="store_true", help="keep non-TCP/UDP IPv4 packets with ports 0")
    p.add_argument("--out-json")
    p.add_argument("--out-csv")
    p.add_argument("--oracle", action="store_true", help="also count distinct flows exactly")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="score reports against exact counts")
    config_opts(p)
    p.add_argument("--report", help="report JSON written by 'run'")
    p.add_argument("--input", "-i", help="trace for --report (default: the path recorded in it)")
    p.add_argument("--corpus-dir", help="run and score every corpus in this directory")
    p.add_argument("--compare", type=_csv_list(str), help="comma-separated presets")
    p.add_argument("-k", "--k", type=_csv_list(int), help="comma-separated K values")
    p.add_argument("--truth-seed", type=_int, help="seed for ground-truth hashes; must match the report")
    p.add_argument("--by-identity", action="store_true", help="match ARE by flow instead of by rank")
    p.add_argument("--out-json")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gen", help="write a synthetic Zipf flowlog")
    p.add_argument("--flows", type=int, default=100_000)
    p.add_argument("--packets", type=int, default=1_000_000)
    p.add_argument("--alpha", type=float, default=1.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--emission-log", help="CSV of exact per-flow emissions")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="measure insert-path throughput")
    config_opts(p)
    p.add_argument("--input", "-i")
    p.add_argument("--flows", type=int, default=100_000)
    p.add_argument("--packets", type=int, default=1_000_000)
    p.add_argument("--alpha", type=float, default=1.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--compare", type=_csv_list(str), help="comma-separated presets")
    p.add_argument("-k", "--k", type=_csv_list(int))
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--out-json")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (InputError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 3
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
