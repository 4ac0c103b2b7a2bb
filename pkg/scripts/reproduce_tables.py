"""Accuracy tables on synthetic Zipf corpora.

Sketch comparison (tower6, tower3, CMCU, CS, all with exact capture) and
queue comparison (PPQ, PQA6, PQA4 on tower6), over a range of K. Cells are
mean and population std across corpora.

    python scripts/reproduce_tables.py --corpora 5 --packets 1000000
"""

import argparse
import json
import time

from towertopk.config import resolve_config
from towertopk.evaluation import Summary, format_table, run_and_evaluate
from towertopk.traces import ZipfSpec, gen_zipf

SKETCHES = ["paper-tower6-pqa6:ppq", "paper-tower3", "paper-cmcu", "paper-cs"]
QUEUES = ["paper-ppq", "paper-tower6-pqa6", "paper-pqa4"]


def parse_args():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--corpora", type=int, default=5)
    p.add_argument("--flows", type=int, default=100_000)
    p.add_argument("--packets", type=int, default=1_000_000)
    p.add_argument("--alpha-min", type=float, default=1.0)
    p.add_argument("--alpha-max", type=float, default=1.3)
    p.add_argument("--seed", type=int, default=1000)
    p.add_argument("--k", default="1024,2048,4096,8192,16384")
    p.add_argument("--out-json")
    return p.parse_args()


def config_for(label, k):
    # "preset:ppq" swaps the queue for exact capture
    preset, _, queue = label.partition(":")
    flags = {"k": k}
    if queue:
        flags["queue"] = queue
    return resolve_config(preset, flags=flags)


def label_of(label):
    return {"paper-tower6-pqa6:ppq": "tower6", "paper-tower3": "tower3", "paper-cmcu": "cmcu",
            "paper-cs": "cs", "paper-ppq": "PPQ", "paper-tower6-pqa6": "PQA6", "paper-pqa4": "PQA4"}[label]


def main():
    args = parse_args()
    ks = [int(x) for x in args.k.split(",")]
    n = args.corpora
    alphas = [args.alpha_min + (args.alpha_max - args.alpha_min) * i / max(n - 1, 1) for i in range(n)]
    t0 = time.perf_counter()
    corpora = [gen_zipf(ZipfSpec(args.flows, args.packets, a, args.seed + i)).keys for i, a in enumerate(alphas)]
    print(f"{n} corpora, alpha {', '.join(f'{a:.3f}' for a in alphas)}, "
          f"{args.packets} packets over {args.flows} flows ({time.perf_counter() - t0:.1f} s)\n", flush=True)

    out = {}
    for title, labels in (("sketches, exact capture", SKETCHES), ("queues on tower6", QUEUES)):
        summaries = []
        for lab in labels:
            for k in ks:
                cfg = config_for(lab, k)
                s = Summary(label_of(lab), k, [], [])
                for keys in corpora:
                    (r,) = run_and_evaluate(cfg, keys)
                    s.are.append(r.are_mean)
                    s.precision.append(r.precision)
                summaries.append(s)
        for metric in ("are", "precision"):
            print(f"{metric.upper() if metric == 'are' else 'Precision'}: {title}")
            print(format_table(summaries, metric))
            print(flush=True)
        out[title] = [s.to_dict() for s in summaries]

    if args.out_json:
        with open(args.out_json, "w", encoding="utf-8") as fh:
            json.dump(out, fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
