#!/usr/bin/env python3
"""Verdict matrix over the bundled model pairs and analysis configurations.

Runs every (candidate, reference) pair under each named configuration and
prints one row per pair with the verdict per configuration, flagging any
disagreement.  Useful as a quick soundness sweep after touching the
reduction passes.
"""

import argparse
import itertools
import json
import sys
import time
from pathlib import Path

from dfcompat import CheckConfig, check_compatibility, parse_model

DEFAULT_PAIRS = [
    ("flipflop", "flipflop"),
    ("flipflop_logic", "flipflop"),
    ("flipflop_reset", "flipflop"),
    ("bands_v1", "bands_v0"),
    ("bands_v2", "bands_v0"),
    ("bands_v2", "bands_v1"),
    ("cruise_v4", "cruise_v3"),
    ("limiter_sign", "limiter_plain"),
    ("charge_pump", "charge_pump"),
    ("tri_latch", "tri_latch"),
    ("pulse_keeper", "pulse_keeper"),
]

CONFIGS = {
    "default": CheckConfig(),
    "no-pruning": CheckConfig(clone_pruning=False),
    "joint": CheckConfig(output_split=False),
    "bare": CheckConfig(clone_pruning=False, output_split=False),
}


def load(models_dir: Path, name: str):
    return parse_model((models_dir / f"{name}.dfm").read_text())


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--models-dir", type=Path,
                    default=Path(__file__).resolve().parents[1] / "models")
    ap.add_argument("--pair", nargs=2, action="append", metavar=("CAND", "REF"),
                    help="check only these pairs (repeatable)")
    ap.add_argument("--json", type=Path, metavar="FILE",
                    help="also dump the matrix as JSON")
    args = ap.parse_args(argv)

    pairs = [tuple(p) for p in args.pair] if args.pair else DEFAULT_PAIRS
    rows = []
    disagreements = 0
    for cand, ref in pairs:
        model_a, model_b = load(args.models_dir, cand), load(args.models_dir, ref)
        verdicts = {}
        timings = {}
        for label, config in CONFIGS.items():
            started = time.perf_counter()
            report = check_compatibility(model_a, model_b, config=config)
            timings[label] = time.perf_counter() - started
            verdict = report.verdict
            if report.conditional:
                verdict += "*"
            verdicts[label] = verdict
        agree = len(set(verdicts.values())) == 1
        disagreements += not agree
        rows.append({
            "candidate": cand, "reference": ref,
            "verdicts": verdicts, "seconds": timings, "agree": agree,
        })

    pair_w = max(len(f"{r['candidate']} vs {r['reference']}") for r in rows)
    cols = list(CONFIGS)
    col_w = max(
        *(len(c) for c in cols),
        *(len(v) for r in rows for v in r["verdicts"].values()),
    )
    header = f"{'pair':<{pair_w}}  " + "  ".join(f"{c:<{col_w}}" for c in cols)
    print(header)
    print("-" * len(header))
    for r in rows:
        cells = "  ".join(f"{r['verdicts'][c]:<{col_w}}" for c in cols)
        mark = "" if r["agree"] else "  <-- disagree"
        print(f"{r['candidate'] + ' vs ' + r['reference']:<{pair_w}}  {cells}{mark}")
    print(f"\n{len(rows)} pairs x {len(cols)} configurations; "
          f"{disagreements} disagreement(s)  (* = conditional on fixed inputs)")

    if args.json:
        args.json.write_text(json.dumps(rows, indent=2) + "\n")
        print(f"wrote {args.json}")
    return 1 if disagreements else 0


if __name__ == "__main__":
    sys.exit(main())
