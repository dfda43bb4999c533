#!/usr/bin/env python3
"""Stage-by-stage size report for each bundled model.

For every model the pipeline is run once and the size of each intermediate
representation is recorded: flat block count, control-flow graph nodes,
edges and path count, symbolic state variables before and after clone
pruning, guarded-transition count, and unfolded state/transition counts.
"""

import argparse
import json
import sys
import time
from pathlib import Path

from dfcompat import (
    CheckConfig,
    build_efa,
    build_step,
    extract_cfg,
    flatten_and_validate,
    parse_model,
    unfold_to_ts,
)
from dfcompat.cfg import count_paths, sorted_order


def report_one(path: Path) -> dict:
    model = parse_model(path.read_text())
    flat = flatten_and_validate(model)
    started = time.perf_counter()
    cfg = extract_cfg(flat, sorted_order(flat))
    raw = build_step(flat, CheckConfig(clone_pruning=False))
    step = build_step(flat)
    efa = build_efa(step)
    ts = unfold_to_ts(step)
    elapsed = time.perf_counter() - started
    return {
        "model": flat.name,
        "blocks": len(flat.blocks),
        "inputs": len(flat.inputs),
        "outputs": len(flat.outputs),
        "cfg_nodes": len(cfg.nodes),
        "cfg_edges": len(cfg.edges),
        "cfg_paths": count_paths(cfg),
        "vars_raw": len(raw.vars),
        "vars_pruned": len(step.vars),
        "efa_transitions": len(efa.transitions),
        "ts_states": len(ts.states),
        "ts_transitions": sum(len(t) for t in ts.transitions),
        "seconds": round(elapsed, 4),
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("models", nargs="*", type=Path,
                    help="model files (default: bundled models/*.dfm)")
    ap.add_argument("--json", type=Path, metavar="FILE")
    args = ap.parse_args(argv)

    paths = args.models or sorted(
        (Path(__file__).resolve().parents[1] / "models").glob("*.dfm")
    )
    rows = [report_one(p) for p in paths]

    cols = list(rows[0])
    widths = {
        c: max(len(c), *(len(str(r[c])) for r in rows)) for c in cols
    }
    print("  ".join(f"{c:<{widths[c]}}" for c in cols))
    for r in rows:
        print("  ".join(f"{str(r[c]):<{widths[c]}}" for c in cols))

    if args.json:
        args.json.write_text(json.dumps(rows, indent=2) + "\n")
        print(f"wrote {args.json}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
