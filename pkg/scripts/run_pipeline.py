"""Run every pipeline step in order through the ``ecgi`` command line.

    python3 scripts/run_pipeline.py --db-dir data/mitdb --out-dir out --seed 0

Extra flags after ``--`` go to every step, e.g. ``-- --epochs 2 --subsample 2000``.
A failing step stops the run with its exit code.
"""

import argparse
import sys
import time

from ecgi import cli

STEPS = [
    ["ingest"],
    ["resample"],
    ["train"],
    ["eval-cv"],
    ["eval-lgo"],
    *(["interpret", "--method", "gradcam", "--model", k, "--noise"] for k in ("CNN", "LSTM")),
    *(["interpret", "--method", "pfi", "--model", k] for k in ("NB", "RFC", "MLP", "CNN", "LSTM")),
    *(["interpret", "--method", m, "--model", "CNN"] for m in ("pdp", "shap")),
    ["stats"],
    ["report"],
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--db-dir", default="data/mitdb")
    ap.add_argument("--out-dir", default="out")
    ap.add_argument("--seed", default="0")
    ap.add_argument("--skip-cv", action="store_true", help="leave out the (slow) cross-validation step")
    args, extra = ap.parse_known_args()
    extra = [a for a in extra if a != "--"]
    common = ["--db-dir", args.db_dir, "--out-dir", args.out_dir, "--seed", args.seed, *extra]
    for step in STEPS:
        if args.skip_cv and step[0] == "eval-cv":
            continue
        t0 = time.perf_counter()
        code = cli.main(step + common)
        print(f"[{time.perf_counter() - t0:7.1f} s] {' '.join(step)} -> {code}", flush=True)
        if code:
            sys.exit(code)


if __name__ == "__main__":
    main()
