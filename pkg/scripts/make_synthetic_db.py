"""Write a synthetic MIT-BIH-shaped database (48 records, format 212 + MIT annotations).

Useful for exercising the pipeline without the real recordings:

    python3 scripts/make_synthetic_db.py data/synth --duration 60 --seed 0
"""

import argparse

from ecgi.synth import SynthConfig, generate_database


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out_dir")
    ap.add_argument("--duration", type=float, default=60.0, help="seconds per record")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--records", help="comma-separated subset of record names")
    args = ap.parse_args()
    records = args.records.split(",") if args.records else None
    names = generate_database(args.out_dir, records, SynthConfig(duration_s=args.duration, seed=args.seed))
    print(f"wrote {len(names)} records to {args.out_dir}")


if __name__ == "__main__":
    main()
