"""Freeze reference decodes of MIT-BIH record 100 for the ingest acceptance test.

Needs the `wfdb` package (an independent reader) and a local copy of the
database, e.g. ``python3 scripts/make_record100_fixture.py data/mitdb``.
"""

import argparse
import json
from pathlib import Path

import numpy as np
import wfdb

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "mitdb_100_reference.json"
CLASS_SYMBOLS = set("NLRVAFf/")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("db_dir")
    ap.add_argument("--out", default=str(OUT))
    args = ap.parse_args()
    base = str(Path(args.db_dir) / "100")
    rec = wfdb.rdrecord(base, physical=False)
    ann = wfdb.rdann(base, "atr")
    samples = np.asarray(ann.sample)
    symbols = list(ann.symbol)
    n = rec.sig_len
    in_bounds = [s for s, sym in zip(samples, symbols) if sym in CLASS_SYMBOLS and s - 110 >= 0 and s + 110 <= n]
    payload = {
        "record": "100",
        "n_samples": int(n),
        "fs": float(rec.fs),
        "gain": [float(g) for g in rec.adc_gain],
        "baseline": [int(b) for b in rec.baseline],
        "fmt": list(rec.fmt),
        "signal_first_1000": rec.d_signal[:1000].astype(int).tolist(),
        "ann_sample": samples.astype(int).tolist(),
        "ann_symbol": symbols,
        "class_beats_in_bounds": len(in_bounds),
    }
    Path(args.out).write_text(json.dumps(payload))
    print(f"wrote {args.out}: {len(samples)} annotations, {len(in_bounds)} class beats in bounds")


if __name__ == "__main__":
    main()
