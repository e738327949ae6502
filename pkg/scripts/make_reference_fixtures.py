"""Regenerate the frozen reference fixtures under tests/fixtures/.

Requires the `wfdb` and `scipy` packages. These act only as independent
reference implementations; ecgi itself never imports them for the checked
computations.

    python scripts/make_reference_fixtures.py
"""

import json
import os
from pathlib import Path

import numpy as np
import scipy.stats
import wfdb

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def wfdb_fixtures():
    ref = OUT / "wfdb_ref"
    ref.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20240101)
    n = 3000
    t = np.arange(n)
    sig = np.stack(
        [
            1024 + 300 * np.sin(t / 17.0) + rng.integers(-40, 40, n),
            -200 + 900 * np.cos(t / 5.0) + rng.integers(-60, 60, n),
        ],
        axis=1,
    )
    sig[5, 0], sig[6, 0], sig[7, 1], sig[8, 1] = 2047, -2047, -1, 0
    sig = sig.astype(np.int64)
    cwd = os.getcwd()
    os.chdir(ref)
    try:
        wfdb.wrsamp(
            "refrec", fs=360, units=["mV", "mV"], sig_name=["MLII", "V5"],
            d_signal=sig, fmt=["212", "212"], adc_gain=[200, 200], baseline=[1024, 1024],
        )
        samples = np.array([12, 90, 400, 400, 1500, 2600, 2990])
        symbols = ["N", "V", "+", "L", "A", "/", "f"]
        wfdb.wrann(
            "refrec", "atr", sample=samples, symbol=symbols,
            subtype=np.array([0, 1, 0, 0, 2, 0, 0]), chan=np.array([0, 0, 0, 1, 0, 0, 0]),
            num=np.array([0, 0, 0, 0, 3, 0, 0]),
            aux_note=["", "", "(AFL", "", "", "", ""],
        )
        rec = wfdb.rdrecord("refrec", physical=False)
        ann = wfdb.rdann("refrec", "atr")
    finally:
        os.chdir(cwd)
    expected = {
        "n_samples": int(rec.sig_len),
        "fs": float(rec.fs),
        "fmt": list(rec.fmt),
        "adc_gain": [float(g) for g in rec.adc_gain],
        "baseline": [int(b) for b in rec.baseline],
        "init_value": [int(v) for v in rec.init_value],
        "signal": rec.d_signal.astype(int).tolist(),
        "ann_sample": [int(s) for s in ann.sample],
        "ann_symbol": list(ann.symbol),
    }
    (ref / "refrec_expected.json").write_text(json.dumps(expected))

    # Single frames written by the reference writer, decoded by the reference reader.
    frames = {}
    for name, pair in {"frame_1000_0": (1000, 0), "frame_m1_m1": (-1, -1), "frame_0_0": (0, 0)}.items():
        cwd = os.getcwd()
        os.chdir(ref)
        try:
            wfdb.wrsamp(name, fs=360, units=["mV", "mV"], sig_name=["a", "b"],
                        d_signal=np.array([pair]), fmt=["212", "212"],
                        adc_gain=[200, 200], baseline=[0, 0])
            raw = (ref / f"{name}.dat").read_bytes()[:3]
            back = wfdb.rdrecord(name, physical=False).d_signal[0].tolist()
        finally:
            os.chdir(cwd)
        frames[name] = {"bytes": list(raw), "decoded": back}
        for ext in ("hea", "dat"):
            (ref / f"{name}.{ext}").unlink()
    # One annotation word (N at sample 5) through the reference annotation reader.
    cwd = os.getcwd()
    os.chdir(ref)
    try:
        wfdb.wrann("one", "atr", sample=np.array([5]), symbol=["N"])
        raw = (ref / "one.atr").read_bytes()
        a = wfdb.rdann("one", "atr")
    finally:
        os.chdir(cwd)
    (ref / "one.atr").unlink()
    frames["annotation_N_at_5"] = {"bytes": list(raw), "sample": a.sample.tolist(),
                                   "symbol": list(a.symbol)}
    (ref / "frames.json").write_text(json.dumps(frames, indent=1))


def stats_fixtures():
    rng = np.random.default_rng(7)
    cases = []
    samples = [
        rng.normal(size=3), rng.normal(size=4), rng.normal(size=5), rng.normal(size=6),
        rng.normal(size=11), rng.normal(size=12), rng.exponential(size=20),
        rng.normal(size=50), rng.uniform(size=200), rng.standard_t(3, size=1000),
        np.array([0.91, 0.93, 0.94, 0.95, 0.96, 0.97]),
        np.array([1.0, 2.0, 2.0, 3.0, 10.0]),
    ]
    for x in samples:
        w, p = scipy.stats.shapiro(x)
        cases.append({"x": x.tolist(), "W": float(w), "p": float(p)})

    kendall = []
    for n in (9, 15, 30):
        a = rng.integers(0, 6, n).astype(float)
        b = a + rng.normal(0, 2, n)
        r = scipy.stats.kendalltau(a, b, method="asymptotic")
        kendall.append({"a": a.tolist(), "b": b.tolist(), "tau": float(r.statistic),
                        "p": float(r.pvalue)})

    wilcoxon = []
    for n in (30, 40):
        a = rng.normal(size=n)
        b = a + rng.normal(0.3, 1, n)
        b[:3] = np.round(b[:3], 0)
        a[:3] = np.round(a[:3], 0)
        r = scipy.stats.wilcoxon(a, b, method="approx", zero_method="wilcox", correction=False)
        wilcoxon.append({"a": a.tolist(), "b": b.tolist(), "W": float(r.statistic),
                         "p": float(r.pvalue)})

    kruskal = []
    for sizes in ((6, 6, 6, 6, 6), (5, 8, 3)):
        groups = [np.round(rng.normal(loc=i * 0.3, size=s), 1) for i, s in enumerate(sizes)]
        r = scipy.stats.kruskal(*groups)
        kruskal.append({"groups": [g.tolist() for g in groups], "H": float(r.statistic),
                        "p": float(r.pvalue)})

    (OUT / "stats_reference.json").write_text(
        json.dumps({"shapiro": cases, "kendall": kendall, "wilcoxon": wilcoxon,
                    "kruskal": kruskal}, indent=1)
    )


def record100_header_fixture():
    """Parse the committed copy of record 100's header with the reference reader."""
    ref = OUT / "mitdb_header"
    h = wfdb.rdheader(str(ref / "100"))
    expected = {
        "n_signals": h.n_sig,
        "fs": float(h.fs),
        "n_samples": h.sig_len,
        "fmt": [int(f) for f in h.fmt],
        "gain": [float(g) for g in h.adc_gain],
        "baseline": [int(b) for b in h.baseline],
        "init_value": [int(v) for v in h.init_value],
    }
    (ref / "100_expected.json").write_text(json.dumps(expected, indent=1))


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    wfdb_fixtures()
    stats_fixtures()
    record100_header_fixture()
    print(f"fixtures written to {OUT}")
