"""Synthetic MIT-BIH-like records written in genuine WFDB format.

The generated beats carry their class-specific morphology mostly within the
QRS complex, with smaller differences in the P and T waves, so the full
ingest -> train -> explain pipeline can be exercised without the real
database.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .wfdb import ANNOTATION_SYMBOLS, AUX, SKIP, encode_format212

FS = 360
GAIN = 200.0
ADC_ZERO = 1024

_CODE = {sym: code for code, sym in ANNOTATION_SYMBOLS.items()}

# (center offset from R in samples, width sigma, amplitude mV) per wave.
_BASE_WAVES = {
    "P": (-62, 9.0, 0.15),
    "Q": (-9, 3.0, -0.12),
    "R": (0, 4.0, 1.0),
    "S": (9, 3.0, -0.25),
    "T": (75, 16.0, 0.30),
}

# Per-class edits applied to the base waves; extra waves get new keys.
TEMPLATES: dict[str, dict[str, tuple[float, float, float]]] = {
    "N": {},
    "L": {"Q": (-14, 4.0, 0.0), "R": (-7, 7.0, 0.75), "R2": (8, 7.0, 0.8), "S": (20, 5.0, -0.05),
          "T": (80, 18.0, -0.22)},
    "R": {"R": (-5, 3.5, 0.65), "S": (4, 3.5, -0.45), "R2": (13, 4.5, 0.7), "T": (80, 16.0, 0.18)},
    "V": {"P": (-62, 9.0, 0.0), "Q": (-9, 3.0, 0.0), "R": (2, 11.0, 1.45), "S": (24, 7.0, -0.4),
          "T": (82, 20.0, -0.45)},
    "A": {"P": (-48, 7.0, 0.06), "R": (0, 3.4, 1.05)},
    "F": {"R": (1, 7.5, 1.2), "S": (15, 5.0, -0.35), "T": (78, 18.0, 0.05)},
    "/": {"P": (-62, 9.0, 0.0), "SPIKE": (-24, 1.2, 1.6), "R": (2, 9.0, 0.9), "S": (20, 6.0, -0.5),
          "T": (80, 18.0, -0.25)},
    "f": {"P": (-62, 9.0, 0.08), "SPIKE": (-24, 1.2, 0.8), "R": (1, 6.5, 0.95), "S": (15, 5.0, -0.4),
          "T": (78, 17.0, 0.1)},
}

# Record compositions loosely follow the real database: which records use
# which beat types, with the five hold-out patients free of L, R and A beats.
DEFAULT_COMPOSITION: dict[str, dict[str, float]] = {
    "100": {"N": 0.9, "A": 0.1},
    "101": {"N": 0.97, "A": 0.03},
    "102": {"/": 0.6, "f": 0.3, "N": 0.1},
    "103": {"N": 1.0},
    "104": {"/": 0.5, "f": 0.4, "N": 0.1},
    "105": {"N": 0.95, "V": 0.05},
    "106": {"N": 0.75, "V": 0.25},
    "107": {"/": 0.95, "V": 0.05},
    "108": {"N": 0.9, "V": 0.05, "F": 0.05},
    "109": {"L": 0.9, "V": 0.05, "F": 0.05},
    "111": {"L": 1.0},
    "112": {"N": 1.0},
    "113": {"N": 1.0},
    "114": {"N": 0.9, "V": 0.05, "F": 0.05},
    "115": {"N": 1.0},
    "116": {"N": 0.95, "V": 0.05},
    "117": {"N": 1.0},
    "118": {"R": 0.85, "A": 0.1, "V": 0.05},
    "119": {"N": 0.7, "V": 0.3},
    "121": {"N": 1.0},
    "122": {"N": 1.0},
    "123": {"N": 1.0},
    "124": {"R": 0.9, "V": 0.05, "F": 0.05},
    "200": {"N": 0.7, "V": 0.25, "A": 0.05},
    "201": {"N": 0.8, "A": 0.1, "V": 0.1},
    "202": {"N": 0.9, "A": 0.1},
    "203": {"N": 0.75, "V": 0.25},
    "205": {"N": 0.95, "V": 0.05},
    "207": {"L": 0.5, "R": 0.4, "V": 0.1},
    "208": {"N": 0.6, "V": 0.3, "F": 0.1},
    "209": {"N": 0.85, "A": 0.15},
    "210": {"N": 0.85, "V": 0.1, "F": 0.05},
    "212": {"N": 0.5, "R": 0.5},
    "213": {"N": 0.8, "V": 0.1, "F": 0.1},
    "214": {"L": 0.9, "V": 0.1},
    "215": {"N": 0.95, "V": 0.05},
    "217": {"/": 0.6, "f": 0.3, "V": 0.1},
    "219": {"N": 0.9, "V": 0.05, "F": 0.05},
    "220": {"N": 0.9, "A": 0.1},
    "221": {"N": 0.85, "V": 0.15},
    "222": {"N": 0.8, "A": 0.2},
    "223": {"N": 0.8, "V": 0.1, "A": 0.05, "F": 0.05},
    "228": {"N": 0.8, "V": 0.2},
    "230": {"N": 1.0},
    "231": {"R": 0.6, "N": 0.4},
    "232": {"R": 0.3, "A": 0.7},
    "233": {"N": 0.75, "V": 0.2, "F": 0.05},
    "234": {"N": 1.0},
}


@dataclass
class SynthConfig:
    duration_s: float = 60.0
    noise_mv: float = 0.03
    amplitude_jitter: float = 0.08
    timing_jitter: float = 1.5
    seed: int = 0


def _waves(symbol: str) -> dict[str, tuple[float, float, float]]:
    waves = dict(_BASE_WAVES)
    waves.update(TEMPLATES[symbol])
    return waves


def beat_waveform(symbol: str, t: np.ndarray, rng: np.random.Generator | None = None,
                  cfg: SynthConfig | None = None) -> np.ndarray:
    """Sum-of-Gaussians beat evaluated at offsets ``t`` (samples from the R peak)."""
    cfg = cfg or SynthConfig()
    out = np.zeros_like(t, dtype=float)
    for center, width, amp in _waves(symbol).values():
        if rng is not None:
            center = center + rng.normal(0, cfg.timing_jitter)
            amp = amp * (1 + rng.normal(0, cfg.amplitude_jitter))
            width = width * (1 + rng.normal(0, cfg.amplitude_jitter / 2))
        out += amp * np.exp(-0.5 * ((t - center) / width) ** 2)
    return out


def synth_record(name: str, composition: dict[str, float], cfg: SynthConfig):
    """Return ``(adc [n, 2], annotations [(sample, symbol, aux)])`` for one record."""
    seed = np.random.SeedSequence([cfg.seed, zlib.crc32(name.encode())])
    rng = np.random.default_rng(seed)
    n = int(cfg.duration_s * FS)
    symbols = list(composition)
    probs = np.array([composition[s] for s in symbols], dtype=float)
    probs /= probs.sum()

    # Second lead is a different projection of the same cardiac source.
    lead_gain = rng.uniform(0.45, 0.8)
    lead_sign = 1.0 if rng.random() < 0.7 else -1.0

    mv = np.zeros((n, 2))
    ann: list[tuple[int, str, str]] = [(0, "+", "(N")]
    t_all = np.arange(n, dtype=float)
    pos = int(rng.integers(40, 200))
    rr_base = rng.uniform(230, 330)
    while pos < n - 5:
        sym = symbols[int(rng.choice(len(symbols), p=probs))]
        lo, hi = max(0, pos - 150), min(n, pos + 200)
        t = t_all[lo:hi] - pos
        mv[lo:hi, 0] += beat_waveform(sym, t, rng, cfg)
        mv[lo:hi, 1] += lead_sign * lead_gain * beat_waveform(sym, t, rng, cfg)
        ann.append((pos, sym, ""))
        rr = rr_base * (0.75 if sym in "AV" else 1.0) + rng.normal(0, 12)
        pos += int(max(140, rr))

    wander = 0.08 * np.sin(2 * np.pi * t_all / (FS * rng.uniform(3, 7)) + rng.uniform(0, 6.3))
    mv += wander[:, None]
    mv += rng.normal(0, cfg.noise_mv, mv.shape)

    # A few non-beat annotations keep the parser's filtering honest.
    if len(ann) > 6:
        k = len(ann) // 2
        ann.insert(k, (ann[k][0] + 20, "~", ""))
        ann.insert(k + 2, (ann[k + 1][0] + 30, "Q", ""))
    ann.sort(key=lambda a: a[0])

    adc = np.clip(np.round(mv * GAIN + ADC_ZERO), 0, 2047).astype(np.int64)
    return adc, ann


def encode_annotations(events: list[tuple[int, str, str]]) -> bytes:
    """Serialize ``(sample, symbol, aux)`` triples as an MIT annotation stream."""
    out = bytearray()
    last = 0
    for sample, sym, aux in events:
        delta = sample - last
        if delta < 0:
            raise ValueError("annotations must be sorted")
        if delta > 1023:
            out += (SKIP << 10).to_bytes(2, "little")
            out += ((delta >> 16) & 0xFFFF).to_bytes(2, "little")
            out += (delta & 0xFFFF).to_bytes(2, "little")
            delta = 0
        out += ((_CODE[sym] << 10) | delta).to_bytes(2, "little")
        if aux:
            raw = aux.encode("latin-1")
            out += ((AUX << 10) | len(raw)).to_bytes(2, "little")
            out += raw + (b"\0" if len(raw) % 2 else b"")
        last = sample
    out += b"\0\0"
    return bytes(out)


def write_record(directory: str | Path, name: str, adc: np.ndarray, events) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    n = len(adc)
    (directory / f"{name}.dat").write_bytes(encode_format212(adc))
    lines = [f"{name} 2 {FS} {n}"]
    for ch, desc in enumerate(("MLII", "V1")):
        checksum = int(adc[:, ch].sum()) & 0xFFFF
        if checksum >= 1 << 15:
            checksum -= 1 << 16
        lines.append(f"{name}.dat 212 {GAIN:g} 11 {ADC_ZERO} {int(adc[0, ch])} {checksum} 0 {desc}")
    lines.append("# synthetic record")
    (directory / f"{name}.hea").write_text("\n".join(lines) + "\n")
    (directory / f"{name}.atr").write_bytes(encode_annotations(events))


def generate_database(directory: str | Path, records: list[str] | None = None,
                      cfg: SynthConfig | None = None,
                      composition: dict[str, dict[str, float]] | None = None) -> list[str]:
    """Write a synthetic database and return the record names."""
    cfg = cfg or SynthConfig()
    composition = composition or DEFAULT_COMPOSITION
    records = list(records or composition)
    for name in records:
        adc, events = synth_record(name, composition[name], cfg)
        write_record(directory, name, adc, events)
    return records
