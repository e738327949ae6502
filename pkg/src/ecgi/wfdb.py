"""Reader for MIT-BIH records stored as WFDB header / format-212 / MIT annotation files."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    InvariantViolation,
    MalformedHeader,
    MissingFile,
    TruncatedAnnotations,
    TruncatedSignal,
    UnknownCode,
    UnsupportedFormat,
)

# Standard MIT annotation code table (codes 15 and 17 are unassigned).
ANNOTATION_SYMBOLS: dict[int, str] = {
    1: "N", 2: "L", 3: "R", 4: "a", 5: "V", 6: "F", 7: "J", 8: "A", 9: "S", 10: "E",
    11: "j", 12: "/", 13: "Q", 14: "~", 16: "|", 18: "s", 19: "T", 20: "*", 21: "D",
    22: '"', 23: "=", 24: "p", 25: "B", 26: "^", 27: "t", 28: "+", 29: "u", 30: "?",
    31: "!", 32: "[", 33: "]", 34: "e", 35: "n", 36: "@", 37: "x", 38: "f", 39: "(",
    40: ")", 41: "r",
}

SKIP, NUM, SUB, CHN, AUX = 59, 60, 61, 62, 63


@dataclass(frozen=True)
class SignalSpec:
    file_name: str
    format_code: int
    gain: float
    baseline: int
    initial_value: int
    adc_zero: int = 0
    description: str = ""


@dataclass(frozen=True)
class RecordHeader:
    record_name: str
    n_signals: int
    sampling_frequency: float
    n_samples: int
    signals: tuple[SignalSpec, ...] = ()


@dataclass(frozen=True)
class AnnotationEvent:
    sample_index: int
    type_code: int
    symbol: str


@dataclass(frozen=True)
class EcgRecord:
    header: RecordHeader
    signal: np.ndarray  # [n_samples, 2] int ADC units
    annotations: tuple[AnnotationEvent, ...] = field(default=())

    def __post_init__(self):
        n = self.header.n_samples
        if self.signal.shape != (n, self.header.n_signals):
            raise InvariantViolation(
                f"signal shape {self.signal.shape} != ({n}, {self.header.n_signals})"
            )
        last = -1
        for ev in self.annotations:
            if ev.sample_index < last:
                raise InvariantViolation("annotation positions decrease")
            if not 0 <= ev.sample_index < n:
                raise InvariantViolation(
                    f"annotation at sample {ev.sample_index} outside record of {n} samples"
                )
            last = ev.sample_index
        self.signal.setflags(write=False)


_NUMBER = re.compile(r"^[-+]?\d+(\.\d*)?([eE][-+]?\d+)?")


def _leading_number(token: str, what: str) -> float:
    m = _NUMBER.match(token)
    if not m:
        raise MalformedHeader(f"non-numeric {what}: {token!r}")
    return float(m.group(0))


def _to_int(token: str, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise MalformedHeader(f"non-numeric {what}: {token!r}") from None


def parse_header(text: str) -> RecordHeader:
    """Parse the contents of a ``.hea`` file.

    Only single-segment records whose signals are all stored in format 212
    are accepted. Fields after the initial value on a signal line (checksum,
    block size, description) are optional and ignored apart from the
    description.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise MalformedHeader("empty header")

    rec = lines[0].split()
    if len(rec) < 4:
        raise MalformedHeader(f"record line needs name, signals, fs, samples: {lines[0]!r}")
    name = rec[0].split("/")[0]
    if "/" in rec[0]:
        raise UnsupportedFormat("multi-segment records are not supported")
    n_signals = _to_int(rec[1], "signal count")
    fs = _leading_number(rec[2].split("/")[0], "sampling frequency")
    n_samples = _to_int(rec[3], "sample count")
    if n_signals <= 0 or fs <= 0 or n_samples <= 0:
        raise MalformedHeader("signal count, sampling frequency and sample count must be positive")

    if len(lines) - 1 < n_signals:
        raise MalformedHeader(f"expected {n_signals} signal lines, found {len(lines) - 1}")

    signals = []
    for line in lines[1 : 1 + n_signals]:
        tok = line.split()
        if len(tok) < 2:
            raise MalformedHeader(f"signal line too short: {line!r}")
        fmt = int(_leading_number(tok[1], "format"))
        if fmt != 212:
            raise UnsupportedFormat(f"format {fmt} (only 212 is supported)")
        gain, baseline = 200.0, None
        if len(tok) > 2:
            m = re.match(r"^([-+]?[\d.eE+-]+)(?:\(([-+]?\d+)\))?(?:/.*)?$", tok[2])
            if not m:
                raise MalformedHeader(f"bad gain field: {tok[2]!r}")
            gain = float(m.group(1)) or 200.0
            if m.group(2) is not None:
                baseline = int(m.group(2))
        adc_zero = _to_int(tok[4], "ADC zero") if len(tok) > 4 else 0
        init = _to_int(tok[5], "initial value") if len(tok) > 5 else adc_zero
        desc = " ".join(tok[8:]) if len(tok) > 8 else ""
        signals.append(
            SignalSpec(
                file_name=tok[0],
                format_code=fmt,
                gain=gain,
                baseline=adc_zero if baseline is None else baseline,
                initial_value=init,
                adc_zero=adc_zero,
                description=desc,
            )
        )

    return RecordHeader(name, n_signals, fs, n_samples, tuple(signals))


def decode_format212(data: bytes, n_samples: int) -> np.ndarray:
    """Unpack two-channel format-212 frames into an ``[n_samples, 2]`` int array."""
    need = 3 * n_samples
    if len(data) < need:
        raise TruncatedSignal(f"{len(data)} bytes cannot hold {n_samples} frames ({need} needed)")
    b = np.frombuffer(data, dtype=np.uint8, count=need).reshape(n_samples, 3).astype(np.int32)
    s1 = ((b[:, 1] & 0x0F) << 8) | b[:, 0]
    s2 = ((b[:, 1] & 0xF0) << 4) | b[:, 2]
    out = np.stack([s1, s2], axis=1)
    out[out > 2047] -= 4096
    return out


def encode_format212(samples: np.ndarray) -> bytes:
    """Pack ``[n, 2]`` integers in [-2048, 2047] into format-212 frames."""
    s = np.asarray(samples, dtype=np.int64)
    if s.ndim != 2 or s.shape[1] != 2:
        raise ValueError("expected an [n, 2] array")
    if s.min(initial=0) < -2048 or s.max(initial=0) > 2047:
        raise ValueError("samples must fit in 12-bit two's complement")
    u = s & 0xFFF
    out = np.empty((len(s), 3), dtype=np.uint8)
    out[:, 0] = u[:, 0] & 0xFF
    out[:, 1] = ((u[:, 0] >> 8) & 0x0F) | ((u[:, 1] >> 4) & 0xF0)
    out[:, 2] = u[:, 1] & 0xFF
    return out.tobytes()


def parse_annotations(data: bytes) -> list[AnnotationEvent]:
    """Decode an MIT-format annotation stream.

    Pseudo-annotations (SKIP, NUM, SUB, CHN, AUX) are consumed without
    producing events; SKIP contributes its 32-bit interval to the running
    sample position.
    """
    events: list[AnnotationEvent] = []
    pos = 0
    sample = 0
    n = len(data)
    while True:
        if pos + 2 > n:
            raise TruncatedAnnotations("annotation stream ended without an end-of-file word")
        word = data[pos] | (data[pos + 1] << 8)
        pos += 2
        code, value = word >> 10, word & 0x3FF
        if code == 0:
            if value == 0:
                return events
            raise UnknownCode(f"annotation code 0 with interval {value} at byte {pos - 2}")
        if code == SKIP:
            if pos + 4 > n:
                raise TruncatedAnnotations("SKIP word without its interval")
            hi = data[pos] | (data[pos + 1] << 8)
            lo = data[pos + 2] | (data[pos + 3] << 8)
            interval = (hi << 16) | lo
            if interval >= 1 << 31:
                interval -= 1 << 32
            sample += interval
            pos += 4
        elif code in (NUM, SUB, CHN):
            pass
        elif code == AUX:
            pos += value + (value & 1)
            if pos > n:
                raise TruncatedAnnotations("AUX payload runs past end of stream")
        elif code in ANNOTATION_SYMBOLS:
            sample += value
            events.append(AnnotationEvent(sample, code, ANNOTATION_SYMBOLS[code]))
        else:
            raise UnknownCode(f"annotation code {code} is not in the MIT code table")


def load_record(directory: str | Path, name: str) -> EcgRecord:
    """Load ``<name>.hea``, its format-212 signal file and ``<name>.atr``."""
    directory = Path(directory)
    paths = {ext: directory / f"{name}.{ext}" for ext in ("hea", "atr")}
    for p in paths.values():
        if not p.is_file():
            raise MissingFile(str(p))
    header = parse_header(paths["hea"].read_text(encoding="latin-1"))
    if header.n_signals != 2:
        raise UnsupportedFormat(f"record {name} has {header.n_signals} signals; expected 2")
    files = {s.file_name for s in header.signals}
    if len(files) != 1:
        raise UnsupportedFormat("both signals must share one format-212 file")
    dat = directory / files.pop()
    if not dat.is_file():
        raise MissingFile(str(dat))
    signal = decode_format212(dat.read_bytes(), header.n_samples)
    annotations = tuple(parse_annotations(paths["atr"].read_bytes()))
    return EcgRecord(header, signal, annotations)


def list_records(directory: str | Path) -> list[str]:
    """Names of all records in a directory that have a header and annotations."""
    directory = Path(directory)
    return sorted(p.stem for p in directory.glob("*.hea") if (directory / f"{p.stem}.atr").exists())
