"""Beat extraction, standardization, splitting, resampling and CSV storage."""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptySide, MissingClass, SchemaError
from .wfdb import EcgRecord, list_records, load_record

log = logging.getLogger(__name__)

BEAT_LENGTH = 220
HALF_WINDOW = 110
CLASS_SYMBOLS = ("N", "L", "R", "V", "A", "F", "f", "/")
CLASS_IDS = tuple(range(1, 9))
N_OUTPUTS = 9  # class index 0 is never used
HOLDOUT_RECORDS = (104, 113, 119, 208, 210)

_SYMBOL_TO_CLASS = {s: i + 1 for i, s in enumerate(CLASS_SYMBOLS)}


def map_symbol_to_class(symbol: str) -> int | None:
    return _SYMBOL_TO_CLASS.get(symbol)


def class_symbol(class_id: int) -> str:
    return CLASS_SYMBOLS[class_id - 1]


@dataclass(frozen=True)
class Beat:
    samples: np.ndarray
    class_id: int
    record_id: int
    channel: int


@dataclass
class BeatDataset:
    """Column-oriented beat table: ``X[i]`` is beat *i*, with parallel label arrays."""

    X: np.ndarray
    y: np.ndarray
    record: np.ndarray
    channel: np.ndarray
    tag: str = "full"
    seed: int | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64).reshape(-1, BEAT_LENGTH)
        self.y = np.asarray(self.y, dtype=np.int64).reshape(-1)
        self.record = np.asarray(self.record, dtype=np.int64).reshape(-1)
        self.channel = np.asarray(self.channel, dtype=np.int64).reshape(-1)
        n = len(self.X)
        if not (len(self.y) == len(self.record) == len(self.channel) == n):
            raise SchemaError("beat table columns have different lengths")

    def __len__(self) -> int:
        return len(self.X)

    def __getitem__(self, i: int) -> Beat:
        return Beat(self.X[i], int(self.y[i]), int(self.record[i]), int(self.channel[i]))

    def subset(self, index, tag: str | None = None) -> "BeatDataset":
        index = np.asarray(index)
        return BeatDataset(self.X[index], self.y[index], self.record[index], self.channel[index],
                           tag=tag or self.tag, seed=self.seed)

    def class_counts(self) -> dict[int, int]:
        counts = np.bincount(self.y, minlength=N_OUTPUTS)
        return {c: int(counts[c]) for c in CLASS_IDS}

    def with_samples(self, X: np.ndarray, tag: str | None = None) -> "BeatDataset":
        return BeatDataset(X, self.y.copy(), self.record.copy(), self.channel.copy(),
                           tag=tag or self.tag, seed=self.seed)

    @classmethod
    def empty(cls, tag: str = "full") -> "BeatDataset":
        return cls(np.zeros((0, BEAT_LENGTH)), [], [], [], tag=tag)

    @classmethod
    def concat(cls, parts: Sequence["BeatDataset"], tag: str = "full") -> "BeatDataset":
        if not parts:
            return cls.empty(tag)
        return cls(
            np.concatenate([p.X for p in parts]),
            np.concatenate([p.y for p in parts]),
            np.concatenate([p.record for p in parts]),
            np.concatenate([p.channel for p in parts]),
            tag=tag,
        )


def standardize(samples: np.ndarray) -> np.ndarray:
    """Z-score with the population standard deviation; constant windows become zeros."""
    x = np.asarray(samples, dtype=np.float64)
    sd = x.std()
    if np.ptp(x) == 0 or sd == 0:
        return np.zeros_like(x)
    return (x - x.mean()) / sd


def _record_number(name: str) -> int:
    digits = "".join(ch for ch in name if ch.isdigit())
    return int(digits) if digits else -1


def extract_beats(record: EcgRecord, half_window: int = HALF_WINDOW) -> tuple[BeatDataset, int]:
    """Cut one standardized window per channel around every class-mapped annotation.

    Returns the beats (all channel-0 beats first, then channel 1) and the
    number of class-mapped annotations skipped because their window ran off
    the record.
    """
    if half_window < 1:
        raise ValueError("half_window must be >= 1")
    n = record.header.n_samples
    centers, labels, skipped = [], [], 0
    for ev in record.annotations:
        cls = map_symbol_to_class(ev.symbol)
        if cls is None:
            continue
        lo, hi = ev.sample_index - half_window, ev.sample_index + half_window
        if lo < 0 or hi > n:
            skipped += 1
            continue
        centers.append(ev.sample_index)
        labels.append(cls)

    rec_id = _record_number(record.header.record_name)
    if not centers:
        return BeatDataset.empty(), skipped
    offsets = np.arange(-half_window, half_window)
    index = np.asarray(centers)[:, None] + offsets[None, :]
    parts = []
    for ch in range(record.signal.shape[1]):
        raw = record.signal[:, ch].astype(np.float64)[index]
        X = np.stack([standardize(w) for w in raw])
        k = len(centers)
        parts.append(BeatDataset(X, labels, [rec_id] * k, [ch] * k))
    return BeatDataset.concat(parts), skipped


def build_dataset(db_dir: str | Path, records: Iterable[str] | None = None) -> BeatDataset:
    """Extract beats from every record in ``db_dir`` (sorted by record name)."""
    names = list(records) if records is not None else list_records(db_dir)
    parts = []
    for name in names:
        ds, skipped = extract_beats(load_record(db_dir, name))
        log.info("record %s: %d beats, %d windows skipped", name, len(ds), skipped)
        parts.append(ds)
    return BeatDataset.concat(parts)


@dataclass(frozen=True)
class BeatHoldout:
    train_fraction: float = 0.75

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class PatientHoldout:
    test_records: tuple[int, ...] = HOLDOUT_RECORDS

    def __post_init__(self):
        if not self.test_records:
            raise ValueError("test_records must be non-empty")


@dataclass(frozen=True)
class SplitSpec:
    mode: BeatHoldout | PatientHoldout = field(default_factory=BeatHoldout)
    seed: int = 0


def split(dataset: BeatDataset, spec: SplitSpec) -> tuple[BeatDataset, BeatDataset]:
    n = len(dataset)
    if n == 0:
        raise EmptySide("cannot split an empty dataset")
    if isinstance(spec.mode, BeatHoldout):
        rng = np.random.default_rng(spec.seed)
        order = rng.permutation(n)
        n_train = int(round(spec.mode.train_fraction * n))
        train_idx, test_idx = np.sort(order[:n_train]), np.sort(order[n_train:])
    else:
        held = np.isin(dataset.record, np.asarray(spec.mode.test_records))
        train_idx, test_idx = np.flatnonzero(~held), np.flatnonzero(held)
    if len(train_idx) == 0 or len(test_idx) == 0:
        raise EmptySide(f"split produced {len(train_idx)} train / {len(test_idx)} test rows")
    train = dataset.subset(train_idx, tag="train")
    test = dataset.subset(test_idx, tag="test")
    train.seed = test.seed = spec.seed
    return train, test


def resample_target(counts: dict[int, int]) -> int:
    """Per-class row count after resampling: floor of the mean abnormal-class count."""
    return int(np.floor(np.mean([counts[c] for c in CLASS_IDS[1:]])))


def bootstrap_resample(train: BeatDataset, seed: int) -> BeatDataset:
    """Sample every class with replacement to the same size, then shuffle."""
    counts = train.class_counts()
    missing = [class_symbol(c) for c in CLASS_IDS if counts[c] == 0]
    if missing:
        raise MissingClass(f"no source beats for classes {missing}")
    n = resample_target(counts)
    rng = np.random.default_rng(seed)
    picks = [rng.choice(np.flatnonzero(train.y == c), size=n, replace=True) for c in CLASS_IDS]
    index = np.concatenate(picks)
    index = index[rng.permutation(len(index))]
    out = train.subset(index, tag=train.tag)
    out.seed = seed
    return out


def subsample_per_class(dataset: BeatDataset, cap: int | None, seed: int) -> BeatDataset:
    """Keep at most ``cap`` beats of each class, drawn without replacement."""
    if cap is None:
        return dataset
    rng = np.random.default_rng(seed)
    keep = []
    for c in CLASS_IDS:
        idx = np.flatnonzero(dataset.y == c)
        if len(idx) > cap:
            idx = np.sort(rng.choice(idx, size=cap, replace=False))
        keep.append(idx)
    return dataset.subset(np.sort(np.concatenate(keep)))


CSV_HEADER = [f"s{i}" for i in range(BEAT_LENGTH)] + ["class", "record", "channel"]


def write_csv(dataset: BeatDataset, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CSV_HEADER) + "\n")
        for x, c, r, ch in zip(dataset.X, dataset.y, dataset.record, dataset.channel):
            fh.write(",".join(map(repr, x.tolist())) + f",{c},{r},{ch}\n")


def read_csv(path: str | Path) -> BeatDataset:
    path = Path(path)
    with open(path, newline="") as fh:
        header = fh.readline().rstrip("\r\n").split(",")
        if header == [""]:
            raise SchemaError(f"{path}: empty file")
        if header != CSV_HEADER:
            raise SchemaError(f"{path}: expected {len(CSV_HEADER)} columns "
                              f"s0..s{BEAT_LENGTH - 1},class,record,channel; got {len(header)}")
        body = fh.read()
    if not body.strip():
        return BeatDataset.empty()
    try:
        table = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2, dtype=np.float64)
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from None
    if table.shape[1] != len(CSV_HEADER):
        raise SchemaError(f"{path}: rows have {table.shape[1]} columns")
    meta = table[:, BEAT_LENGTH:]
    if not np.array_equal(meta, np.round(meta)):
        raise SchemaError(f"{path}: class/record/channel must be integers")
    meta = meta.astype(np.int64)
    if not np.isin(meta[:, 0], CLASS_IDS).all():
        raise SchemaError(f"{path}: class ids must lie in 1..8")
    return BeatDataset(table[:, :BEAT_LENGTH], meta[:, 0], meta[:, 1], meta[:, 2])
