"""Run configuration stored as an INI file with a single ``[run]`` section."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields
from pathlib import Path

from .beats import HOLDOUT_RECORDS, BeatHoldout, PatientHoldout, SplitSpec

SECTION = "run"


@dataclass
class RunConfig:
    db_dir: str = "data/mitdb"
    out_dir: str = "out"
    seed: int = 0
    split: str = "beat"  # "beat" or "patient"
    train_fraction: float = 0.75
    test_records: tuple[int, ...] = HOLDOUT_RECORDS
    models: tuple[str, ...] = ("NB", "RFC", "MLP", "CNN", "LSTM")
    epochs: int | None = None
    batch_size: int | None = None
    folds: int = 6
    subsample: int | None = None
    max_shap_instances: int = 50
    n_coalitions: int = 2048
    noise_std_factor: float = 0.25
    pfi_repeats: int = 5
    pdp_grid: int = 20
    explain_cap: int | None = 500  # beats per class used by the explanation methods

    def __post_init__(self):
        if self.split not in ("beat", "patient"):
            raise ValueError(f"split must be 'beat' or 'patient', not {self.split!r}")
        self.models = tuple(m.upper() for m in self.models)
        self.test_records = tuple(int(r) for r in self.test_records)

    def split_spec(self) -> SplitSpec:
        mode = BeatHoldout(self.train_fraction) if self.split == "beat" else PatientHoldout(self.test_records)
        return SplitSpec(mode, self.seed)

    def train_overrides(self) -> dict:
        return {"epochs": self.epochs, "batch_size": self.batch_size}

    # file form
    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp[SECTION] = {f.name: _dump(getattr(self, f.name)) for f in fields(self)}
        lines = [f"[{SECTION}]"] + [f"{k} = {v}" for k, v in cp[SECTION].items()]
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_ini())

    @classmethod
    def from_ini(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser()
        cp.read_string(text)
        if not cp.has_section(SECTION):
            raise ValueError(f"config lacks a [{SECTION}] section")
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in cp[SECTION].items():
            if key not in known:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[key] = _parse(key, raw)
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        return cls.from_ini(Path(path).read_text())


_INTS = {"seed", "folds", "max_shap_instances", "n_coalitions", "pfi_repeats", "pdp_grid"}
_OPT_INTS = {"epochs", "batch_size", "subsample", "explain_cap"}
_FLOATS = {"train_fraction", "noise_std_factor"}


def _dump(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, tuple):
        return ", ".join(str(x) for x in v)
    return repr(v) if isinstance(v, float) else str(v)


def _parse(key: str, raw: str):
    raw = raw.strip()
    if key in _OPT_INTS:
        return None if raw.lower() in ("", "none") else int(raw)
    if key in _INTS:
        return int(raw)
    if key in _FLOATS:
        return float(raw)
    if key == "test_records":
        return tuple(int(x) for x in raw.replace(",", " ").split())
    if key == "models":
        return tuple(x for x in raw.replace(",", " ").split())
    return raw
