import json

import numpy as np
import pytest

from ecgi import cli
from ecgi.beats import read_csv
from ecgi.config import RunConfig
from ecgi.models import load_model
from ecgi.synth import SynthConfig, generate_database


@pytest.fixture(scope="module")
def run(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    generate_database(root / "db", cfg=SynthConfig(duration_s=10, seed=5))
    common = ["--db-dir", str(root / "db"), "--out-dir", str(root / "out")]
    for step in (["ingest"], ["resample"], ["train", "--models", "NB,RFC"]):
        assert cli.main(step + common) == 0
    return root, common


def _error(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_config_round_trip(tmp_path):
    cfg = RunConfig(seed=3, split="patient", test_records=(104, 208), models=("cnn", "RFC"), epochs=2,
                    subsample=None, noise_std_factor=0.5, explain_cap=None)
    cfg.save(tmp_path / "run.ini")
    back = RunConfig.load(tmp_path / "run.ini")
    assert back == cfg and back.models == ("CNN", "RFC")
    with pytest.raises(ValueError):
        RunConfig.from_ini("[run]\nbogus = 1\n")
    with pytest.raises(ValueError):
        RunConfig(split="diagonal")


def test_config_file_feeds_cli(tmp_path, run):
    root, common = run
    RunConfig(db_dir=str(root / "db"), out_dir=str(tmp_path / "o"), seed=4).save(tmp_path / "c.ini")
    assert cli.main(["ingest", "--config", str(tmp_path / "c.ini"), "--records", "100,101"]) == 0
    ds = read_csv(tmp_path / "o" / "beats.csv")
    assert set(np.unique(ds.record)) == {100, 101}


def test_missing_database_reports_json(tmp_path, capsys):
    code = cli.main(["ingest", "--db-dir", str(tmp_path / "nowhere"), "--out-dir", str(tmp_path / "o")])
    assert code == 2
    err = _error(capsys)
    assert err["command"] == "ingest" and err["error"] in ("MissingFile", "FileNotFoundError")


def test_step_order_is_enforced(tmp_path, capsys):
    assert cli.main(["train", "--out-dir", str(tmp_path)]) == 2
    err = _error(capsys)
    assert err["error"] == "MissingFile" and "ecgi ingest" in err["message"]


def test_gradcam_on_nb_is_wrong_kind(run, capsys):
    root, common = run
    assert cli.main(["interpret", "--method", "gradcam", "--model", "NB"] + common) == 2
    assert _error(capsys)["error"] == "WrongKind"


def test_unknown_model_kind(run, capsys):
    root, common = run
    assert cli.main(["train", "--models", "SVM"] + common) == 2
    assert _error(capsys)["error"] == "ValueError"


def test_ingest_rerun_is_identical(run):
    root, common = run
    before = (root / "out" / "beats.csv").read_bytes()
    assert cli.main(["ingest"] + common) == 0
    assert (root / "out" / "beats.csv").read_bytes() == before


def test_outputs_of_early_steps(run):
    root, _ = run
    out = root / "out"
    train, test = read_csv(out / "train.csv"), read_csv(out / "test.csv")
    assert len(set(train.class_counts().values())) == 1
    assert load_model(out / "models" / "RFC.ecgi").predict(test.X).shape == (len(test),)
    header = (out / "holdout" / "summary.csv").read_text().splitlines()[0]
    assert header.startswith("model")


def test_pfi_and_shap_on_rfc(run):
    root, common = run
    assert cli.main(["interpret", "--method", "pfi", "--model", "RFC"] + common) == 0
    assert cli.main(["interpret", "--method", "shap", "--model", "RFC", "--max-instances", "2",
                     "--coalitions", "64"] + common) == 0
    lines = (root / "out" / "interpret" / "shap_RFC.csv").read_text().splitlines()
    assert len(lines) == 3
    for f in ("pfi_RFC.csv", "pfi_RFC_bars.svg", "shap_RFC_bars.svg"):
        assert (root / "out" / "interpret" / f).stat().st_size > 0
