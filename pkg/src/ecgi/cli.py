"""``ecgi`` command line: ingest, resample, train, evaluate, explain, test, report."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import plots
from .beats import (CLASS_IDS, BeatDataset, bootstrap_resample, build_dataset, class_symbol, read_csv, split,
                    subsample_per_class, write_csv)
from .config import RunConfig
from .errors import DegenerateRange, EcgiError, EmptySelection, EmptySubset, MissingFile, SchemaError
from .evaluation import (SCORE_NAMES, confidence_interval_95, kendall_matrix, kendall_tau, kruskal_wallis,
                         leave_groups_out, metrics, run_cv, shapiro_wilk, variance_per_segment, wilcoxon_matrix)
from .evaluation.validation import derive_seed
from .interpret import (aggregate_saliency, add_gaussian_noise, grad_cam_batch, pdp_one_way,
                        permutation_importance, pfi_by_correctness, shap_batch)
from .models import fit, load_model, save_model
from .models.base import TrainConfig, normalize_kind
from .segments import N_SEGMENTS

log = logging.getLogger("ecgi")

SEG_COLS = [f"w{k}" for k in range(1, N_SEGMENTS + 1)]
SYMBOLS = [class_symbol(c) for c in CLASS_IDS]


class Paths:
    def __init__(self, cfg: RunConfig):
        self.root = Path(cfg.out_dir)
        self.beats = self.root / "beats.csv"
        self.train = self.root / "train.csv"
        self.test = self.root / "test.csv"
        self.models = self.root / "models"
        self.holdout = self.root / "holdout"
        self.cv = self.root / "cv"
        self.lgo = self.root / "lgo"
        self.interpret = self.root / "interpret"
        self.stats = self.root / "stats"
        self.report = self.root / "report"

    def model(self, kind: str) -> Path:
        return self.models / f"{kind}.ecgi"


def _need(path: Path, hint: str) -> Path:
    if not path.exists():
        raise MissingFile(f"{path} not found; run `ecgi {hint}` first")
    return path


def _counts_rows(ds: BeatDataset):
    for rec in np.unique(ds.record):
        sel = ds.y[ds.record == rec]
        yield [int(rec), *(int(np.sum(sel == c)) for c in CLASS_IDS), int(sel.size)]


def _report_tables(stem: Path, kind: str, report) -> None:
    plots.write_table(stem.with_name(f"{stem.name}_per_class_{kind}.csv"),
                      ["class", "symbol", "precision", "recall", "f1", "support"],
                      ([c, class_symbol(c), p, r, f, s] for c, p, r, f, s in report.rows()))
    plots.write_table(stem.with_name(f"{stem.name}_confusion_{kind}.csv"), ["true\\pred", *SYMBOLS],
                      ([SYMBOLS[i], *report.confusion[i]] for i in range(len(SYMBOLS))))


def _summary_rows(reports: dict):
    for kind, rep in reports.items():
        yield [kind, rep.accuracy, *(rep.macro[n] for n in ("precision", "recall", "f1")),
               *(rep.weighted[n] for n in ("precision", "recall", "f1")), int(rep.zero_division)]


SUMMARY_HEADER = ["model", "accuracy", "macro_precision", "macro_recall", "macro_f1",
                  "weighted_precision", "weighted_recall", "weighted_f1", "zero_division"]


# commands ---------------------------------------------------------------

def cmd_ingest(cfg: RunConfig, args) -> None:
    p = Paths(cfg)
    db = Path(cfg.db_dir)
    if not db.is_dir():
        raise MissingFile(f"database directory {db} does not exist")
    records = args.records.split(",") if getattr(args, "records", None) else None
    ds = build_dataset(db, records)
    write_csv(ds, p.beats)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["record", *SYMBOLS, "total"])
    w.writerows(_counts_rows(ds))
    totals = ds.class_counts()
    w.writerow(["all", *(totals[c] for c in CLASS_IDS), len(ds)])


def cmd_resample(cfg: RunConfig, args) -> None:
    p = Paths(cfg)
    ds = read_csv(_need(p.beats, "ingest"))
    train, test = split(ds, cfg.split_spec())
    train = bootstrap_resample(train, cfg.seed)
    write_csv(train, p.train)
    write_csv(test, p.test)
    rows = [[class_symbol(c), train.class_counts()[c], test.class_counts()[c]] for c in CLASS_IDS]
    plots.write_table(p.root / "split_counts.csv", ["class", "train_resampled", "test"], rows)
    print(f"train {len(train)} rows ({len(train) // len(CLASS_IDS)} per class), test {len(test)} rows")


def _config_for(kind: str, cfg: RunConfig) -> TrainConfig:
    return TrainConfig.for_kind(kind, **cfg.train_overrides(), seed=cfg.seed)


def cmd_train(cfg: RunConfig, args) -> None:
    p = Paths(cfg)
    if not p.train.exists() or not p.test.exists():
        cmd_resample(cfg, args)
    train, test = read_csv(p.train), read_csv(p.test)
    reports = {}
    for kind in cfg.models:
        model = fit(kind, train, _config_for(kind, cfg))
        save_model(model, p.model(kind))
        reports[kind] = metrics(test.y, model.predict(test.X))
        _report_tables(p.holdout / "holdout", kind, reports[kind])
        log.info("%s holdout accuracy %.4f", kind, reports[kind].accuracy)
    plots.write_table(p.holdout / "summary.csv", SUMMARY_HEADER, _summary_rows(reports))
    plots.bar_chart(p.holdout / "f1_per_class", SYMBOLS, {k: r.f1 for k, r in reports.items()},
                    "Holdout F1 per class", "F1")


def cmd_eval_cv(cfg: RunConfig, args) -> None:
    p = Paths(cfg)
    ds = read_csv(_need(p.beats, "ingest"))
    res = run_cv(ds, cfg.models, cfg.folds, cfg.seed, cfg.train_overrides(), cfg.subsample)
    plots.write_table(p.cv / "fold_scores.csv", ["model", "fold", *SCORE_NAMES], res.table())
    for kind in cfg.models:
        pooled = res.pooled_confusion(kind)
        plots.write_table(p.cv / f"confusion_{kind}.csv", ["true\\pred", *SYMBOLS],
                          ([SYMBOLS[i], *pooled[i]] for i in range(len(SYMBOLS))))
        f1 = np.mean([r.f1 for r in res.reports[kind]], axis=0)
        plots.write_table(p.cv / f"per_class_f1_{kind}.csv", ["class", "symbol", "f1"],
                          ([c, class_symbol(c), f1[i]] for i, c in enumerate(CLASS_IDS)))
    means = {k: [res.values(k, s).mean() for s in SCORE_NAMES] for k in cfg.models}
    plots.bar_chart(p.cv / "mean_scores", list(SCORE_NAMES), means, f"{cfg.folds}-fold CV mean scores")


def cmd_eval_lgo(cfg: RunConfig, args) -> None:
    p = Paths(cfg)
    ds = read_csv(_need(p.beats, "ingest"))
    train, test = leave_groups_out(ds, cfg.test_records)
    train = bootstrap_resample(train, cfg.seed)
    counts = test.class_counts()
    plots.write_table(p.lgo / "test_class_counts.csv", ["class", "symbol", "count"],
                      ([c, class_symbol(c), counts[c]] for c in CLASS_IDS))
    reports = {}
    for kind in cfg.models:
        model = fit(kind, train, _config_for(kind, cfg))
        reports[kind] = metrics(test.y, model.predict(test.X))
        _report_tables(p.lgo / "lgo", kind, reports[kind])
    plots.write_table(p.lgo / "summary.csv", SUMMARY_HEADER, _summary_rows(reports))
    plots.bar_chart(p.lgo / "accuracy", list(reports), {"accuracy": [r.accuracy for r in reports.values()]},
                    "Leave-groups-out accuracy")


def _interpret_gradcam(cfg, p, kind, model, test, noisy):
    tag = f"{kind}_noisy" if noisy else kind
    maps = grad_cam_batch(model, test)
    header = ["class", "predicted", "correct", *(f"s{i}" for i in range(220)), *SEG_COLS]
    plots.write_table(p.interpret / f"gradcam_{tag}.csv", header,
                      ([m.class_id, m.target_class, int(m.correct), *m.values, *m.segment_weights] for m in maps))
    rows, per_class = [], {}
    for c in CLASS_IDS:
        try:
            agg = aggregate_saliency(maps, class_id=c, correct=True)
        except EmptySelection:
            continue
        rows.append([c, class_symbol(c), agg.count, int(np.argmax(agg.segment_weights)) + 1, *agg.segment_weights])
        per_class[class_symbol(c)] = agg.segment_weights
    plots.write_table(p.interpret / f"gradcam_{tag}_by_class.csv",
                      ["class", "symbol", "count", "argmax_segment", *SEG_COLS], rows)
    if per_class:
        plots.bar_chart(p.interpret / f"gradcam_{tag}_segments", list(range(1, N_SEGMENTS + 1)), per_class,
                        f"{kind} mean Grad-CAM weight per segment (correct beats)", "weight")
    sample = next((i for i, m in enumerate(maps) if m.correct and m.class_id == 2), 0)
    plots.saliency_strip(p.interpret / f"gradcam_{tag}_sample", test.X[sample], maps[sample].values,
                         f"{kind} Grad-CAM, class {class_symbol(maps[sample].class_id)}")
    acc = float(np.mean([m.correct for m in maps]))
    return acc


def cmd_interpret(cfg: RunConfig, args) -> None:
    p = Paths(cfg)
    kind = normalize_kind(args.model)
    model = load_model(_need(p.model(kind), "train"))
    test = subsample_per_class(read_csv(_need(p.test, "resample")), cfg.explain_cap, derive_seed(cfg.seed, 5))
    method = args.method
    if method == "gradcam":
        acc = _interpret_gradcam(cfg, p, kind, model, test, noisy=False)
        if args.noise:
            noisy = add_gaussian_noise(test, cfg.noise_std_factor, derive_seed(cfg.seed, 7))
            acc_noisy = _interpret_gradcam(cfg, p, kind, model, noisy, noisy=True)
            plots.write_table(p.interpret / f"noise_{kind}.csv",
                              ["std_factor", "accuracy_clean", "accuracy_noisy", "drop"],
                              [[cfg.noise_std_factor, acc, acc_noisy, acc - acc_noisy]])
    elif method == "pfi":
        imp = permutation_importance(model, test, cfg.pfi_repeats, cfg.seed)
        plots.write_table(p.interpret / f"pfi_{kind}.csv", ["segment", "weight", "stdev"],
                          ([k + 1, imp.weights[k], imp.stdevs[k]] for k in range(N_SEGMENTS)))
        plots.write_table(p.interpret / f"pfi_{kind}_repeats.csv", ["repeat", *SEG_COLS],
                          ([r + 1, *imp.drops[r]] for r in range(imp.n_repeats)))
        plots.bar_chart(p.interpret / f"pfi_{kind}_bars", list(range(1, N_SEGMENTS + 1)), {kind: imp.weights},
                        f"{kind} permutation importance", "accuracy drop")
        try:
            good, bad = pfi_by_correctness(model, test, cfg.pfi_repeats, cfg.seed)
        except EmptySubset as exc:
            log.warning("skipping correctness split: %s", exc)
        else:
            plots.bar_chart(p.interpret / f"pfi_{kind}_by_correctness", list(range(1, N_SEGMENTS + 1)),
                            {"correct": good.weights, "misclassified": bad.weights},
                            f"{kind} importance by correctness", "score drop")
    elif method == "pdp":
        curves = []
        for seg in range(1, N_SEGMENTS + 1):
            try:
                curves.append(pdp_one_way(model, test, seg, cfg.pdp_grid))
            except DegenerateRange as exc:
                log.warning("%s", exc)
        plots.pdp_plot(p.interpret / f"pdp_{kind}", curves)
    elif method == "shap":
        background = read_csv(_need(p.train, "resample"))
        vals = shap_batch(model, test, background, cfg.n_coalitions, cfg.seed, cfg.max_shap_instances)
        plots.write_table(p.interpret / f"shap_{kind}.csv",
                          ["index", "class", "target_class", "base_value", "explained_output", *SEG_COLS],
                          ([i, int(test.y[i]), v.target_class, v.base_value, v.explained_output, *v.phi]
                           for i, v in enumerate(vals)))
        mean_abs = np.mean([np.abs(v.phi) for v in vals], axis=0)
        plots.bar_chart(p.interpret / f"shap_{kind}_bars", list(range(1, N_SEGMENTS + 1)), {kind: mean_abs},
                        f"{kind} mean |SHAP| per segment", "|phi|")
    else:  # argparse restricts choices
        raise ValueError(f"unknown method {method}")


def _read_fold_scores(path: Path) -> dict[str, dict[str, np.ndarray]]:
    header, rows = plots.read_table(path)
    if header[:2] != ["model", "fold"] or any(s not in header for s in SCORE_NAMES):
        raise SchemaError(f"{path}: unexpected header {header}")
    out: dict[str, dict[str, list]] = {}
    for row in rows:
        rec = dict(zip(header, row))
        d = out.setdefault(rec["model"], {s: [] for s in SCORE_NAMES})
        for s in SCORE_NAMES:
            d[s].append(float(rec[s]))
    return {k: {s: np.array(v) for s, v in d.items()} for k, d in out.items()}


def _read_segment_columns(path: Path) -> np.ndarray:
    header, rows = plots.read_table(path)
    idx = [header.index(c) for c in SEG_COLS]
    return np.array([[float(r[i]) for i in idx] for r in rows])


def cmd_stats(cfg: RunConfig, args) -> None:
    p = Paths(cfg)
    scores = _read_fold_scores(_need(Path(args.scores) if args.scores else p.cv / "fold_scores.csv", "eval-cv"))
    kinds = list(scores)
    ci_rows, sw_rows = [], []
    for s in SCORE_NAMES:
        pooled = np.concatenate([scores[k][s] for k in kinds])
        lo, hi = confidence_interval_95(pooled)
        try:
            kw = kruskal_wallis([scores[k][s] for k in kinds])
            h, kp = kw.statistic, kw.p_value
        except EcgiError as exc:
            log.warning("kruskal-wallis on %s: %s", s, exc)
            h, kp = float("nan"), float("nan")
        ci_rows.append([s, lo, hi, h, kp])
        for k in kinds:
            try:
                r = shapiro_wilk(scores[k][s])
                sw_rows.append([s, k, r.statistic, r.p_value])
            except EcgiError as exc:
                sw_rows.append([s, k, float("nan"), float("nan")])
                log.warning("shapiro-wilk on %s/%s: %s", k, s, exc)
        if len(kinds) >= 2:
            names, pm = wilcoxon_matrix({k: scores[k][s] for k in kinds})
            plots.heatmap(p.stats / f"wilcoxon_{s}", names, names, pm, f"Wilcoxon p-values ({s})")
    plots.write_table(p.stats / "ci_kruskal.csv", ["metric", "ci_low", "ci_high", "kruskal_h", "kruskal_p"], ci_rows)
    plots.write_table(p.stats / "shapiro.csv", ["metric", "model", "W", "p"], sw_rows)

    pfi = {f.stem[len("pfi_"):]: f for f in sorted(p.interpret.glob("pfi_*.csv"))
           if f.stem.count("_") == 1}
    if len(pfi) >= 2:
        vecs = {}
        for k, f in pfi.items():
            header, rows = plots.read_table(f)
            vecs[k] = np.array([float(r[1]) for r in rows])
        try:
            names, tau, pv = kendall_matrix(vecs)
            plots.heatmap(p.stats / "kendall_pfi_tau", names, names, tau, "Kendall tau between PFI weights")
            plots.heatmap(p.stats / "kendall_pfi_p", names, names, pv, "Kendall p-values")
        except EcgiError as exc:
            log.warning("kendall matrix: %s", exc)
    cnn, lstm = p.interpret / "gradcam_CNN.csv", p.interpret / "gradcam_LSTM.csv"
    if cnn.exists() and lstm.exists():
        a, b = _read_segment_columns(cnn), _read_segment_columns(lstm)
        if a.shape != b.shape:
            log.warning("Grad-CAM tables cover different beats (%d vs %d rows); rerun interpret", len(a), len(b))
            return
        rows = []
        for k in range(N_SEGMENTS):
            try:
                r = kendall_tau(a[:, k], b[:, k])
                rows.append([k + 1, r.statistic, r.p_value])
            except EcgiError:
                rows.append([k + 1, float("nan"), float("nan")])
        plots.bar_chart(p.stats / "kendall_cnn_lstm_segments", [r[0] for r in rows],
                        {"tau": [r[1] for r in rows]}, "Per-segment Kendall tau, CNN vs LSTM Grad-CAM")
        plots.write_table(p.stats / "kendall_cnn_lstm_segments_p.csv", ["segment", "tau", "p"], rows)


def cmd_report(cfg: RunConfig, args) -> None:
    p = Paths(cfg)
    ds = read_csv(_need(p.beats, "ingest"))
    seg_var, point_var = variance_per_segment(ds)
    per_class = {"all": seg_var}
    for c in CLASS_IDS:
        try:
            per_class[class_symbol(c)] = variance_per_segment(ds, c)[0]
        except EcgiError:
            pass
    plots.bar_chart(p.report / "variance_per_segment", list(range(1, N_SEGMENTS + 1)), per_class,
                    "Variance of segment means", "variance")
    plots.line_plot(p.report / "variance_pointwise", np.arange(point_var.size), {"all": point_var},
                    "sample", "variance", "Pointwise variance across beats")
    for kind in cfg.models:
        pfi_rep = p.interpret / f"pfi_{kind}_repeats.csv"
        cam = p.interpret / f"gradcam_{kind}.csv"
        series = {}
        if pfi_rep.exists():
            series["PFI"] = _read_segment_columns(pfi_rep)
        if cam.exists():
            series["Grad-CAM"] = _read_segment_columns(cam)
        if series:
            plots.quantile_plot(p.report / f"pfi_vs_gradcam_{kind}", series,
                                f"{kind}: per-segment mean and 25-75% quantiles")
    files = sorted(str(f.relative_to(p.root)) for f in p.root.rglob("*") if f.is_file())
    plots.write_table(p.report / "index.csv", ["file"], ([f] for f in files))


COMMANDS = {
    "ingest": cmd_ingest, "resample": cmd_resample, "train": cmd_train, "eval-cv": cmd_eval_cv,
    "eval-lgo": cmd_eval_lgo, "interpret": cmd_interpret, "stats": cmd_stats, "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI run configuration")
    common.add_argument("--db-dir")
    common.add_argument("--out-dir")
    common.add_argument("--seed", type=int)
    common.add_argument("--split", choices=["beat", "patient"])
    common.add_argument("--models", help="comma-separated model kinds")
    common.add_argument("--epochs", type=int)
    common.add_argument("--batch-size", type=int)
    common.add_argument("--folds", type=int)
    common.add_argument("--subsample", type=int, help="cap on beats per class before CV")
    common.add_argument("--explain-cap", type=int, help="cap on test beats per class for explanations")
    common.add_argument("--max-instances", type=int, dest="max_shap_instances")
    common.add_argument("--coalitions", type=int, dest="n_coalitions")
    common.add_argument("--noise-std", type=float, dest="noise_std_factor")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="ecgi", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    ing = sub.add_parser("ingest", parents=[common])
    ing.add_argument("--records", help="comma-separated record names (default: all)")
    for name in ("resample", "train", "eval-cv", "eval-lgo", "report"):
        sub.add_parser(name, parents=[common])
    it = sub.add_parser("interpret", parents=[common])
    it.add_argument("--method", required=True, choices=["pdp", "shap", "pfi", "gradcam"])
    it.add_argument("--model", required=True)
    it.add_argument("--noise", action="store_true", help="also explain a noise-perturbed test set")
    st = sub.add_parser("stats", parents=[common])
    st.add_argument("--scores", help="fold-score CSV (default: <out>/cv/fold_scores.csv)")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    overrides = {k: getattr(args, k) for k in
                 ("db_dir", "out_dir", "seed", "split", "epochs", "batch_size", "folds", "subsample",
                  "max_shap_instances", "explain_cap", "n_coalitions", "noise_std_factor")
                 if getattr(args, k, None) is not None}
    if args.models:
        overrides["models"] = tuple(m.strip() for m in args.models.split(",") if m.strip())
    cfg = replace(cfg, **overrides)
    for kind in cfg.models:
        normalize_kind(kind)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = resolve_config(args)
        Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](cfg, args)
    except (EcgiError, ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc), "command": args.command}),
              file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
