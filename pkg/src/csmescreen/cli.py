"""Command-line entry point: split, oversample, select, evaluate, sweep-r, synth.

Every command reads its settings from defaults, then an optional flat
``key=value`` config file, then command-line flags (flags win). Outputs go to
the ``--out`` directory and depend only on the settings and input files.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from csmescreen.dataset import (
    FeatureMask,
    LabeledDataset,
    load_feature_file,
    project,
    save_feature_file,
    stratified_split,
)
from csmescreen.metrics import (
    auc,
    confusion,
    expected_cost,
    operating_point_a,
    operating_point_b,
    roc_curve,
    summary,
)
from csmescreen.neighbors import KnnConfig, knn_scores
from csmescreen.oversample import OversampleConfig, smote
from csmescreen.search import ALGORITHMS, SearchConfig, multi_run_select, with_desk_scale
from csmescreen.synthbench import SynthSpec, generate, imbalanced_spec, planted_spec

COMMANDS = ("split", "oversample", "select", "evaluate", "sweep-r", "synth")


class CliError(Exception):
    """A user-facing failure; reported as a single ``error:`` line."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"error: {message}\n")


# -- settings ----------------------------------------------------------------------

# name -> (type, default); every name is both a config key and a --flag
_SETTINGS = {
    "input": (str, None),
    "train": (str, None),
    "test": (str, None),
    "mask": (str, None),
    "out": (str, "."),
    "seed": (int, 0),
    "test_fraction": (float, 0.2),
    "r": (float, 1.0),
    "k_neighbors": (int, 5),
    "k": (int, 3),
    "normalize": (bool, False),
    "algorithm": (str, "ga"),
    "population_size": (int, 30),
    "fe_budget": (int, 6000),
    "runs": (int, 40),
    "cv_folds": (int, 10),
    "ga_pc": (float, 0.8),
    "ga_pm": (float, None),
    "bpso_omega": (float, 1.0),
    "bpso_c1": (float, 2.0),
    "bpso_c2": (float, 2.0),
    "bpso_vmax": (float, 6.0),
    "desk_scale": (bool, False),
    "workers": (int, 1),
    "threshold": (float, 0.5),
    "min_se": (float, 0.95),
    "prevalence": (float, 0.015),
    "c_fn": (float, 1.0),
    "c_fp": (float, 1.0),
    "r_values": (str, "0,0.25,0.5,0.75,1,1.25,1.5,1.75,2"),
    "preset": (str, "planted"),
    "n_features": (int, None),
    "informative": (str, None),
    "n_minority": (int, None),
    "n_majority": (int, None),
    "class_separation": (float, None),
    "noise_sd": (float, None),
    "minority_sd": (float, None),
}

_COMMON = ("out", "seed")
_KNN = ("k", "normalize")
_USES = {
    "split": ("input", "test_fraction"),
    "oversample": ("input", "r", "k_neighbors"),
    "select": ("train", "algorithm", "r", "k_neighbors", *_KNN, "population_size", "fe_budget", "runs",
               "cv_folds", "ga_pc", "ga_pm", "bpso_omega", "bpso_c1", "bpso_c2", "bpso_vmax",
               "desk_scale", "workers"),
    "evaluate": ("train", "test", "mask", "r", "k_neighbors", *_KNN, "threshold", "min_se", "prevalence",
                 "c_fn", "c_fp"),
    "sweep-r": ("train", "test", "mask", "r_values", "k_neighbors", *_KNN, "threshold", "min_se",
                "prevalence", "c_fn", "c_fp", "workers"),
    "synth": ("preset", "n_features", "informative", "n_minority", "n_majority", "class_separation",
              "noise_sd", "minority_sd"),
}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _convert(name: str, raw: str):
    kind = _SETTINGS[name][0]
    try:
        return _parse_bool(raw) if kind is bool else kind(raw)
    except ValueError:
        raise CliError(f"invalid value for {name}: {raw!r}") from None


def read_config(path: str | Path) -> dict:
    """Parse a flat ``key=value`` file; ``#`` starts a comment, blank lines are skipped."""
    path = Path(path)
    if not path.is_file():
        raise CliError(f"config file not found: {path}")
    values = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}: line {lineno}: expected key=value")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _SETTINGS:
            raise CliError(f"{path}: line {lineno}: unknown key {key!r}")
        values[key] = _convert(key, raw)
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="csmescreen", description="SMOTE + wrapper feature selection + k-NN screening pipeline")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for cmd in COMMANDS:
        p = sub.add_parser(cmd)
        p.add_argument("--config", help="flat key=value settings file; flags override it")
        for name in _COMMON + _USES[cmd]:
            kind = _SETTINGS[name][0]
            flag = "--" + name.replace("_", "-")
            if kind is bool:
                p.add_argument(flag, dest=name, action="store_const", const=True, default=None)
            elif name == "algorithm":
                p.add_argument(flag, dest=name, choices=ALGORITHMS, default=None)
            else:
                p.add_argument(flag, dest=name, type=str, default=None)
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags (in increasing priority)."""
    names = _COMMON + _USES[args.command]
    settings = {name: _SETTINGS[name][1] for name in names}
    if args.config:
        for key, value in read_config(args.config).items():
            if key in settings:
                settings[key] = value
    for name in names:
        raw = getattr(args, name)
        if raw is None:
            continue
        settings[name] = raw if isinstance(raw, bool) else _convert(name, raw)
    if "algorithm" in settings and settings["algorithm"] not in ALGORITHMS:
        raise CliError(f"unknown algorithm {settings['algorithm']!r}; choose from {{{', '.join(ALGORITHMS)}}}")
    return settings


def _require(settings: dict, *names: str) -> None:
    for name in names:
        if settings.get(name) is None:
            raise CliError(f"missing required setting --{name.replace('_', '-')}")


def _load(settings: dict, name: str) -> LabeledDataset:
    return load_feature_file(settings[name])


def _out_dir(settings: dict) -> Path:
    out = Path(settings["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _knn(settings: dict) -> KnnConfig:
    return KnnConfig(k=settings["k"], normalize=settings["normalize"])


def _aligned(rows: list[tuple[str, str]], title: str) -> str:
    width = max(len(k) for k, _ in rows)
    return "\n".join([title] + [f"  {k:<{width}}  {v}" for k, v in rows]) + "\n"


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


# -- evaluation core -------------------------------------------------------------


def evaluate_pipeline(train: LabeledDataset, test: LabeledDataset, mask: FeatureMask | None, r: float,
                      settings: dict) -> tuple[list[tuple[str, object]], object]:
    """Project, oversample, fit k-NN on train and score test.

    Returns the ordered (key, value) metrics and the test ROC curve.
    """
    if train.n != test.n:
        raise CliError(f"train has {train.n} features but test has {test.n}")
    if mask is not None:
        train, test = project(train, mask), project(test, mask)
    balanced = smote(train, OversampleConfig(r=r, k_neighbors=settings["k_neighbors"], seed=settings["seed"]))
    knn = _knn(settings)
    scores = knn_scores(balanced, test.features, knn)
    predicted = (scores > settings["threshold"]).astype(np.int8)
    cm = confusion(test.labels, predicted)
    se, sp, acc = summary(cm)
    curve = roc_curve(test.labels, scores)
    a = operating_point_a(curve)
    b = operating_point_b(curve, settings["min_se"])
    cost = dict(prevalence=settings["prevalence"], c_fn=settings["c_fn"], c_fp=settings["c_fp"])
    rows = [
        ("r", float(r)),
        ("k", knn.k),
        ("n_features", balanced.n),
        ("n_train", len(balanced)),
        ("n_train_minority", balanced.n_minority),
        ("n_test", len(test)),
        ("n_test_minority", test.n_minority),
        ("threshold", float(settings["threshold"])),
        ("tp", cm.tp), ("fp", cm.fp), ("tn", cm.tn), ("fn", cm.fn),
        ("se", se), ("sp", sp), ("accuracy", acc),
        ("auc", auc(curve)),
        ("a_threshold", a.threshold), ("a_se", a.se), ("a_sp", a.sp), ("a_accuracy", a.accuracy),
        ("a_cost", expected_cost(a, **cost)),
        ("min_se", float(settings["min_se"])),
        ("b_threshold", b.threshold), ("b_se", b.se), ("b_sp", b.sp), ("b_accuracy", b.accuracy),
        ("b_cost", expected_cost(b, **cost)),
        ("prevalence", float(settings["prevalence"])),
        ("c_fn", float(settings["c_fn"])), ("c_fp", float(settings["c_fp"])),
    ]
    return rows, curve


def _load_mask(settings: dict) -> FeatureMask | None:
    if settings.get("mask") is None:
        return None
    path = Path(settings["mask"])
    if not path.is_file():
        raise CliError(f"mask file not found: {path}")
    return FeatureMask.load(path)


# -- commands --------------------------------------------------------------------


def cmd_split(settings: dict) -> str:
    _require(settings, "input")
    ds = _load(settings, "input")
    train, test = stratified_split(ds, settings["test_fraction"], settings["seed"])
    out = _out_dir(settings)
    save_feature_file(train, out / "train.csv")
    save_feature_file(test, out / "test.csv")
    return (f"train.csv: {len(train)} rows ({train.n_minority} minority)\n"
            f"test.csv: {len(test)} rows ({test.n_minority} minority)\n")


def cmd_oversample(settings: dict) -> str:
    _require(settings, "input")
    ds = _load(settings, "input")
    cfg = OversampleConfig(r=settings["r"], k_neighbors=settings["k_neighbors"], seed=settings["seed"])
    out_ds = smote(ds, cfg)
    save_feature_file(out_ds, _out_dir(settings) / "oversampled.csv")
    return f"oversampled.csv: {len(out_ds)} rows ({out_ds.n_minority} minority, {len(out_ds) - len(ds)} synthetic)\n"


def search_config(settings: dict) -> SearchConfig:
    cfg = SearchConfig(
        population_size=settings["population_size"],
        fe_budget=settings["fe_budget"],
        runs_R=settings["runs"],
        cv_folds=settings["cv_folds"],
        knn=_knn(settings),
        ga_pc=settings["ga_pc"],
        ga_pm=settings["ga_pm"],
        bpso_omega=settings["bpso_omega"],
        bpso_c1=settings["bpso_c1"],
        bpso_c2=settings["bpso_c2"],
        bpso_vmax=settings["bpso_vmax"],
        master_seed=settings["seed"],
        workers=settings["workers"],
    )
    return with_desk_scale(cfg) if settings["desk_scale"] else cfg


def cmd_select(settings: dict) -> str:
    _require(settings, "train")
    train = _load(settings, "train")
    cfg = search_config(settings)
    balanced = smote(train, OversampleConfig(r=settings["r"], k_neighbors=settings["k_neighbors"], seed=settings["seed"]))
    report = multi_run_select(settings["algorithm"], balanced, cfg)
    out = _out_dir(settings)
    (out / "selection.txt").write_text(report.to_text(), encoding="utf-8")
    table = report.to_table()
    (out / "selection_table.txt").write_text(table, encoding="utf-8")
    report.best_overall.save(out / "best_mask.txt")
    return table


def cmd_evaluate(settings: dict) -> str:
    _require(settings, "train", "test")
    train, test = _load(settings, "train"), _load(settings, "test")
    rows, curve = evaluate_pipeline(train, test, _load_mask(settings), settings["r"], settings)
    out = _out_dir(settings)
    curve.save(out / "roc.csv")
    (out / "evaluation.csv").write_text("key,value\n" + "".join(f"{k},{_fmt(v)}\n" for k, v in rows), encoding="utf-8")
    table = _aligned([(k, _fmt(v)) for k, v in rows], "Test-set evaluation")
    (out / "evaluation.txt").write_text(table, encoding="utf-8")
    return table


def parse_r_values(text: str) -> list[float]:
    try:
        values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise CliError(f"invalid r_values: {text!r}") from None
    if not values:
        raise CliError("r_values is empty")
    return values


_SWEEP_COLUMNS = ("r", "n_train", "n_train_minority", "auc", "se", "sp", "accuracy", "a_se", "a_sp", "b_se", "b_sp")


def _sweep_one(job):
    train, test, mask, r, settings = job
    rows, curve = evaluate_pipeline(train, test, mask, r, settings)
    return dict(rows), curve.to_text()


def cmd_sweep_r(settings: dict) -> str:
    _require(settings, "train", "test")
    train, test = _load(settings, "train"), _load(settings, "test")
    mask = _load_mask(settings)
    r_values = parse_r_values(settings["r_values"])
    jobs = [(train, test, mask, r, settings) for r in r_values]
    if settings["workers"] > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(settings["workers"], len(jobs))) as ex:
            results = list(ex.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(job) for job in jobs]
    out = _out_dir(settings)
    lines = [",".join(_SWEEP_COLUMNS + ("roc_file",))]
    table_rows = []
    for i, (metrics, roc_text) in enumerate(results):
        name = f"roc_{i:02d}.csv"
        (out / name).write_text(roc_text, encoding="utf-8")
        lines.append(",".join(_fmt(metrics[c]) for c in _SWEEP_COLUMNS) + f",{name}")
        table_rows.append([f"{metrics['r']:g}", str(metrics["n_train"])]
                          + [f"{metrics[c]:.4f}" for c in _SWEEP_COLUMNS[3:]])
    (out / "sweep.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    header = ["r", "n_train"] + list(_SWEEP_COLUMNS[3:])
    widths = [max(len(h), *(len(row[j]) for row in table_rows)) for j, h in enumerate(header)]
    fmt = lambda cells: "  ".join(c.rjust(w) for c, w in zip(cells, widths))
    table = "\n".join([fmt(header)] + [fmt(row) for row in table_rows]) + "\n"
    (out / "sweep.txt").write_text(table, encoding="utf-8")
    return table


def synth_spec(settings: dict) -> SynthSpec:
    presets = {"planted": planted_spec, "imbalanced": imbalanced_spec}
    if settings["preset"] not in presets:
        raise CliError(f"unknown preset {settings['preset']!r}; choose from {{{', '.join(presets)}}}")
    spec = presets[settings["preset"]](settings["seed"])
    overrides = {k: settings[k] for k in ("n_features", "n_minority", "n_majority", "class_separation",
                                           "noise_sd", "minority_sd") if settings[k] is not None}
    if settings["informative"] is not None:
        # 1-based on the command line, like mask files
        try:
            overrides["informative"] = tuple(int(t) - 1 for t in settings["informative"].split(",") if t.strip())
        except ValueError:
            raise CliError(f"invalid informative list: {settings['informative']!r}") from None
    return replace(spec, **overrides)


def cmd_synth(settings: dict) -> str:
    spec = synth_spec(settings)
    ds = generate(spec)
    out = _out_dir(settings)
    save_feature_file(ds, out / "data.csv")
    spec.planted_mask().save(out / "planted_mask.txt")
    return f"data.csv: {len(ds)} rows, {ds.n} features ({ds.n_minority} minority)\n"


_HANDLERS = {
    "split": cmd_split,
    "oversample": cmd_oversample,
    "select": cmd_select,
    "evaluate": cmd_evaluate,
    "sweep-r": cmd_sweep_r,
    "synth": cmd_synth,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = resolve(args)
        text = _HANDLERS[args.command](settings)
    except FileNotFoundError as exc:
        msg = str(exc) if exc.filename is None else f"no such file: {exc.filename}"
        print(f"error: {msg}", file=sys.stderr)
        return 1
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {' '.join(str(exc).split())}", file=sys.stderr)
        return 1
    sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
