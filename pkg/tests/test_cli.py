import csv
from dataclasses import replace

import numpy as np
import pytest

from csmescreen.cli import main, read_config
from csmescreen.dataset import FeatureMask, LabeledDataset, load_feature_file, save_feature_file
from csmescreen.synthbench import SynthSpec, generate, planted_spec


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def kv(path):
    with open(path, newline="") as fh:
        return {row["key"]: row["value"] for row in csv.DictReader(fh)}


@pytest.fixture
def data(tmp_path):
    save_feature_file(generate(planted_spec(0)), tmp_path / "data.csv")
    return tmp_path


@pytest.fixture
def split_dir(data, capsys):
    code, _, _ = run(capsys, "split", "--input", data / "data.csv", "--out", data / "s", "--seed", 3)
    assert code == 0
    return data / "s"


def test_split_counts_and_stratification(data, capsys):
    code, out, _ = run(capsys, "split", "--input", data / "data.csv", "--out", data / "s", "--test-fraction", 0.2)
    assert code == 0
    train = load_feature_file(data / "s" / "train.csv")
    test = load_feature_file(data / "s" / "test.csv")
    assert (len(train), len(test)) == (80, 20)
    assert (train.n_minority, test.n_minority) == (32, 8)
    assert set(train.ids).isdisjoint(test.ids)


def test_split_byte_identical_rerun(data, capsys):
    for d in ("a", "b"):
        run(capsys, "split", "--input", data / "data.csv", "--out", data / d, "--seed", 5)
    for name in ("train.csv", "test.csv"):
        assert (data / "a" / name).read_bytes() == (data / "b" / name).read_bytes()


def test_missing_input_names_path(tmp_path, capsys):
    missing = tmp_path / "nowhere.csv"
    code, _, err = run(capsys, "split", "--input", missing, "--out", tmp_path)
    assert code != 0
    assert err.startswith("error:") and str(missing) in err
    assert len(err.strip().splitlines()) == 1


def test_invalid_algorithm_is_usage_error(split_dir, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["select", "--train", str(split_dir / "train.csv"), "--algorithm", "sa"])
    assert exc.value.code == 2
    err = capsys.readouterr().err
    assert "error:" in err and "ga" in err and "bpso" in err


def test_invalid_algorithm_from_config(split_dir, tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("algorithm = sa\n")
    code, _, err = run(capsys, "select", "--config", cfg, "--train", split_dir / "train.csv")
    assert code != 0 and err.startswith("error:") and "{ga, bpso}" in err


def test_config_file_and_flag_priority(data, tmp_path, capsys):
    cfg = tmp_path / "split.cfg"
    cfg.write_text(f"# split settings\ninput = {data / 'data.csv'}\ntest_fraction = 0.5\nseed = 1\n")
    assert read_config(cfg)["test_fraction"] == 0.5
    run(capsys, "split", "--config", cfg, "--out", data / "c1")
    assert len(load_feature_file(data / "c1" / "test.csv")) == 50
    run(capsys, "split", "--config", cfg, "--out", data / "c2", "--test-fraction", 0.3)
    assert len(load_feature_file(data / "c2" / "test.csv")) == 30


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    code, _, err = run(capsys, "split", "--config", cfg, "--input", "x.csv")
    assert code != 0 and "colour" in err


def test_oversample_command(data, capsys):
    code, _, _ = run(capsys, "oversample", "--input", data / "data.csv", "--r", 0.5, "--out", data / "o")
    assert code == 0
    out = load_feature_file(data / "o" / "oversampled.csv")
    assert (out.n_minority, out.n_majority) == (60, 60)


def test_sweep_r_zero_equals_evaluate(split_dir, capsys):
    tr, te = split_dir / "train.csv", split_dir / "test.csv"
    run(capsys, "evaluate", "--train", tr, "--test", te, "--r", 0, "--out", split_dir / "ev")
    run(capsys, "sweep-r", "--train", tr, "--test", te, "--r-values", "0", "--out", split_dir / "sw")
    ev = kv(split_dir / "ev" / "evaluation.csv")
    with open(split_dir / "sw" / "sweep.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1
    for col in ("auc", "se", "sp", "accuracy", "a_se", "a_sp", "b_se", "b_sp", "n_train"):
        assert rows[0][col] == ev[col]
    assert (split_dir / "sw" / "roc_00.csv").read_bytes() == (split_dir / "ev" / "roc.csv").read_bytes()


def test_sweep_r_duplicate_rows(split_dir, capsys):
    run(capsys, "sweep-r", "--train", split_dir / "train.csv", "--test", split_dir / "test.csv",
        "--r-values", "1,1", "--out", split_dir / "sw")
    lines = (split_dir / "sw" / "sweep.csv").read_text().splitlines()
    assert len(lines) == 3
    assert lines[1].rsplit(",", 1)[0] == lines[2].rsplit(",", 1)[0]


def test_all_ones_mask_matches_no_mask(split_dir, capsys):
    FeatureMask.all_ones(12).save(split_dir / "ones.txt")
    tr, te = split_dir / "train.csv", split_dir / "test.csv"
    run(capsys, "evaluate", "--train", tr, "--test", te, "--out", split_dir / "a")
    run(capsys, "evaluate", "--train", tr, "--test", te, "--mask", split_dir / "ones.txt", "--out", split_dir / "b")
    for name in ("evaluation.csv", "evaluation.txt", "roc.csv"):
        assert (split_dir / "a" / name).read_bytes() == (split_dir / "b" / name).read_bytes()


def test_mask_dimension_mismatch(split_dir, capsys):
    FeatureMask.all_ones(5).save(split_dir / "m5.txt")
    code, _, err = run(capsys, "evaluate", "--train", split_dir / "train.csv", "--test", split_dir / "test.csv",
                       "--mask", split_dir / "m5.txt", "--out", split_dir / "x")
    assert code != 0 and err.startswith("error:")


def test_perfect_separation(tmp_path, capsys):
    spec = SynthSpec(n_features=4, informative=(0, 1, 2, 3), n_minority=30, n_majority=60, class_separation=40.0, seed=2)
    save_feature_file(generate(spec), tmp_path / "d.csv")
    run(capsys, "split", "--input", tmp_path / "d.csv", "--out", tmp_path)
    code, _, _ = run(capsys, "evaluate", "--train", tmp_path / "train.csv", "--test", tmp_path / "test.csv",
                     "--out", tmp_path / "ev")
    assert code == 0
    ev = kv(tmp_path / "ev" / "evaluation.csv")
    assert float(ev["auc"]) == 1.0
    assert [float(ev[k]) for k in ("a_se", "a_sp", "b_se", "b_sp")] == [1.0, 1.0, 1.0, 1.0]


def test_roc_file_round_trip(split_dir, capsys):
    run(capsys, "evaluate", "--train", split_dir / "train.csv", "--test", split_dir / "test.csv",
        "--out", split_dir / "ev")
    # independent recomputation from the emitted points only
    with open(split_dir / "ev" / "roc.csv", newline="") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))][1:]
    fpr = [float(r[0]) for r in rows]
    tpr = [float(r[1]) for r in rows]
    area = sum((fpr[i + 1] - fpr[i]) * (tpr[i + 1] + tpr[i]) / 2 for i in range(len(rows) - 1))
    assert abs(area - float(kv(split_dir / "ev" / "evaluation.csv")["auc"])) <= 1e-9


def test_select_single_run(split_dir, capsys):
    code, out, _ = run(capsys, "select", "--train", split_dir / "train.csv", "--runs", 1, "--fe-budget", 60,
                       "--population-size", 10, "--cv-folds", 5, "--out", split_dir / "sel")
    assert code == 0
    text = (split_dir / "sel" / "selection.txt").read_text()
    table = text.split("\n\n", 1)[1].strip().splitlines()
    assert len(table) == 2
    mask = FeatureMask.load(split_dir / "sel" / "best_mask.txt")
    assert len(mask) == 12 and mask.cardinality >= 1
    assert out == (split_dir / "sel" / "selection_table.txt").read_text()


def test_select_planted_improves(split_dir, capsys):
    run(capsys, "select", "--train", split_dir / "train.csv", "--desk-scale", "--out", split_dir / "sel")
    fields = dict(line.split("=", 1) for line in (split_dir / "sel" / "selection.txt").read_text().split("\n\n")[0].splitlines())
    assert float(fields["pi_percent"]) > 0


def test_synth_command(tmp_path, capsys):
    code, _, _ = run(capsys, "synth", "--preset", "planted", "--seed", 4, "--n-features", 6, "--informative", "1,3",
                     "--out", tmp_path)
    assert code == 0
    ds = load_feature_file(tmp_path / "data.csv")
    expected = generate(replace(planted_spec(4), n_features=6, informative=(0, 2)))
    assert np.array_equal(ds.features, expected.features)
    assert FeatureMask.load(tmp_path / "planted_mask.txt").indices() == [1, 3]
