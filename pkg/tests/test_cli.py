import csv
import json
import subprocess
import sys

import pytest

from eosp.cli import main, parse_seeds

SYNTH = "n = 80\nlabel_attr_correlation = 0.4\nintra_edge_prob = 0.1\ninter_edge_prob = 0.02\nfeature_dim = 8\nseed = 1\n"
FAST = ["--epochs", "5", "--hidden", "4", "--labeled-count", "20"]


@pytest.fixture
def synth(tmp_path):
    p = tmp_path / "synth.toml"
    p.write_text(SYNTH)
    return p


def files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.name != "metadata.json"}


def test_parse_seeds():
    assert parse_seeds("0..4") == [0, 1, 2, 3, 4]
    assert parse_seeds("3,1") == [3, 1]


def test_train_writes_histories_and_summary(tmp_path, synth):
    out = tmp_path / "o"
    code = main(["train", "--synthetic", str(synth), "--alpha", "0", "--beta", "0", "--seeds", "0..2", "--out", str(out), *FAST])
    assert code == 0
    assert sorted(p.name for p in out.glob("history_seed*.jsonl")) == [f"history_seed{s}.jsonl" for s in range(3)]
    rows = list(csv.reader((out / "summary.csv").open()))
    assert rows[0][0] == "Method" and rows[1][0] == "GCN"
    assert json.loads((out / "config.json").read_text())["alpha"] == 0.0


def test_missing_file_exits_2(tmp_path, capsys):
    missing = tmp_path / "absent.csv"
    code = main(["train", "--nodes", str(missing), "--edges", str(missing), "--out", str(tmp_path / "o")])
    assert code == 2
    assert str(missing) in capsys.readouterr().err


def test_two_data_sources_is_usage_error(tmp_path, synth):
    code = main(["train", "--synthetic", str(synth), "--nodes", "a", "--edges", "b", "--out", str(tmp_path / "o")])
    assert code == 2


def test_feasibility_outputs(tmp_path):
    out = tmp_path / "f"
    assert main(["feasibility", "--x", "0.3", "--y", "0.6", "--resolution", "20", "--out", str(out)]) == 0
    assert len((out / "region.csv").read_text().splitlines()) == 1 + 400
    out2 = tmp_path / "g"
    assert main(["feasibility", "--x", "0.5", "--y", "0.5", "--resolution", "50", "--out", str(out2)]) == 0
    assert json.loads((out2 / "measure.json").read_text())["measure"] == 1.0


def test_feasibility_boundary_exit_2(tmp_path):
    assert main(["feasibility", "--x", "0", "--y", "0.5", "--out", str(tmp_path / "f")]) == 2


def test_hpo_trial_log(tmp_path, synth):
    out = tmp_path / "h"
    assert main(["hpo", "--synthetic", str(synth), "--seeds", "0", "--out", str(out), *FAST]) == 0
    assert len((out / "trials.jsonl").read_text().splitlines()) == 15
    summary = json.loads((out / "hpo_summary.json").read_text())
    assert len(summary["convergence"]) == 15 and summary["trials"] == 15


def test_sweep_rows(tmp_path, synth):
    out = tmp_path / "s"
    assert main(["sweep-labeled", "--synthetic", str(synth), "--proportions", "25", "--seeds", "0", "--out", str(out), *FAST[:4]]) == 0
    rows = list(csv.reader((out / "sweep.csv").open()))
    assert len(rows) == 1 + 2
    timings = json.loads((out / "metadata.json").read_text())["run_wall_time"]
    assert [t["method"] for t in timings] == ["GCN", "GCN-EOSP"] and all(t["seconds"] > 0 for t in timings)


def test_env_seed_fallback(tmp_path, synth, monkeypatch):
    monkeypatch.setenv("FAIRGNN_SEED", "3")
    out = tmp_path / "e"
    assert main(["train", "--synthetic", str(synth), "--out", str(out), *FAST]) == 0
    assert (out / "history_seed3.jsonl").exists()


def test_config_file_precedence(tmp_path, synth):
    cfg = tmp_path / "run.toml"
    cfg.write_text("alpha = 0.5\nepochs = 3\nhidden = 4\n")
    out = tmp_path / "c"
    assert main(["train", "--synthetic", str(synth), "--config", str(cfg), "--epochs", "4", "--out", str(out), "--labeled-count", "20"]) == 0
    resolved = json.loads((out / "config.json").read_text())
    assert resolved["alpha"] == 0.5 and resolved["epochs"] == 4 and resolved["beta"] == 1.0


def test_eval_reproduces_train_summary(tmp_path, synth):
    out = tmp_path / "t"
    main(["train", "--synthetic", str(synth), "--seeds", "0,1", "--out", str(out), *FAST])
    ev = tmp_path / "ev"
    assert main(["eval", "--synthetic", str(synth), "--seeds", "0,1", "--checkpoint-dir", str(out), "--out", str(ev), *FAST]) == 0
    assert (ev / "eval.csv").read_text().splitlines()[1:] == (out / "summary.csv").read_text().splitlines()[1:]


@pytest.mark.parametrize(
    "argv",
    [
        ["train", "--seeds", "0,1", *FAST],
        ["hpo", "--seeds", "0", "--trials", "6", *FAST],
        ["synth", "--seed", "2"],
        ["feasibility", "--x", "0.3", "--y", "0.6", "--resolution", "30"],
        ["sweep-labeled", "--proportions", "25,40", "--seeds", "0", *FAST[:4]],
    ],
    ids=lambda a: a[0],
)
def test_byte_identical_reruns(tmp_path, synth, argv):
    outs = []
    out = tmp_path / "run"
    extra = [] if argv[0] == "feasibility" else ["--synthetic", str(synth)]
    for _ in range(2):
        assert main([*argv, *extra, "--out", str(out)]) == 0
        outs.append(files(out))
    assert outs[0] == outs[1] and outs[0]


def test_module_entry_point(tmp_path):
    res = subprocess.run(
        [sys.executable, "-m", "eosp", "feasibility", "--x", "0.2", "--y", "0.7", "--resolution", "10", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0, res.stderr
