"""End-to-end command line behavior: exit codes, overrides, presets."""

import csv
import io
import json

import pytest

from relaysim.cli import PRESETS, load_preset, main
from relaysim.experiment import COLUMNS

SPEC = """\
schema_version = 1
[system]
scenario = fixed
scheme = odwf
K = 100
N = 1
p = 1.0
beta = 4
warmup_frames = 50
measure_frames = 200
seed = 3
"""


@pytest.fixture
def spec_file(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(SPEC, encoding="utf-8")
    return path


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.reader(handle))


def test_simulate_writes_csv(spec_file, tmp_path, capsys):
    out = tmp_path / "res.csv"
    assert main(["simulate", "--spec", str(spec_file), "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0] == list(COLUMNS)
    record = dict(zip(rows[0], rows[1]))
    assert float(record["T"]) > 0
    assert record["pred_T"] == ""          # simulate mode: no predictions
    err = capsys.readouterr().err
    assert "1 rows in" in err and "s" in err


def test_predict_skips_simulation_columns(spec_file, tmp_path):
    out = tmp_path / "res.csv"
    assert main(["predict", "--spec", str(spec_file), "--out", str(out)]) == 0
    record = dict(zip(*read_csv(out)[:2]))
    assert record["T"] == "" and record["pred_T"] != ""


def test_sweep_runs_spec_mode_both(spec_file, tmp_path):
    out = tmp_path / "res.csv"
    assert main(["sweep", "--spec", str(spec_file), "--out", str(out)]) == 0
    record = dict(zip(*read_csv(out)[:2]))
    assert record["T"] != "" and record["pred_T"] != ""


def test_seed_and_format_overrides(spec_file, tmp_path):
    out = tmp_path / "res.jsonl"
    code = main(["predict", "--spec", str(spec_file), "--seed", "99",
                 "--out", str(out), "--format", "jsonl"])
    assert code == 0
    record = json.loads(out.read_text(encoding="utf-8").splitlines()[0])
    assert record["master_seed"] == 99
    assert "T" not in record


def test_stdout_is_the_default_sink(spec_file, capsys):
    assert main(["predict", "--spec", str(spec_file)]) == 0
    captured = capsys.readouterr()
    rows = list(csv.reader(io.StringIO(captured.out)))
    assert rows[0] == list(COLUMNS) and len(rows) == 2


def test_bad_spec_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text(SPEC + "q = 0.7\n", encoding="utf-8")
    assert main(["simulate", "--spec", str(path)]) == 2
    err = capsys.readouterr().err
    assert err.startswith("error: spec: line")
    assert "q must be in [0, 1/2]" in err


def test_bad_seed_override_exits_2(spec_file, capsys):
    assert main(["predict", "--spec", str(spec_file), "--seed", "-1"]) == 2
    assert "error: spec: seed must be >= 0" in capsys.readouterr().err


def test_missing_spec_file_exits_3(tmp_path, capsys):
    assert main(["simulate", "--spec", str(tmp_path / "nope.ini")]) == 3
    assert capsys.readouterr().err.startswith("error: io:")


def test_unwritable_output_exits_3(spec_file, tmp_path, capsys):
    target = tmp_path / "no" / "such" / "dir" / "res.csv"
    assert main(["predict", "--spec", str(spec_file),
                 "--out", str(target)]) == 3
    # the timing line lands on stderr first; the failure is the last line
    last = capsys.readouterr().err.splitlines()[-1]
    assert last.startswith("error: io:")


def test_spec_and_preset_are_mutually_exclusive(spec_file, capsys):
    with pytest.raises(SystemExit):
        main(["simulate", "--spec", str(spec_file), "--preset", PRESETS[0]])
    with pytest.raises(SystemExit):
        main(["simulate"])


def test_presets_load_and_predict(tmp_path):
    for name in PRESETS:
        spec = load_preset(name)
        assert spec.n_points >= 4
        out = tmp_path / f"{name}.csv"
        assert main(["predict", "--preset", name, "--out", str(out)]) == 0
        rows = read_csv(out)
        assert len(rows) == 1 + spec.n_points
        for row in rows[1:]:
            record = dict(zip(rows[0], row))
            assert record["pred_T"] != "" and record["status"] == "ok"


def test_preset_predict_is_byte_deterministic(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for path in paths:
        assert main(["predict", "--preset", PRESETS[0],
                     "--out", str(path)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
