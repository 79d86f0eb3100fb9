"""Spec parsing, sweep expansion, row assembly, CSV/JSONL emission."""

import csv
import io
import json

import numpy as np
import pytest

from relaysim.experiment import (COLUMNS, STATUS_OK, STATUS_OVERFLOW,
                                 ExperimentSpec, SpecError, _row_seed, emit,
                                 load_spec, parse_spec, run_experiment)

MINIMAL = """\
schema_version = 1
[system]
scenario = fixed
scheme = odwf
K = 50
N = 2
p = 1.0
beta = 8
"""


def test_parse_minimal_spec_defaults():
    spec = parse_spec(MINIMAL)
    cfg = spec.template
    assert (cfg.scenario, cfg.scheme, cfg.K, cfg.N) == ("fixed", "odwf", 50, 2)
    assert cfg.p == 1.0 and cfg.beta == 8.0
    assert spec.mode == "both" and spec.out_format == "csv"
    assert spec.out_path is None
    assert spec.sweep == () and spec.n_points == 1


def test_parse_full_spec_with_sweep_and_output():
    spec = parse_spec(MINIMAL + """
[sweep]
beta = 8, 16, 32
K = 50, 100
[output]
mode = predict
format = jsonl
path = out.jsonl
""")
    assert spec.sweep == (("beta", (8.0, 16.0, 32.0)), ("K", (50, 100)))
    assert spec.n_points == 6
    assert spec.mode == "predict" and spec.out_format == "jsonl"
    assert spec.out_path == "out.jsonl"


def test_parse_accepts_comments_and_blank_lines():
    spec = parse_spec(MINIMAL.replace("[system]", "# a comment\n\n[system]\n; more"))
    assert spec.template.K == 50


@pytest.mark.parametrize("mangle,needle", [
    (lambda t: t.replace("schema_version = 1\n", ""), "missing schema_version"),
    (lambda t: t.replace("= 1", "= 9", 1), "unsupported schema_version"),
    (lambda t: "answer = 42\n" + t, "unknown top-level key"),
    (lambda t: t + "[extras]\n", "unknown section"),
    (lambda t: t + "just words\n", "expected key = value"),
    (lambda t: t + "frobnicate = 3\n", "unknown [system] key"),
    (lambda t: t + "K = 60\n", "duplicate [system] key"),
    (lambda t: t.replace("K = 50", "K = fifty"), "K expects an integer"),
    (lambda t: t.replace("p = 1.0", "p = one"), "p expects a number"),
    (lambda t: t + "[sweep]\nscenario = fixed, mobile\n", "not a sweepable"),
    (lambda t: t + "[sweep]\nbeta = 1, 2\nbeta = 3\n", "duplicate sweep axis"),
    (lambda t: t + "[sweep]\nbeta = ,\n", "has no values"),
    (lambda t: t + "[sweep]\nmax_points = many\n", "max_points expects"),
    (lambda t: t + "[output]\nmode = guess\n", "mode must be one of"),
    (lambda t: t + "[output]\nformat = xml\n", "format must be one of"),
    (lambda t: t + "[output]\ncompression = zip\n", "unknown [output] key"),
])
def test_parse_rejects_bad_specs(mangle, needle):
    with pytest.raises(SpecError) as err:
        parse_spec(mangle(MINIMAL))
    assert needle in str(err.value)


def test_parse_missing_required_key():
    with pytest.raises(SpecError, match="missing required key 'beta'"):
        parse_spec(MINIMAL.replace("beta = 8\n", ""))


def test_parse_anchors_config_violations_to_their_line():
    bad = MINIMAL + "q = 0.7\n"
    lineno = bad.splitlines().index("q = 0.7") + 1
    with pytest.raises(SpecError) as err:
        parse_spec(bad)
    assert err.value.line == lineno
    assert str(err.value) == f"line {lineno}: q must be in [0, 1/2], got 0.7"


def test_parse_enforces_point_cap():
    text = MINIMAL + "[sweep]\nmax_points = 5\nbeta = 1, 2, 3, 4, 5, 6\n"
    with pytest.raises(SpecError, match="sweep has 6 points, cap is 5"):
        parse_spec(text)
    parse_spec(text.replace("max_points = 5", "max_points = 6"))


def test_load_spec_reads_files(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(MINIMAL, encoding="utf-8")
    assert load_spec(path).template.K == 50
    with pytest.raises(OSError):
        load_spec(tmp_path / "absent.ini")


def test_row_seed_is_stable_and_distinct():
    seeds = [_row_seed(123, row) for row in range(50)]
    assert seeds == [_row_seed(123, row) for row in range(50)]
    assert len(set(seeds)) == 50
    assert all(0 <= s < 2**64 for s in seeds)
    assert _row_seed(124, 0) != seeds[0]


def predict_spec(extra=""):
    return parse_spec(MINIMAL + "[sweep]\nbeta = 8, 16, 32\n"
                      "[output]\nmode = predict\n" + extra)


def test_run_experiment_predict_rows():
    table = run_experiment(predict_spec())
    assert [r["row"] for r in table] == [0, 1, 2]
    assert [r["beta"] for r in table] == [8.0, 16.0, 32.0]
    for row, cells in enumerate(table):
        assert cells["status"] == STATUS_OK
        assert cells["master_seed"] == 0
        assert cells["seed"] == _row_seed(0, row)
        assert cells["pred_T"] > 0 and cells["pred_delta"] > 0
        assert "T" not in cells and "D" not in cells      # predict mode
        assert "alpha" not in cells                        # fixed scenario
        assert cells["warmup_frames"] >= 1000


def test_run_experiment_sweep_order_last_axis_fastest():
    spec = parse_spec(MINIMAL + "[sweep]\nK = 50, 100\nbeta = 8, 16\n"
                      "[output]\nmode = predict\n")
    combos = [(r["K"], r["beta"]) for r in run_experiment(spec)]
    assert combos == [(50, 8.0), (50, 16.0), (100, 8.0), (100, 16.0)]


def test_run_experiment_progress_callback():
    calls = []
    run_experiment(predict_spec(), progress=lambda i, n: calls.append((i, n)))
    assert calls == [(0, 3), (1, 3), (2, 3)]


SIM_SMALL = """\
schema_version = 1
[system]
scenario = fixed
scheme = odwf
K = 100
N = 1
p = 1.0
beta = 4
warmup_frames = 50
measure_frames = 300
seed = 11
"""


def test_run_experiment_both_mode_rows():
    table = run_experiment(parse_spec(SIM_SMALL))
    assert len(table) == 1
    cells = table[0]
    assert cells["status"] == STATUS_OK
    assert cells["T"] > 0 and cells["T_ci95"] == 0.0
    assert cells["D"] >= 1.0
    assert 0.0 <= cells["P_RD_hat"] <= 1.0
    assert cells["pred_T"] > 0
    assert cells["measure_frames"] == 300 and cells["warmup_frames"] == 50


def test_run_experiment_mobile_rows_carry_geometry():
    text = SIM_SMALL.replace("scenario = fixed", "scenario = mobile")
    table = run_experiment(parse_spec(text + "[output]\nmode = predict\n"))
    cells = table[0]
    assert (cells["alpha"], cells["M"], cells["q"], cells["R"]) == (4.0, 5, 0.1, 1.0)
    assert cells["pred_validity"] == "orderwise_only"


def test_run_experiment_overflow_yields_marked_row():
    text = """\
schema_version = 1
[system]
scenario = fixed
scheme = odwf
K = 2
N = 2
p = 1.0
beta = 8
buffer_cap = 3
warmup_frames = 0
measure_frames = 4000
[sweep]
beta = 8, 1
"""
    table = run_experiment(parse_spec(text))
    assert table[0]["status"] == STATUS_OVERFLOW
    assert "T" not in table[0] and "D" not in table[0]
    assert table[0]["pred_T"] > 0            # predictions still computed
    assert table[1]["status"] == STATUS_OK   # beta=1 drains instantly
    assert table[1]["T"] == 0.0              # rate log2(1+p*ln 1) is zero


def test_run_experiment_is_deterministic():
    spec = parse_spec(SIM_SMALL)
    assert run_experiment(spec) == run_experiment(spec)


def test_emit_csv_round_trips(tmp_path):
    table = run_experiment(parse_spec(SIM_SMALL))
    path = tmp_path / "out.csv"
    emit(table, "csv", str(path))
    raw = path.read_bytes()
    assert b"\r\n" in raw
    rows = list(csv.reader(io.StringIO(raw.decode("utf-8"))))
    assert rows[0] == list(COLUMNS)
    assert len(rows) == 1 + len(table)
    record = dict(zip(rows[0], rows[1]))
    assert record["scenario"] == "fixed"
    assert record["alpha"] == ""                   # absent cell, empty field
    assert float(record["T"]) == table[0]["T"]     # repr round-trips
    assert int(record["seed"]) == table[0]["seed"]


def test_emit_jsonl_omits_absent_keys(tmp_path):
    table = run_experiment(predict_spec())
    path = tmp_path / "out.jsonl"
    emit(table, "jsonl", str(path))
    lines = path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 3
    for line, cells in zip(lines, table):
        record = json.loads(line)
        assert "T" not in record and "alpha" not in record
        assert record["pred_T"] == cells["pred_T"]
        assert list(record) == [c for c in COLUMNS if c in record]


def test_emit_bytes_identical_across_calls(tmp_path):
    spec = parse_spec(SIM_SMALL)
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for path in paths:
        emit(run_experiment(spec), "csv", str(path))
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_emit_rejects_empty_table_and_bad_format(tmp_path):
    with pytest.raises(ValueError, match="empty table"):
        emit([], "csv", str(tmp_path / "x.csv"))
    with pytest.raises(ValueError, match="unknown format"):
        emit([{"row": 0}], "tsv", str(tmp_path / "x.tsv"))


def test_emit_stdout_when_no_path(capsys):
    emit(run_experiment(predict_spec()), "csv", None)
    out = capsys.readouterr().out
    assert out.startswith(",".join(COLUMNS[:3]))
    assert len(out.splitlines()) == 4
