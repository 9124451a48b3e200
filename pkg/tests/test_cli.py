import csv
import json
import math

import pytest

from ssle_security import __version__
from ssle_security.cli import main, parse_float_list, parse_int_range, run


def table(text: str) -> list[dict]:
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(body))


def rows_of(argv: list[str]) -> list[dict]:
    status, text, _ = run(argv)
    assert status == 0
    return table(text)


# --- argument parsing -----------------------------------------------------------------


def test_range_parsers():
    assert parse_int_range("1:5") == [1, 2, 3, 4, 5]
    assert parse_int_range("0:10:5") == [0, 5, 10]
    assert parse_int_range("3,1,2") == [3, 1, 2]
    assert parse_float_list("0.1:0.3:0.1") == pytest.approx([0.1, 0.2, 0.3])
    assert parse_float_list("0.33") == [0.33]


@pytest.mark.parametrize(
    "argv",
    [
        ["curve", "--n", "5:1"],
        ["curve", "--n", "a:b"],
        ["curve", "--kinds", "pow"],
        ["curve", "--alpha", "1.2"],
        ["persistence", "--epsilon", "2"],
        ["simulate", "--alpha", "0.1,0.2"],
        ["simulate", "--runs", "0"],
        ["nonsense"],
    ],
)
def test_usage_errors_exit_with_two(argv, capsys):
    assert main(argv) == 2


def test_domain_errors_exit_with_three(capsys):
    assert main(["curve", "--alpha", "0.5", "--n", "1:3"]) == 3
    assert main(["persistence", "--source", "grinding", "--alpha", "0.3", "--epsilon", "1e-9"]) == 3
    assert "domain error" in capsys.readouterr().err


# --- curve ----------------------------------------------------------------------------


def test_private_curve_at_one_third():
    rows = rows_of(["curve", "--source", "private", "--kinds", "ssle,ple", "--alpha", "0.33", "--n", "1:600"])
    assert len(rows) == 1200
    assert list(rows[0]) == ["kind", "alpha", "n", "probability", "log10_probability"]
    at300 = {r["kind"]: float(r["probability"]) for r in rows if r["n"] == "300"}
    assert 1e-10 <= at300["ssle"] <= 1e-8
    assert 1e-8 <= at300["ple"] <= 1e-6


def test_empty_horizon_rows_are_certain():
    rows = rows_of(["curve", "--source", "private", "--alpha", "0.33", "--n", "0:0"])
    assert len(rows) == 2
    for r in rows:
        assert float(r["probability"]) == 1.0 and float(r["log10_probability"]) == 0.0


def test_log10_column_matches_probability():
    for r in rows_of(["curve", "--alpha", "0.25", "--n", "1:50"]):
        assert float(r["log10_probability"]) == pytest.approx(math.log10(float(r["probability"])), rel=1e-12)


def test_grinding_curve_ordering():
    rows = rows_of(["curve", "--source", "grinding", "--kinds", "ssle,ple,ind", "--alpha", "0.2", "--n", "1:400"])
    last = {r["kind"]: float(r["log10_probability"]) for r in rows if r["n"] == "400"}
    assert last["ind"] < last["ssle"] < last["ple"]


def test_rows_are_sorted_by_kind_alpha_n():
    rows = rows_of(["curve", "--kinds", "ple,ssle", "--alpha", "0.3,0.1", "--n", "3,1,2"])
    keys = [(r["kind"], float(r["alpha"]), int(r["n"])) for r in rows]
    order = {"ssle": 0, "ple": 1, "ind": 2}
    assert keys == sorted(keys, key=lambda k: (order[k[0]], k[1], k[2]))


# --- gap coefficient and threshold ----------------------------------------------------


def test_gap_coefficients():
    rows = rows_of(["gap-coefficient", "--alpha", "0.33,0.5"])
    c33, c50 = rows
    assert float(c33["coeff_ssle"]) == pytest.approx(-0.34, abs=1e-12)
    assert float(c33["coeff_ple"]) == pytest.approx(-0.20718, abs=5e-5)
    assert float(c50["coeff_ssle"]) == 0.0 and float(c50["coeff_ple"]) == 0.0


def test_gap_coefficient_sweep_ordering():
    rows = rows_of(["gap-coefficient", "--alpha", "0.01:0.49:0.01"])
    assert len(rows) == 49
    assert all(float(r["coeff_ssle"]) <= float(r["coeff_ple"]) for r in rows)


def test_threshold_report():
    rows = {r["kind"]: r for r in rows_of(["threshold"])}
    assert float(rows["ssle"]["threshold"]) == pytest.approx(0.360, abs=5e-3)
    assert float(rows["ple"]["threshold"]) == pytest.approx(0.265, abs=5e-3)
    for r in rows.values():
        assert float(r["cross_check_delta"]) < 1e-6
        assert int(r["iterations"]) > 0


# --- persistence ----------------------------------------------------------------------


def test_persistence_at_one_third():
    rows = {r["kind"]: r for r in rows_of(["persistence", "--alpha", "0.33", "--epsilon", "1e-12"])}
    assert int(rows["ssle"]["n0"]) == pytest.approx(400, rel=0.10)
    assert int(rows["ple"]["n0"]) == pytest.approx(550, rel=0.10)
    assert float(rows["ssle"]["reduction_percent"]) == pytest.approx(25, abs=3)
    assert rows["ssle"]["method"] == "exact-scan" and rows["ssle"]["proxy"] == "False"


def test_persistence_for_a_vanishing_adversary():
    rows = {r["kind"]: int(r["n0"]) for r in rows_of(["persistence", "--alpha", "0.01", "--epsilon", "0.5"])}
    assert rows["ssle"] <= rows["ple"] <= 5


def test_grinding_persistence_is_flagged_proxy():
    rows = rows_of(["persistence", "--source", "grinding", "--alpha", "0.1", "--epsilon", "1e-9"])
    assert all(r["proxy"] == "True" for r in rows)


def test_unreachable_epsilon_is_flagged():
    rows = rows_of(["persistence", "--kinds", "ssle", "--source", "grinding", "--alpha", "0.35",
                    "--epsilon", "1e-300", "--method", "scan"])
    assert rows[0]["method"] == "unreachable" and rows[0]["n0"] == ""


# --- simulate -------------------------------------------------------------------------


def test_simulate_one_round_win():
    rows = rows_of(["simulate", "--kind", "ssle", "--alpha", "0.3333333333333333", "--n", "1",
                    "--target", "win", "--runs", "1000000", "--seed", "1"])
    (r,) = rows
    assert float(r["estimate"]) == pytest.approx(2 / 3, abs=0.002)
    assert float(r["analytic"]) == pytest.approx(2 / 3, rel=1e-12)
    assert abs(float(r["z"])) < 5


@pytest.mark.parametrize("kind", ["ssle", "ple", "ind"])
def test_simulate_empty_game(kind):
    (r,) = rows_of(["simulate", "--kind", kind, "--alpha", "0.4", "--n", "0", "--target", "win", "--runs", "1000"])
    assert float(r["estimate"]) == 1.0 and float(r["z"]) == 0.0


def test_simulate_brw_cdf():
    rows = rows_of(["simulate", "--kind", "ssle", "--alpha", "0.3", "--n", "5", "--target", "brw-max",
                    "--runs", "1000000", "--saturation-cap", "10000"])
    assert [int(r["point"]) for r in rows] == list(range(7))
    assert all(abs(float(r["z"])) < 5 for r in rows)


def test_simulate_gap_pmf():
    rows = rows_of(["simulate", "--kind", "ple", "--alpha", "0.33", "--n", "6", "--target", "gap-pmf", "--runs", "200000"])
    assert len(rows) == 13
    assert sum(float(r["estimate"]) for r in rows) == pytest.approx(1.0)


def test_simulate_deviation_exits_with_four(capsys):
    # with a one-step catch-up window the estimate is biased well past 5 sigma
    argv = ["simulate", "--kind", "ssle", "--alpha", "0.45", "--n", "4", "--target", "win",
            "--runs", "400000", "--multiplier", "1"]
    assert main(argv) == 4


# --- configuration and output ---------------------------------------------------------


def test_config_file_is_overridden_by_flags(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"alpha": "0.2", "n": "1:3", "kinds": "ple"}))
    _, _, resolved = run(["curve", "--config", str(cfg), "--n", "1:2"])
    assert resolved["alpha"] == "0.2" and resolved["kinds"] == "ple" and resolved["n"] == "1:2"


def test_config_file_accepts_dashed_keys_and_rejects_unknown_ones(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"saturation-cap": 5000, "target": "brw-max"}))
    _, _, resolved = run(["simulate", "--config", str(cfg), "--n", "2", "--runs", "100"])
    assert resolved["saturation_cap"] == 5000
    cfg.write_text(json.dumps({"colour": "blue"}))
    assert main(["curve", "--config", str(cfg)]) == 2


def test_resolved_config_is_echoed():
    _, text, resolved = run(["curve", "--alpha", "0.2", "--n", "1:2", "--seed", "9"])
    lines = text.splitlines()
    assert lines[0] == f"# ssle-security {__version__}"
    assert json.loads(lines[1].removeprefix("# config: ")) == resolved
    assert resolved["seed"] == 9


def test_json_and_csv_carry_the_same_data():
    argv = ["curve", "--alpha", "0.2", "--n", "1:20", "--kinds", "ssle,ple,ind"]
    csv_rows = table(run(argv)[1])
    _, text, cfg = run(argv + ["--format", "json"])
    doc = json.loads(text)
    assert doc["metadata"]["version"] == __version__
    assert doc["metadata"]["config"] == cfg
    assert len(doc["rows"]) == len(csv_rows)
    for j, c in zip(doc["rows"], csv_rows):
        assert j["kind"] == c["kind"] and str(j["n"]) == c["n"]
        assert j["probability"] == float(c["probability"])
        assert j["log10_probability"] == float(c["log10_probability"])


def test_output_file(tmp_path, capsys):
    out = tmp_path / "curve.csv"
    assert main(["curve", "--alpha", "0.2", "--n", "1:3", "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert len(table(out.read_text())) == 6


def test_simulation_is_deterministic_given_the_seed():
    argv = ["simulate", "--kind", "ple", "--alpha", "0.3", "--n", "8", "--target", "gap-pmf", "--runs", "20000"]
    assert run(argv + ["--seed", "3"])[1] == run(argv + ["--seed", "3"])[1]
    assert run(argv + ["--seed", "3"])[1] != run(argv + ["--seed", "4"])[1]
