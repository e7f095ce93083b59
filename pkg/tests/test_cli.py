import json

import pytest

from mechsqueeze.cli import (
    BOUNDS_COLUMNS,
    COLUMNS,
    main,
    run_bounds,
    run_point,
    run_sweep,
    run_thresholds,
)
from mechsqueeze.errors import ScenarioError
from mechsqueeze.scenario import load_scenario, parse_scenario

DIMENSIONLESS_SCENARIO = """
title = "test"
[dimensionless]
eta = 1.0
n_th = 2e3
Q = 1e6

[feedback]
ratios = [0.5, 1.0]

[[sweep]]
variable = "C"
min = 1.0
max = 1e4
points = 13
"""


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "test.toml"
    path.write_text(DIMENSIONLESS_SCENARIO)
    return path


class TestScenarioValidation:
    def test_unknown_top_level_key(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text(DIMENSIONLESS_SCENARIO + "\n[typo_section]\nx = 1\n")
        with pytest.raises(ScenarioError, match="typo_section"):
            load_scenario(path)

    def test_unknown_nested_key(self):
        raw = {"dimensionless": {"eta": 1.0, "n_th": 1.0, "Q": 1e3, "oops": 2.0}}
        with pytest.raises(ScenarioError, match="oops"):
            parse_scenario(raw, "x")

    def test_requires_exactly_one_style(self):
        with pytest.raises(ScenarioError, match="either"):
            parse_scenario({"feedback": {"ratios": [1.0]}}, "x")

    def test_gamma_xor_quality_factor(self):
        raw = {"oscillator": {"mass": 1e-12, "omega0": 1e6, "gamma": 1.0,
                              "quality_factor": 1e6, "temperature": 300.0},
               "measurement": {"eta": 1.0, "cooperativity": 1.0}}
        with pytest.raises(ScenarioError, match="exactly one"):
            parse_scenario(raw, "x")

    def test_sweep_validation(self):
        base = {"dimensionless": {"eta": 1.0, "n_th": 1.0, "Q": 1e3}}
        with pytest.raises(ScenarioError, match="variable"):
            parse_scenario({**base, "sweep": [{"variable": "bogus", "min": 1.0,
                                               "max": 2.0, "points": 3}]}, "x")
        with pytest.raises(ScenarioError, match="points"):
            parse_scenario({**base, "sweep": [{"variable": "C", "min": 1.0,
                                               "max": 2.0, "points": 0}]}, "x")
        with pytest.raises(ScenarioError, match="n_cav"):
            parse_scenario({**base, "sweep": [{"variable": "n_cav", "min": 1.0,
                                               "max": 2.0, "points": 3}]}, "x")

    def test_second_mode_requires_si(self):
        raw = {"dimensionless": {"eta": 1.0, "n_th": 1.0, "Q": 1e3},
               "second_mode": {"omega2": 2e6, "quality_factor": 1e6,
                               "mass": 1e-12, "g_ratio": 1.0}}
        with pytest.raises(ScenarioError, match="SI"):
            parse_scenario(raw, "x")

    def test_dimensionless_requires_c_or_c_sweep(self):
        raw = {"dimensionless": {"eta": 1.0, "n_th": 1.0, "Q": 1e3}}
        with pytest.raises(ScenarioError, match="must set C"):
            parse_scenario(raw, "x")
        raw["sweep"] = [{"variable": "C", "min": 1.0, "max": 10.0, "points": 3}]
        assert parse_scenario(raw, "x").sweep[0].variable == "C"

    def test_options_flag_must_be_boolean(self):
        raw = {"dimensionless": {"eta": 1.0, "C": 1.0, "n_th": 1.0, "Q": 1e3},
               "options": {"nth_at_shifted": "yes"}}
        with pytest.raises(ScenarioError, match="boolean"):
            parse_scenario(raw, "x")

    def test_bundled_names_load(self):
        for name in ("fig2", "fig3a", "fig3b", "fig4", "membrane"):
            scenario = load_scenario(name)
            assert scenario.name == name
            assert scenario.digest

    def test_missing_file_is_scenario_error(self):
        with pytest.raises(ScenarioError, match="not found"):
            load_scenario("no_such_file.toml")


class TestRunPoint:
    def test_full_record(self, scenario_file):
        scenario = load_scenario(scenario_file)
        table = run_point(scenario, {"C": 1e4})
        assert table.columns == COLUMNS
        row = dict(zip(table.columns, table.rows[0]))
        assert row["status"] == "ok"
        assert row["C"] == 1e4
        assert row["R"] == 0.5
        assert row["det_v"] == pytest.approx(row["vxx"] * row["vpp"] - row["vxp"] ** 2)
        assert row["det_target"] == pytest.approx(row["n_tot"] / (row["eta"] * row["C"]))
        # verification ran and agreed
        assert row["oracle_rel_err"] < 1e-6

    def test_gain_and_ratio_encodings_agree(self, scenario_file):
        scenario = load_scenario(scenario_file)
        via_ratio = run_point(scenario, {"R": 1.0, "C": 100.0}, verify=False)
        via_gain = run_point(scenario, {"K": 0.0, "C": 100.0}, verify=False)
        assert via_ratio.rows == via_gain.rows

    def test_unknown_override_rejected(self, scenario_file):
        scenario = load_scenario(scenario_file)
        with pytest.raises(ScenarioError, match="override"):
            run_point(scenario, {"mass": 1.0})


class TestRunSweep:
    def test_deterministic_body(self, scenario_file):
        scenario = load_scenario(scenario_file)
        t1 = run_sweep(scenario, verify_fraction=0.2)
        t2 = run_sweep(scenario, verify_fraction=0.2)
        for ratio in scenario.feedback_ratios:
            assert t1[ratio].body_lines() == t2[ratio].body_lines()

    def test_workers_do_not_change_rows(self, scenario_file):
        scenario = load_scenario(scenario_file)
        serial = run_sweep(scenario, workers=1, verify_fraction=0.0)
        parallel = run_sweep(scenario, workers=2, verify_fraction=0.0)
        for ratio in scenario.feedback_ratios:
            assert serial[ratio].body_lines() == parallel[ratio].body_lines()

    def test_grid_order_and_status(self, scenario_file):
        scenario = load_scenario(scenario_file)
        tables = run_sweep(scenario, verify_fraction=0.0)
        rows = tables[1.0].rows
        c_col = COLUMNS.index("C")
        values = [row[c_col] for row in rows]
        assert values == sorted(values)
        assert len(values) == 13
        assert all(row[0] == "ok" for row in rows)

    def test_verification_subset_is_deterministic(self, scenario_file):
        scenario = load_scenario(scenario_file)
        tables = run_sweep(scenario, verify_fraction=0.3)
        idx = COLUMNS.index("oracle_rel_err")
        verified = [i for i, row in enumerate(tables[1.0].rows)
                    if row[idx] is not None]
        assert 0 < len(verified) < 13
        again = run_sweep(scenario, verify_fraction=0.3)
        verified2 = [i for i, row in enumerate(again[1.0].rows)
                     if row[idx] is not None]
        assert verified == verified2
        assert all(tables[1.0].rows[i][idx] < 1e-4 for i in verified)


class TestTables:
    def test_csv_round_trip_17_digits(self, scenario_file, tmp_path):
        scenario = load_scenario(scenario_file)
        table = run_point(scenario, {"C": 123.456}, verify=False)
        path = tmp_path / "row.csv"
        table.write_csv(path)
        lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
        header = lines[0].split(",")
        values = lines[1].split(",")
        record = dict(zip(header, values))
        assert float(record["vxx"]) == dict(zip(table.columns, table.rows[0]))["vxx"]

    def test_json_output(self, scenario_file, tmp_path):
        scenario = load_scenario(scenario_file)
        table = run_point(scenario, {"C": 10.0}, verify=False)
        path = tmp_path / "row.json"
        table.write_json(path)
        payload = json.loads(path.read_text())
        assert payload["provenance"]["scenario"] == "test"
        assert payload["rows"][0]["status"] == "ok"


class TestThresholdsAndBounds:
    def test_threshold_table_membrane(self):
        scenario = load_scenario("membrane")
        table = run_thresholds(scenario)
        rows = [dict(zip(table.columns, r)) for r in table.rows]
        pos_r1 = next(r for r in rows if r["target"] == "position" and r["R"] == 1.0)
        assert pos_r1["status"] == "ok"
        assert pos_r1["n_cav_full"] == pytest.approx(3e9, rel=1e-3)
        mom_r10 = next(r for r in rows if r["target"] == "momentum" and r["R"] == 10.0)
        assert mom_r10["c_full"] is None

    def test_bounds_requires_second_mode(self, scenario_file):
        scenario = load_scenario(scenario_file)
        with pytest.raises(ScenarioError, match="second_mode"):
            run_bounds(scenario)

    def test_bounds_table_ordering(self, tmp_path):
        small = tmp_path / "fig4s.toml"
        # shrink the grid through a modified copy for speed
        import importlib.resources as resources
        raw = (resources.files("mechsqueeze") / "scenarios" / "fig4.toml").read_text()
        raw = raw.replace("points = 141", "points = 9")
        raw = raw.replace("ratios = [1.0, 0.1, 0.04, 0.02]", "ratios = [0.04]")
        small.write_text(raw)
        tables = run_bounds(load_scenario(small))
        rows = [dict(zip(BOUNDS_COLUMNS, r)) for r in tables[0.04].rows]
        assert all(r["status"] == "ok" for r in rows)
        assert all(r["v_lower"] <= r["v_upper"] * (1 + 1e-12) for r in rows)


class TestMainEntry:
    def test_validation_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text("[dimensionless]\neta = 2.5\nn_th = 1.0\nQ = 1e3\n")
        code = main(["point", "--scenario", str(bad), "--out", str(tmp_path)])
        assert code == 2
        assert "error" in capsys.readouterr().err

    def test_missing_scenario_exit_code(self, tmp_path, capsys):
        code = main(["point", "--scenario", str(tmp_path / "nope.toml"),
                     "--out", str(tmp_path)])
        assert code == 2

    def test_point_success(self, scenario_file, tmp_path, capsys):
        code = main(["point", "--scenario", str(scenario_file),
                     "--out", str(tmp_path), "--override", "C=50"])
        assert code == 0
        assert (tmp_path / "test_point.csv").exists()

    def test_io_error_exit_code(self, scenario_file, tmp_path, capsys):
        blocker = tmp_path / "outfile"
        blocker.write_text("not a directory")
        code = main(["point", "--scenario", str(scenario_file),
                     "--out", str(blocker)])
        assert code == 4
        assert "i/o error" in capsys.readouterr().err

    def test_spectra_requires_si(self, scenario_file, tmp_path):
        code = main(["spectra", "--scenario", str(scenario_file),
                     "--out", str(tmp_path)])
        assert code == 2

    def test_spectra_output_format(self, tmp_path):
        code = main(["spectra", "--scenario", "membrane", "--out", str(tmp_path)])
        assert code == 0
        sxx = tmp_path / "membrane_R1_sxx.txt"
        assert sxx.exists()
        lines = sxx.read_text().splitlines()
        assert lines[0] == "# omega,S"
        omega, value = map(float, lines[1].split(","))
        assert omega > 0 and value > 0
