"""Tests for the sweep runner and the command-line front end."""

import io
import json
import math

import numpy as np
import pytest

from hqopt.cli import main
from hqopt.experiment import (
    CSV_HEADER,
    ExperimentConfig,
    derive_seeds,
    run_experiment,
    run_single,
    summarize,
    write_csv,
)
from hqopt.instances import CASE_A, CASE_B
from hqopt.matrices import SymMatrix
from hqopt.rounding import GAUSSIAN_MAX, GAUSSIAN_MIN, SIGN_MAX
from hqopt.sdp import MINIMIZE, OPTIMAL, REAL, QcqpInstance


def run_cli(argv):
    out = io.StringIO()
    rc = main(argv, out)
    return rc, out.getvalue()


def write_identity_instance(path, n=3):
    inst = QcqpInstance(
        sense=MINIMIZE,
        field=REAL,
        objective=SymMatrix(np.eye(n)),
        constraints=(SymMatrix(np.eye(n)),),
    )
    path.write_text(json.dumps(inst.to_json_dict()))
    return inst


class TestExperimentConfig:
    def test_defaults_are_desk_scale(self):
        config = ExperimentConfig()
        assert config.instances_per_m == 100
        assert max(config.m_list) <= 30
        assert config.scheme == GAUSSIAN_MIN
        assert config.sense == MINIMIZE

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"cases": ()},
            {"cases": ("Z_Unknown",)},
            {"m_list": (0,)},
            {"instances_per_m": -1},
            {"samples": 0},
            {"n": 1},
            {"scheme": "Median"},
            {"field": "Complex", "scheme": SIGN_MAX},
        ],
    )
    def test_rejects_bad_config(self, kwargs):
        with pytest.raises(ValueError):
            ExperimentConfig(**kwargs)


class TestSeedDerivation:
    def test_deterministic(self):
        assert derive_seeds(7, 0, 5, 3) == derive_seeds(7, 0, 5, 3)

    def test_distinct_across_positions(self):
        seen = {derive_seeds(7, c, m, i) for c in range(2) for m in (5, 10) for i in range(20)}
        assert len(seen) == 80


class TestRunSingle:
    def test_min_record_invariant(self):
        config = ExperimentConfig(m_list=(4,), instances_per_m=1, samples=50, n=6)
        rec = run_single(config, CASE_A, 0, 4, 0)
        assert rec.solve_status == OPTIMAL
        assert rec.empirical_ratio == pytest.approx(rec.v_hat_qp / rec.v_sdp)
        assert rec.empirical_ratio >= 1.0 - 1e-6
        assert rec.empirical_ratio <= rec.theoretical_bound

    def test_max_record_invariant(self):
        config = ExperimentConfig(m_list=(4,), instances_per_m=1, samples=80, n=6, scheme=SIGN_MAX)
        rec = run_single(config, CASE_A, 0, 4, 0)
        assert rec.solve_status == OPTIMAL
        assert rec.empirical_ratio == pytest.approx(rec.v_sdp / rec.v_hat_qp)
        assert rec.empirical_ratio >= 1.0 - 1e-6


class TestRunExperiment:
    def test_deterministic_order_and_rerun(self):
        config = ExperimentConfig(m_list=(2, 3), instances_per_m=3, samples=20, n=5)
        a = run_experiment(config)
        b = run_experiment(config)
        assert [r.instance_seed for r in a.records] == [r.instance_seed for r in b.records]
        assert [r.empirical_ratio for r in a.records] == [r.empirical_ratio for r in b.records]
        assert [(r.case, r.m) for r in a.records] == [(CASE_A, 2)] * 3 + [(CASE_A, 3)] * 3

    def test_threaded_run_matches_serial(self, monkeypatch):
        config = ExperimentConfig(m_list=(2,), instances_per_m=4, samples=20, n=5)
        serial = run_experiment(config)
        monkeypatch.setenv("HQOPT_THREADS", "3")
        threaded = run_experiment(config)
        assert [r.csv_row() for r in serial.records] == [r.csv_row() for r in threaded.records]

    def test_summary_matches_recomputation(self):
        config = ExperimentConfig(m_list=(2, 4), instances_per_m=4, samples=20, n=5)
        result = run_experiment(config)
        for summary in result.summaries:
            ratios = [
                r.empirical_ratio
                for r in result.records
                if r.case == summary.case and r.m == summary.m and math.isfinite(r.empirical_ratio)
            ]
            assert summary.count == len(ratios)
            assert summary.ratio_min == min(ratios)
            assert summary.ratio_max == max(ratios)
            assert summary.ratio_mean == sum(ratios) / len(ratios)

    def test_zero_instances_gives_header_only(self):
        config = ExperimentConfig(m_list=(2,), instances_per_m=0, samples=20, n=5)
        result = run_experiment(config)
        stream = io.StringIO()
        write_csv(result, stream)
        lines = stream.getvalue().splitlines()
        assert lines == ["# root_seed=0", CSV_HEADER]

    def test_csv_byte_identical_and_inf_serialization(self):
        # two indefinite constraints per instance: no claimed bound, inf column
        config = ExperimentConfig(
            cases=(CASE_B,), m_list=(10,), instances_per_m=2, samples=60, n=6, root_seed=3
        )
        result = run_experiment(config)
        s1, s2 = io.StringIO(), io.StringIO()
        write_csv(result, s1)
        write_csv(run_experiment(config), s2)
        assert s1.getvalue() == s2.getvalue()
        body = s1.getvalue().splitlines()
        assert body[0] == "# root_seed=3"
        assert body[1] == CSV_HEADER
        data_rows = [ln for ln in body[2:] if "Summary" not in ln]
        assert all(ln.split(",")[-1] == "inf" for ln in data_rows)


class TestCliSolve:
    def test_identity_instance(self, tmp_path):
        path = tmp_path / "inst.json"
        write_identity_instance(path)
        rc, text = run_cli(["solve", str(path)])
        assert rc == 0
        payload = json.loads(text)
        assert payload["status"] == "optimal"
        assert payload["objective_value"] == pytest.approx(1.0, abs=1e-7)

    def test_unbounded_relaxation_exits_three(self, tmp_path):
        rc, _ = run_cli(["example", "--id", "max_unbounded_relaxation", "--out", str(tmp_path / "e.json")])
        assert rc == 0
        rc, text = run_cli(["solve", str(tmp_path / "e.json")])
        assert rc == 3
        assert json.loads(text)["status"] == "unbounded"

    def test_gap_example_solves_to_zero(self, tmp_path):
        run_cli(["example", "--id", "min_gap_infinite", "--out", str(tmp_path / "g.json")])
        rc, text = run_cli(["solve", str(tmp_path / "g.json")])
        assert rc == 0
        assert abs(json.loads(text)["objective_value"]) <= 1e-7

    def test_truncated_file_exits_two(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"sense": "min", "field"')
        rc, _ = run_cli(["solve", str(path)])
        assert rc == 2

    def test_missing_file_exits_two(self):
        rc, _ = run_cli(["solve", "/nonexistent/inst.json"])
        assert rc == 2


class TestCliRound:
    def test_identity_ratio_one(self, tmp_path):
        path = tmp_path / "inst.json"
        write_identity_instance(path)
        rc, text = run_cli(["round", str(path), "--samples", "20"])
        assert rc == 0
        report = json.loads(text)
        assert report["empirical_ratio"] == pytest.approx(1.0, abs=1e-6)
        assert report["certificate_satisfied"] is True

    def test_coupled_min_example(self, tmp_path):
        run_cli(["example", "--id", "min_coupling", "--M", "10", "--out", str(tmp_path / "m.json")])
        rc, text = run_cli(["round", str(tmp_path / "m.json"), "--samples", "400", "--seed", "1"])
        assert rc == 0
        report = json.loads(text)
        # every feasible point of this instance costs at least the analytic optimum
        root = (10.0 + math.sqrt(104.0)) / 2.0
        assert report["best_objective"] >= 1.0 + root * root - 1e-4
        assert report["multi_indefinite_warning"] is True
        assert report["theoretical_bound"] == "inf"

    def test_rounding_failure_exits_four(self, tmp_path):
        run_cli(["example", "--id", "min_gap_infinite", "--out", str(tmp_path / "g.json")])
        rc, text = run_cli(["round", str(tmp_path / "g.json"), "--samples", "50"])
        assert rc == 4
        report = json.loads(text)
        assert report["failed"] is True
        assert report["samples_feasible"] == 0

    def test_unbounded_instance_skips_rounding(self, tmp_path):
        run_cli(["example", "--id", "max_unbounded_relaxation", "--out", str(tmp_path / "e.json")])
        rc, text = run_cli(["round", str(tmp_path / "e.json"), "--scheme", GAUSSIAN_MAX])
        assert rc == 3
        assert json.loads(text)["status"] == "unbounded"


class TestCliExperiment:
    def test_sweep_writes_csv(self, tmp_path):
        out = tmp_path / "sweep.csv"
        rc, text = run_cli(
            [
                "experiment",
                "--m-list",
                "3",
                "--instances-per-m",
                "3",
                "--samples",
                "20",
                "--n",
                "5",
                "--seed",
                "11",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        assert "root_seed=11" in text
        lines = out.read_text().splitlines()
        assert lines[0] == "# root_seed=11"
        assert lines[1] == CSV_HEADER
        assert len([ln for ln in lines if ln.startswith("A_OneIndef")]) == 3 + 3

    def test_rerun_is_byte_identical(self, tmp_path):
        args = [
            "experiment", "--m-list", "3", "--instances-per-m", "2", "--samples", "10",
            "--n", "5", "--seed", "2",
        ]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_cli(args + ["--out", str(a)])
        run_cli(args + ["--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_malformed_m_list_exits_two(self, tmp_path):
        rc, _ = run_cli(["experiment", "--m-list", "5,x", "--out", str(tmp_path / "c.csv")])
        assert rc == 2


class TestCliVerify:
    def test_single_check_passes(self):
        rc, text = run_cli(["verify", "--lemma", "L2_1", "--samples", "40000", "--seed", "0"])
        assert rc == 0
        payload = json.loads(text)
        assert payload["all_passed"] is True
        assert payload["checks"][0]["check_id"] == "L2_1"
        assert payload["root_seed"] == 0

    def test_unknown_check_rejected(self):
        with pytest.raises(SystemExit) as err:
            run_cli(["verify", "--lemma", "L9_9"])
        assert err.value.code == 2


class TestCliExample:
    def test_payload_shape(self):
        rc, text = run_cli(["example", "--id", "max_coupling", "--M", "10"])
        assert rc == 0
        payload = json.loads(text)
        assert payload["id"] == "max_coupling"
        assert payload["known_values"]["v_sdp_lower"] == pytest.approx(1.1)
        assert payload["instance"]["sense"] == "max"

    def test_missing_coupling_strength_exits_two(self):
        rc, _ = run_cli(["example", "--id", "min_coupling"])
        assert rc == 2

    def test_unknown_id_rejected(self):
        with pytest.raises(SystemExit) as err:
            run_cli(["example", "--id", "mystery"])
        assert err.value.code == 2
