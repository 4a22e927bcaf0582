import json

import numpy as np
import pytest

from nmqc import experiment as ex, game as gm, mitigation as mt, topology
from nmqc.exceptions import InputShapeError, PlanError


def plan(**kw):
    base = dict(game="H3", configs="all", shots=0, resamples=0)
    base.update(kw)
    return ex.ExperimentPlan(**base)


class TestPlan:
    @pytest.mark.parametrize("kw", [
        {"shots": -1}, {"runs": 0}, {"mitigation": "magic"}, {"resamples": 10},
        {"level": 1.5}, {"configs": "some"},
    ])
    def test_invalid(self, kw):
        with pytest.raises(PlanError):
            plan(**kw).validate()

    def test_parse_configs(self):
        assert ex.parse_configs("all") == "all"
        assert ex.parse_configs("0,1,2,4;8,9") == ((0, 1, 2, 4), (8, 9))
        with pytest.raises(PlanError):
            ex.parse_configs("0,a")

    def test_resolve_method(self):
        assert ex.resolve_method("auto", 5) == "qrem"
        assert ex.resolve_method("auto", 6) == "mem"
        assert ex.resolve_method("none", 3) == "none"


class TestNoise:
    def test_specs(self, tmp_path):
        g = topology.load_graph()
        assert ex.load_noise("none", g) == (None, 0.0)
        assert ex.load_noise("graph", g) == (g.readout_error, 0.0)
        readout, dep = ex.load_noise("bundled", g)
        assert dep == 0.01 and readout == g.readout_error
        path = tmp_path / "noise.json"
        path.write_text(json.dumps({"readout_error_override": 0.03, "depolarizing_2q": 0.0}))
        assert ex.load_noise(str(path), g) == ((0.03,) * 27, 0.0)
        path.write_text(json.dumps({"readout_error_override": [0.1, 0.2]}))
        with pytest.raises(PlanError):
            ex.load_noise(str(path), g)


class TestRun:
    def test_noiseless_exact_h3(self):
        rows = ex.run(plan())
        cfg = [r for r in rows if r.kind == "config"]
        assert len(cfg) == len(topology.enumerate_configs(topology.load_graph(), 4))
        assert all(r.beta_raw == pytest.approx(1.0, abs=1e-12) for r in cfg)
        assert all(r.violation for r in cfg)
        assert [r.kind for r in rows[-2:]] == ["aggregate", "best"]

    def test_or3_single_config(self):
        rows = ex.run(plan(game="OR3", configs=((0, 1, 2, 4),)))
        assert len(rows) == 1
        assert rows[0].beta_raw == pytest.approx(0.8, abs=1e-12)
        assert rows[0].configuration == "0-1-2-4" and rows[0].root == 1
        assert (rows[0].beta_c, rows[0].beta_q) == pytest.approx((0.4, 0.8))

    def test_h6_config_count(self):
        rows = ex.run(plan(game="H6", mitigation="none"))
        n = len(topology.enumerate_configs(topology.load_graph(), 7))
        assert sum(r.kind == "config" for r in rows) == n

    def test_aggregate_mean(self):
        rows = ex.run(plan(game="NAND2", shots=200, noise="graph"))
        cfg = [r for r in rows if r.kind == "config"]
        agg = next(r for r in rows if r.kind == "aggregate")
        assert agg.beta_raw == pytest.approx(np.mean([r.beta_raw for r in cfg]), abs=1e-12)
        best = next(r for r in rows if r.kind == "best")
        assert best.beta_raw == max(r.beta_raw for r in cfg)

    def test_best_mode(self):
        rows = ex.run(plan(game="NAND2", shots=100, configs="best", noise="graph"))
        assert [r.kind for r in rows] == ["best"]

    def test_exact_mitigation_recovers(self):
        rows = ex.run(plan(game="H3", configs=((0, 1, 2, 4),), noise="graph", mitigation="qrem"))
        assert rows[0].beta_raw < 1.0
        assert rows[0].beta_mitigated == pytest.approx(1.0, abs=1e-9)

    def test_runs_spread_and_ci(self):
        rows = ex.run(plan(game="OR3", configs=((0, 1, 2, 4),), shots=500, runs=3, resamples=200,
                         noise="graph"))
        r = rows[0]
        assert r.beta_std > 0
        assert r.ci_low < r.beta_raw < r.ci_high

    def test_bad_config_becomes_error_row(self):
        rows = ex.run(plan(configs=((0, 1, 2),)))
        assert rows[0].kind == "error" and "needs 4" in rows[0].error
        assert not rows[0].violation

    def test_noisy_seven_qubit_config(self):
        rows = ex.run(plan(game="H6", configs=((0, 1, 2, 3, 4, 5, 7),), noise="bundled", shots=10))
        assert rows[0].kind == "config"

    def test_loaded_calibration(self, tmp_path):
        g = topology.load_graph()
        config = topology.configuration(g, (0, 1, 2, 4))
        noise = ex.noise_for(config, g.readout_error, 0.0)
        path = tmp_path / "cal.json"
        mt.save_calibration(ex.exact_mitigator("mem", noise, 4), path, config.qubits)
        rows = ex.run(plan(configs=((0, 1, 2, 4),), noise="graph", calibration=str(path)))
        assert rows[0].mitigation == "mem"
        assert rows[0].beta_mitigated == pytest.approx(1.0, abs=1e-9)

    def test_reproducible_and_parallel(self):
        p = plan(game="NAND2", shots=300, noise="graph", resamples=100, seed=4)
        a = ex.report(ex.run(p), fmt="csv")
        b = ex.report(ex.run(p), fmt="csv")
        c = ex.report(ex.run(ex.ExperimentPlan(**{**p.__dict__, "workers": 2})), fmt="csv")
        assert a == b == c

    def test_seed_changes_result(self):
        a = ex.run(plan(game="OR3", configs=((0, 1, 2, 4),), shots=300, seed=1, noise="graph"))
        b = ex.run(plan(game="OR3", configs=((0, 1, 2, 4),), shots=300, seed=2, noise="graph"))
        assert a[0].beta_raw != b[0].beta_raw


class TestReport:
    def rows(self):
        return ex.run(plan(game="NAND2", shots=200, noise="graph", resamples=100))

    def test_empty(self):
        with pytest.raises(InputShapeError):
            ex.report([])

    def test_csv_json_round_trip(self, tmp_path):
        rows = self.rows()
        for fmt in ("csv", "json"):
            path = tmp_path / f"r.{fmt}"
            ex.report(rows, path, fmt)
            assert ex.read_report(path) == rows
        assert ex.rows_from_csv(ex.rows_to_csv(rows)) == ex.rows_from_json(ex.rows_to_json(rows))

    def test_summary(self):
        s = ex.summarize(self.rows())["NAND2"]
        assert s["configs"] == 48 and s["errors"] == 0
        assert s["mean_violates"]

    def test_violation_uses_ci(self):
        r = self.rows()[0]
        low = ex.ReportRow(**{**r.__dict__, "ci_low": r.beta_c - 0.01})
        assert not low.violation
        no_ci = ex.ReportRow(**{**r.__dict__, "ci_low": None, "ci_high": None})
        assert no_ci.violation == (r.beta_raw > r.beta_c)

    def test_unknown_format(self):
        with pytest.raises(InputShapeError):
            ex.report(self.rows(), fmt="xml")


class TestCertify:
    def test_or3(self):
        cert = ex.certify("OR3")
        assert (cert["beta_c"], cert["beta_q"]) == pytest.approx((0.4, 0.8))
        assert not cert["deterministic"]
        assert "2/5" in ex.format_certificate(cert)

    def test_h4_routes_agree(self):
        cert = ex.certify("H4")
        assert cert["beta_c"] == cert["beta_c_bruteforce"] == cert["beta_c_formula"] == pytest.approx(0.25)
        assert cert["beta_c_nonlinearity"] == pytest.approx(0.25)
        assert cert["deterministic"]

    def test_custom_game_file(self, tmp_path):
        path = tmp_path / "g.json"
        path.write_text(json.dumps(gm.game_to_dict(gm.standard_game("NAND2"))))
        assert ex.certify(str(path))["beta_c"] == pytest.approx(0.5)
