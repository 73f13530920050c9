import csv
import io
import json
import math

import numpy as np
import pytest
from click.testing import CliRunner

from kaondecoh.cli import cli
from kaondecoh.constants import load_constants
from kaondecoh.evolution import KaonParams, evolve_2p_analytic
from kaondecoh.fit import read_dataset


@pytest.fixture
def run():
    runner = CliRunner()

    def invoke(*args, code=0):
        res = runner.invoke(cli, [str(a) for a in args])
        assert res.exit_code == code, res.output
        return res

    return invoke


def rows(text):
    return [{k: float(v) for k, v in r.items()} for r in csv.DictReader(io.StringIO(text))]


class TestEvolve:
    def test_grid_length(self, run):
        out = rows(run("evolve", "--lambda", 0.25, "--t-max", 5, "--step", 0.05).stdout)
        assert len(out) == 101
        assert out[-1]["t"] == pytest.approx(5.0)

    def test_oracle(self, run):
        out = rows(run("evolve", "--lambda", 0.25, "--t-max", 5, "--step", 0.5, "--oracle").stdout)
        assert max(r["oracle_max_dev"] for r in out) <= 1e-8

    def test_oracle_one_particle(self, run):
        out = rows(run("evolve", "--particles", 1, "--lambda", 0.59, "--t-max", 2, "--step", 0.5, "--oracle").stdout)
        assert max(r["oracle_max_dev"] for r in out) <= 1e-8

    def test_pure_qm_offdiag(self, run):
        p = KaonParams()
        for r in rows(run("evolve", "--lambda", 0, "--t-max", 5, "--step", 0.25).stdout):
            assert r["offdiag_abs"] == pytest.approx(0.5 * math.exp(-2 * p.gamma * r["t"]), rel=1e-12)

    def test_entries_match_library(self, run):
        (r,) = rows(run("evolve", "--lambda", 0.25, "--t-min", 1.5, "--t-max", 1.5).stdout)
        m = evolve_2p_analytic(1.5, KaonParams(lam=0.25)).mat
        assert r["re_12"] == m[1, 2].real and r["re_11"] == m[1, 1].real

    def test_bad_grid(self, run):
        run("evolve", "--step", 0, code=2)
        run("evolve", "--t-min", 2, "--t-max", 1, code=2)
        run("evolve", "--t-min", -1, code=2)
        run("evolve", "--lambda", -1, code=2)

    def test_json(self, run):
        data = json.loads(run("evolve", "--t-max", 0.1, "--step", 0.05, "--format", "json").stdout)
        assert len(data) == 3 and data[0]["t"] == 0.0


class TestAsymmetry:
    def test_dt_zero(self, run):
        out = rows(run("asymmetry", "--mode", "dt", "--t-max", 3, "--step", 0.1).stdout)
        assert out[0]["dt"] == 0.0 and out[0]["A_QM"] == 1.0

    def test_equal_time_closed_form(self, run):
        for r in rows(run("asymmetry", "--mode", "equal", "--lambda", 0.25, "--t-max", 3, "--step", 0.1).stdout):
            assert r["A_lambda"] == pytest.approx(math.exp(-0.25 * r["t_l"]), rel=1e-14)
            assert r["A_zeta_min"] == pytest.approx(r["A_lambda"], rel=1e-14)

    def test_constant_zeta(self, run):
        for r in rows(run("asymmetry", "--zeta", 0.13, "--t-max", 10, "--step", 0.5).stdout):
            assert r["A_zeta_const"] == pytest.approx(0.87 * r["A_QM"], abs=1e-15)

    def test_config(self, run):
        out = rows(run("asymmetry", "--config", "2cm-7cm", "--t-max", 1, "--step", 0.5).stdout)
        assert out[0]["t_r"] == pytest.approx(0.55)

    def test_bad_zeta(self, run):
        run("asymmetry", "--zeta", 1.5, code=2)

    def test_negative_times(self, run):
        run("asymmetry", "--mode", "dt", "--t-r", 0.5, "--t-min", -1, code=2)


class TestEntangle:
    def test_report(self, run):
        (r,) = rows(run("entangle", "--lambda", 0.25, "--t", 0.55).stdout)
        assert r["loss_E"] == pytest.approx(0.18, abs=0.01)
        assert r["zeta"] == pytest.approx(0.1285, abs=5e-4)
        assert r["bell_minus"] == pytest.approx(0.5 * (1 + math.exp(-0.1375)))

    def test_negative_time(self, run):
        run("entangle", "--t", -1, code=2)


class TestSweep:
    def test_reference_values(self, run):
        out = rows(run("sweep", "--t-max", 5, "--step", 0.05).stdout)
        at = {r["lambda"]: r for r in out if abs(r["t"] - 0.55) < 1e-9}
        assert len(at) == 2
        lo, hi = sorted(at)
        assert at[lo]["loss_E"] == pytest.approx(0.18, abs=0.01)
        assert at[hi]["loss_E"] == pytest.approx(0.38, abs=0.01)

    def test_t0_row(self, run):
        for r in rows(run("sweep", "--lambda", 0.25, "--t-max", 0.1).stdout):
            if r["t"] == 0.0:
                assert r["zeta"] == 0.0
                assert r["loss_E"] == pytest.approx(0, abs=1e-12)
                assert r["loss_C"] == pytest.approx(0, abs=1e-12)
                assert r["entropy"] == pytest.approx(0, abs=1e-12)

    def test_entropy_large_t(self, run):
        out = rows(run("sweep", "--lambda", 0.25, "--t-min", 60, "--t-max", 60).stdout)
        assert out[0]["entropy"] == pytest.approx(1.0, abs=1e-6)

    def test_units_mev(self, run):
        c = load_constants()
        out = rows(run("sweep", "--units", "mev", "--lambda", 1.84e-12, "--t-min", 0.55, "--t-max", 0.55).stdout)
        assert out[0]["lambda"] == pytest.approx(1.84e-12, rel=1e-12)
        assert out[0]["zeta"] == pytest.approx(-math.expm1(-1.84e-12 / c.gamma_S_mev * 0.55), rel=1e-12)

    def test_deterministic(self, run):
        a = run("sweep", "--t-max", 2).stdout
        b = run("sweep", "--t-max", 2).stdout
        assert a == b


class TestSynthFit:
    def test_round_trip(self, run, tmp_path):
        data = tmp_path / "d.csv"
        run("synth", "--lambda", 0.25, "--sigma", 0, "-o", data)
        res = json.loads(run("fit", data, "--model", "min").stdout)
        assert res["lambda_hat"] == pytest.approx(0.25, abs=1e-6)
        assert res["lambda_mev"] == pytest.approx(0.25 * 7.351e-12, rel=1e-5)
        for key in ("lambda_err_lo", "lambda_err_hi", "chi2_min", "ndf", "zeta_hat"):
            assert key in res

    def test_model_discrimination(self, run, tmp_path):
        data = tmp_path / "d.csv"
        run("synth", "--lambda", 0.25, "--sigma", 0, "--layout", "dt", "--t-min", 0, "--t-max", 6, "-o", data)
        r_min = json.loads(run("fit", data, "--model", "min").stdout)
        r_sum = json.loads(run("fit", data, "--model", "sum").stdout)
        assert r_sum["chi2_min"] > r_min["chi2_min"]

    def test_average_two_configs(self, run, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run("synth", "--config", "2cm-2cm", "--seed", 1, "-o", a)
        run("synth", "--config", "2cm-7cm", "--seed", 2, "-o", b)
        res = json.loads(run("fit", a, b).stdout)
        assert res["label"] == "average" and len(res["per_config"]) == 2
        assert read_dataset(a).config.value == "2cm-2cm"
        assert [r["label"] for r in res["per_config"]] == ["synthetic", "synthetic"]

    def test_boundary_warning(self, run, tmp_path):
        data = tmp_path / "d.csv"
        run("synth", "--lambda", 0, "--sigma", 0, "-o", data)
        res = run("fit", data)
        assert "boundary" in res.stderr
        assert json.loads(res.stdout)["boundary"] is True

    def test_missing_file(self, run, tmp_path):
        res = run("fit", tmp_path / "nope.csv", code=2)
        assert "not found" in res.output

    def test_parse_error(self, run, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("t_l,t_r,asym,sigma\n0.5,0.5,1,0.1\n0.5,oops,1,0.1\n")
        res = run("fit", bad, code=2)
        assert "bad.csv:3" in res.output

    def test_synth_deterministic(self, run):
        assert run("synth", "--seed", 5).stdout == run("synth", "--seed", 5).stdout
        assert run("synth", "--seed", 5).stdout != run("synth", "--seed", 6).stdout

    def test_synth_bad_input(self, run):
        run("synth", "--sigma", -1, code=2)
        run("synth", "--n", 0, code=2)

    def test_fit_units_mev(self, run, tmp_path):
        data = tmp_path / "d.csv"
        run("synth", "--units", "mev", "--lambda", 1.84e-12, "--sigma", 0, "-o", data)
        res = json.loads(run("fit", data, "--units", "mev").stdout)
        assert res["lambda_mev"] == pytest.approx(1.84e-12, rel=1e-5)


class TestCsvRoundTrip:
    def test_recompute(self, run):
        out = rows(run("asymmetry", "--mode", "equal", "--lambda", 0.59, "--t-max", 4, "--step", 0.1).stdout)
        p = KaonParams(lam=0.59)
        for r in out:
            assert abs(r["A_lambda"] - math.exp(-p.lam * r["t_l"])) <= 1e-12

    def test_evolve_recompute(self, run):
        p = KaonParams(lam=2.0)
        for r in rows(run("evolve", "--lambda", 2, "--t-max", 5, "--step", 0.5).stdout):
            m = evolve_2p_analytic(r["t"], p).mat
            got = np.array([r["re_11"], r["re_12"], r["re_22"]])
            np.testing.assert_allclose(got, [m[1, 1].real, m[1, 2].real, m[2, 2].real], atol=1e-12, rtol=0)

    def test_missing_output_dir(self, run, tmp_path):
        run("sweep", "-o", tmp_path / "no" / "x.csv", code=2)

    def test_constants_file(self, run, tmp_path):
        run("sweep", "--constants", tmp_path / "nope.txt", code=2)
        f = tmp_path / "c.txt"
        f.write_text("delta_m = 0.5\n")
        run("asymmetry", "--constants", f, "--t-max", 0.1)
        f.write_text("bogus = 1\n")
        run("asymmetry", "--constants", f, code=2)
