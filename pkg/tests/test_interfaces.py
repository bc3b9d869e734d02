import json
import subprocess
import sys

import numpy as np
import pytest

from dyadica import OperatorSpec, StepFunction, Weight, assemble_matrix, build_grid, condition_report
from dyadica.cli import main
from dyadica.experiments import (
    ConfigError,
    ExperimentConfig,
    describe,
    instance_seeds,
    parse_config,
    read_report,
    run_suite,
)
from dyadica.io import (
    dumps_matrix,
    dumps_report,
    dumps_step_function,
    dumps_weight,
    load_weight,
    loads_matrix,
    loads_step_function,
    loads_weight,
)

from conftest import random_triple


class TestFormats:
    def test_step_function_round_trip(self, rng):
        f = StepFunction(build_grid(5), rng.normal(size=32))
        text = dumps_step_function(f)
        assert text.startswith("depth=5\n")
        np.testing.assert_array_equal(loads_step_function(text).values, f.values)

    def test_weight_round_trip(self, rng):
        w = Weight(build_grid(3), rng.random(8) + 0.1, floor=1e-9)
        back = loads_weight(dumps_weight(w))
        assert back.floor == 1e-9
        np.testing.assert_array_equal(back.values, w.values)

    def test_bad_files(self):
        with pytest.raises(ValueError):
            loads_step_function("1.0\n2.0\n")
        with pytest.raises(ValueError):
            loads_step_function("depth=2\n1\n2\n")
        with pytest.raises(ValueError):
            loads_step_function("depth=1\n1\nabc\n")

    def test_matrix_dump(self):
        g = build_grid(2)
        M = assemble_matrix(OperatorSpec("t-haar", w=Weight.constant(g), t=1.0), g)
        kernel, src, tgt = loads_matrix(dumps_matrix(M, "u0", "v0"))
        assert dumps_matrix(M, "u0", "v0").splitlines()[0] == "4 4 u0 v0"
        assert (src, tgt) == ("u0", "v0")
        np.testing.assert_array_equal(kernel, M.kernel)

    def test_report_json(self):
        u, v, w = random_triple(4, 1)
        d = json.loads(dumps_report(condition_report(u, v, w, 1.0)))
        assert d["c4_method"] == "exact-spectral" and isinstance(d["c2_witness"], list)


class TestConfig:
    def test_parse(self, tmp_path):
        cfgs = parse_config("[two-weight]\ndepth = 4, 5\nt = -1, 2\nseed = 3\noutput = a.csv\n"
                            "tol.max_ratio = 5\n\n[khintchine]\ndepth = 3\n", tmp_path)
        assert [c.suite for c in cfgs] == ["two-weight", "khintchine"]
        assert cfgs[0].depths == (4, 5) and cfgs[0].ts == (-1.0, 2.0)
        assert cfgs[0].tolerance["max_ratio"] == 5.0
        assert cfgs[0].output == str(tmp_path / "a.csv")

    @pytest.mark.parametrize("text", [
        "[two-weight]\ncolour = red\n",
        "[nonsense]\ndepth = 3\n",
        "[two-weight]\ndepth = 0\n",
        "[two-weight]\ninstances = 0\n",
        "[two-weight]\ntol.bogus = 1\n",
        "[two-weight]\ndepth = x\n",
        "",
    ])
    def test_rejects(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)

    def test_instance_seeds_stable(self):
        assert instance_seeds(5, 3) == instance_seeds(5, 3)
        assert instance_seeds(5, 3) != instance_seeds(5, 4)


class TestSuites:
    def test_unweighted_trivial(self):
        res = run_suite(ExperimentConfig("unweighted", depths=(5,), instances=3, volatility=(0.0,),
                                         ts=(1.0, -1.0)))
        for r in res.rows:
            assert r["norm"] == pytest.approx(1.0) and r["c2t"] == pytest.approx(1.0)
        assert res.ok

    def test_two_weight_deterministic(self, tmp_path, monkeypatch):
        cfg = ExperimentConfig("two-weight", depths=(3,), instances=10, seed=11, ts=(-1.0, 0.5, 2.0),
                               restarts=4, output=str(tmp_path / "a.csv"))
        run_suite(cfg)
        first = (tmp_path / "a.csv").read_bytes()
        monkeypatch.setenv("DYADICA_THREADS", "1")
        run_suite(cfg)
        assert (tmp_path / "a.csv").read_bytes() == first
        assert (tmp_path / "a.json").exists()

    def test_combined_recomputable(self):
        res = run_suite(ExperimentConfig("two-weight", depths=(4,), instances=4, restarts=2, ts=(1.0,)))
        for r in res.rows:
            assert r["combined"] == pytest.approx(
                r["c1"] ** 0.5 + r["c2"] ** 0.5 + r["c3"] ** 0.5 + r["c4"], rel=1e-14)
            assert r["ratio_upper"] == r["sup_sigma"] / r["combined"]

    def test_khintchine_columns(self):
        res = run_suite(ExperimentConfig("khintchine", depths=(3,), instances=5, ts=(-0.5, 1.0)))
        assert res.ok and all(abs(r["closed_form"] - r["enumeration"]) < 1e-10 for r in res.rows)

    def test_khintchine_depth_limit(self):
        with pytest.raises(ConfigError):
            run_suite(ExperimentConfig("khintchine", depths=(6,), instances=1))

    def test_one_weight_rejects_middle_t(self):
        with pytest.raises(ConfigError):
            run_suite(ExperimentConfig("one-weight", depths=(3,), instances=1, ts=(0.5,)))

    def test_sawyer_and_packing(self):
        assert run_suite(ExperimentConfig("sawyer", depths=(4,), instances=2, ts=(1.0,))).ok
        res = run_suite(ExperimentConfig("packing", depths=(6, 7), alphas=(-0.6,)))
        assert res.rows[1]["rhp_packing"] > res.rows[0]["rhp_packing"]

    def test_failure_reported(self):
        cfg = ExperimentConfig("two-weight", depths=(4,), instances=2, restarts=1,
                               tolerance={"identity": 1e-10, "testing": 1e-8, "max_ratio": 1e-3})
        assert not run_suite(cfg).ok


class TestDescribe:
    def test_one_weight_block(self, tmp_path):
        out = tmp_path / "r.csv"
        run_suite(ExperimentConfig("one-weight", depths=(3,), instances=2, ts=(2.0,), restarts=2,
                                   output=str(out)))
        text = describe(out, 1)
        for tag in ("(i)", "(ii)", "(iii)", "(iv)", "one-weight specialization", "[A2]"):
            assert tag in text
        assert len(read_report(out)) == 2

    def test_missing(self, tmp_path):
        out = tmp_path / "r.csv"
        run_suite(ExperimentConfig("khintchine", depths=(2,), instances=1, output=str(out)))
        with pytest.raises(KeyError):
            describe(out, 7)


class TestCli:
    def test_run_describe_weight(self, tmp_path, capsys):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[two-weight]\ndepth = 3\ninstances = 2\nrestarts = 2\noutput = tw.csv\n")
        assert main(["run", "--config", str(cfg)]) == 0
        assert main(["describe", "--report", str(tmp_path / "tw.csv"), "--id", "0"]) == 0
        assert "(iv)" in capsys.readouterr().out
        assert main(["describe", "--report", str(tmp_path / "tw.csv"), "--id", "5"]) == 1
        assert main(["weight", "--power", "-0.5", "--depth", "3", "--out", str(tmp_path / "w.txt")]) == 0
        w = load_weight(tmp_path / "w.txt")
        assert w.grid.depth == 3 and w.integral() == pytest.approx(2.0)

    def test_failed_assertion_exit(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[two-weight]\ndepth = 3\ninstances = 1\nrestarts = 1\ntol.max_ratio = 0.001\n")
        assert main(["run", "--config", str(cfg)]) == 2

    def test_usage_errors(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "missing.ini")]) == 1
        assert main(["weight", "--power", "-1", "--depth", "3", "--out", str(tmp_path / "w")]) == 1
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 1

    def test_console_script(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "dyadica.cli", "weight", "--power", "1",
                               "--depth", "1", "--out", str(tmp_path / "w.txt")])
        assert proc.returncode == 0
        assert (tmp_path / "w.txt").read_text().splitlines()[:2] == ["depth=1", "floor=1e-12"]
