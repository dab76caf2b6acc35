"""
Test script for the command-line runner and the experiment file format.

Run from project root:
    python test_cli.py
"""

import json
import os
import tempfile
from contextlib import redirect_stderr, redirect_stdout
from io import StringIO
from unittest.mock import patch

import pandas as pd
import pytest

from cli.runner import main
from cli.spec_file import parse_experiment
from core.errors import SpecError

HERE = os.path.dirname(os.path.abspath(__file__))
EXPERIMENTS = os.path.join(HERE, "experiments")


def experiment(name):
    return os.path.join(EXPERIMENTS, name)


def run(*argv):
    """Run the CLI in-process; returns (exit code, stderr text)."""
    err = StringIO()
    with redirect_stderr(err):
        code = main(list(argv))
    return code, err.getvalue()


def read_json(path):
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


class TestExperimentFiles:
    """Parsing and validation of experiment files."""

    BASE = "structure U builtin linear-order 4\nformula phi x ; y = x < y\n"

    def test_parse(self):
        print("\n[TEST] Testing a small experiment file...")
        spec = parse_experiment(self.BASE + "atom realized 0\natom dlo-cut 3 +\n"
                                "measure mu uniform\nmeasure lam weights 0:1/2 1:1/2\nparam k_max 3\n")
        assert list(spec.measures) == ["mu", "lam"]
        assert len(spec.measure("mu").space) == 4
        assert spec.param_int("k_max") == 3
        assert spec.fragment is None
        print("✓ Experiment parse test passed")

    def test_errors_have_lines(self):
        print("\n[TEST] Testing experiment file errors...")
        cases = {
            "formula psi x ; y = x < & y\n": 3,
            "measure mu dirac 5\n": 3,
            "param k_max 0\n": 3,
            "frobnicate\n": 3,
        }
        for extra, lineno in cases.items():
            with pytest.raises(SpecError) as info:
                parse_experiment(self.BASE + extra, "exp.txt")
            assert info.value.lineno == lineno, f"{extra!r}: {info.value}"
        with pytest.raises(SpecError):
            parse_experiment("formula phi x ; y = x < y\n")
        with pytest.raises(SpecError):
            parse_experiment(self.BASE + "structure M builtin empty-graph 2\n")
        print("✓ Experiment errors test passed")

    def test_formula_error_location(self):
        print("\n[TEST] Testing the location of a formula error...")
        with pytest.raises(SpecError) as info:
            parse_experiment(self.BASE + "formula psi x ; y = x < & y\n", "exp.txt")
        assert "exp.txt:3" in str(info.value) and "column" in str(info.value)
        print("✓ Formula error location test passed")


class TestRunner:
    """Subcommands, output files and exit codes."""

    def test_scenario_dlo_coheirs(self):
        print("\n[TEST] Testing scenario dlo-coheirs...")
        with tempfile.TemporaryDirectory() as out:
            code, _ = run("scenario", "dlo-coheirs", "--out", out, "--quiet")
            assert code == 0
            result = read_json(os.path.join(out, "scenario.json"))
        assert result["p_q"] == "1/1" and result["q_p"] == "0/1"
        assert result["verdict"] == "non-commuting"
        assert not result["definable_over_fragment"]["holds"]
        assert result["finitely_satisfiable"]["holds"]
        print("✓ dlo-coheirs scenario test passed")

    def test_scenario_l4_uniform(self):
        print("\n[TEST] Testing scenario l4-uniform...")
        with tempfile.TemporaryDirectory() as out:
            code, _ = run("scenario", "l4-uniform", "--out", out, "--quiet")
            assert code == 0
            result = read_json(os.path.join(out, "scenario.json"))
        row = result["dependence"]["rows"][0]
        assert (row["ratio_num"], row["ratio_den"]) == (3, 4)
        assert result["dependence"]["rank"] == 1
        assert result["commute"]["verdict"] == "commute"
        assert result["epsilon_chain"]["holds"]
        assert result["fim"]["found"]
        print("✓ l4-uniform scenario test passed")

    def test_scenario_bernoulli(self):
        print("\n[TEST] Testing scenario bernoulli-cube...")
        with tempfile.TemporaryDirectory() as out:
            code, _ = run("scenario", "bernoulli-cube", "--out", out, "--k-max", "2", "--quiet")
            assert code == 0
            result = read_json(os.path.join(out, "scenario.json"))
        assert (result["rows"][1]["ratio_num"], result["rows"][1]["ratio_den"]) == (5103, 8192)
        assert result["rho_2_matches"]
        assert result["vc"]["vc_dim"] == 3
        print("✓ bernoulli-cube scenario test passed")

    def test_dep_csv(self):
        print("\n[TEST] Testing dep on the L4 experiment...")
        with tempfile.TemporaryDirectory() as out:
            code, _ = run("dep", "--spec", experiment("l4_uniform.txt"), "--out", out, "--k-max", "3", "--quiet")
            assert code == 0
            table = pd.read_csv(os.path.join(out, "dep.csv"))
        assert list(table.columns) == ["k", "dk_mass_num", "dk_mass_den", "ratio_num", "ratio_den", "witness_count"]
        assert list(table["k"]) == [1, 2, 3]
        assert (table["ratio_num"][0], table["ratio_den"][0]) == (3, 4)
        assert table["ratio_num"].dtype.kind == "i"
        assert (table["dk_mass_num"][0], table["dk_mass_den"][0]) == (3, 4)
        print("✓ dep CSV test passed")

    def test_morley_and_iterated(self):
        print("\n[TEST] Testing morley outputs...")
        with tempfile.TemporaryDirectory() as out:
            assert run("morley", "--spec", experiment("l4_uniform.txt"), "--out", out, "--quiet")[0] == 0
            result = read_json(os.path.join(out, "morley.json"))
            assert result["product"]["value"] == "1/2" and result["reverse"]["value"] == "1/2"
            assert result["epsilon_chain"]["holds"]

            assert run("morley", "--spec", experiment("chain3.txt"), "--out", out, "--quiet")[0] == 0
            result = read_json(os.path.join(out, "morley.json"))
            assert result["iterated"]["given"]["value"] == "1/16"
            assert result["iterated"]["symmetric"] and result["iterated"]["associative"]
        print("✓ morley output test passed")

    def test_commute_and_vc(self):
        print("\n[TEST] Testing commute and vc...")
        with tempfile.TemporaryDirectory() as out:
            assert run("commute", "--spec", experiment("dlo_coheirs.txt"), "--out", out, "--quiet")[0] == 0
            assert read_json(os.path.join(out, "commute.json"))["verdict"] == "do not commute"

            assert run("vc", "--spec", experiment("path_edges.txt"), "--out", out, "--quiet")[0] == 0
            result = read_json(os.path.join(out, "vc.json"))
            assert result["rows"]["vc_dim"] == 1
            assert result["ip_witness_above_vc"] is None
        print("✓ commute and vc test passed")

    def test_gc_is_byte_identical_across_threads(self):
        print("\n[TEST] Testing gc determinism across thread caps...")
        outputs = []
        for threads in ("1", "4"):
            with tempfile.TemporaryDirectory() as out, patch.dict(os.environ, {"KEISLER_LAB_THREADS": threads}):
                code, _ = run("gc", "--spec", experiment("l4_uniform.txt"), "--out", out,
                              "--trials", "20", "--seed", "7", "--quiet")
                assert code == 0
                with open(os.path.join(out, "gc.csv"), "rb") as handle:
                    outputs.append(handle.read())
        assert outputs[0] == outputs[1]
        assert outputs[0].startswith(b"n,trial,sup_dev_num,sup_dev_den")
        print("✓ gc determinism test passed")

    def test_fim_budget_exit(self):
        print("\n[TEST] Testing fim with an exhausted budget...")
        with tempfile.TemporaryDirectory() as out:
            params = os.path.join(out, "params.json")
            with open(params, "w", encoding="utf-8") as handle:
                json.dump({"n_max": 1, "epsilon": ["1/8"]}, handle)
            code, err = run("fim", "--spec", experiment("l4_uniform.txt"), "--out", out,
                            "--params", params, "--quiet")
            assert code == 3, err
            assert os.path.exists(os.path.join(out, "fim.json")), "partial results are written"

            code, _ = run("fim", "--spec", experiment("l4_uniform.txt"), "--out", out, "--quiet")
            assert code == 0
            result = read_json(os.path.join(out, "fim.json"))
            assert all(v["verdict"] == "VALID" for v in result["verdicts"])
            assert result["hypotheses"]["hypotheses_hold"] is not None
        print("✓ fim budget test passed")

    def test_invalid_inputs(self):
        print("\n[TEST] Testing exit codes for invalid inputs...")
        with tempfile.TemporaryDirectory() as out:
            bad = os.path.join(out, "bad.txt")
            with open(bad, "w", encoding="utf-8") as handle:
                handle.write("structure U builtin linear-order 3\nformula phi x ; y = x < (y\n")
            code, err = run("dep", "--spec", bad, "--out", out, "--quiet")
            assert code == 2
            assert "bad.txt:2" in err
            assert run("dep", "--spec", os.path.join(out, "missing.txt"), "--quiet")[0] == 2
            assert run("dep", "--out", out, "--quiet")[0] == 2
            assert run("scenario", "nope", "--out", out, "--quiet")[0] == 2
        print("✓ Invalid input test passed")

    def test_quiet(self):
        print("\n[TEST] Testing --quiet...")
        captured = StringIO()
        with tempfile.TemporaryDirectory() as out, redirect_stdout(captured):
            assert run("scenario", "dlo-coheirs", "--out", out, "--quiet")[0] == 0
        assert captured.getvalue() == ""
        print("✓ Quiet test passed")


def run_all_tests():
    """Run all test cases."""
    print("\n" + "="*60)
    print("TEST SUITE FOR cli")
    print("="*60)

    files = TestExperimentFiles()
    files.test_parse()
    files.test_errors_have_lines()
    files.test_formula_error_location()

    runner = TestRunner()
    runner.test_scenario_dlo_coheirs()
    runner.test_scenario_l4_uniform()
    runner.test_scenario_bernoulli()
    runner.test_dep_csv()
    runner.test_morley_and_iterated()
    runner.test_commute_and_vc()
    runner.test_gc_is_byte_identical_across_threads()
    runner.test_fim_budget_exit()
    runner.test_invalid_inputs()
    runner.test_quiet()

    print("\n" + "="*60)
    print("✓ ALL TESTS PASSED!")
    print("="*60 + "\n")


if __name__ == "__main__":
    run_all_tests()
