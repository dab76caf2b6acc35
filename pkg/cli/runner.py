"""
Batch runner: one experiment file, one subcommand, one output file under --out.
"""
import argparse
import contextlib
import os
import sys
from fractions import Fraction
from io import StringIO

from config import CLI_DEFAULTS, DEPENDENCE_DEFAULTS, EMPIRICS_DEFAULTS
from cli.scenarios import SCENARIOS
from cli.spec_file import ExperimentSpec, load_experiment, load_params
from core import io
from core.dependence import dk_report, ip_witness, vc_dimension
from core.empirics import gc_curve
from core.errors import BudgetExceeded, KeislerLabError, SpecError
from core.fim import (
    FimCertificate, approx_event, certificate_from_event, check_fim_certificate, dfs_nip_fim_scenario,
    fim_implies_dependent_experiment, verdicts_to_dict,
)
from core.morley import commutes, epsilon_chain_verify, fiber_function, iterated_product, morley_product, \
    reverse_product
from core.statistics import hoeffding_union_bound
from core.typespace import trace_matrix

COMMANDS = ("vc", "dep", "morley", "gc", "fim", "commute", "scenario")


class KeislerLab:
    """Binds an experiment to the library; each subcommand returns the written path."""

    def __init__(self, spec=None, out=None):
        self.spec = spec
        self.out = out or CLI_DEFAULTS["out"]

    # ------------------------------------------------------------ helpers

    def _require_spec(self, command):
        if self.spec is None:
            raise SpecError(f"'{command}' needs an experiment file (--spec)")
        return self.spec

    def _measure(self, key, fallback=0):
        spec = self.spec
        name = spec.param(key, [None])[0]
        if name is None:
            names = list(spec.measures)
            if not names:
                raise SpecError("the experiment declares no measure", spec.path)
            name = names[min(fallback, len(names) - 1)]
        return name, spec.measure(name)

    def _path(self, name):
        os.makedirs(self.out, exist_ok=True)
        return os.path.join(self.out, name)

    def _write_json(self, command, payload):
        path = self._path(f"{command}.json")
        io.save_json(path, payload)
        print(f"✓ Results saved to {path}")
        return path

    def _write_csv(self, command, rows):
        path = self._path(f"{command}.csv")
        io.save_csv(path, rows)
        print(f"✓ Results saved to {path}")
        return path

    # ------------------------------------------------------------ subcommands

    def vc(self):
        spec = self._require_spec("vc")
        U, phi = spec.universe, spec.formula
        trace = trace_matrix(U, phi, U.tuples(phi.x_arity), U.tuples(phi.y_arity))
        limit = spec.param_int("vc_limit", DEPENDENCE_DEFAULTS["vc_exhaustive_limit"])
        rows = vc_dimension(trace, over="rows", limit=limit)
        columns = vc_dimension(trace, over="columns", limit=limit)
        print(f"[VC] {phi}: rows {rows.vc_dim}, columns {columns.vc_dim}")
        payload = {
            "structure": str(U),
            "formula": str(phi),
            "rows": rows.to_dict(),
            "columns": columns.to_dict(),
        }
        if rows.exact:
            beyond = ip_witness(U, phi, rows.vc_dim + 1)
            payload["ip_witness_above_vc"] = None if beyond is None else [list(a) for a in beyond]
        return self._write_json("vc", payload)

    def dep(self):
        spec = self._require_spec("dep")
        name, mu = self._measure("measure")
        k_max = spec.param_int("k_max", DEPENDENCE_DEFAULTS["k_max"])
        witness_samples = spec.param_int("witness_samples")
        rows, rank = [], None
        for k in range(1, k_max + 1):
            report = dk_report(mu, None, None, k, witness_samples)
            rows.append(report.to_row())
            print(f"[DEP] {name} k = {k}: rho = {io.fraction_text(report.ratio)} ({report.witness_count} tuples)")
            if rank is None and report.dependent:
                rank = k
        print(f"[DEP] rank: {rank if rank is not None else f'not witnessed <= {k_max}'}")
        return self._write_csv("dep", rows)

    def morley(self):
        spec = self._require_spec("morley")
        phi = spec.formula
        left_name, left = self._measure("left", 0)
        right_name, right = self._measure("right", 1)
        names = (left_name, right_name)
        forward = morley_product(left, right, phi, names=names)
        backward = reverse_product(left, right, phi, names=names)
        print(f"[MORLEY] {left_name} (x) {right_name} = {forward.value}, "
              f"{right_name} (x) {left_name} = {backward.value}")
        payload = {
            "formula": str(phi),
            "product": forward.to_dict(),
            "reverse": backward.to_dict(),
            "difference": io.fraction_text(abs(forward.value - backward.value)),
            "verdict": "commuting" if forward.value == backward.value else "non-commuting",
            "fiber": fiber_function(left, right.space, phi).to_dict(),
        }
        epsilons = spec.param_fractions("epsilon")
        if epsilons:
            payload["epsilon_chain"] = epsilon_chain_verify(left, right, phi, epsilons[0]).to_dict()
        factors = spec.param("factors")
        if factors:
            formula_name = spec.param("iterated", [next(iter(spec.formulas))])[0]
            bound, labels = [], []
            for token in factors:
                name, _, variables = token.partition(":")
                bound.append((spec.measure(name), tuple(v for v in variables.split(",") if v)))
                labels.append(name)
            report = iterated_product(bound, spec.formulas[formula_name].formula, labels=labels)
            print(f"[MORLEY] iterated: symmetric {report.symmetric}, associative {report.associative}")
            payload["iterated"] = report.to_dict()
        return self._write_json("morley", payload)

    def gc(self):
        spec = self._require_spec("gc")
        name, mu = self._measure("measure")
        phi = mu.space.formula
        n_list = [int(n) for n in spec.param("n", EMPIRICS_DEFAULTS["n_ladder"])]
        trials = spec.param_int("trials", EMPIRICS_DEFAULTS["trials"])
        seed = spec.param_int("seed", EMPIRICS_DEFAULTS["seed"])
        hull = spec.param("hull", ["0"])[0] in ("1", "true", "yes")
        run = gc_curve(mu, phi, n_list=n_list, trials=trials, seed=seed, hull=hull, name=name)
        columns = len(mu.space.params)
        for n in n_list:
            print(f"[GC] n = {n:4d} | union bound sqrt(ln(2|A|)/2n) = {hoeffding_union_bound(n, columns):.4f}")
        return self._write_csv("gc", run.to_rows())

    def fim(self):
        spec = self._require_spec("fim")
        name, mu = self._measure("measure")
        phi = mu.space.formula
        epsilons = spec.param_fractions("epsilon", [Fraction(1, 2), Fraction(1, 4)])
        n_max = spec.param_int("n_max", EMPIRICS_DEFAULTS["n_max"])
        budget = spec.param_int("budget_tuples", EMPIRICS_DEFAULTS["budget_tuples"])
        mc_samples = spec.param_int("mc_samples", EMPIRICS_DEFAULTS["mc_samples"])
        seed = spec.param_int("seed", EMPIRICS_DEFAULTS["seed"])

        searches, entries, missing = [], [], []
        for epsilon in epsilons:
            event = approx_event(mu, phi, epsilon=epsilon, n_max=n_max, budget_tuples=budget,
                                 mc_samples=mc_samples, seed=seed)
            searches.append(event.to_dict())
            if not event.found:
                missing.append(epsilon)
            elif event.exact:
                entries.append(certificate_from_event(event))
            else:
                print(f"⚠ epsilon = {epsilon}: found by sampling only, no certificate written")

        payload = {"measure": name, "formula": str(phi), "searches": searches}
        if entries:
            cert = FimCertificate(entries)
            payload["certificate"] = cert.to_dict(mu.space)
            payload["verdicts"] = verdicts_to_dict(check_fim_certificate(mu, cert, phi))
            payload["dependence"] = fim_implies_dependent_experiment(
                mu, cert, phi, k_max=spec.param_int("k_max"))
        if spec.fragment is not None:
            payload["hypotheses"] = dfs_nip_fim_scenario(mu, spec.fragment, spec.universe, phi, epsilons, n_max)
        path = self._write_json("fim", payload)
        if missing:
            raise BudgetExceeded(f"no approximation event up to n = {n_max} for epsilon in "
                                 f"{[io.fraction_text(e) for e in missing]} (partial results in {path})")
        return path

    def commute(self):
        spec = self._require_spec("commute")
        left_name, left = self._measure("left", 0)
        right_name, right = self._measure("right", 1)
        left_arity = left.space.atoms[0].arity
        right_arity = right.space.atoms[0].arity
        formulas = [phi for phi in spec.formulas.values()
                    if phi.x_arity == left_arity and phi.y_arity == right_arity]
        if not formulas:
            raise SpecError(f"no formula has sides of arity {left_arity} ; {right_arity}", spec.path)
        report = commutes(left, right, formulas)
        print(f"[MORLEY] {left_name} vs {right_name}: {report.to_dict()['verdict']} "
              f"(max difference {report.max_difference})")
        return self._write_json("commute", {"left": left_name, "right": right_name, **report.to_dict()})

    def scenario(self, name):
        if name is None:
            raise SpecError(f"scenario needs a name: one of {sorted(SCENARIOS)} or 'all'")
        if name != "all" and name not in SCENARIOS:
            raise SpecError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)} or 'all'")
        names = list(SCENARIOS) if name == "all" else [name]
        spec = self.spec
        results = {}
        for key in names:
            print(f"\n[RUN] scenario {key}")
            kwargs = {}
            if spec is not None:
                if key == "l4-uniform":
                    kwargs = {"k_max": spec.param_int("k_max", 3), "n_max": spec.param_int("n_max"),
                              "budget_tuples": spec.param_int("budget_tuples")}
                elif key == "bernoulli-cube":
                    kwargs = {"k_max": spec.param_int("k_max")}
                elif key == "random-graph-trivial":
                    kwargs = {"trials": spec.param_int("trials", 20), "seed": spec.param_int("seed", 0)}
            results[key] = SCENARIOS[key](**kwargs)
        return self._write_json("scenario", results if name == "all" else results[name])

    def run(self, command, name=None):
        print(f"[RUN] {command}" + (f" {name}" if name else "") + f" -> {self.out}")
        if command == "scenario":
            return self.scenario(name)
        return getattr(self, command)()


# ---------------------------------------------------------------- command line

def build_parser():
    parser = argparse.ArgumentParser(prog="keisler-lab",
                                     description="Finite experiments on Keisler measures.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("name", nargs="?", help="scenario name for 'scenario' (or 'all')")
    parser.add_argument("--spec", help="experiment file")
    parser.add_argument("--out", default=CLI_DEFAULTS["out"], help="output directory")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--k-max", dest="k_max", type=int)
    parser.add_argument("--trials", type=int)
    parser.add_argument("--budget-tuples", dest="budget_tuples", type=int)
    parser.add_argument("--params", help="JSON file of parameter overrides")
    parser.add_argument("--quiet", action="store_true", help="no console output")
    return parser


def _apply_overrides(spec, args):
    if args.params:
        for key, value in load_params(args.params).items():
            spec.override(key, value)
    for key in ("seed", "k_max", "trials", "budget_tuples"):
        value = getattr(args, key)
        if value is not None:
            if key != "seed" and value < 1:
                raise SpecError(f"--{key.replace('_', '-')} must be positive, got {value}")
            if key == "seed" and value < 0:
                raise SpecError(f"--seed must be non-negative, got {value}")
            spec.override(key, value)


def execute(args):
    spec = load_experiment(args.spec) if args.spec else ExperimentSpec("<command line>", None, {})
    _apply_overrides(spec, args)
    lab = KeislerLab(spec if args.spec or args.command == "scenario" else None, args.out)
    return lab.run(args.command, args.name)


def main(argv=None):
    args = build_parser().parse_args(argv)
    sink = StringIO() if args.quiet else None
    try:
        with contextlib.redirect_stdout(sink) if sink is not None else contextlib.nullcontext():
            execute(args)
    except BudgetExceeded as exc:
        print(f"✗ Budget exceeded: {exc}", file=sys.stderr)
        return CLI_DEFAULTS["exit_budget"]
    except (KeislerLabError, OSError, ValueError) as exc:
        print(f"✗ ERROR: {exc}", file=sys.stderr)
        return CLI_DEFAULTS["exit_invalid"]
    return CLI_DEFAULTS["exit_ok"]
