"""
Named built-in scenarios. Each one builds its inputs from SCENARIO_PRESETS and
returns a JSON-ready dictionary.
"""
from fractions import Fraction
from itertools import product

from config import SCENARIO_PRESETS
from core.dependence import bernoulli_ratio, dependence_rank, dk_report, vc_dimension
from core.empirics import gc_curve
from core.fim import approx_event, certificate_from_event, check_fim_certificate, FimCertificate, verdicts_to_dict
from core.io import fraction_text, structure_text
from core.logic import empty_graph, linear_order, random_graph
from core.measure import KeislerMeasure, dirac, is_purely_atomic_trivial, uniform
from core.morley import commutation_criterion, commutes, epsilon_chain_verify, morley_product, reverse_product
from core.parser import parse_formula
from core.theories import DLOCutAtom, RandomGraphAtom, RealizedAtom, is_simple_graph
from core.typespace import (
    TypeSpace, default_battery, definable_over_fragment, finitely_satisfiable_in, realized_type_space,
)


def _less(U):
    return parse_formula("x < y", (("x",), ("y",)), U.signature)


def _edge(U):
    return parse_formula("E(x,y)", (("x",), ("y",)), U.signature)


def _single(U, phi, atom):
    return TypeSpace(U, phi, list(U.tuples(phi.y_arity)), [atom])


def dlo_coheirs(preset=None):
    """Two copies of the same cut type over a finite order: the two products disagree."""
    preset = {**SCENARIO_PRESETS["dlo-coheirs"], **(preset or {})}
    U = linear_order(preset["order_size"])
    M_sub = tuple(range(preset["fragment_size"]))
    phi = _less(U)
    p = DLOCutAtom(preset["cut"], preset["side"])
    q = DLOCutAtom(preset["cut"], preset["side"])
    delta_p = dirac(_single(U, phi, p), p)
    delta_q = dirac(_single(U, phi, q), q)

    pq = morley_product(delta_p, delta_q, phi, names=("p", "q"))
    qp = reverse_product(delta_p, delta_q, phi, names=("p", "q"))
    definable = definable_over_fragment(delta_p, phi, M_sub, U)
    satisfiable = finitely_satisfiable_in(p, M_sub, default_battery(phi, M_sub), structure=U)
    print(f"[MORLEY] p (x) q = {pq.value}, q (x) p = {qp.value}")
    chain = epsilon_chain_verify(delta_p, delta_q, phi, Fraction(preset["epsilon"]))
    criterion = commutation_criterion(delta_p, delta_q, phi, M_sub)
    return {
        "structure": str(U),
        "fragment": list(M_sub),
        "formula": str(phi),
        "p": p.label,
        "q": q.label,
        "p_q": fraction_text(pq.value),
        "q_p": fraction_text(qp.value),
        "verdict": "commuting" if pq.value == qp.value else "non-commuting",
        "definable_over_fragment": definable.to_dict(),
        "finitely_satisfiable": satisfiable.to_dict(),
        "products": {"p_q": pq.to_dict(), "q_p": qp.to_dict()},
        "epsilon_chain": chain.to_dict(),
        "criterion": criterion.to_dict(),
    }


def l4_uniform(preset=None, k_max=3, n_max=None, budget_tuples=None):
    """Uniform measure on a four-element order against a realized-plus-coheir measure."""
    preset = {**SCENARIO_PRESETS["l4-uniform"], **(preset or {})}
    U = linear_order(preset["order_size"])
    phi = _less(U)
    epsilon = Fraction(preset["epsilon"])
    mu = uniform(realized_type_space(U, phi))

    q_inf = DLOCutAtom(preset["cut"], preset["side"])
    lam_space = TypeSpace(U, phi, list(U.tuples(1)), [RealizedAtom((0,)), q_inf])
    lam = KeislerMeasure(lam_space, [Fraction(1, 2), Fraction(1, 2)])

    rows = [dk_report(mu, None, None, k).to_row() for k in range(1, k_max + 1)]
    rank = dependence_rank(mu, None, None, k_max)
    diracs = {atom.label: dependence_rank(dirac(mu.space, atom), None, None, k_max).to_dict()
              for atom in mu.space.atoms}
    print(f"[DEP] rank = {rank.rank}, trajectory = {[fraction_text(r) for r in rank.trajectory]}")

    report = commutes(mu, lam, [phi])
    chain = epsilon_chain_verify(mu, lam, phi, epsilon)
    criterion = commutation_criterion(mu, lam, phi, range(preset["order_size"]))
    event = approx_event(mu, phi, epsilon=epsilon, n_max=n_max, budget_tuples=budget_tuples)
    fim = {"epsilon": fraction_text(epsilon), "found": event.found, "n": event.n,
           "mass": fraction_text(event.mass) if event.exact else float(event.mass)}
    if event.found and event.exact:
        fim["certificate"] = verdicts_to_dict(
            check_fim_certificate(mu, FimCertificate([certificate_from_event(event)]), phi))
    return {
        "structure": str(U),
        "formula": str(phi),
        "dependence": {"rows": rows, **rank.to_dict(), "diracs": diracs},
        "commute": report.to_dict(),
        "epsilon_chain": chain.to_dict(),
        "criterion": criterion.to_dict(),
        "fim": fim,
    }


def bernoulli_cube(preset=None, k_max=None):
    """
    Edge relation of m vertices against all 2^m generic adjacency patterns,
    uniformly weighted. rho_2 is compared with the inclusion-exclusion formula.
    """
    preset = {**SCENARIO_PRESETS["bernoulli-cube"], **(preset or {})}
    m = preset["m"]
    k_max = preset["k_max"] if k_max is None else k_max
    U = empty_graph(m)
    phi = _edge(U)
    atoms = [RandomGraphAtom("".join(bits)) for bits in product("01", repeat=m)]
    mu = uniform(TypeSpace(U, phi, list(U.tuples(1)), atoms))

    rows = [dk_report(mu, None, None, k).to_row() for k in range(1, k_max + 1)]
    expected = bernoulli_ratio(m, 2)
    computed = Fraction(rows[1]["ratio_num"], rows[1]["ratio_den"]) if len(rows) > 1 else None
    vc = vc_dimension(mu.space.trace, over="rows")
    print(f"[DEP] m = {m}: rho_2 = {computed}, closed form = {expected}")

    # the isolated generic vertex, finitely satisfiable in the empty graph
    q = atoms[0]
    delta_q = dirac(_single(U, phi, q), q)
    chain = epsilon_chain_verify(mu, delta_q, phi, Fraction(preset["epsilon"]))
    criterion = commutation_criterion(mu, delta_q, phi, range(m))
    return {
        "m": m,
        "atoms": len(atoms),
        "rows": rows,
        "rho_2_closed_form": fraction_text(expected),
        "rho_2_matches": computed == expected,
        "vc": vc.to_dict(),
        "epsilon_chain": chain.to_dict(),
        "criterion": criterion.to_dict(),
    }


def random_graph_trivial(preset=None, trials=20, seed=0):
    """Realized measures on a small random graph: Dirac ranks and zero GC deviation."""
    preset = {**SCENARIO_PRESETS["random-graph-trivial"], **(preset or {})}
    U = random_graph(preset["vertices"], preset["edge_prob"], preset["seed"])
    phi = _edge(U)
    space = realized_type_space(U, phi)
    mu = uniform(space)
    delta = dirac(space, space.atoms[0])

    dirac_rank = dependence_rank(delta, None, None, 3)
    run = gc_curve(delta, phi, n_list=[1, 4, 16], trials=trials, seed=seed, name="dirac")
    chain = epsilon_chain_verify(mu, delta, phi, Fraction(preset["epsilon"]))
    criterion = commutation_criterion(mu, delta, phi, range(U.size))
    return {
        "structure": str(U),
        "simple_graph": is_simple_graph(U),
        "structure_file": structure_text(U),
        "atoms": [a.label for a in space.atoms],
        "purely_atomic_trivial": is_purely_atomic_trivial(mu, U),
        "dirac": {"atom": space.atoms[0].label, **dirac_rank.to_dict(),
                  "gc_max": {str(n): fraction_text(s["max"]) for n, s in run.summary.items()}},
        "self_commute": commutes(mu, mu, [phi]).to_dict(),
        "epsilon_chain": chain.to_dict(),
        "criterion": criterion.to_dict(),
    }


SCENARIOS = {
    "dlo-coheirs": dlo_coheirs,
    "l4-uniform": l4_uniform,
    "bernoulli-cube": bernoulli_cube,
    "random-graph-trivial": random_graph_trivial,
}
