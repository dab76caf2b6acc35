"""
Fiber functions and Morley products of finitely supported measures.

mu_x (x) lam_y (phi) = sum over lam-atoms q of lam(q) * mu(phi(x, d)), d a
realizer of q. The right factor is realized first; the left factor decides
over the context that contains d.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from math import ceil, floor

from config import MORLEY_DEFAULTS
from core.dependence import dk_report
from core.errors import FiberError, MeasureError
from core.logic import PartitionedFormula, dual, evaluate, free_vars, instance, to_text
from core.measure import average, dirac
from core.theories import ExtensionContext
from core.typespace import default_battery, definable_over_fragment, finitely_satisfiable_in


def _frac(q):
    return None if q is None else f"{q.numerator}/{q.denominator}"


def _check_sides(mu, lam, phi):
    if mu.space.structure.size != lam.space.structure.size:
        raise MeasureError("the two measures live over structures of different size")
    for side, measure, arity in (("left", mu, phi.x_arity), ("right", lam, phi.y_arity)):
        for atom in measure.support():
            if atom.arity != arity:
                raise MeasureError(f"{side} atom {atom.label} has arity {atom.arity}, {phi} needs {arity}")


def _mass_at(mu, ctx, phi, d):
    """mu(phi(x, d)) for elements d of ctx."""
    total = Fraction(0)
    for p, w in mu.items():
        if p.decide(ctx, phi, d):
            total += w
    return total


@dataclass
class FiberFunction:
    formula: PartitionedFormula
    measure: object
    atoms: tuple
    values: tuple
    witnesses: tuple = ()

    def __call__(self, q):
        return self.values[self.atoms.index(q)]

    def table(self):
        return [(atom.label, value) for atom, value in zip(self.atoms, self.values)]

    def distinct_values(self):
        return sorted(set(self.values))

    def to_dict(self):
        return {atom.label: _frac(value) for atom, value in zip(self.atoms, self.values)}


def fiber_function(mu, lam_space, phi, atoms=None, check=True):
    """
    f(q) = mu(phi(x, d)), d realizing q, for the atoms of lam_space. Limit atoms
    are realized twice, alone and behind a first realizer, and must agree.
    """
    U = mu.space.structure
    atoms = lam_space.atoms if atoms is None else tuple(atoms)
    values, witnesses = [], []
    for q in atoms:
        ctx = ExtensionContext(U)
        d = q.witness(ctx)
        value = _mass_at(mu, ctx, phi, d)
        if check and not q.is_realized():
            other = ExtensionContext(U)
            q.realize(other)
            d2 = q.realize(other)
            again = _mass_at(mu, other, phi, d2)
            if again != value:
                raise FiberError(
                    f"fiber of {phi} at {q.label} is not well defined: {value} with one realizer, "
                    f"{again} with another")
        values.append(value)
        witnesses.append(ctx.realization_order())
    return FiberFunction(phi, mu, atoms, tuple(values), tuple(witnesses))


@dataclass
class ProductEvaluation:
    order: list
    formula: str
    value: Fraction
    trace: list = field(default_factory=list)

    def to_dict(self):
        return {
            "order": self.order,
            "formula": self.formula,
            "value": _frac(self.value),
            "realizations": self.trace,
        }


def morley_product(mu, lam, phi, reverse=False, names=("mu", "lambda")):
    """mu_x (x) lam_y evaluated on phi(x; y)."""
    _check_sides(mu, lam, phi)
    support = list(lam.support())
    if reverse:
        support.reverse()
    fiber = fiber_function(mu, lam.space, phi, atoms=support)
    value = sum((lam.weight(q) * f for q, f in zip(fiber.atoms, fiber.values)), Fraction(0))
    if not 0 <= value <= 1:
        raise MeasureError(f"product value {value} is outside [0, 1]")
    limit = MORLEY_DEFAULTS["trace_limit"]
    trace = [{"atom": q.label, "fiber": _frac(f), "realized": [list(r) for r in w]}
             for q, f, w in list(zip(fiber.atoms, fiber.values, fiber.witnesses))[:limit]]
    order = [[names[0], list(phi.object_vars)], [names[1], list(phi.param_vars)]]
    return ProductEvaluation(order, to_text(phi.formula), value, trace)


def reverse_product(mu, lam, phi, names=("mu", "lambda")):
    """lam_y (x) mu_x on the same phi(x; y)."""
    return morley_product(lam, mu, dual(phi), names=(names[1], names[0]))


@dataclass
class CommuteReport:
    rows: list
    max_difference: Fraction
    verdict: bool

    def to_dict(self):
        return {
            "formulas": self.rows,
            "max_difference": _frac(self.max_difference),
            "verdict": "commute" if self.verdict else "do not commute",
        }


def commutes(mu, lam, formulas):
    rows = []
    worst = Fraction(0)
    for phi in formulas:
        left = morley_product(mu, lam, phi)
        right = reverse_product(mu, lam, phi)
        gap = abs(left.value - right.value)
        worst = max(worst, gap)
        rows.append({
            "formula": str(phi),
            "mu_lambda": _frac(left.value),
            "lambda_mu": _frac(right.value),
            "difference": _frac(gap),
            "equal": gap == 0,
            "realizations": {"mu_lambda": left.trace, "lambda_mu": right.trace},
        })
    return CommuteReport(rows, worst, worst == 0)


@dataclass
class CriterionCheck:
    definable: object
    rho_1: Fraction
    satisfiable: object
    report: CommuteReport

    @property
    def hypotheses_hold(self):
        return self.definable.holds and self.rho_1 < 1 and self.satisfiable.holds

    @property
    def consistent(self):
        return not self.hypotheses_hold or self.report.verdict

    def to_dict(self):
        return {
            "definable": self.definable.holds,
            "rho_1": _frac(self.rho_1),
            "finitely_satisfiable": self.satisfiable.holds,
            "hypotheses_hold": self.hypotheses_hold,
            "verdict": self.report.to_dict()["verdict"],
            "consistent": self.consistent,
        }


def commutation_criterion(mu, lam, phi, M_sub, battery=None):
    """
    Finite instance of the commutation criterion: mu definable over M_sub with
    rho_1 < 1, and lam finitely satisfiable in M_sub, should give mu (x) lam =
    lam (x) mu. The check is consistent when the hypotheses fail or the products agree.
    """
    M_sub = tuple(M_sub)
    U = mu.space.structure
    battery = default_battery(lam.space.formula, M_sub) if battery is None else battery
    check = CriterionCheck(definable_over_fragment(mu, phi, M_sub, U),
                           dk_report(mu, None, None, 1).ratio,
                           finitely_satisfiable_in(lam, M_sub, battery),
                           commutes(mu, lam, [phi]))
    if check.hypotheses_hold:
        print(f"[MORLEY] criterion hypotheses hold; products {check.report.to_dict()['verdict']}")
    else:
        print("[MORLEY] criterion hypotheses fail; nothing to check")
    if not check.consistent:
        print("⚠ definable, dependent and finitely satisfiable, yet the products differ")
    return check


# ---------------------------------------------------------------- iterated products

def _leaf_outcomes(factor, ctx, env):
    measure, names = factor
    for q, w in measure.items():
        branch = ctx.clone()
        elements = q.witness(branch)
        yield w, branch, {**env, **dict(zip(names, elements))}


def _outcomes(tree, factors, ctx, env):
    """Joint outcomes of a bracketed product: the right block is realized first."""
    if isinstance(tree, int):
        yield from _leaf_outcomes(factors[tree], ctx, env)
        return
    left, right = tree
    for w_r, ctx_r, env_r in _outcomes(right, factors, ctx, env):
        for w_l, ctx_l, env_l in _outcomes(left, factors, ctx_r, env_r):
            yield w_r * w_l, ctx_l, env_l


def _right_nested(indices):
    tree = indices[-1]
    for i in reversed(indices[:-1]):
        tree = (i, tree)
    return tree


def _left_nested(indices):
    tree = indices[0]
    for i in indices[1:]:
        tree = (tree, i)
    return tree


def _tree_value(tree, factors, formula, U):
    total = Fraction(0)
    realized = []
    for w, ctx, env in _outcomes(tree, factors, ExtensionContext(U), {}):
        if evaluate(ctx.structure(), formula, env):
            total += w
        if len(realized) < MORLEY_DEFAULTS["trace_limit"]:
            realized.append([list(r) for r in ctx.realization_order()])
    return total, realized


def _normalize_factors(factors):
    normalized = []
    for measure, names in factors:
        names = (names,) if isinstance(names, str) else tuple(names)
        for atom in measure.support():
            if atom.arity != len(names):
                raise MeasureError(f"atom {atom.label} has arity {atom.arity}, bound to {names}")
        normalized.append((measure, names))
    return normalized


@dataclass
class IteratedReport:
    given: ProductEvaluation
    permuted: ProductEvaluation
    bracketings: dict

    @property
    def symmetric(self):
        return self.given.value == self.permuted.value

    @property
    def associative(self):
        return len(set(self.bracketings.values())) == 1

    def to_dict(self):
        return {
            "given": self.given.to_dict(),
            "permuted": self.permuted.to_dict(),
            "bracketings": {k: _frac(v) for k, v in self.bracketings.items()},
            "symmetric": self.symmetric,
            "associative": self.associative,
        }


def _evaluate_order(order, factors, formula, U, labels):
    value, realized = _tree_value(_right_nested(list(order)), factors, formula, U)
    return ProductEvaluation([[labels[i], list(factors[i][1])] for i in order], to_text(formula), value, realized)


def iterated_product(factors, formula, sigma=None, labels=None):
    """
    mu_1 (x) ... (x) mu_n on formula, in the given order and in the order sigma.
    Each factor is (measure, variable names). Both bracketings of the given
    order are evaluated.
    """
    factors = _normalize_factors(factors)
    n = len(factors)
    if not 1 <= n <= MORLEY_DEFAULTS["max_factors"]:
        raise ValueError(f"iterated products take 1..{MORLEY_DEFAULTS['max_factors']} factors, got {n}")
    formula = formula.formula if isinstance(formula, PartitionedFormula) else formula
    bound = {name for _, names in factors for name in names}
    if not free_vars(formula) <= bound:
        raise MeasureError(f"free variables {sorted(free_vars(formula) - bound)} are not bound by any factor")
    sigma = tuple(reversed(range(n))) if sigma is None else tuple(sigma)
    if sorted(sigma) != list(range(n)):
        raise ValueError(f"{sigma} is not a permutation of 0..{n - 1}")
    labels = labels or [f"mu_{i + 1}" for i in range(n)]
    U = factors[0][0].space.structure

    given = _evaluate_order(range(n), factors, formula, U, labels)
    permuted = _evaluate_order(sigma, factors, formula, U, labels)
    bracketings = {"right": given.value}
    if n > 2:
        bracketings["left"], _ = _tree_value(_left_nested(list(range(n))), factors, formula, U)
    return IteratedReport(given, permuted, bracketings)


def symmetry_profile(factors, formula):
    """Product value for every ordering of the factors."""
    factors = _normalize_factors(factors)
    formula = formula.formula if isinstance(formula, PartitionedFormula) else formula
    U = factors[0][0].space.structure
    labels = [f"mu_{i + 1}" for i in range(len(factors))]
    return {sigma: _evaluate_order(sigma, factors, formula, U, labels).value
            for sigma in permutations(range(len(factors)))}


# ---------------------------------------------------------------- approximation by averages

def average_convergence_check(lam, mu, phi, approximants):
    """
    Gaps along lam_i = Av(a_i): |lam_i (x) mu - lam (x) mu| and, where the
    arities allow it, the variant |Av(a_i) (x) lam - lam (x) mu|.
    """
    target = morley_product(lam, mu, phi).value
    printed_ok = all(a.arity == phi.y_arity for a in lam.support())
    rows = []
    for i, atoms in enumerate(approximants, start=1):
        lam_i = average(lam.space, atoms)
        value = morley_product(lam_i, mu, phi).value
        row = {"i": i, "size": len(atoms), "proof_value": value, "proof_gap": abs(value - target),
               "printed_value": None, "printed_gap": None}
        if printed_ok:
            printed = morley_product(lam_i, lam, phi).value
            row["printed_value"] = printed
            row["printed_gap"] = abs(printed - target)
        rows.append(row)
    return {"target": target, "rows": rows, "limit_gap": rows[-1]["proof_gap"] if rows else None}


# ---------------------------------------------------------------- epsilon chain

@dataclass
class StepFunction:
    sets: list
    levels: list
    exact: bool

    def __call__(self, i):
        for members, r in zip(self.sets, self.levels):
            if i in members:
                return r
        return Fraction(0)

    def integral(self, measure):
        return sum((r * measure.measure_of(members) for members, r in zip(self.sets, self.levels)), Fraction(0))


def step_approximation(fiber, space, epsilon):
    """Simple function sum r_i chi_{X_i} within epsilon of the fiber, uniformly."""
    indices = [space.index(q) for q in fiber.atoms]
    distinct = fiber.distinct_values()
    if len(distinct) <= ceil(1 / epsilon):
        sets = [frozenset(i for i, v in zip(indices, fiber.values) if v == level) for level in distinct]
        return StepFunction(sets, list(distinct), True)
    bins = floor(1 / epsilon) + 1
    grouped = {}
    for i, v in zip(indices, fiber.values):
        grouped.setdefault(min(floor(v / epsilon), bins - 1), set()).add(i)
    keys = sorted(grouped)
    return StepFunction([frozenset(grouped[b]) for b in keys], [b * epsilon for b in keys], False)


def rounded_average(lam, m):
    """Av(q_1..q_m) over support(lam), counts by largest remainder."""
    items = lam.items()
    scaled = [w * m for _, w in items]
    counts = [floor(s) for s in scaled]
    left = m - sum(counts)
    order = sorted(range(len(items)), key=lambda j: (-(scaled[j] - counts[j]), j))
    for j in order[:left]:
        counts[j] += 1
    atoms = [q for (q, _), c in zip(items, counts) for _ in range(c)]
    return average(lam.space, atoms)


def _instance_values(measure, mu, phi):
    """measure(phi(a, y)) for a over U^|x| and over realizers of support(mu)."""
    U = mu.space.structure
    star = dual(phi)
    values = {}
    for a in U.tuples(phi.x_arity):
        values[("element", a)] = measure.measure_of(instance(star, a))
    for p in mu.support():
        if p.is_realized():
            continue
        ctx = ExtensionContext(U)
        d = p.witness(ctx)
        values[("atom", p.label)] = _mass_at(measure, ctx, star, d)
    return values


@dataclass
class ChainLedger:
    epsilon: Fraction
    step: StepFunction
    m: int
    found: bool
    lambda_tilde: object
    links: list
    commutation: dict
    total: Fraction

    @property
    def holds(self):
        return self.found and self.total <= 4 * self.epsilon and all(link["within"] for link in self.links)

    def to_dict(self):
        return {
            "epsilon": _frac(self.epsilon),
            "step_sets": len(self.step.sets),
            "step_exact": self.step.exact,
            "m": self.m,
            "found": self.found,
            "lambda_tilde": self.lambda_tilde.to_dict(),
            "links": [{**link, "left": _frac(link["left"]), "right": _frac(link["right"]),
                       "error": _frac(link["error"])} for link in self.links],
            "commutation": {k: (_frac(v) if isinstance(v, Fraction) else v) for k, v in self.commutation.items()},
            "total": _frac(self.total),
            "bound": _frac(4 * self.epsilon),
            "holds": self.holds,
        }


def _link(name, left, right, epsilon):
    error = abs(left - right)
    return {"step": name, "left": left, "right": right, "error": error, "within": error < epsilon}


def epsilon_chain_verify(mu, lam, phi, epsilon, max_m=None):
    """
    Walk mu (x) lam ~ sum r_i lam(X_i) ~ sum r_i lam~(X_i) ~ mu (x) lam~
    = lam~ (x) mu ~ lam (x) mu and report the error of each link.
    """
    epsilon = Fraction(epsilon)
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    max_m = MORLEY_DEFAULTS["chain_max_m"] if max_m is None else max_m
    _check_sides(mu, lam, phi)

    fiber = fiber_function(mu, lam.space, phi)
    step = step_approximation(fiber, lam.space, epsilon)
    reference = _instance_values(lam, mu, phi)
    tolerance = epsilon / max(len(step.sets), 1)

    print(f"\n{'=' * 60}")
    print(f"EPSILON CHAIN - searching Av(q_1..q_m) for epsilon = {epsilon}")
    print(f"{'=' * 60}\n")

    best = None
    for m in range(1, max_m + 1):
        candidate = rounded_average(lam, m)
        set_gap = max((abs(candidate.measure_of(X) - lam.measure_of(X)) for X in step.sets), default=Fraction(0))
        tilde_values = _instance_values(candidate, mu, phi)
        instance_gap = max((abs(tilde_values[key] - v) for key, v in reference.items()), default=Fraction(0))
        found = set_gap < tolerance and instance_gap < epsilon
        score = max(set_gap / tolerance, instance_gap / epsilon)
        if best is None or score < best[0]:
            best = (score, m, candidate, found)
        if found:
            print(f"✓ m = {m}: set gap {set_gap}, instance gap {instance_gap}")
            break
    else:
        print(f"⚠ no average of at most {max_m} support types meets both conditions; using m = {best[1]}")
    _, m, tilde, found = best

    integral = sum((lam.weight(q) * f for q, f in zip(fiber.atoms, fiber.values)), Fraction(0))
    step_lam = step.integral(lam)
    step_tilde = step.integral(tilde)
    mu_tilde = morley_product(mu, tilde, phi).value
    tilde_mu = reverse_product(mu, tilde, phi).value
    lam_mu = reverse_product(mu, lam, phi).value

    links = [
        _link("fiber vs step function under lambda", integral, step_lam, epsilon),
        _link("step function under lambda vs lambda~", step_lam, step_tilde, epsilon),
        _link("step function vs fiber under lambda~", step_tilde, mu_tilde, epsilon),
        _link("lambda~ (x) mu vs lambda (x) mu", tilde_mu, lam_mu, epsilon),
    ]
    hypothesis = all(commutes(mu, dirac(lam.space, q), [phi]).verdict for q in lam.support())
    commutation = {"mu_tilde": mu_tilde, "tilde_mu": tilde_mu, "difference": abs(mu_tilde - tilde_mu),
                   "support_types_commute": hypothesis}
    total = sum((link["error"] for link in links), Fraction(0))

    print(f"\n{'=' * 60}")
    print(f"Result: m = {m}, total error = {total} (bound {4 * epsilon})")
    print(f"{'=' * 60}\n")
    return ChainLedger(epsilon, step, m, found, tilde, links, commutation, total)
