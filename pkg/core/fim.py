"""
fim certificates - searches for the finite approximation event and checks
certificates exactly.

The sup deviation of a sample only depends on how often each atom occurs, so
product masses are summed over count vectors (multisets) with multinomial
weights instead of over ordered tuples.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import comb, factorial, prod

import numpy as np

from config import DEPENDENCE_DEFAULTS, EMPIRICS_DEFAULTS
from core.dependence import dk_report, vc_dimension
from core.empirics import DeviationKernel, integer_weights, sample_indices, trial_rng
from core.errors import CertificateError, KeislerLabError
from core.measure import as_fraction, atom_index
from core.statistics import proportion_half_width
from core.typespace import default_battery, definable_over_fragment, finitely_satisfiable_in, trace_matrix


def _frac(q):
    return f"{q.numerator}/{q.denominator}"


def compositions(n, parts):
    """Every vector of `parts` non-negative integers summing to n."""
    if parts == 0:
        if n == 0:
            yield ()
        return
    if parts == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in compositions(n - first, parts - 1):
            yield (first,) + rest


def multiset_mass(nums, denominator, counts):
    """mu^n of all orderings of the multiset `counts`, exact."""
    n = sum(counts)
    ways = factorial(n)
    weight = 1
    for c, w in zip(counts, nums):
        ways //= factorial(c)
        weight *= w ** c
    return Fraction(ways * weight, denominator ** n)


# ---------------------------------------------------------------- approximation event

@dataclass
class ApproxEvent:
    epsilon: Fraction
    n: int
    found: bool
    mass: Fraction
    exact: bool
    members: list = field(default_factory=list)
    half_width: float = 0.0
    history: list = field(default_factory=list)
    kernel: object = None

    def contains(self, atoms):
        """Membership of an atom tuple: sup deviation at most epsilon."""
        indices = [atom_index(self.kernel.mu.space, a) for a in atoms]
        if len(indices) != self.n:
            return False
        return self.kernel.from_indices(indices) <= self.epsilon

    def to_dict(self):
        return {
            "epsilon": _frac(self.epsilon),
            "n": self.n,
            "found": self.found,
            "mass": _frac(self.mass) if self.exact else float(self.mass),
            "method": "exhaustive" if self.exact else "monte-carlo",
            "half_width": self.half_width,
            "event_size": len(self.members),
            "history": [{**h, "mass": _frac(h["mass"]) if h["exact"] else float(h["mass"]),
                         "best_mass": _frac(h["best_mass"]) if h["exact"] else float(h["best_mass"])}
                        for h in self.history],
        }


def _exact_good_set(kernel, support, nums, denominator, n, epsilon, size):
    mass = Fraction(0)
    members = []
    for counts in compositions(n, len(support)):
        full = np.zeros(size, dtype=np.int64)
        full[support] = counts
        if kernel.from_counts(full, n) <= epsilon:
            mass += multiset_mass([nums[i] for i in support], denominator, counts)
            members.append(tuple(int(c) for c in full))
    return mass, members


def _sampled_good_set(mu, kernel, n, epsilon, samples, seed):
    rng = trial_rng(seed, n)
    draws = sample_indices(mu, n * samples, rng).reshape(samples, n)
    good = sum(1 for row in draws if kernel.from_indices(row) <= epsilon)
    p = good / samples
    return p, proportion_half_width(p, samples)


def exact_cost(n, support_size):
    """Count vectors of n draws over the support: the exact enumeration visits each once."""
    return comb(n + support_size - 1, support_size - 1)


def good_set_mass(mu, phi, A, n, epsilon, events=None, budget_tuples=None, mc_samples=None, seed=None):
    """mu^n of the epsilon-good tuples at a single n: (mass, exact, half width)."""
    budget_tuples = EMPIRICS_DEFAULTS["budget_tuples"] if budget_tuples is None else budget_tuples
    kernel = DeviationKernel(mu, phi, A, events)
    nums, denominator = integer_weights(mu)
    support = list(mu.support_indices())
    if exact_cost(n, len(support)) <= budget_tuples:
        mass, _ = _exact_good_set(kernel, support, nums, denominator, n, Fraction(epsilon), len(mu.space))
        return mass, True, 0.0
    p, half = _sampled_good_set(mu, kernel, n, Fraction(epsilon),
                                EMPIRICS_DEFAULTS["mc_samples"] if mc_samples is None else mc_samples,
                                EMPIRICS_DEFAULTS["seed"] if seed is None else seed)
    return p, False, half


def approx_event(mu, phi, A=None, events=None, epsilon=None, n_max=None, budget_tuples=None,
                 mc_samples=None, seed=None, callback=None):
    """
    Smallest n with mu^n{tuples of sup deviation <= epsilon} >= 1 - epsilon.

    Args:
        mu: measure to approximate
        phi: partitioned formula whose instances phi(x, b), b in A, are tested
        events: optional atom sets X_k intersected with every instance
        epsilon: positive rational
        n_max: largest sample size tried
        budget_tuples: largest exact_cost(n, |support|) enumerated exactly; past it the
            good set is sampled. One count vector stands for all of its orderings.
        callback: called as callback(n, mass, status) after every n

    Returns:
        ApproxEvent; when nothing up to n_max qualifies, the best n with found=False
    """
    epsilon = as_fraction(epsilon)
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    n_max = EMPIRICS_DEFAULTS["n_max"] if n_max is None else n_max
    budget_tuples = EMPIRICS_DEFAULTS["budget_tuples"] if budget_tuples is None else budget_tuples
    mc_samples = EMPIRICS_DEFAULTS["mc_samples"] if mc_samples is None else mc_samples
    seed = EMPIRICS_DEFAULTS["seed"] if seed is None else seed

    print(f"\n{'='*60}")
    print(f"APPROXIMATION EVENT SEARCH - epsilon = {epsilon}, target mass >= {1 - epsilon}")
    print(f"{'='*60}\n")

    kernel = DeviationKernel(mu, phi, A, events)
    nums, denominator = integer_weights(mu)
    support = list(mu.support_indices())
    target = 1 - epsilon

    best = None
    history = []
    for n in range(1, n_max + 1):
        exact = exact_cost(n, len(support)) <= budget_tuples
        if exact:
            mass, members = _exact_good_set(kernel, support, nums, denominator, n, epsilon, len(mu.space))
            half = 0.0
        else:
            mass, half = _sampled_good_set(mu, kernel, n, epsilon, mc_samples, seed)
            members = []
        if best is None or mass > best.mass:
            best = ApproxEvent(epsilon, n, False, mass, exact, members, half, history, kernel)
        history.append({"n": n, "mass": mass, "best_mass": best.mass, "exact": exact, "half_width": half})

        shown = f"{float(mass):.6f}" + ("" if exact else f" +/- {half:.4f}")
        print(f"n = {n:3d} | Mass: {shown} | Target: {float(target):.6f} | Best: {float(best.mass):.6f}")

        if callback:
            callback(n, mass, "Found!" if mass >= target else "Searching...")

        if mass >= target:
            print(f"\n✓ FOUND! n = {n} gives good-set mass {mass if exact else shown}")
            event = ApproxEvent(epsilon, n, True, mass, exact, members, half, history, kernel)
            break
    else:
        print(f"\n⚠ Search budget exhausted. Best: n = {best.n} with mass {float(best.mass):.6f}")
        event = best

    print(f"\n{'='*60}")
    print(f"Result: n = {event.n}, mass = {float(event.mass):.6f}, found = {event.found}")
    print(f"{'='*60}\n")
    return event


# ---------------------------------------------------------------- certificates

@dataclass
class CertificateEntry:
    """theta_epsilon as explicit atom-index tuples or as count vectors (all orderings)."""
    epsilon: Fraction
    n: int
    tuples: list = None
    multisets: list = None

    def size(self):
        if self.tuples is not None:
            return len(set(self.tuples))
        return sum(factorial(self.n) // prod(factorial(c) for c in m) for m in self.multisets)


@dataclass
class FimCertificate:
    entries: list

    def to_dict(self, space):
        out = []
        for e in self.entries:
            entry = {"epsilon": _frac(e.epsilon), "n": e.n}
            if e.tuples is not None:
                entry["event"] = {"kind": "tuples",
                                  "members": [[space.atoms[i].label for i in t] for t in e.tuples]}
            else:
                entry["event"] = {"kind": "multisets",
                                  "members": [{space.atoms[i].label: c for i, c in enumerate(m) if c}
                                              for m in e.multisets]}
            entry["formula_size"] = e.size()
            out.append(entry)
        return out


def certificate_entry(space, epsilon, n, tuples=None, multisets=None):
    """Build and validate one ladder entry; atoms may be given as objects or indices."""
    epsilon = as_fraction(epsilon)
    if epsilon <= 0:
        raise CertificateError(f"epsilon must be positive, got {epsilon}")
    if int(n) < 1:
        raise CertificateError(f"sample size must be positive, got {n}")
    if (tuples is None) == (multisets is None):
        raise CertificateError("an entry needs exactly one of tuples or multisets")
    try:
        if tuples is not None:
            tuples = [tuple(atom_index(space, a) for a in t) for t in tuples]
            bad = [t for t in tuples if len(t) != n]
            if bad:
                raise CertificateError(f"tuple {bad[0]} does not have length {n}")
            return CertificateEntry(epsilon, int(n), tuples=tuples)
        vectors = []
        for m in multisets:
            if isinstance(m, dict):
                vector = [0] * len(space)
                for a, c in m.items():
                    vector[atom_index(space, a)] += int(c)
            else:
                vector = [int(c) for c in m]
            if len(vector) != len(space) or any(c < 0 for c in vector) or sum(vector) != n:
                raise CertificateError(f"multiset {m} is not a count vector of size {n}")
            vectors.append(tuple(vector))
        return CertificateEntry(epsilon, int(n), multisets=vectors)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, CertificateError):
            raise
        raise CertificateError(f"malformed certificate entry: {exc}") from None


def certificate_from_event(event):
    if not event.exact:
        raise CertificateError("a sampled approximation event cannot be written out as a certificate")
    return CertificateEntry(event.epsilon, event.n, multisets=list(event.members))


def check_fim_certificate(mu, cert, phi, A=None):
    """Exact mass and worst-deviation check of every ladder entry."""
    kernel = DeviationKernel(mu, phi, A)
    nums, denominator = integer_weights(mu)
    verdicts = []
    for e in cert.entries:
        if not isinstance(e, CertificateEntry):
            raise CertificateError(f"not a certificate entry: {e!r}")
        worst, witness = Fraction(0), None
        mass = Fraction(0)
        if e.tuples is not None:
            for t in sorted(set(e.tuples)):
                w = Fraction(1)
                for i in t:
                    w *= mu.weights[i]
                mass += w
                deviation = kernel.from_indices(t)
                if deviation > worst or witness is None:
                    worst, witness = max(worst, deviation), t
        else:
            for m in sorted(set(e.multisets)):
                mass += multiset_mass(nums, denominator, m)
                deviation = kernel.from_counts(m, e.n)
                if deviation > worst or witness is None:
                    worst = max(worst, deviation)
                    witness = tuple(i for i, c in enumerate(m) for _ in range(c))
        valid = mass >= 1 - e.epsilon and worst <= e.epsilon
        verdicts.append({
            "epsilon": e.epsilon,
            "n": e.n,
            "mass": mass,
            "worst_deviation": worst,
            "valid": valid,
            "witness": None if valid or witness is None else [mu.space.atoms[i].label for i in witness],
            "formula_size": e.size(),
        })
    return verdicts


def verdicts_to_dict(verdicts):
    return [{**v, "epsilon": _frac(v["epsilon"]), "mass": _frac(v["mass"]),
             "worst_deviation": _frac(v["worst_deviation"]), "verdict": "VALID" if v["valid"] else "INVALID"}
            for v in verdicts]


# ---------------------------------------------------------------- experiments

def fim_implies_dependent_experiment(mu, cert, phi, A=None, k_max=None):
    """Good-set masses at the certified n values next to the rho_k trajectory."""
    k_max = DEPENDENCE_DEFAULTS["k_max"] if k_max is None else k_max
    verdicts = check_fim_certificate(mu, cert, phi, A)
    if not all(v["valid"] for v in verdicts):
        raise CertificateError("the experiment needs a valid certificate")

    good = []
    for e in cert.entries:
        mass, exact, half = good_set_mass(mu, phi, A, e.n, e.epsilon)
        good.append({"epsilon": _frac(e.epsilon), "n": e.n,
                     "good_set_mass": _frac(mass) if exact else float(mass),
                     "exact": exact, "half_width": half, "at_least_1_minus_epsilon": mass >= 1 - e.epsilon})

    dk_params = A if mu.space.formula == phi else None
    trajectory, rank = [], None
    for k in range(1, k_max + 1):
        ratio = dk_report(mu, dk_params, None, k).ratio
        trajectory.append(_frac(ratio))
        if rank is None and ratio < 1:
            rank = k
    print(f"[FIM] good-set masses: {[g['good_set_mass'] for g in good]} | rank: {rank}")
    return {
        "certificate": verdicts_to_dict(verdicts),
        "good_sets": good,
        "dependence": {"trajectory": trajectory,
                       "rank": rank if rank is not None else f"not witnessed <= {k_max}"},
    }


def dfs_nip_fim_scenario(mu, M_sub, U, phi, epsilons, n_max=None):
    """Hypothesis panel (definable, finitely satisfiable, uniform NIP bound) plus a certificate search."""
    M_sub = tuple(M_sub)
    definable = definable_over_fragment(mu, phi, M_sub, U)
    satisfiable = finitely_satisfiable_in(mu, M_sub, default_battery(phi, M_sub))
    rows = list(product(M_sub, repeat=phi.x_arity))
    trace = trace_matrix(U, phi, rows, list(U.tuples(phi.y_arity)))
    vc = vc_dimension(trace, over="rows")
    hypotheses = {
        "definable_over_fragment": definable.to_dict(),
        "finitely_satisfiable": satisfiable.to_dict(),
        "uniform_nip_bound": vc.uniform_nip_bound,
    }
    all_hold = definable.holds and satisfiable.holds

    certificates = []
    for epsilon in epsilons:
        event = approx_event(mu, phi, epsilon=epsilon, n_max=n_max)
        row = {"epsilon": _frac(event.epsilon), "found": event.found, "n": event.n,
               "mass": _frac(event.mass) if event.exact else float(event.mass)}
        if event.found and event.exact:
            entry = certificate_from_event(event)
            verdict = check_fim_certificate(mu, FimCertificate([entry]), phi)[0]
            row["verdict"] = "VALID" if verdict["valid"] else "INVALID"
        certificates.append(row)

    if not all_hold:
        conclusion = "hypotheses not met on the fragment; no claim"
    elif all(c["found"] for c in certificates):
        conclusion = "hypotheses hold and certificates were found"
    else:
        conclusion = "hypotheses hold; no certificate within the search budget (not a refutation)"
    return {"hypotheses": hypotheses, "hypotheses_hold": all_hold,
            "certificates": certificates, "conclusion": conclusion}


def fam_check(*args, **kwargs):
    raise KeislerLabError("fam (finitely approximated) measures are out of scope: no finitary definition is used here")
