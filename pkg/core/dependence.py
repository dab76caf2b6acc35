"""
Alternation sets D_k, dependence ratios and ranks, VC dimension and IP witnesses.

A k-tuple of atoms lies in D_k(A) when the columns b in A realize every one
of the 2^k patterns (phi(p_1, b), ..., phi(p_k, b)). The enumerator walks
tuples of E depth first, keeping the partition of A into pattern cells, and
drops a prefix as soon as some cell is too small to be split 2^(k-j) ways.
The last coordinate is checked for all candidates at once with numpy.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from math import comb, lcm

import numpy as np

from config import DEPENDENCE_DEFAULTS
from core.measure import PHI_NODES, atom_index
from core.typespace import trace_matrix


def _frac(q):
    return f"{q.numerator}/{q.denominator}"


def _event_indices(space, E):
    if E is None:
        return list(range(len(space)))
    if isinstance(E, PHI_NODES):
        return [i for i in range(len(space)) if space.decides(i, E)]
    return sorted({atom_index(space, a) for a in E})


def _columns(space, A):
    return space.columns_for(None if A is None else [tuple(b) for b in A])


def _walk(rows, candidates, k, visit):
    """Call visit(prefix, ok_candidates) for every (k-1)-prefix with completions."""
    candidates = np.asarray(candidates, dtype=np.int64)
    if len(candidates) == 0:
        return
    R = rows[candidates]
    R_int = R.astype(np.int64)

    def descend(prefix, cells, depth):
        if depth == k - 1:
            sizes = cells.sum(axis=1)
            ones = cells.astype(np.int64) @ R_int.T
            ok = np.all((ones > 0) & (ones < sizes[:, None]), axis=0)
            if ok.any():
                visit(prefix, candidates[ok])
            return
        need = 1 << (k - depth - 1)
        for c, row in zip(candidates, R):
            split = np.concatenate([cells & ~row, cells & row])
            if split.sum(axis=1).min() < need:
                continue
            descend(prefix + (int(c),), split, depth + 1)

    descend((), np.ones((1, rows.shape[1]), dtype=bool), 0)


def dk_set(space, A, E, k):
    """D_k(A, E) as a frozenset of atom-index k-tuples."""
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    columns = _columns(space, A)
    if (1 << k) > len(columns):
        print(f"⚠ 2^{k} patterns cannot fit in {len(columns)} parameters: D_{k} is empty")
        return frozenset()
    rows = space.trace.bits[:, columns]
    found = set()
    _walk(rows, _event_indices(space, E), k,
          lambda prefix, ok: found.update(prefix + (int(c),) for c in ok))
    return frozenset(found)


def dk_set_naive(space, A, E, k):
    """Per-tuple, per-column reference for dk_set."""
    columns = _columns(space, A)
    rows = space.trace.bits[:, columns]
    full = 1 << k
    found = set()
    for t in product(_event_indices(space, E), repeat=k):
        patterns = {tuple(bool(rows[i, j]) for i in t) for j in range(len(columns))}
        if len(patterns) == full:
            found.add(t)
    return frozenset(found)


@dataclass
class DkReport:
    k: int
    witness_pool: tuple
    base: tuple
    event: tuple
    dk_mass: Fraction
    event_mass: Fraction
    ratio: Fraction
    witness_count: int
    witnesses: list = field(default_factory=list)
    flagged: bool = False

    @property
    def dependent(self):
        return self.ratio < 1

    def to_row(self):
        return {
            "k": self.k,
            "dk_mass_num": self.dk_mass.numerator,
            "dk_mass_den": self.dk_mass.denominator,
            "ratio_num": self.ratio.numerator,
            "ratio_den": self.ratio.denominator,
            "witness_count": self.witness_count,
        }

    def to_dict(self):
        return {
            **self.to_row(),
            "ratio": _frac(self.ratio),
            "event_mass": _frac(self.event_mass),
            "witnesses": [list(w) for w in self.witnesses],
            "pattern_overflow": self.flagged,
        }


def dk_report(mu, A, E, k, witness_samples=None):
    """Exact mu^k(D_k) and rho_k = mu^k(D_k) / mu(E)^k, with a few sample tuples."""
    witness_samples = DEPENDENCE_DEFAULTS["witness_samples"] if witness_samples is None else witness_samples
    space = mu.space
    columns = _columns(space, A)
    events = _event_indices(space, E)

    denominator = lcm(*(w.denominator for w in mu.weights))
    nums = np.array([int(w * denominator) for w in mu.weights], dtype=object)
    event_mass = Fraction(int(sum(nums[i] for i in events)), denominator)

    flagged = (1 << k) > len(columns)
    total = 0
    count = 0
    witnesses = []
    if not flagged:
        rows = space.trace.bits[:, columns]
        live = [i for i in events if nums[i]]

        def visit(prefix, ok):
            nonlocal total, count
            weight = 1
            for i in prefix:
                weight *= nums[i]
            total += weight * int(nums[ok].sum())
            count += len(ok)
            for c in ok:
                if len(witnesses) >= witness_samples:
                    break
                witnesses.append(tuple(space.atoms[i].label for i in prefix + (int(c),)))

        _walk(rows, live, k, visit)

    dk_mass = Fraction(total, denominator ** k)
    ratio = dk_mass / event_mass ** k if event_mass else Fraction(0)
    return DkReport(k, tuple(space.params[j] for j in columns), space.params,
                    tuple(space.atoms[i].label for i in events),
                    dk_mass, event_mass, ratio, count, witnesses, flagged)


@dataclass
class RankReport:
    rank: object
    k_max: int
    trajectory: list

    def to_dict(self):
        return {
            "rank": self.rank if self.rank is not None else f"not witnessed <= {self.k_max}",
            "trajectory": [_frac(r) for r in self.trajectory],
        }


def dependence_rank(mu, A, E, k_max=None):
    k_max = DEPENDENCE_DEFAULTS["k_max"] if k_max is None else k_max
    if k_max < 1:
        raise ValueError(f"k_max must be positive, got {k_max}")
    trajectory = []
    for k in range(1, k_max + 1):
        ratio = dk_report(mu, A, E, k).ratio
        trajectory.append(ratio)
        if ratio < 1:
            return RankReport(k, k_max, trajectory)
    return RankReport(None, k_max, trajectory)


def bernoulli_ratio(m, k=2):
    """Chance that m uniform columns cover all 2^k patterns (inclusion-exclusion)."""
    n = 1 << k
    return sum((Fraction((-1) ** j * comb(n, j)) * Fraction(n - j, n) ** m for j in range(n + 1)), Fraction(0))


# ---------------------------------------------------------------- VC dimension

@dataclass
class VcReport:
    vc_dim: int
    axis: str
    shatter_function: list
    witness: tuple
    exact: bool = True
    checked: int = 0

    @property
    def uniform_nip_bound(self):
        return self.vc_dim + 1

    def to_dict(self):
        return {
            "vc_dim": self.vc_dim,
            "axis": self.axis,
            "uniform_nip_bound": self.uniform_nip_bound,
            "shatter_function": self.shatter_function,
            "witness": list(self.witness),
            "exact": self.exact,
            "method": "exhaustive" if self.exact else "greedy-lower-bound",
        }


def _pattern_count(points, subset):
    """Distinct traces the sets leave on `subset` (rows of `points`)."""
    block = points[list(subset)]
    weights = np.left_shift(np.int64(1), np.arange(len(subset), dtype=np.int64))
    codes = weights @ block.astype(np.int64)
    return len(np.unique(codes))


def _is_shattered(points, subset):
    return _pattern_count(points, subset) == 1 << len(subset)


def _shattered_levels(points, stop_at=None, limit=None, budget=None):
    """
    Level-wise growth of shattered sets: a (j+1)-set is tried only when all of
    its j-subsets are shattered. Returns (last level reached, checks, complete).
    """
    limit = DEPENDENCE_DEFAULTS["vc_exhaustive_limit"] if limit is None else limit
    budget = DEPENDENCE_DEFAULTS["shatter_budget"] if budget is None else budget
    n_points, n_sets = points.shape
    distinct = len({r.tobytes() for r in points.T}) if n_sets else 0
    ceiling = int(np.floor(np.log2(distinct))) if distinct else 0

    level = [(i,) for i in range(n_points) if _is_shattered(points, (i,))]
    checks = n_points
    best = level
    size = 1
    while level and size < ceiling and (stop_at is None or size < stop_at):
        if size >= limit:
            return best, checks, False
        # nothing can grow past the next level, so its first member settles it
        last = size + 1 >= ceiling or (stop_at is not None and size + 1 >= stop_at)
        known = set(level)
        following = []
        for s in level:
            for q in range(s[-1] + 1, n_points):
                candidate = s + (q,)
                if any(candidate[:i] + candidate[i + 1:] not in known for i in range(len(candidate))):
                    continue
                checks += 1
                if checks > budget:
                    return best, checks, False
                if _is_shattered(points, candidate):
                    following.append(candidate)
                    if last:
                        break
            if last and following:
                break
        if not following:
            break
        level = following
        best = level
        size += 1
    return best, checks, True


def _greedy_extend(points, start):
    chosen = list(start)
    for q in range(points.shape[0]):
        if q not in chosen and _is_shattered(points, sorted(chosen + [q])):
            chosen = sorted(chosen + [q])
    return tuple(chosen)


def vc_dimension(trace, over="rows", limit=None, budget=None):
    """VC dimension of the chosen axis as points, shattered by the other axis."""
    if over not in ("rows", "columns"):
        raise ValueError(f"axis must be 'rows' or 'columns', got {over!r}")
    budget = DEPENDENCE_DEFAULTS["shatter_budget"] if budget is None else budget
    oriented = trace if over == "rows" else trace.transpose()
    points = oriented.bits
    if points.size == 0:
        raise ValueError("VC dimension of an empty trace matrix")

    level, checks, exact = _shattered_levels(points, limit=limit, budget=budget)
    witness = level[0] if level else ()
    if not exact:
        witness = _greedy_extend(points, witness)
        print(f"⚠ VC search stopped at size {len(level[0])}; greedy lower bound {len(witness)}")
    vc = len(witness)

    labels = oriented.rows
    shatter = [1 << j for j in range(1, vc + 1)]
    if exact and vc + 1 <= points.shape[0]:
        if comb(points.shape[0], vc + 1) <= budget:
            shatter.append(max(_pattern_count(points, s) for s in combinations(range(points.shape[0]), vc + 1)))
        else:
            shatter.append(None)
    return VcReport(vc, over, shatter, tuple(labels[i] for i in witness), exact, checks)


def ip_witness(M, phi, n):
    """n object tuples a_1..a_n such that every subset is cut out by some parameter, or None."""
    if n < 1:
        raise ValueError(f"IP pattern size must be positive, got {n}")
    rows = list(M.tuples(phi.x_arity))
    cols = list(M.tuples(phi.y_arity))
    trace = trace_matrix(M, phi, rows, cols)
    level, _, _ = _shattered_levels(trace.bits, stop_at=n, limit=max(n, 1), budget=float("inf"))
    if not level or len(level[0]) < n:
        return None
    return tuple(rows[i] for i in level[0])
