"""
Monte-Carlo Glivenko-Cantelli runs: exact sampling from rational weights,
exact sup deviations, per-trial seeded streams.
"""
import os
from bisect import bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import accumulate
from math import lcm

import numpy as np

from config import CLI_DEFAULTS, EMPIRICS_DEFAULTS
from core.logic import instance
from core.measure import atom_index
from core.statistics import summarize_deviations


def _frac(q):
    return f"{q.numerator}/{q.denominator}"


def trial_rng(seed, *stream):
    """Generator for one stream of a master seed; streams never overlap."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream)))


def worker_count(threads=None):
    if threads is not None:
        return max(1, int(threads))
    value = os.environ.get(CLI_DEFAULTS["threads_env"])
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            print(f"⚠ ignoring {CLI_DEFAULTS['threads_env']}={value!r}")
    return os.cpu_count() or 1


# ---------------------------------------------------------------- sampling

def integer_weights(mu):
    """Weights as integer numerators over their common denominator."""
    denominator = lcm(*(w.denominator for w in mu.weights))
    return [int(w * denominator) for w in mu.weights], denominator


def _uniform_below(rng, bound, n):
    """Exact uniform draws from range(bound) for bounds past int64, by rejection."""
    nbytes = (bound.bit_length() + 7) // 8
    ceiling = (256 ** nbytes // bound) * bound
    draws = []
    while len(draws) < n:
        u = int.from_bytes(rng.bytes(nbytes), "big")
        if u < ceiling:
            draws.append(u % bound)
    return draws


def sample_indices(mu, n, rng):
    if n < 1:
        raise ValueError(f"sample size must be positive, got {n}")
    nums, denominator = integer_weights(mu)
    if denominator < 2**62:
        cumulative = np.cumsum(np.array(nums, dtype=np.int64))
        draws = rng.integers(0, denominator, size=n)
        return np.searchsorted(cumulative, draws, side="right").astype(np.int64)
    cumulative = list(accumulate(nums))
    draws = _uniform_below(rng, denominator, n)
    return np.array([bisect_right(cumulative, u) for u in draws], dtype=np.int64)


def sample_tuple(mu, n, rng):
    """n i.i.d. atoms drawn from mu by inverse CDF over the exact weights."""
    return tuple(mu.space.atoms[i] for i in sample_indices(mu, n, rng))


# ---------------------------------------------------------------- deviations

def instance_matrix(space, phi, A=None):
    """Bool matrix: entry (i, j) says atom i decides phi(x, A[j])."""
    if space.formula == phi:
        columns = space.columns_for(None if A is None else [tuple(b) for b in A])
        return space.trace.bits[:, columns]
    if A is None:
        A = list(space.structure.tuples(phi.y_arity))
    return np.array([[space.decides(i, instance(phi, b)) for b in A] for i in range(len(space))],
                    dtype=bool).reshape(len(space), len(A))


def _event_columns(matrix, events, n_atoms):
    if not events:
        return matrix
    blocks = [matrix]
    for X in events:
        mask = np.zeros(n_atoms, dtype=bool)
        mask[list(X)] = True
        blocks.append(matrix & mask[:, None])
    return np.concatenate(blocks, axis=1)


class DeviationKernel:
    """Precomputed columns for repeated sup-deviation evaluations against one measure."""

    def __init__(self, mu, phi, A=None, events=None):
        self.mu = mu
        space = mu.space
        events = [sorted({atom_index(space, a) for a in X}) for X in (events or [])]
        self.columns = _event_columns(instance_matrix(space, phi, A), events, len(space)).astype(np.int64)
        nums, self.denominator = integer_weights(mu)
        self.mass_nums = [sum(nums[i] for i in np.flatnonzero(col)) for col in self.columns.T]

    def from_counts(self, counts, n):
        """max_j |c_j / n - m_j / D| for the count vector of a sample of size n."""
        if not self.mass_nums:
            return Fraction(0)
        hits = np.asarray(counts, dtype=np.int64) @ self.columns
        D = self.denominator
        worst = max(abs(int(h) * D - m * n) for h, m in zip(hits, self.mass_nums))
        return Fraction(worst, n * D)

    def from_indices(self, indices):
        counts = np.bincount(np.asarray(indices, dtype=np.int64), minlength=self.columns.shape[0])
        return self.from_counts(counts, len(indices))


def sup_deviation(sample, mu, phi, A=None, extra_events=None):
    """
    max over b in A of |Av(sample; phi(x, b)) - mu(phi(x, b))|; extra events
    X_k add the columns phi(x, b) & X_k to the same max.
    """
    indices = [atom_index(mu.space, a) for a in sample]
    if not indices:
        raise ValueError("empty sample")
    return DeviationKernel(mu, phi, A, extra_events).from_indices(indices)


def hull_deviation(mu, phi, A, indices, rng, size=None):
    """|Av(g) - mu(g)| for g a random convex combination of `size` instance indicators."""
    size = EMPIRICS_DEFAULTS["hull_size"] if size is None else size
    matrix = instance_matrix(mu.space, phi, A)
    if matrix.shape[1] == 0:
        return Fraction(0)
    picks = rng.integers(0, matrix.shape[1], size=size)
    raw = [int(c) for c in rng.integers(1, 11, size=size)]
    coefficients = [Fraction(c, sum(raw)) for c in raw]
    counts = np.bincount(np.asarray(indices, dtype=np.int64), minlength=matrix.shape[0])
    n = len(indices)
    av = Fraction(0)
    true = Fraction(0)
    for j, c in zip(picks, coefficients):
        column = matrix[:, int(j)]
        av += c * Fraction(int(counts[column].sum()), n)
        true += c * sum((w for w, hit in zip(mu.weights, column) if hit), Fraction(0))
    return abs(av - true)


# ---------------------------------------------------------------- GC runs

@dataclass
class GCRun:
    measure: str
    formula: str
    params: list
    n_list: list
    trials: int
    seed: int
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    hull: bool = False

    def to_rows(self):
        out = []
        for row in self.rows:
            entry = {"n": row["n"], "trial": row["trial"],
                     "sup_dev_num": row["deviation"].numerator, "sup_dev_den": row["deviation"].denominator}
            if self.hull:
                entry["hull_dev_num"] = row["hull"].numerator
                entry["hull_dev_den"] = row["hull"].denominator
            out.append(entry)
        for n in self.n_list:
            stats = self.summary[n]
            for key in ("mean", "max"):
                entry = {"n": n, "trial": key,
                         "sup_dev_num": stats[key].numerator, "sup_dev_den": stats[key].denominator}
                if self.hull:
                    entry["hull_dev_num"] = ""
                    entry["hull_dev_den"] = ""
                out.append(entry)
        return out

    def to_dict(self):
        return {
            "measure": self.measure,
            "formula": self.formula,
            "params": [list(b) for b in self.params],
            "n": self.n_list,
            "trials": self.trials,
            "seed": self.seed,
            "summary": {str(n): {"mean": _frac(s["mean"]), "max": _frac(s["max"]), "std": s["std"],
                                 "cv": s["cv"], "ci": list(s["ci"])} for n, s in self.summary.items()},
        }


def _one_trial(mu, kernel, phi, A, n, n_pos, trial, seed, hull):
    rng = trial_rng(seed, n_pos, trial)
    indices = sample_indices(mu, n, rng)
    row = {"n": n, "trial": trial, "deviation": kernel.from_indices(indices)}
    if hull:
        row["hull"] = hull_deviation(mu, phi, A, indices, rng)
    return row


def gc_curve(mu, phi, A=None, n_list=None, trials=None, seed=None, hull=False, threads=None, name="mu"):
    """Sup deviations of empirical averages over `trials` seeded samples per n."""
    n_list = list(EMPIRICS_DEFAULTS["n_ladder"] if n_list is None else n_list)
    trials = EMPIRICS_DEFAULTS["trials"] if trials is None else int(trials)
    seed = EMPIRICS_DEFAULTS["seed"] if seed is None else int(seed)
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    if any(n < 1 for n in n_list):
        raise ValueError(f"sample sizes must be positive: {n_list}")
    kernel = DeviationKernel(mu, phi, A)
    params = list(mu.space.params) if A is None and mu.space.formula == phi else \
        [tuple(b) for b in (A if A is not None else mu.space.structure.tuples(phi.y_arity))]

    jobs = [(n, n_pos, trial) for n_pos, n in enumerate(n_list) for trial in range(trials)]
    with ThreadPoolExecutor(max_workers=worker_count(threads)) as pool:
        rows = list(pool.map(lambda job: _one_trial(mu, kernel, phi, A, job[0], job[1], job[2], seed, hull), jobs))

    summary = {}
    for n in n_list:
        deviations = [r["deviation"] for r in rows if r["n"] == n]
        summary[n] = summarize_deviations(deviations)
        s = summary[n]
        print(f"[GC] n = {n:4d} | mean = {float(s['mean']):.4f} | max = {float(s['max']):.4f} "
              f"| 95% CI = ({s['ci'][0]:.4f}, {s['ci'][1]:.4f})")
    return GCRun(name, str(phi), params, n_list, trials, seed, rows, summary, hull)
