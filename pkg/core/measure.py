"""
Keisler measures on finite type spaces.

Weights are exact `Fraction`s aligned with `space.atoms`; every constructor
checks that they sum to exactly 1. Events are either phi-formulas, decided
atom by atom through the space, or explicit sets of atoms.
"""
from fractions import Fraction
from itertools import product as cartesian

from core.errors import MeasureError
from core.logic import PhiAnd, PhiInstance, PhiNot, PhiOr
from core.typespace import restriction_map

PHI_NODES = (PhiInstance, PhiAnd, PhiOr, PhiNot)


def as_fraction(value):
    """Fraction from a Fraction, an int or a "p/q" string. Floats are refused."""
    if isinstance(value, float):
        raise MeasureError(f"weights must be exact rationals, got float {value!r}")
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise MeasureError(f"bad rational {value!r}: {exc}") from None


def atom_index(space, atom):
    if isinstance(atom, int):
        if not 0 <= atom < len(space):
            raise MeasureError(f"atom index {atom} outside the space of {len(space)} atoms")
        return atom
    try:
        return space.index(atom)
    except ValueError:
        raise MeasureError(f"{atom!r} is not an atom of {space!r}") from None


class KeislerMeasure:
    """Finitely supported probability measure on the atoms of a TypeSpace."""

    def __init__(self, space, weights):
        self.space = space
        if isinstance(weights, dict):
            aligned = [Fraction(0)] * len(space)
            for atom, w in weights.items():
                aligned[self._index(atom)] += as_fraction(w)
            weights = aligned
        weights = tuple(as_fraction(w) for w in weights)
        if len(weights) != len(space):
            raise MeasureError(f"{len(weights)} weights for a space of {len(space)} atoms")
        if any(w < 0 for w in weights):
            raise MeasureError(f"negative weight in {weights}")
        total = sum(weights, Fraction(0))
        if total != 1:
            raise MeasureError(f"weights sum to {total}, not 1")
        self.weights = weights

    def _index(self, atom):
        return atom_index(self.space, atom)

    def weight(self, atom):
        return self.weights[self._index(atom)]

    def measure_of(self, theta):
        if isinstance(theta, PHI_NODES):
            return sum((w for i, w in enumerate(self.weights) if w and self.space.decides(i, theta)), Fraction(0))
        indices = {self._index(a) for a in theta}
        return sum((self.weights[i] for i in sorted(indices)), Fraction(0))

    def support_indices(self):
        return tuple(i for i, w in enumerate(self.weights) if w > 0)

    def support(self):
        return tuple(self.space.atoms[i] for i in self.support_indices())

    def items(self):
        return [(self.space.atoms[i], self.weights[i]) for i in self.support_indices()]

    def __eq__(self, other):
        if not isinstance(other, KeislerMeasure):
            return NotImplemented
        return self.space.same_atoms(other.space) and self.weights == other.weights

    __hash__ = None

    def __repr__(self):
        parts = ", ".join(f"{atom.label}:{w}" for atom, w in self.items())
        return f"KeislerMeasure({parts})"

    def to_dict(self):
        return {atom.label: f"{w.numerator}/{w.denominator}" for atom, w in self.items()}


# ---------------------------------------------------------------- constructors

def uniform(space):
    n = len(space)
    return KeislerMeasure(space, [Fraction(1, n)] * n)


def dirac(space, p):
    weights = [Fraction(0)] * len(space)
    weights[atom_index(space, p)] = Fraction(1)
    return KeislerMeasure(space, weights)


def average(space, atoms):
    """Av(p_1, ..., p_n): each listed atom gets 1/n per occurrence."""
    atoms = list(atoms)
    if not atoms:
        raise MeasureError("average of an empty list of atoms")
    weights = {}
    for a in atoms:
        weights[a] = weights.get(a, Fraction(0)) + Fraction(1, len(atoms))
    return KeislerMeasure(space, weights)


def measure_of(mu, theta):
    return mu.measure_of(theta)


def average_value(space, sample, theta):
    """Av(p_1..p_n; theta) = |{i : theta in p_i}| / n, exact."""
    sample = list(sample)
    if not sample:
        raise MeasureError("average over an empty sample")
    hits = 0
    for a in sample:
        if space.decides(atom_index(space, a), theta):
            hits += 1
    return Fraction(hits, len(sample))


def support(mu):
    return mu.support()


def is_purely_atomic_trivial(mu, U=None):
    """Every support atom is realized, and realized inside U when U is given."""
    for atom in mu.support():
        if not atom.is_realized():
            return False
        if U is not None and any(e >= U.size for e in atom.elements):
            return False
    return True


# ---------------------------------------------------------------- products

class ProductMeasure:
    """mu^k on k-tuples of atoms of mu's space."""

    def __init__(self, factor, k):
        if int(k) < 1:
            raise MeasureError(f"product power must be positive, got {k}")
        self.factor = factor
        self.k = int(k)

    def weight(self, atoms):
        atoms = tuple(atoms)
        if len(atoms) != self.k:
            raise MeasureError(f"tuple of {len(atoms)} atoms for a {self.k}-fold product")
        w = Fraction(1)
        for a in atoms:
            w *= self.factor.weight(a)
        return w

    def support_tuples(self):
        return cartesian(self.factor.support_indices(), repeat=self.k)

    def mass(self, event):
        """Mass of a set of atom tuples, or of a predicate on index tuples."""
        if callable(event):
            return sum((self.weight(t) for t in self.support_tuples() if event(t)), Fraction(0))
        seen = set()
        total = Fraction(0)
        for t in event:
            key = tuple(self.factor._index(a) for a in t)
            if len(key) != self.k:
                raise MeasureError(f"tuple of {len(key)} atoms for a {self.k}-fold product")
            if key not in seen:
                seen.add(key)
                total += self.weight(key)
        return total


def product(mu, k):
    return ProductMeasure(mu, k)


def product_of_event(mu, k, E):
    return ProductMeasure(mu, k).mass(E)


# ---------------------------------------------------------------- maps and mixtures

def pushforward(mu, mapping, target=None):
    """
    Image measure along an atom map. `mapping` is a tuple of target indices
    (as returned by restriction_map), a dict, or a callable on source atoms.
    """
    target = mu.space if target is None else target
    weights = [Fraction(0)] * len(target)
    for i, w in enumerate(mu.weights):
        if not w:
            continue
        source = mu.space.atoms[i]
        if isinstance(mapping, (tuple, list)):
            image = mapping[i]
        elif isinstance(mapping, dict):
            image = mapping.get(source, mapping.get(i))
        else:
            image = mapping(source)
        if image is None:
            raise MeasureError(f"atom map is undefined on {source!r}")
        j = image if isinstance(image, int) else target.index(image)
        weights[j] += w
    return KeislerMeasure(target, weights)


def restrict_measure(mu, A):
    """mu restricted to the sub-base A, with the restricted space."""
    small, mapping = restriction_map(mu.space, A)
    return pushforward(mu, mapping, small)


def convex_combine(r, mu, nu):
    r = as_fraction(r)
    if not 0 <= r <= 1:
        raise MeasureError(f"mixing weight {r} is outside [0, 1]")
    if not mu.space.same_atoms(nu.space):
        raise MeasureError("convex combination of measures on different spaces")
    return KeislerMeasure(mu.space, [r * a + (1 - r) * b for a, b in zip(mu.weights, nu.weights)])


def convexity_inequality(r, mu, nu, sample, theta):
    """
    Both sides of |Av - lam(theta)| <= r|Av - mu(theta)| + (1-r)|Av - nu(theta)|
    with lam = r mu + (1-r) nu and Av taken over `sample`.
    """
    r = as_fraction(r)
    lam = convex_combine(r, mu, nu)
    av = average_value(mu.space, sample, theta)
    lhs = abs(av - lam.measure_of(theta))
    rhs = r * abs(av - mu.measure_of(theta)) + (1 - r) * abs(av - nu.measure_of(theta))
    return {"average": av, "lhs": lhs, "rhs": rhs, "holds": lhs <= rhs}
