"""
Trace matrices, phi-type spaces, restriction maps and the finite-fragment
checks of finite satisfiability and definability.

The fragment checks only look at finitely many formulas and parameters; their
reports say so (`method = "fragment-check"`).
"""
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from core.errors import TypeSpaceError
from core.logic import evaluate_phi_formula, instance, phi_not, phi_text
from core.theories import ExtensionContext, RealizedAtom


@dataclass(frozen=True, eq=False)
class TraceMatrix:
    rows: tuple
    cols: tuple
    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool).reshape(len(self.rows), len(self.cols))
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "rows", tuple(self.rows))
        object.__setattr__(self, "cols", tuple(self.cols))

    @property
    def shape(self):
        return self.bits.shape

    def row_strings(self):
        return ["".join("1" if v else "0" for v in r) for r in self.bits]

    def transpose(self):
        return TraceMatrix(self.cols, self.rows, self.bits.T)


def trace_matrix(M, phi, rows, cols):
    rows = [tuple(r) for r in rows]
    cols = [tuple(c) for c in cols]
    bits = np.zeros((len(rows), len(cols)), dtype=bool)
    for i, a in enumerate(rows):
        for j, b in enumerate(cols):
            bits[i, j] = phi.holds(M, a, b)
    return TraceMatrix(tuple(rows), tuple(cols), bits)


class TypeSpace:
    """Finite phi-type space: atoms with pairwise distinct traces over the parameter base."""

    def __init__(self, structure, formula, params, atoms, bits=None, quotient=None):
        self.structure = structure
        self.formula = formula
        self.params = tuple(tuple(int(e) for e in b) for b in params)
        self.atoms = tuple(atoms)
        self.quotient = quotient
        self._decisions = {}

        for b in self.params:
            if len(b) != formula.y_arity:
                raise TypeSpaceError(f"parameter {b} does not have arity {formula.y_arity}")
        if bits is None:
            ctx = ExtensionContext(structure)
            bits = [atom.trace(ctx, formula, self.params) for atom in self.atoms]
        self.trace = TraceMatrix(tuple(a.label for a in self.atoms), self.params,
                                 np.asarray(bits, dtype=bool).reshape(len(self.atoms), len(self.params)))

        seen = {}
        for i, key in enumerate(self.trace.row_strings()):
            if key in seen:
                raise TypeSpaceError(
                    f"atoms {self.atoms[seen[key]].label} and {self.atoms[i].label} share the trace {key!r}; "
                    "extend the parameter base to separate them")
            seen[key] = i
        self._param_index = {b: j for j, b in enumerate(self.params)}

    def __len__(self):
        return len(self.atoms)

    def __repr__(self):
        return f"TypeSpace({len(self.atoms)} atoms over {len(self.params)} parameters, phi={self.formula})"

    def index(self, atom):
        return self.atoms.index(atom)

    def param_index(self, b):
        try:
            return self._param_index[tuple(b)]
        except KeyError:
            raise TypeSpaceError(f"parameter {tuple(b)} is not in the base of {self!r}") from None

    def columns_for(self, A=None):
        if A is None:
            return list(range(len(self.params)))
        return [self.param_index(b) for b in A]

    def context(self):
        return ExtensionContext(self.structure)

    def decides(self, i, theta):
        key = (i, theta)
        if key not in self._decisions:
            self._decisions[key] = self.atoms[i].decide_phi(self.context(), theta)
        return self._decisions[key]

    def same_atoms(self, other):
        return self is other or (self.structure is other.structure and self.atoms == other.atoms)


def realized_type_space(M, phi, param_base=None):
    """One Realized atom per distinct trace row among M^|x|, with the quotient map."""
    params = list(M.tuples(phi.y_arity)) if param_base is None else [tuple(b) for b in param_base]
    rows = list(M.tuples(phi.x_arity))
    trace = trace_matrix(M, phi, rows, params)
    classes = {}
    atoms, bits, quotient = [], [], {}
    for i, (a, key) in enumerate(zip(rows, trace.row_strings())):
        if key not in classes:
            classes[key] = len(atoms)
            atoms.append(RealizedAtom(a))
            bits.append(trace.bits[i])
        quotient[a] = classes[key]
    return TypeSpace(M, phi, params, atoms, bits=bits, quotient=quotient)


def restriction_map(space, A):
    """Quotient type space over the sub-base A and the surjection big atom -> small atom."""
    A = [tuple(b) for b in A]
    if len(set(A)) != len(A):
        raise TypeSpaceError("restriction base has repeated parameters")
    try:
        columns = space.columns_for(A)
    except TypeSpaceError:
        raise TypeSpaceError(f"{A} is not a sublist of the base of {space!r}") from None
    sub = space.trace.bits[:, columns]
    classes, atoms, bits, mapping = {}, [], [], []
    for i, r in enumerate(sub):
        key = r.tobytes()
        if key not in classes:
            classes[key] = len(atoms)
            atoms.append(space.atoms[i])
            bits.append(r)
        mapping.append(classes[key])
    quotient = None
    if space.quotient is not None:
        quotient = {a: mapping[i] for a, i in space.quotient.items()}
    small = TypeSpace(space.structure, space.formula, A, atoms,
                      bits=np.asarray(bits, dtype=bool).reshape(len(atoms), len(A)), quotient=quotient)
    return small, tuple(mapping)


# ---------------------------------------------------------------- fragment checks

@dataclass
class FragmentCheck:
    holds: bool
    witness: object = None
    fragment: tuple = ()
    checked: int = 0
    method: str = "fragment-check"
    details: dict = field(default_factory=dict)

    def to_dict(self):
        witness = self.witness
        if witness is not None and not isinstance(witness, (tuple, list)):
            witness = phi_text(witness)
        return {
            "holds": self.holds,
            "witness": witness,
            "fragment": list(self.fragment),
            "checked": self.checked,
            "method": self.method,
        }


def default_battery(phi, M_sub):
    """Every instance phi(x, b) and its negation, b ranging over the fragment."""
    battery = []
    for b in product(M_sub, repeat=phi.y_arity):
        battery.append(instance(phi, b))
        battery.append(phi_not(instance(phi, b)))
    return battery


def _realized_in(M, theta, M_sub, arity):
    return any(evaluate_phi_formula(M, theta, a) for a in product(M_sub, repeat=arity))


def finitely_satisfiable_in(q, M_sub, battery, structure=None):
    """
    Atom: every battery formula q decides positively is realized in M_sub.
    Measure: every battery formula of positive measure is realized in M_sub.
    """
    M_sub = tuple(M_sub)
    if hasattr(q, "weights"):
        M = q.space.structure
        arity = q.space.formula.x_arity
        positive = lambda theta: q.measure_of(theta) > 0
    else:
        if structure is None:
            raise TypeError("an atom needs the structure it lives over")
        M = structure
        arity = q.arity
        ctx = ExtensionContext(structure)
        positive = lambda theta: q.decide_phi(ctx, theta)
    for n, theta in enumerate(battery, start=1):
        if positive(theta) and not _realized_in(M, theta, M_sub, arity):
            return FragmentCheck(False, theta, M_sub, n)
    return FragmentCheck(True, None, M_sub, len(battery))


def definable_over_fragment(mu, phi, M_sub, U=None):
    """
    True iff parameters b, b' of U with equal phi*-traces over M_sub always get
    equal measure mu(phi(x, b)) = mu(phi(x, b')).
    """
    U = mu.space.structure if U is None else U
    M_sub = tuple(M_sub)
    objects = list(product(M_sub, repeat=phi.x_arity))
    classes = {}
    values = {}
    checked = 0
    for b in U.tuples(phi.y_arity):
        key = tuple(phi.holds(U, a, b) for a in objects)
        value = mu.measure_of(instance(phi, b))
        values[b] = value
        checked += 1
        if key in classes and values[classes[key]] != value:
            first = classes[key]
            return FragmentCheck(False, (first, b), M_sub, checked,
                                 details={"values": (values[first], value)})
        classes.setdefault(key, b)
    return FragmentCheck(True, None, M_sub, checked)


# ---------------------------------------------------------------- good extension surrogate

@dataclass
class SaturationReport:
    level: int
    n_max: int
    missing: object = None

    def to_dict(self):
        return {"level": self.level, "n_max": self.n_max,
                "missing_pattern": None if self.missing is None else repr(self.missing)}


def _pattern(M, phi, M_sub, elements):
    own = tuple(tuple(phi.holds(M, (e,), (m,)) for m in M_sub) for e in elements)
    mutual = tuple(phi.holds(M, (e,), (f,)) for e in elements for f in elements)
    equal = tuple(e == f for e in elements for f in elements)
    return own, mutual, equal


def saturation_level(ctx, M_sub, phi, n_max=2):
    """
    Largest n <= n_max such that every n-element trace pattern over M_sub met
    anywhere in the context is already met inside the base structure.
    """
    if phi.x_arity != 1 or phi.y_arity != 1:
        raise ValueError("saturation level is defined for phi(x; y) with single variables")
    M = ctx.structure()
    M_sub = tuple(M_sub)
    level = 0
    for n in range(1, n_max + 1):
        inside = {_pattern(M, phi, M_sub, t) for t in product(range(ctx.base.size), repeat=n)}
        for t in product(range(ctx.size), repeat=n):
            pattern = _pattern(M, phi, M_sub, t)
            if pattern not in inside:
                return SaturationReport(level, n_max, {"tuple": t, "pattern": pattern})
        level = n
    return SaturationReport(level, n_max)
