"""
Signatures, finite structures, the formula AST and its Tarski evaluation,
variable partitions and the Boolean algebra of phi-formulas.

Everything here is immutable after construction.
"""
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

from core.errors import EvaluationError, PartitionError, SignatureError

LT = "lt"


# ---------------------------------------------------------------- signatures

@dataclass(frozen=True)
class Signature:
    relations: tuple = ()
    constants: tuple = ()

    def __post_init__(self):
        relations = tuple((str(name), int(arity)) for name, arity in self.relations)
        constants = tuple(str(name) for name in self.constants)
        object.__setattr__(self, "relations", relations)
        object.__setattr__(self, "constants", constants)

        names = [name for name, _ in relations] + list(constants)
        if len(set(names)) != len(names):
            raise SignatureError(f"relation and constant names must be pairwise distinct: {names}")
        for name, arity in relations:
            if arity < 1:
                raise SignatureError(f"relation {name} has non-positive arity {arity}")

    def arity(self, name):
        return dict(self.relations).get(name)

    def has_relation(self, name):
        return name in dict(self.relations)

    def has_constant(self, name):
        return name in self.constants


@dataclass(frozen=True, eq=False)
class FiniteStructure:
    """A finite relational structure on the domain {0, ..., size-1}."""
    signature: Signature
    size: int
    tables: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.size) < 1:
            raise ValueError(f"structure size must be positive, got {self.size}")
        object.__setattr__(self, "size", int(self.size))

        tables = {}
        for name, arity in self.signature.relations:
            rows = frozenset(tuple(int(e) for e in row) for row in self.tables.get(name, ()))
            for row in rows:
                if len(row) != arity:
                    raise SignatureError(f"tuple {row} in {name} does not have arity {arity}")
                if any(e < 0 or e >= self.size for e in row):
                    raise EvaluationError(f"tuple {row} in {name} leaves the domain 0..{self.size - 1}")
            tables[name] = rows
        unknown = set(self.tables) - set(tables)
        if unknown:
            raise SignatureError(f"tables for undeclared relations: {sorted(unknown)}")
        object.__setattr__(self, "tables", tables)

        constants = {str(k): int(v) for k, v in self.constants.items()}
        for name in self.signature.constants:
            if name not in constants:
                raise SignatureError(f"constant {name} is not interpreted")
        for name, value in constants.items():
            if not self.signature.has_constant(name):
                raise SignatureError(f"interpretation given for undeclared constant {name}")
            if value < 0 or value >= self.size:
                raise EvaluationError(f"constant {name} = {value} is outside the domain")
        object.__setattr__(self, "constants", constants)

    @property
    def domain(self):
        return range(self.size)

    def holds(self, relation, row):
        return tuple(row) in self.tables[relation]

    def tuples(self, arity):
        return product(range(self.size), repeat=arity)

    def agrees_with(self, other, elements):
        """True when both structures induce the same relations on `elements`."""
        inside = set(elements)
        for name, _ in self.signature.relations:
            mine = {row for row in self.tables[name] if set(row) <= inside}
            theirs = {row for row in other.tables.get(name, ()) if set(row) <= inside}
            if mine != theirs:
                return False
        return True

    def __str__(self):
        rels = ", ".join(f"{name}/{arity}:{len(self.tables[name])}" for name, arity in self.signature.relations)
        return f"FiniteStructure(N={self.size}; {rels})"


def linear_order(n):
    """The strict order 0 < 1 < ... < n-1 on the relation `lt`."""
    sig = Signature(relations=((LT, 2),))
    return FiniteStructure(sig, n, {LT: [(a, b) for a in range(n) for b in range(n) if a < b]})


def graph(n, edges, relation="E"):
    sig = Signature(relations=((relation, 2),))
    rows = set()
    for a, b in edges:
        if a == b:
            raise ValueError(f"loop at vertex {a}: graphs are simple")
        rows.add((a, b))
        rows.add((b, a))
    return FiniteStructure(sig, n, {relation: rows})


def empty_graph(n, relation="E"):
    return graph(n, [], relation)


def complete_graph(n, relation="E"):
    return graph(n, [(a, b) for a in range(n) for b in range(a + 1, n)], relation)


def random_graph(n, edge_prob=0.5, seed=0, relation="E"):
    rng = np.random.default_rng(seed)
    edges = [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < edge_prob]
    return graph(n, edges, relation)


# ---------------------------------------------------------------- formulas

@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Const:
    name: str

    def __str__(self):
        return self.name


class Formula:
    """Marker base class for AST nodes."""

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Rel(Formula):
    name: str
    args: tuple


@dataclass(frozen=True)
class Eq(Formula):
    left: object
    right: object


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


BINARY = (And, Or, Implies)
QUANTIFIERS = (Exists, Forall)


def _term_vars(terms):
    return frozenset(t.name for t in terms if isinstance(t, Var))


@lru_cache(maxsize=None)
def free_vars(f):
    if isinstance(f, Rel):
        return _term_vars(f.args)
    if isinstance(f, Eq):
        return _term_vars((f.left, f.right))
    if isinstance(f, Not):
        return free_vars(f.body)
    if isinstance(f, BINARY):
        return free_vars(f.left) | free_vars(f.right)
    if isinstance(f, QUANTIFIERS):
        return free_vars(f.body) - {f.var}
    raise TypeError(f"not a formula: {f!r}")


def all_names(f):
    """Every variable name occurring in f, bound or free."""
    if isinstance(f, Rel):
        return _term_vars(f.args)
    if isinstance(f, Eq):
        return _term_vars((f.left, f.right))
    if isinstance(f, Not):
        return all_names(f.body)
    if isinstance(f, BINARY):
        return all_names(f.left) | all_names(f.right)
    if isinstance(f, QUANTIFIERS):
        return all_names(f.body) | {f.var}
    raise TypeError(f"not a formula: {f!r}")


def to_text(f):
    """Print in the concrete grammar; binary children are always parenthesized."""
    if isinstance(f, Rel):
        if f.name == LT and len(f.args) == 2:
            return f"{f.args[0]} < {f.args[1]}"
        return f"{f.name}({', '.join(str(t) for t in f.args)})"
    if isinstance(f, Eq):
        return f"{f.left} = {f.right}"
    if isinstance(f, Not):
        return f"!{_wrapped(f.body, atoms_too=True)}"
    if isinstance(f, And):
        return f"{_wrapped(f.left)} & {_wrapped(f.right)}"
    if isinstance(f, Or):
        return f"{_wrapped(f.left)} | {_wrapped(f.right)}"
    if isinstance(f, Implies):
        return f"{_wrapped(f.left)} -> {_wrapped(f.right)}"
    if isinstance(f, Exists):
        return f"exists {f.var} ({to_text(f.body)})"
    if isinstance(f, Forall):
        return f"forall {f.var} ({to_text(f.body)})"
    raise TypeError(f"not a formula: {f!r}")


def _wrapped(f, atoms_too=False):
    text = to_text(f)
    infix_atom = isinstance(f, Eq) or (isinstance(f, Rel) and f.name == LT and len(f.args) == 2)
    if isinstance(f, BINARY) or (atoms_too and infix_atom):
        return f"({text})"
    return text


# ---------------------------------------------------------------- evaluation

def _compile_term(t):
    if isinstance(t, Var):
        name = t.name
        return lambda M, env: env[name]
    name = t.name

    def constant(M, env):
        try:
            return M.constants[name]
        except KeyError:
            raise EvaluationError(f"constant {name} is not interpreted in {M}") from None
    return constant


@lru_cache(maxsize=4096)
def compile_formula(f):
    """Turn an AST into a closure (structure, env) -> bool."""
    if isinstance(f, Rel):
        name = f.name
        args = tuple(_compile_term(t) for t in f.args)

        def rel(M, env):
            try:
                table = M.tables[name]
            except KeyError:
                raise SignatureError(f"relation {name} is not in the signature of {M}") from None
            return tuple(a(M, env) for a in args) in table
        return rel
    if isinstance(f, Eq):
        left, right = _compile_term(f.left), _compile_term(f.right)
        return lambda M, env: left(M, env) == right(M, env)
    if isinstance(f, Not):
        body = compile_formula(f.body)
        return lambda M, env: not body(M, env)
    if isinstance(f, And):
        left, right = compile_formula(f.left), compile_formula(f.right)
        return lambda M, env: left(M, env) and right(M, env)
    if isinstance(f, Or):
        left, right = compile_formula(f.left), compile_formula(f.right)
        return lambda M, env: left(M, env) or right(M, env)
    if isinstance(f, Implies):
        left, right = compile_formula(f.left), compile_formula(f.right)
        return lambda M, env: (not left(M, env)) or right(M, env)
    if isinstance(f, Exists):
        var, body = f.var, compile_formula(f.body)
        return lambda M, env: any(body(M, {**env, var: e}) for e in range(M.size))
    if isinstance(f, Forall):
        var, body = f.var, compile_formula(f.body)
        return lambda M, env: all(body(M, {**env, var: e}) for e in range(M.size))
    raise TypeError(f"not a formula: {f!r}")


def evaluate(M, f, assignment):
    missing = free_vars(f) - set(assignment)
    if missing:
        raise EvaluationError(f"unassigned free variables {sorted(missing)} in {to_text(f)}")
    for var, value in assignment.items():
        if not 0 <= value < M.size:
            raise EvaluationError(f"{var} -> {value} is outside the domain 0..{M.size - 1}")
    return compile_formula(f)(M, dict(assignment))


# ---------------------------------------------------------------- partitions

@dataclass(frozen=True)
class PartitionedFormula:
    """phi(x; y) with designated object tuple x and parameter tuple y."""
    formula: Formula
    object_vars: tuple
    param_vars: tuple

    def __post_init__(self):
        object.__setattr__(self, "object_vars", tuple(self.object_vars))
        object.__setattr__(self, "param_vars", tuple(self.param_vars))
        xs, ys = self.object_vars, self.param_vars
        if len(set(xs)) != len(xs) or len(set(ys)) != len(ys):
            raise PartitionError(f"repeated variable in partition {xs} ; {ys}")
        if set(xs) & set(ys):
            raise PartitionError(f"object and parameter tuples overlap: {sorted(set(xs) & set(ys))}")
        uncovered = free_vars(self.formula) - set(xs) - set(ys)
        if uncovered:
            raise PartitionError(f"partition does not cover free variables {sorted(uncovered)}")

    @property
    def x_arity(self):
        return len(self.object_vars)

    @property
    def y_arity(self):
        return len(self.param_vars)

    def assignment(self, a, b):
        a, b = tuple(a), tuple(b)
        if len(a) != self.x_arity or len(b) != self.y_arity:
            raise EvaluationError(
                f"arity mismatch: expected {self.x_arity}+{self.y_arity} elements, got {len(a)}+{len(b)}")
        return {**dict(zip(self.object_vars, a)), **dict(zip(self.param_vars, b))}

    def holds(self, M, a, b):
        return evaluate(M, self.formula, self.assignment(a, b))

    def dual(self):
        return dual(self)

    def __str__(self):
        return f"{to_text(self.formula)}  [{','.join(self.object_vars)} ; {','.join(self.param_vars)}]"


def dual(phi):
    """phi*(y; x) = phi(x; y)."""
    return PartitionedFormula(phi.formula, phi.param_vars, phi.object_vars)


# ---------------------------------------------------------------- phi-formulas

@dataclass(frozen=True)
class PhiInstance:
    formula: PartitionedFormula
    params: tuple

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(int(e) for e in self.params))
        if len(self.params) != self.formula.y_arity:
            raise EvaluationError(f"instance of {self.formula} needs {self.formula.y_arity} parameters")


@dataclass(frozen=True)
class PhiAnd:
    parts: tuple = ()


@dataclass(frozen=True)
class PhiOr:
    parts: tuple = ()


@dataclass(frozen=True)
class PhiNot:
    part: object


TOP = PhiAnd(())
BOTTOM = PhiOr(())


def instance(phi, params):
    return PhiInstance(phi, tuple(params))


def phi_and(*parts):
    return PhiAnd(tuple(parts))


def phi_or(*parts):
    return PhiOr(tuple(parts))


def phi_not(part):
    return PhiNot(part)


def instances(theta):
    if isinstance(theta, PhiInstance):
        yield theta
    elif isinstance(theta, PhiNot):
        yield from instances(theta.part)
    else:
        for part in theta.parts:
            yield from instances(part)


def object_arity(theta):
    """Shared object arity of the instances; None for constant formulas."""
    arities = {inst.formula.x_arity for inst in instances(theta)}
    if len(arities) > 1:
        raise EvaluationError(f"instances disagree on object arity: {sorted(arities)}")
    return arities.pop() if arities else None


def fold_phi(theta, decide):
    """Fold the Boolean tree, asking `decide(instance)` at the leaves."""
    if isinstance(theta, PhiInstance):
        return bool(decide(theta))
    if isinstance(theta, PhiNot):
        return not fold_phi(theta.part, decide)
    if isinstance(theta, PhiAnd):
        return all(fold_phi(part, decide) for part in theta.parts)
    if isinstance(theta, PhiOr):
        return any(fold_phi(part, decide) for part in theta.parts)
    raise TypeError(f"not a phi-formula: {theta!r}")


def evaluate_phi_formula(M, theta, a):
    a = tuple(a)
    arity = object_arity(theta)
    if arity is not None and arity != len(a):
        raise EvaluationError(f"phi-formula has object arity {arity}, got tuple {a}")
    return fold_phi(theta, lambda inst: inst.formula.holds(M, a, inst.params))


def phi_text(theta):
    if isinstance(theta, PhiInstance):
        params = ",".join(str(e) for e in theta.params)
        return f"[{to_text(theta.formula.formula)}]({params})"
    if isinstance(theta, PhiNot):
        return f"~{phi_text(theta.part)}"
    if not theta.parts:
        return "T" if isinstance(theta, PhiAnd) else "F"
    glue = " & " if isinstance(theta, PhiAnd) else " | "
    return "(" + glue.join(phi_text(p) for p in theta.parts) + ")"
