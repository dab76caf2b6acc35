"""
Type atoms and the extension contexts in which they are realized.

A Realized atom is an element tuple of the base structure. A limit atom is an
invariant type handed to a theory plugin: realizing it adds one fresh element
whose relations to every existing element are fixed by the plugin's rule.
Deciding an instance phi(x, e) for a limit atom means realizing it in a
scratch clone of the context and evaluating there.
"""
from dataclasses import dataclass, field

from config import THEORY_DEFAULTS
from core.errors import UndecidableInstance
from core.logic import FiniteStructure, LT, fold_phi


@dataclass
class FreshElement:
    element: int
    atom: object
    meta: dict = field(default_factory=dict)


class ExtensionContext:
    """Base structure plus fresh elements, in realization order. Single writer."""

    def __init__(self, base):
        self.base = base
        self._tables = {name: set(rows) for name, rows in base.tables.items()}
        self._size = base.size
        self.fresh = []
        self._snapshot = base

    @property
    def size(self):
        return self._size

    def is_fresh(self, element):
        return element >= self.base.size

    def fresh_info(self, element):
        return self.fresh[element - self.base.size]

    def holds(self, relation, row):
        return tuple(row) in self._tables[relation]

    def add_element(self, atom, rows_by_relation, meta=None):
        element = self._size
        for name, rows in rows_by_relation.items():
            if name not in self._tables:
                raise UndecidableInstance(f"relation {name} is not in the signature of the base structure")
            for row in rows:
                if element not in row or any(e > element for e in row):
                    raise ValueError(f"plugin produced foreign tuple {row} for fresh element {element}")
                self._tables[name].add(tuple(row))
        self._size += 1
        self.fresh.append(FreshElement(element, atom, dict(meta or {})))
        self._snapshot = None
        return element

    def structure(self):
        if self._snapshot is None:
            self._snapshot = FiniteStructure(self.base.signature, self._size,
                                             {k: frozenset(v) for k, v in self._tables.items()},
                                             self.base.constants)
        return self._snapshot

    def clone(self):
        other = ExtensionContext.__new__(ExtensionContext)
        other.base = self.base
        other._tables = {name: set(rows) for name, rows in self._tables.items()}
        other._size = self._size
        other.fresh = [FreshElement(f.element, f.atom, dict(f.meta)) for f in self.fresh]
        other._snapshot = self._snapshot
        return other

    def realization_order(self):
        return [(f.element, f.atom.label) for f in self.fresh]


class TypeAtom:
    """An invariant type: something that can be realized and can decide instances."""
    plugin = "abstract"
    arity = 1

    @property
    def label(self):
        raise NotImplementedError

    def state(self):
        return {}

    def is_realized(self):
        return False

    def realize(self, ctx):
        raise NotImplementedError

    def decide(self, ctx, phi, params):
        scratch = ctx.clone()
        witness = self.realize(scratch)
        return phi.holds(scratch.structure(), witness, params)

    def decide_phi(self, ctx, theta):
        scratch = ctx.clone()
        witness = self.realize(scratch)
        M = scratch.structure()
        return fold_phi(theta, lambda inst: inst.formula.holds(M, witness, inst.params))

    def trace(self, ctx, phi, params_list):
        scratch = ctx.clone()
        witness = self.realize(scratch)
        M = scratch.structure()
        return [phi.holds(M, witness, b) for b in params_list]

    def witness(self, ctx):
        """Elements standing for the atom inside ctx: itself when realized, else a fresh realizer."""
        return self.realize(ctx)

    def __eq__(self, other):
        if not isinstance(other, TypeAtom):
            return NotImplemented
        return type(self) is type(other) and self.label == other.label and self.state() == other.state()

    def __hash__(self):
        return hash((self.plugin, self.label))

    def __repr__(self):
        return f"<{self.label}>"


class RealizedAtom(TypeAtom):
    plugin = "realized"

    def __init__(self, elements):
        self.elements = tuple(int(e) for e in elements)
        self.arity = len(self.elements)

    @property
    def label(self):
        return "realized(" + ",".join(str(e) for e in self.elements) + ")"

    def state(self):
        return {"elements": list(self.elements)}

    def is_realized(self):
        return True

    def decide(self, ctx, phi, params):
        return phi.holds(ctx.structure(), self.elements, params)

    def decide_phi(self, ctx, theta):
        M = ctx.structure()
        return fold_phi(theta, lambda inst: inst.formula.holds(M, self.elements, inst.params))

    def trace(self, ctx, phi, params_list):
        M = ctx.structure()
        return [phi.holds(M, self.elements, b) for b in params_list]

    def witness(self, ctx):
        return self.elements

    def realize(self, ctx):
        """
        Fresh copies d_i of the elements a_i, related to everything as the a_i are.
        In a relation that orders the context strictly, each copy sits just above
        its original.
        """
        first = ctx.size
        originals = list(dict.fromkeys(self.elements))
        copy = {a: first + i for i, a in enumerate(originals)}
        orders = [name for name, arity in ctx.base.signature.relations
                  if arity == 2 and is_strict_linear_order(ctx.structure(), name)]
        rows_by_relation = {}
        for name, rows in ctx._tables.items():
            new_rows = set()
            for row in rows:
                if not any(e in copy for e in row):
                    continue
                # every partial substitution of originals by copies, restricted to
                # rows that mention a copy
                slots = [i for i, e in enumerate(row) if e in copy]
                for mask in range(1, 1 << len(slots)):
                    new = list(row)
                    for bit, i in enumerate(slots):
                        if mask >> bit & 1:
                            new[i] = copy[row[i]]
                    new_rows.add(tuple(new))
            if name in orders:
                new_rows.update((a, d) for a, d in copy.items())
            rows_by_relation[name] = new_rows
        # add copies one at a time so each tuple belongs to the element that closes it
        for i, a in enumerate(originals):
            element = first + i
            rows = {name: {r for r in rs if element in r and max(r) == element}
                    for name, rs in rows_by_relation.items()}
            ctx.add_element(self, rows, {"copy_of": a})
        return tuple(copy[a] for a in self.elements)


class LimitAtom(TypeAtom):
    """User hook: subclass and implement `extend(ctx) -> (rows_by_relation, meta)`."""
    plugin = "limit"

    def extend(self, ctx):
        raise NotImplementedError

    def realize(self, ctx):
        rows, meta = self.extend(ctx)
        return (ctx.add_element(self, rows, meta),)


class DLOCutAtom(LimitAtom):
    """
    The type infinitesimally close to base element `position` on `side` (+ above,
    - below). Against fresh elements it answers as its witness, the base element
    at the cut, answers: later realizations of the same cut sit closer to it.
    """
    plugin = "dlo-cut"

    def __init__(self, position, side, relation=None):
        if side not in ("+", "-"):
            raise ValueError(f"cut side must be '+' or '-', got {side!r}")
        self.position = int(position)
        self.side = side
        self.relation = relation or THEORY_DEFAULTS["dlo"]["relation"]

    @property
    def label(self):
        return f"dlo-cut({self.position}{self.side})"

    def state(self):
        return {"position": self.position, "side": self.side}

    def _rank(self, ctx, element):
        return sum(1 for e in range(ctx.base.size) if ctx.base.holds(self.relation, (e, element)))

    def _key(self, ctx, element):
        if not ctx.is_fresh(element):
            return (self._rank(ctx, element), 1, 0)
        meta = ctx.fresh_info(element).meta
        if "copy_of" in meta:
            return self._key(ctx, meta["copy_of"])
        key = meta.get("dlo_key")
        if key is None:
            raise UndecidableInstance(
                f"{self.label} cannot place fresh element {element} created by {ctx.fresh_info(element).atom.label}")
        return key

    def extend(self, ctx):
        if not ctx.base.signature.has_relation(self.relation):
            raise UndecidableInstance(f"{self.label} needs relation {self.relation} in the base structure")
        if not 0 <= self.position < ctx.base.size:
            raise UndecidableInstance(f"{self.label}: cut position outside the base domain")
        element = ctx.size
        rank = self._rank(ctx, self.position)
        key = (rank, 0, element) if self.side == "-" else (rank, 2, -element)
        rows = set()
        for e in range(ctx.size):
            rows.add((e, element) if self._key(ctx, e) < key else (element, e))
        return {self.relation: rows}, {"dlo_key": key}


class RandomGraphAtom(LimitAtom):
    """Generic random-graph vertex: adjacency to base vertex i is bit i of `bits`."""
    plugin = "rg-generic"

    def __init__(self, bits, fresh_adjacency=None, relation=None):
        if any(c not in "01" for c in bits):
            raise ValueError(f"adjacency rule must be a bitstring, got {bits!r}")
        self.bits = bits
        defaults = THEORY_DEFAULTS["random_graph"]
        self.fresh_adjacency = defaults["fresh_adjacency"] if fresh_adjacency is None else int(fresh_adjacency)
        self.relation = relation or defaults["relation"]

    @property
    def label(self):
        return f"rg-generic({self.bits})"

    def state(self):
        return {"bits": self.bits, "fresh_adjacency": self.fresh_adjacency}

    def extend(self, ctx):
        if len(self.bits) != ctx.base.size:
            raise UndecidableInstance(
                f"{self.label} has {len(self.bits)} bits for a base of {ctx.base.size} vertices")
        if not ctx.base.signature.has_relation(self.relation):
            raise UndecidableInstance(f"{self.label} needs relation {self.relation} in the base structure")
        element = ctx.size
        rows = set()
        for v in range(ctx.size):
            adjacent = self.bits[v] == "1" if v < ctx.base.size else bool(self.fresh_adjacency)
            if adjacent:
                rows.add((element, v))
                rows.add((v, element))
        return {self.relation: rows}, {}


def realize(ctx, q):
    """Add a realizer of q to ctx and return its element tuple."""
    return q.realize(ctx)


def parse_atom(tokens):
    """Atom declaration tokens: `realized 0 1`, `dlo-cut 3 +`, `rg-generic 0101 [fresh=1]`."""
    kind, args = tokens[0], tokens[1:]
    if kind == "realized":
        if not args:
            raise ValueError("realized atom needs an element tuple")
        return RealizedAtom(int(a) for a in args)
    if kind == "dlo-cut":
        if len(args) != 2:
            raise ValueError("dlo-cut atom needs <position> <side>")
        return DLOCutAtom(int(args[0]), args[1])
    if kind == "rg-generic":
        if not args or len(args) > 2:
            raise ValueError("rg-generic atom needs <bitstring> [fresh=0|1]")
        fresh = None
        if len(args) == 2:
            key, _, value = args[1].partition("=")
            if key != "fresh" or value not in ("0", "1"):
                raise ValueError(f"bad rg-generic option {args[1]!r}")
            fresh = int(value)
        return RandomGraphAtom(args[0], fresh)
    raise ValueError(f"unknown atom kind {kind!r}")


def is_strict_linear_order(M, relation=LT):
    """Irreflexive, total and transitive: a tournament whose out-degrees are 0..n-1."""
    n = M.size
    less = M.tables[relation]
    if len(less) != n * (n - 1) // 2:
        return False
    for a, b in less:
        if a == b or (b, a) in less:
            return False
    above = [0] * n
    for a, _ in less:
        above[a] += 1
    return sorted(above) == list(range(n))


def is_simple_graph(M, relation="E"):
    edges = M.tables[relation]
    return all(a != b and (b, a) in edges for a, b in edges)
