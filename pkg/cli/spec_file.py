"""
Experiment files.

    # comment
    structure U builtin linear-order 4        (or: structure U path/to/U.txt)
    structure M builtin linear-order 2        (optional small model, an initial segment of U)
    formula phi x ; y = x < y
    atom realized 0
    atom dlo-cut 3 +
    measure mu uniform
    measure lam weights 0:1/2 1:1/2
    param k_max 3

The first formula is the one measures and subcommands work with. Atoms are
numbered in declaration order. Structure paths are relative to the file.
"""
import json
import os
from dataclasses import dataclass, field
from fractions import Fraction

from core.errors import (
    FormulaSyntaxError, MeasureError, PartitionError, SignatureError, SpecError, TypeSpaceError,
)
from core.io import load_structure
from core.logic import complete_graph, dual, empty_graph, linear_order, random_graph
from core.measure import KeislerMeasure, average, dirac, uniform
from core.parser import parse_formula
from core.theories import parse_atom
from core.typespace import TypeSpace, realized_type_space

BUILTIN_STRUCTURES = {
    "linear-order": lambda n: linear_order(int(n)),
    "empty-graph": lambda n: empty_graph(int(n)),
    "complete-graph": lambda n: complete_graph(int(n)),
    "random-graph": lambda n, p="1/2", seed="0": random_graph(int(n), float(Fraction(p)), int(seed)),
}

MEASURE_KINDS = ("uniform", "dirac", "weights", "average")

POSITIVE_INT_PARAMS = ("k_max", "trials", "budget_tuples", "n_max", "mc_samples", "n", "witness_samples")
FRACTION_PARAMS = ("epsilon",)
MEASURE_PARAMS = ("measure", "left", "right")


@dataclass
class ExperimentSpec:
    path: str
    universe: object
    formulas: dict
    atoms: list = field(default_factory=list)
    measures: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    fragment: tuple = None

    @property
    def formula(self):
        return next(iter(self.formulas.values()))

    def measure(self, name=None):
        if name is None:
            if not self.measures:
                raise SpecError("the experiment declares no measure", self.path)
            return next(iter(self.measures.values()))
        if name not in self.measures:
            raise SpecError(f"unknown measure {name!r}", self.path)
        return self.measures[name]

    def param(self, key, default=None):
        values = self.params.get(key)
        return default if values is None else values

    def param_int(self, key, default=None):
        values = self.params.get(key)
        return default if values is None else int(values[0])

    def param_fractions(self, key, default=None):
        values = self.params.get(key)
        return default if values is None else [Fraction(v) for v in values]

    def override(self, key, values):
        self.params[key] = [str(v) for v in (values if isinstance(values, (list, tuple)) else [values])]


def _structure(tokens, base_dir, path, lineno):
    if not tokens:
        raise SpecError("structure line needs a file path or 'builtin <kind> <args>'", path, lineno)
    if tokens[0] == "builtin":
        if len(tokens) < 2 or tokens[1] not in BUILTIN_STRUCTURES:
            raise SpecError(f"unknown builtin structure; choose from {sorted(BUILTIN_STRUCTURES)}", path, lineno)
        try:
            return BUILTIN_STRUCTURES[tokens[1]](*tokens[2:])
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise SpecError(f"bad arguments for builtin {tokens[1]}: {exc}", path, lineno) from None
    target = tokens[0] if os.path.isabs(tokens[0]) else os.path.join(base_dir, tokens[0])
    if not os.path.exists(target):
        raise SpecError(f"structure file not found: {target}", path, lineno)
    return load_structure(target)


def _formula(rest, signature, path, lineno):
    head, sep, text = rest.partition("=")
    parts = head.split(None, 1)
    if not sep or len(parts) != 2 or ";" not in parts[1]:
        raise SpecError("expected 'formula <name> <x vars> ; <y vars> = <text>'", path, lineno)
    name, partition = parts
    xs, ys = (tuple(v for v in side.replace(",", " ").split()) for side in partition.split(";", 1))
    try:
        return name, parse_formula(text.strip(), (xs, ys), signature)
    except (FormulaSyntaxError, SignatureError, PartitionError) as exc:
        raise SpecError(f"formula {name}: {exc}", path, lineno) from None


def _atom_space(universe, phi, atoms, path, lineno):
    arities = {a.arity for a in atoms}
    if len(arities) != 1:
        raise SpecError("a measure mixes atoms of different arity", path, lineno)
    arity = arities.pop()
    if arity == phi.x_arity:
        formula = phi
    elif arity == phi.y_arity:
        formula = dual(phi)
    else:
        raise SpecError(f"atoms of arity {arity} fit neither side of {phi}", path, lineno)
    try:
        return TypeSpace(universe, formula, list(universe.tuples(formula.y_arity)), atoms)
    except TypeSpaceError as exc:
        raise SpecError(str(exc), path, lineno) from None


def _atom_id(token, atoms, path, lineno):
    try:
        i = int(token)
    except ValueError:
        raise SpecError(f"atom id must be an integer, got {token!r}", path, lineno) from None
    if not 0 <= i < len(atoms):
        raise SpecError(f"atom id {i} is not declared ({len(atoms)} atoms)", path, lineno)
    return i


def _measure(tokens, spec, path, lineno):
    kind, args = tokens[0], tokens[1:]
    phi, atoms = spec.formula, spec.atoms
    if kind not in MEASURE_KINDS:
        raise SpecError(f"unknown measure kind {kind!r}; choose from {list(MEASURE_KINDS)}", path, lineno)
    try:
        if kind == "uniform" and not args:
            return uniform(realized_type_space(spec.universe, phi))
        if kind == "weights":
            pairs = []
            for token in args:
                i, sep, w = token.partition(":")
                if not sep:
                    raise SpecError(f"expected <id>:<weight>, got {token!r}", path, lineno)
                pairs.append((_atom_id(i, atoms, path, lineno), Fraction(w)))
            ids = list(dict.fromkeys(i for i, _ in pairs))
            space = _atom_space(spec.universe, phi, [atoms[i] for i in ids], path, lineno)
            weights = [Fraction(0)] * len(space)
            for i, w in pairs:
                weights[ids.index(i)] += w
            return KeislerMeasure(space, weights)
        ids = [_atom_id(t, atoms, path, lineno) for t in args]
        if not ids:
            raise SpecError(f"measure kind {kind!r} needs atom ids", path, lineno)
        distinct = list(dict.fromkeys(ids))
        space = _atom_space(spec.universe, phi, [atoms[i] for i in distinct], path, lineno)
        if kind == "dirac":
            if len(ids) != 1:
                raise SpecError("dirac takes exactly one atom id", path, lineno)
            return dirac(space, 0)
        if kind == "uniform":
            return uniform(space)
        return average(space, [space.atoms[distinct.index(i)] for i in ids])
    except (MeasureError, ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"measure: {exc}", path, lineno) from None


def _check_params(spec, lines):
    path = spec.path
    for key, values in spec.params.items():
        lineno = lines.get(key)
        if not values:
            raise SpecError(f"param {key} has no value", path, lineno)
        try:
            if key in POSITIVE_INT_PARAMS:
                positive = all(int(v) >= 1 for v in values)
            elif key in FRACTION_PARAMS:
                positive = all(Fraction(v) > 0 for v in values)
            else:
                positive = True
        except (ValueError, ZeroDivisionError):
            raise SpecError(f"param {key} has a malformed value {values}", path, lineno) from None
        if not positive:
            raise SpecError(f"param {key} must be positive", path, lineno)
        if key in MEASURE_PARAMS and values[0] not in spec.measures:
            raise SpecError(f"param {key} names unknown measure {values[0]!r}", path, lineno)
        if key == "iterated" and values[0] not in spec.formulas:
            raise SpecError(f"param iterated names unknown formula {values[0]!r}", path, lineno)
        if key == "factors":
            for token in values:
                name, sep, names = token.partition(":")
                if not sep or name not in spec.measures or not names:
                    raise SpecError(f"expected <measure>:<vars> in factors, got {token!r}", path, lineno)


def parse_experiment(text, path="<experiment>", base_dir="."):
    """Parse and validate an experiment file; every problem is a SpecError with its line."""
    structures = {}
    formulas = {}
    atoms = []
    pending_measures = []
    params = {}
    param_lines = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, _, rest = line.partition(" ")
        tokens = rest.split()
        if head == "structure":
            if not tokens or tokens[0] not in ("U", "M"):
                raise SpecError("expected 'structure U ...' or 'structure M ...'", path, lineno)
            structures[tokens[0]] = _structure(tokens[1:], base_dir, path, lineno)
        elif head == "formula":
            if "U" not in structures:
                raise SpecError("declare 'structure U' before formulas", path, lineno)
            name, phi = _formula(rest, structures["U"].signature, path, lineno)
            if name in formulas:
                raise SpecError(f"formula {name} declared twice", path, lineno)
            formulas[name] = phi
        elif head == "atom":
            if not tokens:
                raise SpecError("atom line needs a kind", path, lineno)
            try:
                atoms.append(parse_atom(tokens))
            except ValueError as exc:
                raise SpecError(f"atom: {exc}", path, lineno) from None
        elif head == "measure":
            if len(tokens) < 2:
                raise SpecError("expected 'measure <name> <kind> ...'", path, lineno)
            pending_measures.append((tokens[0], tokens[1:], lineno))
        elif head == "param":
            if not tokens:
                raise SpecError("expected 'param <key> <values>'", path, lineno)
            params[tokens[0]] = tokens[1:]
            param_lines[tokens[0]] = lineno
        else:
            raise SpecError(f"unknown directive {head!r}", path, lineno)

    if "U" not in structures:
        raise SpecError("missing 'structure U' line", path)
    if not formulas:
        raise SpecError("missing 'formula' line", path)

    spec = ExperimentSpec(path, structures["U"], formulas, atoms, {}, params)
    if "M" in structures:
        M, U = structures["M"], structures["U"]
        if M.size > U.size or M.signature != U.signature or not M.agrees_with(U, M.domain):
            raise SpecError("M must be the substructure of U on its first elements", path)
        spec.fragment = tuple(M.domain)

    for name, tokens, lineno in pending_measures:
        if name in spec.measures:
            raise SpecError(f"measure {name} declared twice", path, lineno)
        spec.measures[name] = _measure(tokens, spec, path, lineno)

    _check_params(spec, param_lines)
    return spec


def load_experiment(path):
    with open(path, encoding="utf-8") as handle:
        text = handle.read()
    spec = parse_experiment(text, path, os.path.dirname(os.path.abspath(path)))
    print(f"✓ Experiment {path}: {len(spec.formulas)} formula(s), {len(spec.atoms)} atom(s), "
          f"{len(spec.measures)} measure(s)")
    return spec


def load_params(path):
    """JSON object of param overrides, e.g. {"k_max": 3, "epsilon": ["1/2", "1/4"]}."""
    with open(path, encoding="utf-8") as handle:
        data = json.load(handle)
    if not isinstance(data, dict):
        raise SpecError("parameter file must hold a JSON object", path)
    return data
