"""
Concrete grammar for first-order formulas.

    formula  := disj ("->" formula)?
    disj     := conj ("|" conj)*
    conj     := unary ("&" unary)*
    unary    := "!" unary | ("exists" | "forall") NAME "(" formula ")" | atom | "(" formula ")"
    atom     := NAME "(" term ("," term)* ")" | term "=" term | term "<" term

`<` is sugar for the binary relation `lt`. Bound variables that clash with the
partition or with an enclosing binder are renamed at parse time.
"""
from lark import Lark, Transformer
from lark.exceptions import UnexpectedInput, VisitError

from core.errors import FormulaSyntaxError, PartitionError, SignatureError
from core.logic import (
    LT, And, Const, Eq, Exists, Forall, Implies, Not, Or, PartitionedFormula, Rel, Var,
    all_names, free_vars,
)

FORMULA_GRAMMAR = r"""
    ?start: formula

    ?formula: disj
            | disj "->" formula          -> implies

    ?disj: conj
         | disj "|" conj                 -> or_

    ?conj: unary
         | conj "&" unary                -> and_

    ?unary: "!" unary                    -> not_
          | QUANT NAME "(" formula ")"   -> quantified
          | atom
          | "(" formula ")"

    atom: NAME "(" term ("," term)* ")"  -> relation
        | term "=" term                  -> equals
        | term "<" term                  -> less

    term: NAME

    QUANT.2: /(exists|forall)\b/

    %import common.CNAME -> NAME
    %import common.WS
    %ignore WS
"""

_parser = Lark(FORMULA_GRAMMAR, parser="lalr")


class _AstBuilder(Transformer):
    def __init__(self, signature):
        super().__init__()
        self.signature = signature

    def term(self, items):
        name = str(items[0])
        if self.signature is not None and self.signature.has_constant(name):
            return Const(name)
        return Var(name)

    def _check_relation(self, name, arity):
        if self.signature is None:
            return
        expected = self.signature.arity(name)
        if expected is None:
            raise SignatureError(f"unknown relation {name}")
        if expected != arity:
            raise SignatureError(f"relation {name} has arity {expected}, used with {arity} arguments")

    def relation(self, items):
        name, args = str(items[0]), tuple(items[1:])
        self._check_relation(name, len(args))
        return Rel(name, args)

    def less(self, items):
        self._check_relation(LT, 2)
        return Rel(LT, (items[0], items[1]))

    def equals(self, items):
        return Eq(items[0], items[1])

    def not_(self, items):
        return Not(items[0])

    def and_(self, items):
        return And(items[0], items[1])

    def or_(self, items):
        return Or(items[0], items[1])

    def implies(self, items):
        return Implies(items[0], items[1])

    def quantified(self, items):
        quant, var, body = items
        node = Exists if str(quant) == "exists" else Forall
        return node(str(var), body)


def _line_col(text, offset):
    line = text.count("\n", 0, offset) + 1
    column = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, column


def parse_ast(text, signature=None):
    try:
        tree = _parser.parse(text)
    except UnexpectedInput as exc:
        token = getattr(exc, "token", None)
        offset = getattr(exc, "pos_in_stream", None)
        if token is not None and token.type == "$END":
            offset = len(text.rstrip())
            what = "end of input"
        elif token is not None:
            what = f"token {str(token)!r}"
        else:
            what = f"character {text[offset]!r}" if offset is not None and offset < len(text) else "input"
        if offset is None:
            offset = len(text)
        line, column = _line_col(text, offset)
        raise FormulaSyntaxError(f"syntax error: unexpected {what}", offset, line, column) from None
    try:
        return _AstBuilder(signature).transform(tree)
    except VisitError as exc:
        raise exc.orig_exc from None


def _fresh(name, used):
    i = 1
    while f"{name}_{i}" in used:
        i += 1
    return f"{name}_{i}"


def _rename_term(t, scope):
    if isinstance(t, Var):
        return Var(scope.get(t.name, t.name))
    return t


def alpha_rename(f, reserved, scope=None, used=None):
    """Rename binders that clash with `reserved` names or shadow an outer binder."""
    scope = {} if scope is None else scope
    used = set(all_names(f)) | set(reserved) if used is None else used
    if isinstance(f, Rel):
        return Rel(f.name, tuple(_rename_term(t, scope) for t in f.args))
    if isinstance(f, Eq):
        return Eq(_rename_term(f.left, scope), _rename_term(f.right, scope))
    if isinstance(f, Not):
        return Not(alpha_rename(f.body, reserved, scope, used))
    if isinstance(f, (And, Or, Implies)):
        return type(f)(alpha_rename(f.left, reserved, scope, used),
                       alpha_rename(f.right, reserved, scope, used))
    new = f.var
    if f.var in reserved or f.var in scope:
        new = _fresh(f.var, used)
        used.add(new)
    return type(f)(new, alpha_rename(f.body, reserved, {**scope, f.var: new}, used))


def parse_formula(text, partition, signature=None):
    """Parse `text` and attach the (object, parameter) partition."""
    object_vars, param_vars = (tuple(str(v) for v in part) for part in partition)
    if set(object_vars) & set(param_vars):
        raise PartitionError(f"partition names overlap: {sorted(set(object_vars) & set(param_vars))}")
    ast = alpha_rename(parse_ast(text, signature), set(object_vars) | set(param_vars))
    uncovered = free_vars(ast) - set(object_vars) - set(param_vars)
    if uncovered:
        raise PartitionError(f"partition does not cover free variables {sorted(uncovered)} of {text!r}")
    return PartitionedFormula(ast, object_vars, param_vars)
