import json
from fractions import Fraction

import pandas as pd

from core.errors import SignatureError, SpecError
from core.logic import FiniteStructure, Signature

# Parsed structure files, keyed by path
_structure_cache = {}


def fraction_text(q):
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def parse_structure(text, path=None):
    """
    Parse the line-oriented structure format.

        domain N
        relation <name>/<arity>:
        <e1> ... <ek>            (one tuple per line)
        constant <name> = <int>

    `#` starts a comment line.
    """
    size = None
    relations = []
    tables = {}
    constants = {}
    current = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head = line.split()[0]
        try:
            if head == "domain":
                if size is not None:
                    raise SpecError("domain declared twice", path, lineno)
                size = int(line.split()[1])
                current = None
            elif head == "relation":
                spec = line[len("relation"):].strip()
                if not spec.endswith(":") or "/" not in spec:
                    raise SpecError(f"expected 'relation <name>/<arity>:', got {line!r}", path, lineno)
                name, arity = spec[:-1].strip().split("/")
                relations.append((name.strip(), int(arity)))
                current = name.strip()
                tables.setdefault(current, [])
            elif head == "constant":
                name, sep, value = line[len("constant"):].partition("=")
                if not sep:
                    raise SpecError(f"expected 'constant <name> = <int>', got {line!r}", path, lineno)
                constants[name.strip()] = int(value)
                current = None
            else:
                if current is None:
                    raise SpecError(f"tuple outside a relation block: {line!r}", path, lineno)
                tables[current].append(tuple(int(e) for e in line.split()))
        except (ValueError, IndexError) as exc:
            if isinstance(exc, SpecError):
                raise
            raise SpecError(f"cannot read {line!r}: {exc}", path, lineno) from None

    if size is None:
        raise SpecError("missing 'domain N' line", path)
    try:
        signature = Signature(relations=tuple(relations), constants=tuple(constants))
        return FiniteStructure(signature, size, tables, constants)
    except (SignatureError, ValueError) as exc:
        raise SpecError(str(exc), path) from None


def load_structure(path):
    if path in _structure_cache:
        return _structure_cache[path]
    with open(path, encoding="utf-8") as handle:
        structure = parse_structure(handle.read(), path)
    _structure_cache[path] = structure
    print(f"✓ Structure from {path}: {structure}")
    return structure


def structure_text(M):
    lines = [f"domain {M.size}"]
    for name, arity in M.signature.relations:
        lines.append(f"relation {name}/{arity}:")
        lines.extend(" ".join(str(e) for e in row) for row in sorted(M.tables[name]))
    for name in M.signature.constants:
        lines.append(f"constant {name} = {M.constants[name]}")
    return "\n".join(lines) + "\n"


def save_csv(path, rows):
    pd.DataFrame(rows).to_csv(path, index=False, lineterminator="\n")


def _plain(value):
    if isinstance(value, Fraction):
        return fraction_text(value)
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        return value.item()
    return value


def save_json(path, payload):
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(_plain(payload), handle, indent=2, ensure_ascii=False)
        handle.write("\n")
