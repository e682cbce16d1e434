"""Probabilistic bipolar argument graphs and their translation into programs.

Graph documents are JSON::

    {"arguments": [{"id": "a1", "bias": 0.4}, ...],
     "attacks":   [{"from": ["a2"], "to": "a1", "p": 0.8}, ...],
     "supports":  [{"from": ["a3"], "to": "a1", "p": 0.5}, ...]}

``from`` may also be a single id.  A list of several ids is a set-attack
(or set-support): the relation fires only when all sources are accepted.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import GraphError

_ID = re.compile(r"^[a-z][A-Za-z0-9_]*$|^[0-9]+$")


@dataclass(frozen=True)
class Edge:
    sources: tuple
    target: str
    p: float


@dataclass
class ArgGraph:
    arguments: list = field(default_factory=list)  # (id, bias)
    attacks: list = field(default_factory=list)
    supports: list = field(default_factory=list)

    @property
    def ids(self):
        return [a for a, _ in self.arguments]

    def to_json(self):
        def edges(items):
            return [{"from": list(e.sources), "to": e.target, "p": e.p} for e in items]

        return {
            "arguments": [{"id": a, "bias": b} for a, b in self.arguments],
            "attacks": edges(self.attacks),
            "supports": edges(self.supports),
        }


def _prob(value, what, allow_zero=True):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise GraphError(f"{what} must be a number, got {value!r}")
    value = float(value)
    if not (0.0 <= value <= 1.0):
        raise GraphError(f"{what} = {value} is outside [0,1]")
    if not allow_zero and value == 0.0:
        raise GraphError(f"{what} is 0; zero biases are not supported")
    return value


def graph_from_dict(doc) -> ArgGraph:
    if not isinstance(doc, dict) or "arguments" not in doc:
        raise GraphError("graph document needs an 'arguments' list")
    unknown_keys = set(doc) - {"arguments", "attacks", "supports"}
    if unknown_keys:
        raise GraphError(f"unexpected keys: {', '.join(sorted(unknown_keys))}")
    g = ArgGraph()
    seen = set()
    for item in doc["arguments"]:
        try:
            arg_id, bias = str(item["id"]), item["bias"]
        except (TypeError, KeyError):
            raise GraphError(f"argument entry {item!r} needs 'id' and 'bias'") from None
        if not _ID.match(arg_id):
            raise GraphError(f"argument id {arg_id!r} is not a valid constant")
        if arg_id in seen:
            raise GraphError(f"duplicate argument id {arg_id!r}")
        seen.add(arg_id)
        g.arguments.append((arg_id, _prob(bias, f"bias of {arg_id}", allow_zero=False)))

    keys = {}
    for kind in ("attacks", "supports"):
        out = getattr(g, kind)
        for item in doc.get(kind, []):
            try:
                src, target, p = item["from"], str(item["to"]), item["p"]
            except (TypeError, KeyError):
                raise GraphError(f"{kind} entry {item!r} needs 'from', 'to' and 'p'") from None
            sources = (str(src),) if isinstance(src, (str, int)) else tuple(str(s) for s in src)
            if not sources:
                raise GraphError(f"{kind} entry into {target!r} has no source")
            for a in sources + (target,):
                if a not in seen:
                    raise GraphError(f"{kind} entry references unknown argument {a!r}")
            key = (frozenset(sources), target)
            if key in keys:
                if keys[key] != kind:
                    raise GraphError(f"{sorted(sources)} -> {target} is both an attack and a support")
                raise GraphError(f"duplicate {kind[:-1]} {sorted(sources)} -> {target}")
            keys[key] = kind
            out.append(Edge(sources, target, _prob(p, f"strength of {sorted(sources)} -> {target}")))
    return g


def parse_graph(text: str) -> ArgGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError(f"invalid JSON: {exc}") from None
    return graph_from_dict(doc)


def _label(p):
    return repr(float(p))


def translate(g: ArgGraph) -> str:
    """Program text: bias facts, the acceptance rule, relation rules and queries."""
    lines = [f"{_label(b)}::bias({a})." for a, b in g.arguments]
    if g.arguments:
        lines.append("arg(A) :- bias(A).")
    for e in g.attacks:
        if e.p == 0.0:
            continue  # a relation that never holds adds nothing
        body = ", ".join(f"arg({s})" for s in e.sources)
        lines.append(f"{_label(e.p)}::-arg({e.target}) :- {body}.")
    for e in g.supports:
        if e.p == 0.0:
            continue
        body = ", ".join(f"arg({s})" for s in e.sources)
        lines.append(f"{_label(e.p)}::arg({e.target}) :- {body}.")
    lines += [f"query(arg({a}))." for a, _ in g.arguments]
    return "\n".join(lines) + "\n"
