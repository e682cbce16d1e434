"""Bottom-up grounding of core programs and dependency analysis.

Negative body literals are treated as satisfiable while computing the set of
derivable atoms, so every rule that might fire in some stable model is kept.
Atoms that can never be derived are dropped, and NAF literals on them are
removed from rule bodies (they always hold).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import networkx as nx

from .errors import GroundingError, GuardExceeded
from .syntax import Atom, Const, CoreProgram, CoreRule, Literal, Observed, ProbFact, Var, iter_constants

DEFAULT_MAX_ATOMS = 10**6


@dataclass(frozen=True)
class GroundRule:
    head: int
    pos: tuple = ()
    neg: tuple = ()


@dataclass(frozen=True)
class GroundFact:
    atom: int
    label: object  # float or Learnable
    template: int  # index into GroundProgram.templates; tied parameters share it


@dataclass
class GroundProgram:
    atoms: list
    facts: list
    rules: list
    queries: list = field(default_factory=list)
    evidence: list = field(default_factory=list)  # (atom index, Observed)
    templates: list = field(default_factory=list)

    def __post_init__(self):
        self.index = {a: i for i, a in enumerate(self.atoms)}
        self.fact_pos = {f.atom: k for k, f in enumerate(self.facts)}

    @property
    def n_atoms(self):
        return len(self.atoms)

    def lookup(self, atom) -> Optional[int]:
        return self.index.get(atom)

    def is_fact(self, i):
        return i in self.fact_pos

    def name(self, i):
        return str(self.atoms[i])

    def to_core(self) -> CoreProgram:
        """Re-express the ground program as a (ground) core program."""
        facts = [ProbFact(self.atoms[f.atom], f.label) for f in self.facts]
        rules = [
            CoreRule(
                self.atoms[r.head],
                tuple(Literal(self.atoms[b]) for b in r.pos) + tuple(Literal(self.atoms[b], True) for b in r.neg),
            )
            for r in self.rules
        ]
        return CoreProgram(
            facts,
            rules,
            [self.atoms[q] for q in self.queries],
            [(self.atoms[a], v) for a, v in self.evidence],
        )

    def dump(self) -> str:
        lines = [f"# {i} {a}" for i, a in enumerate(self.atoms)]
        lines.append(str(self.to_core()).rstrip("\n"))
        return "\n".join(lines) + "\n"


@dataclass
class DependencyInfo:
    scc_id: list
    has_negative_cycle: bool
    negative_sccs: set


def _match(atom: Atom, fact: Atom, theta: dict):
    """Extend substitution theta so that atom matches the ground fact, or None."""
    if atom.predicate != fact.predicate or len(atom.args) != len(fact.args):
        return None
    out = theta
    for t, c in zip(atom.args, fact.args):
        if isinstance(t, Var):
            bound = out.get(t)
            if bound is None:
                if out is theta:
                    out = dict(theta)
                out[t] = c
            elif bound != c:
                return None
        elif t != c:
            return None
    return out


class _Store:
    """Derived atoms indexed by signature, in first-derivation order."""

    def __init__(self, cap):
        self.order = {}
        self.by_sig = {}
        self.cap = cap

    def add(self, atom):
        if atom in self.order:
            return False
        if len(self.order) >= self.cap:
            raise GuardExceeded(f"ground atom count exceeds the limit of {self.cap}")
        self.order[atom] = None
        self.by_sig.setdefault(atom.signature, []).append(atom)
        return True

    def __contains__(self, atom):
        return atom in self.order

    def candidates(self, atom):
        return self.by_sig.get(atom.signature, ())


def _joins(body, store, theta=None):
    """All substitutions making every literal of body (positive atoms) derivable."""
    theta = theta or {}
    if not body:
        yield theta
        return
    first, rest = body[0], body[1:]
    grounded = first.substitute(theta)
    if grounded.is_ground():
        if grounded in store:
            yield from _joins(rest, store, theta)
        return
    # snapshot: the list may grow while iterating during the fixpoint
    for fact in list(store.candidates(first)):
        ext = _match(first, fact, theta)
        if ext is not None:
            yield from _joins(rest, store, ext)


def _check_range_restricted(rule, gate):
    bound = set()
    for lit in rule.body:
        if not lit.naf and lit.atom.predicate != gate:
            bound.update(lit.atom.variables())
    loose = [v for v in rule.head.variables() if v not in bound]
    for lit in rule.body:
        if lit.naf:
            loose += [v for v in lit.atom.variables() if v not in bound]
    if loose:
        names = ", ".join(sorted({v.name for v in loose}))
        raise GroundingError(f"rule '{rule}' is not range-restricted (unbound: {names})")


def ground(core: CoreProgram, extra_constants=(), max_atoms: int = DEFAULT_MAX_ATOMS) -> GroundProgram:
    """Ground a core program over the atoms reachable bottom-up."""
    gates = {f.atom.predicate: k for k, f in enumerate(core.prob_facts) if f.origin is not None}
    for rule in core.rules:
        gate = next((lit.atom.predicate for lit in rule.body if lit.atom.predicate in gates), None)
        _check_range_restricted(rule, gate)

    constants = list(dict.fromkeys(list(iter_constants(core)) + [Const(str(c)) for c in extra_constants]))
    store = _Store(max_atoms)
    fact_instances = {k: {} for k in range(len(core.prob_facts))}

    for k, f in enumerate(core.prob_facts):
        if f.origin is not None:
            continue
        vs = list(dict.fromkeys(f.atom.variables()))
        for combo in itertools.product(constants, repeat=len(vs)):
            atom = f.atom.substitute(dict(zip(vs, combo)))
            fact_instances[k].setdefault(atom, None)
            store.add(atom)

    split = []
    for rule in core.rules:
        pos = [lit.atom for lit in rule.body if not lit.naf and lit.atom.predicate not in gates]
        gate_atoms = [lit.atom for lit in rule.body if lit.atom.predicate in gates]
        neg = [lit.atom for lit in rule.body if lit.naf]
        split.append((rule, pos, gate_atoms, neg))

    changed = True
    while changed:
        changed = False
        for rule, pos, gate_atoms, _neg in split:
            for theta in list(_joins(pos, store)):
                for g in gate_atoms:
                    inst = g.substitute(theta)
                    fact_instances[gates[g.predicate]].setdefault(inst, None)
                    changed |= store.add(inst)
                changed |= store.add(rule.head.substitute(theta))

    # atom table: probabilistic fact instances first, in source order
    atoms = []
    facts = []
    seen = set()
    for k, f in enumerate(core.prob_facts):
        for atom in fact_instances[k]:
            if atom in seen:
                raise GroundingError(f"probabilistic fact {atom} is defined more than once")
            seen.add(atom)
            facts.append(GroundFact(len(atoms), f.label, k))
            atoms.append(atom)
    for atom in store.order:
        if atom not in seen:
            seen.add(atom)
            atoms.append(atom)

    def intern(atom):
        if atom not in seen:
            seen.add(atom)
            atoms.append(atom)
        return index_of.setdefault(atom, len(index_of))

    index_of = {a: i for i, a in enumerate(atoms)}

    fact_set = {f.atom for f in facts}
    rules = {}
    for rule, pos, gate_atoms, neg in split:
        for theta in _joins(pos + gate_atoms, store):
            head = index_of[rule.head.substitute(theta)]
            if head in fact_set:
                raise GroundingError(f"probabilistic fact {atoms[head]} also appears as a rule head")
            p = tuple(dict.fromkeys(index_of[a.substitute(theta)] for a in pos + gate_atoms))
            n = tuple(dict.fromkeys(index_of[g] for g in (a.substitute(theta) for a in neg) if g in store))
            rules.setdefault(GroundRule(head, p, n), None)

    queries = []
    for q in core.queries:
        if q.is_ground():
            queries.append(intern(q))
        else:
            matches = [a for a in store.order if _match(q, a, {}) is not None]
            queries.extend(index_of[a] for a in matches)
    queries = list(dict.fromkeys(queries))
    evidence = [(intern(a), v) for a, v in core.evidence]

    return GroundProgram(atoms, facts, list(rules), queries, evidence, list(core.prob_facts))


def dependency_info(g: GroundProgram) -> DependencyInfo:
    graph = nx.DiGraph()
    graph.add_nodes_from(range(g.n_atoms))
    negative = []
    for r in g.rules:
        for b in r.pos:
            graph.add_edge(b, r.head)
        for b in r.neg:
            graph.add_edge(b, r.head)
            negative.append((b, r.head))
    scc_id = [0] * g.n_atoms
    for k, comp in enumerate(nx.strongly_connected_components(graph)):
        for a in comp:
            scc_id[a] = k
    bad = {scc_id[h] for b, h in negative if scc_id[b] == scc_id[h]}
    return DependencyInfo(scc_id, bool(bad), bad)


__all__ = [
    "DEFAULT_MAX_ATOMS",
    "DependencyInfo",
    "GroundFact",
    "GroundProgram",
    "GroundRule",
    "dependency_info",
    "ground",
    "Observed",
]
