"""Compilation of ground programs into smooth d-DNNF circuits over stable models.

The compiler expands a decision tree over probabilistic-fact atoms.  After each
decision it computes lower/upper bounds on the atoms true in any stable model
of any completion of the remaining choices (undecided facts count as possibly
true), fixes the atoms the bounds decide, and splits what is left into
independent components.  Components without undecided facts are solved by the
stable-model enumerator.  Identical residual components are compiled once.

Circuit models are complete assignments over the atom table; a model is stored
as an int bitmask of its true atoms.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import GuardExceeded
from .ground import GroundProgram, GroundRule
from .stable import DEFAULT_MAX_BRANCH, minimal_model, reduct, stable_models

DEFAULT_MAX_MODELS = 10**6

LIT, AND, OR = "L", "A", "O"


@dataclass(frozen=True)
class Node:
    kind: str
    lit: int = 0  # +a+1 / -(a+1) for literal nodes
    children: tuple = ()


class Circuit:
    """Hash-consed NNF DAG. Children always precede parents in ``nodes``."""

    def __init__(self, n_atoms):
        self.n_atoms = n_atoms
        self.nodes = []
        self.scopes = []
        self._table = {}
        self.root = None

    # -- construction -------------------------------------------------------
    def _add(self, node, scope):
        idx = self._table.get(node)
        if idx is None:
            idx = len(self.nodes)
            self.nodes.append(node)
            self.scopes.append(scope)
            self._table[node] = idx
        return idx

    def literal(self, atom, positive=True):
        code = atom + 1 if positive else -(atom + 1)
        return self._add(Node(LIT, code), frozenset((atom,)))

    def conj(self, children):
        children = tuple(sorted(set(children)))
        if any(self.is_false(c) for c in children):
            return self.false()
        if len(children) == 1:
            return children[0]
        scope = frozenset().union(*(self.scopes[c] for c in children)) if children else frozenset()
        return self._add(Node(AND, children=children), scope)

    def disj(self, children):
        children = tuple(sorted({c for c in children if not self.is_false(c)}))
        if len(children) == 1:
            return children[0]
        scope = frozenset().union(*(self.scopes[c] for c in children)) if children else frozenset()
        return self._add(Node(OR, children=children), scope)

    def false(self):
        return self._add(Node(OR), frozenset())

    def is_false(self, idx):
        node = self.nodes[idx]
        return node.kind == OR and not node.children

    # -- raw construction for tests (no simplification) -----------------------
    def raw(self, kind, children):
        children = tuple(children)
        scope = frozenset().union(*(self.scopes[c] for c in children)) if children else frozenset()
        self.nodes.append(Node(kind, children=children))
        self.scopes.append(scope)
        return len(self.nodes) - 1

    # -- output ---------------------------------------------------------------
    def dump(self) -> str:
        """One node per line (``L ±k`` with 1-based atoms, ``A``/``O`` children), root last."""
        order = self.reachable()
        pos = {n: k for k, n in enumerate(order)}
        lines = []
        for n in order:
            node = self.nodes[n]
            if node.kind == LIT:
                lines.append(f"L {node.lit:+d}")
            else:
                lines.append(" ".join([node.kind] + [str(pos[c]) for c in node.children]))
        return "\n".join(lines) + "\n"

    def reachable(self):
        seen = set()
        stack = [self.root]
        while stack:
            n = stack.pop()
            if n in seen:
                continue
            seen.add(n)
            stack.extend(self.nodes[n].children)
        return sorted(seen)

    def __len__(self):
        return len(self.reachable())


# --------------------------------------------------------------------------
# Compilation
# --------------------------------------------------------------------------


def _bounds(rules, undecided):
    """Atoms true in every (lower) and possibly true in some (upper) stable model."""
    facts = [GroundRule(a) for a in undecided]
    lower = frozenset()
    while True:
        upper = minimal_model(reduct(rules, lower) + facts)
        nxt = minimal_model(reduct(rules, upper))
        if nxt == lower:
            return lower, upper
        lower = nxt


def _simplify(rules, lower, upper):
    out = []
    for r in rules:
        if r.head in lower or r.head not in upper:
            continue
        if any(b not in upper for b in r.pos) or any(b in lower for b in r.neg):
            continue
        pos = tuple(b for b in r.pos if b not in lower)
        neg = tuple(b for b in r.neg if b in upper)
        out.append(GroundRule(r.head, pos, neg))
    return out


def _components(rules, undecided):
    parent = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for r in rules:
        root = find(r.head)
        for b in r.pos + r.neg:
            parent[find(b)] = root
    for u in undecided:
        find(u)
    groups = {}
    for r in rules:
        groups.setdefault(find(r.head), ([], set()))[0].append(r)
    for u in undecided:
        groups.setdefault(find(u), ([], set()))[1].add(u)
    return [(tuple(sorted(rs, key=_rule_key)), frozenset(us)) for rs, us in groups.values()]


def _rule_key(r):
    return (r.head, r.pos, r.neg)


def _scope_of(rules, undecided):
    atoms = set(undecided)
    for r in rules:
        atoms.add(r.head)
        atoms.update(r.pos)
        atoms.update(r.neg)
    return atoms


class _Compiler:
    def __init__(self, circuit, max_branch):
        self.c = circuit
        self.max_branch = max_branch
        self.memo = {}

    def assign(self, rules, undecided, scope):
        """And-node over ``scope`` after propagation; FALSE if no stable model."""
        lower, upper = _bounds(rules, undecided)
        children = [self.c.literal(a, True) for a in sorted(scope & lower)]
        children += [self.c.literal(a, False) for a in sorted(scope - upper)]
        residual = _simplify(rules, lower, upper)
        for comp_rules, comp_undecided in _components(residual, undecided):
            node = self.component(comp_rules, comp_undecided)
            if self.c.is_false(node):
                return node
            children.append(node)
        return self.c.conj(children)

    def component(self, rules, undecided):
        key = (rules, undecided)
        node = self.memo.get(key)
        if node is not None:
            return node
        scope = _scope_of(rules, undecided)
        if undecided:
            f = min(undecided)
            rest = undecided - {f}
            yes = self.assign(list(rules) + [GroundRule(f)], rest, scope)
            no = self.assign(list(rules), rest, scope)
            node = self.c.disj([yes, no])
        else:
            branches = []
            for model in stable_models(list(rules), max_branch=self.max_branch):
                lits = [self.c.literal(a, a in model) for a in sorted(scope)]
                branches.append(self.c.conj(lits))
            node = self.c.disj(branches)
        self.memo[key] = node
        return node


def compile_program(g: GroundProgram, max_branch: int = DEFAULT_MAX_BRANCH) -> Circuit:
    """Smooth d-DNNF whose models are the stable models of all consistent total choices."""
    c = Circuit(g.n_atoms)
    comp = _Compiler(c, max_branch)
    undecided = frozenset(f.atom for f in g.facts)
    c.root = comp.assign(list(g.rules), undecided, set(range(g.n_atoms)))
    return c


compile = compile_program  # noqa: A001  (module-level name used by callers)


# --------------------------------------------------------------------------
# Structural checks
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    prop: str
    node: int
    witness: tuple

    def __str__(self):
        return f"{self.prop} violated at node {self.node}: children {self.witness}"


def check_ddnnf(c: Circuit) -> list:
    """Report decomposability, determinism and smoothness violations."""
    problems = []
    order = c.reachable()
    forced = {}
    for n in order:
        node = c.nodes[n]
        if node.kind == LIT:
            forced[n] = frozenset((node.lit,))
        elif node.kind == AND:
            forced[n] = frozenset().union(*(forced[ch] for ch in node.children))
        elif node.children:
            forced[n] = frozenset.intersection(*(forced[ch] for ch in node.children))
        else:
            forced[n] = frozenset()
    for n in order:
        node = c.nodes[n]
        if node.kind == AND:
            for x, y in combinations(node.children, 2):
                if c.scopes[x] & c.scopes[y]:
                    problems.append(Violation("decomposability", n, (x, y)))
        elif node.kind == OR:
            for x, y in combinations(node.children, 2):
                if c.scopes[x] != c.scopes[y]:
                    problems.append(Violation("smoothness", n, (x, y)))
                if not _disjoint(c, x, y, forced):
                    problems.append(Violation("determinism", n, (x, y)))
    return problems


def _disjoint(c, x, y, forced):
    if any(-lit in forced[y] for lit in forced[x]):
        return True
    mx, my = _enumerate(c, x, 1 << 16), _enumerate(c, y, 1 << 16)
    if mx is None or my is None:
        return True  # too large to check exhaustively; compile guarantees it
    return not (set(mx) & set(my))


# --------------------------------------------------------------------------
# Evaluation
# --------------------------------------------------------------------------


def wmc(c: Circuit, w_pos, w_neg):
    """Weighted model count; weights may be vectors (n_atoms,) or batches (n_atoms, B)."""
    return _upward(c, np.asarray(w_pos, float), np.asarray(w_neg, float))[c.root]


def _upward(c, w_pos, w_neg):
    shape = w_pos.shape[1:]
    vals = {}
    for n in c.reachable():
        node = c.nodes[n]
        if node.kind == LIT:
            a = abs(node.lit) - 1
            vals[n] = w_pos[a] if node.lit > 0 else w_neg[a]
        elif node.kind == AND:
            v = np.ones(shape)
            for ch in node.children:
                v = v * vals[ch]
            vals[n] = v
        else:
            v = np.zeros(shape)
            for ch in node.children:
                v = v + vals[ch]
            vals[n] = v
    return vals


def literal_wmc(c: Circuit, w_pos, w_neg):
    """Return (root value, WMC(a ∧ ·) per atom, WMC(¬a ∧ ·) per atom) in one pass pair."""
    w_pos = np.asarray(w_pos, float)
    w_neg = np.asarray(w_neg, float)
    vals = _upward(c, w_pos, w_neg)
    shape = w_pos.shape[1:]
    order = c.reachable()
    grad = {n: np.zeros(shape) for n in order}
    grad[c.root] = np.ones(shape)
    d_pos = np.zeros_like(w_pos)
    d_neg = np.zeros_like(w_neg)
    for n in reversed(order):
        node = c.nodes[n]
        g = grad[n]
        if node.kind == LIT:
            a = abs(node.lit) - 1
            if node.lit > 0:
                d_pos[a] = d_pos[a] + g
            else:
                d_neg[a] = d_neg[a] + g
        elif node.kind == OR:
            for ch in node.children:
                grad[ch] = grad[ch] + g
        else:
            kids = node.children
            prefix = [np.ones(shape)]
            for ch in kids[:-1]:
                prefix.append(prefix[-1] * vals[ch])
            suffix = np.ones(shape)
            for k in range(len(kids) - 1, -1, -1):
                grad[kids[k]] = grad[kids[k]] + g * prefix[k] * suffix
                suffix = suffix * vals[kids[k]]
    return vals[c.root], d_pos * w_pos, d_neg * w_neg


def _enumerate(c, n, limit):
    memo = {}

    def go(k):
        if k in memo:
            return memo[k]
        node = c.nodes[k]
        if node.kind == LIT:
            out = [1 << (node.lit - 1)] if node.lit > 0 else [0]
        elif node.kind == OR:
            out = []
            for ch in node.children:
                out.extend(go(ch))
                if len(out) > limit:
                    raise _TooMany
        else:
            out = [0]
            for ch in node.children:
                sub = go(ch)
                if len(out) * len(sub) > limit:
                    raise _TooMany
                out = [x | y for x in out for y in sub]
        memo[k] = out
        return out

    try:
        return go(n)
    except _TooMany:
        return None


class _TooMany(Exception):
    pass


def enumerate_models(c: Circuit, max_models: int = DEFAULT_MAX_MODELS) -> list:
    """All circuit models as sorted bitmasks of true atoms."""
    models = _enumerate(c, c.root, max_models)
    if models is None:
        raise GuardExceeded(f"circuit has more than {max_models} models")
    return sorted(models)


def model_count_map(models, fact_atoms) -> dict:
    """#(ω): number of models per total choice, keyed by the fact-atom bitmask."""
    mask = 0
    for a in fact_atoms:
        mask |= 1 << a
    counts = {}
    for m in models:
        key = m & mask
        counts[key] = counts.get(key, 0) + 1
    return counts


def mask_to_set(mask) -> frozenset:
    out = []
    k = 0
    while mask:
        if mask & 1:
            out.append(k)
        mask >>= 1
        k += 1
    return frozenset(out)


def set_to_mask(atoms) -> int:
    m = 0
    for a in atoms:
        m |= 1 << a
    return m
