"""Stable models of ground normal programs.

Interpretations are frozensets of atom indices.  A total choice is the set of
probabilistic-fact atoms included in the world; those atoms are added to the
rules as facts and every other fact atom is false (facts never head a rule).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import GuardExceeded
from .ground import GroundRule

DEFAULT_MAX_BRANCH = 30


@dataclass(frozen=True)
class WellFoundedResult:
    true: frozenset
    false: frozenset
    undefined: frozenset

    @property
    def total(self):
        return not self.undefined


@dataclass(frozen=True)
class ThreeValuedModel:
    """(T, F) pair; the inconsistent model is (∅, ∅) with ``inconsistent`` set."""

    true: frozenset
    false: frozenset
    inconsistent: bool = False

    @classmethod
    def inconsistent_model(cls):
        return cls(frozenset(), frozenset(), True)

    @classmethod
    def from_two_valued(cls, model, atoms):
        model = frozenset(model)
        return cls(model, frozenset(atoms) - model)


def reduct(rules: Iterable[GroundRule], candidate) -> list:
    """Gelfond-Lifschitz reduct: drop rules blocked by ``candidate``, strip NAF."""
    out = []
    for r in rules:
        if any(b in candidate for b in r.neg):
            continue
        out.append(GroundRule(r.head, r.pos, ()) if r.neg else r)
    return out


def minimal_model(rules: Iterable[GroundRule]) -> frozenset:
    """Least model of a definite program (NAF literals, if any, are ignored)."""
    rules = list(rules)
    waiting = {}
    missing = []
    queue = []
    for k, r in enumerate(rules):
        body = set(r.pos)
        missing.append(len(body))
        for b in body:
            waiting.setdefault(b, []).append(k)
        if not body:
            queue.append(r.head)
    model = set()
    while queue:
        a = queue.pop()
        if a in model:
            continue
        model.add(a)
        for k in waiting.get(a, ()):
            missing[k] -= 1
            if missing[k] == 0:
                queue.append(rules[k].head)
    return frozenset(model)


def _with_choice(rules, omega):
    return list(rules) + [GroundRule(a) for a in sorted(omega)]


def _gamma(rules, interp):
    return minimal_model(reduct(rules, interp))


def _atoms_of(rules):
    atoms = set()
    for r in rules:
        atoms.add(r.head)
        atoms.update(r.pos)
        atoms.update(r.neg)
    return atoms


def alternating_fixpoint(rules):
    """Return (T, U): the well-founded true atoms and the not-false atoms."""
    true = frozenset()
    while True:
        upper = _gamma(rules, true)
        nxt = _gamma(rules, upper)
        if nxt == true:
            return true, upper
        true = nxt


def well_founded(rules, omega=frozenset(), atoms: Optional[Iterable[int]] = None) -> WellFoundedResult:
    """Well-founded model of ``rules`` plus the facts in ``omega``."""
    program = _with_choice(rules, omega)
    universe = set(atoms) if atoms is not None else _atoms_of(program)
    true, upper = alternating_fixpoint(program)
    universe |= upper
    return WellFoundedResult(true, frozenset(universe - upper), frozenset(upper - true))


def is_stable(rules, candidate) -> bool:
    return _gamma(rules, candidate) == frozenset(candidate)


def stable_models(rules, omega=frozenset(), max_branch: int = DEFAULT_MAX_BRANCH) -> list:
    """All stable models of ``rules`` plus facts ``omega``, sorted canonically.

    Branches only on atoms left undefined by the well-founded model.  Every
    candidate is re-checked against the original program before it is kept.
    """
    program = _with_choice(rules, omega)
    found = set()

    def search(prog, depth):
        true, upper = alternating_fixpoint(prog)
        if true == upper:
            if is_stable(program, true):
                found.add(true)
            return
        if depth >= max_branch:
            raise GuardExceeded(f"stable-model search needs more than {max_branch} branch atoms")
        a = min(upper - true)
        search(prog + [GroundRule(a)], depth + 1)
        search([r for r in prog if r.head != a], depth + 1)

    search(program, 0)
    return sorted(found, key=lambda m: sorted(m))
