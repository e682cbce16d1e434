"""Query answering under the stable-model distribution semantics.

Every total choice ω has probability P(ω); its mass is split evenly among its
stable models, or assigned to the inconsistent model when it has none.  The
compiled circuit counts every stable model with weight P(ω), so the count is
corrected for the worlds that have more than one model:

    ŴMC(φ) = WMC(φ) − Σ_{M ⊨ φ, #(ω_M) = n > 1} P(ω_M) (n − 1) / n

Conditional queries divide ŴMC(q ∧ E) by ŴMC(E).  When the program has no
cycle through negation every world has exactly one model, the correction is
zero and model enumeration is skipped.
"""

from __future__ import annotations

import copy
import itertools
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import circuit as cc
from .errors import GuardExceeded, ImpossibleEvidenceError, UnknownAtomError
from .ground import DEFAULT_MAX_ATOMS, GroundProgram, dependency_info, ground
from .stable import DEFAULT_MAX_BRANCH, stable_models
from .syntax import Learnable, Observed, desugar, parse_atom, parse_program

DEFAULT_LEARNABLE_VALUE = 0.5
MAX_TABLE_FACTS = 20


@dataclass
class QueryResult:
    probabilities: dict  # atom name -> probability
    inconsistency: float
    evidence_prob: float

    def to_json(self):
        return {
            "queries": dict(self.probabilities),
            "inconsistency": self.inconsistency,
            "evidence_probability": self.evidence_prob,
        }


@dataclass
class MPEResult:
    choice: frozenset  # fact atom indices in the winning world
    models: list  # evidence-satisfying stable models of that world (atom index sets)
    probability: float  # score of the explanation (see Engine.mpe)
    world_probability: float  # plain P(ω)
    relevant: frozenset = field(default_factory=frozenset)  # facts contributing to the score


def total_choice_prob(probs: Sequence[float], included: Iterable[int]) -> float:
    """Π_{f∈ω} p_f · Π_{f∉ω} (1 − p_f), with ω given as positions into ``probs``."""
    inc = set(included)
    out = 1.0
    for k, p in enumerate(probs):
        out *= p if k in inc else 1.0 - p
    return out


class Engine:
    """Compiled program ready for repeated queries.

    ``skip_enumeration`` defaults to True exactly when the ground program has
    no cycle through negation; passing False forces the corrected path.
    """

    def __init__(
        self,
        g: GroundProgram,
        skip_enumeration: Optional[bool] = None,
        max_models: int = cc.DEFAULT_MAX_MODELS,
        max_branch: int = DEFAULT_MAX_BRANCH,
        params: Optional[dict] = None,
    ):
        self.g = g
        self.deps = dependency_info(g)
        self.max_models = max_models
        self.max_branch = max_branch
        self.circuit = cc.compile_program(g, max_branch=max_branch)
        if skip_enumeration is None:
            skip_enumeration = not self.deps.has_negative_cycle
        self.skip_enumeration = skip_enumeration
        self._models = None
        self.counts = None
        self._multi = np.zeros((0, g.n_atoms), bool)
        self._multi_coef = np.zeros(0)
        if not skip_enumeration:
            self._enumerate()
        self.fact_atoms = np.array([f.atom for f in g.facts], dtype=int)
        self.params = self._initial_params(params or {})
        self._sm_cache = {}

    # -- construction helpers -----------------------------------------------
    @classmethod
    def from_text(cls, text: str, extra_constants=(), max_atoms: int = DEFAULT_MAX_ATOMS, **kw):
        g = ground(desugar(parse_program(text)), extra_constants=extra_constants, max_atoms=max_atoms)
        return cls(g, **kw)

    def _initial_params(self, given):
        params = {}
        for k, tpl in enumerate(self.g.templates):
            if k in given:
                params[k] = float(given[k])
            elif isinstance(tpl.label, Learnable):
                params[k] = tpl.label.initial if tpl.label.initial is not None else DEFAULT_LEARNABLE_VALUE
            else:
                params[k] = float(tpl.label)
        return params

    def _enumerate(self):
        if self._models is not None:
            return
        self._models = cc.enumerate_models(self.circuit, self.max_models)
        self.counts = cc.model_count_map(self._models, (f.atom for f in self.g.facts))
        fmask = cc.set_to_mask(f.atom for f in self.g.facts)
        multi = [(m, self.counts[m & fmask]) for m in self._models if self.counts[m & fmask] > 1]
        mat = np.zeros((len(multi), self.g.n_atoms), bool)
        for row, (m, _) in enumerate(multi):
            for a in cc.mask_to_set(m):
                mat[row, a] = True
        self._multi = mat
        self._multi_coef = np.array([(n - 1) / n for _, n in multi], float)

    @property
    def models(self):
        self._enumerate()
        return self._models

    def reweighted(self, params: dict) -> "Engine":
        """Shallow copy sharing the circuit, with new values for some templates."""
        other = copy.copy(self)
        other.params = dict(self.params)
        other.params.update({k: float(v) for k, v in params.items()})
        return other

    # -- weights ---------------------------------------------------------------
    @property
    def fact_probs(self) -> np.ndarray:
        return np.array([self.params[f.template] for f in self.g.facts], float)

    def atom_index(self, atom) -> int:
        if isinstance(atom, (int, np.integer)):
            if not 0 <= atom < self.g.n_atoms:
                raise UnknownAtomError(f"no atom with index {atom}")
            return int(atom)
        if isinstance(atom, str):
            atom = parse_atom(atom)
        idx = self.g.lookup(atom)
        if idx is None:
            raise UnknownAtomError(f"unknown atom {atom}")
        return idx

    def _evidence(self, evidence):
        """Normalize evidence to [(index, Observed)]; accepts dicts, pairs, booleans."""
        if evidence is None:
            return []
        items = evidence.items() if isinstance(evidence, dict) else evidence
        out = []
        for atom, value in items:
            if isinstance(value, bool):
                value = Observed.TRUE if value else Observed.FALSE
            elif not isinstance(value, Observed):
                value = Observed(value)
            out.append((self.atom_index(atom), value))
        return out

    def _weights(self, evidence_batch):
        """Literal weights of shape (n_atoms, B), one column per evidence set."""
        n, b = self.g.n_atoms, len(evidence_batch)
        w_pos = np.ones((n, b))
        w_neg = np.ones((n, b))
        probs = self.fact_probs
        w_pos[self.fact_atoms, :] = probs[:, None]
        w_neg[self.fact_atoms, :] = 1.0 - probs[:, None]
        for col, ev in enumerate(evidence_batch):
            for a, value in ev:
                if value is Observed.TRUE:
                    w_neg[a, col] = 0.0
                elif value is Observed.FALSE:
                    w_pos[a, col] = 0.0
        return w_pos, w_neg

    def _correction(self, w_pos, w_neg):
        """(root, per-atom positive, per-atom negative) correction terms."""
        if self.skip_enumeration or not len(self._multi_coef):
            zero = np.zeros(w_pos.shape[1:])
            return zero, np.zeros_like(w_pos), np.zeros_like(w_neg)
        m = self._multi[:, :, None]
        per_model = np.where(m, w_pos[None], w_neg[None]).prod(axis=1) * self._multi_coef[:, None]
        mf = self._multi.astype(float)
        return per_model.sum(axis=0), mf.T @ per_model, (1.0 - mf).T @ per_model

    def _hat(self, evidence_batch):
        w_pos, w_neg = self._weights(evidence_batch)
        root, pos, neg = cc.literal_wmc(self.circuit, w_pos, w_neg)
        c_root, c_pos, c_neg = self._correction(w_pos, w_neg)
        return root - c_root, pos - c_pos, neg - c_neg

    # -- queries -----------------------------------------------------------------
    def hat_wmc(self, assignment=None) -> float:
        """ŴMC of a conjunction of literals given as evidence-style pairs."""
        ev = self._evidence(assignment)
        w_pos, w_neg = self._weights([ev])
        root = cc.wmc(self.circuit, w_pos, w_neg)
        c_root, _, _ = self._correction(w_pos, w_neg)
        return float(_clip(root - c_root)[0])

    def inconsistency_prob(self) -> float:
        return float(min(1.0, max(0.0, 1.0 - self.hat_wmc())))

    def conditional_marginals(self, evidence_batch, strict=True):
        """ℙ(a | E_m) for every atom a and evidence set E_m.

        Returns (probs of shape (n_atoms, B), ŴMC(E_m) of shape (B,)).  Evidence
        sets without atom-valued or consistency evidence are not normalized.
        With ``strict`` unset, impossible evidence yields a NaN column instead
        of an error.
        """
        batch = [self._evidence(ev) for ev in evidence_batch]
        root, pos, _ = self._hat(batch)
        root = _clip(root)
        pos = _clip(pos)
        out = np.empty_like(pos)
        for col, ev in enumerate(batch):
            if ev:
                if root[col] <= 0.0:
                    if strict:
                        raise ImpossibleEvidenceError("evidence has probability zero")
                    out[:, col] = np.nan
                    continue
                out[:, col] = pos[:, col] / root[col]
            else:
                out[:, col] = pos[:, col]
        return np.clip(out, 0.0, 1.0), root

    def query_prob(self, query, evidence=None) -> float:
        """ℙ(q | E); ``query`` may be one atom or a list of atoms (a conjunction)."""
        if isinstance(query, (list, tuple)):
            atoms = [self.atom_index(q) for q in query]
        else:
            atoms = [self.atom_index(query)]
        ev = self._evidence(evidence)
        num = self.hat_wmc(ev + [(a, Observed.TRUE) for a in atoms])
        if not ev:
            return float(min(1.0, num))
        den = self.hat_wmc(ev)
        if den <= 0.0:
            raise ImpossibleEvidenceError("evidence has probability zero")
        return float(min(1.0, num / den))

    def query_prob_not_inconsistent(self, query, evidence=None) -> float:
        """ℙ(q | E, not ⊥): mass renormalized over consistent worlds only."""
        ev = self._evidence(evidence)
        if not any(v is Observed.NOT_INCONSISTENT for _, v in ev):
            ev = ev + [(self.atom_index(query if not isinstance(query, (list, tuple)) else query[0]),
                        Observed.NOT_INCONSISTENT)]
        if self.inconsistency_prob() >= 1.0:
            raise ImpossibleEvidenceError("every world is inconsistent")
        return self.query_prob(query, ev)

    def marginals(self, atoms=None, evidence=None) -> QueryResult:
        atoms = self.g.queries if atoms is None else [self.atom_index(a) for a in atoms]
        ev = self._evidence(evidence if evidence is not None else self.g.evidence)
        probs, den = self.conditional_marginals([ev])
        return QueryResult(
            {self.g.name(a): float(probs[a, 0]) for a in atoms},
            self.inconsistency_prob(),
            float(den[0]) if ev else 1.0,
        )

    def model_probabilities(self):
        """[(model, P̂(model))] over all enumerated models."""
        probs = self.fact_probs
        pos = {f.atom: k for k, f in enumerate(self.g.facts)}
        fmask = cc.set_to_mask(pos)
        out = []
        for m in self.models:
            included = [pos[a] for a in cc.mask_to_set(m & fmask)]
            out.append((cc.mask_to_set(m), total_choice_prob(probs, included) / self.counts[m & fmask]))
        return out

    # -- MPE -------------------------------------------------------------------
    def _gates(self):
        """For each rule-choice fact atom, the rest of the body of each rule it gates."""
        gates = {}
        for r in self.g.rules:
            for b in r.pos:
                k = self.g.fact_pos.get(b)
                if k is not None and self.g.templates[self.g.facts[k].template].origin is not None:
                    gates.setdefault(b, []).append((tuple(x for x in r.pos if x != b), r.neg))
        return gates

    def mpe(self, evidence=None) -> MPEResult:
        """Most probable explanation of the evidence.

        The winning world maximizes P(ω) among consistent worlds with a stable
        model satisfying the evidence.  Ties go to the larger evidence-satisfying
        P̂ mass, then to the smaller world, then to the canonical index order.

        The reported probability is that of the explanation rather than of the
        single world: a choice attached to a probabilistic rule is summed out
        when the rest of that rule's body is false in every stable model of the
        world (the rule cannot fire whatever the choice), so worlds differing
        only in such idle choices count as one explanation.
        """
        ev = self._evidence(evidence if evidence is not None else self.g.evidence)
        if any(v is Observed.NOT_INCONSISTENT for _, v in ev):
            raise ImpossibleEvidenceError("MPE with consistency evidence is not supported")
        must = cc.set_to_mask(a for a, v in ev if v is Observed.TRUE)
        must_not = cc.set_to_mask(a for a, v in ev if v is Observed.FALSE)
        probs = self.fact_probs
        facts = [f.atom for f in self.g.facts]
        fmask = cc.set_to_mask(facts)

        worlds = {}
        for m in self.models:
            worlds.setdefault(m & fmask, []).append(m)
        best = None
        for key, models in worlds.items():
            good = [m for m in models if (m & must) == must and not (m & must_not)]
            if not good:
                continue
            included = cc.mask_to_set(key)
            plain = total_choice_prob(probs, [k for k, a in enumerate(facts) if a in included])
            rank = (
                round(plain, 12),
                round(plain * len(good) / len(models), 12),
                -len(included),
                tuple(-a for a in sorted(included)),
            )
            if best is None or rank > best[0]:
                best = (rank, key, good, plain)
        if best is None:
            raise ImpossibleEvidenceError("no consistent world satisfies the evidence")
        _, key, good, plain = best

        gates = self._gates()
        score, relevant = 1.0, []
        for k, a in enumerate(facts):
            if a in gates and not any(
                all((m >> x) & 1 for x in rp) and not any((m >> x) & 1 for x in rn)
                for m in worlds[key]
                for rp, rn in gates[a]
            ):
                continue
            relevant.append(a)
            score *= probs[k] if (key >> a) & 1 else 1.0 - probs[k]
        return MPEResult(
            cc.mask_to_set(key), [cc.mask_to_set(m) for m in sorted(good)], float(score), float(plain),
            frozenset(relevant),
        )

    # -- sampling ----------------------------------------------------------------
    def _world_models(self, omega):
        sm = self._sm_cache.get(omega)
        if sm is None:
            sm = stable_models(self.g.rules, omega, max_branch=self.max_branch)
            self._sm_cache[omega] = sm
        return sm

    def sample(self, n: int, seed=None) -> list:
        """Draw n interpretations; None marks a draw from an inconsistent world."""
        rng = random.Random(seed)
        probs = self.fact_probs
        out = []
        for _ in range(n):
            omega = frozenset(f.atom for f, p in zip(self.g.facts, probs) if rng.random() < p)
            models = self._world_models(omega)
            out.append(models[rng.randrange(len(models))] if models else None)
        return out

    # -- world table -------------------------------------------------------------
    def world_table(self, max_facts: int = MAX_TABLE_FACTS):
        """[(ω as fact atoms, P(ω), stable models)] for every total choice."""
        facts = [f.atom for f in self.g.facts]
        if len(facts) > max_facts:
            raise GuardExceeded(f"{len(facts)} probabilistic facts; the world table is limited to {max_facts}")
        probs = self.fact_probs
        rows = []
        for bits in itertools.product((True, False), repeat=len(facts)):
            omega = frozenset(a for a, b in zip(facts, bits) if b)
            p = total_choice_prob(probs, [k for k, b in enumerate(bits) if b])
            rows.append((omega, p, self._world_models(omega)))
        return rows


def _clip(x):
    # rounding in the correction can leave tiny negative values
    return np.where(np.abs(x) < 1e-15, 0.0, x)


def log_prob(p: float) -> float:
    return math.log(p) if p > 0 else -math.inf
