"""Maximum-likelihood estimation of learnable fact probabilities.

Learnable facts are written ``t(0.4)::f.`` (start from 0.4) or ``t(_)::f.``
(random start).  All ground instances of one learnable fact or rule share a
single parameter, and their counts are pooled.

Fully observed data is handled by plain frequency counting
(:func:`estimate_total`); partial observations go through EM
(:func:`em_learn`), whose E-step asks the inference engine for ℙ(f | I_m).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InconsistentProgramError, LearningError, ProgramSyntaxError, UnknownAtomError
from .ground import ground
from .infer import Engine
from .syntax import Learnable, Observed, Program, Rule, desugar, format_program, parse_atom, parse_program


@dataclass
class Dataset:
    examples: list = field(default_factory=list)  # dict Atom -> bool
    weights: list = field(default_factory=list)  # multiplicities

    def __len__(self):
        return len(self.examples)

    @property
    def total(self):
        return float(sum(self.weights))

    def constants(self):
        seen = {}
        for ex in self.examples:
            for atom in ex:
                for t in atom.args:
                    seen.setdefault(t.name, None)
        return list(seen)

    def grouped(self):
        """Identical examples merged, weights added; first-seen order kept."""
        out = {}
        for ex, w in zip(self.examples, self.weights):
            key = tuple(sorted(ex.items(), key=lambda kv: str(kv[0])))
            out[key] = out.get(key, 0.0) + w
        return Dataset([dict(k) for k in out], list(out.values()))


@dataclass
class LearnConfig:
    max_iters: int = 100
    tol: float = 1e-5
    seed: Optional[int] = None

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass
class LearnResult:
    params: dict  # template index -> value
    names: dict  # template index -> printable fact
    trace: list  # parameter dicts, trace[0] is the initialization
    loglik: list  # loglik[i] is the data log-likelihood under trace[i]
    iterations: int
    converged: bool

    def named(self):
        return {self.names[k]: v for k, v in self.params.items()}


def _split_literals(line):
    parts, depth, cur = [], 0, []
    for ch in line:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p.strip() for p in parts if p.strip()]


def parse_dataset(text: str) -> Dataset:
    """One interpretation per line: ``[<count>x] lit, lit, ...`` with ``\\+`` for false."""
    data = Dataset()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        weight = 1.0
        head, _, rest = line.partition(" ")
        if head.endswith("x") and head[:-1].replace(".", "", 1).isdigit():
            weight = float(head[:-1])
            line = rest.strip()
        example = {}
        for lit in _split_literals(line.rstrip(".")):
            value = True
            if lit.startswith("\\+"):
                value, lit = False, lit[2:].strip()
            try:
                atom = parse_atom(lit)
            except ProgramSyntaxError as exc:
                raise ProgramSyntaxError(f"dataset line {lineno}: {exc}") from None
            if atom in example and example[atom] != value:
                raise LearningError(f"dataset line {lineno}: {atom} observed both true and false")
            example[atom] = value
        data.examples.append(example)
        data.weights.append(weight)
    return data


def _as_program(program) -> Program:
    return parse_program(program) if isinstance(program, str) else program


def _learnable_templates(g):
    return [k for k, t in enumerate(g.templates) if isinstance(t.label, Learnable)]


def _instances(g, templates):
    inst = {k: [] for k in templates}
    for f in g.facts:
        if f.template in inst:
            inst[f.template].append(f.atom)
    return inst


def _template_name(t):
    return str(t.origin).rstrip(".") if t.origin is not None else str(t.atom)


def estimate_total(program, data: Dataset) -> dict:
    """Frequency estimate for fully observed learnable facts.

    Returns {template index: p̂}; fails if any learnable instance is not observed
    in some example.
    """
    program = _as_program(program)
    g = ground(desugar(program), extra_constants=data.constants())
    templates = _learnable_templates(g)
    inst = _instances(g, templates)
    out = {}
    for k in templates:
        atoms = [g.atoms[a] for a in inst[k]]
        hits = 0.0
        z = 0.0
        for ex, w in zip(data.examples, data.weights):
            for atom in atoms:
                if atom not in ex:
                    raise LearningError(f"{atom} is not observed in every example; use EM")
                hits += w * ex[atom]
            z += w * len(atoms)
        out[k] = hits / z if z else g.templates[k].label.initial or 0.0
    return out


def _check_observed(engine, data):
    for ex in data.examples:
        for atom in ex:
            try:
                engine.atom_index(atom)
            except UnknownAtomError:
                raise LearningError(f"observed atom {atom} does not occur in the program") from None


def em_learn(program, data: Dataset, cfg: Optional[LearnConfig] = None, engine: Optional[Engine] = None) -> LearnResult:
    cfg = cfg or LearnConfig()
    if engine is None:
        program = _as_program(program)
        engine = Engine(ground(desugar(program), extra_constants=data.constants()))
    g = engine.g
    _check_observed(engine, data)
    templates = _learnable_templates(g)
    if not templates:
        raise LearningError("the program has no learnable facts")
    inst = _instances(g, templates)

    probe = engine.reweighted({k: 0.5 for k in templates})
    bot = probe.inconsistency_prob()
    if bot > 1e-12:
        raise InconsistentProgramError(
            f"program is inconsistent with probability {bot:.6g}; EM needs every world to have a stable model"
        )

    rng = random.Random(cfg.seed)
    params = {}
    for k in templates:
        init = g.templates[k].label.initial
        params[k] = init if init is not None else rng.uniform(0.1, 0.9)

    grouped = data.grouped()
    batch = [[(a, Observed.TRUE if v else Observed.FALSE) for a, v in ex.items()] for ex in grouped.examples]
    weights = np.array(grouped.weights, float)
    names = {k: _template_name(g.templates[k]) for k in templates}

    trace = [dict(params)]
    loglik = []
    converged = False
    iters = 0
    for iters in range(1, cfg.max_iters + 1):
        current = engine.reweighted(params)
        probs, lik = current.conditional_marginals(batch, strict=False)
        for col, ex in enumerate(grouped.examples):
            if ex and lik[col] <= 0.0:
                shown = ", ".join(("" if v else "\\+") + str(a) for a, v in ex.items())
                raise LearningError(f"example '{shown}' has probability zero under the current parameters")
        loglik.append(float(sum(w * math.log(l) for w, l, ex in zip(weights, lik, grouped.examples) if ex)))
        new = {}
        for k in templates:
            atoms = inst[k]
            if not atoms:
                new[k] = params[k]
                continue
            expected = float(weights @ probs[atoms, :].sum(axis=0))
            new[k] = float(min(1.0, max(0.0, expected / (weights.sum() * len(atoms)))))
        delta = max(abs(new[k] - params[k]) for k in templates)
        params = new
        trace.append(dict(params))
        if delta < cfg.tol:
            converged = True
            break

    return LearnResult(params, names, trace, loglik, iters, converged)


def fitted_program(program, params: dict) -> str:
    """Program text with each learnable label replaced by its fitted value."""
    program = _as_program(program)
    core = desugar(program)
    labeled = [r for r in program.rules if r.label is not None and not (isinstance(r.label, float) and r.label == 1.0)]
    if len(labeled) != len(core.prob_facts):
        raise LearningError("cannot map fitted parameters back to the source rules")
    rules = []
    k = 0
    for r in program.rules:
        if r in labeled[k : k + 1]:
            if isinstance(r.label, Learnable) and k in params:
                r = Rule(r.head, r.body, r.head_negated, float(params[k]))
            k += 1
        rules.append(r)
    return format_program(Program(tuple(rules), program.queries, program.evidence))
