"""Program AST, text parser, pretty-printer and desugaring.

Surface syntax (one ``.``-terminated statement at a time, ``%`` comments)::

    0.1::burglary.
    t(0.4)::alarm.                 % learnable, initial value 0.4
    t(_)::bias(X) :- cand(X).      % learnable, random initial value
    alarm :- earthquake.
    0.7::-arg(a2) :- arg(a1).      % negated (inhibiting) head
    calls :- alarm, \\+silent.
    query(calls).
    evidence(alarm, true).
    evidence(calls, not_inconsistent).

:func:`desugar` turns a parsed :class:`Program` into a :class:`CoreProgram`,
where probabilistic facts are the only source of uncertainty and rules are
plain normal rules.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .errors import ProgramSyntaxError

RESERVED_PREFIX = "__"


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Const:
    name: str

    def __str__(self):
        return self.name


Term = Union[Var, Const]


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: tuple = ()

    @property
    def signature(self):
        return (self.predicate, len(self.args))

    def is_ground(self):
        return all(isinstance(t, Const) for t in self.args)

    def variables(self):
        return [t for t in self.args if isinstance(t, Var)]

    def substitute(self, theta):
        if not self.args:
            return self
        return Atom(self.predicate, tuple(theta.get(t, t) if isinstance(t, Var) else t for t in self.args))

    def rename(self, predicate):
        return Atom(predicate, self.args)

    def __str__(self):
        if not self.args:
            return self.predicate
        return f"{self.predicate}({','.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class Literal:
    atom: Atom
    naf: bool = False

    def __str__(self):
        return f"\\+{self.atom}" if self.naf else str(self.atom)


@dataclass(frozen=True)
class Learnable:
    """A ``t(x)`` label: a parameter to fit, optionally with its initial value."""

    initial: Optional[float] = None

    def __str__(self):
        return "t(_)" if self.initial is None else f"t({_fmt_prob(self.initial)})"


Label = Union[float, Learnable]


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: tuple = ()
    head_negated: bool = False
    label: Optional[Label] = None

    @property
    def is_fact(self):
        return not self.body

    def __str__(self):
        text = ""
        if self.label is not None:
            text = f"{_fmt_label(self.label)}::"
        text += ("-" if self.head_negated else "") + str(self.head)
        if self.body:
            text += " :- " + ", ".join(str(lit) for lit in self.body)
        return text + "."


class Observed(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    NOT_INCONSISTENT = "not_inconsistent"


@dataclass(frozen=True)
class Program:
    rules: tuple = ()
    queries: tuple = ()
    evidence: tuple = ()  # (Atom, Observed) pairs

    def __str__(self):
        return format_program(self)


@dataclass(frozen=True)
class ProbFact:
    """A (possibly non-ground) probabilistic fact template of a core program.

    ``origin`` is the source rule when the fact was synthesized from an
    annotated rule; its ground instances then gate exactly one rule instance.
    """

    atom: Atom
    label: Label
    origin: Optional[Rule] = None

    @property
    def learnable(self):
        return isinstance(self.label, Learnable)


@dataclass(frozen=True)
class CoreRule:
    head: Atom
    body: tuple = ()

    def __str__(self):
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {', '.join(str(lit) for lit in self.body)}."


@dataclass
class CoreProgram:
    prob_facts: list = field(default_factory=list)
    rules: list = field(default_factory=list)
    queries: list = field(default_factory=list)
    evidence: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)  # synthesized predicate -> source Rule

    def to_program(self):
        """View this core program as a plain :class:`Program` (no sugar left)."""
        rules = [Rule(f.atom, (), False, f.label) for f in self.prob_facts]
        rules += [Rule(r.head, tuple(r.body)) for r in self.rules]
        return Program(tuple(rules), tuple(self.queries), tuple(self.evidence))

    def __str__(self):
        lines = [f"{_fmt_label(f.label)}::{f.atom}." for f in self.prob_facts]
        lines += [str(r) for r in self.rules]
        lines += [f"query({q})." for q in self.queries]
        lines += [f"evidence({a}, {v.value})." for a, v in self.evidence]
        return "\n".join(lines) + ("\n" if lines else "")


def _fmt_prob(p):
    return repr(float(p))


def _fmt_label(label):
    if isinstance(label, Learnable):
        return str(label)
    return _fmt_prob(label)


def format_program(program: Program) -> str:
    lines = [str(r) for r in program.rules]
    lines += [f"query({q})." for q in program.queries]
    lines += [f"evidence({a}, {v.value})." for a, v in program.evidence]
    return "\n".join(lines) + ("\n" if lines else "")


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>%[^\n]*)
  | (?P<number>\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)
  | (?P<name>[a-z][A-Za-z0-9_]*)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<quoted>'(?:[^'\\]|\\.)*')
  | (?P<sym>::|:-|\\\+|[(),.\-])
    """,
    re.VERBOSE,
)


@dataclass
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text):
    pos, line, line_start = 0, 1, 0
    tokens = []
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ProgramSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, chunk, line, pos - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0
        self.rules = []
        self.queries = []
        self.evidence = []

    def peek(self, offset=0):
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return ProgramSyntaxError(message, tok.line, tok.column)

    def expect(self, text):
        tok = self.next()
        if tok.text != text:
            raise self.error(f"expected {text!r}, found {tok.text or 'end of input'!r}", tok)
        return tok

    def parse(self):
        while self.peek().kind != "eof":
            self.statement()
        return Program(tuple(self.rules), tuple(self.queries), tuple(self.evidence))

    def statement(self):
        tok = self.peek()
        if tok.kind == "name" and tok.text in ("query", "evidence") and self.peek(1).text == "(":
            self.directive()
            return
        label = None
        if self.peek(1).text == "::" or (tok.kind == "name" and tok.text == "t" and self._is_learnable_label()):
            label = self.label()
            self.expect("::")
        negated = False
        if self.peek().text == "-":
            self.next()
            negated = True
        head = self.atom(user=True)
        body = []
        if self.peek().text == ":-":
            self.next()
            body.append(self.literal())
            while self.peek().text == ",":
                self.next()
                body.append(self.literal())
        self.expect(".")
        for t in head.args:
            if isinstance(t, Var) and t.name == "_":
                raise self.error("anonymous variable in rule head", tok)
        self.rules.append(Rule(head, tuple(body), negated, label))

    def _is_learnable_label(self):
        # t(...)::  -- scan to the matching parenthesis
        j = self.i + 1
        if self.tokens[j].text != "(":
            return False
        depth = 0
        while j < len(self.tokens):
            text = self.tokens[j].text
            if text == "(":
                depth += 1
            elif text == ")":
                depth -= 1
                if depth == 0:
                    return self.tokens[j + 1].text == "::"
            elif self.tokens[j].kind == "eof":
                return False
            j += 1
        return False

    def label(self):
        tok = self.next()
        if tok.kind == "number":
            return self.probability(tok)
        if tok.text == "t":
            self.expect("(")
            inner = self.next()
            if inner.kind == "var" and inner.text == "_":
                value = Learnable(None)
            elif inner.kind == "number":
                value = Learnable(self.probability(inner, allow_zero=True))
            else:
                raise self.error("learnable label must be t(<number>) or t(_)", inner)
            self.expect(")")
            return value
        raise self.error(f"expected a probability label, found {tok.text!r}", tok)

    def probability(self, tok, allow_zero=False):
        value = float(tok.text)
        low_ok = value >= 0.0 if allow_zero else value > 0.0
        if not (low_ok and value <= 1.0):
            bounds = "[0,1]" if allow_zero else "(0,1]"
            raise self.error(f"probability {tok.text} outside {bounds}", tok)
        return value

    def directive(self):
        tok = self.next()
        self.expect("(")
        atom = self.atom(user=True)
        if tok.text == "query":
            self.expect(")")
            self.expect(".")
            self.queries.append(atom)
            return
        value = Observed.TRUE
        if self.peek().text == ",":
            self.next()
            vtok = self.next()
            try:
                value = Observed(vtok.text)
            except ValueError:
                raise self.error(
                    f"evidence value must be true, false or not_inconsistent, found {vtok.text!r}", vtok
                ) from None
        self.expect(")")
        self.expect(".")
        if not atom.is_ground():
            raise self.error("evidence must be ground", tok)
        self.evidence.append((atom, value))

    def literal(self):
        naf = False
        if self.peek().text == "\\+":
            self.next()
            naf = True
        return Literal(self.atom(user=True), naf)

    def atom(self, user=False):
        tok = self.next()
        if tok.kind not in ("name", "quoted"):
            raise self.error(f"expected an atom, found {tok.text or 'end of input'!r}", tok)
        name = tok.text
        if user and name.startswith(RESERVED_PREFIX):
            raise self.error(f"names starting with {RESERVED_PREFIX!r} are reserved", tok)
        args = []
        if self.peek().text == "(":
            self.next()
            args.append(self.term())
            while self.peek().text == ",":
                self.next()
                args.append(self.term())
            self.expect(")")
        return Atom(name, tuple(args))

    def term(self):
        tok = self.next()
        if tok.kind == "var":
            term = Var(tok.text)
        elif tok.kind in ("name", "number", "quoted"):
            term = Const(tok.text)
        else:
            raise self.error(f"expected a term, found {tok.text or 'end of input'!r}", tok)
        if self.peek().text == "(":
            raise self.error("function symbols are not supported", tok)
        return term


def parse_program(text: str) -> Program:
    """Parse program text into a :class:`Program`, preserving source order."""
    return _Parser(text).parse()


def parse_atom(text: str) -> Atom:
    parser = _Parser(text)
    atom = parser.atom()
    if parser.peek().kind != "eof":
        raise parser.error("trailing input after atom")
    return atom


# --------------------------------------------------------------------------
# Desugaring
# --------------------------------------------------------------------------


def _unifiable(a: Atom, b: Atom) -> bool:
    # Over-approximation (repeated variables are not tracked); a spurious
    # match only turns a fact into an equivalent annotated rule.
    if a.signature != b.signature:
        return False
    return all(
        isinstance(x, Var) or isinstance(y, Var) or x == y for x, y in zip(a.args, b.args)
    )


def _rule_variables(head, body):
    seen = []
    for atom in [head] + [lit.atom for lit in body]:
        for t in atom.args:
            if isinstance(t, Var) and t not in seen:
                seen.append(t)
    return seen


class _Desugarer:
    def __init__(self):
        self.fresh = 0
        self.anon = 0
        self.prob_facts = []
        self.rules = []
        self.provenance = {}

    def fresh_name(self, prefix):
        if prefix == "f":
            self.fresh += 1
            return f"{RESERVED_PREFIX}f{self.fresh}"
        self.anon += 1
        return f"{RESERVED_PREFIX}anon{self.anon}"

    def name_anonymous(self, body):
        out = []
        for lit in body:
            args = []
            for t in lit.atom.args:
                if isinstance(t, Var) and t.name == "_":
                    self.anon += 1
                    t = Var(f"_G{self.anon}")
                args.append(t)
            out.append(Literal(Atom(lit.atom.predicate, tuple(args)), lit.naf))
        return out

    def lift_unsafe_negation(self, head, body, source):
        """Replace ``\\+p(X,Y)`` whose Y is unbound by ``\\+aux(X)`` plus ``aux(X) :- p(X,Y)``."""
        bound = {t for lit in body if not lit.naf for t in lit.atom.variables()}
        out = []
        for lit in body:
            free = [t for t in lit.atom.variables() if t not in bound]
            if lit.naf and free:
                shared = [t for t in dict.fromkeys(lit.atom.variables()) if t in bound]
                aux = Atom(self.fresh_name("anon"), tuple(shared))
                self.rules.append(CoreRule(aux, (Literal(lit.atom),)))
                self.provenance[aux.predicate] = source
                lit = Literal(aux, True)
            out.append(lit)
        return out

    def run(self, program: Program) -> CoreProgram:
        negated = {r.head.signature for r in program.rules if r.head_negated}

        staged = []  # (head, body, label, source)
        for rule in program.rules:
            head = rule.head
            if head.signature in negated:
                suffix = "__neg" if rule.head_negated else "__pos"
                head = head.rename(head.predicate + suffix)
            label = rule.label
            if isinstance(label, float) and label == 1.0:
                label = None
            body = self.name_anonymous(rule.body)
            body = self.lift_unsafe_negation(head, body, rule)
            staged.append((head, tuple(body), label, rule))

        rule_heads = [h for h, b, l, _ in staged if b or l is None]
        fact_heads = [h for h, b, l, _ in staged if not b and l is not None]
        for k, (head, body, label, source) in enumerate(staged):
            clash = any(_unifiable(head, h) for h in rule_heads)
            clash = clash or sum(_unifiable(head, h) for h in fact_heads) > 1
            if label is None:
                self.rules.append(CoreRule(head, body))
            elif not body and not clash:
                self.prob_facts.append(ProbFact(head, label))
            else:
                args = tuple(_rule_variables(head, body))
                fact = Atom(self.fresh_name("f"), args)
                self.prob_facts.append(ProbFact(fact, label, source))
                self.provenance[fact.predicate] = source
                self.rules.append(CoreRule(head, body + (Literal(fact),)))

        for pred, arity in sorted(negated):
            args = tuple(Var(f"X{i}") for i in range(1, arity + 1))
            self.rules.append(
                CoreRule(
                    Atom(pred, args),
                    (Literal(Atom(pred + "__pos", args)), Literal(Atom(pred + "__neg", args), True)),
                )
            )

        return CoreProgram(
            self.prob_facts, self.rules, list(program.queries), list(program.evidence), self.provenance
        )


def desugar(program: Program) -> CoreProgram:
    """Rewrite annotated rules and negated heads into core normal-program form.

    * ``p::h :- B.`` becomes ``p::__fN(Vars).`` and ``h :- B, __fN(Vars).``
    * if ``h`` ever occurs as ``-h``, positive heads become ``h__pos``, negated
      heads ``h__neg``, and ``h :- h__pos, \\+h__neg.`` is added
    * labels of exactly 1 are dropped (the fact or rule always holds)
    """
    return _Desugarer().run(program)


def iter_constants(program: Union[Program, CoreProgram]) -> Iterable[Const]:
    if isinstance(program, CoreProgram):
        atoms = [f.atom for f in program.prob_facts]
        for r in program.rules:
            atoms.append(r.head)
            atoms.extend(lit.atom for lit in r.body)
    else:
        atoms = []
        for r in program.rules:
            atoms.append(r.head)
            atoms.extend(lit.atom for lit in r.body)
    atoms += list(program.queries) + [a for a, _ in program.evidence]
    seen = {}
    for a in atoms:
        for t in a.args:
            if isinstance(t, Const):
                seen.setdefault(t, None)
    return list(seen)
