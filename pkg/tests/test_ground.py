import pytest

from smplp.errors import GroundingError, GuardExceeded
from smplp.ground import dependency_info, ground
from smplp.syntax import CoreProgram, CoreRule, Observed, ProbFact, desugar, parse_atom, parse_program

import programs as P


def g_of(text, **kw):
    return ground(desugar(parse_program(text)), **kw)


class TestGround:
    def test_alarm_atoms(self):
        g = g_of(P.ALARM)
        assert len(g.facts) == 3
        assert {g.name(a) for a in range(g.n_atoms)} == {
            "burglary",
            "earthquake",
            "neighbour_at_home",
            "alarm",
            "neighbour_calls",
        }
        # fact instances come first
        assert sorted(f.atom for f in g.facts) == [0, 1, 2]

    def test_relevant_instances_only(self):
        g = g_of("edge(1,2). edge(2,3).\npath(X,Y) :- edge(X,Y).\npath(X,Y) :- edge(X,Z), path(Z,Y).")
        paths = sorted(g.name(a) for a in range(g.n_atoms) if g.name(a).startswith("path"))
        assert paths == ["path(1,2)", "path(1,3)", "path(2,3)"]

    def test_gate_facts_instantiated_per_body_match(self):
        g = g_of(P.SMOKERS_T1)
        assert len(g.facts) == 10
        assert len(g_of(P.SMOKERS_T2).facts) == 14
        assert len(g_of(P.SMOKERS_T3).facts) == 18

    def test_naf_on_underivable_atom_is_dropped(self):
        g = g_of("0.5::a.\nb :- a, \\+c.")
        (rule,) = g.rules
        assert rule.neg == ()

    def test_queries_and_evidence_interned(self):
        g = g_of("0.5::a.\nquery(zzz).\nevidence(a, true).")
        assert g.lookup(parse_atom("zzz")) is not None
        assert g.evidence == [(g.lookup(parse_atom("a")), Observed.TRUE)]

    def test_nonground_query_expands(self):
        g = g_of(P.COLORING.replace("query(coloredBy(1,yellow)).", "query(coloredBy(1,C))."))
        names = {g.name(a) for a in g.queries}
        assert {"coloredBy(1,red)", "coloredBy(1,yellow)", "coloredBy(1,green)"} <= names

    def test_unsafe_rule_rejected(self):
        with pytest.raises(GroundingError):
            g_of("p(X) :- \\+q(X).\nq(1).")

    def test_duplicate_fact_rejected(self):
        # the desugarer never emits this; hand-built core programs can
        core = CoreProgram([ProbFact(parse_atom("a"), 0.5), ProbFact(parse_atom("a"), 0.3)])
        with pytest.raises(GroundingError):
            ground(core)

    def test_fact_as_rule_head_rejected(self):
        core = CoreProgram([ProbFact(parse_atom("a"), 0.5)], [CoreRule(parse_atom("a"))])
        with pytest.raises(GroundingError):
            ground(core)

    def test_atom_guard(self):
        with pytest.raises(GuardExceeded):
            g_of("n(1). n(2). n(3). n(4).\np(A,B,C) :- n(A), n(B), n(C).", max_atoms=20)

    def test_dump_lists_atoms(self):
        text = g_of(P.ALARM).dump()
        assert "# 0 burglary" in text
        assert "alarm :- burglary." in text


class TestDependencies:
    def test_stratified(self):
        assert not dependency_info(g_of(P.ALARM)).has_negative_cycle

    def test_negative_cycles(self):
        for text in (P.ALARM_CHOICE, P.BARBER, P.VACCINE, P.COLORING, P.HOTELS):
            assert dependency_info(g_of(text)).has_negative_cycle, text

    def test_positive_cycle_is_fine(self):
        g = g_of("0.5::a.\nb :- c.\nc :- b.\nc :- a.")
        info = dependency_info(g)
        assert not info.has_negative_cycle
        assert info.scc_id[g.lookup(parse_atom("b"))] == info.scc_id[g.lookup(parse_atom("c"))]
