
import pytest

from smplp import Engine
from smplp.argmap import ArgGraph, Edge, graph_from_dict, parse_graph, translate
from smplp.errors import GraphError
from smplp.syntax import desugar, parse_program

import programs as P


class TestValidation:
    def test_roundtrip(self):
        g = graph_from_dict(P.SIX_ARG_GRAPH)
        assert g.ids == ["a1", "a2", "a3", "a4", "a5", "a6"]
        assert graph_from_dict(g.to_json()).to_json() == g.to_json()

    def test_single_source_shorthand(self):
        g = graph_from_dict({"arguments": [{"id": "a", "bias": 0.5}, {"id": "b", "bias": 0.5}],
                             "attacks": [{"from": "a", "to": "b", "p": 0.3}]})
        assert g.attacks == [Edge(("a",), "b", 0.3)]

    @pytest.mark.parametrize(
        "doc",
        [
            {},
            {"arguments": [], "extra": 1},
            {"arguments": [{"id": "a", "bias": 0.5}, {"id": "a", "bias": 0.2}]},
            {"arguments": [{"id": "a", "bias": 0.0}]},
            {"arguments": [{"id": "a", "bias": 1.2}]},
            {"arguments": [{"id": "A", "bias": 0.5}]},
            {"arguments": [{"id": "a", "bias": "high"}]},
            {"arguments": [{"id": "a", "bias": 0.5}], "attacks": [{"from": ["b"], "to": "a", "p": 0.5}]},
            {
                "arguments": [{"id": "a", "bias": 0.5}, {"id": "b", "bias": 0.5}],
                "attacks": [{"from": ["a"], "to": "b", "p": 0.5}],
                "supports": [{"from": ["a"], "to": "b", "p": 0.5}],
            },
            {
                "arguments": [{"id": "a", "bias": 0.5}, {"id": "b", "bias": 0.5}],
                "attacks": [{"from": ["a"], "to": "b", "p": 0.5}, {"from": ["a"], "to": "b", "p": 0.2}],
            },
        ],
    )
    def test_rejects(self, doc):
        with pytest.raises(GraphError):
            graph_from_dict(doc)

    def test_bad_json(self):
        with pytest.raises(GraphError):
            parse_graph("{not json")


class TestTranslate:
    def test_six_arg_program_equivalent(self):
        # the translated graph and the hand-written program define the same distribution
        text = translate(graph_from_dict(P.SIX_ARG_GRAPH))
        a = Engine.from_text(text)
        b = Engine.from_text(P.SIX_ARG_PROGRAM)
        for k in range(1, 7):
            q = f"arg(a{k})"
            assert a.query_prob(q) == pytest.approx(b.query_prob(q), abs=1e-12)

    def test_shape(self):
        text = translate(graph_from_dict(P.FOUR_ARG_GRAPH))
        lines = text.splitlines()
        assert lines[0] == "0.6::bias(a1)."
        assert "arg(A) :- bias(A)." in lines
        assert "0.7::-arg(a2) :- arg(a1)." in lines
        assert sum(l.startswith("query(") for l in lines) == 4
        desugar(parse_program(text))

    def test_set_attack(self):
        g = graph_from_dict({
            "arguments": [{"id": x, "bias": 0.5} for x in ("a", "b", "c")],
            "attacks": [{"from": ["a", "b"], "to": "c", "p": 1.0}],
        })
        text = translate(g)
        assert "1.0::-arg(c) :- arg(a), arg(b)." in text
        # c survives unless both attackers are accepted
        assert Engine.from_text(text).query_prob("arg(c)") == pytest.approx(0.5 * 0.75)

    def test_zero_strength_edge_skipped(self):
        g = ArgGraph([("a", 0.5), ("b", 0.5)], [Edge(("a",), "b", 0.0)])
        assert "-arg" not in translate(g)

    def test_mutual_attack_is_consistent(self):
        e = Engine.from_text(translate(graph_from_dict(P.FOUR_ARG_GRAPH)))
        assert e.inconsistency_prob() == pytest.approx(0.0, abs=1e-12)

    def test_support_raises_acceptance(self):
        base = {"arguments": [{"id": "a", "bias": 0.5}, {"id": "b", "bias": 0.2}]}
        plain = Engine.from_text(translate(graph_from_dict(base))).query_prob("arg(b)")
        doc = dict(base, supports=[{"from": ["a"], "to": "b", "p": 0.5}])
        supported = Engine.from_text(translate(graph_from_dict(doc))).query_prob("arg(b)")
        assert plain == pytest.approx(0.2)
        assert supported == pytest.approx(1 - 0.8 * (1 - 0.25))
