import random

import pytest
from hypothesis import given, settings, strategies as st

from smplp.errors import GuardExceeded
from smplp.ground import GroundRule
from smplp.stable import (
    ThreeValuedModel,
    is_stable,
    minimal_model,
    reduct,
    stable_models,
    well_founded,
)

from oracle import brute_stable_models


def R(head, pos=(), neg=()):
    return GroundRule(head, tuple(pos), tuple(neg))


def as_tuples(rules):
    return [(r.head, list(r.pos), list(r.neg)) for r in rules]


class TestBasics:
    def test_minimal_model(self):
        rules = [R(0), R(1, [0]), R(2, [1, 3])]
        assert minimal_model(rules) == frozenset({0, 1})

    def test_reduct(self):
        rules = [R(0, [], [1]), R(1, [], [0]), R(2, [0])]
        red = reduct(rules, frozenset({0}))
        assert R(1, [], [0]) not in red
        assert R(0) in red and R(2, [0]) in red

    def test_even_loop_two_models(self):
        rules = [R(0, [], [1]), R(1, [], [0])]
        assert stable_models(rules) == [frozenset({0}), frozenset({1})]

    def test_odd_loop_no_model(self):
        assert stable_models([R(0, [], [0])]) == []

    def test_choice_facts(self):
        rules = [R(1, [0], [2]), R(2, [], [1])]
        assert stable_models(rules, frozenset({0})) == [frozenset({0, 1}), frozenset({0, 2})]
        assert stable_models(rules, frozenset()) == [frozenset({2})]

    def test_is_stable(self):
        rules = [R(0, [], [1]), R(1, [], [0])]
        assert is_stable(rules, {0})
        assert not is_stable(rules, {0, 1})
        assert not is_stable(rules, set())

    def test_guard(self):
        # k independent even loops: 2^k models, k branch atoms deep
        rules = []
        for k in range(6):
            rules += [R(2 * k, [], [2 * k + 1]), R(2 * k + 1, [], [2 * k])]
        assert len(stable_models(rules)) == 64
        with pytest.raises(GuardExceeded):
            stable_models(rules, max_branch=3)


class TestWellFounded:
    def test_stratified_total(self):
        wf = well_founded([R(0), R(1, [0], [2])], atoms=range(3))
        assert wf.total
        assert wf.true == {0, 1} and wf.false == {2}

    def test_loop_undefined(self):
        wf = well_founded([R(0, [], [1]), R(1, [], [0]), R(2, [], [3])], atoms=range(4))
        assert wf.undefined == {0, 1}
        assert wf.true == {2}

    def test_wf_approximates_stable(self):
        rules = [R(0, [], [1]), R(1, [], [0]), R(2, [0]), R(2, [1])]
        wf = well_founded(rules, atoms=range(3))
        for m in stable_models(rules):
            assert wf.true <= m
            assert not (wf.false & m)

    def test_inconsistent_model(self):
        m = ThreeValuedModel.inconsistent_model()
        assert m.inconsistent and not m.true and not m.false


def random_rules(rng, n_atoms, n_rules):
    rules = []
    for _ in range(n_rules):
        body = rng.sample(range(n_atoms), rng.randint(0, min(3, n_atoms)))
        neg = [b for b in body if rng.random() < 0.5]
        pos = [b for b in body if b not in neg]
        rules.append(R(rng.randrange(n_atoms), pos, neg))
    return rules


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 7), st.integers(1, 12))
def test_matches_exhaustive_check(seed, n_atoms, n_rules):
    rules = random_rules(random.Random(seed), n_atoms, n_rules)
    expected = sorted(brute_stable_models(as_tuples(rules), frozenset()), key=sorted)
    assert stable_models(rules) == expected


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9))
def test_models_are_minimal_and_wf_consistent(seed):
    rules = random_rules(random.Random(seed), 6, 9)
    wf = well_founded(rules, atoms=range(6))
    models = stable_models(rules)
    for m in models:
        assert is_stable(rules, m)
        assert wf.true <= m and not (wf.false & m)
    # stable models form an antichain
    for a in models:
        for b in models:
            assert a == b or not a < b
    if wf.total:
        assert models == [wf.true]
