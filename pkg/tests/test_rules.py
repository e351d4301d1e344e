import itertools
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eroders import rules
from eroders.errors import ConstantFunction, InvalidParameters, InvalidRule, MissingOffset, NotMonotone
from eroders.rules import MonotoneRule, evaluate, from_truth_table, minimal_transversals
from oracles import brute_transversals
from strategies import monotone_rules

N, E, C = (0, 1), (1, 0), (0, 0)


def assignments(rule):
    sup = rule.support
    for bits in itertools.product((0, 1), repeat=len(sup)):
        yield dict(zip(sup, bits))


def test_nec_majority(nec):
    assert evaluate(nec, {N: 1, E: 1, C: 0}) == 1
    assert evaluate(nec, {N: 1, E: 0, C: 0}) == 0
    for local in assignments(nec):
        assert nec(local) == int(sum(local.values()) >= 2)


def test_nsmm_example(nsmm):
    assert nsmm({(0, 0): 1, (1, 0): 0, (0, 1): 1, (1, 1): 1}) == 1
    assert nsmm({(0, 0): 1, (1, 0): 0, (0, 1): 1, (1, 1): 0}) == 0


def test_missing_offset(nec):
    with pytest.raises(MissingOffset):
        evaluate(nec, {N: 1, E: 1})


@pytest.mark.parametrize("name", ["nec", "nsmm", "non-example", "identity", "min-max:3:1", "min-max:4:2"])
def test_constant_extremes(name):
    rule = rules.builtin(name)
    assert rule({o: 0 for o in rule.support}) == 0
    assert rule({o: 1 for o in rule.support}) == 1


def test_radius_and_support(nec, non_example):
    assert nec.support == ((0, 0), (0, 1), (1, 0))
    assert nec.radius_squared == 1
    assert non_example.radius_squared == 5
    assert non_example.reach == 2


def test_invalid_rules():
    with pytest.raises(InvalidRule):
        MonotoneRule(2, ())
    with pytest.raises(InvalidRule):
        MonotoneRule(2, (frozenset(),))
    with pytest.raises(InvalidRule):
        MonotoneRule(2, (frozenset({N}), frozenset({N, E})))
    with pytest.raises(InvalidRule):
        MonotoneRule(2, (frozenset({(0, 0, 0)}),))


def test_truth_table_roundtrip(nec):
    sup = list(nec.support)
    table = {bits: nec(dict(zip(sup, bits))) for bits in itertools.product((0, 1), repeat=3)}
    assert from_truth_table(2, sup, table) == nec


def test_truth_table_errors():
    sup = [N, E]
    with pytest.raises(ConstantFunction):
        from_truth_table(2, sup, {b: 0 for b in itertools.product((0, 1), repeat=2)})
    with pytest.raises(ConstantFunction):
        from_truth_table(2, sup, {b: 1 for b in itertools.product((0, 1), repeat=2)})
    xor = {b: b[0] ^ b[1] for b in itertools.product((0, 1), repeat=2)}
    with pytest.raises(NotMonotone) as info:
        from_truth_table(2, sup, xor)
    assert info.value.lower in ((1, 0), (0, 1))
    with pytest.raises(InvalidRule):
        from_truth_table(2, sup, {(0, 0): 0, (1, 1): 1})


def test_truth_table_drops_irrelevant_offsets():
    sup = [N, E, C]
    table = {b: b[0] for b in itertools.product((0, 1), repeat=3)}
    rule = from_truth_table(2, sup, table)
    assert rule.support == (N,)


def test_dual_and_zero_sets(nec, nsmm):
    assert rules.is_self_spin_flip(nec)
    assert not rules.is_self_spin_flip(nsmm)
    assert set(rules.minimal_zero_sets(nsmm)) == {
        frozenset(s) for s in [{(0, 0), (0, 1)}, {(0, 0), (1, 1)}, {(1, 0), (0, 1)}, {(1, 0), (1, 1)}]
    }
    assert rules.spin_flip_dual(rules.spin_flip_dual(nsmm)) == nsmm
    assert rules.spin_flip_dual(nsmm).name == "nsmm-dual"


@given(monotone_rules(max_support=7))
@settings(max_examples=150, deadline=None)
def test_transversals_match_brute_force(rule):
    assert set(minimal_transversals(rule.minimal_one_sets)) == brute_transversals(rule.minimal_one_sets)


@given(monotone_rules(max_support=6))
@settings(max_examples=100, deadline=None)
def test_dual_is_complement_negation(rule):
    dual = rules.spin_flip_dual(rule)
    for local in assignments(rule):
        assert dual(local) == 1 - rule({o: 1 - v for o, v in local.items()})


@given(monotone_rules(max_support=6), st.data())
@settings(max_examples=100, deadline=None)
def test_evaluate_is_monotone(rule, data):
    sup = rule.support
    x = data.draw(st.lists(st.integers(0, 1), min_size=len(sup), max_size=len(sup)))
    y = [max(a, data.draw(st.integers(0, 1))) for a in x]
    assert rule(dict(zip(sup, x))) <= rule(dict(zip(sup, y)))


def test_min_max():
    rule = rules.min_max(2, 1)
    # min over i1 of max over i2 of x(i1, i2)
    for local in assignments(rule):
        expect = min(max(local[(a, b)] for b in (0, 1)) for a in (0, 1))
        assert rule(local) == expect
    with pytest.raises(InvalidParameters):
        rules.min_max(2, 2)


def test_builtin_errors():
    with pytest.raises(InvalidParameters):
        rules.builtin("toom")
    with pytest.raises(InvalidParameters):
        rules.builtin("min-max:x:1")


def test_rule_files(tmp_path, nsmm):
    path = tmp_path / "r.json"
    path.write_text(json.dumps(rules.rule_to_dict(nsmm)))
    assert rules.load_rule(path) == nsmm
    table_rule = {
        "dimension": 2,
        "support": [[0, 1], [1, 0], [0, 0]],
        "truth_table": [[f"{a}{b}{c}", int(a + b + c >= 2)] for a in range(2) for b in range(2) for c in range(2)],
    }
    path.write_text(json.dumps(table_rule))
    assert rules.load_rule(path) == rules.nec()
    path.write_text(json.dumps({"dimension": 2, "support": [[0, 0]]}))
    with pytest.raises(InvalidRule):
        rules.load_rule(path)
