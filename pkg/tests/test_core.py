import itertools
import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonlocal_ot.core import (
    FiniteDist,
    StructuralError,
    UndefinedConditional,
    View,
    World,
    bit,
    condition,
    dist_equal,
    dist_from_worlds,
    marginal,
    record,
)
from nonlocal_ot.primitives import ok
from nonlocal_ot.protocols import get_protocol, run_protocol

BITS = (0, 1)


def ok_dist():
    """The OK table as a flat record distribution."""
    (row,) = ok().table.values()
    return row.map(lambda rec: record(
        X0=dict(rec)["A"][0], X1=dict(rec)["A"][1], C=dict(rec)["B"][0], Y=dict(rec)["B"][1]))


def test_bit_algebra():
    for x in BITS:
        assert x ^ x == 0
        assert x & 1 == x
        for y in BITS:
            assert x ^ y in BITS and x & y in BITS
    assert bit(True) == 1
    with pytest.raises(StructuralError):
        bit(2)
    with pytest.raises(StructuralError):
        bit(1.0)


def test_masses_must_sum_to_one():
    with pytest.raises(StructuralError):
        FiniteDist({0: Fraction(1, 2)})
    with pytest.raises(StructuralError):
        FiniteDist({0: Fraction(3, 2), 1: Fraction(-1, 2)})
    with pytest.raises(StructuralError):
        FiniteDist({0: 0.5, 1: 0.5})


def test_zero_mass_atoms_dropped():
    d = FiniteDist({0: 1, 1: 0})
    assert d.support == (0,)
    assert d.mass(1) == 0


def test_dist_from_worlds_collapses_identical_records():
    r = record(a=1)
    d = dist_from_worlds([("w1", r), ("w2", r)], lambda w: Fraction(1, 2))
    assert d == FiniteDist.point(r)


def test_dist_from_worlds_uniform_pushforward():
    recs = [record(i=i) for i in range(4)]
    d = dist_from_worlds([(i, recs[i]) for i in range(4)], lambda w: Fraction(1, 4))
    assert d == FiniteDist.uniform(recs)
    assert all(m == Fraction(1, 4) for _, m in d)


def test_dist_from_worlds_rejects_bad_weights():
    with pytest.raises(StructuralError):
        dist_from_worlds([("w", record(a=0))], lambda w: Fraction(1, 2))


def test_pr_from_ok_enumeration_gives_pr_table():
    spec = get_protocol("pr-from-ok")
    for x, y in itertools.product(BITS, BITS):
        worlds = [World(x, y, (), (), t) for t in itertools.product(BITS, repeat=3)]
        pairs = [(w, record(A=r.output_a, B=r.output_b))
                 for w in worlds for r in [run_protocol(spec, w)]]
        d = dist_from_worlds(pairs, lambda w: Fraction(1, 8))
        assert d == spec.target.row(x, y)


def test_marginal_of_ok_on_x0_is_uniform():
    assert marginal(ok_dist(), ["X0"]) == FiniteDist.uniform([record(X0=0), record(X0=1)])


def test_marginal_of_point_and_product():
    r = record(a=1, b=0)
    assert marginal(FiniteDist.point(r), ["a"]) == FiniteDist.point(record(a=1))
    prod = FiniteDist.uniform(record(a=a, b=b) for a in BITS for b in BITS)
    assert prod.marginal(["a"]) == FiniteDist.uniform([record(a=0), record(a=1)])


def test_marginal_unknown_coordinate():
    with pytest.raises(StructuralError):
        marginal(ok_dist(), ["Z"])


def test_condition_ok_on_c0_forces_y_equal_x0():
    d = condition(ok_dist(), lambda r: r["C"] == 0)
    assert d.prob(lambda rec: dict(rec)["Y"] == dict(rec)["X0"]) == 1


def test_condition_uniform_pair_on_first():
    prod = FiniteDist.uniform(record(a=a, b=b) for a in BITS for b in BITS)
    d = condition(prod, lambda r: r["a"] == 1)
    assert marginal(d, ["b"]) == FiniteDist.uniform([record(b=0), record(b=1)])


def test_condition_on_null_event_is_an_error():
    with pytest.raises(UndefinedConditional):
        condition(ok_dist(), lambda r: r["Y"] != (r["X0"], r["X1"])[r["C"]])


def test_dist_equal_cases():
    d = ok_dist()
    assert dist_equal(d, d)
    assert dist_equal(FiniteDist.uniform(BITS), FiniteDist({0: Fraction(1, 2), 1: Fraction(1, 2)}))
    assert not dist_equal(FiniteDist.uniform(BITS), FiniteDist.point(0))


def test_json_masses_are_exact_strings():
    data = FiniteDist.uniform([record(a=1), record(a=0)]).to_json()
    assert data == {"atoms": [{"record": {"a": 0}, "mass": "1/2"},
                              {"record": {"a": 1}, "mass": "1/2"}]}
    json.dumps(data)


def test_world_json_roundtrip():
    w = World((1, 0), 1, (0,), (), (1, 1, 0))
    assert World.from_json(json.loads(json.dumps(w.to_json()))) == w


def test_view_history_excludes_own_choices():
    v = View("A", 1, (0,), (1,), (0,), (1,), (0,), 1)
    assert v.history() == (1, (0,), (0,), (1,))


# property tests

weights = st.lists(st.integers(min_value=1, max_value=9), min_size=1, max_size=8)


def _dist(ws):
    total = sum(ws)
    return FiniteDist([(record(i=i % 3, j=i % 2), Fraction(w, total)) for i, w in enumerate(ws)])


@settings(max_examples=60, deadline=None)
@given(weights)
def test_mass_sum_is_exactly_one(ws):
    assert sum(m for _, m in _dist(ws)) == 1


@settings(max_examples=60, deadline=None)
@given(weights, st.randoms(use_true_random=False))
def test_dist_from_worlds_order_independent(ws, rnd):
    total = sum(ws)
    worlds = [(k, record(i=k % 3)) for k in range(len(ws))]
    shuffled = worlds[:]
    rnd.shuffle(shuffled)
    wt = lambda k: Fraction(ws[k], total)
    assert dist_from_worlds(worlds, wt) == dist_from_worlds(shuffled, wt)


@settings(max_examples=60, deadline=None)
@given(weights, st.integers(min_value=0, max_value=2))
def test_condition_and_marginal_commute(ws, target):
    d = _dist(ws)
    pred = lambda r: r["i"] == target
    if d.prob(lambda rec: dict(rec)["i"] == target) == 0:
        return
    assert marginal(condition(d, pred), ["i"]) == condition(marginal(d, ["i"]), pred)
