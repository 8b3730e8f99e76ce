import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from nonlocal_ot.core import StructuralError
from nonlocal_ot.nonlocality import (
    LOCAL_BOUND,
    SINGLET_TABLE_ANGLES,
    TSIRELSON,
    EqualStats,
    MeasurementAngles,
    StateVector2Q,
    chsh_correlator,
    chsh_p_value,
    chsh_summary,
    equal_stats,
    local_strategies,
    local_strategy_stats,
    pr_paper_variant,
    singlet,
    singlet_equal_probability,
    singlet_stats,
)
from nonlocal_ot.primitives import flip_output, is_non_signaling, ok, pr

from oracles import local_chsh_values

TOL = 1e-9
SINGLET_TABLE = (0, Fraction(1, 4), Fraction(1, 4), Fraction(3, 4))


def test_equal_stats_of_primitives():
    assert equal_stats(pr()).as_tuple() == (1, 1, 1, 0)
    assert equal_stats(pr_paper_variant()).as_tuple() == (0, 0, 0, 1)
    with pytest.raises(StructuralError):
        equal_stats(ok())


def test_variant_is_a_relabeling_of_pr():
    assert flip_output(pr_paper_variant(), "B", name="pr") == pr()
    assert is_non_signaling(pr_paper_variant())


@pytest.mark.parametrize("strategy,stats", [
    ((0, 0, 1, 0), (0, 1, 0, 1)),
    ((0, 0, 0, 0), (1, 1, 1, 1)),
    ((1, 0, 1, 0), (1, 0, 0, 1)),
])
def test_local_strategy_examples(strategy, stats):
    assert local_strategy_stats(*strategy).as_tuple() == stats


def test_local_strategies_match_oracle():
    oracle = local_chsh_values()
    assert len(local_strategies()) == 16
    for s, stats in local_strategies():
        assert stats.as_tuple() == oracle[s]


def test_local_bound_exactly():
    values = [chsh_p_value(s) for _, s in local_strategies()]
    assert max(values) == 0
    for _, s in local_strategies():
        assert s.p11 <= s.p00 + s.p01 + s.p10
    correlators = [chsh_correlator(s) for _, s in local_strategies()]
    assert max(correlators) == LOCAL_BOUND == 2
    assert set(correlators) <= {-4, -2, 0, 2}


def test_p_value_examples():
    assert chsh_p_value(EqualStats(*SINGLET_TABLE)) == Fraction(1, 4)
    assert chsh_p_value(equal_stats(pr_paper_variant())) == 1


def test_correlator_examples():
    singlet_value = chsh_correlator(EqualStats(*SINGLET_TABLE))
    assert singlet_value == Fraction(5, 2)
    assert singlet_value <= TSIRELSON + TOL
    pr_value = chsh_correlator(equal_stats(pr_paper_variant()))
    assert pr_value == 4 and pr_value > TSIRELSON
    assert abs(TSIRELSON - 2 * math.sqrt(2)) < 1e-15


def test_affine_identity_between_the_two_forms():
    # E = 2p - 1 gives E11 - E10 - E01 - E00 = 2 (p11 - p10 - p01 - p00) + 2
    points = [s for _, s in local_strategies()]
    points += [EqualStats(*SINGLET_TABLE), equal_stats(pr()), equal_stats(pr_paper_variant())]
    for s in points:
        assert chsh_correlator(s) == 2 * chsh_p_value(s) + 2


def test_singlet_table_angles_reproduce_the_table():
    got = singlet_stats(SINGLET_TABLE_ANGLES).as_tuple()
    for g, want in zip(got, SINGLET_TABLE):
        assert abs(g - float(want)) < TOL


def test_singlet_equal_angles_never_agree():
    s = singlet_stats(MeasurementAngles((0.3, 1.0), (0.3, 2.0)))
    assert abs(s.p00) < TOL


def test_singlet_orthogonal_pair():
    s = singlet_stats(MeasurementAngles((0.0, math.pi / 2), (0.0, math.pi / 2)))
    assert abs(s[(1, 0)] - 0.5) < TOL


def test_state_vector_matches_closed_form_on_grid():
    grid = np.linspace(-math.pi, math.pi, 10)
    state = singlet()
    count = 0
    for alpha, beta in itertools.product(grid, grid):
        probs = state.outcome_probabilities(alpha, beta)
        assert abs(probs.sum() - 1) < TOL
        assert abs(probs[0, 0] + probs[1, 1] - singlet_equal_probability(alpha, beta)) < TOL
        count += 1
    assert count == 100


def test_swapping_parties_transposes_stats():
    m = MeasurementAngles((0.1, 1.3), (-0.7, 2.2))
    a = singlet_stats(m).transpose().as_tuple()
    b = singlet_stats(m.swapped()).as_tuple()
    assert all(abs(x - y) < TOL for x, y in zip(a, b))


def test_state_must_be_normalized():
    with pytest.raises(StructuralError):
        StateVector2Q([1, 1, 0, 0])
    with pytest.raises(StructuralError):
        MeasurementAngles((math.nan, 0.0), (0.0, 0.0))


def test_summary_values():
    s = chsh_summary("singlet")
    assert s["p_value"] == 0.25 and s["correlator"] == 2.5
    assert s["violates_local"] and not s["violates_quantum"]
    v = chsh_summary("pr-variant")
    assert v["p_stats"] == ["0", "0", "0", "1"] and v["correlator"] == "4"
    assert v["violates_quantum"]
    assert chsh_summary("local:0010")["p_stats"] == ["0", "1", "0", "1"]
    assert chsh_summary("pr")["tsirelson"] == 2.8284271247
    with pytest.raises(StructuralError):
        chsh_summary("local:01")
    with pytest.raises(StructuralError):
        chsh_summary("classical")
