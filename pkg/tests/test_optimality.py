import dataclasses
import json

import pytest

from nonlocal_ot.core import StructuralError
from nonlocal_ot.optimality import (
    DEFAULT_ENUMERATION_BOUND,
    LOWER_BOUNDS,
    SearchSpace,
    _Engine,
    locate,
    named_spaces,
    one_way_leak_certificate,
    search,
    templates,
    witness_positive,
)
from nonlocal_ot.primitives import ko, ok, ot, pr
from nonlocal_ot.protocols import PartyProgram, ProtocolSpec, get_protocol
from nonlocal_ot.verifier import check_correctness, check_privacy, verify

from oracles import brute_force

# (resource, target, template, tape_a, tape_b) -> (correct, correct_and_private),
# frozen from oracles.brute_force
ORACLE = [
    (pr, ot, (), 0, 0, (0, 0)),
    (pr, ot, ("AB",), 0, 0, (8, 8)),
    (pr, ot, ("AB",), 0, 1, (8, 8)),
    (pr, ot, (), 1, 1, (0, 0)),
    (ok, ot, ("BA",), 0, 0, (0, 0)),
    (ot, pr, (), 1, 0, (32, 32)),
    (ot, pr, ("AB",), 0, 0, (0, 0)),
]


def label(case):
    res, tgt, tpl, ta, tb, _ = case
    return f"{res.__name__}-{tgt.__name__}-{'.'.join(tpl) or 'none'}-t{ta}{tb}"


@pytest.mark.parametrize("case", ORACLE, ids=label)
def test_frozen_counts_match_oracle(case):
    res, tgt, tpl, ta, tb, expected = case
    assert brute_force(res(), tgt(), tpl, ta, tb) == expected


@pytest.mark.parametrize("case", ORACLE, ids=label)
def test_engine_counts_match_frozen_values(case):
    res, tgt, tpl, ta, tb, (correct, private) = case
    space = SearchSpace(res(), tgt(), tpl, ta, tb)
    full = search(space, count_correct=True)
    assert (full.correct, full.correct_and_private) == (correct, private)
    assert full.correct_exact and full.exhausted
    # privacy pruning never changes the private count
    assert search(space).correct_and_private == private


def run_engine(space, coloring, count_correct):
    engine = _Engine(space, 8, DEFAULT_ENUMERATION_BOUND)
    engine.use_coloring = coloring
    engine.prune_private = not count_correct
    result = engine.run()
    return result.correct, result.correct_and_private


@pytest.mark.parametrize("space", [
    SearchSpace(pr(), ot(), ("AB",), 1, 1),
    SearchSpace(pr(), ot(), ("AB", "AB"), 0, 0),
    SearchSpace(ok(), ot(), ("BA", "AB"), 0, 0),
], ids=lambda s: f"{s.resource.name}-{'.'.join(s.template)}-t{s.tape_a}")
def test_coloring_path_agrees_with_generic_path(space):
    for count_correct in (True, False):
        fast = run_engine(space, True, count_correct)
        slow = run_engine(space, False, count_correct)
        assert fast == slow


def test_two_bit_pr_to_ot_counts():
    # pruning cuts leaking branches, so only the private count is comparable
    space = SearchSpace(pr(), ot(), ("AB", "AB"), 0, 0)
    assert run_engine(space, True, True) == (282240, 12288)
    assert run_engine(space, True, False)[1] == 12288


def test_monotone_in_tape_budget():
    counts = [search(SearchSpace(pr(), ot(), ("AB",), ta, tb), count_correct=True).correct
              for ta, tb in [(0, 0), (0, 1), (1, 1)]]
    assert counts == sorted(counts) and counts[0] > 0
    one_tape = [search(SearchSpace(ot(), pr(), (), ta, 0), count_correct=True).correct
                   for ta in (0, 1)]
    assert one_tape == [0, 32]


def test_monotone_in_message_budget():
    counts = [search(SearchSpace(pr(), ot(), tpl, 0, 0), count_correct=True).correct
              for tpl in [(), ("AB",), ("AB", "AB")]]
    assert counts == [0, 8, 282240]


def test_templates():
    assert templates(0) == [()]
    assert templates(2, one_way=True) == [(), ("AB",), ("AB", "AB")]
    assert len(templates(2)) == 1 + 2 + 4
    assert templates(1, exact=True) == [("AB",), ("BA",)]


def test_refusal_reports_size():
    space = SearchSpace(ok(), ot(), ("AB", "BA", "AB"), 0, 0)
    with pytest.raises(StructuralError, match="needs 4294967296 outer assignments"):
        search(space)
    with pytest.raises(StructuralError, match="bound is 7"):
        search(SearchSpace(pr(), ot(), ("AB",), 0, 0), bound=7)


def test_unsupported_target_is_structural():
    with pytest.raises(StructuralError):
        search(SearchSpace(pr(), ko(), (), 0, 0))


@pytest.mark.parametrize("name", sorted(LOWER_BOUNDS))
def test_witnesses_pass_the_verifier(name):
    result = witness_positive(name)
    assert result.passed
    # outputs are not pinned, so equivalent output tables may be counted too
    assert result.located.correct_and_private >= 1
    (found,) = result.rediscovered.witnesses
    assert verify(found.to_protocol(f"{name}-found")).passed
    # tape-1 witnesses have deviation spaces too large for the malicious
    # check, so only the honest checks run on them
    spec = result.located.witnesses[0].to_protocol(f"{name}-located")
    assert check_correctness(spec).passed
    assert all(c.passed for c in check_privacy(spec).values())


def test_every_listed_witness_is_correct_and_private():
    result = search(SearchSpace(ok(), pr(), ("AB", "BA"), 0, 0), max_witnesses=4)
    assert len(result.witnesses) == 4
    for w in result.witnesses:
        spec = w.to_protocol()
        assert check_correctness(spec).passed
        assert all(c.passed for c in check_privacy(spec).values())


def test_locate_rejects_foreign_programs():
    with pytest.raises(StructuralError):
        locate(get_protocol("ot-from-to"), 0, 0)


def test_one_bit_leak_certificate():
    result = one_way_leak_certificate(bits=1, tape_budget=0)
    assert result.correct_and_private == 0
    assert result.certificates_checked == result.correct
    assert result.certificate_failures == 0


def test_truncated_pr_from_ok_is_not_correct():
    # keep only A's message; B's message is treated as 0 everywhere
    full = get_protocol("pr-from-ok")
    prog_a = PartyProgram(sends=full.program_a.sends, output=lambda v: v.resource_out[0][0])
    prog_b = PartyProgram(output=lambda v: v.resource_out[0][1])
    truncated = ProtocolSpec("pr-from-ok-one-way", ok(), pr(), prog_a, prog_b, ("R", "AB"), 1)
    assert not check_correctness(truncated).passed


def test_empty_space_is_vacuously_impossible():
    result = search(named_spaces("pr-from-ok", 0, one_way=True, tape_a=0, tape_b=0), count_correct=True)
    assert result.correct == 0 and result.correct_and_private == 0
    assert result.certificates_checked == 0 and result.exhausted


def without_timing(result):
    data = result.to_json()
    data.pop("elapsed_ms")
    return json.dumps(data, sort_keys=True)


def test_worker_count_does_not_change_results():
    spaces = named_spaces("ot-from-pr", 1, tape_a=0, tape_b=0)
    assert without_timing(search(spaces, workers=1)) == without_timing(search(spaces, workers=2))


def test_result_json_shape():
    data = search(SearchSpace(pr(), ot(), ("AB",), 0, 0)).to_json()
    assert {"space", "correct", "correct_and_private", "exhausted", "witnesses",
            "strategies_examined", "elapsed_ms"} <= set(data)
    assert data["space"]["templates"] == [["AB"]]
    json.dumps(data)


def test_pinned_space_is_a_single_point():
    spec = get_protocol("ot-from-pr")
    located = locate(spec, 0, 0)
    assert located.correct == 1 and located.correct_and_private == 1
    assert dataclasses.is_dataclass(located.witnesses[0])
