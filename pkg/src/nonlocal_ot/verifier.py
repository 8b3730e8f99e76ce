"""Exhaustive, exact verification of reduction protocols.

Every check enumerates all input pairs and all tape assignments, so verdicts
are exact equalities of rational distributions. Privacy for party P means

    view_P  is independent of  (input_Q, output_Q)  given  (input_P, output_P)

which is the perfect honest-but-curious simulatability condition: the common
conditional law, indexed by P's own input and output, *is* the simulator.
"""

from __future__ import annotations

import dataclasses
import itertools
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable

from .core import FiniteDist, StructuralError, World, sort_key, symbol_to_json
from .primitives import output_record
from .protocols import PartyProgram, ProtocolSpec, RunResult, get_protocol, run_protocol

__all__ = [
    "DEFAULT_TAPE_BOUND",
    "DEFAULT_DEVIATION_BOUND",
    "JointDistribution",
    "CheckResult",
    "DeviationStrategy",
    "VerificationReport",
    "enumerate_worlds",
    "check_correctness",
    "check_privacy",
    "decision_points",
    "deviation_space_size",
    "enumerate_deviations",
    "check_malicious",
    "comm_cost",
    "verify",
    "verify_many",
]

DEFAULT_TAPE_BOUND = 20
DEFAULT_DEVIATION_BOUND = 2**24
BITS = (0, 1)


def _other(party: str) -> str:
    return "B" if party == "A" else "A"


@dataclass(frozen=True)
class JointDistribution:
    """All runs of a protocol, grouped by input pair.

    Inputs are free; within an input pair every world has the same weight
    ``1 / 2**tape_bits``.
    """

    spec: ProtocolSpec
    runs: dict
    weight: Fraction

    @property
    def input_pairs(self) -> list:
        return list(self.runs)

    @property
    def worlds(self) -> int:
        return sum(len(r) for r in self.runs.values())

    def law(self, u: Any, v: Any, fn: Callable[[World, RunResult], Any]) -> FiniteDist:
        return FiniteDist([(fn(w, r), self.weight) for w, r in self.runs[(u, v)]])


def _tape_worlds(spec: ProtocolSpec) -> list[tuple]:
    ta = list(itertools.product(BITS, repeat=spec.program_a.tape_len))
    tb = list(itertools.product(BITS, repeat=spec.program_b.tape_len))
    tr = list(itertools.product(BITS, repeat=spec.resource.tape_len))
    return list(itertools.product(ta, tb, tr))


def enumerate_worlds(spec: ProtocolSpec, bound: int = DEFAULT_TAPE_BOUND) -> JointDistribution:
    if spec.tape_bits > bound:
        raise StructuralError(
            f"{spec.name}: {spec.tape_bits} tape bits needed, bound is {bound}"
        )
    tapes = _tape_worlds(spec)
    runs = {}
    for u, v in itertools.product(spec.target.inputs_a, spec.target.inputs_b):
        group = []
        for ta, tb, tr in tapes:
            world = World(u, v, ta, tb, tr)
            group.append((world, run_protocol(spec, world)))
        runs[(u, v)] = group
    return JointDistribution(spec, runs, Fraction(1, 2**spec.tape_bits))


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    counterexample: World | None = None
    witness: dict | None = None
    strategy: int | None = None
    strategies: int | None = None
    detail: str = ""

    def to_json(self) -> dict:
        out: dict = {"pass": self.passed}
        out["counterexample"] = self.counterexample.to_json() if self.counterexample else None
        if self.witness is not None:
            out["witness"] = self.witness
        if self.strategies is not None:
            out["strategies"] = self.strategies
            out["strategy"] = self.strategy
        if self.detail:
            out["detail"] = self.detail
        return out


def check_correctness(spec: ProtocolSpec, joint: JointDistribution | None = None) -> CheckResult:
    """Induced output law equals the target row for every input pair."""
    joint = joint or enumerate_worlds(spec)
    for (u, v), group in joint.runs.items():
        induced = joint.law(u, v, lambda w, r: output_record(r.output_a, r.output_b))
        target = spec.target.row(u, v)
        if induced == target:
            continue
        bad = next(
            (w for w, r in group
             if induced.mass(output_record(r.output_a, r.output_b))
             != target.mass(output_record(r.output_a, r.output_b))),
            group[0][0],
        )
        return CheckResult(
            False, bad,
            witness={"inputA": symbol_to_json(u), "inputB": symbol_to_json(v),
                     "induced": induced.to_json(), "target": target.to_json()},
            detail=f"output law differs from target on inputs {(u, v)}",
        )
    return CheckResult(True)


def _view_record(party: str) -> Callable:
    def fn(w: World, r: RunResult):
        return r.view(party).key()
    return fn


def _privacy_one(spec: ProtocolSpec, joint: JointDistribution, party: str) -> tuple[CheckResult, bool]:
    other = _other(party)
    mine = spec.target.inputs_a if party == "A" else spec.target.inputs_b
    theirs = spec.target.inputs_b if party == "A" else spec.target.inputs_a

    def pair(own, cp):
        return (own, cp) if party == "A" else (cp, own)

    simulator: dict = {}
    for own in mine:
        # (own output) -> {(cp input, cp output): conditional view law}
        groups: dict = defaultdict(dict)
        for cp in theirs:
            runs = joint.runs[pair(own, cp)]
            keyed = defaultdict(list)
            for w, r in runs:
                keyed[(r.output(party), r.output(other))].append((w, r))
            for (out, cp_out), members in sorted(keyed.items(), key=lambda kv: sort_key(kv[0])):
                law = FiniteDist.uniform(r.view(party).key() for _, r in members)
                groups[out][(cp, cp_out)] = (law, members[0][0])
        for out, laws in groups.items():
            items = list(laws.items())
            ref_key, (ref_law, _) = items[0]
            for key, (law, world) in items[1:]:
                if law != ref_law:
                    return CheckResult(
                        False, world,
                        witness={
                            "input": symbol_to_json(own),
                            "output": symbol_to_json(out),
                            "counterpart": [symbol_to_json(ref_key), symbol_to_json(key)],
                        },
                        detail=f"party {party}'s view depends on the counterpart given own (input, output)",
                    ), False
            simulator[(own, out)] = ref_law

    # Simulatability: rebuild (view, counterpart output) from the ideal table.
    simulated = True
    for own, cp in itertools.product(mine, theirs):
        u, v = pair(own, cp)
        real = joint.law(u, v, lambda w, r: (r.view(party).key(), r.output(other)))
        parts = []
        for rec, mass in spec.target.row(u, v):
            outs = dict(rec)
            sim = simulator.get((own, outs[party]))
            if sim is None:
                simulated = False
                break
            parts.extend(((view, outs[other]), mass * m) for view, m in sim)
        if not simulated or FiniteDist(parts) != real:
            simulated = False
            break
    return CheckResult(True), simulated


def check_privacy(spec: ProtocolSpec, joint: JointDistribution | None = None) -> dict[str, CheckResult]:
    joint = joint or enumerate_worlds(spec)
    return {p: _privacy_one(spec, joint, p)[0] for p in ("A", "B")}


def simulatable(spec: ProtocolSpec, joint: JointDistribution | None = None) -> dict[str, bool]:
    """Whether each party's real view is reproduced by the ideal-world simulator."""
    joint = joint or enumerate_worlds(spec)
    return {p: _privacy_one(spec, joint, p)[1] for p in ("A", "B")}


# Deviations


@dataclass(frozen=True)
class DecisionPoint:
    """A choice a party makes: the resource input or one outgoing bit."""

    label: str
    step: int
    codomain: tuple
    domain: tuple
    relevant: bool


def _observations(spec: ProtocolSpec, party: str) -> list[tuple[int, str, tuple]]:
    out = []
    outputs = spec.resource.outputs_a if party == "A" else spec.resource.outputs_b
    incoming = "BA" if party == "A" else "AB"
    for i, step in enumerate(spec.schedule):
        if step == "R":
            out.append((i, "resource", outputs))
        elif step == incoming:
            out.append((i, "message", BITS))
    return out


def _history_domain(spec: ProtocolSpec, party: str, step: int, include_current: bool) -> tuple:
    inputs = spec.target.inputs_a if party == "A" else spec.target.inputs_b
    tapes = list(itertools.product(BITS, repeat=spec.program(party).tape_len))
    res_opts: list = [()]
    msg_alpha = []
    for i, kind, alpha in _observations(spec, party):
        if i > step or (i == step and not include_current):
            continue
        if kind == "resource":
            res_opts = [(o,) for o in alpha]
        else:
            msg_alpha.append(alpha)
    msgs = list(itertools.product(*msg_alpha))
    return tuple(itertools.product(inputs, tapes, res_opts, msgs))


def decision_points(spec: ProtocolSpec, party: str) -> list[DecisionPoint]:
    """The party's decisions in schedule order, with their history domains.

    A decision is *relevant* when an informative observation (alphabet larger
    than one symbol) follows it; the party's own view cannot depend on the
    others, so deviation enumeration fixes them to honest behavior.
    """
    obs = [(i, alpha) for i, _, alpha in _observations(spec, party) if len(alpha) > 1]
    outgoing = "AB" if party == "A" else "BA"
    res_inputs = spec.resource.inputs_a if party == "A" else spec.resource.inputs_b
    points = []
    sends = 0
    for i, step in enumerate(spec.schedule):
        if step == "R" and len(res_inputs) > 1:
            relevant = any(j >= i for j, _ in obs)
            points.append(DecisionPoint("resource", i, res_inputs,
                                        _history_domain(spec, party, i, False), relevant))
        elif step == outgoing:
            relevant = any(j > i for j, _ in obs)
            points.append(DecisionPoint(f"send{sends}", i, BITS,
                                        _history_domain(spec, party, i, False), relevant))
            sends += 1
    return points


def deviation_space_size(spec: ProtocolSpec, party: str, relevant_only: bool = True) -> int:
    size = 1
    for d in decision_points(spec, party):
        if d.relevant or not relevant_only:
            size *= len(d.codomain) ** len(d.domain)
    return size


@dataclass(frozen=True)
class DeviationStrategy:
    party: str
    index: int
    tables: tuple  # ((label, ((history, value), ...)), ...)

    def apply(self, spec: ProtocolSpec) -> ProtocolSpec:
        program = spec.program(self.party)
        tables = {label: dict(entries) for label, entries in self.tables}
        changes = {}
        if "resource" in tables:
            t = tables["resource"]
            changes["resource_input"] = lambda v, t=t: t[v.history()]
        sends = list(program.sends)
        for k in range(len(sends)):
            t = tables.get(f"send{k}")
            if t is not None:
                sends[k] = lambda v, t=t: t[v.history()]
        changes["sends"] = tuple(sends)
        deviant: PartyProgram = dataclasses.replace(program, **changes)
        key = "program_a" if self.party == "A" else "program_b"
        return dataclasses.replace(spec, **{key: deviant, "name": f"{spec.name}/dev{self.party}{self.index}"})


def enumerate_deviations(
    spec: ProtocolSpec, party: str, bound: int = DEFAULT_DEVIATION_BOUND
) -> list[DeviationStrategy]:
    """All deterministic substitutions of the party's relevant decisions."""
    size = deviation_space_size(spec, party)
    if size > bound:
        raise StructuralError(
            f"{spec.name}: deviation space for {party} has {size} strategies, bound is {bound}"
        )
    points = [d for d in decision_points(spec, party) if d.relevant]
    per_point = [
        [tuple(zip(d.domain, values)) for values in itertools.product(d.codomain, repeat=len(d.domain))]
        for d in points
    ]
    out = []
    for index, choice in enumerate(itertools.product(*per_point)):
        tables = tuple((d.label, entries) for d, entries in zip(points, choice))
        out.append(DeviationStrategy(party, index, tables))
    return out


def _uniform_given(laws: dict, coord: Callable, given: Callable) -> bool:
    """For each conditioning value, ``coord`` is exactly uniform on {0, 1}."""
    counts: dict = defaultdict(lambda: [Fraction(0), Fraction(0)])
    for outcome, mass in laws:
        counts[given(outcome)][coord(outcome)] += mass
    return all(c0 == c1 for c0, c1 in counts.values())


def _secret_hidden_from_choice_holder(joint_law: FiniteDist) -> tuple[bool, Any]:
    """Some c* leaves the other message bit uniform given (view, x_c*).

    ``joint_law`` is over (view, (x0, x1)).
    """
    by_view: dict = defaultdict(list)
    for (view, xs), mass in joint_law:
        by_view[view].append((xs, mass))
    for view, entries in sorted(by_view.items(), key=lambda kv: sort_key(kv[0])):
        ok = False
        for c_star in BITS:
            counts: dict = defaultdict(lambda: [Fraction(0), Fraction(0)])
            for xs, mass in entries:
                counts[xs[c_star]][xs[1 - c_star]] += mass
            if all(c0 == c1 for c0, c1 in counts.values()):
                ok = True
                break
        if not ok:
            return False, view
    return True, None


def _malicious_verdict(spec: ProtocolSpec, deviant: ProtocolSpec, party: str) -> tuple[bool, World | None, str]:
    joint = enumerate_worlds(deviant)
    target = spec.target
    honest = _other(party)
    mine = target.inputs_a if party == "A" else target.inputs_b
    theirs = target.inputs_b if party == "A" else target.inputs_a

    def pair(own, cp):
        return (own, cp) if party == "A" else (cp, own)

    def first_world(own, predicate):
        for cp in theirs:
            for w, r in joint.runs[pair(own, cp)]:
                if predicate(r):
                    return w
        return None

    view = _view_record(party)
    if target.family == "pr" or (target.family == "ot" and party == target.holder):
        # the deviator's view must not depend on the honest party's input
        for own in mine:
            laws = [joint.law(*pair(own, cp), view) for cp in theirs]
            if any(law != laws[0] for law in laws[1:]):
                return False, first_world(own, lambda r: True), "view depends on honest input"
        return True, None, ""

    if target.family == "ot":
        # deviating receiver against uniformly random sender bits
        for own in mine:
            law = FiniteDist([
                ((r.view(party).key(), w.input_a if honest == "A" else w.input_b), joint.weight / len(theirs))
                for cp in theirs for w, r in joint.runs[pair(own, cp)]
            ])
            ok, bad_view = _secret_hidden_from_choice_holder(law)
            if not ok:
                return False, first_world(own, lambda r: r.view(party).key() == bad_view), \
                    "both sender bits constrained by one view"
        return True, None, ""

    # ok family: inputs are trivial
    (own,) = mine
    (cp,) = theirs
    runs = joint.runs[pair(own, cp)]
    if party == target.holder:
        # honest choice holder's C stays uniform given the deviator's view
        law = FiniteDist([((r.view(party).key(), r.output(honest)[0]), joint.weight) for _, r in runs])
        if not _uniform_given(law, lambda o: o[1], lambda o: o[0]):
            return False, runs[0][0], "choice bit C not uniform given view"
        return True, None, ""
    law = FiniteDist([((r.view(party).key(), r.output(honest)), joint.weight) for _, r in runs])
    ok, bad_view = _secret_hidden_from_choice_holder(law)
    if not ok:
        world = next(w for w, r in runs if r.view(party).key() == bad_view)
        return False, world, "both key bits constrained by one view"
    return True, None, ""


def check_malicious(
    spec: ProtocolSpec, party: str, bound: int = DEFAULT_DEVIATION_BOUND
) -> CheckResult:
    """Every deterministic deviation of ``party`` keeps the honest side's secret."""
    strategies = enumerate_deviations(spec, party, bound)
    for strategy in strategies:
        ok, world, why = _malicious_verdict(spec, strategy.apply(spec), party)
        if not ok:
            return CheckResult(False, world, strategy=strategy.index,
                               strategies=len(strategies), detail=why)
    return CheckResult(True, strategies=len(strategies))


def comm_cost(spec: ProtocolSpec, joint: JointDistribution | None = None) -> int:
    joint = joint or enumerate_worlds(spec)
    for group in joint.runs.values():
        for world, run in group:
            if len(run.transcript) != spec.comm_bits:
                raise StructuralError(
                    f"{spec.name}: transcript of {len(run.transcript)} bits in {world}, "
                    f"declared {spec.comm_bits}"
                )
            if run.resource_calls != 1:
                raise StructuralError(f"{spec.name}: resource called {run.resource_calls} times")
    return spec.comm_bits


@dataclass(frozen=True)
class VerificationReport:
    protocol: str
    resource: str
    target: str
    correctness: CheckResult
    privacy: dict
    malicious: dict
    comm_bits: int
    worlds: int
    simulatable: dict = field(default_factory=dict)
    notes: tuple = ()

    @property
    def passed(self) -> bool:
        return (
            self.correctness.passed
            and all(c.passed for c in self.privacy.values())
            and all(c.passed for c in self.malicious.values())
        )

    def to_json(self) -> dict:
        return {
            "protocol": self.protocol,
            "resource": self.resource,
            "target": self.target,
            "pass": self.passed,
            "correctness": self.correctness.to_json(),
            "privacy": {p: self.privacy[p].to_json() for p in ("A", "B")},
            "simulatable": {p: self.simulatable.get(p) for p in ("A", "B")},
            "malicious": {p: self.malicious[p].to_json() for p in ("A", "B")},
            "comm_bits": self.comm_bits,
            "worlds": self.worlds,
            "notes": list(self.notes),
        }


def verify(
    spec: ProtocolSpec,
    tape_bound: int = DEFAULT_TAPE_BOUND,
    deviation_bound: int = DEFAULT_DEVIATION_BOUND,
) -> VerificationReport:
    joint = enumerate_worlds(spec, tape_bound)
    bits = comm_cost(spec, joint)
    correctness = check_correctness(spec, joint)
    privacy, sim = {}, {}
    for p in ("A", "B"):
        privacy[p], sim[p] = _privacy_one(spec, joint, p)
    if correctness.passed and all(c.passed for c in privacy.values()) and not all(sim.values()):
        raise AssertionError(f"{spec.name}: private but not simulatable; verifier bug")
    malicious = {p: check_malicious(spec, p, deviation_bound) for p in ("A", "B")}
    return VerificationReport(
        spec.name, spec.resource.name, spec.target.name, correctness, privacy,
        malicious, bits, joint.worlds, sim, spec.notes,
    )


def _verify_named(name: str) -> dict:
    return verify(get_protocol(name)).to_json()


def verify_many(names: Iterable[str], workers: int = 1) -> list[dict]:
    """Verify catalog protocols by name; result order follows ``names``."""
    names = list(names)
    if workers <= 1 or len(names) <= 1:
        return [_verify_named(n) for n in names]
    with ProcessPoolExecutor(max_workers=min(workers, len(names))) as pool:
        return list(pool.map(_verify_named, names))
