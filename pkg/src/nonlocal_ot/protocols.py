"""Reduction protocols as deterministic party programs plus a static schedule.

A schedule is a tuple of steps: ``"R"`` (the single resource call),
``"AB"`` (one bit from A to B) and ``"BA"``. A party program supplies one
callable per decision it makes; every callable receives the party's
:class:`~nonlocal_ot.core.View` as it stands at that point and nothing else.
"""

from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass, field
from typing import Any, Callable

from .core import Message, StructuralError, View, World
from .primitives import NULL, Primitive, flip_output, ko, ok, ot, pr, to

__all__ = [
    "PartyProgram",
    "ProtocolSpec",
    "RunResult",
    "run_protocol",
    "pr_from_ot",
    "ok_from_pr",
    "ok_from_ot",
    "ot_from_pr",
    "pr_from_ok",
    "ot_from_ok",
    "ot_from_to",
    "ok_from_ko",
    "ok_from_ko_literal",
    "CATALOG",
    "get_protocol",
    "relabel_output",
    "resource_tape_for",
]

STEPS = ("R", "AB", "BA")


@dataclass(frozen=True)
class PartyProgram:
    """One party's side of a protocol.

    ``resource_input`` may be ``None`` when the resource takes no input from
    this party. ``sends`` holds one callable per outgoing bit, in schedule
    order.
    """

    output: Callable[[View], Any]
    resource_input: Callable[[View], Any] | None = None
    sends: tuple[Callable[[View], int], ...] = ()
    tape_names: tuple[str, ...] = ()

    @property
    def tape_len(self) -> int:
        return len(self.tape_names)


@dataclass(frozen=True)
class ProtocolSpec:
    name: str
    resource: Primitive
    target: Primitive
    program_a: PartyProgram
    program_b: PartyProgram
    schedule: tuple[str, ...]
    comm_bits: int
    notes: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if any(s not in STEPS for s in self.schedule):
            raise StructuralError(f"{self.name}: bad schedule step in {self.schedule}")
        if self.schedule.count("R") != 1:
            raise StructuralError(f"{self.name}: resource must be called exactly once")
        n_ab, n_ba = self.schedule.count("AB"), self.schedule.count("BA")
        if n_ab + n_ba != self.comm_bits:
            raise StructuralError(
                f"{self.name}: schedule carries {n_ab + n_ba} bits, declared {self.comm_bits}"
            )
        if len(self.program_a.sends) != n_ab or len(self.program_b.sends) != n_ba:
            raise StructuralError(f"{self.name}: send count does not match schedule")

    def program(self, party: str) -> PartyProgram:
        return self.program_a if party == "A" else self.program_b

    @property
    def tape_bits(self) -> int:
        return self.program_a.tape_len + self.program_b.tape_len + self.resource.tape_len


@dataclass(frozen=True)
class RunResult:
    output_a: Any
    output_b: Any
    view_a: View
    view_b: View
    transcript: tuple[Message, ...]
    resource_calls: int = 1

    def view(self, party: str) -> View:
        return self.view_a if party == "A" else self.view_b

    def output(self, party: str) -> Any:
        return self.output_a if party == "A" else self.output_b


class _Party:
    def __init__(self, name: str, own_input: Any, tape: tuple):
        self.name = name
        self.own_input = own_input
        self.tape = tape
        self.resource_in: tuple = ()
        self.resource_out: tuple = ()
        self.messages_in: list[int] = []
        self.messages_out: list[int] = []
        self.sent = 0

    def view(self, output: Any = None) -> View:
        return View(
            self.name, self.own_input, self.tape, self.resource_in, self.resource_out,
            tuple(self.messages_in), tuple(self.messages_out), output,
        )


def _check_world(spec: ProtocolSpec, world: World) -> None:
    if world.input_a not in spec.target.inputs_a or world.input_b not in spec.target.inputs_b:
        raise StructuralError(f"{spec.name}: inputs outside the target alphabets")
    for tape, want, label in (
        (world.tape_a, spec.program_a.tape_len, "A tape"),
        (world.tape_b, spec.program_b.tape_len, "B tape"),
        (world.resource_tape, spec.resource.tape_len, "resource tape"),
    ):
        if len(tape) != want or any(t not in (0, 1) for t in tape):
            raise StructuralError(f"{spec.name}: {label} must be {want} bits, got {tape}")


def _resource_input(program: PartyProgram, alphabet: tuple, view: View) -> Any:
    if program.resource_input is None:
        if len(alphabet) != 1:
            raise StructuralError("resource needs an input but the program gives none")
        return alphabet[0]
    value = program.resource_input(view)
    if value not in alphabet:
        raise StructuralError(f"resource input {value!r} outside alphabet")
    return value


def run_protocol(spec: ProtocolSpec, world: World) -> RunResult:
    """Execute one world along the schedule. Pure and deterministic."""
    _check_world(spec, world)
    a = _Party("A", world.input_a, tuple(world.tape_a))
    b = _Party("B", world.input_b, tuple(world.tape_b))
    transcript = []
    calls = 0
    for step in spec.schedule:
        if step == "R":
            u = _resource_input(spec.program_a, spec.resource.inputs_a, a.view())
            v = _resource_input(spec.program_b, spec.resource.inputs_b, b.view())
            out_a, out_b = spec.resource.sample(u, v, tuple(world.resource_tape))
            a.resource_in, a.resource_out = (u,), (out_a,)
            b.resource_in, b.resource_out = (v,), (out_b,)
            calls += 1
            continue
        sender, receiver = (a, b) if step == "AB" else (b, a)
        program = spec.program(sender.name)
        value = program.sends[sender.sent](sender.view())
        if value not in (0, 1):
            raise StructuralError(f"{spec.name}: party {sender.name} sent {value!r}")
        value = int(value)
        sender.sent += 1
        sender.messages_out.append(value)
        receiver.messages_in.append(value)
        transcript.append(Message(step, value))

    out_a = spec.program_a.output(a.view())
    out_b = spec.program_b.output(b.view())
    if out_a not in spec.target.outputs_a or out_b not in spec.target.outputs_b:
        raise StructuralError(f"{spec.name}: outputs {(out_a, out_b)} outside target alphabets")
    return RunResult(out_a, out_b, a.view(out_a), b.view(out_b), tuple(transcript), calls)


# The catalog. Inside each program ``v`` is the party's current view.

def pr_from_ot() -> ProtocolSpec:
    """PR from one OT: A offers (a, x XOR a), B chooses c = y."""
    prog_a = PartyProgram(
        tape_names=("a",),
        resource_input=lambda v: (v.own_tape[0], v.own_input ^ v.own_tape[0]),
        output=lambda v: v.own_tape[0],
    )
    prog_b = PartyProgram(
        resource_input=lambda v: v.own_input,
        output=lambda v: v.resource_out[0],
    )
    return ProtocolSpec("pr-from-ot", ot(), pr(), prog_a, prog_b, ("R",), 0)


def ok_from_pr() -> ProtocolSpec:
    """OK from one PR box fed with uniform bits x (A) and y (B)."""
    prog_a = PartyProgram(
        tape_names=("x",),
        resource_input=lambda v: v.own_tape[0],
        output=lambda v: (v.resource_out[0], v.resource_out[0] ^ v.own_tape[0]),
    )
    prog_b = PartyProgram(
        tape_names=("y",),
        resource_input=lambda v: v.own_tape[0],
        output=lambda v: (v.own_tape[0], v.resource_out[0]),
    )
    return ProtocolSpec("ok-from-pr", pr(), ok(), prog_a, prog_b, ("R",), 0)


def ok_from_ot() -> ProtocolSpec:
    """OK from one OT run on uniform inputs."""
    prog_a = PartyProgram(
        tape_names=("x0", "x1"),
        resource_input=lambda v: v.own_tape,
        output=lambda v: v.own_tape,
    )
    prog_b = PartyProgram(
        tape_names=("c",),
        resource_input=lambda v: v.own_tape[0],
        output=lambda v: (v.own_tape[0], v.resource_out[0]),
    )
    return ProtocolSpec("ok-from-ot", ot(), ok(), prog_a, prog_b, ("R",), 0)


def ot_from_pr() -> ProtocolSpec:
    """OT from one PR box and one bit m = x0 XOR a from A to B."""
    prog_a = PartyProgram(
        resource_input=lambda v: v.own_input[0] ^ v.own_input[1],
        sends=(lambda v: v.own_input[0] ^ v.resource_out[0],),
        output=lambda v: NULL,
    )
    prog_b = PartyProgram(
        resource_input=lambda v: v.own_input,
        output=lambda v: v.messages_in[0] ^ v.resource_out[0],
    )
    return ProtocolSpec("ot-from-pr", pr(), ot(), prog_a, prog_b, ("R", "AB"), 1)


def _pr_from_ok_a_output(v: View) -> int:
    x0, x1 = v.resource_out[0]
    m_a, m_b = v.messages_out[0], v.messages_in[0]
    # every sum here is XOR over bits
    return x0 ^ ((x0 ^ x1) & m_b) ^ (m_a & m_b)


def pr_from_ok() -> ProtocolSpec:
    """PR from one OK and two bits: each side pads its input with its key."""
    prog_a = PartyProgram(
        sends=(lambda v: v.own_input ^ v.resource_out[0][0] ^ v.resource_out[0][1],),
        output=_pr_from_ok_a_output,
    )
    prog_b = PartyProgram(
        sends=(lambda v: v.own_input ^ v.resource_out[0][0],),
        output=lambda v: v.resource_out[0][1] ^ (v.resource_out[0][0] & v.messages_in[0]),
    )
    return ProtocolSpec("pr-from-ok", ok(), pr(), prog_a, prog_b, ("R", "AB", "BA"), 2)


def ot_from_ok() -> ProtocolSpec:
    """OT from one OK with three bits: B tells A how to swap the keys."""

    def pad(v, k):
        return v.resource_out[0][k ^ v.messages_in[0]]

    prog_a = PartyProgram(
        sends=(
            lambda v: v.own_input[0] ^ pad(v, 0),
            lambda v: v.own_input[1] ^ pad(v, 1),
        ),
        output=lambda v: NULL,
    )
    prog_b = PartyProgram(
        sends=(lambda v: v.own_input ^ v.resource_out[0][0],),
        output=lambda v: v.messages_in[v.own_input] ^ v.resource_out[0][1],
    )
    return ProtocolSpec("ot-from-ok", ok(), ot(), prog_a, prog_b, ("R", "BA", "AB", "AB"), 3)


def ot_from_to() -> ProtocolSpec:
    """OT from one reversed OT plus one bit."""
    prog_a = PartyProgram(
        resource_input=lambda v: v.own_input[0] ^ v.own_input[1],
        sends=(lambda v: v.own_input[0] ^ v.resource_out[0],),
        output=lambda v: NULL,
    )
    prog_b = PartyProgram(
        tape_names=("r",),
        resource_input=lambda v: (v.own_tape[0], v.own_tape[0] ^ v.own_input),
        output=lambda v: v.own_tape[0] ^ v.messages_in[0],
    )
    return ProtocolSpec("ot-from-to", to(), ot(), prog_a, prog_b, ("R", "AB"), 1)


_KO_NOTE = (
    "KO is the role-mirror of OK, so B holds (X0, X1) and A holds (C, Y). "
    "With A taken as the (X0, X1) holder the formulas do not yield OK under "
    "this orientation (see ok_from_ko_literal). The "
    "formulas are therefore applied with roles swapped: the pair holder emits "
    "(C', Y') = (X0 ^ X1, X0) and the choice holder emits (X0', X1') = (Y, Y ^ C)."
)


def ok_from_ko() -> ProtocolSpec:
    """OK from one KO without communication."""
    prog_a = PartyProgram(
        output=lambda v: (v.resource_out[0][1], v.resource_out[0][1] ^ v.resource_out[0][0]),
    )
    prog_b = PartyProgram(
        output=lambda v: (v.resource_out[0][0] ^ v.resource_out[0][1], v.resource_out[0][0]),
    )
    return ProtocolSpec("ok-from-ko", ko(), ok(), prog_a, prog_b, ("R",), 0, notes=(_KO_NOTE,))


def ok_from_ko_literal() -> ProtocolSpec:
    """The reversal formulas with A treated as the pair holder, run on KO.

    A reads its KO output as if it were (X0, X1) and B reads its output as if
    it were (C, Y). Not part of the catalog; kept to document why the catalog
    version swaps roles.
    """
    prog_a = PartyProgram(
        output=lambda v: (v.resource_out[0][0] ^ v.resource_out[0][1], v.resource_out[0][0]),
    )
    prog_b = PartyProgram(
        output=lambda v: (v.resource_out[0][1], v.resource_out[0][1] ^ v.resource_out[0][0]),
    )
    return ProtocolSpec("ok-from-ko-literal", ko(), ok(), prog_a, prog_b, ("R",), 0)


CATALOG: dict[str, Callable[[], ProtocolSpec]] = {
    "pr-from-ot": pr_from_ot,
    "ok-from-pr": ok_from_pr,
    "ok-from-ot": ok_from_ot,
    "ot-from-pr": ot_from_pr,
    "pr-from-ok": pr_from_ok,
    "ot-from-ok": ot_from_ok,
    "ot-from-to": ot_from_to,
    "ok-from-ko": ok_from_ko,
}


def get_protocol(name: str) -> ProtocolSpec:
    try:
        return CATALOG[name]()
    except KeyError:
        raise StructuralError(
            f"unknown protocol {name!r}; known: {', '.join(CATALOG)}"
        ) from None


def relabel_output(spec: ProtocolSpec, party: str) -> ProtocolSpec:
    """Negate one party's binary output in both the program and the target."""
    program = spec.program(party)
    inner = program.output
    flipped = dataclasses.replace(program, output=lambda v: inner(v) ^ 1)
    target = flip_output(spec.target, party)
    if party == "A":
        return dataclasses.replace(spec, program_a=flipped, target=target)
    return dataclasses.replace(spec, program_b=flipped, target=target)


def resource_tape_for(resource: Primitive, u: Any, v: Any, out_a: Any, out_b: Any) -> tuple:
    """The resource tape that makes ``resource`` produce the given outputs."""
    for tape in itertools.product((0, 1), repeat=resource.tape_len):
        if resource.sample(u, v, tape) == (out_a, out_b):
            return tape
    raise StructuralError(f"{resource.name} cannot output {(out_a, out_b)} on {(u, v)}")
