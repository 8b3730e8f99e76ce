"""Single-gate mutations of the catalog protocols.

Each mutation breaks one formula of one catalog protocol. The verifier must reject every
one of them; a verifier that accepts a mutant is vacuous somewhere.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .core import StructuralError
from .primitives import NULL
from .protocols import PartyProgram, ProtocolSpec, get_protocol

__all__ = ["Mutation", "MUTATIONS", "mutate", "load_spec_file"]


@dataclass(frozen=True)
class Mutation:
    id: str
    description: str
    apply: Callable[[ProtocolSpec], ProtocolSpec]


def _with(spec: ProtocolSpec, party: str, mid: str, **changes) -> ProtocolSpec:
    key = "program_a" if party == "A" else "program_b"
    program: PartyProgram = dataclasses.replace(getattr(spec, key), **changes)
    return dataclasses.replace(spec, **{key: program, "name": f"{spec.name}:{mid}"})


def _leak_extra_bit(spec: ProtocolSpec, mid: str, leak: Callable) -> ProtocolSpec:
    """Append one A->B bit carrying ``leak(view)``."""
    prog = dataclasses.replace(spec.program_a, sends=spec.program_a.sends + (leak,))
    return dataclasses.replace(
        spec, program_a=prog, schedule=spec.schedule + ("AB",),
        comm_bits=spec.comm_bits + 1, name=f"{spec.name}:{mid}",
    )


MUTATIONS: dict[str, list[Mutation]] = {
    "pr-from-ot": [
        Mutation("x1-unpadded", "A offers x1 = x instead of x XOR a",
                 lambda s: _with(s, "A", "x1-unpadded",
                                 resource_input=lambda v: (v.own_tape[0], v.own_input))),
        Mutation("a-constant", "A ignores its tape: offers (0, x), outputs 0",
                 lambda s: _with(s, "A", "a-constant",
                                 resource_input=lambda v: (0, v.own_input), output=lambda v: 0)),
        Mutation("b-negated", "B outputs the complement of x_c",
                 lambda s: _with(s, "B", "b-negated", output=lambda v: v.resource_out[0] ^ 1)),
    ],
    "ok-from-pr": [
        Mutation("x1-drops-x", "A outputs X1 = a",
                 lambda s: _with(s, "A", "x1-drops-x",
                                 output=lambda v: (v.resource_out[0], v.resource_out[0]))),
        Mutation("c-negated", "B outputs C = 1 XOR y",
                 lambda s: _with(s, "B", "c-negated",
                                 output=lambda v: (v.own_tape[0] ^ 1, v.resource_out[0]))),
    ],
    "ok-from-ot": [
        Mutation("y-zero", "B outputs Y = 0",
                 lambda s: _with(s, "B", "y-zero", output=lambda v: (v.own_tape[0], 0))),
        Mutation("pair-swapped", "A outputs (x1, x0)",
                 lambda s: _with(s, "A", "pair-swapped", output=lambda v: v.own_tape[::-1])),
    ],
    "ot-from-pr": [
        Mutation("m-pads-x1", "A sends m = x1 XOR a",
                 lambda s: _with(s, "A", "m-pads-x1",
                                 sends=(lambda v: v.own_input[1] ^ v.resource_out[0],))),
        Mutation("y-constant", "B feeds 0 into the box instead of c",
                 lambda s: _with(s, "B", "y-constant", resource_input=lambda v: 0)),
        Mutation("leaks-x1", "A additionally sends x1 in the clear",
                 lambda s: _leak_extra_bit(s, "leaks-x1", lambda v: v.own_input[1])),
    ],
    "pr-from-ok": [
        Mutation("a-drops-mb", "A's output loses the (X0 XOR X1) m_b term",
                 lambda s: _with(s, "A", "a-drops-mb",
                                 output=lambda v: v.resource_out[0][0]
                                 ^ (v.messages_out[0] & v.messages_in[0]))),
        Mutation("mb-unpadded", "B sends m_b = y without the C pad",
                 lambda s: _with(s, "B", "mb-unpadded", sends=(lambda v: v.own_input,))),
        Mutation("ma-unpadded", "A sends m_a = x without the key pad",
                 lambda s: _with(s, "A", "ma-unpadded", sends=(lambda v: v.own_input,))),
    ],
    "ot-from-ok": [
        Mutation("pads-swapped", "A pads x0 with X_(1^m) and x1 with X_m",
                 lambda s: _with(s, "A", "pads-swapped", sends=(
                     lambda v: v.own_input[0] ^ v.resource_out[0][1 ^ v.messages_in[0]],
                     lambda v: v.own_input[1] ^ v.resource_out[0][v.messages_in[0]],
                 ))),
        Mutation("m-is-c", "B sends m = c without the C pad",
                 lambda s: _with(s, "B", "m-is-c", sends=(lambda v: v.own_input,))),
        Mutation("x1-clear", "A sends m1 = x1 unpadded",
                 lambda s: _with(s, "A", "x1-clear", sends=(
                     s.program_a.sends[0], lambda v: v.own_input[1],
                 ))),
    ],
    "ot-from-to": [
        Mutation("m-pads-x1", "A sends m = x1 XOR a",
                 lambda s: _with(s, "A", "m-pads-x1",
                                 sends=(lambda v: v.own_input[1] ^ v.resource_out[0],))),
        Mutation("drops-c", "B offers (r, r) to TO",
                 lambda s: _with(s, "B", "drops-c",
                                 resource_input=lambda v: (v.own_tape[0], v.own_tape[0]))),
        Mutation("leaks-x0", "A additionally sends x0 in the clear",
                 lambda s: _leak_extra_bit(s, "leaks-x0", lambda v: v.own_input[0])),
    ],
    "ok-from-ko": [
        Mutation("y-from-x1", "pair holder outputs Y' = X1",
                 lambda s: _with(s, "B", "y-from-x1",
                                 output=lambda v: (v.resource_out[0][0] ^ v.resource_out[0][1],
                                                   v.resource_out[0][1]))),
        Mutation("c-from-x0", "pair holder outputs C' = X0",
                 lambda s: _with(s, "B", "c-from-x0",
                                 output=lambda v: (v.resource_out[0][0], v.resource_out[0][0]))),
    ],
}


def mutate(protocol: str, mutation_id: str) -> ProtocolSpec:
    spec = get_protocol(protocol)
    for m in MUTATIONS.get(protocol, ()):
        if m.id == mutation_id:
            return m.apply(spec)
    raise StructuralError(f"no mutation {mutation_id!r} for {protocol!r}")


def load_spec_file(path: str | Path) -> ProtocolSpec:
    """Load ``{"protocol": name, "mutation": id-or-null}`` from JSON."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        name = data["protocol"]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise StructuralError(f"cannot read spec file {path}: {exc}") from None
    mutation = data.get("mutation")
    return get_protocol(name) if mutation is None else mutate(name, mutation)
