"""The five ideal two-party primitives as exact behavior tables.

Each primitive also carries a *sampler*: a deterministic map from a uniform
resource tape to one output pair. The executor uses the sampler; the table is
the definition. :meth:`Primitive.check_sampler` ties the two together.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

from .core import FiniteDist, StructuralError, record, sort_key, symbol_to_json

__all__ = [
    "Primitive",
    "NULL",
    "ot",
    "to",
    "ok",
    "ko",
    "pr",
    "mirror",
    "flip_output",
    "is_non_signaling",
    "output_record",
]

NULL = None
BITS = (0, 1)
PAIRS = tuple(itertools.product(BITS, BITS))

_MIRROR_NAMES = {"ot": "to", "to": "ot", "ok": "ko", "ko": "ok", "pr": "pr"}


def output_record(out_a: Any, out_b: Any) -> tuple:
    return record(A=out_a, B=out_b)


@dataclass(frozen=True, eq=False)
class Primitive:
    """A two-party functionality ``P(outA, outB | inA, inB)``.

    ``family`` is one of ``"ot"``, ``"ok"``, ``"pr"``; ``holder`` names the
    party that holds the two message bits (OT sender, OK pair holder). For PR
    it is ``"A"`` by convention.
    """

    name: str
    family: str
    holder: str
    inputs_a: tuple
    inputs_b: tuple
    outputs_a: tuple
    outputs_b: tuple
    table: Mapping[tuple, FiniteDist]
    tape_names: tuple[str, ...] = ()
    sampler: Callable[[Any, Any, tuple], tuple] = field(default=None, repr=False)
    input_names_a: tuple[str, ...] = ()
    input_names_b: tuple[str, ...] = ()

    def __post_init__(self):
        for u, v in itertools.product(self.inputs_a, self.inputs_b):
            if (u, v) not in self.table:
                raise StructuralError(f"{self.name}: table missing row {(u, v)}")
            for rec, _ in self.table[(u, v)]:
                out = dict(rec)
                if out["A"] not in self.outputs_a or out["B"] not in self.outputs_b:
                    raise StructuralError(f"{self.name}: output outside alphabet {rec}")

    @property
    def tape_len(self) -> int:
        return len(self.tape_names)

    def row(self, u: Any, v: Any) -> FiniteDist:
        try:
            return self.table[(u, v)]
        except KeyError:
            raise StructuralError(f"{self.name}: inputs {(u, v)} outside alphabet") from None

    def sample(self, u: Any, v: Any, tape: tuple) -> tuple:
        if u not in self.inputs_a or v not in self.inputs_b:
            raise StructuralError(f"{self.name}: inputs {(u, v)} outside alphabet")
        if len(tape) != self.tape_len:
            raise StructuralError(f"{self.name}: resource tape must have {self.tape_len} bits")
        return self.sampler(u, v, tuple(tape))

    def check_sampler(self) -> bool:
        """True iff the sampler pushed through a uniform tape gives the table."""
        tapes = list(itertools.product(BITS, repeat=self.tape_len))
        for u, v in itertools.product(self.inputs_a, self.inputs_b):
            induced = FiniteDist.uniform(output_record(*self.sample(u, v, t)) for t in tapes)
            if induced != self.row(u, v):
                return False
        return True

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Primitive):
            return NotImplemented
        return (
            self.name == other.name
            and self.inputs_a == other.inputs_a
            and self.inputs_b == other.inputs_b
            and self.outputs_a == other.outputs_a
            and self.outputs_b == other.outputs_b
            and dict(self.table) == dict(other.table)
        )

    __hash__ = None

    def to_json(self) -> dict:
        def key(u, v):
            return f"{json.dumps(symbol_to_json(u))}|{json.dumps(symbol_to_json(v))}"

        rows = sorted(self.table.items(), key=lambda kv: sort_key(kv[0]))
        return {
            "name": self.name,
            "inputsA": [symbol_to_json(u) for u in self.inputs_a],
            "inputsB": [symbol_to_json(v) for v in self.inputs_b],
            "table": {key(u, v): d.to_json() for (u, v), d in rows},
        }


def ot() -> Primitive:
    """Chosen one-out-of-two bit OT: A inputs (x0, x1), B inputs c, B gets x_c."""
    table = {
        ((x0, x1), c): FiniteDist.point(output_record(NULL, (x0, x1)[c]))
        for (x0, x1) in PAIRS
        for c in BITS
    }

    def sampler(u, v, tape):
        return NULL, u[v]

    return Primitive(
        "ot", "ot", "A", PAIRS, BITS, (NULL,), BITS, table,
        sampler=sampler, input_names_a=("x0", "x1"), input_names_b=("c",),
    )


def ok() -> Primitive:
    """Oblivious key: A gets (X0, X1), B gets (C, Y = X_C), all else uniform."""
    atoms = [
        output_record((x0, x1), (c, (x0, x1)[c]))
        for x0, x1, c in itertools.product(BITS, repeat=3)
    ]
    table = {(NULL, NULL): FiniteDist.uniform(atoms)}

    def sampler(u, v, tape):
        x0, x1, c = tape
        return (x0, x1), (c, (x0, x1)[c])

    return Primitive(
        "ok", "ok", "A", (NULL,), (NULL,), PAIRS, PAIRS, table,
        tape_names=("X0", "X1", "C"), sampler=sampler,
    )


def pr() -> Primitive:
    """Popescu-Rohrlich box: uniform (a, b) with a XOR b = u AND v."""
    table = {
        (u, v): FiniteDist.uniform(output_record(a, a ^ (u & v)) for a in BITS)
        for u in BITS
        for v in BITS
    }

    def sampler(u, v, tape):
        (a,) = tape
        return a, a ^ (u & v)

    return Primitive(
        "pr", "pr", "A", BITS, BITS, BITS, BITS, table,
        tape_names=("a",), sampler=sampler, input_names_a=("x",), input_names_b=("y",),
    )


def mirror(p: Primitive) -> Primitive:
    """Swap the roles of A and B everywhere."""
    table = {
        (v, u): row.map(lambda rec: output_record(dict(rec)["B"], dict(rec)["A"]))
        for (u, v), row in p.table.items()
    }
    inner = p.sampler

    def sampler(u, v, tape):
        out_a, out_b = inner(v, u, tape)
        return out_b, out_a

    if p.name in _MIRROR_NAMES:
        name = _MIRROR_NAMES[p.name]
    elif p.name.endswith("~"):
        name = p.name[:-1]
    else:
        name = p.name + "~"
    holder = p.holder if p.family == "pr" else {"A": "B", "B": "A"}[p.holder]
    return Primitive(
        name, p.family, holder, p.inputs_b, p.inputs_a, p.outputs_b, p.outputs_a, table,
        tape_names=p.tape_names, sampler=sampler,
        input_names_a=p.input_names_b, input_names_b=p.input_names_a,
    )


def to() -> Primitive:
    """OT from B (sender) to A (receiver)."""
    return mirror(ot())


def ko() -> Primitive:
    """Oblivious key with B holding (X0, X1) and A holding (C, Y)."""
    return mirror(ok())


def flip_output(p: Primitive, party: str, name: str | None = None) -> Primitive:
    """Relabel one party's binary output by negation."""
    if party not in ("A", "B"):
        raise StructuralError(f"unknown party {party!r}")
    outputs = p.outputs_a if party == "A" else p.outputs_b
    if set(outputs) != {0, 1}:
        raise StructuralError(f"{p.name}: party {party} output is not a bit")

    def flip(rec):
        out = dict(rec)
        out[party] ^= 1
        return output_record(out["A"], out["B"])

    table = {k: row.map(flip) for k, row in p.table.items()}
    inner = p.sampler

    def sampler(u, v, tape):
        out_a, out_b = inner(u, v, tape)
        return (out_a ^ 1, out_b) if party == "A" else (out_a, out_b ^ 1)

    return Primitive(
        name or f"{p.name}^{party}", p.family, p.holder, p.inputs_a, p.inputs_b,
        p.outputs_a, p.outputs_b, table, tape_names=p.tape_names, sampler=sampler,
        input_names_a=p.input_names_a, input_names_b=p.input_names_b,
    )


def is_non_signaling(p: Primitive) -> bool:
    """Each party's output marginal ignores the other party's input."""
    for u in p.inputs_a:
        rows = {p.row(u, v).marginal(["A"]) for v in p.inputs_b}
        if len(rows) > 1:
            return False
    for v in p.inputs_b:
        rows = {p.row(u, v).marginal(["B"]) for u in p.inputs_a}
        if len(rows) > 1:
            return False
    return True
