"""Exact finite distributions and the value types shared by every module.

Probabilities are :class:`fractions.Fraction` values; nothing in here ever
rounds. Outcome records are tuples of ``(name, value)`` pairs, built with
:func:`record`, and values are restricted to ``None``, ints, strings and
(nested) tuples of those so that a canonical total order exists.
"""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Hashable, Iterable, Mapping, Sequence

__all__ = [
    "StructuralError",
    "UndefinedConditional",
    "Prob",
    "bit",
    "record",
    "sort_key",
    "symbol_to_json",
    "FiniteDist",
    "dist_from_worlds",
    "marginal",
    "condition",
    "dist_equal",
    "World",
    "View",
    "Message",
    "Transcript",
]

Prob = Fraction


class StructuralError(ValueError):
    """A malformed object or a violated precondition (never a verdict)."""


class UndefinedConditional(StructuralError):
    """Conditioning on an event of probability zero."""


def bit(value: Any) -> int:
    if value not in (0, 1) or isinstance(value, float):
        raise StructuralError(f"not a bit: {value!r}")
    return int(value)


def record(**fields: Any) -> tuple:
    """Build an outcome record; field order is kept as given."""
    return tuple(fields.items())


def sort_key(value: Any) -> tuple:
    """Canonical total order over the symbol universe."""
    if value is None:
        return (0,)
    if isinstance(value, bool):
        return (1, int(value))
    if isinstance(value, int):
        return (1, value)
    if isinstance(value, str):
        return (2, value)
    if isinstance(value, tuple):
        return (3, tuple(sort_key(v) for v in value))
    raise StructuralError(f"unsupported symbol type {type(value).__name__}")


def symbol_to_json(value: Any) -> Any:
    if isinstance(value, tuple):
        return [symbol_to_json(v) for v in value]
    return value


def _is_record(value: Any) -> bool:
    return isinstance(value, tuple) and all(
        isinstance(p, tuple) and len(p) == 2 and isinstance(p[0], str) for p in value
    )


def _frac_str(p: Fraction) -> str:
    return f"{p.numerator}/{p.denominator}"


class FiniteDist:
    """Exact distribution over a finite set of outcomes.

    Zero-mass atoms are dropped on construction, negative masses and a total
    different from one are rejected.
    """

    __slots__ = ("_atoms", "_index")

    def __init__(self, masses: Mapping[Hashable, Any] | Iterable[tuple[Hashable, Any]]):
        items = masses.items() if isinstance(masses, Mapping) else masses
        acc: dict[Hashable, Fraction] = {}
        for outcome, mass in items:
            if isinstance(mass, float):
                raise StructuralError("float mass; use exact rationals")
            mass = Fraction(mass)
            if mass < 0:
                raise StructuralError(f"negative mass {mass} for {outcome!r}")
            acc[outcome] = acc.get(outcome, Fraction(0)) + mass
        total = sum(acc.values(), Fraction(0))
        if total != 1:
            raise StructuralError(f"masses sum to {total}, not 1")
        atoms = sorted(((o, m) for o, m in acc.items() if m), key=lambda a: sort_key(a[0]))
        self._atoms = tuple(atoms)
        self._index = dict(atoms)

    @classmethod
    def point(cls, outcome: Hashable) -> "FiniteDist":
        return cls({outcome: 1})

    @classmethod
    def uniform(cls, outcomes: Iterable[Hashable]) -> "FiniteDist":
        outcomes = list(outcomes)
        if not outcomes:
            raise StructuralError("uniform distribution over an empty set")
        share = Fraction(1, len(outcomes))
        return cls([(o, share) for o in outcomes])

    @property
    def atoms(self) -> tuple[tuple[Hashable, Fraction], ...]:
        return self._atoms

    @property
    def support(self) -> tuple:
        return tuple(o for o, _ in self._atoms)

    def mass(self, outcome: Hashable) -> Fraction:
        return self._index.get(outcome, Fraction(0))

    def prob(self, predicate: Callable[[Any], bool]) -> Fraction:
        return sum((m for o, m in self._atoms if predicate(o)), Fraction(0))

    def map(self, fn: Callable[[Any], Hashable]) -> "FiniteDist":
        """Pushforward along ``fn``."""
        return FiniteDist([(fn(o), m) for o, m in self._atoms])

    def marginal(self, names: Sequence[str]) -> "FiniteDist":
        return marginal(self, names)

    def condition(self, predicate: Callable[[dict], bool]) -> "FiniteDist":
        return condition(self, predicate)

    def __len__(self) -> int:
        return len(self._atoms)

    def __iter__(self):
        return iter(self._atoms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FiniteDist):
            return NotImplemented
        return self._atoms == other._atoms

    def __hash__(self) -> int:
        return hash(self._atoms)

    def __repr__(self) -> str:
        body = ", ".join(f"{o!r}: {_frac_str(m)}" for o, m in self._atoms)
        return f"FiniteDist({{{body}}})"

    def to_json(self) -> dict:
        atoms = []
        for outcome, mass in self._atoms:
            if _is_record(outcome):
                rec = {name: symbol_to_json(v) for name, v in outcome}
            else:
                rec = {"value": symbol_to_json(outcome)}
            atoms.append({"record": rec, "mass": _frac_str(mass)})
        return {"atoms": atoms}


def dist_from_worlds(
    worlds: Iterable[tuple[Any, Hashable]], weight: Callable[[Any], Any]
) -> FiniteDist:
    """Pushforward of a weighted world list onto its outcome records."""
    pairs = [(outcome, Fraction(weight(w))) for w, outcome in worlds]
    total = sum((m for _, m in pairs), Fraction(0))
    if total != 1:
        raise StructuralError(f"world weights sum to {total}, not 1")
    return FiniteDist(pairs)


def marginal(d: FiniteDist, names: Sequence[str]) -> FiniteDist:
    names = tuple(names)
    out = []
    for outcome, mass in d:
        if not _is_record(outcome):
            raise StructuralError("marginal needs named records")
        fields = dict(outcome)
        missing = [n for n in names if n not in fields]
        if missing:
            raise StructuralError(f"unknown coordinate(s) {missing}")
        out.append((tuple((n, fields[n]) for n in names), mass))
    return FiniteDist(out)


def condition(d: FiniteDist, predicate: Callable[[dict], bool]) -> FiniteDist:
    """Exact conditional law; ``predicate`` sees each record as a dict."""
    kept = []
    for outcome, mass in d:
        view = dict(outcome) if _is_record(outcome) else {"value": outcome}
        if predicate(view):
            kept.append((outcome, mass))
    total = sum((m for _, m in kept), Fraction(0))
    if total == 0:
        raise UndefinedConditional("conditioning event has probability zero")
    return FiniteDist([(o, m / total) for o, m in kept])


def dist_equal(d1: FiniteDist, d2: FiniteDist) -> bool:
    return d1 == d2


@dataclass(frozen=True)
class World:
    """One complete assignment of inputs and random tapes."""

    input_a: Any
    input_b: Any
    tape_a: tuple[int, ...] = ()
    tape_b: tuple[int, ...] = ()
    resource_tape: tuple[int, ...] = ()

    def to_json(self) -> dict:
        return {
            "inputA": symbol_to_json(self.input_a),
            "inputB": symbol_to_json(self.input_b),
            "tapeA": list(self.tape_a),
            "tapeB": list(self.tape_b),
            "resourceTape": list(self.resource_tape),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "World":
        def sym(v):
            return tuple(sym(x) for x in v) if isinstance(v, list) else v

        return cls(
            sym(data["inputA"]),
            sym(data["inputB"]),
            tuple(data.get("tapeA", ())),
            tuple(data.get("tapeB", ())),
            tuple(data.get("resourceTape", ())),
        )


Message = namedtuple("Message", "direction bit")
Transcript = tuple  # of Message


@dataclass(frozen=True)
class View:
    """Everything one party observes during a run.

    ``resource_in``/``resource_out`` hold at most one symbol each (single-copy
    use); ``output`` is ``None`` until the party emits it, which coincides with
    the null output symbol of OT senders.
    """

    party: str
    own_input: Any
    own_tape: tuple[int, ...]
    resource_in: tuple = ()
    resource_out: tuple = ()
    messages_in: tuple[int, ...] = ()
    messages_out: tuple[int, ...] = ()
    output: Any = None

    def history(self) -> tuple:
        """What the party has seen so far, excluding its own choices."""
        return (self.own_input, self.own_tape, self.resource_out, self.messages_in)

    def key(self) -> tuple:
        return (
            self.party,
            self.own_input,
            self.own_tape,
            self.resource_in,
            self.resource_out,
            self.messages_in,
            self.messages_out,
            self.output,
        )

    def to_json(self) -> dict:
        return {
            "party": self.party,
            "input": symbol_to_json(self.own_input),
            "tape": list(self.own_tape),
            "resourceIn": symbol_to_json(self.resource_in),
            "resourceOut": symbol_to_json(self.resource_out),
            "messagesIn": list(self.messages_in),
            "messagesOut": list(self.messages_out),
            "output": symbol_to_json(self.output),
        }
