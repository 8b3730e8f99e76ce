"""Equal-outcome statistics, the CHSH inequality, and the singlet state.

Statistics derived from primitive tables are exact fractions. The quantum
path uses complex floating point; it is checked against the closed form
``P(equal) = sin^2((alpha - beta) / 2)`` for measurements in the x-z plane.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np

from .core import StructuralError
from .primitives import Primitive, flip_output, pr

__all__ = [
    "EqualStats",
    "MeasurementAngles",
    "StateVector2Q",
    "equal_stats",
    "pr_paper_variant",
    "local_strategy_stats",
    "local_strategies",
    "chsh_p_value",
    "chsh_correlator",
    "singlet",
    "singlet_stats",
    "singlet_equal_probability",
    "SINGLET_TABLE_ANGLES",
    "LOCAL_BOUND",
    "TSIRELSON",
    "chsh_summary",
]

LOCAL_BOUND = 2
TSIRELSON = 2 * math.sqrt(2)
NORM_TOL = 1e-12


@dataclass(frozen=True)
class EqualStats:
    """Probability that the two outcomes agree, per (basis A, basis B)."""

    p00: Any
    p01: Any
    p10: Any
    p11: Any

    def __post_init__(self):
        for p in self.as_tuple():
            if not 0 <= p <= 1:
                raise StructuralError(f"probability out of range: {p}")

    def as_tuple(self) -> tuple:
        return (self.p00, self.p01, self.p10, self.p11)

    def __getitem__(self, ij: tuple[int, int]):
        return self.as_tuple()[2 * ij[0] + ij[1]]

    def transpose(self) -> "EqualStats":
        return EqualStats(self.p00, self.p10, self.p01, self.p11)


def equal_stats(p: Primitive) -> EqualStats:
    binary = (0, 1)
    if not (p.inputs_a == p.inputs_b == p.outputs_a == p.outputs_b == binary):
        raise StructuralError(f"{p.name}: equal-outcome stats need binary inputs and outputs")
    return EqualStats(*(
        p.row(u, v).prob(lambda rec: dict(rec)["A"] == dict(rec)["B"])
        for u, v in itertools.product(binary, binary)
    ))


def pr_paper_variant() -> Primitive:
    """PR with B's output negated: outcomes agree only on inputs (1, 1)."""
    return flip_output(pr(), "B", name="pr-p")


def local_strategy_stats(a0: int, a1: int, b0: int, b1: int) -> EqualStats:
    """Deterministic local strategy: A answers a_i on basis i, B answers b_j."""
    a, b = (a0, a1), (b0, b1)
    return EqualStats(*(Fraction(int(a[i] == b[j])) for i, j in itertools.product((0, 1), (0, 1))))


def local_strategies() -> list[tuple[tuple[int, ...], EqualStats]]:
    return [(s, local_strategy_stats(*s)) for s in itertools.product((0, 1), repeat=4)]


def chsh_p_value(s: EqualStats):
    """``p11 - (p00 + p01 + p10)``; positive means the local bound is broken."""
    return s.p11 - (s.p00 + s.p01 + s.p10)


def chsh_correlator(s: EqualStats):
    """``E11 - E10 - E01 - E00`` with ``E = 2p - 1``; local maximum is 2."""
    e00, e01, e10, e11 = (2 * p - 1 for p in s.as_tuple())
    return e11 - e10 - e01 - e00


@dataclass(frozen=True)
class MeasurementAngles:
    """Measurement directions in the x-z plane, radians, basis 0 then 1."""

    angles_a: tuple[float, float]
    angles_b: tuple[float, float]

    def __post_init__(self):
        if not all(math.isfinite(t) for t in (*self.angles_a, *self.angles_b)):
            raise StructuralError("angles must be finite")

    def swapped(self) -> "MeasurementAngles":
        return MeasurementAngles(self.angles_b, self.angles_a)


class StateVector2Q:
    """Normalized two-qubit pure state, amplitudes over |00>, |01>, |10>, |11>."""

    def __init__(self, amplitudes):
        amps = np.asarray(amplitudes, dtype=complex).reshape(4)
        if abs(np.vdot(amps, amps).real - 1) > NORM_TOL:
            raise StructuralError("state is not normalized")
        self.amplitudes = amps

    def outcome_probabilities(self, theta_a: float, theta_b: float) -> np.ndarray:
        """2x2 array of P(outcome A = i, outcome B = j)."""
        basis_a, basis_b = _basis(theta_a), _basis(theta_b)
        probs = np.empty((2, 2))
        for i, j in itertools.product((0, 1), (0, 1)):
            amp = np.vdot(np.kron(basis_a[i], basis_b[j]), self.amplitudes)
            probs[i, j] = abs(amp) ** 2
        return probs


def _basis(theta: float) -> tuple[np.ndarray, np.ndarray]:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([c, s], dtype=complex), np.array([-s, c], dtype=complex)


def singlet() -> StateVector2Q:
    r = 1 / math.sqrt(2)
    return StateVector2Q([0, r, -r, 0])


def singlet_equal_probability(alpha: float, beta: float) -> float:
    return math.sin((alpha - beta) / 2) ** 2


def singlet_stats(m: MeasurementAngles, state: StateVector2Q | None = None) -> EqualStats:
    state = state or singlet()
    values = []
    for ta, tb in itertools.product(m.angles_a, m.angles_b):
        probs = state.outcome_probabilities(ta, tb)
        values.append(float(min(1.0, max(0.0, probs[0, 0] + probs[1, 1]))))
    return EqualStats(*values)


# basis 0 aligned on both sides; A's basis 1 at +60 deg, B's basis 1 at -60 deg.
# sin^2 of half the differences: 0, sin^2(30)=1/4, sin^2(30)=1/4, sin^2(60)=3/4.
SINGLET_TABLE_ANGLES = MeasurementAngles(
    (0.0, math.radians(60)), (0.0, math.radians(-60))
)

_BEHAVIORS = ("singlet", "pr", "pr-variant")


def _stats_for(behavior: str) -> EqualStats:
    if behavior == "singlet":
        return singlet_stats(SINGLET_TABLE_ANGLES)
    if behavior == "pr":
        return equal_stats(pr())
    if behavior == "pr-variant":
        return equal_stats(pr_paper_variant())
    if behavior.startswith("local:"):
        bits = behavior.split(":", 1)[1]
        if len(bits) != 4 or set(bits) - {"0", "1"}:
            raise StructuralError("local behavior is local:a0a1b0b1, e.g. local:0010")
        return local_strategy_stats(*(int(c) for c in bits))
    raise StructuralError(f"unknown behavior {behavior!r}; use {', '.join(_BEHAVIORS)} or local:a0a1b0b1")


def _num(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)
    return round(float(x), 12)


def chsh_summary(behavior: str) -> dict:
    stats = _stats_for(behavior)
    p_value = chsh_p_value(stats)
    corr = chsh_correlator(stats)
    return {
        "behavior": behavior,
        "p_stats": [_num(p) for p in stats.as_tuple()],
        "p_value": _num(p_value),
        "correlator": _num(corr),
        "local_bound": LOCAL_BOUND,
        "tsirelson": round(TSIRELSON, 10),
        "violates_local": bool(corr > LOCAL_BOUND + 1e-9),
        "violates_quantum": bool(corr > TSIRELSON + 1e-9),
    }
