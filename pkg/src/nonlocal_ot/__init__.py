"""Exact, exhaustive checking of single-copy reductions between OT, OK and PR boxes."""

from .core import FiniteDist, StructuralError, UndefinedConditional, View, World
from .primitives import Primitive, ko, mirror, ok, ot, pr, to
from .protocols import CATALOG, PartyProgram, ProtocolSpec, get_protocol, run_protocol
from .verifier import VerificationReport, verify

__version__ = "0.1.0"

__all__ = [
    "CATALOG",
    "FiniteDist",
    "PartyProgram",
    "Primitive",
    "ProtocolSpec",
    "StructuralError",
    "UndefinedConditional",
    "VerificationReport",
    "View",
    "World",
    "get_protocol",
    "ko",
    "mirror",
    "ok",
    "ot",
    "pr",
    "run_protocol",
    "to",
    "verify",
]
