"""Command-line entry point: ``nonlocal-ot list | run | verify | search | chsh``.

Exit codes: 0 the checked claim holds, 1 a claim check failed, 2 structural
or usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .core import StructuralError, World, symbol_to_json
from .mutations import load_spec_file
from .nonlocality import chsh_summary
from .optimality import (
    DEFAULT_ENUMERATION_BOUND,
    LOWER_BOUNDS,
    SearchResult,
    locate,
    named_spaces,
    search,
)
from .protocols import CATALOG, ProtocolSpec, get_protocol, run_protocol
from .verifier import DEFAULT_DEVIATION_BOUND, DEFAULT_TAPE_BOUND, verify, verify_many

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
WORKERS_ENV = "NONLOCAL_OT_WORKERS"
ARROWS = {"AB": "A→B", "BA": "B→A"}

SCHEMAS = {
    "report": "nonlocal-ot.report/1",
    "run": "nonlocal-ot.run/1",
    "search": "nonlocal-ot.search/1",
    "chsh": "nonlocal-ot.chsh/1",
}


def load_schema(kind: str) -> dict:
    """The JSON schema shipped for output ``kind`` (report, run, search, chsh)."""
    return json.loads(resources.files(__package__).joinpath(f"schemas/{kind}.schema.json").read_text("utf-8"))


class UsageError(Exception):
    pass


def _dump(data: Any) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False, sort_keys=False) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def _bits_label(n: int) -> str:
    return f"{n} bit" if n == 1 else f"{n} bits"


# list

def cmd_list(args) -> int:
    rows = []
    for name, build in CATALOG.items():
        spec = build()
        rows.append((f"{name}: {_bits_label(spec.comm_bits)}", spec.resource.name, spec.target.name))
    width = max(len(r[0]) for r in rows)
    lines = [f"{'protocol: communication'.ljust(width)}  resource  target"]
    lines += [f"{label.ljust(width)}  {res.ljust(8)}  {tgt}" for label, res, tgt in rows]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


# run

def _parse_assignments(pairs: Sequence[str]) -> dict[str, int]:
    values = {}
    for item in pairs:
        name, sep, raw = item.partition("=")
        if not sep or not name:
            raise UsageError(f"malformed assignment {item!r}; expected name=value")
        if raw not in ("0", "1"):
            raise UsageError(f"{name}: value must be 0 or 1, got {raw!r}")
        if name in values:
            raise UsageError(f"{name} assigned twice")
        values[name] = int(raw)
    return values


def _slots(spec: ProtocolSpec) -> list[tuple[str, str]]:
    """Every named bit of a world, in the order the seeded generator fills them."""
    slots = [("inA", n) for n in spec.target.input_names_a]
    slots += [("inB", n) for n in spec.target.input_names_b]
    slots += [("tapeA", n) for n in spec.program_a.tape_names]
    slots += [("tapeB", n) for n in spec.program_b.tape_names]
    slots += [("res", n) for n in spec.resource.tape_names]
    return slots


def _input_symbol(names: tuple, bits: list[int]):
    if not names:
        return None
    return bits[0] if len(names) == 1 else tuple(bits)


def build_world(spec: ProtocolSpec, given: dict[str, int], seed: int) -> World:
    slots = _slots(spec)
    known = {name for _, name in slots}
    unknown = sorted(set(given) - known)
    if unknown:
        raise UsageError(f"{spec.name} has no input or tape named {', '.join(unknown)}; "
                         f"known: {', '.join(n for _, n in slots) or 'none'}")
    rng = random.Random(seed)
    filled: dict[str, list[int]] = {}
    for kind, name in slots:
        draw = rng.getrandbits(1)  # drawn even when given, so fixing one bit never shifts the rest
        filled.setdefault(kind, []).append(given.get(name, draw))
    return World(
        _input_symbol(spec.target.input_names_a, filled.get("inA", [])),
        _input_symbol(spec.target.input_names_b, filled.get("inB", [])),
        tuple(filled.get("tapeA", [])),
        tuple(filled.get("tapeB", [])),
        tuple(filled.get("res", [])),
    )


def cmd_run(args) -> int:
    spec = _spec_from_args(args)
    world = build_world(spec, _parse_assignments(args.inputs or []), args.seed)
    result = run_protocol(spec, world)
    data = {
        "schema": SCHEMAS["run"],
        "protocol": spec.name,
        "seed": args.seed,
        "world": world.to_json(),
        "transcript": [{"direction": ARROWS[m.direction], "bit": m.bit} for m in result.transcript],
        "views": {"A": result.view_a.to_json(), "B": result.view_b.to_json()},
        "outputs": {"A": symbol_to_json(result.output_a), "B": symbol_to_json(result.output_b)},
    }
    if args.format == "json":
        _emit(_dump(data), args.out)
        return EXIT_OK
    lines = [f"protocol   {spec.name}  ({spec.resource.name} -> {spec.target.name})",
             f"world      {json.dumps(data['world'], ensure_ascii=False)}"]
    lines += [f"message    {m['direction']}: {m['bit']}" for m in data["transcript"]] or ["message    (none)"]
    for p in ("A", "B"):
        lines.append(f"view {p}     {json.dumps(data['views'][p], ensure_ascii=False)}")
    for p in ("A", "B"):
        lines.append(f"output {p}   {json.dumps(data['outputs'][p])}")
    sys.stdout.write("\n".join(lines) + "\n")
    if args.out:
        Path(args.out).write_text(_dump(data), encoding="utf-8")
    return EXIT_OK


# verify

def _spec_from_args(args) -> ProtocolSpec:
    if getattr(args, "spec_file", None):
        return load_spec_file(args.spec_file)
    name = args.protocol or getattr(args, "name", None)
    if not name:
        raise UsageError("name a protocol (positional or --protocol)")
    return get_protocol(name)


def cmd_verify(args) -> int:
    budgets = {"tape_bound": DEFAULT_TAPE_BOUND, "deviation_bound": args.deviation_bound}
    if args.all:
        reports = verify_many(CATALOG, workers=args.workers) if args.deviation_bound == DEFAULT_DEVIATION_BOUND \
            else [verify(get_protocol(n), deviation_bound=args.deviation_bound).to_json() for n in CATALOG]
    else:
        reports = [verify(_spec_from_args(args), deviation_bound=args.deviation_bound).to_json()]
    data = {"schema": SCHEMAS["report"], "version": __version__, "budgets": budgets, "reports": reports}
    _emit(_dump(data), args.out)
    return EXIT_OK if all(r["pass"] for r in reports) else EXIT_FAIL


# search

def _expects_witness(name: str, bits: int, one_way: bool) -> bool:
    if bits < LOWER_BOUNDS[name]:
        return False
    # one-way PR or OT from OK is impossible at any length; OT from PR is one-way already
    return not one_way or name == "ot-from-pr"


def cmd_search(args) -> int:
    name = args.protocol or args.name
    if name not in LOWER_BOUNDS:
        raise UsageError(f"unknown search problem {name!r}; known: {', '.join(LOWER_BOUNDS)}")
    budgets = {"bits": args.bits, "one_way": args.one_way, "tape_budget": args.tape_budget,
               "enumeration_bound": args.bound}
    if not _expects_witness(name, args.bits, args.one_way):
        spaces = named_spaces(name, args.bits, args.one_way, args.tape_budget, args.tape_budget)
        certify = name == "pr-from-ok" and args.one_way
        result = search(spaces, bound=args.bound, count_correct=certify, workers=args.workers)
        data = {"schema": SCHEMAS["search"], "version": __version__, "mode": "impossibility",
                "budgets": budgets, **result.to_json()}
        holds = result.correct_and_private == 0 and result.exhausted
        if certify:
            holds = holds and result.certificate_failures == 0 \
                and result.certificates_checked == result.correct
        _emit(_dump(data), args.out)
        return EXIT_OK if holds else EXIT_FAIL

    # witness mode: rediscover a protocol with empty tapes, then place the
    # catalog protocol inside the space with the requested tape budget
    result, refused = SearchResult(), []
    for space in named_spaces(name, args.bits, args.one_way, 0, 0, exact=True):
        try:
            found = search(space, bound=args.bound, stop_at_witness=True)
        except StructuralError as exc:
            refused.append({"template": list(space.template), "reason": str(exc)})
            result.exhausted = False
            continue
        result.merge(found)
        if found.witnesses:
            result.exhausted = False
            break
    located = locate(get_protocol(name), args.tape_budget, args.tape_budget, args.bound)
    data = {"schema": SCHEMAS["search"], "version": __version__, "mode": "witness",
            "budgets": {**budgets, "rediscovery_tape_budget": 0}, **result.to_json(),
            "refused": refused, "located": located.to_json()}
    _emit(_dump(data), args.out)
    return EXIT_OK if result.witnesses and located.correct_and_private > 0 else EXIT_FAIL


# chsh

def cmd_chsh(args) -> int:
    data = {"schema": SCHEMAS["chsh"], **chsh_summary(args.behavior)}
    _emit(_dump(data), args.out)
    return EXIT_OK


def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    return n


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return n


def _nonnegative(text: str) -> int:
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="PATH", help="also write the output to PATH")
    common.add_argument("--workers", type=_positive, default=None,
                        help=f"worker processes (default: ${WORKERS_ENV} or 1)")

    parser = argparse.ArgumentParser(prog="nonlocal-ot", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list", parents=[common], help="catalog with communication costs")
    p.set_defaults(func=cmd_list)

    p = sub.add_parser("run", parents=[common], help="execute one world and print the trace")
    p.add_argument("name", nargs="?", help="protocol name")
    p.add_argument("--protocol")
    p.add_argument("--spec-file", help='JSON {"protocol": ..., "mutation": ...}')
    p.add_argument("--inputs", nargs="*", metavar="NAME=BIT",
                   help="fix inputs, private tape bits or resource tape bits by name")
    p.add_argument("--seed", type=int, default=0, help="seed for bits not fixed by --inputs")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", parents=[common], help="exhaustive verification report")
    p.add_argument("name", nargs="?", help="protocol name")
    p.add_argument("--protocol")
    p.add_argument("--spec-file", help='JSON {"protocol": ..., "mutation": ...}')
    p.add_argument("--all", action="store_true", help="verify the whole catalog")
    p.add_argument("--deviation-bound", type=_positive, default=DEFAULT_DEVIATION_BOUND)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("search", parents=[common], help="bounded search for protocols")
    p.add_argument("name", nargs="?", help=", ".join(LOWER_BOUNDS))
    p.add_argument("--protocol")
    p.add_argument("--bits", type=_nonnegative, required=True, help="message budget")
    p.add_argument("--one-way", action="store_true", help="only A-to-B messages")
    p.add_argument("--tape-budget", type=_nonnegative, default=1, help="private tape bits per party")
    p.add_argument("--bound", type=_positive, default=DEFAULT_ENUMERATION_BOUND,
                   help="refuse spaces whose up-front enumeration exceeds this")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("chsh", parents=[common], help="CHSH numbers for a behavior")
    p.add_argument("behavior", nargs="?", default="singlet",
                   help="singlet, pr, pr-variant or local:a0a1b0b1")
    p.set_defaults(func=cmd_chsh)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.workers is None:
            args.workers = _default_workers()
        return args.func(args)
    except (UsageError, StructuralError) as exc:
        sys.stderr.write(f"nonlocal-ot: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
