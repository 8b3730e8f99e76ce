"""Bounded exhaustive search over protocol space.

A search space fixes a resource, a target, a message template (directions of
the allowed bits, the resource being called first) and a private tape budget
per party. A candidate protocol is one table per decision: each party's
resource input and each maximal run of consecutive bits it sends, as a
function of the party's history (own input, tape, everything received so
far). Outputs are not enumerated: the targets searched here determine B's
output from the inputs and A's output, so B's output table is *forced*, and
A's binary output (PR targets) is solved for.

Tables are assigned entry by entry. As soon as both histories a world's
output constraint needs are known, the constraint ``b[hist_B] = a[hist_A] ^
k(inputs)`` (or ``b[hist_B] = k(inputs)``) is merged into a parity
union-find; a contradiction prunes the branch. Three reductions keep counts
exact without materializing them:

* entries at unreachable histories cannot influence any run; they are fixed
  to 0 and counted as ``|codomain| ** (#unreachable)``;
* a block of message bits is enumerated up to relabeling of its values
  (first-occurrence order), counted as ``K! / (K - used)!``;
* free union-find components at a leaf are enumerated explicitly.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
import time
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence

import numpy as np

from .core import StructuralError, View, World, symbol_to_json
from .primitives import NULL, Primitive, is_non_signaling, ko, ok, ot, pr, to
from .protocols import PartyProgram, ProtocolSpec, get_protocol, run_protocol

__all__ = [
    "DEFAULT_ENUMERATION_BOUND",
    "SearchSpace",
    "SearchResult",
    "Witness",
    "search",
    "templates",
    "named_spaces",
    "locate",
    "witness_positive",
    "one_way_leak_certificate",
    "LOWER_BOUNDS",
]

DEFAULT_ENUMERATION_BOUND = 2**24
_CHUNK = 256


@dataclass(frozen=True)
class SearchSpace:
    resource: Primitive
    target: Primitive
    template: tuple[str, ...]
    tape_a: int = 1
    tape_b: int = 1
    pinned: tuple = ()  # ((label, ((code, value), ...)), ...)

    @property
    def schedule(self) -> tuple[str, ...]:
        return ("R",) + tuple(self.template)

    @property
    def one_way(self) -> bool:
        return "BA" not in self.template

    def to_json(self) -> dict:
        return {
            "resource": self.resource.name,
            "target": self.target.name,
            "template": list(self.template),
            "tape_a": self.tape_a,
            "tape_b": self.tape_b,
            "pinned": [label for label, _ in self.pinned],
        }


@dataclass(frozen=True)
class Decision:
    label: str
    party: str
    kind: str  # "resource" or "block"
    size: int  # codomain size
    bits: int = 0
    steps: tuple[int, ...] = ()


@dataclass
class Witness:
    """A correct and private protocol found by the search, as lookup tables."""

    space: SearchSpace
    tables: dict  # label -> {history: value}
    outputs: dict  # "A"/"B" -> {history: symbol}
    multiplicity: int = 1

    def to_json(self) -> dict:
        def entries(t):
            return [{"history": symbol_to_json(h), "value": symbol_to_json(v)}
                    for h, v in sorted(t.items(), key=lambda kv: repr(kv[0]))]

        return {
            "template": list(self.space.template),
            "decisions": {label: entries(t) for label, t in self.tables.items()},
            "outputs": {p: entries(t) for p, t in self.outputs.items()},
        }

    def to_protocol(self, name: str = "witness") -> ProtocolSpec:
        return _witness_protocol(self, name)


@dataclass
class SearchResult:
    spaces: list = field(default_factory=list)
    correct: int = 0
    correct_and_private: int = 0
    witnesses: list = field(default_factory=list)
    exhausted: bool = True
    strategies_examined: int = 0
    correct_exact: bool = True
    certificates_checked: int = 0
    certificate_failures: int = 0
    enumeration_size: int = 0
    elapsed_ms: int = 0

    def merge(self, other: "SearchResult") -> None:
        self.spaces.extend(other.spaces)
        self.correct += other.correct
        self.correct_and_private += other.correct_and_private
        self.witnesses.extend(other.witnesses)
        self.exhausted = self.exhausted and other.exhausted
        self.correct_exact = self.correct_exact and other.correct_exact
        self.strategies_examined += other.strategies_examined
        self.certificates_checked += other.certificates_checked
        self.certificate_failures += other.certificate_failures
        self.enumeration_size += other.enumeration_size
        self.elapsed_ms += other.elapsed_ms

    def to_json(self) -> dict:
        first = self.spaces[0] if self.spaces else {}
        return {
            "space": {
                "resource": first.get("resource"),
                "target": first.get("target"),
                "tape_a": first.get("tape_a"),
                "tape_b": first.get("tape_b"),
                "templates": [s["template"] for s in self.spaces],
            },
            "correct": self.correct,
            "correct_exact": self.correct_exact,
            "correct_and_private": self.correct_and_private,
            "exhausted": self.exhausted,
            "witnesses": [w.to_json() for w in self.witnesses],
            "strategies_examined": self.strategies_examined,
            "enumeration_size": self.enumeration_size,
            "certificates": {
                "checked": self.certificates_checked,
                "failed": self.certificate_failures,
            },
            "elapsed_ms": self.elapsed_ms,
        }


class _UnionFind:
    """Parity union-find with an undo log (no path compression)."""

    def __init__(self):
        self.parent: dict = {}
        self.parity: dict = {}
        self.rank: dict = {}
        self.log: list = []

    def find(self, x):
        p = 0
        while True:
            parent = self.parent.get(x, x)
            if parent == x:
                return x, p
            p ^= self.parity[x]
            x = parent

    def union(self, x, y, parity: int) -> bool:
        rx, px = self.find(x)
        ry, py = self.find(y)
        if rx == ry:
            return (px ^ py) == parity
        if self.rank.get(rx, 0) > self.rank.get(ry, 0):
            rx, ry, px, py = ry, rx, py, px
        self.parent[rx] = ry
        self.parity[rx] = px ^ py ^ parity
        bumped = self.rank.get(rx, 0) == self.rank.get(ry, 0)
        if bumped:
            self.rank[ry] = self.rank.get(ry, 0) + 1
        self.log.append((rx, ry, bumped))
        return True

    def mark(self) -> int:
        return len(self.log)

    def undo(self, mark: int) -> None:
        while len(self.log) > mark:
            rx, ry, bumped = self.log.pop()
            del self.parent[rx]
            del self.parity[rx]
            if bumped:
                self.rank[ry] -= 1


GROUND = ("G",)


def _relation(target: Primitive) -> dict:
    """Per input pair: (kind, constant) with kind "const" (b = k) or "xor" (b = a ^ k)."""
    rel = {}
    binary_a = tuple(target.outputs_a) == (0, 1)
    if tuple(target.outputs_b) != (0, 1) or not (binary_a or len(target.outputs_a) == 1):
        raise StructuralError(f"search does not support target {target.name}")
    for (u, v), row in target.table.items():
        pairs = [(dict(r)["A"], dict(r)["B"]) for r, _ in row]
        masses = {m for _, m in row}
        if binary_a:
            ks = {a ^ b for a, b in pairs}
            if len(ks) != 1 or len(pairs) != 2 or len(masses) != 1:
                raise StructuralError(f"search does not support target {target.name}")
            rel[(u, v)] = ("xor", ks.pop())
        else:
            if len(pairs) != 1:
                raise StructuralError(f"search does not support target {target.name}")
            rel[(u, v)] = ("const", pairs[0][1])
    return rel


class _Engine:
    def __init__(self, space: SearchSpace, max_witnesses: int, bound: int):
        self.space = space
        self.max_witnesses = max_witnesses
        self.stop_at_witness = False
        self.rel = _relation(space.target)
        self.pinned = {label: dict(entries) for label, entries in space.pinned}
        res, tgt = space.resource, space.target
        self.in_a, self.in_b = tgt.inputs_a, tgt.inputs_b
        self.res_out = {"A": res.outputs_a, "B": res.outputs_b}
        self.tape = {"A": space.tape_a, "B": space.tape_b}

        # decisions in schedule order
        self.decisions: list[Decision] = []
        if len(res.inputs_a) > 1:
            self.decisions.append(Decision("resA", "A", "resource", len(res.inputs_a), steps=(0,)))
        if len(res.inputs_b) > 1:
            self.decisions.append(Decision("resB", "B", "resource", len(res.inputs_b), steps=(0,)))
        self.res_decisions = len(self.decisions)
        steps = list(enumerate(space.schedule))[1:]
        for direction, group in itertools.groupby(steps, key=lambda s: s[1]):
            idx = tuple(i for i, _ in group)
            party = "A" if direction == "AB" else "B"
            label = f"blk{len(self.decisions) - self.res_decisions}"
            self.decisions.append(Decision(label, party, "block", 2 ** len(idx), len(idx), idx))

        # observation sequence per party: ("R", size) or (decision index, size)
        self.obs = {"A": [("R", len(res.outputs_a))], "B": [("R", len(res.outputs_b))]}
        for i, d in enumerate(self.decisions):
            if d.kind == "block":
                receiver = "B" if d.party == "A" else "A"
                self.obs[receiver].append((i, d.size))
        last_res = self.res_decisions - 1  # -1: resource outputs known up front
        self.last_obs = {}
        for p in ("A", "B"):
            idx = [last_res if o == "R" else o for o, _ in self.obs[p]]
            self.last_obs[p] = max(idx)
        self.final_radix = {
            p: len(self.inputs(p)) * 2 ** self.tape[p] * math.prod(s for _, s in self.obs[p])
            for p in ("A", "B")
        }

        # worlds
        self.worlds = []
        for (iu, u), (iv, v) in itertools.product(enumerate(self.in_a), enumerate(self.in_b)):
            for ta in range(2 ** space.tape_a):
                for tb in range(2 ** space.tape_b):
                    for rt in range(2 ** res.tape_len):
                        self.worlds.append((iu, iv, ta, tb, rt))
        self.per_pair = len(self.worlds) // (len(self.in_a) * len(self.in_b))
        self._ia = np.array([w[0] for w in self.worlds], dtype=np.int64)
        self._ib = np.array([w[1] for w in self.worlds], dtype=np.int64)
        pair = self._ia * len(self.in_b) + self._ib
        self._pair_onehot = np.zeros((len(self.worlds), len(self.in_a) * len(self.in_b)), dtype=np.int64)
        self._pair_onehot[np.arange(len(self.worlds)), pair] = 1
        self._xor_pairs = np.array([
            iu * len(self.in_b) + iv
            for (iu, u), (iv, v) in itertools.product(enumerate(self.in_a), enumerate(self.in_b))
            if self.rel[(u, v)][0] == "xor"
        ], dtype=np.int64)
        self._const = all(kind == "const" for kind, _ in self.rel.values())
        self._forced_b = np.array([
            self.rel[(self.in_a[w[0]], self.in_b[w[1]])][1] if self._const else 0
            for w in self.worlds
        ], dtype=np.int8)
        self.prune_private = True
        self.use_coloring = True  # off only to cross-check the generic path
        self._setup_prune_keys()
        xs = [self.in_a[w[0]] for w in self.worlds]
        self._x_of_world = np.array([x if isinstance(x, int) else 0 for x in xs], dtype=np.int8)
        self.bound = bound
        self.enumeration_size = self._enumeration_size()
        if self.enumeration_size > bound:
            raise StructuralError(
                f"search space {space.template} (tapes {space.tape_a}/{space.tape_b}) "
                f"needs {self.enumeration_size} outer assignments, bound is {bound}"
            )

    def _setup_prune_keys(self) -> None:
        """Per party: a conditioning key and a counterpart key per world such
        that privacy implies the party's view is independent of the latter
        given the former. With outputs fixed by the inputs these are the
        (input, output) pairs themselves; for non-signaling targets the
        inputs alone give a necessary condition."""
        nA, nB = len(self.in_a), len(self.in_b)
        zeros = np.zeros(len(self.worlds), dtype=np.int64)
        if self._const:
            fb = self._forced_b.astype(np.int64)
            keys = {"A": (self._ia * 2, 2 * nA, self._ib * 2 + fb, 2 * nB),
                    "B": (self._ib * 2 + fb, 2 * nB, self._ia * 2, 2 * nA)}
        elif is_non_signaling(self.space.target):
            keys = {"A": (self._ia + zeros, nA, self._ib + zeros, nB),
                    "B": (self._ib + zeros, nB, self._ia + zeros, nA)}
        else:
            self._prune_keys = None
            return
        self._prune_keys = keys
        # the per-entry bound compares raw counts, so it needs equal group sizes
        self._groups = {}
        self._bound_ok_sizes = True
        for party, (own, _, grp, _) in keys.items():
            totals: dict = defaultdict(int)
            for o, g in zip(own.tolist(), grp.tolist()):
                totals[(o, g)] += 1
            by_own: dict = defaultdict(list)
            for (o, g), t in sorted(totals.items()):
                by_own[o].append((g, t))
            self._groups[party] = {o: [g for g, _ in gs] for o, gs in by_own.items()}
            if any(len({t for _, t in gs}) > 1 for gs in by_own.values()):
                self._bound_ok_sizes = False
        self._own_list = {p: keys[p][0].tolist() for p in keys}
        self._grp_list = {p: keys[p][2].tolist() for p in keys}

    def inputs(self, party: str) -> tuple:
        return self.in_a if party == "A" else self.in_b

    def _domain(self, party: str, upto: int) -> int:
        """Full history-domain size of ``party`` just before decision ``upto``."""
        size = len(self.inputs(party)) * 2 ** self.tape[party]
        for o, s in self.obs[party]:
            when = self.res_decisions - 1 if o == "R" else o
            if when < upto:
                size *= s
        return size

    def _enumeration_size(self) -> int:
        """Tables enumerated before any output constraint can fire."""
        size = 1
        for i, d in enumerate(self.decisions):
            if d.label in self.pinned:
                continue
            if i >= self._first_constrained():
                break
            size *= d.size ** self._domain(d.party, i)
        return size

    def _first_constrained(self) -> int:
        if all(kind == "const" for kind, _ in self.rel.values()):
            return self.last_obs["B"]
        return max(self.last_obs["A"], self.last_obs["B"])

    # search

    def run(self) -> SearchResult:
        start = time.perf_counter()
        self.result = SearchResult(spaces=[self.space.to_json()], enumeration_size=self.enumeration_size)
        self.uf = _UnionFind()
        n = len(self.worlds)
        self.code = {"A": [0] * n, "B": [0] * n}
        for w, (iu, iv, ta, tb, rt) in enumerate(self.worlds):
            self.code["A"][w] = iu * 2 ** self.space.tape_a + ta
            self.code["B"][w] = iv * 2 ** self.space.tape_b + tb
        self.values = [[None] * len(self.decisions) for _ in range(n)]
        self.done = {"A": [False] * n, "B": [False] * n}
        self.tables: list[dict] = [dict() for _ in self.decisions]
        self._cells: list = [None] * len(self.decisions)
        self.stop = False
        if self.res_decisions == 0:
            for w in range(n):
                self._observe_resource(w)
            if not self._settle(range(n), -1):
                self.result.elapsed_ms = int((time.perf_counter() - start) * 1000)
                return self.result
        self._decide(0, 1)
        self.result.exhausted = not self.stop
        self.result.elapsed_ms = int((time.perf_counter() - start) * 1000)
        return self.result

    def _observe_resource(self, w: int) -> None:
        iu, iv, ta, tb, rt = self.worlds[w]
        res = self.space.resource
        vals = self.values[w]
        u = res.inputs_a[vals[0]] if len(res.inputs_a) > 1 else res.inputs_a[0]
        v_idx = self.res_decisions - 1
        v = res.inputs_b[vals[v_idx]] if len(res.inputs_b) > 1 else res.inputs_b[0]
        tape = tuple((rt >> (res.tape_len - 1 - k)) & 1 for k in range(res.tape_len))
        out_a, out_b = res.sample(u, v, tape)
        self.code["A"][w] = self.code["A"][w] * len(res.outputs_a) + res.outputs_a.index(out_a)
        self.code["B"][w] = self.code["B"][w] * len(res.outputs_b) + res.outputs_b.index(out_b)

    def _settle(self, worlds: Iterable[int], index: int) -> bool:
        """Mark histories that became final and add their output constraints."""
        const = all(kind == "const" for kind, _ in self.rel.values())
        for w in worlds:
            for p in ("A", "B"):
                if self.last_obs[p] <= index:
                    self.done[p][w] = True
            if not self.done["B"][w] or not (const or self.done["A"][w]):
                continue
            iu, iv = self.worlds[w][0], self.worlds[w][1]
            kind, k = self.rel[(self.in_a[iu], self.in_b[iv])]
            b_node = ("B", self.code["B"][w])
            if kind == "const":
                ok = self.uf.union(b_node, GROUND, k)
            else:
                ok = self.uf.union(b_node, ("A", self.code["A"][w]), k)
            if not ok:
                return False
        return True

    def _decide(self, index: int, mult: int) -> None:
        if self.stop:
            return
        if not self._early_private(index):
            return
        if index == len(self.decisions):
            self._leaf(mult)
            return
        d = self.decisions[index]
        if (self.use_coloring and index == len(self.decisions) - 1 and self._const
                and d.kind == "block" and d.party == "A" and d.label not in self.pinned):
            self._solve_last_block(index, mult)
            return
        codes = self.code[d.party]
        groups: dict = defaultdict(list)
        for w, c in enumerate(codes):
            groups[c].append(w)
        reachable = sorted(groups)
        pinned = self.pinned.get(d.label)
        if pinned is None:
            unreachable = self._domain(d.party, index) - len(reachable)
            mult *= d.size ** unreachable
        cells = None
        if d.kind == "block" and self.prune_private and self._prune_keys is not None and self._bound_ok_sizes:
            receiver = "B" if d.party == "A" else "A"
            own, grp, pre = self._own_list[receiver], self._grp_list[receiver], self.code[receiver]
            cells = (receiver, defaultdict(int, Counter(zip(own, pre, grp))), defaultdict(int))
        self._cells[index] = cells
        self._assign(index, d, reachable, groups, 0, -1, mult, pinned)

    def _assign(self, index, d, reachable, groups, pos, max_used, mult, pinned) -> None:
        if self.stop:
            return
        if pos == len(reachable):
            if d.kind == "block" and pinned is None:
                mult *= math.perm(d.size, max_used + 1)
            self._decide(index + 1, mult)
            return
        code = reachable[pos]
        members = groups[code]
        if pinned is not None:
            options = [pinned[code]]
        elif d.kind == "block":
            options = range(min(d.size, max_used + 2))
        else:
            options = range(d.size)
        receiver = None if d.kind != "block" else ("B" if d.party == "A" else "A")
        for value in options:
            self.result.strategies_examined += 1
            mark = self.uf.mark()
            saved = [(w, self.code["A"][w], self.code["B"][w]) for w in members]
            self.tables[index][code] = value
            for w in members:
                self.values[w][index] = value
                if receiver is not None:
                    self.code[receiver][w] = self.code[receiver][w] * d.size + value
                elif index == self.res_decisions - 1:
                    self._observe_resource(w)
            cells = self._cells[index]
            if cells is not None:
                touched = self._count_cells(cells, saved, value, +1)
            if self._settle(members, index) and (cells is None or self._cells_ok(cells, touched, d.size)):
                nxt = max(max_used, value) if d.kind == "block" else max_used
                self._assign(index, d, reachable, groups, pos + 1, nxt, mult, pinned)
            if cells is not None:
                self._count_cells(cells, saved, value, -1)
            self.uf.undo(mark)
            for w, ca, cb in saved:
                self.code["A"][w], self.code["B"][w] = ca, cb
                self.values[w][index] = None
                self.done["A"][w] = self.done["B"][w] = False
            if self.stop:
                return
        del self.tables[index][code]

    def _count_cells(self, cells, saved, value, step):
        receiver, unassigned, assigned = cells
        own, grp = self._own_list[receiver], self._grp_list[receiver]
        touched = set()
        for w, ca, cb in saved:
            pre = ca if receiver == "A" else cb
            o, j = own[w], grp[w]
            unassigned[(o, pre, j)] -= step
            assigned[(o, pre, value, j)] += step
            touched.add((o, pre))
        return touched

    def _cells_ok(self, cells, touched, size) -> bool:
        """Counting bound: within each (own key, history so far, value) cell,
        every counterpart group must still be able to reach a common count."""
        receiver, unassigned, assigned = cells
        for o, pre in touched:
            groups = self._groups[receiver][o]
            for v in range(size):
                lo = max(assigned[(o, pre, v, j)] for j in groups)
                hi = min(assigned[(o, pre, v, j)] + unassigned[(o, pre, j)] for j in groups)
                if lo > hi:
                    self.result.correct_exact = False
                    return False
        return True

    # leaves

    def _leaf(self, mult: int) -> None:
        code_a = np.asarray(self.code["A"])
        code_b = np.asarray(self.code["B"])
        binary_a = len(self.space.target.outputs_a) > 1
        a_codes = np.unique(code_a) if binary_a else np.empty(0, dtype=int)
        b_codes = np.unique(code_b)
        nodes = [("A", int(c)) for c in a_codes] + [("B", int(c)) for c in b_codes]
        ground_root = self.uf.find(GROUND)[0]
        located = [self.uf.find(x) for x in nodes]
        free_roots = sorted({r for r, _ in located if r != ground_root})
        k = len(free_roots)
        column = {r: i for i, r in enumerate(free_roots)}
        node_col = np.array([column.get(r, k) for r, _ in located], dtype=np.int64)
        node_par = np.array([p for _, p in located], dtype=np.int8)
        a_node = np.searchsorted(a_codes, code_a) if binary_a else None
        b_node = len(a_codes) + np.searchsorted(b_codes, code_b)
        spare = 2 ** (self.final_radix["B"] - len(b_codes))
        if binary_a:
            spare *= 2 ** (self.final_radix["A"] - len(a_codes))
        weight = mult * spare

        certify = binary_a and self.space.one_way and len(self.space.resource.inputs_b) == 1
        if certify:
            span = self.final_radix["B"] // len(self.in_b)
            twin_code = code_b + (1 - 2 * self._ib) * span
            pos = np.searchsorted(b_codes, twin_code)
            pos = np.minimum(pos, len(b_codes) - 1)
            twin_ok = b_codes[pos] == twin_code
            twin_node = len(a_codes) + pos

        shifts = np.arange(k, dtype=np.int64)
        for start in range(0, 2 ** k, _CHUNK):
            rows = np.arange(start, min(2 ** k, start + _CHUNK), dtype=np.int64)
            assign = ((rows[:, None] >> shifts[None, :]) & 1).astype(np.int8)
            assign = np.concatenate([assign, np.zeros((len(rows), 1), dtype=np.int8)], axis=1)
            vals = assign[:, node_col] ^ node_par[None, :]
            out_b = vals[:, b_node]
            out_a = vals[:, a_node] if binary_a else np.zeros_like(out_b)
            good = np.ones(len(rows), dtype=bool)
            if binary_a:
                ones = out_a.astype(np.int64) @ self._pair_onehot
                good &= np.all(ones[:, self._xor_pairs] * 2 == self.per_pair, axis=1)
            if not good.any():
                continue
            vals, out_a, out_b = vals[good], out_a[good], out_b[good]
            self.result.correct += weight * len(vals)
            if certify:
                self.result.certificates_checked += weight * len(vals)
                holds = np.all(twin_ok) & np.all(
                    (out_b ^ vals[:, twin_node]) == self._x_of_world[None, :], axis=1)
                self.result.certificate_failures += weight * int(np.sum(~holds))
            private = self._private(out_a, out_b, code_a, code_b)
            n_private = int(private.sum())
            if not n_private:
                continue
            self.result.correct_and_private += weight * n_private
            for row in np.flatnonzero(private):
                if len(self.result.witnesses) >= self.max_witnesses:
                    break
                val = {node: int(vals[row, i]) for i, node in enumerate(nodes)}
                self.result.witnesses.append(self._witness(val, weight))
            if self.stop_at_witness:
                self.stop = True
                return

    def _solve_last_block(self, index: int, mult: int) -> None:
        """Last decision is a block from A to B and B's output is fixed by the
        inputs. Worlds sharing B's history so far but needing different
        outputs must see different block values, so the correct tables are
        exactly the proper colorings of a conflict graph on A's histories.
        One bit is a parity problem solved by union-find; wider blocks are
        colored by backtracking in canonical color order."""
        d = self.decisions[index]
        code_a = np.asarray(self.code["A"])
        pre_b = np.asarray(self.code["B"])
        reach, h_idx = np.unique(code_a, return_inverse=True)
        n_h = len(reach)
        mult *= d.size ** (self._domain("A", index) - n_h)
        sides: dict = defaultdict(lambda: (set(), set()))
        for w in range(len(self.worlds)):
            sides[int(pre_b[w])][int(self._forced_b[w])].add(int(h_idx[w]))
        adjacency = [set() for _ in range(n_h)]
        for zeros, ones in sides.values():
            if zeros & ones:
                return
            for h in zeros:
                adjacency[h] |= ones
            for h in ones:
                adjacency[h] |= zeros
        if d.size == 2:
            batches = self._parity_colorings(adjacency)
        else:
            members = [[] for _ in range(n_h)]
            for w in range(len(self.worlds)):
                members[int(h_idx[w])].append((w, None, int(pre_b[w])))
            cells = None
            if self.prune_private and self._prune_keys is not None and self._bound_ok_sizes:
                own, grp = self._own_list["B"], self._grp_list["B"]
                cells = ("B", defaultdict(int, Counter(zip(own, pre_b.tolist(), grp))), defaultdict(int))
            batches = self._colorings(adjacency, d.size, members, cells)
        for f, factors in batches:
            self._evaluate_last(index, mult, reach, h_idx, pre_b, d.size, f, factors)
            if self.stop:
                return

    def _parity_colorings(self, adjacency):
        uf = _UnionFind()
        for h, nbrs in enumerate(adjacency):
            for g in nbrs:
                if not uf.union(h, g, 1):
                    return
        located = [uf.find(h) for h in range(len(adjacency))]
        roots = sorted({r for r, _ in located})
        column = {r: i for i, r in enumerate(roots)}
        h_col = np.array([column[r] for r, _ in located], dtype=np.int64)
        h_par = np.array([p for _, p in located], dtype=np.int64)
        shifts = np.arange(len(roots), dtype=np.int64)
        for start in range(0, 2 ** len(roots), _CHUNK):
            rows = np.arange(start, min(2 ** len(roots), start + _CHUNK), dtype=np.int64)
            bits = (rows[:, None] >> shifts[None, :]) & 1
            yield bits[:, h_col] ^ h_par[None, :], [1] * len(rows)

    def _colorings(self, adjacency, size, members, cells):
        order = sorted(range(len(adjacency)), key=lambda h: (-len(adjacency[h]), h))
        color = [-1] * len(adjacency)
        rows, factors = [], []

        def walk(pos, used):
            if pos == len(order):
                rows.append(list(color))
                factors.append(math.perm(size, used))
                if len(rows) >= _CHUNK:
                    yield self._flush(rows, factors)
                return
            h = order[pos]
            taken = {color[g] for g in adjacency[h]}
            for c in range(min(size, used + 1)):
                if c in taken:
                    continue
                self.result.strategies_examined += 1
                color[h] = c
                if cells is None:
                    yield from walk(pos + 1, max(used, c + 1))
                else:
                    touched = self._count_cells(cells, members[h], c, +1)
                    if self._cells_ok(cells, touched, size):
                        yield from walk(pos + 1, max(used, c + 1))
                    self._count_cells(cells, members[h], c, -1)
                color[h] = -1
                if self.stop:
                    return

        yield from walk(0, 0)
        if rows:
            yield self._flush(rows, factors)

    @staticmethod
    def _flush(rows, factors):
        batch = (np.array(rows, dtype=np.int64), list(factors))
        rows.clear()
        factors.clear()
        return batch

    def _evaluate_last(self, index, mult, reach, h_idx, pre_b, size, f, factors) -> None:
        n = len(f)
        final_b = pre_b[None, :] * size + f[:, h_idx]
        ordered = np.sort(final_b, axis=1)
        reached = 1 + np.count_nonzero(np.diff(ordered, axis=1), axis=1)
        weights = [mult * factors[i] * 2 ** (self.final_radix["B"] - int(reached[i])) for i in range(n)]
        self.result.correct += sum(weights)
        out_a = np.zeros((n, len(self.worlds)), dtype=np.int8)
        out_b = np.repeat(self._forced_b[None, :], n, 0)
        code_a = np.asarray(self.code["A"])
        private = self._private(out_a, out_b, code_a, final_b, ("A",))
        private &= self._private(out_a, out_b, code_a, final_b, ("B",))
        for row in np.flatnonzero(private):
            self.result.correct_and_private += weights[row]
            if len(self.result.witnesses) < self.max_witnesses:
                self.tables[index] = {int(reach[j]): int(f[row, j]) for j in range(len(reach))}
                val = {("B", int(c)): int(b) for c, b in zip(final_b[row], self._forced_b)}
                self.result.witnesses.append(self._witness(val, weights[row]))
                self.tables[index] = {}
            if self.stop_at_witness:
                self.stop = True
                return

    def _early_private(self, index: int) -> bool:
        """Test the pruning condition on histories so far. A history so far
        is a function of the final view, so a leak now is a leak at the end."""
        if not self.prune_private or self._prune_keys is None or index in (0, len(self.decisions)):
            return True
        for party in ("A", "B"):
            own, n_c, grp, n_g = self._prune_keys[party]
            base = own * n_g + grp
            codes = np.fromiter(self.code[party], dtype=np.int64, count=len(self.worlds))
            n_v = int(codes.max()) + 1
            counts = np.bincount(base * n_v + codes, minlength=n_c * n_g * n_v).reshape(n_c, n_g, n_v)
            totals = counts.sum(axis=2)
            lhs = counts[:, :, None, :] * totals[:, None, :, None]
            rhs = counts[:, None, :, :] * totals[:, :, None, None]
            if not np.array_equal(lhs, rhs):
                self.result.correct_exact = False
                return False
        return True

    def _private(self, out_a, out_b, code_a, code_b, parties=("A", "B")) -> np.ndarray:
        """Row mask: each party's view is independent of the other's input and
        output given its own input and output."""
        rows = out_a.shape[0]
        ok = np.ones(rows, dtype=bool)
        sides = {
            "A": (self._ia, out_a, code_a, self._ib, out_b, len(self.in_a), len(self.in_b)),
            "B": (self._ib, out_b, code_b, self._ia, out_a, len(self.in_b), len(self.in_a)),
        }
        for party in parties:
            own_in, own_out, own_code, cp_in, cp_out, n_own, n_cp = sides[party]
            if own_code.ndim == 1:
                _, view_idx = np.unique(own_code, return_inverse=True)
                view_idx = view_idx[None, :]
            else:
                view_idx = own_code
            n_c, n_g, n_v = 2 * n_own, 2 * n_cp, int(view_idx.max()) + 1
            cond = own_in[None, :] * 2 + own_out
            grp = cp_in[None, :] * 2 + cp_out
            key = (cond.astype(np.int64) * n_g + grp) * n_v + view_idx
            key += np.arange(rows, dtype=np.int64)[:, None] * (n_c * n_g * n_v)
            counts = np.bincount(key.ravel(), minlength=rows * n_c * n_g * n_v)
            counts = counts.reshape(rows, n_c, n_g, n_v)
            totals = counts.sum(axis=3)
            lhs = counts[:, :, :, None, :] * totals[:, :, None, :, None]
            rhs = counts[:, :, None, :, :] * totals[:, :, :, None, None]
            ok &= np.all(lhs == rhs, axis=(1, 2, 3, 4))
        return ok

    # decoding

    def decode(self, party: str, code: int, upto: int) -> tuple:
        """History tuple (input, tape, resource_out, messages_in) of ``code``."""
        obs = []
        for o, s in self.obs[party]:
            when = self.res_decisions - 1 if o == "R" else o
            if when < upto:
                obs.append((o, s))
        digits = []
        for o, s in reversed(obs):
            digits.append((o, code % s))
            code //= s
        digits.reverse()
        tape_bits = self.tape[party]
        tape_int = code % (2 ** tape_bits)
        own = self.inputs(party)[code // (2 ** tape_bits)]
        tape = tuple((tape_int >> (tape_bits - 1 - k)) & 1 for k in range(tape_bits))
        res_out, msgs = (), ()
        for o, value in digits:
            if o == "R":
                res_out = (self.res_out[party][value],)
            else:
                bits = self.decisions[o].bits
                msgs += tuple((value >> (bits - 1 - k)) & 1 for k in range(bits))
        return (own, tape, res_out, msgs)

    def encode(self, party: str, history: tuple, upto: int) -> int:
        own, tape, res_out, msgs = history
        code = self.inputs(party).index(own)
        for t in tape:
            code = code * 2 + t
        pos = 0
        for o, s in self.obs[party]:
            when = self.res_decisions - 1 if o == "R" else o
            if when >= upto:
                continue
            if o == "R":
                code = code * s + self.res_out[party].index(res_out[0])
            else:
                bits = self.decisions[o].bits
                value = 0
                for b in msgs[pos:pos + bits]:
                    value = value * 2 + b
                pos += bits
                code = code * s + value
        return code

    def _witness(self, val, mult) -> Witness:
        tables = {}
        for i, d in enumerate(self.decisions):
            table = {}
            for code, value in self.tables[i].items():
                hist = self.decode(d.party, code, i)
                if d.kind == "resource":
                    alpha = self.space.resource.inputs_a if d.party == "A" else self.space.resource.inputs_b
                    table[hist] = alpha[value]
                else:
                    table[hist] = value
            tables[f"{d.party}:{d.label}"] = table
        end = len(self.decisions)
        outputs = {"A": {}, "B": {}}
        for (p, code), v in sorted(val.items()):
            outputs[p][self.decode(p, code, end)] = v
        return Witness(self.space, tables, outputs, mult)


def _witness_protocol(witness: Witness, name: str) -> ProtocolSpec:
    space = witness.space
    engine = _Engine(space, 0, math.inf)
    programs = {}
    for party in ("A", "B"):
        resource_input = None
        sends = []
        for label, table in witness.tables.items():
            p, short = label.split(":")
            if p != party:
                continue
            d = next(x for x in engine.decisions if x.label == short)
            if d.kind == "resource":
                resource_input = (lambda t: lambda v: t.get(v.history(), next(iter(t.values()))))(table)
            else:
                for k in range(d.bits):
                    sends.append((lambda t, k, bits: lambda v: (t.get(v.history(), 0) >> (bits - 1 - k)) & 1)(
                        table, k, d.bits))
        outs = witness.outputs[party]
        alphabet = space.target.outputs_a if party == "A" else space.target.outputs_b
        if len(alphabet) == 1:
            output = (lambda s: lambda v: s)(alphabet[0])
        else:
            output = (lambda t: lambda v: t.get(v.history(), 0))(outs)
        tape_len = space.tape_a if party == "A" else space.tape_b
        programs[party] = PartyProgram(
            output=output, resource_input=resource_input, sends=tuple(sends),
            tape_names=tuple(f"t{k}" for k in range(tape_len)),
        )
    return ProtocolSpec(name, space.resource, space.target, programs["A"], programs["B"],
                        space.schedule, len(space.template))


def search(
    spaces: SearchSpace | Sequence[SearchSpace],
    max_witnesses: int = 8,
    bound: int = DEFAULT_ENUMERATION_BOUND,
    stop_at_witness: bool = False,
    count_correct: bool = False,
    workers: int = 1,
) -> SearchResult:
    """Exhaustively search each space; results are merged in the given order.

    At most ``max_witnesses`` witnesses are kept. With ``stop_at_witness``
    the search ends at the first correct and private protocol and reports
    ``exhausted = False``. Branches that already leak are cut early unless
    ``count_correct`` is set; ``correct`` is then a lower bound and
    ``correct_exact`` says so.
    """
    if isinstance(spaces, SearchSpace):
        spaces = [spaces]
    for space in spaces:
        _Engine(space, 0, bound)  # refuse oversized spaces before any work
    options = (max_witnesses, bound, count_correct)
    if workers > 1 and not stop_at_witness and len(spaces) > 1 and not any(s.pinned for s in spaces):
        jobs = [(s.resource.name, s.target.name, s.template, s.tape_a, s.tape_b, options) for s in spaces]
        total = SearchResult()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for job, result in zip(jobs, pool.map(_search_job, jobs)):  # map keeps template order
                for w in result.witnesses:
                    w.space = _space_from_job(job)
                total.merge(result)
        return total
    total = SearchResult()
    for space in spaces:
        engine = _Engine(space, max_witnesses, bound)
        engine.stop_at_witness = stop_at_witness
        engine.prune_private = not count_correct
        result = engine.run()
        total.merge(result)
        if engine.stop:
            break
    return total


_PRIMITIVES = {"ok": ok, "ot": ot, "pr": pr, "to": to, "ko": ko}


def _space_from_job(job) -> SearchSpace:
    resource, target, template, tape_a, tape_b, _ = job
    return SearchSpace(_PRIMITIVES[resource](), _PRIMITIVES[target](), template, tape_a, tape_b)


def _search_job(job) -> SearchResult:
    max_witnesses, bound, count_correct = job[-1]
    result = search(_space_from_job(job), max_witnesses, bound, count_correct=count_correct)
    for w in result.witnesses:
        w.space = None  # primitives hold closures; the parent rebuilds the space
    return result


def templates(bits: int, one_way: bool = False, exact: bool = False) -> list[tuple[str, ...]]:
    """All message templates with at most (or exactly) ``bits`` bits."""
    out = []
    lengths = [bits] if exact else range(bits + 1)
    dirs = ("AB",) if one_way else ("AB", "BA")
    for n in lengths:
        out.extend(itertools.product(dirs, repeat=n))
    return out


_PROBLEMS = {
    "ot-from-pr": (pr, ot),
    "pr-from-ok": (ok, pr),
    "ot-from-ok": (ok, ot),
}


def named_spaces(name: str, bits: int, one_way: bool = False, tape_a: int = 1,
                 tape_b: int = 1, exact: bool = False) -> list[SearchSpace]:
    try:
        resource, target = _PROBLEMS[name]
    except KeyError:
        raise StructuralError(f"unknown search problem {name!r}; known: {', '.join(_PROBLEMS)}") from None
    res, tgt = resource(), target()
    return [SearchSpace(res, tgt, t, tape_a, tape_b) for t in templates(bits, one_way, exact)]


def _recording(spec: ProtocolSpec, log: dict) -> ProtocolSpec:
    """Copy of ``spec`` whose decisions are logged by (party, slot, history)."""

    def wrap(fn, party, slot):
        def call(view):
            value = fn(view)
            log[(party, slot, view.history())] = value
            return value
        return call

    programs = {}
    for party in ("A", "B"):
        prog = spec.program(party)
        res = None if prog.resource_input is None else wrap(prog.resource_input, party, "R")
        sends = tuple(wrap(f, party, i) for i, f in enumerate(prog.sends))
        programs[party] = dataclasses.replace(prog, resource_input=res, sends=sends)
    return dataclasses.replace(spec, program_a=programs["A"], program_b=programs["B"])


def _spec_worlds(spec: ProtocolSpec):
    bits = lambda n: itertools.product((0, 1), repeat=n)
    for u, v in itertools.product(spec.target.inputs_a, spec.target.inputs_b):
        for ta, tb, rt in itertools.product(bits(spec.program_a.tape_len), bits(spec.program_b.tape_len),
                                            bits(spec.resource.tape_len)):
            yield World(u, v, ta, tb, rt)


def locate(spec: ProtocolSpec, tape_a: int = 1, tape_b: int = 1, bound: int = DEFAULT_ENUMERATION_BOUND) -> SearchResult:
    """Pin ``spec``'s decision tables inside the search space of its own
    template and evaluate that single point with the search machinery."""
    if spec.schedule[:1] != ("R",) or spec.program_a.tape_len > tape_a or spec.program_b.tape_len > tape_b:
        raise StructuralError(f"{spec.name} does not fit a space with tapes {tape_a}/{tape_b}")
    space = SearchSpace(spec.resource, spec.target, tuple(spec.schedule[1:]), tape_a, tape_b)
    engine = _Engine(space, 0, math.inf)
    log: dict = {}
    recorder = _recording(spec, log)
    for world in _spec_worlds(spec):
        run_protocol(recorder, world)

    sends_before = {"A": 0, "B": 0}
    pinned = []
    for index, d in enumerate(engine.decisions):
        keep = spec.program(d.party).tape_len
        entries = {}
        for code in range(engine._domain(d.party, index)):
            own, tape, res_out, msgs = engine.decode(d.party, code, index)
            history = (own, tape[:keep], res_out, msgs)
            if d.kind == "resource":
                key = (d.party, "R", history)
                if key in log:
                    alphabet = spec.resource.inputs_a if d.party == "A" else spec.resource.inputs_b
                    entries[code] = alphabet.index(log[key])
            else:
                first = sends_before[d.party]
                bits = [log.get((d.party, first + k, history)) for k in range(d.bits)]
                if None not in bits:
                    entries[code] = sum(b << (d.bits - 1 - k) for k, b in enumerate(bits))
        if d.kind == "block":
            sends_before[d.party] += d.bits
        pinned.append((d.label, tuple(sorted(entries.items()))))
    pinned_space = dataclasses.replace(space, pinned=tuple(pinned))
    return search(pinned_space, max_witnesses=1, bound=bound, count_correct=True)


LOWER_BOUNDS = {"ot-from-pr": 1, "pr-from-ok": 2, "ot-from-ok": 3}


@dataclass
class PositiveResult:
    """Tightness check for one lower bound."""

    name: str
    bits: int
    located: SearchResult
    rediscovered: SearchResult

    @property
    def passed(self) -> bool:
        return self.located.correct_and_private > 0 and bool(self.rediscovered.witnesses)

    def to_json(self) -> dict:
        return {
            "problem": self.name,
            "bits": self.bits,
            "pass": self.passed,
            "located": self.located.to_json(),
            "rediscovered": self.rediscovered.to_json(),
        }


def witness_positive(name: str, tape_budget: int = 1, bound: int = DEFAULT_ENUMERATION_BOUND) -> PositiveResult:
    """The catalog protocol sits inside the smallest space above the bound,
    and a search of its template (tapes 0) finds a witness on its own."""
    if name not in LOWER_BOUNDS:
        raise StructuralError(f"no lower bound recorded for {name!r}; known: {', '.join(LOWER_BOUNDS)}")
    spec = get_protocol(name)
    located = locate(spec, tape_budget, tape_budget, bound)
    space = SearchSpace(spec.resource, spec.target, tuple(spec.schedule[1:]), 0, 0)
    rediscovered = search(space, max_witnesses=1, bound=bound, stop_at_witness=True)
    return PositiveResult(name, LOWER_BOUNDS[name], located, rediscovered)


def one_way_leak_certificate(bits: int = 2, tape_budget: int = 1, workers: int = 1) -> SearchResult:
    """Enumerate every correct one-way PR-from-OK protocol up to ``bits`` and
    check ``b(y=0) XOR b(y=1) == x`` on each; no privacy pruning, so the
    certificate covers all of them (``certificates.checked == correct``)."""
    spaces = named_spaces("pr-from-ok", bits, one_way=True, tape_a=tape_budget, tape_b=tape_budget)
    return search(spaces, count_correct=True, workers=workers)
