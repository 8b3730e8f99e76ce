"""Independent brute-force oracles used to freeze derived values.

Nothing here imports the search engine or the verifier. The protocol space is
enumerated naively: every decision bit is its own table over the full history
domain, outputs are tables over final histories, and correctness and privacy
are checked by direct counting with fractions.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from fractions import Fraction

BITS = (0, 1)


def _tapes(n):
    return list(itertools.product(BITS, repeat=n))


def _steps(template):
    """Decisions in schedule order: resource inputs first, then one per bit."""
    out = [("A", "res"), ("B", "res")]
    for direction in template:
        out.append(("A" if direction == "AB" else "B", "send"))
    return out


def _domain(resource, target, template, tapes, party, upto):
    inputs = target.inputs_a if party == "A" else target.inputs_b
    res_out = resource.outputs_a if party == "A" else resource.outputs_b
    incoming = "BA" if party == "A" else "AB"
    if upto is None:  # resource input: nothing observed yet
        return list(itertools.product(inputs, tapes[party]))
    n_in = sum(1 for d in template[:upto] if d == incoming)
    msgs = list(itertools.product(BITS, repeat=n_in))
    return list(itertools.product(inputs, tapes[party], res_out, msgs))


def _tables(domain, codomain):
    for values in itertools.product(codomain, repeat=len(domain)):
        yield dict(zip(domain, values))


def _run(resource, template, tables, world):
    u, v, ta, tb, rt = world
    tape = {"A": ta, "B": tb}
    own = {"A": u, "B": v}
    ra = tables[0].get((u, ta), None) if tables[0] is not None else None
    rb = tables[1].get((v, tb), None) if tables[1] is not None else None
    out_a, out_b = resource.sample(ra, rb, rt)
    res = {"A": out_a, "B": out_b}
    got = {"A": [], "B": []}
    for k, direction in enumerate(template):
        sender = "A" if direction == "AB" else "B"
        receiver = "B" if sender == "A" else "A"
        h = (own[sender], tape[sender], res[sender], tuple(got[sender]))
        got[receiver].append(tables[2 + k][h])
    return {p: (own[p], tape[p], res[p], tuple(got[p])) for p in ("A", "B")}


def brute_force(resource, target, template, tape_a=0, tape_b=0):
    """(correct, correct_and_private) counts over all deterministic protocols.

    Privacy for P: the law of P's final history given (u, v, out_A, out_B)
    depends only on P's own input and output.
    """
    template = tuple(template)
    tapes = {"A": _tapes(tape_a), "B": _tapes(tape_b)}
    worlds = [
        (u, v, ta, tb, rt)
        for u in target.inputs_a for v in target.inputs_b
        for ta in tapes["A"] for tb in tapes["B"]
        for rt in _tapes(resource.tape_len)
    ]
    per_pair = len(worlds) // (len(target.inputs_a) * len(target.inputs_b))
    weight = Fraction(1, per_pair)

    choices = []
    for k, (party, kind) in enumerate(_steps(template)):
        if kind == "res":
            alphabet = resource.inputs_a if party == "A" else resource.inputs_b
            dom = _domain(resource, target, template, tapes, party, None)
            choices.append(list(_tables(dom, alphabet)))
        else:
            dom = _domain(resource, target, template, tapes, party, k - 2)
            choices.append(list(_tables(dom, BITS)))

    final = {p: _domain(resource, target, template, tapes, p, len(template)) for p in ("A", "B")}
    outs = {"A": target.outputs_a, "B": target.outputs_b}
    rows = {(u, v): dict(target.row(u, v).atoms) for u in target.inputs_a for v in target.inputs_b}
    deterministic = all(len(r) == 1 for r in rows.values())

    correct = private = 0
    for tables in itertools.product(*choices):
        hist = [_run(resource, template, tables, w) for w in worlds]
        reach = {p: sorted({h[p] for h in hist}, key=repr) for p in ("A", "B")}
        free = 1
        for p in ("A", "B"):
            free *= len(outs[p]) ** (len(final[p]) - len(reach[p]))
        for fa, fb in _output_tables(reach, outs, worlds, hist, rows, deterministic):
            if not _correct(worlds, hist, fa, fb, rows, weight):
                continue
            correct += free
            if _private(worlds, hist, fa, fb, weight):
                private += free
    return correct, private


def _output_tables(reach, outs, worlds, hist, rows, deterministic):
    if deterministic:
        # the only candidate: each history's output is what the target forces
        need = {"A": defaultdict(set), "B": defaultdict(set)}
        for w, h in zip(worlds, hist):
            (rec, _), = rows[(w[0], w[1])].items()
            rec = dict(rec)
            need["A"][h["A"]].add(rec["A"])
            need["B"][h["B"]].add(rec["B"])
        if any(len(s) > 1 for p in need for s in need[p].values()):
            return
        yield ({h: next(iter(s)) for h, s in need["A"].items()},
               {h: next(iter(s)) for h, s in need["B"].items()})
        return
    for va in itertools.product(outs["A"], repeat=len(reach["A"])):
        fa = dict(zip(reach["A"], va))
        for vb in itertools.product(outs["B"], repeat=len(reach["B"])):
            yield fa, dict(zip(reach["B"], vb))


def _correct(worlds, hist, fa, fb, rows, weight):
    law = defaultdict(lambda: defaultdict(Fraction))
    for w, h in zip(worlds, hist):
        law[(w[0], w[1])][(("A", fa[h["A"]]), ("B", fb[h["B"]]))] += weight
    return all(dict(law[k]) == rows[k] for k in rows)


def _private(worlds, hist, fa, fb, weight):
    out = {"A": fa, "B": fb}
    for p in ("A", "B"):
        q = "B" if p == "A" else "A"
        joint = defaultdict(lambda: defaultdict(Fraction))
        for w, h in zip(worlds, hist):
            mine = w[0] if p == "A" else w[1]
            theirs = w[1] if p == "A" else w[0]
            key = (mine, out[p][h[p]], theirs, out[q][h[q]])
            joint[key][h[p]] += weight
        laws = defaultdict(set)
        for (mine, o_p, theirs, o_q), d in joint.items():
            total = sum(d.values())
            laws[(mine, o_p)].add(frozenset((h, m / total) for h, m in d.items()))
        if any(len(s) > 1 for s in laws.values()):
            return False
    return True


def local_chsh_values():
    """Equal-outcome probabilities of all 16 deterministic local strategies."""
    out = {}
    for a0, a1, b0, b1 in itertools.product(BITS, repeat=4):
        a, b = (a0, a1), (b0, b1)
        out[(a0, a1, b0, b1)] = tuple(int(a[i] == b[j]) for i in BITS for j in BITS)
    return out


def private_by_counting(spec, run):
    """Per party, whether its full view is independent of the counterpart's
    (input, output) given its own; ``run`` executes one world."""
    from nonlocal_ot.core import World

    worlds = [
        World(u, v, ta, tb, rt)
        for u in spec.target.inputs_a for v in spec.target.inputs_b
        for ta in _tapes(spec.program_a.tape_len)
        for tb in _tapes(spec.program_b.tape_len)
        for rt in _tapes(spec.resource.tape_len)
    ]
    results = [run(spec, w) for w in worlds]
    verdict = {}
    for p in ("A", "B"):
        joint = defaultdict(lambda: defaultdict(int))
        for w, r in zip(worlds, results):
            out_a, out_b = r.output_a, r.output_b
            mine, theirs = (w.input_a, w.input_b) if p == "A" else (w.input_b, w.input_a)
            o_p, o_q = (out_a, out_b) if p == "A" else (out_b, out_a)
            joint[(mine, o_p, theirs, o_q)][r.view(p).key()] += 1
        laws = defaultdict(set)
        for (mine, o_p, _, _), counts in joint.items():
            total = sum(counts.values())
            laws[(mine, o_p)].add(frozenset((k, Fraction(c, total)) for k, c in counts.items()))
        verdict[p] = all(len(s) == 1 for s in laws.values())
    return verdict
