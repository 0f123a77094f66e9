"""Generic bisection game over deterministic Turing-machine runs.

A configuration is ``(state, head, cell_0 .. cell_{S-1})`` for a tape window
of exactly S cells; the head is clamped to the window and a halting
(state, symbol) pair leaves the configuration unchanged.

Odd rounds (challenger) post a ladder: configurations of the challenger's
run at scheduled times across the disputed interval.  Even rounds (prover)
complain about one of:

1. the first configuration (input encoding at the top level, otherwise a
   copy of the parent ladder entry), with a field pointer;
2. the last configuration (at the top level: the pointed output cell agrees
   with the prover's claim; otherwise a copy of the parent entry);
3. segment ``j``.  When the segment spans one step the prover also pins the
   field that breaks the transition rule and the game ends; otherwise the
   challenger bisects that segment on the next level.

Field pointer ``0`` is the state, ``1`` the head and ``2 + x`` tape cell x.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterator, Optional

import numpy as np

from .. import kernels
from ..core import (CHALLENGER_WINS, CONTINUE, DEFENDED, GameSpec, INVALID_CHALLENGE,
                    InvalidSolution, PROCEED, PROVER_WINS, UPHELD, Transcript)
from ..encoding import MalformedPayload, PayloadView, _width, encode
from .base import Game, log_term, next_round, one, open_view, parse_fixture, peek

LADDER, COMPLAINT, CLAIM = 1, 2, 9
LAYOUTS = {LADDER: 2, COMPLAINT: 1}
FIRST, LAST, SEGMENT = 1, 2, 3
MOVES = {"L": -1, "N": 0, "R": 1, "-1": -1, "0": 0, "1": 1}

Config = tuple[int, ...]


@dataclass(frozen=True)
class TuringMachine:
    """Deterministic machine; state 0 starts, symbol 0 is the blank.

    ``rules`` holds ``(q, s, q', write, move)`` rows; missing pairs halt.
    """

    alphabet: str
    nstates: int
    rules: tuple[tuple[int, int, int, int, int], ...]

    def __post_init__(self) -> None:
        seen = set()
        for q, s, nq, w, mv in self.rules:
            if (q, s) in seen:
                raise ValueError(f"machine is not deterministic at ({q}, {s})")
            seen.add((q, s))
            if not (0 <= q < self.nstates and 0 <= nq < self.nstates):
                raise ValueError("rule names an unknown state")
            if not (0 <= s < len(self.alphabet) and 0 <= w < len(self.alphabet)):
                raise ValueError("rule names an unknown symbol")
            if mv not in (-1, 0, 1):
                raise ValueError("head moves are -1, 0 or 1")

    @cached_property
    def table(self) -> dict[tuple[int, int], tuple[int, int, int]]:
        return {(q, s): (nq, w, mv) for q, s, nq, w, mv in self.rules}

    @cached_property
    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        shape = (self.nstates, len(self.alphabet))
        nxt = np.full(shape, -1, dtype=np.int64)
        wrt = np.zeros(shape, dtype=np.int64)
        mv = np.zeros(shape, dtype=np.int64)
        for q, s, nq, w, m in self.rules:
            nxt[q, s], wrt[q, s], mv[q, s] = nq, w, m
        return nxt, wrt, mv

    def symbols(self, text: str) -> tuple[int, ...]:
        try:
            return tuple(self.alphabet.index(ch) for ch in text)
        except ValueError as exc:
            raise ValueError(f"symbol outside alphabet {self.alphabet!r}") from exc

    def text(self, cells) -> str:
        return "".join(self.alphabet[c] for c in cells)


@dataclass(frozen=True)
class TmInstance:
    machine: TuringMachine
    input: tuple[int, ...]
    time_bound: int
    space_bound: int
    claimed_output: tuple[int, ...]
    epsilon: Fraction = Fraction(1, 2)
    k: int = field(default=0)

    def __post_init__(self) -> None:
        if self.time_bound < 1 or self.space_bound < 1:
            raise ValueError("time and space bounds must be positive")
        if len(self.input) > self.space_bound:
            raise ValueError("input does not fit the space bound")
        if len(self.claimed_output) != self.space_bound:
            raise ValueError("claimed output must cover the whole tape window")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        nsym = len(self.machine.alphabet)
        if any(not 0 <= c < nsym for c in self.input + self.claimed_output):
            raise ValueError("tape symbol outside alphabet")

    @property
    def n(self) -> int:
        return len(self.input)

    @property
    def exponent(self) -> int:
        """Smallest k with n**k >= time_bound (the stated k when given)."""
        if self.k:
            return self.k
        n = max(self.n, 2)
        k = 1
        while n ** k < self.time_bound:
            k += 1
        return k

    @property
    def spread(self) -> int:
        return spread_for(self.n, self.epsilon)

    @property
    def width(self) -> int:
        return self.space_bound + 2

    def initial(self) -> Config:
        cells = self.input + (0,) * (self.space_bound - self.n)
        return (0, 0) + cells


def spread_for(n: int, eps: Fraction) -> int:
    """max(2, ceil(n ** eps)) computed exactly."""
    s = max(1, math.ceil(max(n, 1) ** float(eps)) - 1)
    while Fraction(s) ** eps.denominator < Fraction(max(n, 1)) ** eps.numerator:
        s += 1
    return max(2, s)


def schedule(lo: int, hi: int, spread: int) -> list[int]:
    """Ladder times over [lo, hi]: every step when short, else spaced by ceil(width/spread)."""
    w = hi - lo
    if w <= spread:
        return list(range(lo, hi + 1))
    step = -(-w // spread)
    return list(range(lo, hi, step)) + [hi]


def ladder_len(lo: int, hi: int, spread: int) -> tuple[int, int]:
    """(number of times, step) without building the list."""
    w = hi - lo
    if w <= spread:
        return w + 1, 1
    step = -(-w // spread)
    return -(-w // step) + 1, step


def level_count(time_bound: int, spread: int) -> int:
    levels, w = 1, time_bound
    while w > spread:
        w = -(-w // spread)
        levels += 1
    return levels


def step_config(m: TuringMachine, c: Config, space: int) -> Optional[Config]:
    """One transition; None when state, head or scanned symbol is illegal."""
    q, h = c[0], c[1]
    if not (0 <= q < m.nstates and 0 <= h < space):
        return None
    s = c[2 + h]
    if not 0 <= s < len(m.alphabet):
        return None
    rule = m.table.get((q, s))
    if rule is None:
        return c
    nq, w, mv = rule
    cells = list(c[2:])
    cells[h] = w
    return (nq, min(max(h + mv, 0), space - 1)) + tuple(cells)


def run_from(m: TuringMachine, c: Config, steps: int, space: int) -> Optional[Config]:
    nsym = len(m.alphabet)
    if 0 <= c[0] < m.nstates and 0 <= c[1] < space and all(0 <= x < nsym for x in c[2:]):
        if steps == 0:
            return c
        nxt, wrt, mv = m.arrays
        row = kernels.tm_trace(nxt, wrt, mv, np.array(c[2:]), c[0], c[1], steps)[-1]
        return tuple(int(v) for v in row)
    for _ in range(steps):
        c = step_config(m, c, space)
        if c is None:
            return None
    return c


@lru_cache(maxsize=256)
def _trace(m: TuringMachine, init: Config, steps: int) -> tuple[Config, ...]:
    nxt, wrt, mv = m.arrays
    rows = kernels.tm_trace(nxt, wrt, mv, np.array(init[2:]), init[0], init[1], steps)
    return tuple(tuple(int(v) for v in r) for r in rows)


def true_trace(inst: TmInstance) -> tuple[Config, ...]:
    return _trace(inst.machine, inst.initial(), inst.time_bound)


def flatten(configs) -> list[int]:
    return [v for c in configs for v in c]


class TmGame(Game):
    kind = "tm"
    error_models = ("corrupt_output_cell",)
    budget_constant = 27
    layouts = LAYOUTS

    def spec(self, inst: TmInstance) -> GameSpec:
        spread = inst.spread
        levels = level_count(inst.time_bound, spread)
        w = _width([max(inst.space_bound, inst.machine.nstates, len(inst.machine.alphabet)) + 1])
        wt = _width([inst.time_bound + 1])
        g = 11 + 3 * wt + (spread + 1) * inst.width * w
        return GameSpec(self.kind, inst.n, 2 * levels, g,
                        self.budget_constant * log_term(inst.time_bound))

    def claim_payload(self, inst: TmInstance) -> bytes:
        return encode(CLAIM, inst.claimed_output)

    def decode_claim(self, task: TmInstance, payload: bytes) -> TmInstance:
        v = PayloadView(payload, 1)
        if v.tag != CLAIM or v.count(0) != task.space_bound:
            raise InvalidSolution("tm claim is one tape window")
        return replace(task, claimed_output=tuple(v.get(0, k) for k in range(task.space_bound)))

    # --- referee ---
    def _bounds(self, inst: TmInstance, t: Transcript, level: int, lad, meter) -> tuple[int, int]:
        """Validated (lo, hi) of the ladder at ``level``; O(1) reads."""
        lo, hi = lad.get(0, 0), lad.get(0, 1)
        meter.tick(2)
        if level == 0:
            ok = lo == 0 and hi == inst.time_bound
        else:
            parent = open_view(t, 2 * level - 1, LAYOUTS, meter)
            plo, phi = parent.get(0, 0), parent.get(0, 1)
            j = open_view(t, 2 * level, LAYOUTS, meter).get(0, 1)
            _, step = ladder_len(plo, phi, inst.spread)
            meter.tick(6)
            ok = lo == plo + j * step and hi == min(plo + (j + 1) * step, phi)
        return (lo, hi) if ok else (-1, -1)

    def check(self, inst: TmInstance, t: Transcript, rnd: int, meter) -> tuple[str, str]:
        S, width, spread = inst.space_bound, inst.width, inst.spread
        level = (rnd - 1) // 2
        lad = open_view(t, 2 * level + 1, LAYOUTS, meter)
        if lad.tag != LADDER or lad.count(0) != 3:
            raise MalformedPayload("ladder header is (lo, hi, pointer)")
        lo, hi = self._bounds(inst, t, level, lad, meter)
        if lo < 0:
            raise MalformedPayload("ladder interval does not follow the schedule")
        count, step = ladder_len(lo, hi, spread)
        meter.tick(2)
        if lad.count(1) != count * width:
            raise MalformedPayload("ladder has the wrong number of configurations")
        if rnd % 2 == 1:
            if level == 0:
                ptr = lad.get(0, 2)
                meter.tick(2)
                if not 0 <= ptr < S:
                    return PROVER_WINS, INVALID_CHALLENGE
            return CONTINUE, PROCEED

        cp = open_view(t, rnd, LAYOUTS, meter)
        if cp.tag != COMPLAINT or cp.count(0) != 3:
            raise MalformedPayload("complaint is (type, a, b)")
        kind, a, b = cp.get(0, 0), cp.get(0, 1), cp.get(0, 2)
        meter.tick(3)
        cfg = lambda j, f: lad.get(1, j * width + f)  # noqa: E731

        if kind in (FIRST, LAST):
            meter.tick(2)
            if not 0 <= a < width:
                return CHALLENGER_WINS, UPHELD
            j = 0 if kind == FIRST else count - 1
            if level == 0 and kind == FIRST:
                meter.tick(3)
                expect = 0 if a < 2 else (inst.input[a - 2] if a - 2 < inst.n else 0)
                bad = cfg(j, a) != expect
            elif level == 0:
                ptr = lad.get(0, 2)
                meter.tick(2)
                # the pointed output cell agrees with the claim: the challenge is void
                bad = cfg(j, 2 + ptr) == inst.claimed_output[ptr]
            else:
                parent = open_view(t, 2 * level - 1, LAYOUTS, meter)
                pick = open_view(t, 2 * level, LAYOUTS, meter).get(0, 1)
                pj = pick + (0 if kind == FIRST else 1)
                meter.tick(2)
                bad = cfg(j, a) != parent.get(1, pj * width + a)
            return (PROVER_WINS, DEFENDED) if bad else (CHALLENGER_WINS, UPHELD)

        if kind != SEGMENT:
            return CHALLENGER_WINS, UPHELD
        meter.tick(2)
        if not 0 <= a < count - 1:
            return CHALLENGER_WINS, UPHELD
        t0 = lo + a * step
        t1 = hi if a + 1 == count - 1 else lo + (a + 1) * step
        meter.tick(3)
        if t1 - t0 > 1:
            return CONTINUE, PROCEED
        # one-step rule at the pinned field
        m = inst.machine
        q, h = cfg(a, 0), cfg(a, 1)
        meter.tick(4)
        if not (0 <= q < m.nstates and 0 <= h < S):
            return PROVER_WINS, DEFENDED
        s = cfg(a, 2 + h)
        meter.tick(2)
        if not 0 <= s < len(m.alphabet):
            return PROVER_WINS, DEFENDED
        meter.tick(1)  # transition-table lookup
        nq, w, mv = m.table.get((q, s), (q, s, 0))
        meter.tick(2)
        if not 0 <= b < width:
            return CHALLENGER_WINS, UPHELD
        got = cfg(a + 1, b)
        if b == 0:
            expect = nq
        elif b == 1:
            expect = min(max(h + mv, 0), S - 1)
        elif b - 2 == h:
            expect = w
        else:
            expect = cfg(a, b)
        meter.tick(3)
        return (PROVER_WINS, DEFENDED) if got != expect else (CHALLENGER_WINS, UPHELD)

    # --- oracles ---
    def solve(self, task: TmInstance) -> TmInstance:
        return replace(task, claimed_output=true_trace(task)[-1][2:])

    def is_correct(self, inst: TmInstance) -> bool:
        return inst.claimed_output == true_trace(inst)[-1][2:]

    # --- strategies ---
    def _state(self, inst: TmInstance, t: Transcript):
        """Decoded ladders and picks so far, for strategies."""
        lo, hi, picks, ladders = 0, inst.time_bound, [], []
        for rnd, mv in enumerate(t.moves, 1):
            tag, secs = peek(t, rnd, LAYOUTS)
            if rnd % 2 == 1:
                w = inst.width
                ladders.append((secs[0][2] if len(secs[0]) == 3 else 0,
                                [tuple(secs[1][k:k + w]) for k in range(0, len(secs[1]), w)]))
            else:
                j = secs[0][1]
                times = schedule(lo, hi, inst.spread)
                lo, hi = times[j], times[j + 1]
                picks.append(j)
        return lo, hi, picks, ladders

    def ladder_for(self, inst: TmInstance, run, lo: int, hi: int, ptr: int = 0) -> bytes:
        return encode(LADDER, [lo, hi, ptr], flatten(run[x] for x in schedule(lo, hi, inst.spread)))

    def honest_move(self, inst: TmInstance, t: Transcript) -> Optional[bytes]:
        rnd = next_round(t)
        try:
            lo, hi, picks, ladders = self._state(inst, t)
        except (MalformedPayload, ValueError, IndexError):
            return None
        trace = true_trace(inst)
        if rnd == 1:
            out = trace[-1][2:]
            diff = [x for x in range(inst.space_bound) if out[x] != inst.claimed_output[x]]
            return self.ladder_for(inst, trace, 0, inst.time_bound, diff[0]) if diff else None
        if rnd % 2 == 1:
            return self.ladder_for(inst, trace, lo, hi)
        return self._complaint(inst, lo, hi, picks, ladders)

    def _complaint(self, inst: TmInstance, lo, hi, picks, ladders) -> Optional[bytes]:
        ptr, lad = ladders[-1]
        times = schedule(lo, hi, inst.spread)
        if len(lad) != len(times) or any(len(c) != inst.width for c in lad):
            return None
        level = len(ladders) - 1
        if level == 0:
            first, last = inst.initial(), None
        else:
            parent = ladders[-2][1]
            first, last = parent[picks[-1]], parent[picks[-1] + 1]
        for f in range(inst.width):
            if lad[0][f] != first[f]:
                return encode(COMPLAINT, [FIRST, f, 0])
        if level == 0:
            if 0 <= ptr < inst.space_bound and lad[-1][2 + ptr] == inst.claimed_output[ptr]:
                return encode(COMPLAINT, [LAST, 0, 0])
        else:
            for f in range(inst.width):
                if lad[-1][f] != last[f]:
                    return encode(COMPLAINT, [LAST, f, 0])
        m, S = inst.machine, inst.space_bound
        for j in range(len(times) - 1):
            gap = times[j + 1] - times[j]
            got = run_from(m, lad[j], gap, S)
            if got == lad[j + 1]:
                continue
            if gap > 1:
                return encode(COMPLAINT, [SEGMENT, j, 0])
            if got is None:
                return encode(COMPLAINT, [SEGMENT, j, 0])
            pin = next(f for f in range(inst.width) if got[f] != lad[j + 1][f])
            return encode(COMPLAINT, [SEGMENT, j, pin])
        return None

    def prover_candidates(self, inst: TmInstance, t: Transcript) -> Iterator[bytes]:
        lo, hi, _, _ = self._state(inst, t)
        count = len(schedule(lo, hi, inst.spread))
        for f in range(inst.width):
            yield encode(COMPLAINT, [FIRST, f, 0])
            yield encode(COMPLAINT, [LAST, f, 0])
        for j in range(count - 1):
            for f in range(inst.width):
                yield encode(COMPLAINT, [SEGMENT, j, f])

    def fabricated_runs(self, inst: TmInstance, start: Config, lo: int, hi: int):
        """Runs from ``start`` at time lo with one field perturbed at one time in [lo, hi]."""
        m, S = inst.machine, inst.space_bound
        base = [start]
        for _ in range(lo, hi):
            nxt = step_config(m, base[-1], S)
            base.append(base[-1] if nxt is None else nxt)
        limits = [m.nstates + 1, S] + [len(m.alphabet)] * S
        for ts in range(hi - lo + 1):
            for f in range(inst.width):
                c = list(base[ts])
                c[f] = (c[f] + 1) % limits[f]
                run = base[:ts] + [tuple(c)]
                for _ in range(ts, hi - lo):
                    nxt = step_config(m, run[-1], S)
                    run.append(run[-1] if nxt is None else nxt)
                yield {lo + k: cfg for k, cfg in enumerate(run)}

    def challenger_moves(self, inst: TmInstance, t: Transcript) -> Iterator[bytes]:
        rnd = next_round(t)
        if rnd % 2 == 0:
            return
        lo, hi, picks, ladders = self._state(inst, t)
        if ladders:
            parent = ladders[-1][1]
            start = parent[picks[-1]]
        else:
            start = inst.initial()
        honest = {lo + k: c for k, c in enumerate(_trace(inst.machine, start, hi - lo))}
        times = schedule(lo, hi, inst.spread)
        runs = [honest] + list(self.fabricated_runs(inst, start, lo, hi))
        ptrs = range(inst.space_bound + 1) if rnd == 1 else (0,)
        for run in runs:
            last = run[hi]
            diff = [x for x in range(inst.space_bound) if last[2 + x] != inst.claimed_output[x]]
            for ptr in (ptrs if run is honest else (diff[:1] or [0])):
                yield encode(LADDER, [lo, hi, ptr], flatten(run[x] for x in times))
        for pos in (0, len(times) - 1):
            for f in range(inst.width):
                lad = [list(honest[x]) for x in times]
                lad[pos][f] += 1
                yield encode(LADDER, [lo, hi, 0], flatten(lad))
        yield encode(LADDER, [lo, hi, 0], flatten(honest[x] for x in times[:-1]))
        yield encode(LADDER, [lo, hi + 1, 0], flatten(honest[x] for x in times))

    def explore_key(self, inst: TmInstance, t: Transcript):
        rnd = next_round(t)
        if rnd % 2 == 0 or rnd == 1:
            return super().explore_key(inst, t)
        lo, hi, picks, ladders = self._state(inst, t)
        parent = ladders[-1][1]
        return (rnd, lo, hi, parent[picks[-1]], parent[picks[-1] + 1])

    def fabricate(self, inst: TmInstance, rng: random.Random) -> bytes:
        runs = list(self.fabricated_runs(inst, inst.initial(), 0, inst.time_bound))
        run = rng.choice(runs)
        return encode(LADDER, [0, inst.time_bound, rng.randrange(inst.space_bound)],
                      flatten(run[x] for x in schedule(0, inst.time_bound, inst.spread)))

    def corrupt(self, inst: TmInstance, model: str, rng: random.Random) -> TmInstance:
        self.require_model(model)
        out = list(inst.claimed_output)
        x = rng.randrange(inst.space_bound)
        out[x] = (out[x] + rng.randint(1, len(inst.machine.alphabet) - 1)) % len(inst.machine.alphabet)
        return replace(inst, claimed_output=tuple(out))

    # --- fixtures ---
    def generate(self, size: int, rng: random.Random, time_bound: Optional[int] = None,
                 space_bound: Optional[int] = None) -> TmInstance:
        n = max(1, size)
        m = unary_doubler()
        T = time_bound or 2 * (n + 1) ** 2 + 4 * n
        S = space_bound or 2 * n + 2
        task = TmInstance(m, (1,) * n, T, S, (0,) * S, Fraction(1, 2), 0)
        return self.solve(task)

    def dumps(self, inst: TmInstance) -> str:
        m = inst.machine
        lines = ["game tm", f"alphabet {m.alphabet}", f"states {m.nstates}"]
        lines += [f"rule {q} {m.alphabet[s]} {nq} {m.alphabet[w]} {mv}" for q, s, nq, w, mv in m.rules]
        lines += [f"input {m.text(inst.input)}", f"time {inst.time_bound}",
                  f"space {inst.space_bound}", f"epsilon {inst.epsilon}",
                  f"output {m.text(inst.claimed_output)}"]
        if inst.k:
            lines.append(f"k {inst.k}")
        return "\n".join(lines) + "\n"

    def loads(self, text: str) -> TmInstance:
        rows = parse_fixture(text, self.kind)
        alphabet = one(rows, "alphabet")[0]
        rules = []
        for r in rows.get("rule", []):
            if len(r) != 5 or r[4] not in MOVES:
                raise ValueError(f"bad rule {' '.join(r)!r}")
            rules.append((int(r[0]), alphabet.index(r[1]), int(r[2]), alphabet.index(r[3]), MOVES[r[4]]))
        m = TuringMachine(alphabet, int(one(rows, "states")[0]), tuple(rules))
        inp = m.symbols(rows["input"][0][0]) if rows.get("input") and rows["input"][0] else ()
        S = int(one(rows, "space")[0])
        k = int(one(rows, "k")[0]) if "k" in rows else 0
        eps = Fraction(one(rows, "epsilon")[0]) if "epsilon" in rows else Fraction(1, 2)
        task = TmInstance(m, inp, int(one(rows, "time")[0]), S, (0,) * S, eps, k)
        if "output" in rows:
            out = m.symbols(one(rows, "output")[0])
            return replace(task, claimed_output=out + (0,) * (S - len(out)))
        return self.solve(task)


def unary_doubler() -> TuringMachine:
    """Turns ``1^n`` into ``1^(2n)`` over the alphabet ``_1XY``.

    Marks each 1 as X and appends a Y, then rewrites the X block right to
    left, bounces off the left edge and rewrites the Y block.
    """
    _, one_, X, Y = range(4)
    R, L = 1, -1
    rules = (
        (0, one_, 1, X, R), (0, Y, 3, Y, L),
        (1, one_, 1, one_, R), (1, Y, 1, Y, R), (1, _, 2, Y, L),
        (2, one_, 2, one_, L), (2, Y, 2, Y, L), (2, X, 0, X, R),
        (3, X, 3, one_, L), (3, one_, 4, one_, R),
        (4, one_, 4, one_, R), (4, Y, 4, one_, R),
    )
    return TuringMachine("_1XY", 5, rules)


def write_one_and_halt() -> TuringMachine:
    return TuringMachine("_1", 2, ((0, 0, 1, 1, 0), (0, 1, 1, 1, 0)))
