"""Sorting by index permutation: two rounds.

Bits of an r-bit number are numbered 1..r from the most significant end.
Round 1 (challenger): (i) ``j`` with ``f(j)`` out of range, (ii) ``i != j``
with ``f(i) == f(j)``, or (iii) ``(j, b)`` claiming ``A[f(j)] > A[f(j+1)]``
first differ at bit b.  Round 2 (prover, case iii only): a bit ``b' < b``
where the two numbers already differ.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Iterator, Optional

from ..core import (CHALLENGER_WINS, CONTINUE, DEFENDED, GameSpec, INVALID_CHALLENGE,
                    InvalidSolution, PROCEED, PROVER_WINS, RANGE, UPHELD, Transcript)
from ..encoding import MalformedPayload, PayloadView, _width, encode
from .base import Game, log_term, next_round, one, open_view, parse_fixture, peek

CASE_I, CASE_II, CASE_III, DEFENSE, CLAIM = 1, 2, 3, 4, 9
LAYOUTS = {CASE_I: 1, CASE_II: 1, CASE_III: 1, DEFENSE: 1}


@dataclass(frozen=True)
class SortInstance:
    r: int
    A: tuple[int, ...]
    claimed_f: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(not 0 <= v < (1 << self.r) for v in self.A):
            raise ValueError(f"A has entries wider than {self.r} bits")
        if len(self.claimed_f) != len(self.A):
            raise ValueError("claimed_f must have one index per item")

    @property
    def n(self) -> int:
        return len(self.A)


def bit(x: int, b: int, r: int) -> int:
    """Bit ``b`` (1 = most significant) of the r-bit number x."""
    return (x >> (r - b)) & 1


def first_difference(x: int, y: int, r: int) -> Optional[int]:
    if x == y:
        return None
    return r - (x ^ y).bit_length() + 1


def is_sorted_permutation(inst: SortInstance) -> bool:
    n, f = inst.n, inst.claimed_f
    if sorted(f) != list(range(1, n + 1)):
        return False
    return all(inst.A[f[j] - 1] <= inst.A[f[j + 1] - 1] for j in range(n - 1))


class SortGame(Game):
    kind = "sorting"
    error_models = ("swap_adjacent", "flip_entry")
    budget_constant = 9
    layouts = LAYOUTS

    def spec(self, inst: SortInstance) -> GameSpec:
        w = _width([inst.n + 1, inst.r + 1])
        return GameSpec(self.kind, inst.n, 2, 6 + 2 * w, self.budget_constant * log_term(inst.n))

    def claim_payload(self, inst: SortInstance) -> bytes:
        return encode(CLAIM, inst.claimed_f)

    def decode_claim(self, task: SortInstance, payload: bytes) -> SortInstance:
        v = PayloadView(payload, 1)
        if v.tag != CLAIM or v.count(0) != task.n:
            raise InvalidSolution("sorting claim must list n indices")
        return replace(task, claimed_f=tuple(v.get(0, k) for k in range(task.n)))

    def check(self, inst: SortInstance, t: Transcript, rnd: int, meter) -> tuple[str, str]:
        n, r, f, A = inst.n, inst.r, inst.claimed_f, inst.A
        ch = open_view(t, 1, LAYOUTS, meter)
        if rnd == 1:
            if ch.tag == CASE_I and ch.count(0) == 1:
                j = ch.get(0, 0)
                meter.tick(2)
                if not 1 <= j <= n:
                    return PROVER_WINS, INVALID_CHALLENGE
                meter.tick(3)
                if f[j - 1] > n or f[j - 1] < 1:
                    return CHALLENGER_WINS, UPHELD
                return PROVER_WINS, INVALID_CHALLENGE
            if ch.tag == CASE_II and ch.count(0) == 2:
                i, j = ch.get(0, 0), ch.get(0, 1)
                meter.tick(4)
                if not (1 <= i <= n and 1 <= j <= n):
                    return PROVER_WINS, INVALID_CHALLENGE
                meter.tick(4)
                if i != j and f[i - 1] == f[j - 1]:
                    return CHALLENGER_WINS, UPHELD
                return PROVER_WINS, INVALID_CHALLENGE
            if ch.tag == CASE_III and ch.count(0) == 2:
                j, b = ch.get(0, 0), ch.get(0, 1)
                meter.tick(4)
                if not (1 <= j < n and 1 <= b <= r):
                    return PROVER_WINS, INVALID_CHALLENGE
                fj, fk = f[j - 1], f[j]
                meter.tick(6)
                if not (1 <= fj <= n and 1 <= fk <= n):
                    return CHALLENGER_WINS, RANGE
                meter.tick(4)
                if bit(A[fj - 1], b, r) == 1 and bit(A[fk - 1], b, r) == 0:
                    return CONTINUE, PROCEED
                return PROVER_WINS, INVALID_CHALLENGE
            raise MalformedPayload("round 1 expects case (i), (ii) or (iii)")
        df = open_view(t, 2, LAYOUTS, meter)
        if df.tag != DEFENSE or df.count(0) != 1:
            raise MalformedPayload("round 2 expects one bit position")
        bp = df.get(0, 0)
        j, b = ch.get(0, 0), ch.get(0, 1)
        meter.tick(3)
        if not 1 <= bp < b:
            return CHALLENGER_WINS, UPHELD
        meter.tick(6)
        x, y = A[f[j - 1] - 1], A[f[j] - 1]
        if bit(x, bp, r) != bit(y, bp, r):
            return PROVER_WINS, DEFENDED
        return CHALLENGER_WINS, UPHELD

    def solve(self, task: SortInstance) -> SortInstance:
        order = sorted(range(1, task.n + 1), key=lambda k: (task.A[k - 1], k))
        return replace(task, claimed_f=tuple(order))

    def is_correct(self, inst: SortInstance) -> bool:
        return is_sorted_permutation(inst)

    def honest_move(self, inst: SortInstance, t: Transcript) -> Optional[bytes]:
        rnd = next_round(t)
        n, f, r = inst.n, inst.claimed_f, inst.r
        if rnd == 1:
            for j in range(1, n + 1):
                if not 1 <= f[j - 1] <= n:
                    return encode(CASE_I, [j])
            seen: dict[int, int] = {}
            for j in range(1, n + 1):
                if f[j - 1] in seen:
                    return encode(CASE_II, [seen[f[j - 1]], j])
                seen[f[j - 1]] = j
            for j in range(1, n):
                x, y = inst.A[f[j - 1] - 1], inst.A[f[j] - 1]
                if x > y:
                    return encode(CASE_III, [j, first_difference(x, y, r)])
            return None
        if rnd == 2:
            try:
                tag, ((j, b),) = peek(t, 1, LAYOUTS)
            except (MalformedPayload, ValueError):
                return None
            if tag != CASE_III:
                return None
            bp = first_difference(inst.A[f[j - 1] - 1], inst.A[f[j] - 1], r)
            if bp is not None and bp < b:
                return encode(DEFENSE, [bp])
        return None

    def prover_candidates(self, inst, t) -> Iterator[bytes]:
        for b in range(1, inst.r + 1):
            yield encode(DEFENSE, [b])

    def challenger_moves(self, inst: SortInstance, t: Transcript) -> Iterator[bytes]:
        if next_round(t) != 1:
            return
        n, r = inst.n, inst.r
        for j in range(n + 2):
            yield encode(CASE_I, [j])
        for i in range(n + 2):
            for j in range(n + 2):
                yield encode(CASE_II, [i, j])
        for j in range(n + 2):
            for b in range(r + 2):
                yield encode(CASE_III, [j, b])

    def fabricate(self, inst: SortInstance, rng: random.Random) -> bytes:
        n = max(inst.n, 2)
        return encode(CASE_III, [rng.randint(1, n - 1), rng.randint(1, inst.r)])

    def sample_challenge(self, inst: SortInstance, rng: random.Random, samples: int) -> Optional[bytes]:
        """Spot-check random adjacent pairs (range and order only)."""
        n, f = inst.n, inst.claimed_f
        for _ in range(samples):
            if n < 2:
                break
            j = rng.randint(1, n - 1)
            for jj in (j, j + 1):
                if not 1 <= f[jj - 1] <= n:
                    return encode(CASE_I, [jj])
            x, y = inst.A[f[j - 1] - 1], inst.A[f[j] - 1]
            if x > y:
                return encode(CASE_III, [j, first_difference(x, y, inst.r)])
        return None

    def corrupt(self, inst: SortInstance, model: str, rng: random.Random) -> SortInstance:
        self.require_model(model)
        f = list(inst.claimed_f)
        n = inst.n
        pairs = [j for j in range(n - 1) if inst.A[f[j] - 1] != inst.A[f[j + 1] - 1]]
        if model == "swap_adjacent" and pairs:
            j = rng.choice(pairs)
            f[j], f[j + 1] = f[j + 1], f[j]
        else:
            j = rng.randrange(n)
            choices = [0, n + 1] + ([f[(j + 1) % n]] if n > 1 else [])
            f[j] = rng.choice(choices)
        return replace(inst, claimed_f=tuple(f))

    def generate(self, size: int, rng: random.Random, r: int = 8) -> SortInstance:
        a = tuple(rng.randrange(1 << r) for _ in range(size))
        return self.solve(SortInstance(r, a, tuple(range(1, size + 1))))

    def dumps(self, inst: SortInstance) -> str:
        return "\n".join(["game sorting", f"r {inst.r}",
                          "A " + " ".join(map(str, inst.A)),
                          "f " + " ".join(map(str, inst.claimed_f))]) + "\n"

    def loads(self, text: str) -> SortInstance:
        rows = parse_fixture(text, self.kind)
        a = tuple(int(v) for v in one(rows, "A"))
        if "f" in rows:
            return SortInstance(int(one(rows, "r")[0]), a, tuple(int(v) for v in rows["f"][0]))
        return self.solve(SortInstance(int(one(rows, "r")[0]), a, tuple(range(1, len(a) + 1))))
