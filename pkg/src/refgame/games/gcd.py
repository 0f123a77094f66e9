"""GCD with a Bézout certificate: three rounds of modular spot checks.

The claim is ``(c, d, e, d', e')`` with ``c = d*a + e*b``, ``a = d'*c`` and
``b = e'*c``.  Round 1 (challenger): a small modulus p and residues of all
seven numbers under which some equation fails.  Round 2 (prover): one value
whose residue the challenger misreported, with its sign, its fixed-length
binary expansion (most significant first) and the running remainders.
Round 3 (challenger): an index where the expansion or the remainder chain
is wrong.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Iterator, Optional

from ..core import (CHALLENGER_WINS, CONTINUE, DEFENDED, GameSpec, INVALID_CHALLENGE,
                    InvalidSolution, PROCEED, PROVER_WINS, UPHELD, Transcript)
from ..encoding import MalformedPayload, PayloadView, _width, encode
from .base import Game, log_term, next_round, one, open_view, parse_fixture, peek

CHALLENGE, DEFENSE, COMPLAINT, CLAIM = 1, 2, 3, 9
LAYOUTS = {CHALLENGE: 2, DEFENSE: 3, COMPLAINT: 1}
NAMES = ("a", "b", "c", "d", "e", "d'", "e'")
RECURRENCE, BIT, SIGN = 0, 1, 2


@dataclass(frozen=True)
class GcdInstance:
    a: int
    b: int
    claimed: tuple[int, int, int, int, int]  # c, d, e, d', e'

    def __post_init__(self) -> None:
        if self.a <= 0 or self.b <= 0:
            raise ValueError("a and b must be positive")
        if len(self.claimed) != 5:
            raise ValueError("claim is (c, d, e, d', e')")
        bound = 10 ** self.n
        if any(abs(v) >= bound for v in self.claimed):
            raise ValueError(f"claimed values must have at most {self.n} digits")
        if self.claimed[0] < 0:
            raise ValueError("claimed gcd c must be non-negative")

    @property
    def n(self) -> int:
        return len(str(max(self.a, self.b)))

    @property
    def values(self) -> tuple[int, ...]:
        return (self.a, self.b) + tuple(self.claimed)


def digit_bound(n: int) -> int:
    """Digits allowed for the modulus: twice log10(n), plus slack of 2."""
    return math.ceil(2 * math.log10(max(n, 1))) + 2


def bit_length_bound(n: int) -> int:
    return (10 ** n - 1).bit_length()


def ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    old_r, r, old_s, s, old_t, t = a, b, 1, 0, 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    return old_r, old_s, old_t


def equations_hold(vals, p: Optional[int] = None) -> bool:
    a, b, c, d, e, dp, ep = vals
    diffs = (c - d * a - e * b, a - dp * c, b - ep * c)
    if p is None:
        return all(x == 0 for x in diffs)
    return all(x % p == 0 for x in diffs)


@lru_cache(maxsize=None)
def primes_below(limit: int) -> tuple[int, ...]:
    sieve = bytearray([1]) * limit
    sieve[:2] = b"\x00\x00"
    for q in range(2, int(limit ** 0.5) + 1):
        if sieve[q]:
            sieve[q * q::q] = bytearray(len(sieve[q * q::q]))
    return tuple(i for i, v in enumerate(sieve) if v)


def expansion(v: int, length: int, p: int) -> tuple[int, list[int], list[int]]:
    mag = abs(v)
    bits = [(mag >> (length - 1 - m)) & 1 for m in range(length)]
    partial, acc = [], 0
    for k in bits:
        acc = (2 * acc + k) % p
        partial.append(acc)
    return int(v < 0), bits, partial


class GcdGame(Game):
    kind = "gcd"
    error_models = ("flip_entry",)
    budget_constant = 20
    layouts = LAYOUTS

    def spec(self, inst: GcdInstance) -> GameSpec:
        L = bit_length_bound(inst.n)
        wp = _width([10 ** digit_bound(inst.n)])
        return GameSpec(self.kind, inst.n, 3, 32 + 8 * wp + L * (1 + wp),
                        self.budget_constant * log_term(inst.n))

    def claim_payload(self, inst: GcdInstance) -> bytes:
        return encode(CLAIM, inst.claimed)

    def decode_claim(self, task: GcdInstance, payload: bytes) -> GcdInstance:
        v = PayloadView(payload, 1)
        if v.tag != CLAIM or v.count(0) != 5:
            raise InvalidSolution("gcd claim is five integers")
        return replace(task, claimed=tuple(v.get(0, k) for k in range(5)))

    def check(self, inst: GcdInstance, t: Transcript, rnd: int, meter) -> tuple[str, str]:
        D = digit_bound(inst.n)
        L = bit_length_bound(inst.n)
        ch = open_view(t, 1, LAYOUTS, meter)
        if ch.tag != CHALLENGE:
            raise MalformedPayload("round 1 expects a modular challenge")
        if rnd == 1:
            if ch.count(0) != 1 or ch.count(1) != 7:
                raise MalformedPayload("challenge is p and seven residues")
            p = ch.get(0, 0)
            meter.tick(2)
            if not 2 <= p < 10 ** D:
                return PROVER_WINS, INVALID_CHALLENGE
            res = [ch.get(1, k) for k in range(7)]
            meter.tick(14)
            if any(not 0 <= x < p for x in res):
                return PROVER_WINS, INVALID_CHALLENGE
            meter.tick(12)
            if equations_hold(res, p):
                return PROVER_WINS, INVALID_CHALLENGE
            return CONTINUE, PROCEED
        df = open_view(t, 2, LAYOUTS, meter)
        if df.tag != DEFENSE or df.count(0) != 2:
            raise MalformedPayload("round 2 expects a defense")
        p = ch.get(0, 0)
        kc, sign = df.get(0, 0), df.get(0, 1)
        meter.tick(4)
        if not (0 <= kc < 7 and sign in (0, 1)):
            return CHALLENGER_WINS, UPHELD
        meter.tick(2)
        if df.count(1) != L or df.count(2) != L:
            return CHALLENGER_WINS, UPHELD
        if rnd == 2:
            last = df.get(2, L - 1)
            claimed = ch.get(1, kc)
            meter.tick(3)
            residue = last if sign == 0 else (-last) % p
            if residue == claimed:
                return CHALLENGER_WINS, UPHELD
            return CONTINUE, PROCEED
        cp = open_view(t, 3, LAYOUTS, meter)
        if cp.tag != COMPLAINT or cp.count(0) != 2:
            raise MalformedPayload("round 3 expects (kind, m)")
        kind, m = cp.get(0, 0), cp.get(0, 1)
        meter.tick(4)
        value = inst.values[kc]
        if kind == SIGN:
            meter.tick(2)
            justified = sign != int(value < 0)
        elif kind in (RECURRENCE, BIT) and 0 <= m < L:
            km = df.get(1, m)
            if kind == BIT:
                meter.tick(3)  # one word of |value|, shift, compare
                justified = km != (abs(value) >> (L - 1 - m)) & 1
            elif m == 0:
                meter.tick(1)
                justified = df.get(2, 0) != km
            else:
                cur, prev = df.get(2, m), df.get(2, m - 1)
                meter.tick(4)
                justified = cur != (2 * prev + km) % p
        else:
            return PROVER_WINS, INVALID_CHALLENGE
        return (CHALLENGER_WINS, UPHELD) if justified else (PROVER_WINS, DEFENDED)

    def solve(self, task: GcdInstance) -> GcdInstance:
        g, d, e = ext_gcd(task.a, task.b)
        return replace(task, claimed=(g, d, e, task.a // g, task.b // g))

    def is_correct(self, inst: GcdInstance) -> bool:
        return equations_hold(inst.values)

    # --- strategies ---
    def honest_move(self, inst: GcdInstance, t: Transcript) -> Optional[bytes]:
        rnd = next_round(t)
        vals = inst.values
        if rnd == 1:
            for p in primes_below(10 ** digit_bound(inst.n)):
                if not equations_hold([v % p for v in vals], p):
                    return encode(CHALLENGE, [p], [v % p for v in vals])
            return None
        try:
            _, ((p,), res) = peek(t, 1, LAYOUTS)
        except (MalformedPayload, ValueError):
            return None
        L = bit_length_bound(inst.n)
        if rnd == 2:
            for kc, v in enumerate(vals):
                if res[kc] != v % p:
                    sign, bits, partial = expansion(v, L, p)
                    return encode(DEFENSE, [kc, sign], bits, partial)
            return None
        if rnd == 3:
            try:
                _, ((kc, sign), bits, partial) = peek(t, 2, LAYOUTS)
            except (MalformedPayload, ValueError):
                return None
            if not 0 <= kc < 7 or len(bits) != L or len(partial) != L:
                return None
            true_sign, true_bits, _ = expansion(vals[kc], L, p)
            for m in range(L):
                if bits[m] != true_bits[m]:
                    return encode(COMPLAINT, [BIT, m])
                expect = bits[0] if m == 0 else (2 * partial[m - 1] + bits[m]) % p
                if partial[m] != expect:
                    return encode(COMPLAINT, [RECURRENCE, m])
            if sign != true_sign:
                return encode(COMPLAINT, [SIGN, 0])
        return None

    def prover_candidates(self, inst: GcdInstance, t: Transcript) -> Iterator[bytes]:
        try:
            _, ((p,), res) = peek(t, 1, LAYOUTS)
        except (MalformedPayload, ValueError):
            return
        L = bit_length_bound(inst.n)
        for kc, v in enumerate(inst.values):
            sign, bits, partial = expansion(v, L, p)
            yield encode(DEFENSE, [kc, sign], bits, partial)
            # fabricated chains that land on a different residue
            target = (res[kc] + 1) % p
            fake = list(partial)
            fake[-1] = target if sign == 0 else (-target) % p
            yield encode(DEFENSE, [kc, sign], bits, fake)
            yield encode(DEFENSE, [kc, 1 - sign], bits, partial)

    def challenger_moves(self, inst: GcdInstance, t: Transcript) -> Iterator[bytes]:
        rnd = next_round(t)
        vals = inst.values
        if rnd == 1:
            top = 10 ** digit_bound(inst.n)
            for p in (2, 3):
                for res in _all_vectors(p, 7):
                    yield encode(CHALLENGE, [p], res)
            moduli = sorted(set(primes_below(min(top, 100))[2:]) | {4, 6, 8, 9, 10, 12, 15})
            for p in (q for q in moduli if q < top):
                true = [v % p for v in vals]
                for k in range(7):
                    for x in range(p):
                        if x != true[k]:
                            yield encode(CHALLENGE, [p], true[:k] + [x] + true[k + 1:])
            for p in (0, 1, top):
                yield encode(CHALLENGE, [p], [0] * 7)
            yield encode(CHALLENGE, [5], [5] + [0] * 6)
        elif rnd == 3:
            L = bit_length_bound(inst.n)
            for kind in (RECURRENCE, BIT):
                for m in range(-1, L + 1):
                    yield encode(COMPLAINT, [kind, m])
            yield encode(COMPLAINT, [SIGN, 0])
            yield encode(COMPLAINT, [7, 0])

    def explore_key(self, inst: GcdInstance, t: Transcript):
        if next_round(t) == 3:
            _, ((p,), _) = peek(t, 1, LAYOUTS)
            return (p, t.payload(2))
        return super().explore_key(inst, t)

    def fabricate(self, inst: GcdInstance, rng: random.Random) -> bytes:
        p = rng.choice(primes_below(10 ** digit_bound(inst.n))[:10])
        res = [v % p for v in inst.values]
        k = rng.randrange(7)
        res[k] = (res[k] + rng.randint(1, p - 1)) % p
        return encode(CHALLENGE, [p], res)

    def corrupt(self, inst: GcdInstance, model: str, rng: random.Random) -> GcdInstance:
        self.require_model(model)
        bound = 10 ** inst.n
        vals = list(inst.claimed)
        while True:
            k = rng.randrange(5)
            delta = rng.choice([-3, -2, -1, 1, 2, 3])
            nv = vals[k] + delta
            if abs(nv) < bound and (k != 0 or nv >= 0):
                vals[k] = nv
                return replace(inst, claimed=tuple(vals))

    def generate(self, size: int, rng: random.Random) -> GcdInstance:
        hi = 10 ** size - 1
        g = rng.randint(1, max(1, int(hi ** 0.3)))
        a = g * rng.randint(1, hi // g)
        b = g * rng.randint(1, hi // g)
        return self.solve(GcdInstance(a, b, (1, 0, 0, 0, 0)))

    def dumps(self, inst: GcdInstance) -> str:
        return f"game gcd\na {inst.a}\nb {inst.b}\nclaim " + " ".join(map(str, inst.claimed)) + "\n"

    def loads(self, text: str) -> GcdInstance:
        rows = parse_fixture(text, self.kind)
        a, b = int(one(rows, "a")[0]), int(one(rows, "b")[0])
        if "claim" in rows:
            return GcdInstance(a, b, tuple(int(v) for v in rows["claim"][0]))
        return self.solve(GcdInstance(a, b, (1, 0, 0, 0, 0)))


def _all_vectors(p: int, k: int):
    if k == 0:
        yield []
        return
    for head in range(p):
        for tail in _all_vectors(p, k - 1):
            yield [head] + tail
