"""Set intersection over arrays: two rounds.

Round 1 (challenger): case (i) indices ``(i_a, i_b)`` with equal elements
missing from C, or case (ii) an index ``j_c`` whose element is not in A∩B.
Round 2 (prover): ``i_c`` for case (i), ``(j_a, j_b)`` for case (ii).
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, replace
from typing import Iterator, Optional

from ..core import (CHALLENGER_WINS, CONTINUE, DEFENDED, GameSpec, INVALID_CHALLENGE,
                    InvalidSolution, PROCEED, PROVER_WINS, UPHELD, Transcript)
from ..encoding import MalformedPayload, PayloadView, _width, encode
from .base import Game, log_term, next_round, one, open_view, parse_fixture, peek

CASE_I, CASE_II, DEF_I, DEF_II, CLAIM = 1, 2, 3, 4, 9
LAYOUTS = {CASE_I: 1, CASE_II: 1, DEF_I: 1, DEF_II: 1}


@dataclass(frozen=True)
class IntersectInstance:
    r: int
    A: tuple[int, ...]
    B: tuple[int, ...]
    claimed_C: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.r < 1:
            raise ValueError("element width r must be positive")
        top = 1 << self.r
        for name in ("A", "B", "claimed_C"):
            if any(not 0 <= v < top for v in getattr(self, name)):
                raise ValueError(f"{name} has elements wider than {self.r} bits")

    @property
    def n(self) -> int:
        return max(len(self.A), len(self.B), len(self.claimed_C))


def true_intersection(inst: IntersectInstance) -> tuple[int, ...]:
    return tuple(sorted(set(inst.A) & set(inst.B)))


class IntersectGame(Game):
    kind = "intersect"
    error_models = ("drop_element", "flip_entry")
    budget_constant = 3
    layouts = LAYOUTS

    def _cmp_cost(self, inst) -> int:
        return math.ceil(inst.r / 32)

    def spec(self, inst: IntersectInstance) -> GameSpec:
        w = _width([inst.n + 1])
        return GameSpec(self.kind, inst.n, 2, 6 + 2 * w,
                        self.budget_constant * log_term(inst.n) * (4 + 2 * self._cmp_cost(inst)))

    def claim_payload(self, inst: IntersectInstance) -> bytes:
        return encode(CLAIM, inst.claimed_C)

    def decode_claim(self, task: IntersectInstance, payload: bytes) -> IntersectInstance:
        v = PayloadView(payload, 1)
        if v.tag != CLAIM:
            raise InvalidSolution("not an intersection claim")
        return replace(task, claimed_C=tuple(v.get(0, k) for k in range(v.count(0))))

    def check(self, inst: IntersectInstance, t: Transcript, rnd: int, meter) -> tuple[str, str]:
        na, nb, nc = len(inst.A), len(inst.B), len(inst.claimed_C)
        cmp = self._cmp_cost(inst)
        ch = open_view(t, 1, LAYOUTS, meter)
        if rnd == 1:
            if ch.tag == CASE_I and ch.count(0) == 2:
                ia, ib = ch.get(0, 0), ch.get(0, 1)
                meter.tick(4)
                if not (1 <= ia <= na and 1 <= ib <= nb):
                    return PROVER_WINS, INVALID_CHALLENGE
                meter.tick(2 + cmp)
                if inst.A[ia - 1] != inst.B[ib - 1]:
                    return PROVER_WINS, INVALID_CHALLENGE
                return CONTINUE, PROCEED
            if ch.tag == CASE_II and ch.count(0) == 1:
                jc = ch.get(0, 0)
                meter.tick(2)
                if not 1 <= jc <= nc:
                    return PROVER_WINS, INVALID_CHALLENGE
                return CONTINUE, PROCEED
            raise MalformedPayload("round 1 expects case (i) or case (ii)")
        df = open_view(t, 2, LAYOUTS, meter)
        if ch.tag == CASE_I:
            if df.tag != DEF_I or df.count(0) != 1:
                raise MalformedPayload("case (i) needs one index")
            ic = df.get(0, 0)
            meter.tick(2)
            if not 1 <= ic <= nc:
                return CHALLENGER_WINS, UPHELD
            ia = ch.get(0, 0)
            meter.tick(2 + cmp)
            ok = inst.A[ia - 1] == inst.claimed_C[ic - 1]
        else:
            if df.tag != DEF_II or df.count(0) != 2:
                raise MalformedPayload("case (ii) needs two indices")
            ja, jb = df.get(0, 0), df.get(0, 1)
            meter.tick(4)
            if not (1 <= ja <= na and 1 <= jb <= nb):
                return CHALLENGER_WINS, UPHELD
            jc = ch.get(0, 0)
            meter.tick(3 + 2 * cmp)
            x = inst.claimed_C[jc - 1]
            ok = inst.A[ja - 1] == x and inst.B[jb - 1] == x
        return (PROVER_WINS, DEFENDED) if ok else (CHALLENGER_WINS, UPHELD)

    def solve(self, task: IntersectInstance) -> IntersectInstance:
        return replace(task, claimed_C=true_intersection(task))

    def is_correct(self, inst: IntersectInstance) -> bool:
        return set(inst.claimed_C) == set(true_intersection(inst))

    def honest_move(self, inst: IntersectInstance, t: Transcript) -> Optional[bytes]:
        rnd = next_round(t)
        cset = set(inst.claimed_C)
        both = set(inst.A) & set(inst.B)
        if rnd == 1:
            for ia, x in enumerate(inst.A, 1):
                if x in cset:
                    continue
                for ib, y in enumerate(inst.B, 1):
                    if x == y:
                        return encode(CASE_I, [ia, ib])
            for jc, x in enumerate(inst.claimed_C, 1):
                if x not in both:
                    return encode(CASE_II, [jc])
            return None
        if rnd == 2:
            try:
                tag, (vals,) = peek(t, 1, LAYOUTS)
            except MalformedPayload:
                return None
            if tag == CASE_I:
                x = inst.A[vals[0] - 1]
                for ic, y in enumerate(inst.claimed_C, 1):
                    if y == x:
                        return encode(DEF_I, [ic])
            elif tag == CASE_II:
                x = inst.claimed_C[vals[0] - 1]
                if x in both:
                    return encode(DEF_II, [inst.A.index(x) + 1, inst.B.index(x) + 1])
        return None

    def prover_candidates(self, inst, t) -> Iterator[bytes]:
        nc = len(inst.claimed_C)
        for ic in range(1, nc + 1):
            yield encode(DEF_I, [ic])
        for ja in range(1, len(inst.A) + 1):
            for jb in range(1, len(inst.B) + 1):
                yield encode(DEF_II, [ja, jb])

    def challenger_moves(self, inst: IntersectInstance, t: Transcript) -> Iterator[bytes]:
        if next_round(t) != 1:
            return
        na, nb, nc = len(inst.A), len(inst.B), len(inst.claimed_C)
        for ia, ib in itertools.product(range(na + 2), range(nb + 2)):
            yield encode(CASE_I, [ia, ib])
        for jc in range(nc + 2):
            yield encode(CASE_II, [jc])

    def fabricate(self, inst: IntersectInstance, rng: random.Random) -> bytes:
        if inst.claimed_C and rng.random() < 0.5:
            return encode(CASE_II, [rng.randint(1, len(inst.claimed_C))])
        return encode(CASE_I, [rng.randint(1, max(1, len(inst.A))), rng.randint(1, max(1, len(inst.B)))])

    def sample_challenge(self, inst: IntersectInstance, rng: random.Random, samples: int) -> Optional[bytes]:
        """Spot-check random entries of C and random elements of A."""
        both = set(inst.A) & set(inst.B)
        cset = set(inst.claimed_C)
        for _ in range(samples):
            if inst.claimed_C:
                jc = rng.randint(1, len(inst.claimed_C))
                if inst.claimed_C[jc - 1] not in both:
                    return encode(CASE_II, [jc])
            if inst.A:
                ia = rng.randint(1, len(inst.A))
                x = inst.A[ia - 1]
                if x in both and x not in cset:
                    return encode(CASE_I, [ia, inst.B.index(x) + 1])
        return None

    def corrupt(self, inst: IntersectInstance, model: str, rng: random.Random) -> IntersectInstance:
        self.require_model(model)
        c = list(inst.claimed_C)
        both = set(true_intersection(inst))
        aliens = [v for v in range(1 << inst.r) if v not in both]
        if model == "drop_element" and c:
            x = rng.choice(sorted(set(c)))
            c = [v for v in c if v != x]
        elif c and model == "flip_entry" and aliens:
            c[rng.randrange(len(c))] = rng.choice(aliens)
            if set(c) == both:
                c.append(rng.choice(aliens))
        elif aliens:
            c.insert(rng.randint(0, len(c)), rng.choice(aliens))
        else:
            raise ValueError("cannot corrupt: intersection fills the universe and is empty")
        return replace(inst, claimed_C=tuple(c))

    def generate(self, size: int, rng: random.Random, r: int = 8) -> IntersectInstance:
        top = 1 << r
        a = tuple(rng.sample(range(top), min(size, top)))
        shared = [x for x in a if rng.random() < 0.5]
        rest = [x for x in range(top) if x not in a]
        b = shared + rng.sample(rest, min(len(rest), max(0, size - len(shared))))
        rng.shuffle(b)
        return self.solve(IntersectInstance(r, a, tuple(b), ()))

    def dumps(self, inst: IntersectInstance) -> str:
        return "\n".join([
            "game intersect", f"r {inst.r}",
            "A " + " ".join(map(str, inst.A)),
            "B " + " ".join(map(str, inst.B)),
            "C " + " ".join(map(str, inst.claimed_C)),
        ]) + "\n"

    def loads(self, text: str) -> IntersectInstance:
        rows = parse_fixture(text, self.kind)
        get = lambda k: tuple(int(v) for v in rows[k][0]) if k in rows else ()
        task = IntersectInstance(int(one(rows, "r")[0]), get("A"), get("B"), get("C"))
        return task if "C" in rows else self.solve(task)
