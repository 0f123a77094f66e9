"""Optimization tasks whose quality sits inside the claim.

Two validity kinds share the game:

classifier
    Samples ``(x_m, c_m)`` for m = 0..n-1, a model σ and counters
    ``k_0..k_n`` with ``k_0 = 0`` and ``k_{m+1} = k_m + [σ(x_m) = c_m]``;
    the quality is ``q = k_n``.  One round: the challenger names a bad
    update ``m`` or a quality mismatch, and the referee evaluates σ once.
factorization
    A target ``a`` and a claim ``(m; b_1..b_k)`` that must satisfy
    ``m = k``, ``2 <= b_1 <= ... <= b_k`` and ``a = b_1 ... b_k``; the
    quality is m.  A product complaint carries the challenger's ladder of
    partial products and the prover answers with a broken step.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, replace
from typing import Iterator, Optional, Union

from ..core import (CHALLENGER_WINS, CONTINUE, DEFENDED, GameSpec, INVALID_CHALLENGE,
                    InvalidSolution, PROCEED, PROVER_WINS, UPHELD, Transcript)
from ..encoding import MalformedPayload, PayloadView, _width, encode
from .base import Game, log_term, next_round, one, open_view, parse_fixture, peek

CHALLENGE, DEFENSE, CLAIM = 1, 2, 9
LAYOUTS = {CHALLENGE: 2, DEFENSE: 1}
BAD_UPDATE, BAD_QUALITY = 0, 1
COUNT, ORDER, PRODUCT = 0, 1, 2
HYPERPLANE, TREE = 0, 1


@dataclass(frozen=True)
class Hyperplane:
    bias: int
    weights: tuple[int, ...]

    def __call__(self, x) -> int:
        return int(self.bias + sum(w * v for w, v in zip(self.weights, x)) > 0)

    @property
    def cost(self) -> int:
        return 2 * len(self.weights) + 2

    def flat(self) -> list[int]:
        return [HYPERPLANE, self.bias, *self.weights]


@dataclass(frozen=True)
class DecisionTree:
    """Nodes ``(feature, threshold, left, right)``; feature -1 is a leaf labelled by threshold."""

    nodes: tuple[tuple[int, int, int, int], ...]

    def __post_init__(self) -> None:
        if not self.nodes:
            raise ValueError("empty tree")
        for k, (f, _, lft, rgt) in enumerate(self.nodes):
            if f >= 0 and not (k < lft < len(self.nodes) and k < rgt < len(self.nodes)):
                raise ValueError("tree children must point forward")

    def __call__(self, x) -> int:
        k = 0
        while self.nodes[k][0] >= 0:
            f, thr, lft, rgt = self.nodes[k]
            k = lft if x[f] <= thr else rgt
        return int(self.nodes[k][1] == 1)

    @property
    def depth(self) -> int:
        def d(k):
            f, _, lft, rgt = self.nodes[k]
            return 1 if f < 0 else 1 + max(d(lft), d(rgt))
        return d(0)

    @property
    def cost(self) -> int:
        return 3 * self.depth + 1

    def flat(self) -> list[int]:
        return [TREE] + [v for node in self.nodes for v in node]


Model = Union[Hyperplane, DecisionTree]


def model_from(flat: list[int]) -> Model:
    if not flat:
        raise ValueError("empty model")
    if flat[0] == HYPERPLANE and len(flat) >= 2:
        return Hyperplane(flat[1], tuple(flat[2:]))
    if flat[0] == TREE and (len(flat) - 1) % 4 == 0:
        body = flat[1:]
        return DecisionTree(tuple(tuple(body[k:k + 4]) for k in range(0, len(body), 4)))
    raise ValueError("unknown model encoding")


@dataclass(frozen=True)
class OptInstance:
    validity_kind: str
    samples: tuple[tuple[tuple[int, ...], int], ...] = ()
    model: Optional[Model] = None
    counters: tuple[int, ...] = ()
    quality_q: int = 0
    target: int = 0
    factors: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.validity_kind == "classifier":
            if self.model is None:
                raise ValueError("classifier claim needs a model")
            if len(self.counters) != len(self.samples) + 1:
                raise ValueError("counters must have length n+1")
            dims = {len(x) for x, _ in self.samples}
            if len(dims) > 1:
                raise ValueError("samples differ in dimension")
            if isinstance(self.model, Hyperplane) and dims and len(self.model.weights) != dims.pop():
                raise ValueError("hyperplane dimension differs from samples")
            if isinstance(self.model, DecisionTree) and dims:
                d = len(self.samples[0][0])
                if any(f >= d for f, *_ in self.model.nodes):
                    raise ValueError("tree splits on a missing feature")
        elif self.validity_kind == "factorization":
            if self.target < 1:
                raise ValueError("factorization target must be positive")
        else:
            raise ValueError(f"unknown validity kind {self.validity_kind!r}")

    @property
    def n(self) -> int:
        if self.validity_kind == "classifier":
            return len(self.samples)
        return max(1, self.target.bit_length())


def recount(samples, model) -> tuple[int, ...]:
    ks = [0]
    for x, c in samples:
        ks.append(ks[-1] + int(model(x) == c))
    return tuple(ks)


def prime_factors(a: int) -> tuple[int, ...]:
    out, p = [], 2
    while p * p <= a:
        while a % p == 0:
            out.append(p)
            a //= p
        p += 1
    if a > 1:
        out.append(a)
    return tuple(out)


def partial_products(factors) -> list[int]:
    ps = [1]
    for b in factors:
        ps.append(ps[-1] * b)
    return ps


class OptGame(Game):
    kind = "opt"
    error_models = ("inflate_quality", "flip_entry", "swap_adjacent")
    budget_constant = 6
    layouts = LAYOUTS

    def _eval_cost(self, inst: OptInstance) -> int:
        return inst.model.cost if inst.validity_kind == "classifier" else 2

    def _words(self, inst: OptInstance) -> int:
        return 1 + inst.target.bit_length() // 64

    def spec(self, inst: OptInstance) -> GameSpec:
        if inst.validity_kind == "classifier":
            return GameSpec(self.kind, inst.n, 1, 12 + 2 * _width([inst.n + 1]),
                            self.budget_constant * log_term(inst.n) + 2 * self._eval_cost(inst))
        k = len(inst.factors)
        w = _width([inst.target * max(inst.factors, default=1) + 1])
        return GameSpec(self.kind, inst.n, 2, 11 + 2 * w + (k + 1) * w,
                        self.budget_constant * log_term(inst.n) * self._words(inst))

    def quality(self, inst: OptInstance) -> int:
        return inst.quality_q

    # --- claims ---
    def claim_payload(self, inst: OptInstance) -> bytes:
        if inst.validity_kind == "classifier":
            return encode(CLAIM, inst.model.flat(), [inst.quality_q], inst.counters)
        return encode(CLAIM, [inst.quality_q], inst.factors)

    def decode_claim(self, task: OptInstance, payload: bytes) -> OptInstance:
        if task.validity_kind == "classifier":
            v = PayloadView(payload, 3)
            if v.tag != CLAIM or v.count(1) != 1:
                raise InvalidSolution("classifier claim is (model, q, counters)")
            vals = [[v.get(s, i) for i in range(v.count(s))] for s in range(3)]
            return replace(task, model=model_from(vals[0]), quality_q=vals[1][0],
                           counters=tuple(vals[2]))
        v = PayloadView(payload, 2)
        if v.tag != CLAIM or v.count(0) != 1:
            raise InvalidSolution("factorization claim is (m; b_1..b_k)")
        return replace(task, quality_q=v.get(0, 0), factors=tuple(v.get(1, i) for i in range(v.count(1))))

    # --- referee ---
    def check(self, inst: OptInstance, t: Transcript, rnd: int, meter) -> tuple[str, str]:
        ch = open_view(t, 1, LAYOUTS, meter)
        if ch.tag != CHALLENGE or ch.count(0) < 1:
            raise MalformedPayload("round 1 expects a challenge")
        kind = ch.get(0, 0)
        meter.tick(1)
        if inst.validity_kind == "classifier":
            return self._check_classifier(inst, ch, kind, meter)
        if rnd == 1:
            return self._check_factor_claim(inst, ch, kind, meter)
        df = open_view(t, 2, LAYOUTS, meter)
        if df.tag != DEFENSE or df.count(0) != 1:
            raise MalformedPayload("round 2 expects a step index")
        s = df.get(0, 0)
        meter.tick(2)
        if not 1 <= s <= len(inst.factors):
            return CHALLENGER_WINS, UPHELD
        cur, prev = ch.get(1, s), ch.get(1, s - 1)
        meter.tick(2 + self._words(inst))
        if cur != prev * inst.factors[s - 1]:
            return PROVER_WINS, DEFENDED
        return CHALLENGER_WINS, UPHELD

    def _check_classifier(self, inst: OptInstance, ch, kind: int, meter) -> tuple[str, str]:
        n, ks = inst.n, inst.counters
        meter.tick(2)
        if ks[0] != 0:
            return CHALLENGER_WINS, UPHELD
        if kind == BAD_UPDATE and ch.count(0) == 2:
            m = ch.get(0, 1)
            meter.tick(2)
            if not 0 <= m < n:
                return PROVER_WINS, INVALID_CHALLENGE
            x, c = inst.samples[m]
            meter.tick(inst.model.cost + 4)
            if ks[m + 1] != ks[m] + int(inst.model(x) == c):
                return CHALLENGER_WINS, UPHELD
            return PROVER_WINS, INVALID_CHALLENGE
        if kind == BAD_QUALITY and ch.count(0) == 1:
            meter.tick(2)
            return (CHALLENGER_WINS, UPHELD) if inst.quality_q != ks[n] else (PROVER_WINS, INVALID_CHALLENGE)
        raise MalformedPayload("unknown classifier challenge")

    def _check_factor_claim(self, inst: OptInstance, ch, kind: int, meter) -> tuple[str, str]:
        bs, k = inst.factors, len(inst.factors)
        if kind == COUNT and ch.count(0) == 1:
            meter.tick(2)
            return (CHALLENGER_WINS, UPHELD) if inst.quality_q != k else (PROVER_WINS, INVALID_CHALLENGE)
        if kind == ORDER and ch.count(0) == 2:
            pos = ch.get(0, 1)
            meter.tick(2)
            if pos == 0 and k >= 1:
                meter.tick(2)
                bad = bs[0] < 2
            elif 1 <= pos < k:
                meter.tick(3)
                bad = bs[pos - 1] > bs[pos]
            else:
                return PROVER_WINS, INVALID_CHALLENGE
            return (CHALLENGER_WINS, UPHELD) if bad else (PROVER_WINS, INVALID_CHALLENGE)
        if kind == PRODUCT and ch.count(0) == 1:
            meter.tick(2)
            if ch.count(1) != k + 1:
                return PROVER_WINS, INVALID_CHALLENGE
            first, last = ch.get(1, 0), ch.get(1, k)
            meter.tick(2 + self._words(inst))
            if first != 1 or last == inst.target:
                return PROVER_WINS, INVALID_CHALLENGE
            return CONTINUE, PROCEED
        raise MalformedPayload("unknown factorization challenge")

    # --- oracles ---
    def solve(self, task: OptInstance) -> OptInstance:
        if task.validity_kind == "classifier":
            ks = recount(task.samples, task.model)
            return replace(task, counters=ks, quality_q=ks[-1])
        fs = prime_factors(task.target)
        return replace(task, factors=fs, quality_q=len(fs))

    def is_correct(self, inst: OptInstance) -> bool:
        if inst.validity_kind == "classifier":
            ks = recount(inst.samples, inst.model)
            return inst.counters == ks and inst.quality_q == ks[-1]
        bs = inst.factors
        prod = 1
        for b in bs:
            prod *= b
        ordered = all(bs[i] <= bs[i + 1] for i in range(len(bs) - 1)) and (not bs or bs[0] >= 2)
        return inst.quality_q == len(bs) and ordered and prod == inst.target

    # --- strategies ---
    def honest_move(self, inst: OptInstance, t: Transcript) -> Optional[bytes]:
        rnd = next_round(t)
        if inst.validity_kind == "classifier":
            if rnd != 1:
                return None
            ks = inst.counters
            if ks[0] != 0:
                return encode(CHALLENGE, [BAD_UPDATE, 0], [])
            for m, (x, c) in enumerate(inst.samples):
                if ks[m + 1] != ks[m] + int(inst.model(x) == c):
                    return encode(CHALLENGE, [BAD_UPDATE, m], [])
            if inst.quality_q != ks[-1]:
                return encode(CHALLENGE, [BAD_QUALITY], [])
            return None
        bs = inst.factors
        if rnd == 1:
            if inst.quality_q != len(bs):
                return encode(CHALLENGE, [COUNT], [])
            if bs and bs[0] < 2:
                return encode(CHALLENGE, [ORDER, 0], [])
            for pos in range(1, len(bs)):
                if bs[pos - 1] > bs[pos]:
                    return encode(CHALLENGE, [ORDER, pos], [])
            ps = partial_products(bs)
            if ps[-1] != inst.target:
                return encode(CHALLENGE, [PRODUCT], ps)
            return None
        if rnd == 2:
            try:
                _, (_, ps) = peek(t, 1, LAYOUTS)
            except MalformedPayload:
                return None
            for s in range(1, min(len(bs), len(ps) - 1) + 1):
                if ps[s] != ps[s - 1] * bs[s - 1]:
                    return encode(DEFENSE, [s])
        return None

    def prover_candidates(self, inst: OptInstance, t: Transcript) -> Iterator[bytes]:
        for s in range(1, len(inst.factors) + 1):
            yield encode(DEFENSE, [s])

    def challenger_moves(self, inst: OptInstance, t: Transcript) -> Iterator[bytes]:
        if next_round(t) != 1:
            return
        if inst.validity_kind == "classifier":
            for m in range(-1, inst.n + 1):
                yield encode(CHALLENGE, [BAD_UPDATE, m], [])
            yield encode(CHALLENGE, [BAD_QUALITY], [])
            return
        k = len(inst.factors)
        yield encode(CHALLENGE, [COUNT], [])
        for pos in range(-1, k + 2):
            yield encode(CHALLENGE, [ORDER, pos], [])
        values = range(0, inst.target + 2)
        for ladder in itertools.product(values, repeat=k + 1):
            yield encode(CHALLENGE, [PRODUCT], ladder)
        for length in (k, k + 2):
            yield encode(CHALLENGE, [PRODUCT], [1] * length)

    def fabricate(self, inst: OptInstance, rng: random.Random) -> bytes:
        if inst.validity_kind == "classifier":
            if rng.random() < 0.2:
                return encode(CHALLENGE, [BAD_QUALITY], [])
            return encode(CHALLENGE, [BAD_UPDATE, rng.randrange(max(1, inst.n))], [])
        k = len(inst.factors)
        roll = rng.random()
        if roll < 0.3:
            return encode(CHALLENGE, [COUNT], [])
        if roll < 0.6:
            return encode(CHALLENGE, [ORDER, rng.randrange(max(1, k))], [])
        ps = partial_products(inst.factors)
        ps[-1] += rng.randint(1, 3)
        return encode(CHALLENGE, [PRODUCT], ps)

    def sample_challenge(self, inst: OptInstance, rng: random.Random, samples: int) -> Optional[bytes]:
        """Recount a few random updates (classifier) or adjacent pairs (factorization)."""
        if inst.validity_kind == "classifier":
            ks = inst.counters
            if ks[0] != 0:
                return encode(CHALLENGE, [BAD_UPDATE, 0], [])
            for _ in range(samples):
                if not inst.n:
                    break
                m = rng.randrange(inst.n)
                x, c = inst.samples[m]
                if ks[m + 1] != ks[m] + int(inst.model(x) == c):
                    return encode(CHALLENGE, [BAD_UPDATE, m], [])
            if inst.quality_q != ks[-1]:
                return encode(CHALLENGE, [BAD_QUALITY], [])
            return None
        bs = inst.factors
        if inst.quality_q != len(bs):
            return encode(CHALLENGE, [COUNT], [])
        for _ in range(samples):
            if len(bs) < 2:
                break
            pos = rng.randrange(1, len(bs))
            if bs[pos - 1] > bs[pos]:
                return encode(CHALLENGE, [ORDER, pos], [])
        return None

    def corrupt(self, inst: OptInstance, model: str, rng: random.Random) -> OptInstance:
        self.require_model(model)
        if inst.validity_kind == "classifier":
            ks = list(inst.counters)
            if model == "inflate_quality":
                if rng.random() < 0.5 or inst.n == 0:
                    return replace(inst, quality_q=inst.quality_q + 1)
                m = rng.randrange(inst.n)
                ks[m + 1:] = [k + 1 for k in ks[m + 1:]]
                return replace(inst, counters=tuple(ks), quality_q=ks[-1])
            j = rng.randrange(len(ks))
            ks[j] += rng.choice([-1, 1])
            return replace(inst, counters=tuple(ks))
        bs = list(inst.factors)
        if model == "inflate_quality":
            return replace(inst, quality_q=inst.quality_q + 1)
        pairs = [i for i in range(len(bs) - 1) if bs[i] != bs[i + 1]]
        if model == "swap_adjacent" and pairs:
            i = rng.choice(pairs)
            bs[i], bs[i + 1] = bs[i + 1], bs[i]
        elif bs:
            i = rng.randrange(len(bs))
            bs[i] += 1
        else:
            bs = [inst.target + 1]
            return replace(inst, factors=tuple(bs), quality_q=1)
        return replace(inst, factors=tuple(bs))

    # --- fixtures ---
    def generate(self, size: int, rng: random.Random, validity_kind: str = "classifier",
                 dim: int = 2) -> OptInstance:
        if validity_kind == "factorization":
            primes = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31]
            a = 1
            for _ in range(max(1, size)):
                a *= rng.choice(primes)
            return self.solve(OptInstance("factorization", target=a))
        hidden = Hyperplane(rng.randint(-3, 3), tuple(rng.randint(-4, 4) for _ in range(dim)))
        samples = []
        for _ in range(size):
            x = tuple(rng.randint(-8, 8) for _ in range(dim))
            c = hidden(x) if rng.random() < 0.85 else 1 - hidden(x)
            samples.append((x, c))
        guess = Hyperplane(hidden.bias + rng.randint(-1, 1),
                           tuple(w + rng.randint(-1, 1) for w in hidden.weights))
        task = OptInstance("classifier", tuple(samples), guess, (0,) * (size + 1))
        return self.solve(task)

    def dumps(self, inst: OptInstance) -> str:
        lines = ["game opt", f"validity {inst.validity_kind}"]
        if inst.validity_kind == "classifier":
            if isinstance(inst.model, Hyperplane):
                lines.append("hyperplane " + " ".join(map(str, (inst.model.bias, *inst.model.weights))))
            else:
                lines += ["node " + " ".join(map(str, node)) for node in inst.model.nodes]
            lines += [f"sample {c} " + " ".join(map(str, x)) for x, c in inst.samples]
            lines += ["counters " + " ".join(map(str, inst.counters)), f"quality {inst.quality_q}"]
        else:
            lines += [f"target {inst.target}", "claim " + " ".join(map(str, (inst.quality_q, *inst.factors)))]
        return "\n".join(lines) + "\n"

    def loads(self, text: str) -> OptInstance:
        rows = parse_fixture(text, self.kind)
        vk = one(rows, "validity")[0]
        if vk == "factorization":
            task = OptInstance(vk, target=int(one(rows, "target")[0]))
            if "claim" not in rows:
                return self.solve(task)
            m, *bs = (int(v) for v in rows["claim"][0])
            return replace(task, quality_q=m, factors=tuple(bs))
        if "hyperplane" in rows:
            b, *w = (int(v) for v in one(rows, "hyperplane"))
            model: Model = Hyperplane(b, tuple(w))
        else:
            model = DecisionTree(tuple(tuple(int(v) for v in r) for r in rows.get("node", [])))
        samples = tuple((tuple(int(v) for v in r[1:]), int(r[0])) for r in rows.get("sample", []))
        task = OptInstance(vk, samples, model, (0,) * (len(samples) + 1))
        if "counters" not in rows:
            return self.solve(task)
        ks = tuple(int(v) for v in rows["counters"][0])
        q = int(one(rows, "quality")[0]) if "quality" in rows else ks[-1]
        return replace(task, counters=ks, quality_q=q)
