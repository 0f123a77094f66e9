"""Matrix product over a prime field: two rounds.

Round 1 (challenger): coordinates ``(i, j)`` and the partial sums
``d_0..d_n`` of row i times column j.  Round 2 (prover): an index ``k`` at
which the partial-sum sequence breaks.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Iterator, Optional

import numpy as np

from .. import kernels
from ..core import (CHALLENGER_WINS, CONTINUE, DEFENDED, GameSpec, INVALID_CHALLENGE,
                    InvalidSolution, MALFORMED, PROCEED, PROVER_WINS, UPHELD, Transcript)
from ..encoding import MalformedPayload, PayloadView, _width, encode
from .base import Game, log_term, next_round, one, open_view, parse_fixture, peek

Matrix = tuple[tuple[int, ...], ...]

CHALLENGE, DEFENSE, CLAIM = 1, 2, 9
LAYOUTS = {CHALLENGE: 2, DEFENSE: 1}


@dataclass(frozen=True)
class MatmulInstance:
    field_modulus: int
    n: int
    A: Matrix
    B: Matrix
    claimed_C: Matrix

    def __post_init__(self) -> None:
        p, n = self.field_modulus, self.n
        for name in ("A", "B", "claimed_C"):
            m = getattr(self, name)
            if len(m) != n or any(len(row) != n for row in m):
                raise ValueError(f"{name} must be {n}x{n}")
            if any(not 0 <= v < p for row in m for v in row):
                raise ValueError(f"{name} has entries outside GF({p})")


def _mat(rows) -> Matrix:
    return tuple(tuple(int(v) for v in r) for r in rows)


@lru_cache(maxsize=4096)
def product(inst_key: tuple) -> Matrix:
    p, a, b = inst_key
    return _mat(kernels.matmul_mod(np.array(a), np.array(b), p).tolist())


def true_product(inst: MatmulInstance) -> Matrix:
    if inst.n == 0:
        return ()
    return product((inst.field_modulus, inst.A, inst.B))


def partial_sums(inst: MatmulInstance, i: int, j: int) -> list[int]:
    p, d = inst.field_modulus, [0]
    for k in range(inst.n):
        d.append((d[-1] + inst.A[i - 1][k] * inst.B[k][j - 1]) % p)
    return d


class MatmulGame(Game):
    kind = "matmul"
    error_models = ("flip_entry",)
    budget_constant = 9
    layouts = LAYOUTS

    def spec(self, inst: MatmulInstance) -> GameSpec:
        w = _width([inst.field_modulus - 1, inst.n + 1])
        return GameSpec(self.kind, inst.n, 2, 11 + (inst.n + 3) * w,
                        self.budget_constant * log_term(inst.n))

    # --- claims ---
    def claim_payload(self, inst: MatmulInstance) -> bytes:
        return encode(CLAIM, [v for row in inst.claimed_C for v in row])

    def decode_claim(self, task: MatmulInstance, payload: bytes) -> MatmulInstance:
        v = PayloadView(payload, 1)
        if v.tag != CLAIM or v.count(0) != task.n * task.n:
            raise InvalidSolution("matmul claim must hold n*n entries")
        flat = [v.get(0, k) for k in range(task.n * task.n)]
        rows = tuple(tuple(flat[r * task.n:(r + 1) * task.n]) for r in range(task.n))
        return replace(task, claimed_C=rows)

    # --- referee ---
    def check(self, inst: MatmulInstance, t: Transcript, rnd: int, meter) -> tuple[str, str]:
        n, p = inst.n, inst.field_modulus
        ch = open_view(t, 1, LAYOUTS, meter)
        if rnd == 1:
            if ch.tag != CHALLENGE or ch.count(0) != 2:
                raise MalformedPayload("round 1 expects a challenge")
            i, j = ch.get(0, 0), ch.get(0, 1)
            meter.tick(4)
            if not (1 <= i <= n and 1 <= j <= n):
                return PROVER_WINS, INVALID_CHALLENGE
            meter.tick(1)
            if ch.count(1) != n + 1:
                return PROVER_WINS, MALFORMED
            d0, dn = ch.get(1, 0), ch.get(1, n)
            meter.tick(4)  # read c_ij, three comparisons
            if d0 != 0 or not 0 <= dn < p or dn == inst.claimed_C[i - 1][j - 1]:
                return PROVER_WINS, INVALID_CHALLENGE
            return CONTINUE, PROCEED
        df = open_view(t, 2, LAYOUTS, meter)
        if df.tag != DEFENSE or df.count(0) != 1:
            raise MalformedPayload("round 2 expects a defense index")
        k = df.get(0, 0)
        meter.tick(2)
        if not 1 <= k <= n:
            return CHALLENGER_WINS, UPHELD
        i, j = ch.get(0, 0), ch.get(0, 1)
        dk, dk1 = ch.get(1, k), ch.get(1, k - 1)
        a, b = inst.A[i - 1][k - 1], inst.B[k - 1][j - 1]
        meter.tick(6)  # two matrix reads, multiply, add, reduce, compare
        if not 0 <= dk < p or dk != (dk1 + a * b) % p:
            return PROVER_WINS, DEFENDED
        return CHALLENGER_WINS, UPHELD

    # --- oracles ---
    def solve(self, task: MatmulInstance) -> MatmulInstance:
        return replace(task, claimed_C=true_product(task))

    def is_correct(self, inst: MatmulInstance) -> bool:
        return inst.claimed_C == true_product(inst)

    # --- strategies ---
    def challenge_at(self, inst: MatmulInstance, i: int, j: int) -> bytes:
        return encode(CHALLENGE, [i, j], partial_sums(inst, i, j))

    def honest_move(self, inst: MatmulInstance, t: Transcript) -> Optional[bytes]:
        rnd = next_round(t)
        if rnd == 1:
            truth = true_product(inst)
            for i in range(inst.n):
                for j in range(inst.n):
                    if inst.claimed_C[i][j] != truth[i][j]:
                        return self.challenge_at(inst, i + 1, j + 1)
            return None
        if rnd == 2:
            k = self._broken_index(inst, t)
            return None if k is None else encode(DEFENSE, [k])
        return None

    def _broken_index(self, inst: MatmulInstance, t: Transcript) -> Optional[int]:
        try:
            _, (ij, d) = peek(t, 1, LAYOUTS)
        except MalformedPayload:
            return None
        i, j = ij
        p = inst.field_modulus
        for k in range(1, min(inst.n, len(d) - 1) + 1):
            if not 0 <= d[k] < p or d[k] != (d[k - 1] + inst.A[i - 1][k - 1] * inst.B[k - 1][j - 1]) % p:
                return k
        return None

    def prover_candidates(self, inst, t) -> Iterator[bytes]:
        for k in range(1, inst.n + 1):
            yield encode(DEFENSE, [k])

    def challenger_moves(self, inst: MatmulInstance, t: Transcript) -> Iterator[bytes]:
        if next_round(t) != 1:
            return
        n, p = inst.n, inst.field_modulus
        for i in range(0, n + 2):
            for j in range(0, n + 2):
                for d in itertools.product(range(p), repeat=n + 1):
                    yield encode(CHALLENGE, [i, j], d)
                yield encode(CHALLENGE, [i, j], [0] * n)

    def fabricate(self, inst: MatmulInstance, rng: random.Random) -> bytes:
        n, p = inst.n, inst.field_modulus
        i, j = rng.randint(1, n), rng.randint(1, n)
        d = [0] + [rng.randrange(p) for _ in range(n)]
        if d[n] == inst.claimed_C[i - 1][j - 1]:
            d[n] = (d[n] + 1) % p
        return encode(CHALLENGE, [i, j], d)

    def sample_challenge(self, inst: MatmulInstance, rng: random.Random, samples: int) -> Optional[bytes]:
        """Freivalds probing with ``samples`` random 0/1 vectors."""
        n, p = inst.n, inst.field_modulus
        a, b, c = (np.array(m, dtype=np.int64) for m in (inst.A, inst.B, inst.claimed_C))
        for _ in range(samples):
            r = np.array([rng.randrange(2) for _ in range(n)], dtype=np.int64)
            row = kernels.freivalds_row(a, b, c, r, p)
            if row < 0:
                continue
            true_row = kernels.matmul_mod(a[row:row + 1], b, p)[0]
            for j in range(n):
                if true_row[j] != inst.claimed_C[row][j]:
                    return self.challenge_at(inst, row + 1, j + 1)
        return None

    def corrupt(self, inst: MatmulInstance, model: str, rng: random.Random) -> MatmulInstance:
        self.require_model(model)
        n, p = inst.n, inst.field_modulus
        i, j = rng.randrange(n), rng.randrange(n)
        rows = [list(r) for r in inst.claimed_C]
        rows[i][j] = (rows[i][j] + rng.randint(1, p - 1)) % p
        return replace(inst, claimed_C=_mat(rows))

    # --- fixtures ---
    def generate(self, size: int, rng: random.Random, modulus: int = 97) -> MatmulInstance:
        n, p = size, modulus
        a = _mat([[rng.randrange(p) for _ in range(n)] for _ in range(n)])
        b = _mat([[rng.randrange(p) for _ in range(n)] for _ in range(n)])
        task = MatmulInstance(p, n, a, b, tuple(tuple(0 for _ in range(n)) for _ in range(n)))
        return self.solve(task)

    def dumps(self, inst: MatmulInstance) -> str:
        lines = ["game matmul", f"modulus {inst.field_modulus}", f"n {inst.n}"]
        for name, m in (("A", inst.A), ("B", inst.B), ("C", inst.claimed_C)):
            lines += [f"{name} " + " ".join(map(str, row)) for row in m]
        return "\n".join(lines) + "\n"

    def loads(self, text: str) -> MatmulInstance:
        rows = parse_fixture(text, self.kind)
        n = int(one(rows, "n")[0])
        p = int(one(rows, "modulus")[0])
        mats = {k: _mat(rows.get(k, [])) for k in ("A", "B")}
        c = _mat(rows["C"]) if "C" in rows else None
        task = MatmulInstance(p, n, mats["A"], mats["B"], c if c is not None else
                              tuple(tuple(0 for _ in range(n)) for _ in range(n)))
        return task if c is not None else self.solve(task)
