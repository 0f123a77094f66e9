"""Common machinery for concrete verification games."""

from __future__ import annotations

import math
import random
from typing import Iterator, Optional

from ..core import (CHALLENGER, CONTINUE, GameSpec, InvalidSolution, Transcript,
                    role_for_round)
from ..encoding import MalformedPayload, PayloadView, decode_all


class GameConfigError(ValueError):
    """A strategy or error model does not apply to this game kind."""


def log_term(n: int) -> int:
    return 1 + math.ceil(math.log2(n + 1))


def open_view(t: Transcript, rnd: int, layouts: dict[int, int], meter) -> PayloadView:
    data = t.payload(rnd)
    if not data:
        raise MalformedPayload("empty payload")
    nsec = layouts.get(data[0])
    if nsec is None:
        raise MalformedPayload(f"unknown move tag {data[0]}")
    return PayloadView(data, nsec, meter, source=rnd)


def peek(t: Transcript, rnd: int, layouts: dict[int, int]) -> tuple[int, list[list[int]]]:
    """Unmetered full decode for strategies."""
    data = t.payload(rnd)
    if not data or data[0] not in layouts:
        raise MalformedPayload("unknown move tag")
    return decode_all(data, layouts[data[0]])


def next_round(t: Transcript) -> int:
    return len(t.moves) + 1


class Game:
    """Rule-set for one game kind.

    Subclasses implement the referee's per-round check plus the honest
    strategies and fixture handling the rest of the package relies on.
    """

    kind: str = ""
    error_models: tuple[str, ...] = ()
    budget_constant: int = 1
    layouts: dict[int, int] = {}

    # --- contract used by the referee and the game loop ---
    def spec(self, inst) -> GameSpec:
        raise NotImplementedError

    def check(self, inst, t: Transcript, rnd: int, meter) -> tuple[str, str]:
        raise NotImplementedError

    def claim_payload(self, inst) -> bytes:
        raise NotImplementedError

    def decode_claim(self, task, payload: bytes):
        raise NotImplementedError

    def bind(self, task, payload: bytes):
        try:
            return self.decode_claim(task, payload)
        except InvalidSolution:
            raise
        except (MalformedPayload, ValueError, IndexError) as exc:
            raise InvalidSolution(f"{self.kind}: {exc}") from exc

    def quality(self, inst) -> Optional[int]:
        return None

    # --- oracles ---
    def solve(self, task):
        """Instance carrying the brute-force correct claim."""
        raise NotImplementedError

    def is_correct(self, inst) -> bool:
        raise NotImplementedError

    # --- strategies ---
    def honest_move(self, inst, t: Transcript) -> Optional[bytes]:
        raise NotImplementedError

    def prover_candidates(self, inst, t: Transcript) -> Iterator[bytes]:
        return iter(())

    def challenger_moves(self, inst, t: Transcript) -> Iterator[bytes]:
        raise NotImplementedError

    def explore_key(self, inst, t: Transcript):
        """Hashable summary of everything the rest of a game can depend on."""
        return tuple(m.payload for m in t.moves)

    def fabricate(self, inst, rng: random.Random) -> bytes:
        raise NotImplementedError

    def sample_challenge(self, inst, rng: random.Random, samples: int) -> Optional[bytes]:
        raise GameConfigError(f"no sampling rule for {self.kind}")

    def corrupt(self, inst, model: str, rng: random.Random):
        raise NotImplementedError

    # --- fixtures ---
    def generate(self, size: int, rng: random.Random):
        raise NotImplementedError

    def dumps(self, inst) -> str:
        raise NotImplementedError

    def loads(self, text: str):
        raise NotImplementedError

    # helpers
    def require_model(self, model: str) -> None:
        if model not in self.error_models:
            raise GameConfigError(f"error model {model!r} does not apply to {self.kind}")

    @staticmethod
    def is_challenger_turn(t: Transcript) -> bool:
        return role_for_round(next_round(t)) == CHALLENGER


def parse_fixture(text: str, kind: str) -> dict[str, list[list[str]]]:
    rows: dict[str, list[list[str]]] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *vals = line.split()
        rows.setdefault(key, []).append(vals)
    got = rows.get("game", [[None]])[0][0] if rows.get("game") and rows["game"][0] else None
    if got != kind:
        raise ValueError(f"fixture is for game {got!r}, expected {kind!r}")
    return rows


def one(rows, key: str) -> list[str]:
    if key not in rows:
        raise ValueError(f"fixture missing {key!r}")
    return rows[key][0]


def ints(vals) -> tuple[int, ...]:
    return tuple(int(v) for v in vals)


__all__ = ["Game", "GameConfigError", "CONTINUE", "log_term", "open_view", "peek",
           "next_round", "parse_fixture", "one", "ints"]
