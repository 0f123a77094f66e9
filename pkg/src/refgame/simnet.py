"""Append-only public board with a round clock, plus seeded fixture generation."""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from typing import Optional

from .games import get_game
from .ledger import Ledger


class BoardError(ValueError):
    pass


class Oversize(BoardError):
    pass


@dataclass(frozen=True)
class Post:
    pid: int
    round: int
    party: str
    kind: str
    payload: bytes
    game: str
    chain: str


@dataclass
class Expectation:
    party: str
    kind: str
    deadline: int


@dataclass
class Board:
    posts: list[Post] = field(default_factory=list)
    round: int = 0
    pending: list[Expectation] = field(default_factory=list)
    expired: list[Expectation] = field(default_factory=list)

    GENESIS = "0" * 64

    @property
    def head(self) -> str:
        return self.posts[-1].chain if self.posts else self.GENESIS

    @staticmethod
    def _link(prev: str, rnd: int, party: str, kind: str, game: str, payload: bytes) -> str:
        h = hashlib.sha256(prev.encode())
        h.update(f"|{rnd}|{party}|{kind}|{game}|".encode())
        h.update(payload)
        return h.hexdigest()

    def post(self, party: str, kind: str, payload: bytes | str, limit: Optional[int] = None,
             game: str = "") -> int:
        data = payload.encode() if isinstance(payload, str) else bytes(payload)
        if limit is not None and len(data) > limit:
            raise Oversize(f"{kind} post of {len(data)} bytes exceeds {limit}")
        pid = len(self.posts)
        self.posts.append(Post(pid, self.round, party, kind, data, game,
                               self._link(self.head, self.round, party, kind, game, data)))
        self.pending = [e for e in self.pending if not (e.party == party and e.kind == kind)]
        return pid

    def expect(self, party: str, kind: str, within: int = 1) -> None:
        """Register that ``party`` owes a ``kind`` post within ``within`` rounds."""
        self.pending.append(Expectation(party, kind, self.round + within))

    def advance_round(self) -> int:
        self.round += 1
        due = [e for e in self.pending if e.deadline <= self.round]
        self.pending = [e for e in self.pending if e.deadline > self.round]
        for e in due:
            self.expired.append(e)
            self.post("board", "deadline", json.dumps({"party": e.party, "kind": e.kind}))
        return self.round

    def verify_chain(self) -> bool:
        prev = self.GENESIS
        for p in self.posts:
            if p.chain != self._link(prev, p.round, p.party, p.kind, p.game, p.payload):
                return False
            prev = p.chain
        return True

    def bytes_by_game(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for p in self.posts:
            if p.game:
                out[p.game] = out.get(p.game, 0) + len(p.payload)
        return out

    def attach(self, ledger: Ledger) -> None:
        """Mirror every ledger event onto the board."""
        ledger.listener = lambda kind, info: self.post("ledger", f"ledger:{kind}", json.dumps(info, sort_keys=True))

    def dump(self) -> str:
        lines = []
        for p in self.posts:
            lines.append(f"post|{p.round}|{p.party}|{p.kind}|{len(p.payload)}")
            if p.kind == "transcript":
                lines += p.payload.decode().splitlines()
        return "\n".join(lines) + "\n"


def reconstruct_ledger(board: Board) -> Ledger:
    """Replay the ledger events on the board into a fresh ledger."""
    led = Ledger()
    escrows = {}
    for p in board.posts:
        if not p.kind.startswith("ledger:"):
            continue
        op, info = p.kind[7:], json.loads(p.payload)
        if op == "fund":
            led.fund(info["party"], info["amount"])
        elif op == "transfer":
            led.transfer(info["src"], info["dst"], info["amount"])
        elif op == "open_escrow":
            escrows[info["escrow"]] = led.open_escrow(info["party"], info["purpose"], info["amount"])
        elif op == "top_up":
            led.top_up(escrows[info["escrow"]], info["amount"])
        elif op == "slash":
            led.slash_and_split(escrows[info["escrow"]], info["winner"], info["task_giver"])
        elif op == "forfeit":
            led.forfeit(escrows[info["escrow"]], info["beneficiary"])
        elif op == "refund":
            led.refund(escrows[info["escrow"]])
        elif op == "prize":
            led.pay_prize(escrows[info["escrow"]], info["winner"])
        else:
            raise BoardError(f"unknown ledger event {op!r}")
    return led


def gen_fixture(kind: str, size: int, seed: int, **options):
    """Deterministic instance carrying its oracle solution, and its fixture text."""
    game = get_game(kind)
    inst = game.generate(size, random.Random(f"fixture:{kind}:{size}:{seed}"), **options)
    return inst, game.dumps(inst)
