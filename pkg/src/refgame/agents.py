"""Prover and challenger policies, error injection and payoff bookkeeping."""

from __future__ import annotations

import hashlib
import random
import statistics
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

from .core import (CHALLENGER, CONTINUE, PROVER, PROVER_WINS, Move, Transcript, transcript_append)
from .games import Game, GameConfigError, get_game
from .games.base import next_round
from .ledger import FEE_SINK
from .referee import verify_step

PROVER_POLICIES = ("honest", "corrupt")
CHALLENGER_POLICIES = ("honest", "lazy", "false_alarm", "sampler")
ERROR_MODELS = ("flip_entry", "drop_element", "swap_adjacent", "corrupt_output_cell", "inflate_quality")


def derived_rng(seed: int, party: str, context: str) -> random.Random:
    """Independent stream per (seed, party, context); stable across processes."""
    digest = hashlib.sha256(f"{seed}|{party}|{context}".encode()).digest()
    return random.Random(int.from_bytes(digest[:16], "big"))


@dataclass(frozen=True)
class CostModel:
    """Money-equivalent computation costs; bookkeeping only, never moved on the ledger."""

    solve: int = 0
    check: int = 0
    sample: int = 0
    round: int = 0

    def __post_init__(self) -> None:
        if min(self.solve, self.check, self.sample, self.round) < 0:
            raise ValueError("costs are non-negative")


@dataclass(frozen=True)
class ErrorModel:
    kind: str

    def __post_init__(self) -> None:
        if self.kind not in ERROR_MODELS:
            raise GameConfigError(f"unknown error model {self.kind!r}")

    def apply(self, game: Game, inst, rng: random.Random):
        bad = game.corrupt(inst, self.kind, rng)
        if game.is_correct(bad):
            raise GameConfigError(f"{self.kind} left a correct {game.kind} solution")
        return bad


def has_sampler(game: Game) -> bool:
    return type(game).sample_challenge is not Game.sample_challenge


@dataclass
class AgentStrategy:
    role: str
    policy: str
    game: str
    seed: int = 0
    party: str = ""
    error_model: Optional[ErrorModel] = None
    probability: float = 0.0
    samples: int = 0
    costs: CostModel = field(default_factory=CostModel)

    def __post_init__(self) -> None:
        allowed = PROVER_POLICIES if self.role == PROVER else CHALLENGER_POLICIES
        if self.role not in (PROVER, CHALLENGER) or self.policy not in allowed:
            raise GameConfigError(f"policy {self.policy!r} is not a {self.role} policy")
        if not 0.0 <= self.probability <= 1.0:
            raise GameConfigError("probabilities must lie in [0, 1]")
        self._game = get_game(self.game)
        if self.policy == "corrupt":
            if self.error_model is None:
                raise GameConfigError("corrupt provers need an error model")
            self._game.require_model(self.error_model.kind)
        if self.policy == "sampler":
            if not has_sampler(self._game):
                raise GameConfigError(f"no sampling rule for {self.game}")
            if self.samples < 1:
                raise GameConfigError("sampler needs at least one sample")
        self._silent: dict[str, bool] = {}

    # --- prover side ---
    def solution(self, task):
        """The instance this prover claims for ``task``."""
        inst = self._game.solve(task)
        if self.policy == "corrupt":
            inst = self.error_model.apply(self._game, inst, derived_rng(self.seed, self.party, "corrupt"))
        return inst

    # --- moves ---
    def move(self, instance, t: Transcript) -> Optional[bytes]:
        if self.role == PROVER:
            if self.policy == "honest":
                return self._game.honest_move(instance, t)
            return self._greedy(instance, t)
        rnd = next_round(t)
        if rnd > 1:
            return None if self._silent.get(t.solution_ref) else self._game.honest_move(instance, t)
        rng = derived_rng(self.seed, self.party, f"challenge:{t.solution_ref}")
        if self.policy == "lazy" and rng.random() < self.probability:
            self._silent[t.solution_ref] = True
            return None
        if self.policy == "false_alarm" and rng.random() < self.probability:
            return self._game.fabricate(instance, rng)
        if self.policy == "sampler":
            return self._game.sample_challenge(instance, rng, self.samples)
        return self._game.honest_move(instance, t)

    def wants_to_challenge(self, instance, ref: str) -> bool:
        """Whether ``move`` would open a game against ``instance`` (no side effects)."""
        probe = AgentStrategy(self.role, self.policy, self.game, self.seed, self.party,
                              self.error_model, self.probability, self.samples, self.costs)
        spec = self._game.spec(instance)
        return probe.move(instance, Transcript(spec, ref)) is not None

    def _greedy(self, instance, t: Transcript) -> Optional[bytes]:
        """Defense that survives longest: an outright win, else a continuation, else abstain."""
        spec = self._game.spec(instance)
        rnd = next_round(t)
        first = self._game.honest_move(instance, t)
        cands = ([first] if first is not None else []) + list(self._game.prover_candidates(instance, t))
        keep = None
        for cand in cands:
            try:
                trial = transcript_append(t, Move(PROVER, rnd, cand))
            except ValueError:
                continue
            v = verify_step(self._game, spec, instance, trial, rnd)
            if v.outcome == PROVER_WINS:
                return cand
            if v.outcome == CONTINUE and keep is None:
                keep = cand
        return keep

    @property
    def label(self) -> str:
        if self.policy == "corrupt":
            return f"corrupt({self.error_model.kind})"
        if self.policy in ("lazy", "false_alarm"):
            return f"{self.policy}({self.probability:g})"
        if self.policy == "sampler":
            return f"sampler({self.samples})"
        return self.policy


def make_prover(policy: str, game: str, seed: int, party: str = "P", error_model: Optional[str] = None,
                costs: Optional[CostModel] = None) -> AgentStrategy:
    return AgentStrategy(PROVER, policy, game, seed, party,
                         ErrorModel(error_model) if error_model else None, costs=costs or CostModel())


def make_challenger(policy: str, game: str, seed: int, party: str = "C", probability: float = 0.0,
                    samples: int = 0, costs: Optional[CostModel] = None) -> AgentStrategy:
    return AgentStrategy(CHALLENGER, policy, game, seed, party, None, probability, samples,
                         costs or CostModel())


# --- payoffs -----------------------------------------------------------------

@dataclass
class PayoffRecord:
    party: str
    role: str
    policy: str
    rewards: int = 0
    slashes: int = 0
    fees: int = 0
    costs: int = 0

    @property
    def net(self) -> int:
        return self.rewards - self.slashes - self.fees - self.costs


class PayoffBook:
    """Tallies ledger events into per-party payoff records.

    Refunds are neutral.  Money a party receives from others counts as a
    reward; losing its own escrow counts as a slash; fees go to the sink.
    """

    def __init__(self) -> None:
        self.records: dict[str, PayoffRecord] = {}
        self.owner: dict[int, str] = {}

    def register(self, party: str, role: str, policy: str) -> PayoffRecord:
        rec = self.records.get(party)
        if rec is None:
            rec = self.records[party] = PayoffRecord(party, role, policy)
        return rec

    def _rec(self, party: str) -> PayoffRecord:
        return self.records.get(party) or self.register(party, "other", "-")

    def charge(self, party: str, amount: int) -> None:
        self._rec(party).costs += amount

    def on_event(self, kind: str, info: dict) -> None:
        if kind == "open_escrow":
            self.owner[info["escrow"]] = info["party"]
        elif kind == "transfer":
            if info["dst"] == FEE_SINK:
                self._rec(info["src"]).fees += info["amount"]
            else:
                self._rec(info["src"]).rewards -= info["amount"]
                self._rec(info["dst"]).rewards += info["amount"]
        elif kind == "slash":
            owner = self.owner[info["escrow"]]
            self._rec(owner).slashes += info["to_winner"] + info["to_giver"]
            self._rec(info["winner"]).rewards += info["to_winner"]
            self._rec(info["task_giver"]).rewards += info["to_giver"]
        elif kind == "forfeit":
            self._rec(self.owner[info["escrow"]]).slashes += info["amount"]
            self._rec(info["beneficiary"]).rewards += info["amount"]
        elif kind == "prize":
            self._rec(self.owner[info["escrow"]]).rewards -= info["amount"]
            self._rec(info["winner"]).rewards += info["amount"]


@dataclass
class PayoffRow:
    role: str
    policy: str
    runs: int
    mean_net: float
    var_net: float


def payoff_summary(records: list[PayoffRecord]) -> list[PayoffRow]:
    """Mean and population variance of net payoff per (role, policy)."""
    groups: dict[tuple[str, str], list[int]] = defaultdict(list)
    for r in records:
        groups[(r.role, r.policy)].append(r.net)
    rows = []
    for (role, policy), nets in sorted(groups.items()):
        rows.append(PayoffRow(role, policy, len(nets), statistics.fmean(nets),
                              statistics.pvariance(nets) if len(nets) > 1 else 0.0))
    return rows


def export_payoffs(rows: list[PayoffRow]) -> str:
    lines = ["role|policy|runs|mean_net|var_net"]
    lines += [f"{r.role}|{r.policy}|{r.runs}|{r.mean_net:.6f}|{r.var_net:.6f}" for r in rows]
    return "\n".join(lines) + "\n"


__all__ = ["AgentStrategy", "CostModel", "ErrorModel", "PayoffBook", "PayoffRecord", "PayoffRow",
           "derived_rng", "export_payoffs", "make_challenger", "make_prover", "payoff_summary",
           "has_sampler"]
