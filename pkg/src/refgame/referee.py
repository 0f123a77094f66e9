"""The network's per-step checker: dispatch, metering and budget reports."""

from __future__ import annotations

import hashlib
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

from dataclasses import replace

from .core import (CONTINUE, MALFORMED, NO_CHALLENGE, TIMEOUT, GameSpec, ParsedTranscript, Solution,
                   StepVerdict, Transcript, loses, other, role_for_round, winner_of)
from .encoding import MalformedPayload
from .games import Game, get_game


class CostMeter:
    """Counts logical operations and records every byte span the referee reads."""

    def __init__(self) -> None:
        self.ops = 0
        self.spans: list[tuple[int, int, int]] = []
        self._h = hashlib.sha256()

    def tick(self, n: int = 1) -> None:
        if n < 0:
            raise ValueError("meter only counts up")
        self.ops += n

    def read(self, source: int, offset: int, raw: bytes) -> None:
        """One metered word read of ``raw`` at ``offset`` in round ``source``'s payload."""
        self.ops += 1
        self.spans.append((source, offset, len(raw)))
        self._h.update(b"%d:%d:" % (source, offset) + raw)

    def digest(self) -> str:
        return self._h.hexdigest()[:16]


class Referee:
    """Referee bound to one task of one game kind."""

    def __init__(self, kind: str, task) -> None:
        self.game: Game = get_game(kind)
        self.kind = kind
        self.task = task

    def bind(self, solution: Solution):
        return self.game.bind(self.task, solution.payload)

    def spec_for(self, instance) -> GameSpec:
        return self.game.spec(instance)

    def verify_step(self, spec: GameSpec, instance, t: Transcript, rnd: int) -> StepVerdict:
        return verify_step(self.game, spec, instance, t, rnd)


def verify_step(game: Game | str, spec: GameSpec, instance, t: Transcript, rnd: int) -> StepVerdict:
    """Check round ``rnd`` with a fresh meter; undecodable moves lose for their author."""
    if isinstance(game, str):
        game = get_game(game)
    if spec.game_id != game.kind:
        raise ValueError(f"spec for {spec.game_id!r} handed to the {game.kind} referee")
    meter = CostMeter()
    try:
        outcome, reason = game.check(instance, t, rnd, meter)
    except (MalformedPayload, IndexError):
        outcome, reason = loses(role_for_round(rnd)), MALFORMED
    return StepVerdict(outcome, meter.ops, reason, meter.digest())


def read_spans(game: Game | str, spec: GameSpec, instance, t: Transcript, rnd: int) -> list[tuple[int, int, int]]:
    """Byte spans ``(round, offset, length)`` that checking ``rnd`` touches."""
    if isinstance(game, str):
        game = get_game(game)
    meter = CostMeter()
    try:
        game.check(instance, t, rnd, meter)
    except (MalformedPayload, IndexError):
        pass
    return meter.spans


@dataclass
class BudgetRow:
    game: str
    instances: int
    max_cost: int
    budget: int
    violations: int = 0

    @property
    def within(self) -> bool:
        return self.violations == 0 and self.max_cost <= self.budget


@dataclass
class BudgetReport:
    rows: dict[str, BudgetRow] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(r.within for r in self.rows.values())

    def export(self) -> str:
        lines = ["game|instances|max_cost|budget"]
        lines += [f"{r.game}|{r.instances}|{r.max_cost}|{r.budget}" for r in self.rows.values()]
        return "\n".join(lines) + "\n"


def budget_report(transcripts: Iterable[Transcript]) -> BudgetReport:
    """Per-kind maximum step cost.

    Each transcript is held to its own budget.  When one kind is played at
    several sizes, the row shows the largest budget seen and counts the
    transcripts that overshot theirs.
    """
    groups: dict[str, list[Transcript]] = defaultdict(list)
    for t in transcripts:
        groups[t.spec.game_id].append(t)
    rep = BudgetReport()
    for kind in sorted(groups):
        ts = groups[kind]
        over = sum(1 for t in ts if t.max_cost > t.spec.referee_budget_h)
        rep.rows[kind] = BudgetRow(kind, len(ts), max(t.max_cost for t in ts),
                                   max(t.spec.referee_budget_h for t in ts), over)
    return rep


@dataclass
class Audit:
    """Outcome of replaying a recorded transcript.

    ``unaudited`` lists ``(round, offset)`` move bytes no referee step read;
    changing one of them cannot be detected by replay.
    """

    confirmed: bool
    problems: list[str]
    unaudited: list[tuple[int, int]]

    @property
    def status(self) -> str:
        return "confirmed" if self.confirmed else "refuted"


def audit_transcript(parsed: ParsedTranscript, instance) -> Audit:
    """Re-run every referee step of ``parsed`` and compare with what was recorded."""
    t = parsed.transcript
    game = get_game(t.spec.game_id)
    problems: list[str] = []
    if game.spec(instance) != t.spec:
        problems.append("game header does not match the instance")
    read: set[tuple[int, int]] = set()
    last = CONTINUE
    prefix = replace(t, moves=(), steps=(), status="open", winner=None, reason=None)
    for k, (m, rec) in enumerate(zip(t.moves, parsed.recorded)):
        rnd = k + 1
        if m.round != rnd or m.author != role_for_round(rnd):
            problems.append(f"round {m.round}: out of order or wrong author")
            break
        if last != CONTINUE:
            problems.append(f"round {rnd}: move after a decided step")
            break
        prefix = replace(prefix, moves=prefix.moves + (m,))
        v = verify_step(game, t.spec, instance, prefix, rnd)
        for src, off, length in read_spans(game, t.spec, instance, prefix, rnd):
            read.update((src, off + i) for i in range(length))
        got = (rnd, v.outcome, v.metered_cost, v.reason, v.view_digest)
        if got != tuple(rec):
            problems.append(f"round {rnd}: recorded {rec[1:]} but replay gives {got[1:]}")
        prefix = prefix.with_step(v)
        last = v.outcome
    if not problems:
        if last != CONTINUE:
            expect = {(winner_of(last), None)}
        else:
            gone = role_for_round(len(t.moves) + 1)
            expect = {(other(gone), NO_CHALLENGE if not t.moves else TIMEOUT), (other(gone), MALFORMED)}
        if not any(w == t.winner and (r is None or r == t.reason) for w, r in expect):
            problems.append(f"verdict {t.winner}/{t.reason} does not follow from the steps")
        elif last != CONTINUE and t.reason != prefix.steps[-1].reason:
            problems.append(f"verdict reason {t.reason} differs from the deciding step")
    unaudited = [(m.round, i) for m in t.moves for i in range(len(m.payload)) if (m.round, i) not in read]
    return Audit(not problems, problems, unaudited)


__all__ = ["Audit", "audit_transcript", "CostMeter", "Referee", "verify_step", "read_spans", "BudgetReport", "BudgetRow",
           "budget_report"]
