"""Shared test helpers: one-off games and the exhaustive completeness explorer."""

from __future__ import annotations

import random

from refgame.agents import make_challenger, make_prover
from refgame.core import (CHALLENGER, CONTINUE, PROVER, Move, Solution, Transcript, TranscriptError,
                          play_game, transcript_append, winner_of)
from refgame.games import get_game
from refgame.games.base import next_round
from refgame.referee import Referee, verify_step


def solution_for(kind, inst, ref="S:test"):
    g = get_game(kind)
    return Solution(kind, g.claim_payload(inst), g.quality(inst), 1, ref)


def play(kind, inst, prover, challenger, task=None):
    g = get_game(kind)
    return play_game(g.spec(inst), solution_for(kind, inst), prover, challenger,
                     Referee(kind, task if task is not None else inst), instance=inst)


class Scripted:
    """Strategy replaying fixed payloads, then abstaining."""

    def __init__(self, *payloads):
        self.payloads = list(payloads)

    def move(self, instance, t):
        return self.payloads.pop(0) if self.payloads else None


def honest_pair(kind, seed=0):
    return make_prover("honest", kind, seed), make_challenger("honest", kind, seed)


def corrupted(kind, task, model, seed):
    """A wrong solution for ``task`` built by the named error model."""
    g = get_game(kind)
    return g.corrupt(g.solve(task), model, random.Random(seed))


def explore(kind, inst):
    """Play the honest prover against every challenger move sequence.

    Returns ``(games, losses)``, where ``losses`` lists the challenger move
    sequences that beat the prover.  States with equal ``explore_key`` are
    explored once.  ``explore.over_budget`` collects steps costing more than
    the referee budget.
    """
    g = get_game(kind)
    spec = g.spec(inst)
    seen: dict = {}
    stats = {"games": 0}
    losses = []
    explore.over_budget = []

    def metered(t, rnd):
        v = verify_step(g, spec, inst, t, rnd)
        if v.metered_cost > spec.referee_budget_h:
            explore.over_budget.append((rnd, v.metered_cost, spec.referee_budget_h))
        return v

    def decide(winner, path):
        stats["games"] += 1
        if winner != PROVER:
            losses.append(path)

    def challenger_turn(t, path):
        rnd = next_round(t)
        if rnd > spec.round_bound_f:
            raise AssertionError(f"{kind}: game open after f rounds")
        key = g.explore_key(inst, t)
        if key in seen:
            return
        seen[key] = True
        decide(PROVER, path + (None,))  # abstaining always leaves the solution standing or times out
        for mv in g.challenger_moves(inst, t):
            try:
                t1 = transcript_append(t, Move(CHALLENGER, rnd, mv))
            except TranscriptError:
                decide(PROVER, path + (mv,))
                continue
            v = metered(t1, rnd)
            if v.outcome != CONTINUE:
                decide(winner_of(v.outcome), path + (mv,))
                continue
            prover_turn(t1.with_step(v), path + (mv,))

    def prover_turn(t, path):
        rnd = next_round(t)
        mv = g.honest_move(inst, t)
        if mv is None:
            decide(CHALLENGER, path)
            return
        t1 = transcript_append(t, Move(PROVER, rnd, mv))
        v = metered(t1, rnd)
        if v.outcome != CONTINUE:
            decide(winner_of(v.outcome), path)
            return
        challenger_turn(t1.with_step(v), path)

    challenger_turn(Transcript(spec, "S:explore"), ())
    return stats["games"], losses


def new_context(spec, seed, parties, funds=1000, giver_funds=10_000):
    """Protocol context with a fresh ledger wired to a board and a payoff book."""
    from refgame.agents import PayoffBook
    from refgame.ledger import Ledger
    from refgame.protocols import Context
    from refgame.simnet import Board

    led, board, book = Ledger(), Board(), PayoffBook()
    board.attach(led)
    inner = led.listener

    def listen(kind, info):
        inner(kind, info)
        book.on_event(kind, info)
    led.listener = listen
    led.fund(spec.task_giver, giver_funds)
    for p in parties:
        led.fund(p, funds)
    return Context(spec, led, board, book, seed)
