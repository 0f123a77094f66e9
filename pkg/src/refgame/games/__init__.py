"""Registry of the concrete verification games."""

from __future__ import annotations

from .base import Game, GameConfigError
from .gcd import GcdGame, GcdInstance
from .intersect import IntersectGame, IntersectInstance
from .matmul import MatmulGame, MatmulInstance
from .opt import DecisionTree, Hyperplane, OptGame, OptInstance
from .sorting import SortGame, SortInstance
from .tm import TmGame, TmInstance, TuringMachine, unary_doubler

GAMES: dict[str, Game] = {g.kind: g for g in (MatmulGame(), IntersectGame(), SortGame(),
                                               GcdGame(), TmGame(), OptGame())}


def get_game(kind: str) -> Game:
    try:
        return GAMES[kind]
    except KeyError:
        raise GameConfigError(f"unknown game kind {kind!r}") from None


__all__ = ["GAMES", "get_game", "Game", "GameConfigError", "MatmulInstance", "IntersectInstance",
           "SortInstance", "GcdInstance", "TmInstance", "TuringMachine", "OptInstance",
           "Hyperplane", "DecisionTree", "unary_doubler"]
