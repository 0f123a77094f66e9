"""Shared domain types and the generic game loop."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Protocol

PROVER = "prover"
CHALLENGER = "challenger"

CONTINUE = "continue"
PROVER_WINS = "prover_wins"
CHALLENGER_WINS = "challenger_wins"

# verdict reason codes
NO_CHALLENGE = "no_challenge"
INVALID_CHALLENGE = "invalid_challenge"
DEFENDED = "defended"
UPHELD = "upheld"
TIMEOUT = "timeout"
MALFORMED = "malformed"
RANGE = "range"
PROCEED = "proceed"


class TranscriptError(ValueError):
    def __init__(self, code: str, detail: str = "") -> None:
        super().__init__(f"{code}: {detail}" if detail else code)
        self.code = code


class InvalidSolution(ValueError):
    """A submitted solution payload does not decode for its task."""


def role_for_round(rnd: int) -> str:
    return CHALLENGER if rnd % 2 == 1 else PROVER


def other(role: str) -> str:
    return PROVER if role == CHALLENGER else CHALLENGER


def winner_of(outcome: str) -> Optional[str]:
    if outcome == PROVER_WINS:
        return PROVER
    if outcome == CHALLENGER_WINS:
        return CHALLENGER
    return None


def loses(role: str) -> str:
    """Outcome code for ``role`` losing."""
    return CHALLENGER_WINS if role == PROVER else PROVER_WINS


@dataclass(frozen=True)
class GameSpec:
    game_id: str
    input_size_n: int
    round_bound_f: int
    message_bound_g: int
    referee_budget_h: int

    def __post_init__(self) -> None:
        if self.input_size_n < 0:
            raise ValueError("input_size_n must be non-negative")
        for name in ("round_bound_f", "message_bound_g", "referee_budget_h"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass(frozen=True)
class Move:
    author: str
    round: int
    payload: bytes


@dataclass(frozen=True)
class StepVerdict:
    outcome: str
    metered_cost: int
    reason: str
    view_digest: str = ""


@dataclass(frozen=True)
class Solution:
    task_ref: str
    payload: bytes
    quality_q: Optional[int] = None
    deposit_d: int = 0
    solution_id: str = ""


@dataclass(frozen=True)
class Transcript:
    spec: GameSpec
    solution_ref: str
    moves: tuple[Move, ...] = ()
    steps: tuple[StepVerdict, ...] = ()
    status: str = "open"
    winner: Optional[str] = None
    reason: Optional[str] = None

    @property
    def decided(self) -> bool:
        return self.status == "decided"

    def payload(self, rnd: int) -> bytes:
        return self.moves[rnd - 1].payload

    def with_step(self, verdict: StepVerdict) -> "Transcript":
        return replace(self, steps=self.steps + (verdict,))

    def decide(self, winner: str, reason: str) -> "Transcript":
        if self.decided:
            raise TranscriptError("decided", "transcript already decided")
        return replace(self, status="decided", winner=winner, reason=reason)

    @property
    def max_cost(self) -> int:
        return max((s.metered_cost for s in self.steps), default=0)


def transcript_append(t: Transcript, m: Move) -> Transcript:
    if t.decided:
        raise TranscriptError("decided", "no moves after a decision")
    if m.round != len(t.moves) + 1:
        raise TranscriptError("out_of_turn", f"expected round {len(t.moves) + 1}, got {m.round}")
    if m.author != role_for_round(m.round):
        raise TranscriptError("out_of_turn", f"round {m.round} belongs to {role_for_round(m.round)}")
    if m.round > t.spec.round_bound_f:
        raise TranscriptError("round_bound", f"round {m.round} exceeds f={t.spec.round_bound_f}")
    if len(m.payload) > t.spec.message_bound_g:
        raise TranscriptError("oversize", f"{len(m.payload)} bytes > g={t.spec.message_bound_g}")
    return replace(t, moves=t.moves + (m,))


class Strategy(Protocol):
    def move(self, instance, transcript: Transcript) -> Optional[bytes]: ...


class RefereeHandle(Protocol):
    def bind(self, solution: Solution): ...

    def verify_step(self, spec: GameSpec, instance, transcript: Transcript, rnd: int) -> StepVerdict: ...


def play_game(spec: GameSpec, solution: Solution, prover: Strategy, challenger: Strategy,
              referee: RefereeHandle, instance=None) -> Transcript:
    """Run one verification game to a decision.

    ``instance`` may be passed when the caller already bound the solution.
    """
    if instance is None:
        instance = referee.bind(solution)
    t = Transcript(spec=spec, solution_ref=solution.solution_id or solution.task_ref)
    for rnd in range(1, spec.round_bound_f + 1):
        role = role_for_round(rnd)
        agent = challenger if role == CHALLENGER else prover
        payload = agent.move(instance, t)
        if payload is None:
            reason = NO_CHALLENGE if rnd == 1 else TIMEOUT
            return t.decide(other(role), reason)
        try:
            t = transcript_append(t, Move(role, rnd, bytes(payload)))
        except TranscriptError as exc:
            if exc.code != "oversize":
                raise
            return t.decide(other(role), MALFORMED)
        verdict = referee.verify_step(spec, instance, t, rnd)
        t = t.with_step(verdict)
        if verdict.outcome != CONTINUE:
            return t.decide(winner_of(verdict.outcome), verdict.reason)
    raise RuntimeError(f"{spec.game_id}: referee left the game open after f={spec.round_bound_f} rounds")


# --- transcript export -----------------------------------------------------

def export_transcript(t: Transcript, instance_text: str = "") -> str:
    if not t.decided:
        raise TranscriptError("open", "only decided transcripts are exported")
    s = t.spec
    lines = [
        f"game|{s.game_id}|{s.input_size_n}|{s.round_bound_f}|{s.message_bound_g}|{s.referee_budget_h}",
        f"solution|{t.solution_ref}",
        f"instance|{instance_text.encode('utf-8').hex()}",
    ]
    for m, v in zip(t.moves, t.steps):
        lines.append(f"{m.round}|{m.author}|{m.payload.hex()}")
        lines.append(f"step|{m.round}|{v.outcome}|{v.metered_cost}|{v.reason}|{v.view_digest}")
    lines.append(f"verdict|{t.winner}|{t.reason}")
    return "\n".join(lines) + "\n"


class TranscriptFormatError(ValueError):
    pass


@dataclass
class ParsedTranscript:
    transcript: Transcript
    instance_text: str
    recorded: list[tuple[int, str, int, str, str]] = field(default_factory=list)


def parse_transcript(text: str) -> ParsedTranscript:
    lines = text.splitlines()
    if len(lines) < 4:
        raise TranscriptFormatError("truncated transcript")
    try:
        head = lines[0].split("|")
        if head[0] != "game" or len(head) != 6:
            raise TranscriptFormatError("missing game header")
        spec = GameSpec(head[1], *(int(x) for x in head[2:]))
        sol = lines[1].split("|", 1)
        inst = lines[2].split("|", 1)
        if sol[0] != "solution" or inst[0] != "instance" or len(sol) != 2 or len(inst) != 2:
            raise TranscriptFormatError("missing solution/instance header")
        instance_text = bytes.fromhex(inst[1]).decode("utf-8")
        t = Transcript(spec=spec, solution_ref=sol[1])
        recorded = []
        body = lines[3:]
        if not body or not body[-1].startswith("verdict|"):
            raise TranscriptFormatError("missing verdict line")
        parts = body[-1].split("|")
        if len(parts) != 3 or parts[1] not in (PROVER, CHALLENGER):
            raise TranscriptFormatError("bad verdict line")
        winner, reason = parts[1], parts[2]
        moves = body[:-1]
        if len(moves) % 2:
            raise TranscriptFormatError("move without step record")
        for k in range(0, len(moves), 2):
            mp = moves[k].split("|")
            sp = moves[k + 1].split("|")
            if len(mp) != 3 or len(sp) != 6 or sp[0] != "step":
                raise TranscriptFormatError(f"bad move/step pair at line {k + 4}")
            rnd = int(mp[0])
            if int(sp[1]) != rnd:
                raise TranscriptFormatError("step round mismatch")
            t = replace(t, moves=t.moves + (Move(mp[1], rnd, bytes.fromhex(mp[2])),),
                        steps=t.steps + (StepVerdict(sp[2], int(sp[3]), sp[4], sp[5]),))
            recorded.append((rnd, sp[2], int(sp[3]), sp[4], sp[5]))
        t = replace(t, status="decided", winner=winner, reason=reason)
    except TranscriptFormatError:
        raise
    except (ValueError, IndexError, UnicodeDecodeError) as exc:
        raise TranscriptFormatError(str(exc)) from exc
    return ParsedTranscript(t, instance_text, recorded)
