"""Competition, contract and subcommittee protocols, and the scenario runner."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .agents import (AgentStrategy, CostModel, ErrorModel, PayoffBook, PayoffRecord, derived_rng,
                     export_payoffs, payoff_summary)
from .core import CHALLENGER, PROVER, Solution, Transcript, export_transcript, play_game
from .games import GameConfigError, get_game
from .ledger import Escrow, InsufficientFunds, Ledger
from .referee import BudgetReport, Referee, budget_report
from .simnet import Board, gen_fixture


class ConfigError(ValueError):
    """Scenario configuration problem; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str) -> None:
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


# --- commit / reveal -----------------------------------------------------------

def commitment_digest(payload: bytes, quality: Optional[int], deposit: int, nonce: str) -> str:
    h = hashlib.sha256(payload)
    h.update(f"|{quality}|{deposit}|{nonce}".encode())
    return h.hexdigest()


@dataclass
class Commitment:
    party: str
    digest: str
    revealed: Optional[tuple[bytes, Optional[int], int, str]] = None

    def reveal(self, payload: bytes, quality: Optional[int], deposit: int, nonce: str) -> bool:
        """Accept the opening iff it hashes to the committed digest."""
        if commitment_digest(payload, quality, deposit, nonce) != self.digest:
            return False
        self.revealed = (payload, quality, deposit, nonce)
        return True


def order_solutions(solutions: list[Solution], digests: Optional[dict[str, str]] = None,
                    min_quality: Optional[int] = None) -> list[Solution]:
    """Quality descending, then deposit descending, then commitment digest ascending."""
    digests = digests or {}
    keep = [s for s in solutions
            if min_quality is None or (s.quality_q is not None and s.quality_q >= min_quality)]
    return sorted(keep, key=lambda s: (-(s.quality_q or 0), -s.deposit_d,
                                       digests.get(s.solution_id, s.solution_id)))


# --- task and participants -------------------------------------------------------

@dataclass
class TaskSpec:
    game: str
    task: object
    prize: int
    min_deposit_prover: int
    min_deposit_challenger: int
    min_quality: Optional[int] = None
    fee: int = 0
    task_giver: str = "T"
    deadlines: dict[str, int] = field(default_factory=lambda: {"reveal": 1, "challenge": 1})

    def __post_init__(self) -> None:
        if self.prize <= 0 or self.min_deposit_prover <= 0 or self.min_deposit_challenger <= 0:
            raise ConfigError("task", "prize and deposits must be positive")
        if min(self.deadlines.values(), default=1) < 1:
            raise ConfigError("task.deadlines", "deadlines are at least one round")


@dataclass
class Participant:
    party: str
    strategy: AgentStrategy
    deposit: int = 0
    top_up: int = 0
    reveal: bool = True
    challenges: bool = True
    token: bool = True


@dataclass
class Context:
    """Shared machinery for one scenario run."""

    spec: TaskSpec
    ledger: Ledger
    board: Board
    book: PayoffBook
    seed: int
    transcripts: list[Transcript] = field(default_factory=list)
    exports: list[str] = field(default_factory=list)

    @property
    def game(self):
        return get_game(self.spec.game)

    def charge(self, agent: AgentStrategy, what: str, times: int = 1) -> None:
        self.book.charge(agent.party, getattr(agent.costs, what) * times)

    def contest(self, sol: Solution, instance, prover: AgentStrategy, challenger: AgentStrategy) -> Transcript:
        referee = Referee(self.spec.game, self.spec.task)
        gspec = self.game.spec(instance)
        t = play_game(gspec, sol, prover, challenger, referee, instance=instance)
        self.transcripts.append(t)
        self.exports.append(export_transcript(t, self.game.dumps(instance)))
        self.board.post(CHALLENGER, "transcript", self.exports[-1], game=self.spec.game)
        for role, agent in ((PROVER, prover), (CHALLENGER, challenger)):
            self.charge(agent, "round", sum(1 for m in t.moves if m.author == role))
        self.board.advance_round()
        return t

    def examine(self, agent: AgentStrategy, instance, ref: str) -> bool:
        """Challenger looks at a solution; pays for the look, returns whether it objects."""
        if agent.policy == "sampler":
            self.charge(agent, "sample")
        elif agent.policy == "honest" or (agent.policy == "lazy" and not _lazy_skips(agent, ref)):
            self.charge(agent, "check")
        return agent.wants_to_challenge(instance, ref)


def _submit(ctx: Context, p: Participant, min_dep: int):
    """Fee, solve, deposit.  Returns (instance, solution, escrow) or None if unfunded."""
    game = ctx.game
    inst = p.strategy.solution(ctx.spec.task)
    deposit = max(p.deposit, min_dep)
    if ctx.ledger.balance(p.party) < ctx.spec.fee + deposit:
        return None
    ctx.ledger.pay_fee(p.party, ctx.spec.fee)
    esc = ctx.ledger.open_escrow(p.party, "prover_deposit", deposit)
    ctx.charge(p.strategy, "solve")
    sol = Solution(ctx.spec.game, game.claim_payload(inst), game.quality(inst), deposit, f"S:{p.party}")
    return inst, sol, esc


# --- Protocol: competition ----------------------------------------------------------

@dataclass
class CompetitionResult:
    accepted: Optional[str]
    winner: Optional[str]
    ordered: list[str]
    disqualified: set[str]
    transcripts: list[Transcript]
    accepted_instance: object = None


def run_competition(ctx: Context, provers: list[Participant], challengers: list[Participant]) -> CompetitionResult:
    spec, led, board = ctx.spec, ctx.ledger, ctx.board
    T = spec.task_giver
    prize = led.open_escrow(T, "prize", spec.prize)
    board.post(T, "task", ctx.game.dumps(spec.task))

    # (b) commit
    entries: dict[str, tuple[Participant, object, Solution, Escrow, str]] = {}
    commits: dict[str, Commitment] = {}
    for p in provers:
        sub = _submit(ctx, p, spec.min_deposit_prover)
        if sub is None:
            continue
        inst, sol, esc = sub
        nonce = derived_rng(ctx.seed, p.party, "nonce").getrandbits(128).to_bytes(16, "big").hex()
        digest = commitment_digest(sol.payload, sol.quality_q, sol.deposit_d, nonce)
        commits[p.party] = Commitment(p.party, digest)
        board.post(p.party, "commit", digest)
        entries[p.party] = (p, inst, sol, esc, nonce)
    board.advance_round()

    # (c) reveal and order
    revealed: list[Solution] = []
    digests: dict[str, str] = {}
    for party, (p, inst, sol, esc, nonce) in entries.items():
        board.expect(party, "reveal", spec.deadlines.get("reveal", 1))
        if p.reveal and commits[party].reveal(sol.payload, sol.quality_q, sol.deposit_d, nonce):
            board.post(party, "reveal", sol.payload)
            revealed.append(sol)
            digests[sol.solution_id] = commits[party].digest
    for _ in range(spec.deadlines.get("reveal", 1)):
        board.advance_round()
    for e in board.expired:
        if e.kind == "reveal" and e.party in entries and entries[e.party][3].status == "held":
            led.forfeit(entries[e.party][3], T)
    ordered = order_solutions(revealed, digests)
    below = [s for s in ordered if s not in order_solutions(ordered, digests, spec.min_quality)]
    for s in below:
        led.refund(entries[s.solution_id[2:]][3])
    ordered = [s for s in ordered if s not in below]
    owner = {s.solution_id: s.solution_id[2:] for s in ordered}

    # (d) challenge enrollment
    escrow_of: dict[str, Escrow] = {party: entries[party][3] for party in owner.values()}
    pool: list[Participant] = [c for c in challengers]
    pool += [p for p in provers if p.challenges and p.party in owner.values()]
    enrolled: list[tuple[Participant, AgentStrategy]] = []
    wants: dict[tuple[str, str], bool] = {}
    for c in pool:
        agent = c.strategy if c.strategy.role == CHALLENGER else _as_challenger(c)
        targets = [s for s in ordered if owner[s.solution_id] != c.party]
        for s in targets:
            wants[(c.party, s.solution_id)] = ctx.examine(agent, entries[owner[s.solution_id]][1], s.solution_id)
        if not any(wants[(c.party, s.solution_id)] for s in targets):
            continue
        try:
            if c.party in escrow_of:
                if c.top_up:
                    led.top_up(escrow_of[c.party], c.top_up)
                if escrow_of[c.party].amount < spec.min_deposit_challenger:
                    continue
            else:
                escrow_of[c.party] = led.open_escrow(c.party, "challenger_deposit",
                                                     max(c.deposit, spec.min_deposit_challenger))
        except InsufficientFunds:
            continue
        board.post(c.party, "enroll", str(escrow_of[c.party].amount))
        enrolled.append((c, agent))
    enrolled.sort(key=lambda ca: (-escrow_of[ca[0].party].amount, ca[0].party))
    board.advance_round()

    # (e) lexicographic pairs
    out: set[str] = set()
    survivors: list[Solution] = []
    for s in ordered:
        prov = owner[s.solution_id]
        p, inst = entries[prov][0], entries[prov][1]
        for c, agent in enrolled:
            if prov in out:
                break
            if c.party in out or c.party == prov or not wants.get((c.party, s.solution_id)):
                continue
            t = ctx.contest(s, inst, p.strategy, agent)
            loser, winner = (c.party, prov) if t.winner == PROVER else (prov, c.party)
            led.slash_and_split(escrow_of[loser], winner, T)
            out.add(loser)
            board.post("board", "disqualify", loser)
        if prov not in out:
            survivors.append(s)

    # (f) settlement
    winner_sol = survivors[0] if survivors else None
    if winner_sol is not None:
        led.pay_prize(prize, owner[winner_sol.solution_id])
    else:
        led.refund(prize)
    for party, esc in escrow_of.items():
        if esc.status == "held":
            led.refund(esc)
    win_party = owner[winner_sol.solution_id] if winner_sol else None
    return CompetitionResult(winner_sol.solution_id if winner_sol else None, win_party,
                             [s.solution_id for s in ordered], out, ctx.transcripts,
                             entries[win_party][1] if win_party else None)


def _as_challenger(p: Participant) -> AgentStrategy:
    s = p.strategy
    return AgentStrategy(CHALLENGER, "honest", s.game, s.seed, p.party, costs=s.costs)


# --- Protocol: contract ---------------------------------------------------------------

@dataclass
class ContractResult:
    accepted: Optional[str]
    winner: Optional[str]
    attempts: list[str]
    transcripts: list[Transcript]
    accepted_instance: object = None


def run_contract(ctx: Context, contractors: list[Participant], challengers: list[Participant]) -> ContractResult:
    spec, led, board = ctx.spec, ctx.ledger, ctx.board
    T = spec.task_giver
    prize = led.open_escrow(T, "prize", spec.prize)
    board.post(T, "task", ctx.game.dumps(spec.task))
    attempts = []
    for p in contractors:
        sub = _submit(ctx, p, spec.min_deposit_prover)
        if sub is None:
            continue
        inst, sol, esc = sub
        attempts.append(sol.solution_id)
        board.post(p.party, "solution", sol.payload)
        board.advance_round()
        upheld = False
        for c in challengers:
            if c.party == p.party or not ctx.examine(c.strategy, inst, sol.solution_id):
                continue
            try:
                cesc = led.open_escrow(c.party, "challenger_deposit", max(c.deposit, spec.min_deposit_challenger))
            except InsufficientFunds:
                continue
            t = ctx.contest(sol, inst, p.strategy, c.strategy)
            if t.winner == PROVER:
                led.slash_and_split(cesc, p.party, T)
                continue
            led.refund(cesc)
            led.slash_and_split(esc, c.party, T)
            upheld = True
            break
        if not upheld:
            led.refund(esc)
            led.pay_prize(prize, p.party)
            return ContractResult(sol.solution_id, p.party, attempts, ctx.transcripts, inst)
        board.post(T, "recycle", str(prize.amount))
    led.refund(prize)
    return ContractResult(None, None, attempts, ctx.transcripts)


# --- Protocol: incentive round with a subcommittee ---------------------------------------

@dataclass
class Subcommittee:
    candidates: list[str]
    selected: list[str]
    undersize: bool


def lottery_ticket(seed: int, party: str) -> str:
    return hashlib.sha256(f"{seed}|{party}".encode()).hexdigest()


def select_subcommittee(candidates: list[str] | dict[str, bool], size: int, seed: int) -> Subcommittee:
    """The ``size`` eligible candidates with the smallest tickets.

    ``candidates`` may map party ids to eligibility (escrow and work token
    posted); a plain list means every candidate is eligible.
    """
    elig = candidates if isinstance(candidates, dict) else {c: True for c in candidates}
    pool = sorted((p for p, ok in elig.items() if ok), key=lambda p: (lottery_ticket(seed, p), p))
    return Subcommittee(sorted(elig), pool[:size], len(pool) < size)


@dataclass
class IncentiveResult:
    status: Literal["accepted", "rejected", "unresolved"]
    committee: Subcommittee
    responses: int
    transcripts: list[Transcript]
    accepted: Optional[str] = None
    accepted_instance: object = None


def run_incentive_round(ctx: Context, prover: Participant, candidates: list[Participant], size: int,
                        nominal_reward: int = 1, quorum: Optional[int] = None) -> IncentiveResult:
    spec, led, board = ctx.spec, ctx.ledger, ctx.board
    T = spec.task_giver
    prize = led.open_escrow(T, "prize", spec.prize)
    board.post(T, "task", ctx.game.dumps(spec.task))

    cand_escrow: dict[str, Escrow] = {}
    for c in candidates:
        try:
            cand_escrow[c.party] = led.open_escrow(c.party, "challenger_deposit",
                                                   max(c.deposit, spec.min_deposit_challenger))
        except InsufficientFunds:
            pass
    committee = select_subcommittee({c.party: c.party in cand_escrow and c.token for c in candidates},
                                    size, ctx.seed)
    board.post("board", "subcommittee", ",".join(committee.selected))
    for party, esc in cand_escrow.items():
        if party not in committee.selected:
            led.refund(esc)

    sub = _submit(ctx, prover, spec.min_deposit_prover)
    if sub is None:
        led.refund(prize)
        for party in committee.selected:
            led.refund(cand_escrow[party])
        return IncentiveResult("unresolved", committee, 0, ctx.transcripts)
    inst, sol, esc = sub
    nonce = derived_rng(ctx.seed, prover.party, "nonce").getrandbits(128).to_bytes(16, "big").hex()
    com = Commitment(prover.party, commitment_digest(sol.payload, sol.quality_q, sol.deposit_d, nonce))
    board.post(prover.party, "commit", com.digest)
    board.advance_round()
    com.reveal(sol.payload, sol.quality_q, sol.deposit_d, nonce)
    board.post(prover.party, "reveal", sol.payload)

    members = {c.party: c for c in candidates}
    status: str = "accepted"
    responded: list[str] = []
    for party in committee.selected:
        c = members[party]
        agent = c.strategy
        objects = ctx.examine(agent, inst, sol.solution_id)
        if agent.policy == "lazy" and _lazy_skips(agent, sol.solution_id):
            continue
        responded.append(party)
        board.post(party, "response", "object" if objects else "ok")
        if not objects:
            continue
        t = ctx.contest(sol, inst, prover.strategy, agent)
        if t.winner == PROVER:
            led.forfeit(cand_escrow[party], prover.party)
            continue
        led.forfeit(esc, party)
        status = "rejected"
        break

    need = len(committee.selected) if quorum is None else quorum
    if not responded:
        status = "unresolved"
    if status == "accepted":
        led.refund(esc)
        led.pay_prize(prize, prover.party)
    else:
        if esc.status == "held":
            led.refund(esc)
        led.refund(prize)
    if status != "unresolved" and len(responded) >= need and nominal_reward > 0:
        for party in responded:
            led.transfer(T, party, nominal_reward)
    for party in committee.selected:
        if cand_escrow[party].status == "held":
            led.refund(cand_escrow[party])
    return IncentiveResult(status, committee, len(responded), ctx.transcripts,
                           sol.solution_id if status == "accepted" else None,
                           inst if status == "accepted" else None)


def _lazy_skips(agent: AgentStrategy, ref: str) -> bool:
    rng = derived_rng(agent.seed, agent.party, f"challenge:{ref}")
    return rng.random() < agent.probability


# --- scenario configuration ------------------------------------------------------

class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GenerateCfg(_Strict):
    size: int = Field(ge=1)
    seed: Optional[int] = None
    options: dict = Field(default_factory=dict)


class DeadlineCfg(_Strict):
    reveal: int = Field(default=1, ge=1)
    challenge: int = Field(default=1, ge=1)


class TaskCfg(_Strict):
    game: str
    instance_file: Optional[str] = None
    generate: Optional[GenerateCfg] = None
    prize: Optional[int] = Field(default=None, gt=0)
    min_deposit_prover: Optional[int] = Field(default=None, gt=0)
    min_deposit_challenger: Optional[int] = Field(default=None, gt=0)
    min_quality: Optional[int] = None
    prize_multiplier: int = Field(default=2, ge=1)
    deadlines: DeadlineCfg = Field(default_factory=lambda: DeadlineCfg())

    @model_validator(mode="after")
    def _source(self):
        if (self.instance_file is None) == (self.generate is None):
            raise ValueError("give exactly one of instance_file or generate")
        return self


class AgentCfg(_Strict):
    id: str
    role: Literal["prover", "challenger"]
    strategy: Literal["honest", "corrupt", "lazy", "false_alarm", "sampler"] = "honest"
    funds: int = Field(default=0, ge=0)
    error_model: Optional[str] = None
    probability: float = Field(default=0.0, ge=0.0, le=1.0)
    samples: int = Field(default=0, ge=0)
    deposit: int = Field(default=0, ge=0)
    top_up: int = Field(default=0, ge=0)
    reveal: bool = True
    challenges: bool = True
    token: bool = True


class ProtocolCfg(_Strict):
    kind: Literal["competition", "contract", "incentive"]
    subcommittee_size: int = Field(default=3, ge=1)
    quorum: Optional[int] = Field(default=None, ge=0)
    nominal_reward: int = Field(default=1, ge=0)


class CostCfg(_Strict):
    solve: int = Field(default=10, ge=0)
    check: int = Field(default=10, ge=0)
    sample: int = Field(default=2, ge=0)
    round: int = Field(default=1, ge=0)


class FeeCfg(_Strict):
    submission: int = Field(default=1, ge=0)


class GiverCfg(_Strict):
    id: str = "T"
    funds: int = Field(default=10_000, ge=0)


class ScenarioConfig(_Strict):
    scenario: str = "scenario"
    task: TaskCfg
    agents: list[AgentCfg]
    protocol: ProtocolCfg
    seed: int = 0
    fees: FeeCfg = Field(default_factory=FeeCfg)
    costs: CostCfg = Field(default_factory=CostCfg)
    task_giver: GiverCfg = Field(default_factory=GiverCfg)

    @model_validator(mode="after")
    def _parties(self):
        ids = [a.id for a in self.agents] + [self.task_giver.id]
        if len(set(ids)) != len(ids):
            raise ValueError("party ids must be unique")
        if "network" in ids or "board" in ids:
            raise ValueError("'network' and 'board' are reserved party ids")
        if not any(a.role == "prover" for a in self.agents):
            raise ValueError("at least one prover is required")
        return self


def load_config(path: str | Path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from exc
    try:
        return ScenarioConfig.model_validate(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from exc
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = ".".join(str(x) for x in first["loc"]) or "config"
        raise ConfigError(loc, first["msg"]) from exc


def fixture_dir() -> Path:
    env = os.environ.get("REFGAME_FIXTURES")
    if env:
        return Path(env)
    return Path(str(resources.files("refgame") / "fixtures"))


def default_stakes(game_kind: str, instance, costs: CostCfg, fee: int, multiplier: int = 2) -> tuple[int, int]:
    """(prize, deposit): a multiple of the solving outlay, four times the larger of fee and game cost."""
    f = get_game(game_kind).spec(instance).round_bound_f
    return multiplier * (costs.solve + fee), 4 * max(fee, costs.check + f * costs.round)


@dataclass
class RunReport:
    scenario: str
    seed: int
    protocol: str
    status: str
    accepted: Optional[str]
    correct: Optional[bool]
    payoffs: list[PayoffRecord]
    budget: BudgetReport
    board_bytes: dict[str, int]
    conserved: bool
    ledger_snapshot: str
    transcripts: list[str]
    board_dump: str
    game: str = ""

    def render(self) -> str:
        lines = [f"scenario|{self.scenario}", f"seed|{self.seed}", f"protocol|{self.protocol}",
                 f"status|{self.status}", f"accepted|{self.accepted or '-'}",
                 f"accepted_correct|{'-' if self.correct is None else str(self.correct).lower()}",
                 f"conserved|{str(self.conserved).lower()}"]
        lines += [f"bytes|{g}|{n}" for g, n in sorted(self.board_bytes.items())]
        lines.append("party|role|policy|rewards|slashes|fees|costs|net")
        for r in self.payoffs:
            lines.append(f"{r.party}|{r.role}|{r.policy}|{r.rewards}|{r.slashes}|{r.fees}|{r.costs}|{r.net}")
        return "\n".join(lines) + "\n"

    def write(self, out: Path) -> None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(self.render())
        (out / "budget.txt").write_text(self.budget.export())
        (out / "ledger.txt").write_text(self.ledger_snapshot)
        (out / "board.txt").write_text(self.board_dump)
        (out / "payoffs.txt").write_text(export_payoffs(payoff_summary(self.payoffs)))
        for k, text in enumerate(self.transcripts, 1):
            (out / f"transcript_{k:03d}.txt").write_text(text)


def load_task(cfg: ScenarioConfig, seed: int, base: Optional[Path] = None):
    game = get_game(cfg.task.game)
    if cfg.task.generate is not None:
        g = cfg.task.generate
        inst, _ = gen_fixture(cfg.task.game, g.size, seed if g.seed is None else g.seed, **g.options)
        return inst
    name = cfg.task.instance_file
    candidates = [Path(name)] if Path(name).is_absolute() else [fixture_dir() / name]
    if base is not None and not Path(name).is_absolute():
        candidates.append(base / name)
    for path in candidates:
        if path.is_file():
            try:
                return game.loads(path.read_text())
            except ValueError as exc:
                raise ConfigError("task.instance_file", f"{path}: {exc}") from exc
    raise ConfigError("task.instance_file", f"no such fixture {name!r}")


def run_scenario(cfg: ScenarioConfig, seed: Optional[int] = None, base: Optional[Path] = None) -> RunReport:
    seed = cfg.seed if seed is None else seed
    try:
        game = get_game(cfg.task.game)
    except GameConfigError as exc:
        raise ConfigError("task.game", str(exc)) from exc
    task = load_task(cfg, seed, base)
    fee = cfg.fees.submission
    prize, deposit = default_stakes(cfg.task.game, game.solve(task), cfg.costs, fee, cfg.task.prize_multiplier)
    spec = TaskSpec(cfg.task.game, task, cfg.task.prize or prize,
                    cfg.task.min_deposit_prover or deposit, cfg.task.min_deposit_challenger or deposit,
                    cfg.task.min_quality, fee, cfg.task_giver.id, cfg.task.deadlines.model_dump())
    ledger, board, book = Ledger(), Board(), PayoffBook()
    board.attach(ledger)
    board_listener = ledger.listener

    def listen(kind: str, info: dict) -> None:
        board_listener(kind, info)
        book.on_event(kind, info)

    ledger.listener = listen
    costs = CostModel(cfg.costs.solve, cfg.costs.check, cfg.costs.sample, cfg.costs.round)
    if cfg.task_giver.funds:
        ledger.fund(spec.task_giver, cfg.task_giver.funds)
    book.register(spec.task_giver, "task_giver", "-")

    provers, challengers = [], []
    for a in cfg.agents:
        try:
            agent = AgentStrategy(a.role, a.strategy, cfg.task.game, seed, a.id,
                                  ErrorModel(a.error_model) if a.error_model else None,
                                  a.probability, a.samples, costs)
        except GameConfigError as exc:
            raise ConfigError(f"agents.{a.id}", str(exc)) from exc
        part = Participant(a.id, agent, a.deposit, a.top_up, a.reveal, a.challenges, a.token)
        if a.funds:
            ledger.fund(a.id, a.funds)
        book.register(a.id, a.role, agent.label)
        (provers if a.role == PROVER else challengers).append(part)

    ctx = Context(spec, ledger, board, book, seed)
    kind = cfg.protocol.kind
    if kind == "competition":
        res = run_competition(ctx, provers, challengers)
        status = "ok"
    elif kind == "contract":
        res = run_contract(ctx, provers, challengers)
        status = "ok"
    else:
        res = run_incentive_round(ctx, provers[0], challengers, cfg.protocol.subcommittee_size,
                                  cfg.protocol.nominal_reward, cfg.protocol.quorum)
        status = res.status
    accepted_inst = res.accepted_instance
    correct = None if accepted_inst is None else game.is_correct(accepted_inst)
    return RunReport(cfg.scenario, seed, kind, status, res.accepted, correct,
                     list(book.records.values()), budget_report(ctx.transcripts),
                     board.bytes_by_game(), ledger.conservation_check(), ledger.snapshot(),
                     list(ctx.exports),
                     board.dump(), cfg.task.game)

