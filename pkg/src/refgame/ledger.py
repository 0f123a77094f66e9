"""Integer money: accounts, escrows and the conservation invariant."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

PURPOSES = ("prize", "prover_deposit", "challenger_deposit", "fee")
HELD, RELEASED, SLASHED = "held", "released", "slashed"
FEE_SINK = "network"


class LedgerError(ValueError):
    pass


class InsufficientFunds(LedgerError):
    pass


class EscrowStateError(LedgerError):
    """Operation on an escrow that already reached its terminal status."""


@dataclass
class Account:
    party: str
    balance: int = 0


@dataclass
class Escrow:
    escrow_id: int
    purpose: str
    owner: str
    amount: int
    status: str = HELD


@dataclass
class Ledger:
    accounts: dict[str, Account] = field(default_factory=dict)
    escrows: dict[int, Escrow] = field(default_factory=dict)
    listener: Optional[Callable[[str, dict], None]] = None
    _ids: itertools.count = field(default_factory=itertools.count, repr=False)
    _minted: int = 0

    def __post_init__(self) -> None:
        self.account(FEE_SINK)

    # --- bookkeeping ---
    def account(self, party: str) -> Account:
        if party not in self.accounts:
            self.accounts[party] = Account(party)
        return self.accounts[party]

    def balance(self, party: str) -> int:
        return self.account(party).balance

    def _emit(self, kind: str, **info) -> None:
        if self.listener is not None:
            self.listener(kind, info)

    def _debit(self, party: str, amount: int) -> None:
        acct = self.account(party)
        if amount > acct.balance:
            raise InsufficientFunds(f"{party} holds {acct.balance}, needs {amount}")
        acct.balance -= amount

    def _credit(self, party: str, amount: int) -> None:
        self.account(party).balance += amount

    @staticmethod
    def _positive(amount: int) -> None:
        if not isinstance(amount, int) or amount <= 0:
            raise LedgerError(f"amount must be a positive integer, got {amount!r}")

    # --- operations ---
    def fund(self, party: str, amount: int) -> None:
        """Endow ``party``; the only way money enters the ledger."""
        self._positive(amount)
        self._credit(party, amount)
        self._minted += amount
        self._emit("fund", party=party, amount=amount)

    def transfer(self, src: str, dst: str, amount: int) -> None:
        self._positive(amount)
        self._debit(src, amount)
        self._credit(dst, amount)
        self._emit("transfer", src=src, dst=dst, amount=amount)

    def pay_fee(self, party: str, amount: int) -> None:
        if amount:
            self.transfer(party, FEE_SINK, amount)

    def open_escrow(self, party: str, purpose: str, amount: int) -> Escrow:
        if purpose not in PURPOSES:
            raise LedgerError(f"unknown escrow purpose {purpose!r}")
        self._positive(amount)
        self._debit(party, amount)
        esc = Escrow(next(self._ids), purpose, party, amount)
        self.escrows[esc.escrow_id] = esc
        self._emit("open_escrow", escrow=esc.escrow_id, party=party, purpose=purpose, amount=amount)
        return esc

    def top_up(self, esc: Escrow, amount: int) -> None:
        self._held(esc)
        self._positive(amount)
        self._debit(esc.owner, amount)
        esc.amount += amount
        self._emit("top_up", escrow=esc.escrow_id, amount=amount)

    def _held(self, esc: Escrow) -> None:
        if esc.status != HELD:
            raise EscrowStateError(f"escrow {esc.escrow_id} is already {esc.status}")

    def slash_and_split(self, esc: Escrow, winner: str, task_giver: str) -> tuple[int, int]:
        """Half to the winner, the rest (including any odd unit) to the task giver."""
        self._held(esc)
        if winner == esc.owner:
            raise LedgerError("an escrow owner cannot win its own slash")
        to_winner = esc.amount // 2
        to_giver = esc.amount - to_winner
        esc.status = SLASHED
        if to_winner:
            self._credit(winner, to_winner)
        self._credit(task_giver, to_giver)
        self._emit("slash", escrow=esc.escrow_id, winner=winner, task_giver=task_giver,
                   to_winner=to_winner, to_giver=to_giver)
        return to_winner, to_giver

    def forfeit(self, esc: Escrow, beneficiary: str) -> int:
        """Whole escrow to one beneficiary (withheld reveals, penalty games)."""
        self._held(esc)
        esc.status = SLASHED
        self._credit(beneficiary, esc.amount)
        self._emit("forfeit", escrow=esc.escrow_id, beneficiary=beneficiary, amount=esc.amount)
        return esc.amount

    def refund(self, esc: Escrow) -> int:
        self._held(esc)
        esc.status = RELEASED
        self._credit(esc.owner, esc.amount)
        self._emit("refund", escrow=esc.escrow_id, owner=esc.owner, amount=esc.amount)
        return esc.amount

    def pay_prize(self, esc: Escrow, winner: str) -> int:
        self._held(esc)
        if esc.purpose != "prize":
            raise LedgerError("only prize escrows pay prizes")
        esc.status = RELEASED
        self._credit(winner, esc.amount)
        self._emit("prize", escrow=esc.escrow_id, winner=winner, amount=esc.amount)
        return esc.amount

    # --- invariants ---
    def held_total(self) -> int:
        return sum(e.amount for e in self.escrows.values() if e.status == HELD)

    def grand_total(self) -> int:
        return sum(a.balance for a in self.accounts.values()) + self.held_total()

    def conservation_check(self) -> bool:
        return self.grand_total() == self._minted and all(
            a.balance >= 0 for a in self.accounts.values())

    def snapshot(self) -> str:
        lines = ["party|balance"]
        lines += [f"{a.party}|{a.balance}" for a in sorted(self.accounts.values(), key=lambda a: a.party)]
        lines.append("escrow|purpose|owner|amount|status")
        lines += [f"{e.escrow_id}|{e.purpose}|{e.owner}|{e.amount}|{e.status}" for e in self.escrows.values()]
        return "\n".join(lines) + "\n"
