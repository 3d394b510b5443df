"""Deliberately broken classical escrows, one per axiom.

Each mutant changes a single rule of :class:`ClassicalEscrow` so that
exactly one axiom fails. They exist to show the axiom checker can tell the
axioms apart.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar

from .errors import WrongPhase
from .escrow import ALICE, BOB, Action, ClassicalEscrow, PayoutResult, Stage


@dataclass
class EarlyDeclarationEscrow(ClassicalEscrow):
    """Accepts declarations during the delivery window (breaks phases)."""

    name: ClassVar[str] = "mutant-phases"

    def _in_phase3(self, state, rnd):
        return self.phase1_end <= rnd < self.phase3_end and Stage.DELIVERY <= state.stage < Stage.SETTLED


@dataclass
class NoDefaultEscrow(ClassicalEscrow):
    """Has no timeout default; a silent party triggers a plain refund (breaks liveness)."""

    name: ClassVar[str] = "mutant-liveness"
    default_choice_value: ClassVar[int | None] = None
    idle_distinct: ClassVar[bool] = True

    def _unresolved(self, state, at):
        return self._settle(state, PayoutResult(state.paid[ALICE], state.paid[BOB], 0),
                            "incomplete", at)


@dataclass
class LateSettlementEscrow(ClassicalEscrow):
    """Postpones settlement by a round after last-minute activity (breaks termination)."""

    name: ClassVar[str] = "mutant-termination"

    def _close_phase3(self, state, rnd):
        if rnd == self.phase3_end - 1 and state.last_activity == rnd:
            return None
        if rnd in (self.phase3_end - 1, self.phase3_end):
            return self._finish(state, rnd + 1)
        return None


@dataclass
class LopsidedAgreementEscrow(ClassicalEscrow):
    """Pays Bob one extra unit when both report delivery (breaks agreement)."""

    name: ClassVar[str] = "mutant-agreement"

    def payout_for(self, a, b):
        p = super().payout_for(a, b)
        if a == b == 1:
            return PayoutResult(p.pay_alice - 1, p.pay_bob + 1, 0)
        return p


@dataclass
class SoftPenaltyEscrow(ClassicalEscrow):
    """Refunds Alice ``x`` on disagreement instead of burning it (breaks incentives)."""

    name: ClassVar[str] = "mutant-incentives"

    def payout_for(self, a, b):
        p = super().payout_for(a, b)
        if a != b:
            return PayoutResult(self.x, 0, p.burned - self.x)
        return p


@dataclass
class OpenWagerEscrow(ClassicalEscrow):
    """Lets Bob stake any extra amount, burned on disagreement (breaks boundedness)."""

    name: ClassVar[str] = "mutant-boundedness"
    phase3_functions: ClassVar[tuple[str, ...]] = ("declare", "wager")

    def _phase3(self, state, role, action, rnd):
        if action.kind != "wager":
            return super()._phase3(state, role, action, rnd)
        if role != BOB:
            raise WrongPhase("only the seller may wager")
        if not isinstance(action.amount, int) or action.amount <= 0:
            raise WrongPhase("wager must be positive")
        state.paid[BOB] += action.amount
        return {"wager": action.amount}

    def payout_for(self, a, b):
        raise AssertionError("use _pay")

    def _pay(self, state, at):
        a, b = state.choices[ALICE], state.choices[BOB]
        extra = state.paid[BOB] - self.deposits()[BOB]
        base = ClassicalEscrow.payout_for(self, a, b)
        if a == b:
            payout = PayoutResult(base.pay_alice, base.pay_bob + extra, 0)
        else:
            payout = PayoutResult(0, 0, base.burned + extra)
        return self._settle(state, payout, f"agree{a}" if a == b else "disagree", at)

    def moves(self, state, role, rnd, ctx):
        out = super().moves(state, role, rnd, ctx)
        if role == BOB and self._in_phase3(state, rnd) and state.choices[BOB] is None:
            out += [Action("wager", amount=k) for k in ctx.amount_domain]
        return out

    def action_universe(self, role):
        return super().action_universe(role) + [Action("wager", amount=1)]


MUTANTS = {
    cls.name: cls
    for cls in (EarlyDeclarationEscrow, NoDefaultEscrow, LateSettlementEscrow,
                LopsidedAgreementEscrow, SoftPenaltyEscrow, OpenWagerEscrow)
}

TARGET_AXIOM = {
    "mutant-phases": "phases",
    "mutant-liveness": "liveness",
    "mutant-termination": "termination",
    "mutant-agreement": "agreement",
    "mutant-incentives": "incentives",
    "mutant-boundedness": "boundedness",
}
