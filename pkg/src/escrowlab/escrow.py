"""Escrow contracts as explicit state machines.

Each escrow variant is an :class:`EscrowProtocol`: a pure description of the
three-phase lifecycle (deposits, delivery window, interaction) together with
its payout rule. The same protocol object drives

* the on-ledger :class:`EscrowContract`,
* exhaustive run enumeration for the axiom checker,
* game-tree construction, and
* Phase-3 replay inside the auxiliary mirror contract.

Roles are the strings ``"alice"`` (buyer) and ``"bob"`` (seller).
"""

from __future__ import annotations

import copy
import hashlib
from dataclasses import asdict, dataclass, field
from enum import IntEnum
from typing import ClassVar, Sequence

from . import commitment
from .errors import (
    AlreadyCommitted,
    AlreadyDeclared,
    AlreadyRevealed,
    ContractError,
    DefenseDisabled,
    GuessWindowClosed,
    HashMismatch,
    InvalidChoice,
    NotParty,
    WrongDepositAmount,
    WrongPhase,
)
from .ledger import Contract, SignedCall

ALICE = "alice"
BOB = "bob"
ROLES = (ALICE, BOB)


def other(role: str) -> str:
    return BOB if role == ALICE else ALICE


class Stage(IntEnum):
    DEPOSIT = 0
    DELIVERY = 1
    DECLARE = 2
    COMMIT = 3
    REVEAL = 4
    SETTLED = 5


# Tie-break order used everywhere actions are ranked: 0 < 1 < guess < no-op.
_KIND_RANK = {"deposit": 0, "declare": 1, "commit": 1, "reveal": 1, "confirm": 1,
              "wager": 2, "guess": 3}


@dataclass(frozen=True)
class Action:
    kind: str
    choice: int | None = None
    nonce: bytes | None = None
    digest: bytes | None = None
    amount: int | None = None

    def args(self) -> tuple:
        if self.kind in ("deposit", "wager"):
            return (self.amount,)
        if self.kind == "declare":
            return (self.choice,)
        if self.kind == "commit":
            return (self.digest,)
        if self.kind in ("reveal", "guess"):
            return (self.choice, self.nonce)
        return ()

    @classmethod
    def from_call(cls, function: str, args: Sequence) -> Action:
        try:
            if function in ("deposit", "wager"):
                (amount,) = args
                return cls(function, amount=int(amount))
            if function == "declare":
                (choice,) = args
                return cls("declare", choice=choice)
            if function == "commit":
                (digest,) = args
                return cls("commit", digest=bytes(digest))
            if function in ("reveal", "guess"):
                choice, nonce = args
                return cls(function, choice=choice, nonce=bytes(nonce))
            if function == "confirm" and not args:
                return cls("confirm")
        except (TypeError, ValueError):
            pass
        raise WrongPhase(f"unknown or malformed escrow function {function!r}")

    def label(self) -> str:
        if self.kind in ("declare", "commit", "reveal", "guess"):
            if self.kind == "commit" and self.choice is None:
                return f"commit:{self.digest.hex()[:8]}"
            if self.kind == "guess" and self.choice is None:
                return "guess"
            return f"{self.kind}:{self.choice}"
        if self.kind in ("deposit", "wager"):
            return f"{self.kind}:{self.amount}"
        return self.kind

    def sort_key(self) -> tuple:
        return (_KIND_RANK.get(self.kind, 9), self.choice if self.choice is not None else -1,
                self.amount or 0, self.nonce or b"", self.digest or b"", self.kind)


@dataclass(frozen=True)
class PayoutResult:
    pay_alice: int
    pay_bob: int
    burned: int
    locked: int = 0

    @property
    def total(self) -> int:
        return self.pay_alice + self.pay_bob + self.burned + self.locked

    def to_dict(self) -> dict:
        return asdict(self)


def deposits_for(x: int, deposit_variant: str = "standard") -> dict[str, int]:
    """Required deposits: Alice ``2x`` and Bob ``x`` (``2x`` each when symmetric)."""
    if deposit_variant == "standard":
        return {ALICE: 2 * x, BOB: x}
    if deposit_variant == "symmetric":
        return {ALICE: 2 * x, BOB: 2 * x}
    raise ValueError(f"unknown deposit variant {deposit_variant!r}")


def classical_payout(choice_alice: int, choice_bob: int, x: int,
                     deposit_variant: str = "standard") -> PayoutResult:
    """Payout table of the two-party escrow.

    Agreement on 0 refunds both deposits, agreement on 1 moves ``x`` from
    Alice to Bob, and any disagreement burns everything.
    """
    for c in (choice_alice, choice_bob):
        if c not in (0, 1):
            raise InvalidChoice(f"choice must be 0 or 1, got {c!r}")
    dep = deposits_for(x, deposit_variant)
    if choice_alice == choice_bob == 0:
        return PayoutResult(dep[ALICE], dep[BOB], 0)
    if choice_alice == choice_bob == 1:
        return PayoutResult(dep[ALICE] - x, dep[BOB] + x, 0)
    return PayoutResult(0, 0, dep[ALICE] + dep[BOB])


def net_payoffs(choice_alice: int, choice_bob: int, x: int) -> tuple[int, int]:
    """Payout minus deposits, as ``(alice_net, bob_net)``."""
    dep = deposits_for(x)
    p = classical_payout(choice_alice, choice_bob, x)
    return p.pay_alice - dep[ALICE], p.pay_bob - dep[BOB]


def canonical_opening(role: str, choice: int) -> tuple[int, bytes]:
    """Fixed opening used when enumerating runs instead of a secret nonce."""
    return choice, hashlib.sha256(f"canonical-opening:{role}:{choice}".encode()).digest()


@dataclass
class MoveContext:
    """What a role can do beyond the contract state: its own openings and any
    openings of the opponent it has learned."""

    own: Sequence[tuple[int, bytes]] = ()
    known: Sequence[tuple[int, bytes]] = ()
    exhaustive: bool = False
    amount_domain: Sequence[int] = (1,)

    @classmethod
    def canonical(cls, role: str, exhaustive: bool = True, amount_domain=(1,),
                  know_opponent: bool = True) -> MoveContext:
        own = [canonical_opening(role, c) for c in (0, 1)]
        known = [canonical_opening(other(role), c) for c in (0, 1)] if know_opponent else []
        return cls(own, known, exhaustive, tuple(amount_domain))


def _role_dict(value):
    return field(default_factory=lambda: {ALICE: copy.copy(value), BOB: copy.copy(value)})


@dataclass
class EscrowState:
    stage: Stage = Stage.DEPOSIT
    paid: dict = _role_dict(0)
    choices: dict = _role_dict(None)
    defaulted: dict = _role_dict(False)
    hashes: dict = _role_dict(None)
    openings: dict = _role_dict(None)
    confirmed: bool = False
    settled: bool = False
    settled_at: int | None = None
    payout: PayoutResult | None = None
    outcome: str | None = None
    last_activity: int | None = None
    visited: dict = _role_dict([])
    acted: dict = _role_dict([])

    def key(self) -> str:
        return repr(self)

    def public_view(self) -> dict:
        """What anyone reading the chain can see."""
        return {
            "stage": self.stage.name,
            "paid": dict(self.paid),
            "choices": dict(self.choices),
            "hashes": {r: (h.hex() if h else None) for r, h in self.hashes.items()},
            "revealed": {r: self.openings[r] is not None for r in ROLES},
            "settled": self.settled,
            "outcome": self.outcome,
            "payout": self.payout.to_dict() if self.payout else None,
        }


@dataclass
class EscrowProtocol:
    """Shared lifecycle of every escrow variant.

    Rounds ``[0, phase1_end)`` collect deposits, ``[phase1_end,
    delivery_deadline)`` are the off-chain delivery window and
    ``[delivery_deadline, phase3_end)`` is the interaction phase. Everything
    is settled once round ``phase3_end`` (the termination time ``t``) begins.
    """

    x: int
    phase1_end: int = 1
    delivery_deadline: int = 2
    phase3_end: int = 5
    deposit_variant: str = "standard"

    name: ClassVar[str] = "abstract"
    phase3_functions: ClassVar[tuple[str, ...]] = ()
    opening_stage: ClassVar[Stage] = Stage.DECLARE
    # Whether leaving a decision to its default can differ from every action.
    idle_distinct: ClassVar[bool] = True

    def __post_init__(self):
        if isinstance(self.x, bool) or not isinstance(self.x, int) or self.x <= 0:
            raise ValueError("x must be a positive integer")
        self._check_deadlines()
        deposits_for(self.x, self.deposit_variant)

    def _check_deadlines(self):
        if not (0 < self.phase1_end < self.delivery_deadline < self.phase3_end):
            raise ValueError("deadlines must satisfy 0 < phase1_end < delivery_deadline < phase3_end")

    # -- parameters -------------------------------------------------------

    @property
    def t(self) -> int:
        return self.phase3_end

    def deposits(self) -> dict[str, int]:
        return deposits_for(self.x, self.deposit_variant)

    @property
    def total_deposits(self) -> int:
        return sum(self.deposits().values())

    def describe(self) -> dict:
        d = {k: v for k, v in asdict(self).items()}
        d["variant"] = self.name
        return d

    # -- state construction ----------------------------------------------

    def new_state(self) -> EscrowState:
        return EscrowState()

    def funded_state(self) -> EscrowState:
        """State at the first interaction round with both deposits paid."""
        s = self.new_state()
        for role, amount in self.deposits().items():
            self.apply(s, role, Action("deposit", amount=amount), 0)
        for r in range(self.delivery_deadline):
            self.close_round(s, r)
        return s

    # -- transitions ------------------------------------------------------

    def apply(self, state: EscrowState, role: str, action: Action, rnd: int):
        """Apply ``action`` by ``role`` at round ``rnd``, mutating ``state``.

        Raises a :class:`ContractError` subclass and leaves ``state``
        untouched when the action is not allowed.
        """
        if role not in ROLES:
            raise NotParty(role)
        if state.settled:
            raise WrongPhase("contract already settled")
        if action.kind == "deposit":
            result = self._deposit(state, role, action, rnd)
        else:
            if action.kind not in self.phase3_functions:
                raise WrongPhase(f"{action.kind} is not a function of this escrow")
            if not self._in_phase3(state, rnd):
                raise WrongPhase(f"{action.kind} outside the interaction phase")
            result = self._phase3(state, role, action, rnd)
            state.last_activity = rnd
        self._touch(state)
        return result

    def _in_phase3(self, state: EscrowState, rnd: int) -> bool:
        return (self.delivery_deadline <= rnd < self.phase3_end
                and Stage.DECLARE <= state.stage < Stage.SETTLED)

    def _deposit(self, state, role, action, rnd):
        if state.stage != Stage.DEPOSIT or rnd >= self.phase1_end:
            raise WrongPhase("deposits are only accepted in the first phase")
        if state.paid[role]:
            raise WrongDepositAmount("deposit already paid")
        required = self.deposits()[role]
        if action.amount != required:
            raise WrongDepositAmount(f"{role} must deposit exactly {required}")
        state.paid[role] = required
        return {"deposit": required}

    def close_round(self, state: EscrowState, rnd: int):
        """Deadline processing at the end of round ``rnd``."""
        if state.settled:
            return None
        result = None
        if rnd == self.phase1_end - 1:
            if all(state.paid[r] for r in ROLES):
                self._advance(state, Stage.DELIVERY)
            else:
                result = self._settle(state, PayoutResult(state.paid[ALICE], state.paid[BOB], 0),
                                      "aborted", rnd + 1)
        if not state.settled and rnd == self.delivery_deadline - 1:
            self._advance(state, self.opening_stage)
        if not state.settled and rnd >= self.delivery_deadline:
            result = self._close_phase3(state, rnd)
        self._touch(state)
        return result

    def _advance(self, state: EscrowState, stage: Stage):
        if stage < state.stage:
            raise AssertionError("stages only move forward")
        state.stage = stage

    def _settle(self, state: EscrowState, payout: PayoutResult, outcome: str, at: int):
        held = state.paid[ALICE] + state.paid[BOB]
        assert payout.total == held, (payout, held)
        state.payout = payout
        state.outcome = outcome
        state.settled = True
        state.settled_at = at
        self._advance(state, Stage.SETTLED)
        return {"settled": outcome, "payout": payout.to_dict()}

    def _touch(self, state: EscrowState):
        for role in ROLES:
            dp = self.decision_point(state, role)
            if dp is not None and dp not in state.visited[role]:
                state.visited[role] = state.visited[role] + [dp]

    def _record(self, state, role, dp, action):
        state.acted[role] = state.acted[role] + [(dp, action)]

    # -- subclass hooks ---------------------------------------------------

    def _phase3(self, state, role, action, rnd):
        raise NotImplementedError

    def _close_phase3(self, state, rnd):
        raise NotImplementedError

    def decision_point(self, state: EscrowState, role: str) -> str | None:
        """Name of the decision ``role`` currently faces, if any."""
        return None

    def default_rule(self, state: EscrowState, role: str) -> str | None:
        """How a missed decision is resolved at its deadline; None if undefined."""
        return None

    def moves(self, state: EscrowState, role: str, rnd: int, ctx: MoveContext) -> list[Action]:
        """Interaction-phase actions worth considering for ``role`` (no idle)."""
        return []

    def action_universe(self, role: str) -> list[Action]:
        """Representative instance of every interaction-phase action."""
        return []

    def truthful_action(self, state: EscrowState, role: str, bit: int,
                        own: Sequence[tuple[int, bytes]] = ()) -> Action | None:
        return None

    def script_for(self, role: str, bit: int) -> dict[str, tuple[str, int | None]]:
        """The truthful strategy for ``bit`` as a decision-point -> (kind, choice)
        script. ``choice=None`` accepts any value (e.g. the digest of a commit)."""
        return {}

    # -- payoffs ----------------------------------------------------------

    def net(self, state: EscrowState) -> tuple[int, int]:
        p = state.payout
        return p.pay_alice - state.paid[ALICE], p.pay_bob - state.paid[BOB]


@dataclass
class ClassicalEscrow(EscrowProtocol):
    """Each party declares a bit; missing declarations default to 1."""

    name: ClassVar[str] = "classical"
    phase3_functions: ClassVar[tuple[str, ...]] = ("declare",)
    default_choice_value: ClassVar[int | None] = 1
    idle_distinct: ClassVar[bool] = False

    def _phase3(self, state, role, action, rnd):
        if action.kind != "declare":
            raise WrongPhase(action.kind)
        if action.choice not in (0, 1) or isinstance(action.choice, bool):
            raise InvalidChoice(f"choice must be 0 or 1, got {action.choice!r}")
        if state.choices[role] is not None:
            raise AlreadyDeclared(f"{role} already declared")
        self._record(state, role, "declare", action)
        state.choices[role] = action.choice
        return {"declared": action.choice}

    def default_choice(self, state, role) -> int | None:
        return self.default_choice_value

    def default_rule(self, state, role):
        d = self.default_choice(state, role)
        return None if d is None else f"declare {d}"

    def _close_phase3(self, state, rnd):
        if rnd == self.phase3_end - 1:
            return self._finish(state, rnd + 1)
        return None

    def _finish(self, state, at):
        for role in ROLES:
            if state.choices[role] is None:
                d = self.default_choice(state, role)
                if d is None:
                    return self._unresolved(state, at)
                state.choices[role] = d
                state.defaulted[role] = True
        return self._pay(state, at)

    def _unresolved(self, state, at):
        raise AssertionError("classical escrow always has a default")

    def _pay(self, state, at):
        a, b = state.choices[ALICE], state.choices[BOB]
        payout = self.payout_for(a, b)
        outcome = f"agree{a}" if a == b else "disagree"
        return self._settle(state, payout, outcome, at)

    def payout_for(self, a: int, b: int) -> PayoutResult:
        return classical_payout(a, b, self.x, self.deposit_variant)

    def decision_point(self, state, role):
        if state.stage == Stage.DECLARE and state.choices[role] is None:
            return "declare"
        return None

    def moves(self, state, role, rnd, ctx):
        if self.decision_point(state, role) == "declare" and self._in_phase3(state, rnd):
            return [Action("declare", choice=0), Action("declare", choice=1)]
        return []

    def action_universe(self, role):
        return [Action("declare", choice=0), Action("declare", choice=1)]

    def truthful_action(self, state, role, bit, own=()):
        if self.decision_point(state, role) == "declare":
            return Action("declare", choice=bit)
        return None

    def script_for(self, role, bit):
        return {"declare": ("declare", bit)}


@dataclass
class CommitRevealEscrow(EscrowProtocol):
    """Choices are committed as hashes, then opened.

    Rounds ``[delivery_deadline, commit_end)`` accept commitments; the reveal
    stage starts early once both hashes are in. A missing or bad opening is
    replaced at ``phase3_end`` by the other party's revealed choice, or by 0
    when neither revealed. With ``guess_window`` enabled, a party that opens
    the opponent's unrevealed commitment takes the whole pot.
    """

    commit_end: int = 4
    guess_window: bool = False
    phase3_end: int = 6

    name: ClassVar[str] = "commit-reveal"
    phase3_functions: ClassVar[tuple[str, ...]] = ("commit", "reveal", "guess")
    opening_stage: ClassVar[Stage] = Stage.COMMIT

    def _check_deadlines(self):
        super()._check_deadlines()
        if not (self.delivery_deadline < self.commit_end < self.phase3_end):
            raise ValueError("commit_end must lie strictly inside the interaction phase")

    def _phase3(self, state, role, action, rnd):
        if action.kind == "commit":
            return self._commit(state, role, action, rnd)
        if action.kind == "reveal":
            return self._reveal(state, role, action, rnd)
        return self._guess(state, role, action, rnd)

    def _commit(self, state, role, action, rnd):
        if state.stage != Stage.COMMIT or rnd >= self.commit_end:
            raise WrongPhase("commit window closed")
        if state.hashes[role] is not None:
            raise AlreadyCommitted(f"{role} already committed")
        if action.digest is None or len(action.digest) != 32:
            raise WrongPhase("commitment must be a 32-byte digest")
        self._record(state, role, "commit", action)
        state.hashes[role] = action.digest
        if all(state.hashes[r] is not None for r in ROLES):
            self._advance(state, Stage.REVEAL)
        return {"committed": action.digest.hex()}

    def _reveal(self, state, role, action, rnd):
        if state.stage != Stage.REVEAL:
            raise WrongPhase("reveal stage has not started")
        if state.hashes[role] is None:
            raise WrongPhase(f"{role} has no stored commitment")
        if state.openings[role] is not None:
            raise AlreadyRevealed(f"{role} already revealed")
        if not commitment.verify(action.choice, action.nonce or b"",
                                 commitment.Commitment(state.hashes[role])):
            raise HashMismatch("opening does not match the stored hash")
        self._record(state, role, "reveal", action)
        state.openings[role] = (action.choice, action.nonce)
        state.choices[role] = action.choice
        return {"revealed": action.choice}

    def _guess(self, state, role, action, rnd):
        target = other(role)
        if not self.guess_window:
            raise DefenseDisabled("guessing is disabled for this escrow")
        if state.hashes[target] is None:
            raise WrongPhase(f"{target} has not committed")
        if state.openings[target] is not None:
            raise AlreadyRevealed(f"{target} already revealed")
        if rnd >= self.phase3_end:
            raise GuessWindowClosed("guess deadline passed")
        if not commitment.verify(action.choice, action.nonce or b"",
                                 commitment.Commitment(state.hashes[target])):
            return {"guess": "wrong"}
        self._record(state, role, "guess", action)
        pot = state.paid[ALICE] + state.paid[BOB]
        payout = PayoutResult(pot, 0, 0) if role == ALICE else PayoutResult(0, pot, 0)
        result = self._settle(state, payout, f"forfeit:{target}", rnd)
        return {"guess": "correct", **result}

    def _close_phase3(self, state, rnd):
        if state.stage == Stage.COMMIT and rnd == self.commit_end - 1:
            self._advance(state, Stage.REVEAL)
        if rnd != self.phase3_end - 1:
            return None
        revealed = {r: state.openings[r] is not None for r in ROLES}
        for role in ROLES:
            if not revealed[role]:
                opp = other(role)
                state.choices[role] = state.choices[opp] if revealed[opp] else 0
                state.defaulted[role] = True
        a, b = state.choices[ALICE], state.choices[BOB]
        outcome = f"agree{a}" if a == b else "disagree"
        return self._settle(state, classical_payout(a, b, self.x, self.deposit_variant),
                            outcome, rnd + 1)

    def decision_point(self, state, role):
        if state.stage == Stage.COMMIT and state.hashes[role] is None:
            return "commit"
        if (state.stage == Stage.REVEAL and state.hashes[role] is not None
                and state.openings[role] is None):
            return "reveal"
        return None

    def default_rule(self, state, role):
        return "match the other party's revealed choice, else 0"

    def moves(self, state, role, rnd, ctx):
        if state.settled or not self._in_phase3(state, rnd):
            return []
        out: list[Action] = []
        dp = self.decision_point(state, role)
        if dp == "commit" and rnd < self.commit_end:
            for c, n in _one_per_choice(ctx.own):
                out.append(Action("commit", choice=c, digest=commitment.commit(c, n).digest))
        elif dp == "reveal":
            stored = commitment.Commitment(state.hashes[role])
            for c, n in ctx.own:
                if commitment.verify(c, n, stored):
                    out.append(Action("reveal", choice=c, nonce=n))
                    break
            if ctx.exhaustive:
                out.append(Action("reveal", choice=1 - (out[0].choice if out else 0),
                                  nonce=bytes(32)))
        target = other(role)
        if (self.guess_window and state.hashes[target] is not None
                and state.openings[target] is None):
            stored = commitment.Commitment(state.hashes[target])
            for c, n in ctx.known:
                if commitment.verify(c, n, stored):
                    out.append(Action("guess", choice=c, nonce=n))
                    break
            if ctx.exhaustive:
                out.append(Action("guess", choice=0, nonce=bytes(32)))
        return out

    def action_universe(self, role):
        c, n = canonical_opening(role, 1)
        return [
            Action("commit", choice=1, digest=commitment.commit(c, n).digest),
            Action("reveal", choice=c, nonce=n),
            Action("guess", choice=0, nonce=bytes(32)),
        ]

    def truthful_action(self, state, role, bit, own=()):
        dp = self.decision_point(state, role)
        opening = next(((c, n) for c, n in own if c == bit), None)
        if opening is None:
            opening = canonical_opening(role, bit)
        if dp == "commit":
            return Action("commit", choice=bit, digest=commitment.commit(*opening).digest)
        if dp == "reveal":
            return Action("reveal", choice=opening[0], nonce=opening[1])
        return None

    def script_for(self, role, bit):
        return {"commit": ("commit", None), "reveal": ("reveal", bit)}


def _one_per_choice(openings):
    seen = {}
    for c, n in openings:
        seen.setdefault(c, (c, n))
    return [seen[c] for c in sorted(seen)]


@dataclass
class SafeRemotePurchase(EscrowProtocol):
    """Only Alice's confirmation releases funds; otherwise they stay locked."""

    name: ClassVar[str] = "safe-remote-purchase"
    phase3_functions: ClassVar[tuple[str, ...]] = ("confirm",)

    def _phase3(self, state, role, action, rnd):
        if role != ALICE:
            raise NotParty("only the buyer can confirm delivery")
        if state.confirmed:
            raise AlreadyDeclared("already confirmed")
        self._record(state, role, "confirm", action)
        state.confirmed = True
        state.choices[ALICE] = 1
        dep = self.deposits()
        payout = PayoutResult(dep[ALICE] - self.x, dep[BOB] + self.x, 0)
        return self._settle(state, payout, "agree1", rnd)

    def _close_phase3(self, state, rnd):
        if rnd != self.phase3_end - 1:
            return None
        total = state.paid[ALICE] + state.paid[BOB]
        return self._settle(state, PayoutResult(0, 0, 0, locked=total), "locked", rnd + 1)

    def decision_point(self, state, role):
        if role == ALICE and state.stage == Stage.DECLARE and not state.confirmed:
            return "confirm"
        return None

    def default_rule(self, state, role):
        return "funds stay locked"

    def moves(self, state, role, rnd, ctx):
        if self.decision_point(state, role) == "confirm" and self._in_phase3(state, rnd):
            return [Action("confirm")]
        return []

    def action_universe(self, role):
        return [Action("confirm")]

    def truthful_action(self, state, role, bit, own=()):
        if bit == 1 and self.decision_point(state, role) == "confirm":
            return Action("confirm")
        return None

    def script_for(self, role, bit):
        return {"confirm": ("confirm", None)} if role == ALICE and bit == 1 else {}


VARIANTS: dict[str, type[EscrowProtocol]] = {
    ClassicalEscrow.name: ClassicalEscrow,
    CommitRevealEscrow.name: CommitRevealEscrow,
    SafeRemotePurchase.name: SafeRemotePurchase,
}


def make_protocol(variant: str, **params) -> EscrowProtocol:
    from . import mutants  # registers mutant variants

    try:
        cls = VARIANTS[variant] if variant in VARIANTS else mutants.MUTANTS[variant]
    except KeyError:
        raise ValueError(f"unknown escrow variant {variant!r}") from None
    fields = cls.__dataclass_fields__
    unknown = set(params) - set(fields)
    if unknown:
        raise ValueError(f"parameters not used by {variant}: {sorted(unknown)}")
    return cls(**params)


class EscrowContract(Contract):
    """On-ledger host for an :class:`EscrowProtocol` between two accounts."""

    kind = "escrow"

    def __init__(self, protocol: EscrowProtocol, alice: str, bob: str):
        super().__init__()
        self.protocol = protocol
        self.parties = {alice: ALICE, bob: BOB}
        self.accounts = {ALICE: alice, BOB: bob}
        self.state = protocol.new_state()

    def describe(self) -> dict:
        return {"kind": self.kind, "protocol": self.protocol.describe(),
                "parties": dict(self.accounts)}

    def role_of(self, account_id: str) -> str:
        try:
            return self.parties[account_id]
        except KeyError:
            raise NotParty(f"{account_id} is not a party to {self.id}") from None

    def handle(self, call: SignedCall):
        role = self.role_of(call.caller)
        action = Action.from_call(call.function, call.args)
        was_settled = self.state.settled
        result = self.protocol.apply(self.state, role, action, call.round)
        if action.kind == "deposit":
            self.ledger.pull(call.caller, self.id, action.amount)
        if action.kind == "wager":
            self.ledger.pull(call.caller, self.id, action.amount)
        if self.state.settled and not was_settled:
            self._disburse()
        return result

    def on_round_end(self, rnd: int):
        was_settled = self.state.settled
        result = self.protocol.close_round(self.state, rnd)
        if self.state.settled and not was_settled:
            self._disburse()
        return result

    def _disburse(self):
        p = self.state.payout
        if p.pay_alice:
            self.ledger.pay(self.id, self.accounts[ALICE], p.pay_alice)
        if p.pay_bob:
            self.ledger.pay(self.id, self.accounts[BOB], p.pay_bob)
        if p.burned:
            self.ledger.burn(self.id, p.burned)
        if p.locked:
            self.ledger.lock(self.id, p.locked)


def step(protocol: EscrowProtocol, state: EscrowState, call: SignedCall, role: str):
    """Apply one signed call to a copy of ``state``; returns ``(new_state, result)``."""
    new = copy.deepcopy(state)
    result = protocol.apply(new, role, Action.from_call(call.function, call.args), call.round)
    return new, result


def classical_step(protocol: ClassicalEscrow, state, call, role):
    return step(protocol, state, call, role)


def commitreveal_step(protocol: CommitRevealEscrow, state, call, role):
    return step(protocol, state, call, role)


def safe_remote_purchase_step(protocol: SafeRemotePurchase, state, call, role):
    return step(protocol, state, call, role)


def guess_opponent(protocol: CommitRevealEscrow, state, guesser: str, claimed_choice: int,
                   claimed_nonce: bytes, rnd: int):
    new = copy.deepcopy(state)
    result = protocol.apply(new, guesser, Action("guess", choice=claimed_choice,
                                                 nonce=claimed_nonce), rnd)
    return new, result


__all__ = [
    "ALICE", "BOB", "ROLES", "Action", "ClassicalEscrow", "CommitRevealEscrow",
    "ContractError", "EscrowContract", "EscrowProtocol", "EscrowState", "MoveContext",
    "PayoutResult", "SafeRemotePurchase", "Stage", "canonical_opening", "classical_payout",
    "deposits_for", "make_protocol", "net_payoffs", "other",
]
