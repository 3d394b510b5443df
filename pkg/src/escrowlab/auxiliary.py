"""Contracts the seller deploys next to an escrow to make his choice credible.

* :class:`HashBoundContract` holds ``10x`` that Bob only gets back by opening
  his escrow commitment to 1.
* :class:`MirrorContract` replays the escrow's interaction phase from calls
  Bob relays (with their original signatures) and returns his ``2m+1``
  deposit only if his mirrored moves follow a fixed action script.
* :class:`UniquenessContract` holds ``4m+3`` until ``t' > t`` and pays it to
  Alice if she shows two signed run prefixes where Bob acted differently at
  the same decision point.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from typing import Callable, Sequence

from . import commitment
from .errors import (
    AlreadyClaimed,
    AlreadySettled,
    ContractError,
    InvalidProof,
    InvalidRelayedSignature,
    NotOwner,
    NotParty,
    OutOfOrderRound,
    TooEarly,
    TooLate,
    WrongDepositAmount,
    WrongPhase,
)
from .escrow import ALICE, BOB, Action, EscrowProtocol, EscrowState
from .ledger import Contract, SignedCall

ActionScript = dict  # decision point -> (kind, choice or None)


class InvalidClaim(ContractError):
    pass


def _fund(contract: Contract, call: SignedCall, owner: str, required: int) -> dict:
    if call.caller != owner:
        raise NotOwner(f"only {owner} can fund {contract.id}")
    if contract.state["funded"]:
        raise WrongDepositAmount("already funded")
    (amount,) = call.args
    if amount != required:
        raise WrongDepositAmount(f"deposit must be exactly {required}")
    contract.ledger.pull(call.caller, contract.id, amount)
    contract.state["funded"] = True
    return {"funded": amount}


class HashBoundContract(Contract):
    """Returns the deposit only against an opening of ``bound_hash`` to choice 1."""

    kind = "hashbound"

    def __init__(self, bound_hash: commitment.Commitment, deposit: int, owner: str,
                 escrow_id: str | None = None):
        super().__init__()
        self.bound_hash = bound_hash
        self.deposit = deposit
        self.owner = owner
        self.escrow_id = escrow_id
        self.state = {"funded": False, "claimed": False}

    def describe(self):
        return {"kind": self.kind, "bound_hash": self.bound_hash.hex(), "deposit": self.deposit,
                "owner": self.owner, "escrow": self.escrow_id, "required_choice": 1}

    @property
    def claimed(self) -> bool:
        return self.state["claimed"]

    def handle(self, call):
        if call.function == "fund":
            return _fund(self, call, self.owner, self.deposit)
        if call.function == "claim":
            return self.claim(*call.args)
        raise WrongPhase(f"unknown function {call.function!r}")

    def claim(self, choice: int, nonce: bytes) -> dict:
        """Release the deposit to the owner iff ``choice == 1`` opens the bound hash."""
        if not self.state["funded"]:
            raise WrongPhase("not funded")
        if self.state["claimed"]:
            raise AlreadyClaimed("deposit already released")
        if choice != 1:
            raise InvalidClaim("only an opening to choice 1 releases the deposit")
        if not commitment.verify(choice, nonce, self.bound_hash):
            raise InvalidClaim("opening does not match the bound hash")
        self.state["claimed"] = True
        self.ledger.pay(self.id, self.owner, self.deposit)
        return {"released": self.deposit}


def hashbound_claim(contract: HashBoundContract, choice: int, nonce: bytes) -> dict:
    return contract.claim(choice, nonce)


# --------------------------------------------------------------------------
# strategy scripts
# --------------------------------------------------------------------------


def script_allows(script: ActionScript, dp: str | None, action: Action) -> bool:
    if dp is None or dp not in script:
        return False
    kind, choice = script[dp]
    return action.kind == kind and (choice is None or action.choice == choice)


def script_to_json(script: ActionScript) -> dict:
    return {dp: {"kind": k, "choice": c} for dp, (k, c) in sorted(script.items())}


def script_from_json(d: dict) -> ActionScript:
    return {dp: (v["kind"], v["choice"]) for dp, v in d.items()}


class _Replayer:
    """Drives an escrow protocol's interaction phase from signed calls."""

    def __init__(self, protocol: EscrowProtocol, roles: dict[str, str]):
        self.protocol = protocol
        self.roles = roles
        self.state: EscrowState = protocol.funded_state()
        self.next_round = protocol.delivery_deadline

    def advance_to(self, rnd: int):
        while self.next_round < rnd:
            self.protocol.close_round(self.state, self.next_round)
            self.next_round += 1

    def decision_point(self, call: SignedCall) -> str | None:
        self.advance_to(call.round)
        return self.protocol.decision_point(self.state, self.roles[call.caller])

    def apply(self, call: SignedCall):
        self.advance_to(call.round)
        role = self.roles[call.caller]
        action = Action.from_call(call.function, call.args)
        return self.protocol.apply(self.state, role, action, call.round)

    def finish(self):
        self.advance_to(self.protocol.phase3_end)
        return self.state


def follows_script(protocol: EscrowProtocol, roles: dict[str, str], calls: Sequence[SignedCall],
                   script: ActionScript, player: str = BOB) -> tuple[bool, str]:
    """Check that ``player`` plays ``script`` over the replayed ``calls``.

    Every move by ``player`` must match the script entry for the decision
    point it was made at, and every scripted decision point the player
    reached must have been played.
    """
    rep = _Replayer(protocol, roles)
    for call in calls:
        role = roles.get(call.caller)
        if role == player:
            dp = rep.decision_point(call)
            action = Action.from_call(call.function, call.args)
            if not script_allows(script, dp, action):
                return False, f"{action.label()} at decision point {dp!r} departs from the script"
        try:
            rep.apply(call)
        except ContractError as exc:
            return False, f"mirrored call rejected: {type(exc).__name__}"
    state = rep.finish()
    played = {dp for dp, _ in state.acted[player]}
    for dp in state.visited[player]:
        if dp in script and dp not in played:
            return False, f"scripted decision point {dp!r} was never played"
    return True, "all moves follow the script"


# --------------------------------------------------------------------------
# commitment (mirror) contract
# --------------------------------------------------------------------------


class MirrorContract(Contract):
    """Replays relayed escrow calls; refunds Bob only if he followed ``reference_script``.

    Relays are accepted from the owner only, while the ledger round is
    before ``settle_round``. A failed check burns the deposit.
    """

    kind = "mirror"

    def __init__(self, escrow_id: str, protocol: EscrowProtocol, parties: dict[str, str],
                 owner: str, reference_script: ActionScript, deposit: int, settle_round: int,
                 verify_call: Callable[[SignedCall], bool] | None = None):
        super().__init__()
        self.escrow_id = escrow_id
        self.protocol = protocol
        self.parties = dict(parties)
        self.owner = owner
        self.reference_script = dict(reference_script)
        self.deposit = deposit
        self.settle_round = settle_round
        self._verify = verify_call
        rep = _Replayer(protocol, self.parties)
        self.state = {"funded": False, "settled": False, "verdict": None,
                      "log": [], "replayer": rep}

    def describe(self):
        return {"kind": self.kind, "escrow": self.escrow_id, "owner": self.owner,
                "deposit": self.deposit, "settle_round": self.settle_round,
                "reference_script": script_to_json(self.reference_script)}

    @property
    def mirrored_log(self) -> list[SignedCall]:
        return list(self.state["log"])

    @property
    def mirror_state(self) -> EscrowState:
        return self.state["replayer"].state

    def verify_call(self, call: SignedCall) -> bool:
        return self._verify(call) if self._verify else self.ledger.verify_call(call)

    def handle(self, call):
        if call.caller != self.owner:
            raise NotOwner("only the owner can call the mirror contract")
        if call.function == "fund":
            return _fund(self, call, self.owner, self.deposit)
        if call.function == "relay":
            (relayed,) = call.args
            return self.relay(relayed, call.round)
        if call.function == "settle":
            return self.settle(call.round)
        raise WrongPhase(f"unknown function {call.function!r}")

    def relay(self, relayed: SignedCall, now: int) -> dict:
        if not isinstance(relayed, SignedCall):
            raise InvalidRelayedSignature("relay expects a signed call")
        if self.state["settled"]:
            raise AlreadySettled("mirror already settled")
        if now >= self.settle_round:
            raise TooLate("relay window closed")
        if relayed.contract != self.escrow_id:
            raise InvalidRelayedSignature(f"call targets {relayed.contract}, not {self.escrow_id}")
        if relayed.caller not in self.parties or not self.verify_call(relayed):
            raise InvalidRelayedSignature("signature does not verify")
        if relayed.round > now:
            raise OutOfOrderRound("relayed call is from the future")
        log = self.state["log"]
        if log and relayed.round < log[-1].round:
            raise OutOfOrderRound(f"round {relayed.round} precedes {log[-1].round}")
        if relayed in log:
            raise OutOfOrderRound("call already mirrored")
        p = self.protocol
        if not (p.delivery_deadline <= relayed.round < p.phase3_end):
            raise WrongPhase("only interaction-phase calls are mirrored")
        result = self.state["replayer"].apply(relayed)
        self.state["log"] = log + [relayed]
        return {"mirrored": relayed.function, "result": result}

    def settle(self, now: int) -> dict:
        if self.state["settled"]:
            raise AlreadySettled("mirror already settled")
        if now < self.settle_round:
            raise TooEarly(f"mirror settles from round {self.settle_round}")
        ok, reason = follows_script(self.protocol, self.parties, self.state["log"],
                                    self.reference_script)
        self.state["replayer"].finish()
        self.state["settled"] = True
        self.state["verdict"] = {"consistent": ok, "reason": reason}
        if self.state["funded"]:
            if ok:
                self.ledger.pay(self.id, self.owner, self.deposit)
            else:
                self.ledger.burn(self.id, self.deposit)
        return dict(self.state["verdict"])


def mirror_relay(contract: MirrorContract, relayed: SignedCall, now: int) -> dict:
    return contract.relay(relayed, now)


def mirror_settle(contract: MirrorContract, now: int) -> dict:
    return contract.settle(now)


# --------------------------------------------------------------------------
# fraud proofs and the uniqueness contract
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FraudProof:
    prefix_a: tuple[SignedCall, ...]
    prefix_b: tuple[SignedCall, ...]

    def to_dict(self) -> dict:
        return {"prefix_a": [c.to_dict() for c in self.prefix_a],
                "prefix_b": [c.to_dict() for c in self.prefix_b]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> FraudProof:
        return cls(tuple(SignedCall.from_dict(c) for c in d["prefix_a"]),
                   tuple(SignedCall.from_dict(c) for c in d["prefix_b"]))

    @classmethod
    def from_json(cls, text: str) -> FraudProof:
        return cls.from_dict(json.loads(text))


def _check_prefix(protocol, escrow_id, parties, verify_call, prefix, label):
    rep = _Replayer(protocol, parties)
    dps = []
    last = None
    for i, call in enumerate(prefix):
        if not isinstance(call, SignedCall):
            raise InvalidProof(f"{label}[{i}] is not a signed call")
        if call.contract != escrow_id:
            raise InvalidProof(f"bad signature: {label}[{i}] targets another contract")
        if call.caller not in parties or not verify_call(call):
            raise InvalidProof(f"bad signature: {label}[{i}]")
        if last is not None and call.round < last:
            raise InvalidProof(f"bad signature: {label}[{i}] breaks round order")
        last = call.round
        if not (protocol.delivery_deadline <= call.round < protocol.phase3_end):
            raise InvalidProof(f"{label}[{i}] lies outside the interaction phase")
        dps.append(rep.decision_point(call))
        try:
            rep.apply(call)
        except ContractError as exc:
            raise InvalidProof(f"{label}[{i}] is not a valid run step ({type(exc).__name__})") from None
    return dps


def validate_fraud_proof(protocol: EscrowProtocol, escrow_id: str, parties: dict[str, str],
                         verify_call: Callable[[SignedCall], bool], proof: FraudProof,
                         accused: str = BOB) -> dict:
    """Check ``proof`` and return where the accused diverged.

    Raises:
        InvalidProof: with a reason starting ``bad signature``, ``no divergence``
            or ``divergence not attributable to Bob``, among others.
    """
    dps_a = _check_prefix(protocol, escrow_id, parties, verify_call, proof.prefix_a, "prefix_a")
    dps_b = _check_prefix(protocol, escrow_id, parties, verify_call, proof.prefix_b, "prefix_b")
    i = 0
    while i < min(len(proof.prefix_a), len(proof.prefix_b)) and proof.prefix_a[i] == proof.prefix_b[i]:
        i += 1
    if i == len(proof.prefix_a) or i == len(proof.prefix_b):
        raise InvalidProof("no divergence: one prefix extends the other")
    ca, cb = proof.prefix_a[i], proof.prefix_b[i]
    if parties.get(ca.caller) != accused or parties.get(cb.caller) != accused:
        raise InvalidProof("divergence not attributable to Bob")
    if dps_a[i] is None or dps_a[i] != dps_b[i]:
        raise InvalidProof("divergent calls are at different decision points")
    return {"index": i, "decision_point": dps_a[i]}


class UniquenessContract(Contract):
    """Locks ``4m+3`` of Bob's until ``unlock_round``; pays Alice on a valid fraud proof."""

    kind = "uniqueness"

    def __init__(self, escrow_id: str, protocol: EscrowProtocol, parties: dict[str, str],
                 owner: str, beneficiary: str, deposit: int, unlock_round: int,
                 verify_call: Callable[[SignedCall], bool] | None = None):
        super().__init__()
        if unlock_round <= protocol.t:
            raise ValueError("unlock round must come after the escrow's termination time")
        self.escrow_id = escrow_id
        self.protocol = protocol
        self.parties = dict(parties)
        self.owner = owner
        self.beneficiary = beneficiary
        self.deposit = deposit
        self.unlock_round = unlock_round
        self._verify = verify_call
        self.state = {"funded": False, "settled": False, "outcome": None}

    def describe(self):
        return {"kind": self.kind, "escrow": self.escrow_id, "owner": self.owner,
                "beneficiary": self.beneficiary, "deposit": self.deposit,
                "unlock_round": self.unlock_round}

    def verify_call(self, call):
        return self._verify(call) if self._verify else self.ledger.verify_call(call)

    def handle(self, call):
        if call.function == "fund":
            return _fund(self, call, self.owner, self.deposit)
        if call.function == "prove":
            if call.caller != self.beneficiary:
                raise NotParty("only the beneficiary may submit fraud proofs")
            a, b = call.args
            return self.prove(FraudProof(tuple(a), tuple(b)), call.round)
        if call.function == "settle":
            return self.settle(call.round)
        raise WrongPhase(f"unknown function {call.function!r}")

    def prove(self, proof: FraudProof, now: int) -> dict:
        if self.state["settled"]:
            raise AlreadySettled("uniqueness contract already settled")
        if now >= self.unlock_round:
            raise TooLate("fraud proofs are accepted only before the unlock round")
        if not self.state["funded"]:
            raise WrongPhase("not funded")
        where = validate_fraud_proof(self.protocol, self.escrow_id, self.parties,
                                     self.verify_call, proof)
        self.state["settled"] = True
        self.state["outcome"] = "fraud"
        self.ledger.pay(self.id, self.beneficiary, self.deposit)
        return {"fraud": where, "paid": self.deposit}

    def settle(self, now: int) -> dict:
        if self.state["settled"]:
            raise AlreadySettled("uniqueness contract already settled")
        if now < self.unlock_round:
            raise TooEarly(f"deposit unlocks at round {self.unlock_round}")
        self.state["settled"] = True
        self.state["outcome"] = "refund"
        if self.state["funded"]:
            self.ledger.pay(self.id, self.owner, self.deposit)
        return {"refunded": self.deposit if self.state["funded"] else 0}


def fraud_prove(contract: UniquenessContract, proof: FraudProof, now: int) -> dict:
    return contract.prove(proof, now)


def uniqueness_settle(contract: UniquenessContract, now: int) -> dict:
    return contract.settle(now)


def merge_by_round(first: Sequence[SignedCall], second: Sequence[SignedCall],
                   priority: Sequence[str]) -> list[SignedCall]:
    """Interleave two call lists by round, same-round ties by caller priority."""
    def rank(c):
        return (c.round, list(priority).index(c.caller) if c.caller in priority else len(priority))
    tagged = [(rank(c), 0, i, c) for i, c in enumerate(first)]
    tagged += [(rank(c), 1, i, c) for i, c in enumerate(second)]
    return [c for *_, c in sorted(tagged, key=lambda t: t[:3])]


def find_fraud_proof(protocol: EscrowProtocol, escrow_id: str, parties: dict[str, str],
                     verify_call: Callable[[SignedCall], bool], escrow_calls: Sequence[SignedCall],
                     mirror_calls: Sequence[SignedCall], priority: Sequence[str]) -> FraudProof | None:
    """Look for a valid proof by comparing the escrow run with the mirrored run.

    Two candidates are tried: the mirror log as relayed, and the accused's
    mirrored calls interleaved with everyone else's escrow calls.
    """
    accused = [c for c in mirror_calls if parties.get(c.caller) == BOB]
    others = [c for c in escrow_calls if parties.get(c.caller) != BOB]
    candidates = [list(mirror_calls), merge_by_round(accused, others, priority)]
    for cand in candidates:
        n = _diverge_len(escrow_calls, cand)
        proof = FraudProof(tuple(escrow_calls[:n]), tuple(cand[:n]))
        try:
            validate_fraud_proof(protocol, escrow_id, parties, verify_call, proof)
            return proof
        except InvalidProof:
            continue
    return None


def _diverge_len(a, b) -> int:
    i = 0
    while i < min(len(a), len(b)) and a[i] == b[i]:
        i += 1
    return i + 1


def parties_of(escrow) -> dict[str, str]:
    return {acct: role for role, acct in escrow.accounts.items()}


__all__ = [
    "ALICE", "BOB", "FraudProof", "HashBoundContract", "InvalidClaim", "MirrorContract",
    "UniquenessContract", "find_fraud_proof", "follows_script", "fraud_prove",
    "hashbound_claim", "merge_by_round", "mirror_relay", "mirror_settle", "parties_of",
    "script_allows", "uniqueness_settle", "validate_fraud_proof",
]
