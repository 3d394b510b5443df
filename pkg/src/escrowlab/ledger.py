"""A deterministic, single-threaded simulated blockchain.

Time advances in integer rounds. Calls submitted during a round are queued
and applied by :meth:`Ledger.finalize_round` in the order given by an
:class:`OrderingPolicy`, which stands in for miners deciding transaction
order. Money is integral and conserved: every unit ever minted is held by
an account, held by a contract, burned, or locked.
"""

from __future__ import annotations

import copy
import hashlib
import hmac
import json
from dataclasses import dataclass, field
from typing import Any, Iterable

from .errors import (
    ContractError,
    InsufficientFunds,
    InvalidSignature,
    LedgerError,
    UnknownAccount,
)

# --------------------------------------------------------------------------
# Simulated signatures and canonical encoding
# --------------------------------------------------------------------------


def sign(key: bytes, payload: bytes) -> str:
    """Keyed tag over ``payload``. Only unforgeable inside the simulator."""
    return hmac.new(key, payload, hashlib.sha256).hexdigest()


def verify(key: bytes, payload: bytes, tag: str) -> bool:
    return hmac.compare_digest(sign(key, payload), tag)


def _enc_int(value: int) -> bytes:
    return value.to_bytes(8, "big", signed=True)


def _enc_bytes(data: bytes) -> bytes:
    return _enc_int(len(data)) + data


def _enc_str(text: str) -> bytes:
    return _enc_bytes(text.encode("utf-8"))


def _enc_arg(arg: Any) -> bytes:
    if isinstance(arg, bool):
        raise TypeError("booleans are not valid call arguments; use 0/1")
    if isinstance(arg, int):
        return b"I" + _enc_int(arg)
    if isinstance(arg, (bytes, bytearray)):
        return b"B" + _enc_bytes(bytes(arg))
    if isinstance(arg, str):
        return b"S" + _enc_str(arg)
    if isinstance(arg, SignedCall):
        return b"C" + _enc_bytes(arg.payload()) + _enc_str(arg.sig)
    if isinstance(arg, (tuple, list)):
        return b"L" + _enc_int(len(arg)) + b"".join(_enc_arg(a) for a in arg)
    raise TypeError(f"unsupported call argument type {type(arg).__name__}")


def _arg_to_json(arg: Any) -> Any:
    if isinstance(arg, int):
        return arg
    if isinstance(arg, (bytes, bytearray)):
        return {"hex": bytes(arg).hex()}
    if isinstance(arg, str):
        return arg
    if isinstance(arg, SignedCall):
        return {"call": arg.to_dict()}
    if isinstance(arg, (tuple, list)):
        return {"list": [_arg_to_json(a) for a in arg]}
    raise TypeError(f"unsupported call argument type {type(arg).__name__}")


def _arg_from_json(obj: Any) -> Any:
    if isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, dict):
        if "hex" in obj:
            return bytes.fromhex(obj["hex"])
        if "call" in obj:
            return SignedCall.from_dict(obj["call"])
        if "list" in obj:
            return tuple(_arg_from_json(a) for a in obj["list"])
    raise ValueError(f"cannot decode call argument {obj!r}")


@dataclass(frozen=True)
class SignedCall:
    """One party's invocation of a contract function at a given round."""

    caller: str
    contract: str
    function: str
    args: tuple = ()
    round: int = 0
    sig: str = ""

    def payload(self) -> bytes:
        return b"".join(
            [
                _enc_str(self.caller),
                _enc_str(self.contract),
                _enc_str(self.function),
                _enc_arg(tuple(self.args)),
                _enc_int(self.round),
            ]
        )

    def signed(self, key: bytes) -> SignedCall:
        return SignedCall(
            self.caller, self.contract, self.function, tuple(self.args), self.round,
            sign(key, self.payload()),
        )

    def verify(self, key: bytes) -> bool:
        return verify(key, self.payload(), self.sig)

    def to_dict(self) -> dict:
        return {
            "caller": self.caller,
            "contract": self.contract,
            "function": self.function,
            "args": [_arg_to_json(a) for a in self.args],
            "round": self.round,
            "sig": self.sig,
        }

    @classmethod
    def from_dict(cls, d: dict) -> SignedCall:
        return cls(
            caller=d["caller"],
            contract=d["contract"],
            function=d["function"],
            args=tuple(_arg_from_json(a) for a in d["args"]),
            round=int(d["round"]),
            sig=d["sig"],
        )


def derive_key(seed: int | str, account_id: str) -> bytes:
    return hashlib.sha256(f"escrowlab-key:{seed}:{account_id}".encode()).digest()


# --------------------------------------------------------------------------
# Ledger state
# --------------------------------------------------------------------------


@dataclass
class Account:
    id: str
    balance: int
    signing_key: bytes


@dataclass(frozen=True)
class OrderingPolicy:
    """Total order over account ids for calls submitted in the same round.

    Accounts listed in ``priority`` come first, in that order; everyone else
    follows sorted by id. Ties (same account) keep submission order.
    """

    priority: tuple[str, ...] = ()

    @classmethod
    def bob_first(cls) -> OrderingPolicy:
        return cls(("bob", "alice"))

    @classmethod
    def alice_first(cls) -> OrderingPolicy:
        return cls(("alice", "bob"))

    def rank(self, account_id: str) -> tuple[int, str]:
        try:
            return (self.priority.index(account_id), "")
        except ValueError:
            return (len(self.priority), account_id)

    def order(self, ids: Iterable[str]) -> list[str]:
        return sorted(ids, key=self.rank)


@dataclass
class LogEntry:
    round: int
    kind: str  # genesis | deploy | call | tick
    status: str  # applied | rejected
    subject: str = ""
    call: SignedCall | None = None
    reason: str | None = None
    result: Any = None
    effects: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "round": self.round,
            "kind": self.kind,
            "status": self.status,
            "subject": self.subject,
            "call": self.call.to_dict() if self.call is not None else None,
            "reason": self.reason,
            "result": self.result,
            "effects": list(self.effects),
        }

    @classmethod
    def from_dict(cls, d: dict) -> LogEntry:
        return cls(
            round=d["round"],
            kind=d["kind"],
            status=d["status"],
            subject=d.get("subject", ""),
            call=SignedCall.from_dict(d["call"]) if d.get("call") else None,
            reason=d.get("reason"),
            result=d.get("result"),
            effects=list(d.get("effects", [])),
        )


class Contract:
    """Base class for contracts hosted on a :class:`Ledger`.

    Subclasses keep all mutable data in ``self.state`` so the ledger can roll
    a contract back when a handler raises part-way through.
    """

    kind = "contract"

    def __init__(self):
        self.id: str | None = None
        self.ledger: Ledger | None = None
        self.state: Any = None

    def handle(self, call: SignedCall) -> Any:
        raise NotImplementedError

    def on_round_end(self, rnd: int) -> Any:
        return None

    def describe(self) -> dict:
        return {"kind": self.kind}


class Ledger:
    """Simulated chain hosting accounts and contracts.

    Args:
        ordering: same-round application order; defaults to Bob first.
        seed: derives the simulated signing keys.
    """

    def __init__(self, ordering: OrderingPolicy | None = None, seed: int = 0):
        self.ordering = ordering or OrderingPolicy.bob_first()
        self.seed = seed
        self.round = 0
        self.accounts: dict[str, Account] = {}
        self.contracts: dict[str, Contract] = {}
        self.contract_funds: dict[str, int] = {}
        self.log: list[LogEntry] = []
        self.burned = 0
        self.locked = 0
        self.minted = 0
        self._pending: list[tuple[int, SignedCall]] = []
        self._seq = 0
        self._effects: list[dict] | None = None

    # -- accounts ---------------------------------------------------------

    def create_account(self, initial_balance: int, label: str | None = None) -> str:
        if initial_balance < 0:
            raise ValueError("initial balance must be non-negative")
        account_id = label if label is not None else f"acct{len(self.accounts)}"
        if account_id in self.accounts or account_id in self.contracts:
            raise LedgerError(f"id {account_id!r} already in use")
        self.accounts[account_id] = Account(
            account_id, initial_balance, derive_key(self.seed, account_id)
        )
        self.minted += initial_balance
        self.log.append(
            LogEntry(
                self.round, "genesis", "applied", subject=account_id,
                effects=[{"op": "mint", "to": account_id, "amount": initial_balance}],
            )
        )
        return account_id

    def key_of(self, account_id: str) -> bytes:
        try:
            return self.accounts[account_id].signing_key
        except KeyError:
            raise UnknownAccount(account_id) from None

    def public_keys(self) -> dict[str, str]:
        """Key material per account. Exported so proofs can be checked offline."""
        return {a.id: a.signing_key.hex() for a in self.accounts.values()}

    def balance_of(self, ident: str) -> int:
        if ident in self.accounts:
            return self.accounts[ident].balance
        if ident in self.contract_funds:
            return self.contract_funds[ident]
        raise UnknownAccount(ident)

    # -- calls ------------------------------------------------------------

    def make_call(self, caller: str, contract: str, function: str, *args: Any,
                  round: int | None = None) -> SignedCall:
        rnd = self.round if round is None else round
        return SignedCall(caller, contract, function, tuple(args), rnd).signed(self.key_of(caller))

    def verify_call(self, call: SignedCall) -> bool:
        acct = self.accounts.get(call.caller)
        return acct is not None and call.verify(acct.signing_key)

    def submit(self, call: SignedCall) -> int:
        """Queue ``call`` for the current round and return its receipt number."""
        if call.caller not in self.accounts:
            raise UnknownAccount(call.caller)
        if not self.verify_call(call):
            raise InvalidSignature(f"bad signature on {call.function} from {call.caller}")
        if call.contract not in self.contracts:
            raise UnknownAccount(call.contract)
        if call.round != self.round:
            raise LedgerError(f"call stamped for round {call.round}, ledger at {self.round}")
        self._seq += 1
        self._pending.append((self._seq, call))
        return self._seq

    def deploy(self, contract: Contract, deployer: str) -> str:
        if deployer not in self.accounts:
            raise UnknownAccount(deployer)
        cid = f"{contract.kind}{len(self.contracts)}"
        contract.id = cid
        contract.ledger = self
        self.contracts[cid] = contract
        self.contract_funds[cid] = 0
        self.log.append(
            LogEntry(self.round, "deploy", "applied", subject=cid,
                     result={"deployer": deployer, **contract.describe()})
        )
        return cid

    def finalize_round(self) -> list[LogEntry]:
        """Apply pending calls in policy order, run deadline hooks, advance the round."""
        pending = sorted(self._pending, key=lambda p: (self.ordering.rank(p[1].caller), p[0]))
        self._pending = []
        applied = []
        for _, call in pending:
            entry = LogEntry(self.round, "call", "applied", subject=call.contract, call=call)
            contract = self.contracts[call.contract]
            if not self.verify_call(call):
                entry.status, entry.reason = "rejected", "InvalidSignature"
            else:
                self._run(contract, entry, lambda: contract.handle(call))
            self.log.append(entry)
            applied.append(entry)
        for cid, contract in list(self.contracts.items()):
            entry = LogEntry(self.round, "tick", "applied", subject=cid)
            self._run(contract, entry, lambda: contract.on_round_end(self.round))
            if entry.effects or entry.result is not None or entry.status != "applied":
                self.log.append(entry)
        self.round += 1
        assert self.conservation_gap() == 0, "money conservation violated"
        return applied

    def _run(self, contract: Contract, entry: LogEntry, fn) -> None:
        snapshot = copy.deepcopy(contract.state)
        self._effects = entry.effects
        try:
            entry.result = fn()
        except ContractError as exc:
            self._undo(entry.effects)
            entry.effects.clear()
            contract.state = snapshot
            entry.status = "rejected"
            entry.reason = f"{type(exc).__name__}: {exc}" if str(exc) else type(exc).__name__
        finally:
            self._effects = None

    # -- money movement used by contracts --------------------------------

    def _record(self, effect: dict) -> None:
        if self._effects is None:
            raise LedgerError("funds may only move inside a contract handler")
        self._effects.append(effect)

    def pull(self, account_id: str, cid: str, amount: int) -> None:
        acct = self.accounts.get(account_id)
        if acct is None:
            raise UnknownAccount(account_id)
        if amount < 0:
            raise ValueError("negative transfer")
        if acct.balance < amount:
            raise InsufficientFunds(f"{account_id} holds {acct.balance} < {amount}")
        self._record({"op": "transfer", "from": account_id, "to": cid, "amount": amount})
        acct.balance -= amount
        self.contract_funds[cid] += amount

    def pay(self, cid: str, account_id: str, amount: int) -> None:
        self._take(cid, amount)
        self._record({"op": "transfer", "from": cid, "to": account_id, "amount": amount})
        self.accounts[account_id].balance += amount

    def burn(self, cid: str, amount: int) -> None:
        self._take(cid, amount)
        self._record({"op": "burn", "from": cid, "amount": amount})
        self.burned += amount

    def lock(self, cid: str, amount: int) -> None:
        self._take(cid, amount)
        self._record({"op": "lock", "from": cid, "amount": amount})
        self.locked += amount

    def _take(self, cid: str, amount: int) -> None:
        if amount < 0:
            raise ValueError("negative transfer")
        if self.contract_funds[cid] < amount:
            raise LedgerError(f"contract {cid} holds {self.contract_funds[cid]} < {amount}")
        self.contract_funds[cid] -= amount

    def _undo(self, effects: list[dict]) -> None:
        for eff in reversed(effects):
            amount = eff["amount"]
            if eff["op"] == "transfer":
                src, dst = eff["from"], eff["to"]
                if dst in self.accounts:
                    self.accounts[dst].balance -= amount
                else:
                    self.contract_funds[dst] -= amount
                if src in self.accounts:
                    self.accounts[src].balance += amount
                else:
                    self.contract_funds[src] += amount
            elif eff["op"] == "burn":
                self.burned -= amount
                self.contract_funds[eff["from"]] += amount
            elif eff["op"] == "lock":
                self.locked -= amount
                self.contract_funds[eff["from"]] += amount

    # -- audits and export ------------------------------------------------

    def conservation_gap(self) -> int:
        held = sum(a.balance for a in self.accounts.values())
        held += sum(self.contract_funds.values())
        return self.minted - (held + self.burned + self.locked)

    def entries_for(self, cid: str, status: str | None = "applied") -> list[LogEntry]:
        return [
            e for e in self.log
            if e.kind == "call" and e.subject == cid and (status is None or e.status == status)
        ]

    def export_jsonl(self) -> str:
        return "".join(json.dumps(e.to_dict(), sort_keys=True) + "\n" for e in self.log)


