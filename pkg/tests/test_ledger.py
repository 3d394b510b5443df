import json

import pytest
from hypothesis import given, settings, strategies as st

from escrowlab.errors import ContractError, InsufficientFunds, InvalidSignature, LedgerError, UnknownAccount
from escrowlab.ledger import Contract, Ledger, LogEntry, OrderingPolicy, SignedCall


class Jar(Contract):
    """Test contract: ``put(n)`` pulls n, ``take(n)`` pays n back, ``burn(n)`` burns n."""

    kind = "jar"

    def __init__(self):
        super().__init__()
        self.state = {"calls": []}

    def handle(self, call):
        (n,) = call.args
        self.state["calls"].append(call.caller)
        if call.function in ("take", "burn") and n > self.ledger.balance_of(self.id):
            raise ContractError("jar is short")
        if call.function == "put":
            self.ledger.pull(call.caller, self.id, n)
        elif call.function == "take":
            self.ledger.pay(self.id, call.caller, n)
        elif call.function == "burn":
            self.ledger.burn(self.id, n)
        elif call.function == "fail_after_put":
            self.ledger.pull(call.caller, self.id, n)
            raise ContractError("changed my mind")
        return {"ok": n}


def test_signed_call_round_trip(ledger):
    call = ledger.make_call("alice", "x0", "f", 1, b"\x00\x01", "s", [2, 3])
    assert ledger.verify_call(call)
    back = SignedCall.from_dict(json.loads(json.dumps(call.to_dict())))
    assert back.payload() == call.payload() and ledger.verify_call(back)


def test_tampered_call_fails_verification(ledger):
    call = ledger.make_call("alice", "x0", "declare", 1)
    forged = SignedCall(call.caller, call.contract, call.function, (0,), call.round, call.sig)
    assert not ledger.verify_call(forged)
    other = SignedCall("bob", call.contract, call.function, call.args, call.round, call.sig)
    assert not ledger.verify_call(other)


def test_submit_checks_signature_account_and_round(ledger):
    jar = ledger.deploy(Jar(), "alice")
    good = ledger.make_call("alice", jar, "put", 1)
    bad = SignedCall("alice", jar, "put", (1,), 0, "00" * 32)
    with pytest.raises(InvalidSignature):
        ledger.submit(bad)
    with pytest.raises(UnknownAccount):
        ledger.submit(SignedCall("mallory", jar, "put", (1,), 0))
    with pytest.raises(LedgerError):
        ledger.submit(ledger.make_call("alice", jar, "put", 1, round=3))
    ledger.submit(good)


def test_bob_first_ordering_within_round(ledger):
    jar = ledger.deploy(Jar(), "alice")
    ledger.submit(ledger.make_call("alice", jar, "put", 1))
    ledger.submit(ledger.make_call("bob", jar, "put", 1))
    ledger.finalize_round()
    assert ledger.contracts[jar].state["calls"] == ["bob", "alice"]


def test_alice_first_ordering():
    led = Ledger(OrderingPolicy.alice_first())
    led.create_account(10, "alice")
    led.create_account(10, "bob")
    jar = led.deploy(Jar(), "bob")
    led.submit(led.make_call("bob", jar, "put", 1))
    led.submit(led.make_call("alice", jar, "put", 1))
    led.finalize_round()
    assert led.contracts[jar].state["calls"] == ["alice", "bob"]


def test_rejected_call_rolls_back_funds_and_state(ledger):
    jar = ledger.deploy(Jar(), "alice")
    ledger.submit(ledger.make_call("alice", jar, "fail_after_put", 5))
    ledger.finalize_round()
    assert ledger.balance_of("alice") == 1000
    assert ledger.balance_of(jar) == 0
    assert ledger.contracts[jar].state["calls"] == []
    (entry,) = ledger.entries_for(jar, status="rejected")
    assert "changed my mind" in entry.reason and entry.effects == []


def test_insufficient_funds_is_a_rejection(ledger):
    jar = ledger.deploy(Jar(), "alice")
    ledger.submit(ledger.make_call("alice", jar, "put", 5000))
    ledger.finalize_round()
    assert ledger.entries_for(jar, status="rejected")[0].reason.startswith("InsufficientFunds")
    assert issubclass(InsufficientFunds, ContractError)


def test_contract_overdraw_is_a_ledger_bug(ledger):
    class Leaky(Jar):
        def handle(self, call):
            self.ledger.pay(self.id, call.caller, 1)

    jar = ledger.deploy(Leaky(), "alice")
    ledger.submit(ledger.make_call("alice", jar, "take", 1))
    with pytest.raises(LedgerError):
        ledger.finalize_round()


def test_money_moves_only_inside_handlers(ledger):
    jar = ledger.deploy(Jar(), "alice")
    with pytest.raises(LedgerError):
        ledger.pull("alice", jar, 1)


def test_balance_of_unknown(ledger):
    with pytest.raises(UnknownAccount):
        ledger.balance_of("nobody")


def test_log_entries_round_trip(ledger):
    jar = ledger.deploy(Jar(), "alice")
    ledger.submit(ledger.make_call("bob", jar, "put", 3))
    ledger.finalize_round()
    for e in ledger.log:
        assert LogEntry.from_dict(json.loads(json.dumps(e.to_dict()))).to_dict() == e.to_dict()


ops = st.lists(st.tuples(st.sampled_from(["alice", "bob"]),
                         st.sampled_from(["put", "take", "burn", "fail_after_put"]),
                         st.integers(0, 400)), max_size=25)


@settings(max_examples=60, deadline=None)
@given(ops=ops, per_round=st.integers(1, 5))
def test_conservation_under_random_calls(ops, per_round):
    led = Ledger(seed=1)
    led.create_account(500, "alice")
    led.create_account(500, "bob")
    jar = led.deploy(Jar(), "alice")
    for i, (who, fn, n) in enumerate(ops):
        led.submit(led.make_call(who, jar, fn, n))
        if i % per_round == 0:
            led.finalize_round()  # asserts conservation internally
    led.finalize_round()
    assert led.conservation_gap() == 0
    held = led.balance_of("alice") + led.balance_of("bob") + led.balance_of(jar)
    assert held + led.burned + led.locked == led.minted == 1000
    assert min(led.balance_of("alice"), led.balance_of("bob"), led.balance_of(jar)) >= 0


def test_export_is_deterministic():
    def run():
        led = Ledger(seed=3)
        led.create_account(50, "alice")
        led.create_account(50, "bob")
        jar = led.deploy(Jar(), "bob")
        led.submit(led.make_call("alice", jar, "put", 7))
        led.finalize_round()
        return led.export_jsonl()
    assert run() == run()
