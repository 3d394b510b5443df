import pytest
from hypothesis import given, settings, strategies as st

from escrowlab import commitment
from escrowlab.auxiliary import (FraudProof, HashBoundContract, MirrorContract, UniquenessContract,
                                 find_fraud_proof, follows_script, script_from_json, script_to_json,
                                 validate_fraud_proof)
from escrowlab.errors import InvalidProof
from escrowlab.escrow import ALICE, BOB, CommitRevealEscrow
from escrowlab.ledger import Ledger, SignedCall

PROTO = CommitRevealEscrow(x=10, phase1_end=1, delivery_deadline=2, commit_end=4, phase3_end=6)
PARTIES = {"alice": ALICE, "bob": BOB}
SIGMA1 = PROTO.script_for(BOB, 1)
EID = "escrow0"
NA, NB = b"\x0a" * 32, b"\x0b" * 32


def _ledger():
    led = Ledger(seed=11)
    led.create_account(10_000, "alice")
    led.create_account(10_000, "bob")
    return led


def _until(led, rnd):
    while led.round < rnd:
        led.finalize_round()


def _commit(led, who, choice, nonce, rnd):
    return led.make_call(who, EID, "commit", commitment.commit(choice, nonce).digest, round=rnd)


def _reveal(led, who, choice, nonce, rnd):
    return led.make_call(who, EID, "reveal", choice, nonce, round=rnd)


def _status(led, cid):
    return [e.status for e in led.log if e.subject == cid and e.kind == "call"]


# ---------------------------------------------------------------- hash-bound


def test_hashbound_claim_rules():
    led = _ledger()
    hb = HashBoundContract(commitment.commit(1, NB), 110, "bob", EID)
    cid = led.deploy(hb, "bob")
    led.submit(led.make_call("bob", cid, "claim", 1, NB))
    led.submit(led.make_call("alice", cid, "fund", 110))
    led.finalize_round()
    assert _status(led, cid) == ["rejected", "rejected"]  # not funded, not owner
    led.submit(led.make_call("bob", cid, "fund", 110))
    led.finalize_round()
    assert led.balance_of(cid) == 110 and led.balance_of("bob") == 10_000 - 110
    for args in ((0, NB), (1, NA)):
        led.submit(led.make_call("bob", cid, "claim", *args))
    led.finalize_round()
    reasons = [e.reason for e in led.entries_for(cid, status="rejected")][-2:]
    assert all(r.startswith("InvalidClaim") for r in reasons)
    led.submit(led.make_call("bob", cid, "claim", 1, NB))
    led.submit(led.make_call("bob", cid, "claim", 1, NB))
    led.finalize_round()
    assert _status(led, cid)[-2:] == ["applied", "rejected"]
    assert led.entries_for(cid, status="rejected")[-1].reason.startswith("AlreadyClaimed")
    assert led.balance_of("bob") == 10_000 and hb.claimed


# ---------------------------------------------------------------- mirror


def _mirror(led, settle_round=PROTO.t, deposit=41):
    m = MirrorContract(EID, PROTO, PARTIES, "bob", SIGMA1, deposit, settle_round)
    cid = led.deploy(m, "bob")
    led.submit(led.make_call("bob", cid, "fund", deposit))
    return m, cid


def _relay_all(led, cid, calls):
    for c in sorted(calls, key=lambda c: c.round):
        _until(led, c.round)
        led.submit(led.make_call("bob", cid, "relay", c))
    _until(led, PROTO.t)
    led.submit(led.make_call("bob", cid, "settle"))
    led.finalize_round()


def test_mirror_refunds_sigma1():
    led = _ledger()
    m, cid = _mirror(led)
    calls = [_commit(led, "bob", 1, NB, 2), _commit(led, "alice", 1, NA, 2),
             _reveal(led, "bob", 1, NB, 3), _reveal(led, "alice", 1, NA, 3)]
    _relay_all(led, cid, calls)
    assert m.state["verdict"]["consistent"] and led.balance_of("bob") == 10_000
    assert m.mirror_state.outcome == "agree1"


def test_mirror_burns_on_deviation():
    led = _ledger()
    m, cid = _mirror(led)
    _relay_all(led, cid, [_commit(led, "bob", 0, NB, 2), _commit(led, "alice", 1, NA, 2),
                          _reveal(led, "bob", 0, NB, 3)])
    assert not m.state["verdict"]["consistent"]
    assert led.balance_of("bob") == 10_000 - 41 and led.burned == 41


def test_mirror_access_and_signature_checks():
    led = _ledger()
    m, cid = _mirror(led)
    _until(led, 2)
    good = _commit(led, "bob", 1, NB, 2)
    forged = SignedCall(good.caller, good.contract, good.function, good.args, good.round, "ab" * 32)
    early = _commit(led, "bob", 1, NB, 1)
    led.submit(led.make_call("alice", cid, "relay", good))
    led.submit(led.make_call("bob", cid, "relay", forged))
    led.submit(led.make_call("bob", cid, "relay", early))
    led.submit(led.make_call("bob", cid, "settle"))
    led.finalize_round()
    reasons = [e.reason.split(":")[0] for e in led.entries_for(cid, status="rejected")]
    # same-round calls apply Bob first, so Alice's attempt comes last
    assert reasons == ["InvalidRelayedSignature", "WrongPhase", "TooEarly", "NotOwner"]
    late_alice = _commit(led, "alice", 1, NA, 3)
    led.submit(led.make_call("bob", cid, "relay", good))
    led.finalize_round()
    led.submit(led.make_call("bob", cid, "relay", late_alice))
    led.submit(led.make_call("bob", cid, "relay", _reveal(led, "alice", 1, NA, 2)))
    led.finalize_round()
    assert led.entries_for(cid, status="rejected")[-1].reason.startswith("OutOfOrderRound")
    _until(led, PROTO.t)
    led.submit(led.make_call("bob", cid, "relay", _reveal(led, "bob", 1, NB, 4)))
    led.finalize_round()
    assert led.entries_for(cid, status="rejected")[-1].reason.startswith("TooLate")
    assert m.mirrored_log == [good, late_alice]


def _sigma1_oracle(bob_choice, bob_reveals):
    """Independent reading of σ¹ for Bob: commit to anything, then open to 1."""
    return bob_choice == 1 and bob_reveals


@settings(max_examples=40, deadline=None)
@given(bob_choice=st.sampled_from([0, 1, None]), bob_reveals=st.booleans(),
       commit_round=st.integers(2, 3), reveal_delay=st.integers(0, 2),
       alice_reveals=st.booleans())
def test_mirror_fidelity(bob_choice, bob_reveals, commit_round, reveal_delay, alice_reveals):
    led = _ledger()
    m, cid = _mirror(led)
    calls = [_commit(led, "alice", 1, NA, 2)]
    if alice_reveals:
        calls.append(_reveal(led, "alice", 1, NA, 4))
    if bob_choice is not None:
        calls.append(_commit(led, "bob", bob_choice, NB, commit_round))
        if bob_reveals:
            calls.append(_reveal(led, "bob", bob_choice, NB, min(commit_round + reveal_delay, 5)))
    _relay_all(led, cid, calls)
    expected = bob_choice is not None and _sigma1_oracle(bob_choice, bob_reveals)
    assert m.state["verdict"]["consistent"] is expected
    ok, _ = follows_script(PROTO, PARTIES, m.mirrored_log, SIGMA1)
    assert ok is expected
    assert led.balance_of("bob") == 10_000 - (0 if expected else 41)
    assert led.conservation_gap() == 0


def test_script_json_round_trip():
    assert script_from_json(script_to_json(SIGMA1)) == SIGMA1


# ---------------------------------------------------------------- fraud proofs


def _verify(led):
    return led.verify_call


def test_valid_fraud_proof():
    led = _ledger()
    a = (_commit(led, "bob", 1, NB, 2),)
    b = (_commit(led, "bob", 0, NB, 2),)
    where = validate_fraud_proof(PROTO, EID, PARTIES, _verify(led), FraudProof(a, b))
    assert where == {"index": 0, "decision_point": "commit"}
    back = FraudProof.from_json(FraudProof(a, b).to_json())
    assert back == FraudProof(a, b)


@pytest.mark.parametrize("case,reason", [
    ("identical", "no divergence"),
    ("extends", "no divergence"),
    ("alice", "divergence not attributable to Bob"),
    ("forged", "bad signature"),
    ("other_contract", "bad signature"),
    ("invalid_step", "is not a valid run step"),
])
def test_invalid_fraud_proofs(case, reason):
    led = _ledger()
    c1 = _commit(led, "bob", 1, NB, 2)
    ca = _commit(led, "alice", 1, NA, 2)
    if case == "identical":
        proof = FraudProof((c1,), (c1,))
    elif case == "extends":
        proof = FraudProof((c1,), (c1, ca))
    elif case == "alice":
        proof = FraudProof((ca,), (_commit(led, "alice", 0, NA, 2),))
    elif case == "forged":
        bad = SignedCall(c1.caller, c1.contract, c1.function, c1.args, c1.round, "00" * 32)
        proof = FraudProof((c1,), (bad,))
    elif case == "other_contract":
        other = led.make_call("bob", "escrow9", "commit", commitment.commit(0, NB).digest, round=2)
        proof = FraudProof((c1,), (other,))
    else:
        proof = FraudProof((c1,), (_reveal(led, "bob", 1, NB, 2),))
    with pytest.raises(InvalidProof) as exc:
        validate_fraud_proof(PROTO, EID, PARTIES, _verify(led), proof)
    assert reason in exc.value.reason


def test_find_fraud_proof_from_two_faced_logs():
    led = _ledger()
    ca = _commit(led, "alice", 1, NA, 2)
    escrow_calls = [_commit(led, "bob", 0, NB, 2), ca]
    mirror_calls = [_commit(led, "bob", 1, NB, 2), ca]
    proof = find_fraud_proof(PROTO, EID, PARTIES, _verify(led), escrow_calls, mirror_calls,
                             ["bob", "alice"])
    assert proof is not None
    assert validate_fraud_proof(PROTO, EID, PARTIES, _verify(led), proof)["index"] == 0
    assert find_fraud_proof(PROTO, EID, PARTIES, _verify(led), escrow_calls, escrow_calls,
                            ["bob", "alice"]) is None


# ---------------------------------------------------------------- uniqueness


def _uniqueness(led, deposit=83, unlock=PROTO.t + 1):
    u = UniquenessContract(EID, PROTO, PARTIES, "bob", "alice", deposit, unlock)
    cid = led.deploy(u, "bob")
    led.submit(led.make_call("bob", cid, "fund", deposit))
    led.finalize_round()
    return u, cid


def test_uniqueness_unlock_must_follow_termination():
    with pytest.raises(ValueError):
        UniquenessContract(EID, PROTO, PARTIES, "bob", "alice", 1, PROTO.t)


def test_uniqueness_pays_alice_on_fraud_and_is_exclusive():
    led = _ledger()
    u, cid = _uniqueness(led)
    a, b = (_commit(led, "bob", 1, NB, 2),), (_commit(led, "bob", 0, NB, 2),)
    _until(led, 3)
    led.submit(led.make_call("bob", cid, "prove", a, b))
    led.submit(led.make_call("alice", cid, "settle"))
    led.submit(led.make_call("alice", cid, "prove", a, b))
    led.finalize_round()
    assert _status(led, cid)[-3:] == ["rejected", "rejected", "applied"]
    assert [e.reason.split(":")[0] for e in led.entries_for(cid, status="rejected")] == ["NotParty", "TooEarly"]
    assert u.state["outcome"] == "fraud" and led.balance_of("alice") == 10_000 + 83
    _until(led, PROTO.t + 1)
    led.submit(led.make_call("bob", cid, "settle"))
    led.finalize_round()
    assert led.entries_for(cid, status="rejected")[-1].reason.startswith("AlreadySettled")
    assert led.balance_of("bob") == 10_000 - 83


def test_uniqueness_refunds_without_proof():
    led = _ledger()
    u, cid = _uniqueness(led)
    _until(led, PROTO.t + 1)
    a, b = (_commit(led, "bob", 1, NB, 2),), (_commit(led, "bob", 0, NB, 2),)
    led.submit(led.make_call("bob", cid, "settle"))
    led.submit(led.make_call("alice", cid, "prove", a, b))
    led.finalize_round()
    assert u.state["outcome"] == "refund" and led.balance_of("bob") == 10_000
    assert led.entries_for(cid, status="rejected")[-1].reason.startswith("AlreadySettled")


def test_uniqueness_rejects_bad_proof_and_keeps_funds():
    led = _ledger()
    u, cid = _uniqueness(led)
    c1 = _commit(led, "bob", 1, NB, 2)
    led.submit(led.make_call("alice", cid, "prove", (c1,), (c1,)))
    led.finalize_round()
    assert led.entries_for(cid, status="rejected")[-1].reason.startswith("InvalidProof")
    assert led.balance_of(cid) == 83 and not u.state["settled"]


def test_uniqueness_rejects_late_proof():
    led = _ledger()
    u, cid = _uniqueness(led)
    _until(led, PROTO.t + 1)
    a, b = (_commit(led, "bob", 1, NB, 2),), (_commit(led, "bob", 0, NB, 2),)
    led.submit(led.make_call("alice", cid, "prove", a, b))
    led.finalize_round()
    assert led.entries_for(cid, status="rejected")[-1].reason.startswith("TooLate")
    assert led.balance_of(cid) == 83
