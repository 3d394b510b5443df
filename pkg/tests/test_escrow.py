import pytest

from escrowlab import commitment
from escrowlab.errors import (AlreadyDeclared, DefenseDisabled, HashMismatch, InvalidChoice,
                              NotParty, WrongDepositAmount, WrongPhase)
from escrowlab.escrow import (ALICE, BOB, Action, ClassicalEscrow, CommitRevealEscrow,
                              EscrowContract, PayoutResult, SafeRemotePurchase, Stage,
                              classical_payout, deposits_for, guess_opponent, make_protocol,
                              net_payoffs)
from escrowlab.ledger import Ledger

from conftest import SAMPLED_X
from oracles import NET_MATRIX, PAYOUT_TABLE


@pytest.mark.parametrize("x", SAMPLED_X)
@pytest.mark.parametrize("profile", sorted(PAYOUT_TABLE))
def test_payout_table(x, profile):
    a, b, burn = PAYOUT_TABLE[profile]
    assert classical_payout(*profile, x) == PayoutResult(a * x, b * x, burn * x)
    na, nb = NET_MATRIX[profile]
    assert net_payoffs(*profile, x) == (na * x, nb * x)


def test_payout_conserves_deposits():
    for profile in PAYOUT_TABLE:
        for variant in ("standard", "symmetric"):
            p = classical_payout(*profile, 7, variant)
            assert p.total == sum(deposits_for(7, variant).values())


def test_invalid_choice():
    with pytest.raises(InvalidChoice):
        classical_payout(2, 0, 1)


def test_bad_parameters():
    with pytest.raises(ValueError):
        ClassicalEscrow(x=0)
    with pytest.raises(ValueError):
        ClassicalEscrow(x=1, phase1_end=3, delivery_deadline=2)
    with pytest.raises(ValueError):
        CommitRevealEscrow(x=1, delivery_deadline=2, commit_end=2)
    with pytest.raises(ValueError):
        make_protocol("nope", x=1)


def _run(proto, moves, rounds=None):
    """Drive a protocol state: ``moves`` maps round -> [(role, Action)]."""
    s = proto.new_state()
    for r in range(rounds or proto.phase3_end):
        for role, act in moves.get(r, []):
            proto.apply(s, role, act, r)
        proto.close_round(s, r)
    return s


def _deposits(proto):
    return {0: [(ALICE, Action("deposit", amount=proto.deposits()[ALICE])),
                (BOB, Action("deposit", amount=proto.deposits()[BOB]))]}


def test_classical_defaults_to_one():
    p = ClassicalEscrow(x=10)
    s = _run(p, _deposits(p))
    assert s.outcome == "agree1" and s.defaulted == {ALICE: True, BOB: True}
    assert p.net(s) == (-10, 10)


def test_classical_declarations():
    p = ClassicalEscrow(x=10)
    moves = _deposits(p)
    moves[p.delivery_deadline] = [(ALICE, Action("declare", choice=0)), (BOB, Action("declare", choice=0))]
    s = _run(p, moves)
    assert s.outcome == "agree0" and p.net(s) == (0, 0)


def test_classical_phase_rules():
    p = ClassicalEscrow(x=10)
    s = p.new_state()
    with pytest.raises(WrongDepositAmount):
        p.apply(s, ALICE, Action("deposit", amount=10), 0)
    with pytest.raises(WrongPhase):
        p.apply(s, ALICE, Action("declare", choice=0), 0)
    with pytest.raises(NotParty):
        p.apply(s, "carol", Action("declare", choice=0), 0)
    f = p.funded_state()
    assert f.stage == Stage.DECLARE
    p.apply(f, BOB, Action("declare", choice=1), p.delivery_deadline)
    with pytest.raises(AlreadyDeclared):
        p.apply(f, BOB, Action("declare", choice=0), p.delivery_deadline)
    with pytest.raises(WrongPhase):
        p.apply(f, ALICE, Action("declare", choice=0), p.phase3_end)


def test_missing_deposit_aborts_with_refund():
    p = ClassicalEscrow(x=10)
    s = _run(p, {0: [(ALICE, Action("deposit", amount=20))]})
    assert s.outcome == "aborted" and s.payout == PayoutResult(20, 0, 0)


def test_failed_call_leaves_state_untouched():
    p = CommitRevealEscrow(x=3)
    s = p.funded_state()
    before = s.key()
    with pytest.raises(WrongPhase):
        p.apply(s, ALICE, Action("reveal", choice=0, nonce=bytes(32)), p.delivery_deadline)
    assert s.key() == before


def _commit_moves(p, ca, na, cb, nb):
    moves = _deposits(p)
    d = p.delivery_deadline
    moves[d] = [(ALICE, Action("commit", digest=commitment.commit(ca, na).digest)),
                (BOB, Action("commit", digest=commitment.commit(cb, nb).digest))]
    return moves


@pytest.mark.parametrize("ca,cb", sorted(PAYOUT_TABLE))
def test_commit_reveal_matches_classical_when_both_open(ca, cb):
    p = CommitRevealEscrow(x=10, phase1_end=1, delivery_deadline=2, commit_end=4, phase3_end=6)
    na, nb = b"\x01" * 32, b"\x02" * 32
    moves = _commit_moves(p, ca, na, cb, nb)
    moves[3] = [(ALICE, Action("reveal", choice=ca, nonce=na)), (BOB, Action("reveal", choice=cb, nonce=nb))]
    s = _run(p, moves)
    assert p.net(s) == net_payoffs(ca, cb, 10)


def test_commit_reveal_missing_opening_defaults():
    p = CommitRevealEscrow(x=10)
    na, nb = b"\x01" * 32, b"\x02" * 32
    moves = _commit_moves(p, 1, na, 1, nb)
    moves[p.delivery_deadline + 1] = [(BOB, Action("reveal", choice=1, nonce=nb))]
    s = _run(p, moves)
    assert s.defaulted[ALICE] and s.outcome == "agree1"
    s = _run(p, _commit_moves(p, 1, na, 1, nb))
    assert s.outcome == "agree0"


def test_bad_opening_rejected():
    p = CommitRevealEscrow(x=10)
    na, nb = b"\x01" * 32, b"\x02" * 32
    s = _run(p, _commit_moves(p, 1, na, 1, nb), rounds=p.delivery_deadline + 1)
    with pytest.raises(HashMismatch):
        p.apply(s, ALICE, Action("reveal", choice=0, nonce=na), p.delivery_deadline + 1)


def test_guess_requires_defense_and_takes_pot():
    na, nb = b"\x01" * 32, b"\x02" * 32
    off = CommitRevealEscrow(x=10)
    s = _run(off, _commit_moves(off, 1, na, 1, nb), rounds=off.delivery_deadline + 1)
    with pytest.raises(DefenseDisabled):
        off.apply(s, ALICE, Action("guess", choice=1, nonce=nb), off.delivery_deadline + 1)

    on = CommitRevealEscrow(x=10, guess_window=True)
    s = _run(on, _commit_moves(on, 1, na, 1, nb), rounds=on.delivery_deadline + 1)
    wrong, res = guess_opponent(on, s, ALICE, 0, nb, on.delivery_deadline + 1)
    assert res == {"guess": "wrong"} and not wrong.settled
    won, res = guess_opponent(on, s, ALICE, 1, nb, on.delivery_deadline + 1)
    assert won.outcome == "forfeit:bob" and on.net(won) == (10, -10)
    assert not s.settled  # guess_opponent works on a copy


def test_safe_remote_purchase():
    p = SafeRemotePurchase(x=5)
    s = _run(p, _deposits(p))
    assert s.outcome == "locked" and s.payout.locked == 15
    moves = _deposits(p)
    moves[p.delivery_deadline] = [(ALICE, Action("confirm"))]
    s = _run(p, moves)
    assert p.net(s) == (-5, 5)
    with pytest.raises(NotParty):
        p.apply(p.funded_state(), BOB, Action("confirm"), p.delivery_deadline)


def test_contract_on_ledger_moves_money(ledger):
    p = ClassicalEscrow(x=100)
    eid = ledger.deploy(EscrowContract(p, "alice", "bob"), "alice")
    ledger.submit(ledger.make_call("alice", eid, "deposit", 200))
    ledger.submit(ledger.make_call("bob", eid, "deposit", 100))
    while ledger.round < p.phase3_end:
        if ledger.round == p.delivery_deadline:
            ledger.submit(ledger.make_call("alice", eid, "declare", 0))
            ledger.submit(ledger.make_call("bob", eid, "declare", 1))
        ledger.finalize_round()
    assert ledger.contracts[eid].state.outcome == "disagree"
    assert ledger.balance_of("alice") == 800 and ledger.balance_of("bob") == 900
    assert ledger.burned == 300 and ledger.conservation_gap() == 0


def test_contract_rejects_strangers():
    led = Ledger(seed=1)
    for who in ("alice", "bob", "carol"):
        led.create_account(100, who)
    eid = led.deploy(EscrowContract(ClassicalEscrow(x=1), "alice", "bob"), "alice")
    led.submit(led.make_call("carol", eid, "deposit", 2))
    led.finalize_round()
    assert led.entries_for(eid, status="rejected")[0].reason.startswith("NotParty")
    assert led.balance_of("carol") == 100
