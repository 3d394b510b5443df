import json

import pytest

from escrowlab.axioms import (AXIOMS, AxiomReport, Move, check_axioms, play_profile, replay,
                              replay_witness)
from escrowlab.errors import StateSpaceTooLarge
from escrowlab.escrow import ALICE, BOB, make_protocol
from escrowlab.mutants import MUTANTS, TARGET_AXIOM

from conftest import SAMPLED_X
from oracles import witness_reproduces


@pytest.mark.parametrize("variant", ["classical", "commit-reveal"])
@pytest.mark.parametrize("x", SAMPLED_X)
def test_bundled_escrows_pass_every_axiom(variant, x):
    report = check_axioms(make_protocol(variant, x=x))
    assert report.failed() == []
    assert report.m == 2 * x  # Alice's full 2x deposit is the largest swing


def test_commit_reveal_with_guess_window_passes():
    assert check_axioms(make_protocol("commit-reveal", x=10, guess_window=True)).all_passed


@pytest.mark.parametrize("name", sorted(MUTANTS))
def test_each_mutant_fails_exactly_its_axiom(name):
    protocol = make_protocol(name, x=10)
    report = check_axioms(protocol)
    assert report.failed() == [TARGET_AXIOM[name]]
    # the witness survives JSON and replays from signed calls alone
    back = AxiomReport.from_dict(json.loads(json.dumps(report.to_dict())))
    witness = back.verdicts[TARGET_AXIOM[name]].witness
    assert witness
    calls = [m.to_call() for m in witness]
    assert [Move.from_call(c) for c in calls] == witness
    assert witness_reproduces(TARGET_AXIOM[name], protocol, report, witness)


def test_replay_witness_matches_replay():
    p = make_protocol("mutant-incentives", x=10)
    w = check_axioms(p).verdicts["incentives"].witness
    assert replay_witness(p, [m.to_call() for m in w]).key() == replay(p, w).key()


@pytest.mark.parametrize("variant", ["classical", "commit-reveal"])
def test_truthful_profiles(variant):
    p = make_protocol(variant, x=10)
    s0, _ = play_profile(p, 0)
    s1, _ = play_profile(p, 1, order=(ALICE, BOB))
    assert (s0.outcome, p.net(s0)) == ("agree0", (0, 0))
    assert (s1.outcome, p.net(s1)) == ("agree1", (-10, 10))


def test_budget_exceeded():
    with pytest.raises(StateSpaceTooLarge):
        check_axioms(make_protocol("commit-reveal", x=1), budget=10)


def test_horizon_must_reach_termination():
    with pytest.raises(ValueError):
        check_axioms(make_protocol("classical", x=1), horizon=2)


def test_report_lists_all_axioms():
    d = check_axioms(make_protocol("classical", x=1)).to_dict()
    assert list(d["verdicts"]) == list(AXIOMS) and d["all_passed"] is True
