"""Simulated escrow smart contracts, extortion attacks on them, and their game theory."""

from .auxiliary import (FraudProof, HashBoundContract, MirrorContract, UniquenessContract,
                        find_fraud_proof, validate_fraud_proof)
from .axioms import AXIOMS, AxiomReport, check_axioms
from .commitment import Commitment, commit, verify
from .config import ScenarioConfig, load_config, load_fixture, parse_config
from .escrow import (
    ALICE,
    BOB,
    ClassicalEscrow,
    CommitRevealEscrow,
    EscrowContract,
    SafeRemotePurchase,
    classical_payout,
    make_protocol,
    net_payoffs,
)
from .game import (ExtensiveGame, NormalFormGame, Utility, backward_induction, best_response,
                   build_game_tree, detect_extortion, deviation_checks, is_truthful_equilibrium,
                   payoff_matrix)
from .ledger import Ledger, OrderingPolicy, SignedCall
from .scenarios import Transcript, bound_m, check_fraud_proof, run_scenario

__version__ = "0.1.0"

__all__ = [
    "ALICE", "AXIOMS", "AxiomReport", "BOB", "ClassicalEscrow", "Commitment",
    "CommitRevealEscrow", "EscrowContract", "ExtensiveGame", "FraudProof", "HashBoundContract",
    "Ledger", "MirrorContract", "NormalFormGame", "OrderingPolicy", "SafeRemotePurchase",
    "ScenarioConfig", "SignedCall", "Transcript", "UniquenessContract", "Utility",
    "backward_induction", "best_response", "bound_m", "build_game_tree", "check_axioms",
    "check_fraud_proof", "classical_payout", "commit", "detect_extortion", "deviation_checks",
    "find_fraud_proof", "is_truthful_equilibrium", "load_config", "load_fixture",
    "make_protocol", "net_payoffs", "parse_config", "payoff_matrix", "run_scenario",
    "validate_fraud_proof", "verify",
]
