"""
Checking escrow axioms by enumeration
=====================================

Six properties are checked over every run of an escrow: separated phases,
timeout defaults (liveness), termination by round t, the agreement
payoffs, a disagreement penalty worse than -x for Alice (incentives), and
a payoff bound m (boundedness). Each mutant breaks exactly one of them.
"""

from escrowlab import check_axioms, make_protocol
from escrowlab.mutants import MUTANTS

for variant in ("classical", "commit-reveal"):
    r = check_axioms(make_protocol(variant, x=100))
    print(f"{variant:14s} all passed={r.all_passed} m={r.m} nodes={r.nodes}")

###############################################################################
# Each mutant fails one axiom and comes with a replayable witness run.

for name in sorted(MUTANTS):
    r = check_axioms(make_protocol(name, x=10))
    (failed,) = r.failed()
    witness = r.verdicts[failed].witness
    steps = ", ".join(f"r{mv.round} {mv.role} {mv.action.label()}" for mv in witness)
    print(f"{name:20s} fails {failed:12s} {r.verdicts[failed].detail}\n    witness: {steps}")
