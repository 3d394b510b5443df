"""
The general attack: committing to a strategy
============================================

Bob locks 2m+1 in a mirror contract that replays the escrow and refunds him
only if he played "commit, then reveal 1". A uniqueness contract locks 4m+3
more and pays Alice if she can show two signed runs where Bob moved
differently. Here m bounds any payoff of the escrow. Together they make
Bob's strategy credible, and a rational Alice pays.
"""

from escrowlab import FraudProof, check_axioms, check_fraud_proof, load_fixture, run_scenario

cfg = load_fixture("s4_2_general_attack")
m = check_axioms(cfg.protocol()).m
print(f"m = {m}: mirror deposit {2 * m + 1}, uniqueness deposit {4 * m + 3}")

t = run_scenario(cfg)
print("sigma1:", t.outcome, tuple(t.escrow_utility), tuple(t.aux_utility), "extortion", t.extortion)

###############################################################################
# Every unilateral deviation by Bob, in the real escrow run or in the
# mirrored one, leaves him worse off than following the script.

sigma1, lie = "commit:1,reveal:1", "commit:0,reveal:0"
for esc, mir in [(sigma1, lie), (lie, sigma1), (lie, lie), ("commit:1,reveal:idle", sigma1)]:
    d = run_scenario(cfg.replace(escrow_script=esc, mirror_script=mir))
    print(f"escrow {esc:22s} mirror {mir:22s} bob total {d.utility.u_bob:>6}")

###############################################################################
# A two-faced run is caught by a fraud proof that anyone can check offline.

two_faced = run_scenario(cfg.replace(escrow_script="commit:0,reveal:0"))
proof = FraudProof.from_dict(two_faced.fraud_proofs[0])
print(check_fraud_proof(two_faced, proof))

###############################################################################
# Only a buyer who punishes at her own cost breaks the attack.

p = run_scenario(cfg.replace(alice_policy="PUNITIVE"))
print("punitive:", p.outcome, "alice", p.utility.u_alice, "bob", p.utility.u_bob)
