"""
Hiding declarations behind commitments
======================================

The commit-reveal escrow hides each declaration until both are committed.
Bob can still leak his opening off-chain to prove he will reveal 1. The
guessing defense turns that leak against him, since anyone holding his
opening can claim the whole pot. A hash-bound side contract restores the
attack without leaking anything.
"""

from escrowlab import commit, load_fixture, run_scenario, verify

###############################################################################
# A commitment is SHA-256 over the choice byte and a 32-byte nonce.

nonce = bytes(range(32))
c = commit(1, nonce)
print(c.hex(), verify(1, nonce, c), verify(0, nonce, c))

###############################################################################
# Leak without the defense, leak with it, and the hash-bound contract.

for name in ("s3_3_commit_leak", "s3_4_defense", "s4_1_hashbound"):
    t = run_scenario(load_fixture(name))
    print(f"{name:18s} outcome={t.outcome:12s} escrow={tuple(t.escrow_utility)}"
          f" aux={tuple(t.aux_utility)} extortion={t.extortion}")

###############################################################################
# Why Alice gave in against the hash-bound contract: her own reasoning log.

t = run_scenario(load_fixture("s4_1_hashbound"))
for note in t.annotations["alice_reasoning"]:
    print(" ", note)
