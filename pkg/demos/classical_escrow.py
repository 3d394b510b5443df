"""
The classical escrow and its sequential gap
===========================================

Buyer Alice deposits 2x, seller Bob deposits x, and each declares whether
the good arrived. Agreement settles the trade, disagreement burns every
deposit. Played simultaneously, truth-telling is an equilibrium. Played in
ledger order, the first mover can extort the second.
"""

from escrowlab import (build_game_tree, backward_induction, classical_payout, deviation_checks,
                       is_truthful_equilibrium, load_fixture, net_payoffs, payoff_matrix,
                       run_scenario)
from escrowlab.ledger import OrderingPolicy

x = 100

###############################################################################
# Payouts and net payoffs for every pair of declarations (alice, bob).

for a in (0, 1):
    for b in (0, 1):
        p = classical_payout(a, b, x)
        print(f"({a}, {b})  paid {p.pay_alice:>4} / {p.pay_bob:>4}  burned {p.burned:>4}"
              f"  net {net_payoffs(a, b, x)}")

###############################################################################
# In the simultaneous game nobody gains by lying alone, whatever the truth is.

for truth in (0, 1):
    rows = deviation_checks(payoff_matrix(x), (truth, truth))
    print(f"truth {truth}: equilibrium={is_truthful_equilibrium(None, truth, x=x)}",
          [(r["player"], r["action"], r["payoff"]) for r in rows])

###############################################################################
# On a ledger that applies Bob's call first, Alice sees his declaration
# before she moves. Backward induction shows she agrees to pay for a good
# that never came.

game = build_game_tree(load_fixture("s2_3_classical_extortion").protocol(),
                       OrderingPolicy.bob_first(), ground_truth=0)
profile, value = backward_induction(game)
print("Bob first, not delivered:", tuple(value), "over", game.node_count(), "nodes")

game = build_game_tree(load_fixture("s2_3_classical_extortion").protocol(),
                       OrderingPolicy.alice_first(), ground_truth=1)
print("Alice first, delivered:  ", tuple(backward_induction(game)[1]))

###############################################################################
# The full simulation agrees, and a buyer who punishes pays for it.

for name in ("s2_3_classical_extortion", "s2_3_punitive"):
    t = run_scenario(load_fixture(name))
    print(f"{name:28s} outcome={t.outcome:9s} alice={t.utility.u_alice:>5}"
          f" bob={t.utility.u_bob:>5} extortion={t.extortion}")
