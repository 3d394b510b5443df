"""Reference values and checkers that do not reuse the code under test."""

from __future__ import annotations

import hashlib
import itertools
import random

from escrowlab.axioms import replay
from escrowlab.errors import ContractError
from escrowlab.escrow import ROLES
from escrowlab.game import Decision, ExtensiveGame, Terminal

# Payout table of the classical escrow, transcribed per profile (alice, bob):
# amounts paid back by the contract, plus the burn, as multiples of x.
PAYOUT_TABLE = {
    (0, 0): (2, 1, 0),
    (0, 1): (0, 0, 3),
    (1, 0): (0, 0, 3),
    (1, 1): (1, 2, 0),
}

# The normal-form game with deposits deducted, as multiples of x.
NET_MATRIX = {
    (0, 0): (0, 0),
    (0, 1): (-2, -1),
    (1, 0): (-2, -1),
    (1, 1): (-1, 1),
}

# sha256 digests computed with openssl, e.g.
#   printf '\x01' > m; head -c 32 /dev/zero >> m; openssl dgst -sha256 m
SHA_VECTORS = {
    (1, bytes(32)): "1a7dfdeaffeedac489287e85be5e9c049a2ff6470f55cf30260f55395ac1b159",
    (0, bytes(32)): "7f9c9e31ac8256ca2f258583df262dbc7d6f68f2a03043d5c99a4ae5a7396ce9",
}


def reference_commit(choice: int, nonce: bytes) -> bytes:
    """Digest of one choice byte followed by the 32-byte nonce."""
    h = hashlib.sha256()
    h.update(bytes([choice]))
    h.update(nonce)
    return h.digest()


# --------------------------------------------------------------------------
# game trees
# --------------------------------------------------------------------------


def random_tree(rng: random.Random, max_depth: int = 4, max_branch: int = 3,
                max_decisions: int = 7, payoff_range: int = 20) -> ExtensiveGame:
    """Random perfect-information two-player tree with integer payoffs."""
    budget = [max_decisions]

    def node(depth: int):
        if depth >= max_depth or budget[0] <= 0 or (depth > 0 and rng.random() < 0.25):
            return Terminal((rng.randint(-payoff_range, payoff_range),
                             rng.randint(-payoff_range, payoff_range)))
        budget[0] -= 1
        k = rng.randint(1, max_branch)
        player = rng.choice(["alice", "bob"])
        return Decision(player, [f"a{i}" for i in range(k)], [node(depth + 1) for _ in range(k)])

    return ExtensiveGame(node(0))


def _decision_nodes(game: ExtensiveGame):
    return [(h, n) for h, n in game.nodes() if isinstance(n, Decision)]


def _outcome(node, hist, profile):
    while isinstance(node, Decision):
        a = profile[hist]
        node = node.children[node.actions.index(a)]
        hist = hist + (a,)
    return node.payoff


def _subtree_nodes(decisions, prefix):
    return [(h, n) for h, n in decisions if h[:len(prefix)] == prefix]


def brute_force_spe(game: ExtensiveGame) -> list[dict]:
    """Every pure profile that is subgame perfect, by exhaustive enumeration.

    A profile qualifies when, in every subgame, no player can raise their
    payoff by switching to any other complete strategy of their own within
    that subgame (not only one-shot deviations).
    """
    decisions = _decision_nodes(game)
    keys = [h for h, _ in decisions]
    choices = [n.actions for _, n in decisions]
    spe = []
    for combo in itertools.product(*choices):
        profile = dict(zip(keys, combo))
        if all(_no_profitable_deviation(game, decisions, profile, h, n) for h, n in decisions):
            spe.append(profile)
    return spe


def _no_profitable_deviation(game, decisions, profile, hist, node) -> bool:
    sub = _subtree_nodes(decisions, hist)
    for player, idx in (("alice", 0), ("bob", 1)):
        base = _outcome(node, hist, profile)[idx]
        mine = [(h, n) for h, n in sub if n.player == player]
        for alt in itertools.product(*(n.actions for _, n in mine)):
            trial = dict(profile)
            trial.update({h: a for (h, _), a in zip(mine, alt)})
            if _outcome(node, hist, trial)[idx] > base:
                return False
    return True


# --------------------------------------------------------------------------
# axiom witnesses
# --------------------------------------------------------------------------


def witness_reproduces(name, protocol, report, witness):
    """Replay ``witness`` from scratch and confirm the violation it claims."""
    x, t = protocol.x, protocol.t
    if name == "phases":
        s = protocol.new_state()
        accepted = []
        for r in range(max(m.round for m in witness) + 1):
            for mv in (m for m in witness if m.round == r):
                try:
                    protocol.apply(s, mv.role, mv.action, r)
                    accepted.append(mv)
                except ContractError:
                    pass
            protocol.close_round(s, r)
        return any(mv.action.kind == "deposit" and mv.round >= protocol.phase1_end
                   or mv.action.kind != "deposit" and mv.round < protocol.delivery_deadline
                   for mv in accepted)
    if name == "liveness":
        s = replay(protocol, witness, until=t - 1)
        return any(protocol.decision_point(s, r) and protocol.default_rule(s, r) is None for r in ROLES)
    if name == "termination":
        return not replay(protocol, witness, until=t).settled
    s = replay(protocol, witness)
    net = protocol.net(s)
    if name == "agreement":
        return (s.outcome, net) not in {("agree0", (0, 0)), ("agree1", (-x, x))}
    if name == "incentives":
        return s.outcome == "disagree" and net[0] >= -x
    if name == "boundedness":
        return max(map(abs, net)) > report.m
    raise AssertionError(name)
