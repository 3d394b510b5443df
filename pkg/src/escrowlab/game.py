"""Game-theoretic analysis of an escrow's interaction phase.

An escrow protocol induces a finite extensive-form game: moves happen in
rounds, within a round in the ledger's ordering, and every mover sees all
earlier on-chain actions. :func:`build_game_tree` unfolds that game,
:func:`backward_induction` solves it for subgame-perfect play, and the
normal-form helpers cover the simultaneous-declaration view of the
classical escrow.

Action ties are broken by the fixed order 0 < 1 < guess < no-op, which is the
order actions appear in at every node.
"""

from __future__ import annotations

import copy
import itertools
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping, Sequence, Union

from .auxiliary import script_allows
from .errors import ContractError, HasSimultaneousStage, StateSpaceTooLarge, UnsettledTranscript
from .escrow import ALICE, BOB, ROLES, Action, EscrowProtocol, EscrowState, MoveContext, net_payoffs
from .ledger import OrderingPolicy

PASS = "no-op"
DEFAULT_TREE_BUDGET = 10**5


@dataclass(frozen=True)
class Utility:
    u_alice: int
    u_bob: int

    def __iter__(self) -> Iterator[int]:
        return iter((self.u_alice, self.u_bob))

    def of(self, role: str) -> int:
        return self.u_alice if role == ALICE else self.u_bob

    def to_dict(self) -> dict:
        return {ALICE: self.u_alice, BOB: self.u_bob}


# --------------------------------------------------------------------------
# tree nodes
# --------------------------------------------------------------------------


@dataclass
class Terminal:
    payoff: tuple[int, int]
    outcome: str = ""

    def to_dict(self) -> dict:
        return {"type": "terminal", "payoff": list(self.payoff), "outcome": self.outcome}


@dataclass
class Decision:
    player: str
    actions: list[str]
    children: list[Node]
    round: int | None = None
    point: str | None = None

    def to_dict(self) -> dict:
        return {"type": "decision", "player": self.player, "round": self.round,
                "point": self.point, "actions": list(self.actions),
                "children": [c.to_dict() for c in self.children]}


@dataclass
class Simultaneous:
    """Players choose at once; ``children`` is keyed by one action per player."""

    players: tuple[str, ...]
    actions: dict[str, list[str]]
    children: dict[tuple[str, ...], Node]
    round: int | None = None

    def profiles(self) -> list[tuple[str, ...]]:
        return list(itertools.product(*(self.actions[p] for p in self.players)))

    def to_dict(self) -> dict:
        return {"type": "simultaneous", "players": list(self.players), "round": self.round,
                "actions": {p: list(a) for p, a in self.actions.items()},
                "children": [{"profile": list(k), "node": v.to_dict()}
                             for k, v in self.children.items()]}


Node = Union[Terminal, Decision, Simultaneous]


def _node_from_dict(d: dict) -> Node:
    if d["type"] == "terminal":
        return Terminal(tuple(d["payoff"]), d.get("outcome", ""))
    if d["type"] == "decision":
        return Decision(d["player"], list(d["actions"]),
                        [_node_from_dict(c) for c in d["children"]], d.get("round"), d.get("point"))
    return Simultaneous(tuple(d["players"]), {p: list(a) for p, a in d["actions"].items()},
                        {tuple(c["profile"]): _node_from_dict(c["node"]) for c in d["children"]},
                        d.get("round"))


@dataclass
class ExtensiveGame:
    root: Node
    meta: dict = field(default_factory=dict)

    def nodes(self) -> Iterator[tuple[tuple[str, ...], Node]]:
        """Yield ``(history, node)`` for every node, depth first."""
        stack: list[tuple[tuple[str, ...], Node]] = [((), self.root)]
        while stack:
            hist, node = stack.pop()
            yield hist, node
            if isinstance(node, Decision):
                for a, c in reversed(list(zip(node.actions, node.children))):
                    stack.append((hist + (a,), c))
            elif isinstance(node, Simultaneous):
                for prof, c in reversed(list(node.children.items())):
                    stack.append((hist + (_joint(prof),), c))

    def node_count(self) -> int:
        return sum(1 for _ in self.nodes())

    def leaves(self) -> list[tuple[tuple[str, ...], Terminal]]:
        return [(h, n) for h, n in self.nodes() if isinstance(n, Terminal)]

    def depth(self) -> int:
        return max(len(h) for h, _ in self.leaves())

    def has_simultaneous(self) -> bool:
        return any(isinstance(n, Simultaneous) for _, n in self.nodes())

    def to_dict(self) -> dict:
        return {"meta": dict(self.meta), "root": self.root.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> ExtensiveGame:
        return cls(_node_from_dict(d["root"]), dict(d.get("meta", {})))


def _joint(profile: Sequence[str]) -> str:
    return "(" + "|".join(profile) + ")"


# --------------------------------------------------------------------------
# building the game of an escrow
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ScriptConstraint:
    """An off-chain commitment: ``role`` loses ``penalty`` unless it plays ``script``."""

    role: str
    script: Mapping[str, tuple[str, int | None]]
    penalty: int
    label: str = ""

    def violated(self, state: EscrowState) -> bool:
        played = {dp for dp, _ in state.acted[self.role]}
        for dp, action in state.acted[self.role]:
            if not script_allows(self.script, dp, action):
                return True
        return any(dp in self.script and dp not in played for dp in state.visited[self.role])


def _role_order(ordering) -> list[str]:
    if ordering is None:
        return [BOB, ALICE]
    if isinstance(ordering, OrderingPolicy):
        return ordering.order(ROLES)
    return list(ordering)


class _Builder:
    def __init__(self, protocol, order, ground_truth, simultaneous, good_value, contexts,
                 constraints, budget):
        self.p = protocol
        self.order = order
        self.ground_truth = ground_truth
        self.simultaneous = simultaneous
        self.good_value = good_value
        self.ctx = contexts
        self.constraints = list(constraints)
        self.budget = budget
        self.count = 0

    def _tick(self):
        self.count += 1
        if self.count > self.budget:
            raise StateSpaceTooLarge(f"game tree exceeded {self.budget} nodes")

    def terminal(self, state: EscrowState) -> Terminal:
        a, b = self.p.net(state)
        if self.ground_truth == 1:
            a += self.good_value
        for c in self.constraints:
            if c.violated(state):
                if c.role == ALICE:
                    a -= c.penalty
                else:
                    b -= c.penalty
        return Terminal((a, b), state.outcome or "")

    def options(self, state, role, rnd, passed) -> tuple[str | None, list[tuple[str, Action | None]]]:
        """Labelled options for ``role`` this round, or an empty list if it has no turn."""
        if state.settled:
            return None, []
        key = self.p.decision_point(state, role) or "free"
        if (role, key) in passed:
            return key, []
        acts: list[tuple[str, Action | None]] = []
        seen = set()
        for act in sorted(self.p.moves(state, role, rnd, self.ctx[role]), key=Action.sort_key):
            trial = copy.deepcopy(state)
            try:
                self.p.apply(trial, role, act, rnd)
            except ContractError:
                continue
            label = act.label()
            if label in seen:
                continue
            seen.add(label)
            acts.append((label, act))
        if not acts:
            return key, []
        if self.p.idle_distinct or key == "free":
            acts.append((PASS, None))
        return key, acts

    def play(self, state, role, act, rnd, key, passed):
        s = copy.deepcopy(state)
        new_passed = passed
        if act is None:
            new_passed = passed | {(role, key)}
        else:
            self.p.apply(s, role, act, rnd)
        return s, new_passed

    def expand(self, state: EscrowState, rnd: int, idx: int, passed: frozenset) -> Node:
        self._tick()
        while True:
            if state.settled:
                return self.terminal(state)
            if rnd > self.p.phase3_end + 1:
                raise StateSpaceTooLarge("protocol did not settle; the game is unbounded")
            if self.simultaneous and idx == 0:
                movers = []
                for role in self.order:
                    key, acts = self.options(state, role, rnd, passed)
                    if acts:
                        movers.append((role, key, acts))
                if len(movers) >= 2:
                    return self._simultaneous(state, rnd, movers, passed)
            while idx < len(self.order):
                role = self.order[idx]
                key, acts = self.options(state, role, rnd, passed)
                if acts:
                    children = []
                    for label, act in acts:
                        s, np_ = self.play(state, role, act, rnd, key, passed)
                        children.append(self.expand(s, rnd, idx + 1, np_))
                    return Decision(role, [l for l, _ in acts], children, rnd,
                                    None if key == "free" else key)
                idx += 1
            state = copy.deepcopy(state)
            self.p.close_round(state, rnd)
            rnd += 1
            idx = 0

    def _simultaneous(self, state, rnd, movers, passed) -> Node:
        players = tuple(r for r, _, _ in movers)
        actions = {r: [l for l, _ in acts] for r, _, acts in movers}
        children = {}
        for combo in itertools.product(*(acts for _, _, acts in movers)):
            s, np_ = state, passed
            for (role, key, _), (_, act) in zip(movers, combo):
                try:
                    s, np_ = self.play(s, role, act, rnd, key, np_)
                except ContractError:
                    pass  # made invalid by the other mover's same-round action
            children[tuple(l for l, _ in combo)] = self.expand(s, rnd, len(self.order), np_)
        return Simultaneous(players, actions, children, rnd)


def build_game_tree(protocol: EscrowProtocol, ordering=None, ground_truth: int = 0,
                    simultaneous: bool = False, good_value: int = 0,
                    state: EscrowState | None = None, start_round: int | None = None,
                    contexts: Mapping[str, MoveContext] | None = None,
                    constraints: Sequence[ScriptConstraint] = (),
                    budget: int = DEFAULT_TREE_BUDGET) -> ExtensiveGame:
    """Unfold the interaction phase of ``protocol`` into a game tree.

    Args:
        protocol: The escrow rules.
        ordering: An :class:`OrderingPolicy` over role names, or a role
            sequence. Defaults to Bob first.
        ground_truth: Whether the good was delivered. Only matters when
            ``good_value`` is non-zero.
        simultaneous: Let all players with a pending decision in a round move
            at once instead of in sequence.
        good_value: Value of the good added to Alice's payoff when delivered.
        state, start_round: Start from an observed state instead of the
            funded state at the first interaction round.
        contexts: Openings each role can use (own and learned). Defaults to
            canonical openings of its own and no knowledge of the opponent's.
        constraints: Auxiliary commitments whose penalty is charged at every
            leaf that violates them.
        budget: Maximum number of nodes.

    Returns:
        The game; leaf payoffs are net of deposits as ``(alice, bob)``.

    Raises:
        StateSpaceTooLarge: if the tree exceeds ``budget`` nodes.
    """
    order = _role_order(ordering)
    if contexts is None:
        contexts = {r: MoveContext.canonical(r, exhaustive=False, know_opponent=False)
                    for r in ROLES}
    if state is None:
        state = protocol.funded_state()
        start_round = protocol.delivery_deadline
    elif start_round is None:
        raise ValueError("start_round is required with an explicit state")
    b = _Builder(protocol, order, ground_truth, simultaneous, good_value, contexts,
                 constraints, budget)
    root = b.expand(copy.deepcopy(state), start_round, 0, frozenset())
    meta = {"protocol": protocol.describe(), "ordering": order, "ground_truth": ground_truth,
            "simultaneous": simultaneous, "good_value": good_value,
            "constraints": [c.label or c.role for c in constraints]}
    return ExtensiveGame(root, meta)


# --------------------------------------------------------------------------
# solving
# --------------------------------------------------------------------------

Profile = dict  # history tuple -> action label


def _argmax(values: Sequence[int]) -> int:
    best = 0
    for i, v in enumerate(values):
        if v > values[best]:
            best = i
    return best


def backward_induction(game: ExtensiveGame) -> tuple[Profile, Utility]:
    """Subgame-perfect profile of a perfect-information game.

    Returns:
        ``(profile, utility)`` where ``profile`` maps every decision node's
        history to the action chosen there.

    Raises:
        HasSimultaneousStage: if the tree contains a simultaneous node.
    """
    profile: Profile = {}

    def solve(node: Node, hist: tuple) -> tuple[int, int]:
        if isinstance(node, Terminal):
            return tuple(node.payoff)
        if isinstance(node, Simultaneous):
            raise HasSimultaneousStage("backward induction needs perfect information")
        i = 0 if node.player == ALICE else 1
        vals = [solve(c, hist + (a,)) for a, c in zip(node.actions, node.children)]
        k = _argmax([v[i] for v in vals])
        profile[hist] = node.actions[k]
        return vals[k]

    a, b = solve(game.root, ())
    return profile, Utility(a, b)


def play(game: ExtensiveGame, profile: Profile) -> tuple[tuple[str, ...], Terminal]:
    """Follow ``profile`` from the root; returns the path and the leaf reached."""
    node, hist = game.root, ()
    while isinstance(node, Decision):
        a = profile[hist]
        node = node.children[node.actions.index(a)]
        hist = hist + (a,)
    if isinstance(node, Simultaneous):
        raise HasSimultaneousStage("cannot play through a simultaneous stage")
    return hist, node


def subgame(game: ExtensiveGame, history: Sequence[str]) -> ExtensiveGame:
    node = game.root
    for a in history:
        if isinstance(node, Decision):
            node = node.children[node.actions.index(a)]
        elif isinstance(node, Simultaneous):
            node = next(c for k, c in node.children.items() if _joint(k) == a)
        else:
            raise KeyError(f"history {tuple(history)} runs past a leaf")
    return ExtensiveGame(node, dict(game.meta))


# --------------------------------------------------------------------------
# normal form
# --------------------------------------------------------------------------


@dataclass
class NormalFormGame:
    """Two-player matrix game; ``payoffs[(a_alice, a_bob)] = (u_alice, u_bob)``."""

    actions: dict[str, list[Any]]
    payoffs: dict[tuple[Any, Any], tuple[int, int]]

    def payoff(self, a_alice, a_bob) -> Utility:
        return Utility(*self.payoffs[(a_alice, a_bob)])

    def to_dict(self) -> dict:
        return {"actions": {k: list(v) for k, v in self.actions.items()},
                "payoffs": [{"alice": a, "bob": b, "payoff": list(p)}
                            for (a, b), p in self.payoffs.items()]}


def payoff_matrix(x: int) -> NormalFormGame:
    """The simultaneous-declaration game of the classical escrow."""
    acts = [0, 1]
    return NormalFormGame({ALICE: acts, BOB: acts},
                          {(a, b): net_payoffs(a, b, x) for a in acts for b in acts})


def _matrix_response(m: NormalFormGame, player: str, opp_action) -> tuple[Any, int]:
    i = 0 if player == ALICE else 1
    vals = []
    for a in m.actions[player]:
        prof = (a, opp_action) if player == ALICE else (opp_action, a)
        vals.append(m.payoffs[prof][i])
    k = _argmax(vals)
    return m.actions[player][k], vals[k]


def best_response(game_or_matrix, player: str, opponent_strategy):
    """Best reply of ``player`` to a fixed opponent strategy.

    For a :class:`NormalFormGame` the opponent strategy is an action and the
    result is ``(action, payoff)``. For an :class:`ExtensiveGame` it is a
    profile covering the opponent's decision nodes and the result is
    ``(profile over player's nodes, Utility)``. Ties go to the lowest action.
    """
    if isinstance(game_or_matrix, NormalFormGame):
        return _matrix_response(game_or_matrix, player, opponent_strategy)
    game = game_or_matrix
    i = 0 if player == ALICE else 1
    mine: Profile = {}

    def solve(node, hist):
        if isinstance(node, Terminal):
            return tuple(node.payoff)
        if isinstance(node, Simultaneous):
            raise HasSimultaneousStage("best_response on trees needs perfect information")
        vals = [solve(c, hist + (a,)) for a, c in zip(node.actions, node.children)]
        if node.player != player:
            return vals[node.actions.index(opponent_strategy[hist])]
        k = _argmax([v[i] for v in vals])
        mine[hist] = node.actions[k]
        return vals[k]

    return mine, Utility(*solve(game.root, ()))


def pure_nash(m: NormalFormGame) -> list[tuple[Any, Any]]:
    """All pure-strategy Nash equilibria, by enumeration."""
    out = []
    for a in m.actions[ALICE]:
        for b in m.actions[BOB]:
            ua, ub = m.payoffs[(a, b)]
            if all(m.payoffs[(d, b)][0] <= ua for d in m.actions[ALICE]) and \
               all(m.payoffs[(a, d)][1] <= ub for d in m.actions[BOB]):
                out.append((a, b))
    return out


def deviation_checks(m: NormalFormGame, profile: tuple[Any, Any]) -> list[dict]:
    """Every unilateral alternative to ``profile`` with its payoff comparison."""
    a0, b0 = profile
    base = m.payoffs[profile]
    rows = []
    for a in m.actions[ALICE]:
        rows.append({"player": ALICE, "action": a, "payoff": m.payoffs[(a, b0)][0],
                     "baseline": base[0], "gains": m.payoffs[(a, b0)][0] > base[0]})
    for b in m.actions[BOB]:
        rows.append({"player": BOB, "action": b, "payoff": m.payoffs[(a0, b)][1],
                     "baseline": base[1], "gains": m.payoffs[(a0, b)][1] > base[1]})
    return rows


def is_truthful_equilibrium(matrix: NormalFormGame | None, ground_truth: int, x: int | None = None) -> bool:
    """True iff nobody gains by deviating alone from ``(ground_truth, ground_truth)``."""
    if matrix is None:
        matrix = payoff_matrix(x)
    return not any(r["gains"] for r in deviation_checks(matrix, (ground_truth, ground_truth)))


def stage_game(node: Simultaneous) -> NormalFormGame:
    """Normal form of a two-player simultaneous node with solved continuations."""
    if set(node.players) != {ALICE, BOB}:
        raise ValueError("stage games need both players")
    pay = {}
    for prof, child in node.children.items():
        by_role = dict(zip(node.players, prof))
        pay[(by_role[ALICE], by_role[BOB])] = tuple(backward_induction(ExtensiveGame(child))[1])
    return NormalFormGame({ALICE: node.actions[ALICE], BOB: node.actions[BOB]}, pay)


# --------------------------------------------------------------------------
# extortion
# --------------------------------------------------------------------------


def _get(obj, name):
    return obj[name] if isinstance(obj, Mapping) else getattr(obj, name)


def detect_extortion(transcript) -> bool:
    """Money flowed from Alice to Bob although the good was not delivered.

    ``transcript`` needs ``settled``, ``ground_truth`` and ``escrow_utility``
    (a :class:`Utility` or ``{"alice": .., "bob": ..}``).

    Raises:
        UnsettledTranscript: if the escrow has not settled.
    """
    if not _get(transcript, "settled"):
        raise UnsettledTranscript("escrow has not settled")
    u = _get(transcript, "escrow_utility")
    ua, ub = (u.u_alice, u.u_bob) if isinstance(u, Utility) else (u[ALICE], u[BOB])
    return _get(transcript, "ground_truth") == 0 and ua < 0 and ub > 0


__all__ = [
    "PASS", "Decision", "ExtensiveGame", "NormalFormGame", "ScriptConstraint", "Simultaneous",
    "Terminal", "Utility", "backward_induction", "best_response", "build_game_tree",
    "detect_extortion", "deviation_checks", "is_truthful_equilibrium", "payoff_matrix",
    "play", "pure_nash", "stage_game", "subgame",
]
