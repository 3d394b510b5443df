"""Exhaustive axiom checking for escrow protocols.

Runs are enumerated round by round from the funded state: in every round
each party either idles or takes one of its available actions, and when
both act both same-round orders are tried. Identical states reached by
different paths are merged, so the search visits each distinct contract
state once per round. A run is kept with the first path that reached it,
which becomes the witness if that run violates an axiom.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Sequence

from .errors import ContractError, StateSpaceTooLarge
from .escrow import (
    ALICE,
    BOB,
    ROLES,
    Action,
    EscrowProtocol,
    EscrowState,
    MoveContext,
    canonical_opening,
)
from .ledger import SignedCall, derive_key

AXIOMS = ("phases", "liveness", "termination", "agreement", "incentives", "boundedness")
DEFAULT_BUDGET = 10**6
WITNESS_CONTRACT = "escrow"


@dataclass(frozen=True)
class Move:
    round: int
    role: str
    action: Action

    def to_call(self) -> SignedCall:
        call = SignedCall(self.role, WITNESS_CONTRACT, self.action.kind, self.action.args(),
                          self.round)
        return call.signed(derive_key("witness", self.role))

    @classmethod
    def from_call(cls, call: SignedCall) -> Move:
        return cls(call.round, call.caller, Action.from_call(call.function, call.args))


@dataclass
class AxiomVerdict:
    passed: bool
    detail: str = ""
    witness: list[Move] | None = None

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "detail": self.detail,
            "witness": None if self.witness is None else [m.to_call().to_dict() for m in self.witness],
        }

    @classmethod
    def from_dict(cls, d: dict) -> AxiomVerdict:
        w = d.get("witness")
        return cls(d["passed"], d.get("detail", ""),
                   None if w is None else [Move.from_call(SignedCall.from_dict(c)) for c in w])


@dataclass
class AxiomReport:
    protocol: dict
    verdicts: dict[str, AxiomVerdict]
    m: int | None
    horizon: int
    nodes: int = 0

    @property
    def all_passed(self) -> bool:
        return all(v.passed for v in self.verdicts.values())

    def failed(self) -> list[str]:
        return [name for name in AXIOMS if not self.verdicts[name].passed]

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "verdicts": {k: self.verdicts[k].to_dict() for k in AXIOMS},
            "m": self.m,
            "horizon": self.horizon,
            "nodes": self.nodes,
            "all_passed": self.all_passed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> AxiomReport:
        return cls(
            protocol=d["protocol"],
            verdicts={k: AxiomVerdict.from_dict(v) for k, v in d["verdicts"].items()},
            m=d["m"],
            horizon=d["horizon"],
            nodes=d.get("nodes", 0),
        )


# --------------------------------------------------------------------------
# replay
# --------------------------------------------------------------------------


def deposit_moves(protocol: EscrowProtocol) -> list[Move]:
    return [Move(0, role, Action("deposit", amount=amt)) for role, amt in protocol.deposits().items()]


def replay(protocol: EscrowProtocol, moves: Sequence[Move], until: int | None = None) -> EscrowState:
    """Replay ``moves`` (in list order within a round) and close every round
    up to ``until`` (default: the protocol's termination time plus one)."""
    until = protocol.phase3_end + 1 if until is None else until
    state = protocol.new_state()
    by_round: dict[int, list[Move]] = {}
    for mv in moves:
        by_round.setdefault(mv.round, []).append(mv)
    last = max([until] + [r + 1 for r in by_round])
    for r in range(last):
        for mv in by_round.get(r, []):
            try:
                protocol.apply(state, mv.role, mv.action, r)
            except ContractError:
                pass
        protocol.close_round(state, r)
    return state


def replay_witness(protocol: EscrowProtocol, calls: Sequence[SignedCall],
                   until: int | None = None) -> EscrowState:
    return replay(protocol, [Move.from_call(c) for c in calls], until)


# --------------------------------------------------------------------------
# enumeration
# --------------------------------------------------------------------------


@dataclass
class Enumeration:
    terminal: list[tuple[EscrowState, list[Move]]] = field(default_factory=list)
    unsettled_at_t: tuple[EscrowState, list[Move]] | None = None
    liveness_gap: tuple[EscrowState, list[Move], str] | None = None
    nodes: int = 0


def _contexts(amount_domain):
    return {r: MoveContext.canonical(r, exhaustive=True, amount_domain=amount_domain) for r in ROLES}


def enumerate_runs(protocol: EscrowProtocol, horizon: int, budget: int = DEFAULT_BUDGET,
                   amount_domain: Sequence[int] = (1, 2)) -> Enumeration:
    """Enumerate every interaction-phase run up to ``horizon`` rounds.

    Raises:
        StateSpaceTooLarge: when more than ``budget`` successor states are built.
    """
    ctx = _contexts(amount_domain)
    start = protocol.new_state()
    path0 = deposit_moves(protocol)
    for mv in path0:
        protocol.apply(start, mv.role, mv.action, 0)
    for r in range(protocol.delivery_deadline):
        protocol.close_round(start, r)

    out = Enumeration()
    frontier: dict[str, tuple[EscrowState, list[Move]]] = {start.key(): (start, path0)}
    for r in range(protocol.delivery_deadline, horizon):
        nxt: dict[str, tuple[EscrowState, list[Move]]] = {}
        for key, (state, path) in frontier.items():
            if state.settled:
                nxt.setdefault(key, (state, path))
                continue
            if out.liveness_gap is None:
                for role in ROLES:
                    if (protocol.decision_point(state, role) is not None
                            and protocol.default_rule(state, role) is None):
                        out.liveness_gap = (state, path, role)
                        break
            options = {role: [None] + protocol.moves(state, role, r, ctx[role]) for role in ROLES}
            for a in options[ALICE]:
                for b in options[BOB]:
                    picked = [m for m in (Move(r, BOB, b) if b else None,
                                          Move(r, ALICE, a) if a else None) if m]
                    orders = [picked, picked[::-1]] if len(picked) == 2 else [picked]
                    for order in orders:
                        out.nodes += 1
                        if out.nodes > budget:
                            raise StateSpaceTooLarge(
                                f"enumeration exceeded {budget} nodes at round {r}")
                        s = copy.deepcopy(state)
                        taken = []
                        for mv in order:
                            try:
                                protocol.apply(s, mv.role, mv.action, r)
                                taken.append(mv)
                            except ContractError:
                                pass
                        protocol.close_round(s, r)
                        nxt.setdefault(s.key(), (s, path + taken))
        frontier = nxt
        if r == protocol.phase3_end - 1 and out.unsettled_at_t is None:
            for state, path in frontier.values():
                if not state.settled:
                    out.unsettled_at_t = (state, path)
                    break
    if horizon <= protocol.phase3_end - 1:
        out.unsettled_at_t = next(((s, p) for s, p in frontier.values() if not s.settled), None)
    out.terminal = list(frontier.values())
    return out


def play_profile(protocol: EscrowProtocol, bit: int, horizon: int | None = None,
                 order: Sequence[str] = (BOB, ALICE)) -> tuple[EscrowState, list[Move]]:
    """Both parties play the truthful strategy for ``bit`` as early as possible."""
    horizon = protocol.phase3_end + 1 if horizon is None else horizon
    own = {r: [canonical_opening(r, c) for c in (0, 1)] for r in ROLES}
    state = protocol.new_state()
    path = deposit_moves(protocol)
    for mv in path:
        protocol.apply(state, mv.role, mv.action, 0)
    for r in range(horizon):
        if r >= protocol.delivery_deadline and not state.settled:
            for role in order:
                act = protocol.truthful_action(state, role, bit, own[role])
                if act is None:
                    continue
                try:
                    protocol.apply(state, role, act, r)
                    path.append(Move(r, role, act))
                except ContractError:
                    pass
        protocol.close_round(state, r)
    return state, path


# --------------------------------------------------------------------------
# the six checks
# --------------------------------------------------------------------------


def _check_phases(protocol: EscrowProtocol) -> AxiomVerdict:
    p = protocol
    if not (0 < p.phase1_end < p.delivery_deadline < p.phase3_end):
        return AxiomVerdict(False, "deadlines are not strictly increasing", [])
    deposits = deposit_moves(p)
    # interaction calls must be refused during the delivery window
    for r in range(p.phase1_end, p.delivery_deadline):
        state = p.new_state()
        for mv in deposits:
            p.apply(state, mv.role, mv.action, 0)
        for q in range(r):
            p.close_round(state, q)
        for role in ROLES:
            for action in p.action_universe(role):
                probe = copy.deepcopy(state)
                try:
                    p.apply(probe, role, action, r)
                except ContractError:
                    continue
                return AxiomVerdict(
                    False, f"{role} could call {action.kind} during the delivery window (round {r})",
                    deposits + [Move(r, role, action)])
    # deposits must be refused once the first phase is over
    late = p.new_state()
    role, amount = ALICE, p.deposits()[ALICE]
    p.apply(late, role, Action("deposit", amount=amount), 0)
    for q in range(p.phase1_end):
        p.close_round(late, q)
    try:
        p.apply(late, BOB, Action("deposit", amount=p.deposits()[BOB]), p.phase1_end)
        return AxiomVerdict(False, "a deposit was accepted after the first phase",
                            [Move(0, ALICE, Action("deposit", amount=amount)),
                             Move(p.phase1_end, BOB, Action("deposit", amount=p.deposits()[BOB]))])
    except ContractError:
        pass
    funded = p.funded_state()
    ctx = _contexts((1,))
    if not any(p.moves(funded, role, p.delivery_deadline, ctx[role]) for role in ROLES):
        return AxiomVerdict(False, "the interaction phase offers no actions", deposits)
    return AxiomVerdict(True, "deposits, delivery window and interaction phase are separated")


def check_axioms(protocol: EscrowProtocol, horizon: int | None = None,
                 budget: int = DEFAULT_BUDGET, amount_domain: Sequence[int] = (1, 2)) -> AxiomReport:
    """Check the six escrow axioms by exhaustive run enumeration.

    Args:
        protocol: escrow under test; its price ``x`` is used throughout.
        horizon: last round explored (exclusive); at least the termination time.
        budget: maximum number of successor states built.
        amount_domain: values tried for amount-carrying actions. Boundedness is
            probed by re-running with every amount scaled far beyond the
            deposits; a bounded escrow reports the same ``m`` both times.

    Raises:
        StateSpaceTooLarge: if the enumeration budget is exceeded.
    """
    x = protocol.x
    horizon = protocol.phase3_end + 2 if horizon is None else horizon
    if horizon < protocol.phase3_end:
        raise ValueError("horizon must reach the termination time")
    verdicts: dict[str, AxiomVerdict] = {"phases": _check_phases(protocol)}

    runs = enumerate_runs(protocol, horizon, budget, amount_domain)
    nodes = runs.nodes

    if runs.liveness_gap is None:
        verdicts["liveness"] = AxiomVerdict(True, "every pending decision has a timeout default")
    else:
        state, path, role = runs.liveness_gap
        dp = protocol.decision_point(state, role)
        verdicts["liveness"] = AxiomVerdict(
            False, f"no default when {role} never takes decision '{dp}'", list(path))

    if runs.unsettled_at_t is None:
        verdicts["termination"] = AxiomVerdict(True, f"every run settles by round {protocol.t}")
    else:
        verdicts["termination"] = AxiomVerdict(
            False, f"a run is still open at round {protocol.t}", list(runs.unsettled_at_t[1]))

    agreement = AxiomVerdict(True, "truthful profiles pay (0, 0) and (-x, x)")
    for bit, expected in ((0, (0, 0)), (1, (-x, x))):
        state, path = play_profile(protocol, bit, horizon)
        got = protocol.net(state) if state.settled else None
        if state.outcome != f"agree{bit}" or got != expected:
            agreement = AxiomVerdict(
                False, f"truthful profile for {bit} ended {state.outcome} with {got}, expected {expected}",
                path)
            break
    verdicts["agreement"] = agreement

    settled = [(s, p) for s, p in runs.terminal if s.settled]
    incentives = AxiomVerdict(True, "every disagreement leaves Alice below -x")
    for state, path in settled:
        if state.outcome == "disagree" and protocol.net(state)[0] >= -x:
            incentives = AxiomVerdict(
                False, f"disagreement pays Alice {protocol.net(state)[0]} >= {-x}", list(path))
            break
    verdicts["incentives"] = incentives

    m, m_path = _max_payoff(protocol, settled)
    scale = 10 * (protocol.total_deposits + 1)
    doubled = enumerate_runs(protocol, horizon, budget, [scale * a for a in amount_domain])
    nodes += doubled.nodes
    m2, m2_path = _max_payoff(protocol, [(s, p) for s, p in doubled.terminal if s.settled])
    if m is None or m <= 0:
        verdicts["boundedness"] = AxiomVerdict(False, "no positive payoff bound", m_path or [])
    elif m2 != m:
        verdicts["boundedness"] = AxiomVerdict(
            False, f"payoff magnitude grows with stake size ({m} -> {m2})", m2_path)
    else:
        verdicts["boundedness"] = AxiomVerdict(True, f"payoffs stay within [-{m}, {m}]")

    return AxiomReport(protocol.describe(), verdicts, m, horizon, nodes)


def _max_payoff(protocol, runs):
    best, best_path = None, None
    for state, path in runs:
        v = max(abs(n) for n in protocol.net(state))
        if best is None or v > best:
            best, best_path = v, list(path)
    return best, best_path
