"""Agents, the off-chain world and the end-to-end scenario runner.

A scenario deploys one escrow between ``alice`` (buyer) and ``bob``
(seller), lets each agent's policy submit calls round by round, delivers
off-chain messages with one round of latency and finally audits who gained
what. Contracts never see the off-chain world: whether the good shipped is
decided by the seller's policy and only the agents know it.
"""

from __future__ import annotations

import copy
import json
import random
from dataclasses import dataclass, field
from typing import Any, Sequence

from . import commitment
from .auxiliary import (
    FraudProof,
    HashBoundContract,
    MirrorContract,
    UniquenessContract,
    _Replayer,
    find_fraud_proof,
    script_from_json,
    script_to_json,
)
from .axioms import check_axioms
from .config import ScenarioConfig
from .errors import ConfigError, ContractError, InvalidProof
from .escrow import (
    ALICE,
    BOB,
    ROLES,
    Action,
    EscrowContract,
    EscrowProtocol,
    EscrowState,
    MoveContext,
    canonical_opening,
    other,
)
from .game import (
    PASS,
    Decision,
    ScriptConstraint,
    Utility,
    backward_induction,
    build_game_tree,
    detect_extortion,
    is_truthful_equilibrium,
    payoff_matrix,
)
from .ledger import Ledger, LogEntry, SignedCall

EXTORT_KINDS = ("EXTORT_CLASSICAL", "EXTORT_COMMIT_LEAK", "EXTORT_HASHBOUND", "EXTORT_GENERAL")

ANCHORS = {
    "HONEST": "honest exchange through the classical escrow",
    "EXTORT_CLASSICAL": "seller extortion of the classical escrow",
    "EXTORT_COMMIT_LEAK": "commit-reveal escrow with the opening leaked off-chain",
    "EXTORT_HASHBOUND": "hash-bound auxiliary contract against the guessing defense",
    "EXTORT_GENERAL": "general attack with commitment and uniqueness contracts",
}


# --------------------------------------------------------------------------
# off-chain world
# --------------------------------------------------------------------------


@dataclass
class WorldState:
    """Ground truth plus the off-chain channel between the parties."""

    good_delivered: int = 0
    inbox: dict = field(default_factory=lambda: {ALICE: [], BOB: []})
    in_flight: list = field(default_factory=list)
    messages: list = field(default_factory=list)
    events: list = field(default_factory=list)

    def deliver(self, rnd: int) -> None:
        keep = []
        for msg in self.in_flight:
            if msg["deliver_round"] <= rnd:
                self.inbox[msg["to"]].append(msg)
            else:
                keep.append(msg)
        self.in_flight = keep


def send_offchain(world: WorldState, sender: str, to: str, message: dict, rnd: int) -> WorldState:
    """Queue ``message``; the recipient sees it from round ``rnd + 1``."""
    msg = {"from": sender, "to": to, "sent_round": rnd, "deliver_round": rnd + 1,
           "body": dict(message)}
    world.in_flight.append(msg)
    world.messages.append(msg)
    return world


# --------------------------------------------------------------------------
# policies and observations
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AgentPolicy:
    kind: str
    escrow_script: str = ""
    mirror_script: str = ""

    @property
    def ships(self) -> bool:
        return self.kind not in EXTORT_KINDS


@dataclass
class Call:
    contract: str
    function: str
    args: tuple = ()


@dataclass
class Send:
    to: str
    body: dict


@dataclass
class Deploy:
    """Deploy a contract built by ``factory(escrow_id)``, remember its id, then call it."""

    name: str
    factory: Any
    then: Sequence[tuple[str, tuple]] = ()


@dataclass
class Observation:
    round: int
    role: str
    config: ScenarioConfig
    protocol: EscrowProtocol
    escrow_id: str
    escrow_state: EscrowState
    chain: ChainView
    inbox: list
    ground_truth: int
    memory: dict


class ChainView:
    """Read-only window on the ledger for agents."""

    def __init__(self, ledger: Ledger):
        self._ledger = ledger

    @property
    def log(self) -> list[LogEntry]:
        return list(self._ledger.log)

    def exists(self, cid: str) -> bool:
        return cid in self._ledger.contracts

    def contract(self, cid: str):
        """A deep copy of the contract (code and state are public on-chain)."""
        c = self._ledger.contracts[cid]
        ledger, c.ledger = c.ledger, None
        try:
            return copy.deepcopy(c)
        finally:
            c.ledger = ledger

    def verify_call(self, call: SignedCall) -> bool:
        return self._ledger.verify_call(call)

    def applied_calls(self, cid: str) -> list[SignedCall]:
        return [e.call for e in self._ledger.entries_for(cid)]


_M_CACHE: dict[str, int] = {}


def bound_m(protocol: EscrowProtocol) -> int:
    """The protocol's payoff bound ``m`` from the axiom checker (cached)."""
    key = repr(protocol)
    if key not in _M_CACHE:
        _M_CACHE[key] = check_axioms(protocol).m
    return _M_CACHE[key]


# --------------------------------------------------------------------------
# scripts
# --------------------------------------------------------------------------


def parse_script(text: str, protocol: EscrowProtocol, role: str = BOB) -> dict[str, int | None]:
    """Parse ``"commit:1,reveal:1"`` into decision point -> bit (None = stay idle).

    An empty string means the truthful script for 1.
    """
    if not text.strip():
        return {dp: 1 for dp in protocol.script_for(role, 1)}
    known = protocol.script_for(role, 1)
    out: dict[str, int | None] = {}
    for part in text.split(","):
        dp, _, val = part.strip().partition(":")
        if dp not in known:
            raise ValueError(f"unknown decision point {dp!r} in script entry {part!r}")
        if val == "idle":
            out[dp] = None
        elif val in ("0", "1"):
            out[dp] = int(val)
        else:
            raise ValueError(f"bad script entry {part!r}")
    return out


def _scripted_action(protocol, state, role, plan, openings, committed) -> Action | None:
    dp = protocol.decision_point(state, role)
    if dp is None or dp not in plan or plan[dp] is None:
        return None
    bit = plan[dp]
    if dp == "declare":
        return Action("declare", choice=bit)
    if dp == "commit":
        committed["bit"] = bit
        return Action("commit", choice=bit, digest=commitment.commit(bit, openings[bit]).digest)
    if dp == "reveal":
        return Action("reveal", choice=bit, nonce=openings[bit])
    if dp == "confirm":
        return Action("confirm") if bit == 1 else None
    return None


# --------------------------------------------------------------------------
# rational play
# --------------------------------------------------------------------------


def _inbox_bodies(obs: Observation, kind: str) -> list[dict]:
    return [m["body"] for m in obs.inbox if m["body"].get("type") == kind]


def _known_openings(obs: Observation) -> list[tuple[int, bytes]]:
    """Openings of the opponent's commitment learned off-chain and verified."""
    opp = other(obs.role)
    stored = obs.escrow_state.hashes[opp]
    out = []
    for body in _inbox_bodies(obs, "opening"):
        c, n = body["choice"], bytes.fromhex(body["nonce"])
        if stored is None or commitment.verify(c, n, commitment.Commitment(stored)):
            out.append((c, n))
    return out


def credible_constraints(obs: Observation) -> list[ScriptConstraint]:
    """Auxiliary commitments announced by the opponent that check out on-chain.

    A hash-bound contract counts when it is funded with more than ``2m``
    and bound to the opponent's on-chain hash (or the opponent has not
    committed yet). A mirror contract counts when it and its uniqueness
    contract are funded with ``2m+1`` and ``4m+3`` and refer to this escrow.
    """
    opp = other(obs.role)
    pointers = _inbox_bodies(obs, "pointer")
    if opp != BOB or not pointers:
        return []
    m = bound_m(obs.protocol)
    out = []
    for body in pointers:
        cids = body.get("contracts", {})
        if "hashbound" in cids and obs.chain.exists(cids["hashbound"]):
            hb = obs.chain.contract(cids["hashbound"])
            stored = obs.escrow_state.hashes[BOB]
            if (isinstance(hb, HashBoundContract) and hb.state["funded"] and hb.owner == BOB
                    and hb.deposit > 2 * m
                    and (stored is None or stored == hb.bound_hash.digest)):
                out.append(ScriptConstraint(BOB, obs.protocol.script_for(BOB, 1), hb.deposit,
                                            f"hashbound:{hb.id}"))
        if "mirror" in cids and "uniqueness" in cids:
            if not (obs.chain.exists(cids["mirror"]) and obs.chain.exists(cids["uniqueness"])):
                continue
            mc, uc = obs.chain.contract(cids["mirror"]), obs.chain.contract(cids["uniqueness"])
            if (isinstance(mc, MirrorContract) and isinstance(uc, UniquenessContract)
                    and mc.state["funded"] and uc.state["funded"]
                    and mc.escrow_id == obs.escrow_id and uc.escrow_id == obs.escrow_id
                    and mc.owner == BOB and uc.owner == BOB and uc.beneficiary == ALICE
                    and mc.deposit >= 2 * m + 1 and uc.deposit >= 4 * m + 3
                    and uc.unlock_round > obs.protocol.t):
                out.append(ScriptConstraint(BOB, mc.reference_script, mc.deposit,
                                            f"mirror:{mc.id}"))
    return out


def _required_bit(constraints, dp="reveal") -> int | None:
    for c in constraints:
        entry = c.script.get(dp)
        if entry and entry[1] is not None:
            return entry[1]
    return None


def _opponent_model(obs: Observation, constraints):
    """Model state and move context for the opponent, with unknown openings hypothesised."""
    opp = other(obs.role)
    state = copy.deepcopy(obs.escrow_state)
    known = _known_openings(obs)
    stored = state.hashes[opp]
    if stored is not None and state.openings[opp] is None:
        if known:
            own = known[:1]
        else:
            bit = _required_bit(constraints)
            bit = obs.ground_truth if bit is None else bit
            own = [canonical_opening(opp, bit)]
            state.hashes[opp] = commitment.commit(*own[0]).digest
    else:
        have = {c for c, _ in known}
        own = list(known) + [canonical_opening(opp, c) for c in (0, 1) if c not in have]
    return state, MoveContext(own=own), known


def _can_act_later(protocol, state, role, rnd, ctx) -> bool:
    dp = protocol.decision_point(state, role)
    s = copy.deepcopy(state)
    protocol.close_round(s, rnd)
    return (not s.settled and protocol.decision_point(s, role) == dp
            and bool(protocol.moves(s, role, rnd + 1, ctx)))


def rational_move(obs: Observation) -> tuple[Action | None, str]:
    """Best move now from the residual game given everything observed.

    Returns the action (None to wait) and a one-line explanation.
    """
    p, me, rnd = obs.protocol, obs.role, obs.round
    state = obs.escrow_state
    if state.settled or not p._in_phase3(state, rnd):
        return None, ""
    constraints = credible_constraints(obs)
    model_state, opp_ctx, known = _opponent_model(obs, constraints)
    my_ctx = MoveContext(own=obs.memory["openings"], known=known)
    mine = {}
    for act in p.moves(state, me, rnd, my_ctx):
        trial = copy.deepcopy(state)
        try:
            p.apply(trial, me, act, rnd)
        except ContractError:
            continue
        mine.setdefault(act.label(), act)
    if not mine:
        return None, ""
    contexts = {me: my_ctx, other(me): opp_ctx}
    game = build_game_tree(p, obs.config.ordering_policy(), obs.ground_truth,
                           good_value=obs.config.good_value, state=model_state,
                           start_round=rnd, contexts=contexts, constraints=constraints)
    profile, value = backward_induction(game)
    node, hist = game.root, ()
    while isinstance(node, Decision) and node.round == rnd:
        label = profile[hist]
        if node.player == me:
            note = (f"residual game value {tuple(value)}; play {label}"
                    + (f" given {', '.join(c.label for c in constraints)}" if constraints else ""))
            return mine.get(label), note
        if _can_act_later(p, state, me, rnd, my_ctx):
            return None, f"wait for {other(me)} (expected {label})"
        node = node.children[node.actions.index(label)]
        hist = hist + (label,)
    return None, "no move this round"


# --------------------------------------------------------------------------
# next_action
# --------------------------------------------------------------------------


def _deposit_intent(obs: Observation) -> list:
    s, p = obs.escrow_state, obs.protocol
    if obs.round < p.phase1_end and not s.paid[obs.role] and not s.settled:
        return [Call(obs.escrow_id, "deposit", (p.deposits()[obs.role],))]
    return []


def _truthful_intent(obs: Observation, bit: int) -> list:
    p, s = obs.protocol, obs.escrow_state
    if s.settled or not p._in_phase3(s, obs.round):
        return []
    act = p.truthful_action(s, obs.role, bit, obs.memory["openings"])
    return [Call(obs.escrow_id, act.kind, act.args())] if act else []


def _fraud_intents(obs: Observation) -> list:
    """Alice files a fraud proof as soon as the mirror log contradicts the escrow."""
    mem = obs.memory
    if obs.role != ALICE or mem.get("proved"):
        return []
    for body in _inbox_bodies(obs, "pointer"):
        cids = body.get("contracts", {})
        if "mirror" not in cids or "uniqueness" not in cids:
            continue
        if not (obs.chain.exists(cids["mirror"]) and obs.chain.exists(cids["uniqueness"])):
            continue
        uc = obs.chain.contract(cids["uniqueness"])
        if uc.state["settled"] or obs.round >= uc.unlock_round:
            continue
        mc = obs.chain.contract(cids["mirror"])
        escrow_calls = [c for c in obs.chain.applied_calls(obs.escrow_id)
                        if c.function not in ("deposit",)]
        proof = find_fraud_proof(obs.protocol, obs.escrow_id, mc.parties, obs.chain.verify_call,
                                 escrow_calls, mc.mirrored_log, obs.config.ordering_policy().priority)
        if proof is not None:
            mem["proved"] = True
            mem.setdefault("proofs", []).append(proof)
            return [Call(cids["uniqueness"], "prove", (list(proof.prefix_a), list(proof.prefix_b)))]
    return []


def _escrow_intent_for(obs: Observation, policy: AgentPolicy) -> list:
    kind = policy.kind
    truth = obs.ground_truth
    if kind in ("HONEST", "PUNITIVE"):
        return _truthful_intent(obs, truth)
    if kind == "RATIONAL":
        act, note = rational_move(obs)
        if note:
            obs.memory.setdefault("notes", []).append(f"round {obs.round}: {note}")
        return [Call(obs.escrow_id, act.kind, act.args())] if act else []
    if obs.role == ALICE:
        # buyer-side extortion: claim non-delivery at the first opportunity
        return _truthful_intent(obs, 0)
    plan = obs.memory["escrow_plan"]
    act = _scripted_action(obs.protocol, obs.escrow_state, BOB, plan, obs.memory["nonces"],
                           obs.memory.setdefault("escrow_commit", {}))
    if act and obs.protocol._in_phase3(obs.escrow_state, obs.round):
        return [Call(obs.escrow_id, act.kind, act.args())]
    return []


def _setup_intents(obs: Observation, policy: AgentPolicy) -> list:
    """Seller-side attack preparation in the first round."""
    mem, p = obs.memory, obs.protocol
    if obs.round != 0 or obs.role != BOB:
        return []
    kind = policy.kind
    n1 = mem["nonces"][1]
    out: list = []
    if kind == "EXTORT_HASHBOUND":
        bound = commitment.commit(1, n1)
        deposit = 10 * p.x
        out.append(Deploy("hashbound", lambda eid: HashBoundContract(bound, deposit, BOB, eid),
                          [("fund", (deposit,))]))
    if kind == "EXTORT_GENERAL":
        m = bound_m(p)
        mem["m"] = m
        script = p.script_for(BOB, 1)
        parties = {ALICE: ALICE, BOB: BOB}
        settle = p.t
        unlock = p.t + obs.config.unlock_delay
        out.append(Deploy("mirror", lambda eid: MirrorContract(eid, p, parties, BOB, script,
                                                               2 * m + 1, settle),
                          [("fund", (2 * m + 1,))]))
        out.append(Deploy("uniqueness", lambda eid: UniquenessContract(eid, p, parties, BOB, ALICE,
                                                                       4 * m + 3, unlock),
                          [("fund", (4 * m + 3,))]))
    return out


def _announce_intents(obs: Observation, policy: AgentPolicy) -> list:
    mem = obs.memory
    if obs.role != BOB or mem.get("announced"):
        return []
    if policy.kind == "EXTORT_COMMIT_LEAK" and obs.round >= obs.protocol.phase1_end:
        mem["announced"] = True
        return [Send(ALICE, {"type": "opening", "choice": 1, "nonce": mem["nonces"][1].hex()})]
    if policy.kind in ("EXTORT_HASHBOUND", "EXTORT_GENERAL") and obs.round >= 1:
        mem["announced"] = True
        aux = mem.get("aux", {})
        body = {"type": "pointer", "escrow": obs.escrow_id, "contracts": dict(aux),
                "claimed_strategy": script_to_json(obs.protocol.script_for(BOB, 1))}
        if "m" in mem:
            body["m"] = mem["m"]
        return [Send(ALICE, body)]
    return []


def _mirror_intents(obs: Observation, policy: AgentPolicy) -> list:
    """Relay last round's escrow calls, with Bob's own moves taken from the mirror plan."""
    mem, p = obs.memory, obs.protocol
    if policy.kind != "EXTORT_GENERAL" or obs.role != BOB:
        return []
    aux = mem.get("aux", {})
    out: list = []
    rnd = obs.round
    if "mirror" in aux:
        mirror = obs.chain.contract(aux["mirror"])
        prev = rnd - 1
        if (p.delivery_deadline <= prev < p.phase3_end and rnd < mirror.settle_round
                and not mirror.state["settled"]):
            shadow: _Replayer = mem["shadow"]
            calls = [c for c in obs.chain.applied_calls(obs.escrow_id)
                     if c.round == prev and c.caller != BOB]
            mine = []
            shadow.advance_to(prev)
            act = _scripted_action(p, shadow.state, BOB, mem["mirror_plan"], mem["nonces"],
                                   mem.setdefault("mirror_commit", {}))
            if act is not None:
                mine.append(SignedCall(BOB, obs.escrow_id, act.kind, act.args(), prev))
            order = obs.config.ordering_policy()
            batch = sorted([(order.rank(c.caller), i, c) for i, c in enumerate(mine + calls)],
                           key=lambda t: t[:2])
            for _, _, c in batch:
                if c.caller == BOB:
                    c = c.signed(mem["key"])
                try:
                    shadow.apply(c)
                except ContractError:
                    continue
                out.append(Call(aux["mirror"], "relay", (c,)))
        if rnd == mirror.settle_round and not mirror.state["settled"]:
            out.append(Call(aux["mirror"], "settle"))
    if "uniqueness" in aux:
        uc = obs.chain.contract(aux["uniqueness"])
        if rnd >= uc.unlock_round and not uc.state["settled"]:
            out.append(Call(aux["uniqueness"], "settle"))
    return out


def _hashbound_intents(obs: Observation, policy: AgentPolicy) -> list:
    mem = obs.memory
    if policy.kind != "EXTORT_HASHBOUND" or obs.role != BOB or mem.get("claimed"):
        return []
    if obs.escrow_state.settled and "hashbound" in mem.get("aux", {}):
        mem["claimed"] = True
        return [Call(mem["aux"]["hashbound"], "claim", (1, mem["nonces"][1]))]
    return []


def next_action(policy: AgentPolicy, obs: Observation) -> list:
    """Intents (calls, off-chain sends, deployments) for this round."""
    intents: list = []
    intents += _setup_intents(obs, policy)
    intents += _announce_intents(obs, policy)
    intents += _deposit_intent(obs)
    intents += _escrow_intent_for(obs, policy)
    intents += _mirror_intents(obs, policy)
    intents += _hashbound_intents(obs, policy)
    intents += _fraud_intents(obs)
    return intents


# --------------------------------------------------------------------------
# transcript
# --------------------------------------------------------------------------


@dataclass
class Transcript:
    id: str
    anchor: str
    config: dict
    escrow_id: str
    parties: dict
    ground_truth: int
    settled: bool
    outcome: str | None
    escrow_utility: Utility
    aux_utility: Utility
    utility: Utility
    extortion: bool
    balances: dict
    keys: dict
    contracts: dict
    log: list
    offchain: list
    annotations: dict
    fraud_proofs: list
    audit: dict

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        for k in ("escrow_utility", "aux_utility", "utility"):
            d[k] = getattr(self, k).to_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> Transcript:
        d = dict(d)
        for k in ("escrow_utility", "aux_utility", "utility"):
            d[k] = Utility(d[k][ALICE], d[k][BOB])
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> Transcript:
        return cls.from_dict(json.loads(text))

    def log_entries(self) -> list[LogEntry]:
        return [LogEntry.from_dict(e) for e in self.log]


def _flows(ledger: Ledger, pred) -> dict[str, int]:
    """Net transfers from contracts selected by ``pred`` to each party."""
    net = {r: 0 for r in ROLES}
    for e in ledger.log:
        if e.status != "applied":
            continue
        for eff in e.effects:
            if eff["op"] != "transfer":
                continue
            src, dst, amt = eff["from"], eff["to"], eff["amount"]
            if dst in net and pred(src):
                net[dst] += amt
            if src in net and pred(dst):
                net[src] -= amt
    return net


def _annotations(cfg: ScenarioConfig, protocol: EscrowProtocol, ground_truth: int) -> dict:
    notes: dict = {"ordering": cfg.ordering}
    if protocol.name in ("classical", "commit-reveal"):
        game = build_game_tree(protocol, cfg.ordering_policy(), ground_truth,
                               good_value=cfg.good_value)
        _, spe = backward_induction(game)
        notes["sequential_spe"] = spe.to_dict()
        notes["game_nodes"] = game.node_count()
        notes["truthful_equilibrium"] = is_truthful_equilibrium(payoff_matrix(cfg.x), ground_truth)
    return notes


def run_scenario(config: ScenarioConfig) -> Transcript:
    """Run one scenario end to end.

    Raises:
        ConfigError: if the configuration is invalid.
    """
    cfg = config
    protocol = cfg.protocol()
    ledger = Ledger(cfg.ordering_policy(), seed=cfg.seed)
    start = 20 * cfg.x + 10
    for role in ROLES:
        ledger.create_account(start, role)
    escrow = EscrowContract(protocol, ALICE, BOB)
    eid = ledger.deploy(escrow, ALICE)
    chain = ChainView(ledger)

    policies = {ALICE: AgentPolicy(cfg.alice_policy),
                BOB: AgentPolicy(cfg.bob_policy, cfg.escrow_script, cfg.mirror_script)}
    ground_truth = 1 if policies[BOB].ships else 0
    world = WorldState(good_delivered=ground_truth)

    memory = {}
    for role in ROLES:
        rng = random.Random(f"escrowlab:{cfg.seed}:{role}")
        nonces = {0: commitment.new_nonce(rng), 1: commitment.new_nonce(rng)}
        memory[role] = {"nonces": nonces, "openings": [(0, nonces[0]), (1, nonces[1])],
                        "key": ledger.key_of(role), "aux": {}}
    try:
        memory[BOB]["escrow_plan"] = parse_script(cfg.escrow_script, protocol)
        memory[BOB]["mirror_plan"] = parse_script(cfg.mirror_script, protocol)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    memory[BOB]["shadow"] = _Replayer(protocol, {ALICE: ALICE, BOB: BOB})

    for rnd in range(cfg.horizon):
        world.deliver(rnd)
        if rnd == protocol.phase1_end:
            world.events.append({"round": rnd, "event": "shipped" if ground_truth else "not shipped"})
        for role in ledger.ordering.order(ROLES):
            obs = Observation(rnd, role, cfg, protocol, eid, copy.deepcopy(escrow.state), chain,
                              list(world.inbox[role]), ground_truth, memory[role])
            for intent in next_action(policies[role], obs):
                if isinstance(intent, Send):
                    send_offchain(world, role, intent.to, intent.body, rnd)
                elif isinstance(intent, Deploy):
                    cid = ledger.deploy(intent.factory(eid), role)
                    memory[role]["aux"][intent.name] = cid
                    for fn, args in intent.then:
                        ledger.submit(ledger.make_call(role, cid, fn, *args))
                else:
                    ledger.submit(ledger.make_call(role, intent.contract, intent.function,
                                                   *intent.args))
        ledger.finalize_round()

    final = {r: ledger.balance_of(r) for r in ROLES}
    total = Utility(final[ALICE] - start, final[BOB] - start)
    esc = _flows(ledger, lambda c: c == eid)
    aux = _flows(ledger, lambda c: c in ledger.contracts and c != eid)
    escrow_u = Utility(esc[ALICE], esc[BOB])
    aux_u = Utility(aux[ALICE], aux[BOB])
    audit = {
        "conservation_gap": ledger.conservation_gap(),
        "utility_matches_balances": (escrow_u.u_alice + aux_u.u_alice == total.u_alice
                                     and escrow_u.u_bob + aux_u.u_bob == total.u_bob),
        "escrow_matches_protocol": (not escrow.state.settled
                                    or tuple(escrow_u) == protocol.net(escrow.state)),
        "minted": ledger.minted, "burned": ledger.burned, "locked": ledger.locked,
    }
    annotations = _annotations(cfg, protocol, ground_truth)
    if "m" in memory[BOB]:
        annotations["m"] = memory[BOB]["m"]
    for role in ROLES:
        if memory[role].get("notes"):
            annotations[f"{role}_reasoning"] = list(memory[role]["notes"])
    kind = cfg.bob_policy if cfg.bob_policy in ANCHORS else "HONEST"
    t = Transcript(
        id=cfg.id, anchor=cfg.anchor or ANCHORS[kind], config=cfg.to_dict(), escrow_id=eid,
        parties={ALICE: ALICE, BOB: BOB}, ground_truth=ground_truth,
        settled=escrow.state.settled, outcome=escrow.state.outcome,
        escrow_utility=escrow_u, aux_utility=aux_u, utility=total, extortion=False,
        balances={"initial": {r: start for r in ROLES}, "final": final,
                  "contracts": dict(ledger.contract_funds)},
        keys=ledger.public_keys(),
        contracts={cid: _json_safe(c.describe()) for cid, c in ledger.contracts.items()},
        log=[e.to_dict() for e in ledger.log], offchain=list(world.messages),
        annotations=annotations,
        fraud_proofs=[p.to_dict() for p in memory[ALICE].get("proofs", [])],
        audit=audit,
    )
    if t.settled:
        t.extortion = detect_extortion(t)
    return t


def _json_safe(obj):
    return json.loads(json.dumps(obj, default=str))


def verify_call_with_keys(keys: dict[str, str]):
    """Signature checker over exported key material (for offline proof checks)."""
    def check(call: SignedCall) -> bool:
        k = keys.get(call.caller)
        return k is not None and call.verify(bytes.fromhex(k))
    return check


def check_fraud_proof(transcript: Transcript, proof: FraudProof) -> dict:
    """Validate ``proof`` against the escrow recorded in ``transcript``.

    Returns ``{"valid": bool, "reason": str}``.
    """
    from .auxiliary import validate_fraud_proof

    cfg = ScenarioConfig(**transcript.config)
    protocol = cfg.protocol()
    try:
        where = validate_fraud_proof(protocol, transcript.escrow_id, transcript.parties,
                                     verify_call_with_keys(transcript.keys), proof)
    except InvalidProof as exc:
        return {"valid": False, "reason": exc.reason}
    return {"valid": True, "reason": f"Bob diverged at {where['decision_point']} "
                                     f"(entry {where['index']})"}


__all__ = [
    "AgentPolicy", "Observation", "Transcript", "WorldState", "bound_m", "check_fraud_proof",
    "credible_constraints", "next_action", "parse_script", "rational_move", "run_scenario",
    "send_offchain",
]
