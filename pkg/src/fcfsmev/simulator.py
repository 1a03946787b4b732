"""Seeded discrete-event simulation of an FCFS relay network.

Transactions propagate client -> relay -> participants over edges with
sampled latencies.  Each block boundary, the proposer orders its mempool
first-come-first-served unless the mempool exceeds the congestion
threshold, in which case it orders by fee.  Time is integer milliseconds
and all randomness flows from one seeded generator, so a (config, seed)
pair reproduces bit-identical reports.

Agent kinds cover the ordering-technique matrix: traders to generate
victim and background traffic, backrunners and frontrunners reacting to
either pending transactions (network state) or published blocks (block
state), a tolerating frontrunner that needs its target to survive, and a
clogger that floods the mempool to force the fee-ordering flip.
"""

from __future__ import annotations

import heapq
import itertools
import json
import random
from dataclasses import dataclass, field
from typing import Optional

try:
    import tomllib
except ImportError:         # Python 3.10
    import tomli as tomllib

DEFAULT_BLOCK_INTERVAL_MS = 3400
DEFAULT_MIN_FEE = 1000
RELAY_FANOUT = 4

AGENT_KINDS = (
    "victim-trader",
    "network-backrunner",
    "blockstate-backrunner",
    "network-frontrunner",
    "blockstate-frontrunner",
    "tolerating-frontrunner",
    "clogger",
)


class ConfigError(Exception):
    """The simulation config violates an invariant."""


@dataclass(frozen=True)
class LatencyModel:
    """Per-edge base delay sampled once at topology build, plus an
    independent jitter draw per message."""

    min_base_ms: int = 0
    max_base_ms: int = 5
    jitter_ms: int = 2

    def __post_init__(self):
        if self.min_base_ms < 0 or self.max_base_ms < self.min_base_ms:
            raise ConfigError("latency base range invalid")
        if self.jitter_ms < 0:
            raise ConfigError("jitter must be non-negative")


@dataclass(frozen=True)
class AgentSpec:
    kind: str
    attach_relay: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in AGENT_KINDS:
            raise ConfigError(f"unknown agent kind {self.kind!r}")
        if self.attach_relay < 0:
            raise ConfigError("attach_relay must be non-negative")


@dataclass(frozen=True)
class SimConfig:
    n_relays: int
    n_participants: int
    n_clients: int
    mempool_congestion_threshold: int
    max_block_txns: int
    duration_blocks: int
    seed: int
    agents: tuple[AgentSpec, ...] = ()
    latency: LatencyModel = field(default_factory=LatencyModel)
    block_interval_ms: int = DEFAULT_BLOCK_INTERVAL_MS
    min_fee: int = DEFAULT_MIN_FEE
    proposer_selection: str = "round-robin"
    stakes: tuple[int, ...] = ()

    def __post_init__(self):
        for name in ("n_relays", "n_participants", "n_clients",
                     "mempool_congestion_threshold", "max_block_txns",
                     "duration_blocks", "block_interval_ms"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.mempool_congestion_threshold > 10 * self.max_block_txns:
            raise ConfigError(
                "congestion threshold above 10x max block size is a config error")
        if self.min_fee < 0:
            raise ConfigError("min_fee must be non-negative")
        if self.proposer_selection not in ("round-robin", "stake-weighted"):
            raise ConfigError(
                f"unknown proposer selection {self.proposer_selection!r}")
        if self.proposer_selection == "stake-weighted":
            if len(self.stakes) != self.n_participants:
                raise ConfigError("stake-weighted selection needs one stake per participant")
            if any(s <= 0 for s in self.stakes):
                raise ConfigError("stakes must be positive")
        for spec in self.agents:
            if spec.attach_relay >= self.n_relays:
                raise ConfigError(
                    f"agent relay index {spec.attach_relay} out of range")


@dataclass(frozen=True)
class AgentOutcome:
    attempts: int
    successes: int

    @property
    def rate(self) -> float:
        return self.successes / self.attempts if self.attempts else 0.0


@dataclass(frozen=True)
class BlockRecord:
    """Per-block trace used by ordering property checks."""

    round: int
    mode: str
    proposer: int
    entries: tuple[tuple[str, int, int, int], ...]  # txid, fee, arr time, arr seq


@dataclass(frozen=True)
class SimReport:
    ordering_modes: tuple[str, ...]
    backrun_octile_histogram: tuple[int, ...]
    backrun_adjacency_rate: float
    frontrun_success_rate_fcfs: float
    frontrun_success_rate_fee: float
    clog_total_cost: int
    fee_flip_round: Optional[int]
    txns_emitted: int
    txns_included: int
    txns_unconfirmed: int
    backruns_included: int
    agent_outcomes: dict[str, AgentOutcome]
    blocks: tuple[BlockRecord, ...] = ()

    def to_json(self) -> str:
        """Canonical JSON; the block trace is diagnostic and excluded."""
        payload = {
            "ordering_modes": list(self.ordering_modes),
            "backrun_octile_histogram": list(self.backrun_octile_histogram),
            "backrun_adjacency_rate": self.backrun_adjacency_rate,
            "frontrun_success_rate_fcfs": self.frontrun_success_rate_fcfs,
            "frontrun_success_rate_fee": self.frontrun_success_rate_fee,
            "clog_total_cost": self.clog_total_cost,
            "fee_flip_round": self.fee_flip_round,
            "txns_emitted": self.txns_emitted,
            "txns_included": self.txns_included,
            "txns_unconfirmed": self.txns_unconfirmed,
            "backruns_included": self.backruns_included,
            "agent_outcomes": {
                name: {"attempts": o.attempts, "successes": o.successes,
                       "rate": o.rate}
                for name, o in self.agent_outcomes.items()},
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))


class _SimTxn:
    __slots__ = ("txid", "agent", "role", "fee", "target_txid",
                 "intended_round", "issue_time")

    def __init__(self, txid, agent, role, fee, target_txid=None,
                 intended_round=None, issue_time=0):
        self.txid = txid
        self.agent = agent
        self.role = role
        self.fee = fee
        self.target_txid = target_txid
        self.intended_round = intended_round
        self.issue_time = issue_time


class _Agent:
    def __init__(self, index: int, spec: AgentSpec, min_fee: int):
        self.index = index
        self.spec = spec
        self.kind = spec.kind
        p = spec.params
        self.name = p.get("name", f"{spec.kind}-{index}")
        self.client = f"A{index}"
        self.fee = int(p.get("fee", min_fee))
        self.txns_per_block = int(p.get("txns_per_block", 1))
        self.reaction_delay_ms = int(p.get("reaction_delay_ms", 50))
        self.issue_offset_ms = int(p.get("issue_offset_ms", 1))
        self.target = p.get("target")
        self.state = p.get("state", "network")
        self.batch_size = int(p.get("batch_size", 3000))
        self.batch_fee = int(p.get("batch_fee", min_fee))
        self.start_block = int(p.get("start_block", 1))
        self.active_blocks = int(p.get("blocks", 1))
        if self.kind == "tolerating-frontrunner" and self.state not in ("network", "block"):
            raise ConfigError("tolerating-frontrunner state must be network or block")

    def clog_rounds(self) -> range:
        return range(self.start_block, self.start_block + self.active_blocks)


class _Sim:
    """One simulation run; everything mutable lives here."""

    def __init__(self, config: SimConfig):
        self.cfg = config
        self.rng = random.Random(config.seed)
        self.seq = itertools.count()
        self.events: list = []
        self.txns: dict[str, _SimTxn] = {}
        self.txn_counter = itertools.count()
        self.agents = [_Agent(i, spec, config.min_fee)
                       for i, spec in enumerate(config.agents)]
        self._check_targets()
        self.relays = [f"R{i}" for i in range(config.n_relays)]
        self.participants = [f"P{i}" for i in range(config.n_participants)]
        self.idle_clients = [f"C{i}" for i in range(config.n_clients)]
        self.edges: dict[str, list[tuple[str, int]]] = {}
        self.seen: dict[str, set[str]] = {}
        self.mempools: dict[str, dict[str, tuple[int, int]]] = {
            p: {} for p in self.participants}
        self.confirmed: set[str] = set()
        self.inclusion: dict[str, tuple[int, int]] = {}   # txid -> (round, position)
        self.blocks: list[BlockRecord] = []
        self.observers: dict[str, list[_Agent]] = {}
        self._build_topology()

    def _check_targets(self):
        names = {a.name for a in self.agents}
        for agent in self.agents:
            needs_target = agent.kind in (
                "network-backrunner", "network-frontrunner", "tolerating-frontrunner")
            if needs_target:
                if agent.target is None:
                    raise ConfigError(f"{agent.name} needs a target agent")
                if agent.target not in names:
                    raise ConfigError(
                        f"{agent.name} targets unknown agent {agent.target!r}")

    # -- topology ----------------------------------------------------------

    def _edge(self, src: str, dst: str):
        delay = self.rng.randint(
            self.cfg.latency.min_base_ms, self.cfg.latency.max_base_ms)
        self.edges.setdefault(src, []).append((dst, delay))

    def _build_topology(self):
        cfg = self.cfg
        n = cfg.n_relays
        # Relay mesh: a ring guarantees strong connectivity, extra sampled
        # peers bring each relay up to the gossip fanout.
        fanout = min(RELAY_FANOUT, n - 1)
        for i, relay in enumerate(self.relays):
            peers = []
            if n > 1:
                peers.append(self.relays[(i + 1) % n])
            candidates = [r for r in self.relays if r != relay and r not in peers]
            extra = fanout - len(peers)
            if extra > 0 and candidates:
                peers.extend(self.rng.sample(candidates, min(extra, len(candidates))))
            for peer in peers:
                self._edge(relay, peer)
        for j, part in enumerate(self.participants):
            attach = min(RELAY_FANOUT, n)
            chosen = (self.rng.sample(range(n), attach) if attach < n
                      else list(range(n)))
            for r in sorted(chosen):
                self._edge(self.relays[r], part)
        for j, client in enumerate(self.idle_clients):
            relay = self.relays[j % n]
            self._edge(relay, client)
        for agent in self.agents:
            relay = self.relays[agent.spec.attach_relay]
            self._edge(agent.client, relay)
            self._edge(relay, agent.client)
            self.observers.setdefault(agent.client, []).append(agent)
        for node in (self.relays + self.participants + self.idle_clients
                     + [a.client for a in self.agents]):
            self.seen.setdefault(node, set())
            self.edges.setdefault(node, [])

    # -- event plumbing ----------------------------------------------------

    def _push(self, time_ms: int, kind: str, data):
        heapq.heappush(self.events, (time_ms, next(self.seq), kind, data))

    def _new_txn(self, agent: _Agent, role: str, fee: int, time_ms: int,
                 target_txid=None, intended_round=None) -> _SimTxn:
        txid = f"t{next(self.txn_counter):07d}"
        txn = _SimTxn(txid, agent.name, role, fee, target_txid,
                      intended_round, time_ms)
        self.txns[txid] = txn
        return txn

    def _issue(self, agent: _Agent, txn: _SimTxn, time_ms: int):
        self._deliver(agent.client, txn.txid, None, time_ms)

    def _deliver(self, node: str, txid: str, from_node: Optional[str], time_ms: int):
        if txid in self.seen[node]:
            return
        self.seen[node].add(txid)
        if node in self.mempools:
            self.mempools[node][txid] = (time_ms, next(self.seq))
        for observer in self.observers.get(node, ()):
            self._observe(observer, txid, time_ms)
        # Forward along every outgoing edge; leaves (participants, idle
        # clients) have none and txid dedup caps gossip loops.
        jitter = self.cfg.latency.jitter_ms
        for peer, base in self.edges[node]:
            if peer == from_node:
                continue
            delay = base + (self.rng.randint(0, jitter) if jitter else 0)
            self._push(time_ms + delay, "deliver", (peer, txid, node))

    def _observe(self, agent: _Agent, txid: str, time_ms: int):
        if agent.kind not in (
                "network-backrunner", "network-frontrunner", "tolerating-frontrunner"):
            return
        if agent.kind == "tolerating-frontrunner" and agent.state != "network":
            return
        txn = self.txns[txid]
        if txn.agent != agent.target or txid in self.confirmed:
            return
        role = "backrun" if agent.kind == "network-backrunner" else "frontrun-net"
        if agent.kind == "tolerating-frontrunner":
            role = "frontrun-tolerating"
        self._push(time_ms + agent.reaction_delay_ms, "react",
                   (agent.index, role, txid))

    # -- block production --------------------------------------------------

    def _proposer_for(self, round_: int) -> int:
        if self.cfg.proposer_selection == "stake-weighted":
            total = sum(self.cfg.stakes)
            pick = self.rng.randrange(total)
            acc = 0
            for i, stake in enumerate(self.cfg.stakes):
                acc += stake
                if pick < acc:
                    return i
            return len(self.cfg.stakes) - 1
        return (round_ - 1) % self.cfg.n_participants

    def _assemble_block(self, round_: int, time_ms: int):
        proposer_idx = self._proposer_for(round_)
        proposer = self.participants[proposer_idx]
        mempool = self.mempools[proposer]
        pending = [(txid, arr) for txid, arr in mempool.items()
                   if txid not in self.confirmed]
        mode = ("fee" if len(pending) > self.cfg.mempool_congestion_threshold
                else "fcfs")
        if mode == "fcfs":
            pending.sort(key=lambda e: e[1])
        else:
            pending.sort(key=lambda e: (-self.txns[e[0]].fee, e[1]))
        chosen = pending[:self.cfg.max_block_txns]
        entries = []
        for position, (txid, (arr_time, arr_seq)) in enumerate(chosen, start=1):
            self.confirmed.add(txid)
            self.inclusion[txid] = (round_, position)
            entries.append((txid, self.txns[txid].fee, arr_time, arr_seq))
        # Included transactions leave every mempool, not only the proposer's.
        for pool in self.mempools.values():
            for txid, _, _, _ in entries:
                pool.pop(txid, None)
        self.blocks.append(BlockRecord(round_, mode, proposer_idx, tuple(entries)))

    def _schedule_interval(self, round_: int, start_ms: int):
        """Queue agent issuance for the block interval starting at start_ms."""
        interval = self.cfg.block_interval_ms
        for agent in self.agents:
            if agent.kind == "victim-trader":
                for _ in range(agent.txns_per_block):
                    at = start_ms + self.rng.randint(0, interval - 1)
                    self._push(at, "trade", agent.index)
            elif agent.kind == "clogger" and round_ in agent.clog_rounds():
                self._push(start_ms + 1, "clog", agent.index)

    def _publish(self, round_: int, time_ms: int):
        """Notify block-reactive agents of the block just produced."""
        block = self.blocks[-1]
        for agent in self.agents:
            if agent.kind in ("blockstate-frontrunner", "blockstate-backrunner"):
                self._push(time_ms + agent.issue_offset_ms, "react",
                           (agent.index, "block-state", round_))
            elif agent.kind == "tolerating-frontrunner" and agent.state == "block":
                for txid, _, _, _ in block.entries:
                    if self.txns[txid].agent == agent.target:
                        self._push(time_ms + agent.reaction_delay_ms, "react",
                                   (agent.index, "frontrun-tolerating", txid))
                        break

    # -- main loop ---------------------------------------------------------

    def run(self) -> None:
        interval = self.cfg.block_interval_ms
        self._schedule_interval(1, 0)
        self._push(interval, "boundary", 1)
        while self.events:
            time_ms, _, kind, data = heapq.heappop(self.events)
            if kind == "deliver":
                node, txid, from_node = data
                self._deliver(node, txid, from_node, time_ms)
            elif kind == "trade":
                agent = self.agents[data]
                txn = self._new_txn(agent, "trade", agent.fee, time_ms)
                self._issue(agent, txn, time_ms)
            elif kind == "clog":
                agent = self.agents[data]
                for _ in range(agent.batch_size):
                    txn = self._new_txn(agent, "clog", agent.batch_fee, time_ms)
                    self._issue(agent, txn, time_ms)
            elif kind == "react":
                self._react(data, time_ms)
            elif kind == "boundary":
                round_ = data
                self._assemble_block(round_, time_ms)
                if round_ < self.cfg.duration_blocks:
                    self._publish(round_, time_ms)
                    self._schedule_interval(round_ + 1, time_ms)
                    self._push(time_ms + interval, "boundary", round_ + 1)
                else:
                    break

    def _react(self, data, time_ms: int):
        agent_idx, role, ref = data
        agent = self.agents[agent_idx]
        if role == "block-state":
            txn_role = ("frontrun-block"
                        if agent.kind == "blockstate-frontrunner" else "backrun-block")
            txn = self._new_txn(agent, txn_role, agent.fee, time_ms,
                                intended_round=ref + 1)
        else:
            txn = self._new_txn(agent, role, agent.fee, time_ms, target_txid=ref)
        self._issue(agent, txn, time_ms)

    # -- reporting ---------------------------------------------------------

    def report(self, keep_trace: bool) -> SimReport:
        from .analytics import octile_of

        block_len = {b.round: len(b.entries) for b in self.blocks}
        histogram = [0] * 8
        backruns_included = 0
        adjacent = 0
        fr_attempts = {"fcfs": 0, "fee": 0}
        fr_successes = {"fcfs": 0, "fee": 0}
        attempts: dict[str, int] = {a.name: 0 for a in self.agents}
        successes: dict[str, int] = {a.name: 0 for a in self.agents}
        mode_of = {b.round: b.mode for b in self.blocks}
        min_fee_positions: dict[int, list[int]] = {}
        for block in self.blocks:
            min_fee_positions[block.round] = [
                pos for pos, (txid, fee, _, _) in enumerate(block.entries, start=1)
                if fee <= self.cfg.min_fee]
        clog_cost = 0
        for txn in self.txns.values():
            agent_name = txn.agent
            where = self.inclusion.get(txn.txid)
            if txn.role == "clog":
                clog_cost += txn.fee
                continue
            if txn.role == "trade":
                continue
            attempts[agent_name] += 1
            if txn.role == "backrun":
                if where is None:
                    continue
                backruns_included += 1
                round_, pos = where
                histogram[octile_of(pos, block_len[round_]) - 1] += 1
                victim = self.inclusion.get(txn.target_txid)
                if victim is not None and victim[0] == round_ and victim[1] == pos - 1:
                    adjacent += 1
                    successes[agent_name] += 1
            elif txn.role == "frontrun-block":
                if where is None:
                    continue
                round_, pos = where
                mode = mode_of[round_]
                fr_attempts[mode] += 1
                if mode == "fcfs":
                    ok = pos == 1
                else:
                    ok = all(p > pos for p in min_fee_positions[round_])
                if ok:
                    fr_successes[mode] += 1
                    successes[agent_name] += 1
            elif txn.role == "backrun-block":
                if where is not None and where[0] == txn.intended_round:
                    successes[agent_name] += 1
            elif txn.role in ("frontrun-net", "frontrun-tolerating"):
                if where is None:
                    continue
                victim = self.inclusion.get(txn.target_txid)
                before_victim = victim is None or where < victim
                if txn.role == "frontrun-tolerating":
                    if victim is not None and where < victim:
                        successes[agent_name] += 1
                elif before_victim:
                    successes[agent_name] += 1
        for agent in self.agents:
            if agent.kind == "clogger":
                rounds = [r for r in agent.clog_rounds()
                          if r <= self.cfg.duration_blocks]
                attempts[agent.name] = len(rounds)
                successes[agent.name] = sum(
                    1 for r in rounds if mode_of.get(r) == "fee")
        flip = next((b.round for b in self.blocks if b.mode == "fee"), None)
        return SimReport(
            ordering_modes=tuple(b.mode for b in self.blocks),
            backrun_octile_histogram=tuple(histogram),
            backrun_adjacency_rate=(
                adjacent / backruns_included if backruns_included else 0.0),
            frontrun_success_rate_fcfs=(
                fr_successes["fcfs"] / fr_attempts["fcfs"]
                if fr_attempts["fcfs"] else 0.0),
            frontrun_success_rate_fee=(
                fr_successes["fee"] / fr_attempts["fee"]
                if fr_attempts["fee"] else 0.0),
            clog_total_cost=clog_cost,
            fee_flip_round=flip,
            txns_emitted=len(self.txns),
            txns_included=len(self.confirmed),
            txns_unconfirmed=len(self.txns) - len(self.confirmed),
            backruns_included=backruns_included,
            agent_outcomes={
                name: AgentOutcome(attempts[name], successes[name])
                for name in sorted(attempts)},
            blocks=tuple(self.blocks) if keep_trace else ())


def simulate(config: SimConfig, keep_trace: bool = False) -> SimReport:
    """Run one simulation to completion and aggregate its report.

    ``keep_trace`` attaches per-block inclusion records for property
    checks; the trace never enters the canonical JSON form.
    """
    sim = _Sim(config)
    sim.run()
    return sim.report(keep_trace)


def load_sim_config(path: str, seed: Optional[int] = None) -> SimConfig:
    """Read a SimConfig from a TOML or JSON file; ``seed`` overrides."""
    if path.endswith(".json"):
        with open(path, "rb") as fh:
            raw = json.load(fh)
    else:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    return sim_config_from_dict(raw, seed=seed)


def sim_config_from_dict(raw: dict, seed: Optional[int] = None) -> SimConfig:
    try:
        latency = LatencyModel(**raw.get("latency", {}))
        agents = tuple(
            AgentSpec(kind=a["kind"], attach_relay=a.get("attach_relay", 0),
                      params=a.get("params", {}))
            for a in raw.get("agents", []))
        return SimConfig(
            n_relays=raw["n_relays"],
            n_participants=raw["n_participants"],
            n_clients=raw["n_clients"],
            mempool_congestion_threshold=raw["mempool_congestion_threshold"],
            max_block_txns=raw["max_block_txns"],
            duration_blocks=raw["duration_blocks"],
            seed=seed if seed is not None else raw.get("seed", 0),
            agents=agents,
            latency=latency,
            block_interval_ms=raw.get("block_interval_ms", DEFAULT_BLOCK_INTERVAL_MS),
            min_fee=raw.get("min_fee", DEFAULT_MIN_FEE),
            proposer_selection=raw.get("proposer_selection", "round-robin"),
            stakes=tuple(raw.get("stakes", ())))
    except KeyError as exc:
        raise ConfigError(f"missing config field {exc}") from exc
    except TypeError as exc:
        raise ConfigError(f"bad config shape: {exc}") from exc


# -- ordering-technique applicability ------------------------------------

@dataclass(frozen=True)
class ApplicabilityCell:
    technique: str
    state: str
    success_rate: float
    attempts: int

    @property
    def applies(self) -> bool:
        return self.success_rate > 0.5


EXPECTED_APPLICABILITY = {
    ("destructive-frontrun", "block-state"): True,
    ("destructive-frontrun", "network-state"): False,
    ("tolerating-frontrun", "block-state"): False,
    ("tolerating-frontrun", "network-state"): False,
    ("backrun", "block-state"): True,
    ("backrun", "network-state"): True,
    ("clogging", "block-state"): True,
    ("clogging", "network-state"): True,
}


def _scenario_base(seed: int, agents: list[AgentSpec], *,
                   threshold: int = 5000, duration: int = 40) -> SimConfig:
    return SimConfig(
        n_relays=2, n_participants=1, n_clients=1,
        mempool_congestion_threshold=threshold, max_block_txns=600,
        duration_blocks=duration, seed=seed, agents=tuple(agents),
        latency=LatencyModel(0, 2, 1))


def _rate_of(report: SimReport, agent_name: str) -> tuple[float, int]:
    outcome = report.agent_outcomes[agent_name]
    return outcome.rate, outcome.attempts


def ordering_applicability_check(seed: int = 7) -> list[ApplicabilityCell]:
    """Empirically fill the ordering-technique applicability table.

    One scenario runs per (technique, state) cell; a cell applies when its
    measured success rate exceeds 0.5 under FCFS conditions.  Frontrunning
    on network state loses to propagation physics, tolerating frontrunning
    additionally needs a target it can never precede, and both backrunning
    states plus clogging succeed by construction of the ordering rule.
    """
    victim = AgentSpec("victim-trader", 0, {"name": "victim", "txns_per_block": 5})
    cells = []

    fr_block = AgentSpec("blockstate-frontrunner", 1,
                         {"name": "fr", "issue_offset_ms": 1})
    report = simulate(_scenario_base(seed, [victim, fr_block]))
    rate, n = _rate_of(report, "fr")
    cells.append(ApplicabilityCell("destructive-frontrun", "block-state", rate, n))

    fr_net = AgentSpec("network-frontrunner", 1,
                       {"name": "fr", "target": "victim", "reaction_delay_ms": 50})
    report = simulate(_scenario_base(seed + 1, [victim, fr_net]))
    rate, n = _rate_of(report, "fr")
    cells.append(ApplicabilityCell("destructive-frontrun", "network-state", rate, n))

    tol_block = AgentSpec("tolerating-frontrunner", 1,
                          {"name": "fr", "target": "victim", "state": "block",
                           "reaction_delay_ms": 1})
    report = simulate(_scenario_base(seed + 2, [victim, tol_block]))
    rate, n = _rate_of(report, "fr")
    cells.append(ApplicabilityCell("tolerating-frontrun", "block-state", rate, n))

    tol_net = AgentSpec("tolerating-frontrunner", 1,
                        {"name": "fr", "target": "victim", "state": "network",
                         "reaction_delay_ms": 50})
    report = simulate(_scenario_base(seed + 3, [victim, tol_net]))
    rate, n = _rate_of(report, "fr")
    cells.append(ApplicabilityCell("tolerating-frontrun", "network-state", rate, n))

    br_block = AgentSpec("blockstate-backrunner", 1,
                         {"name": "br", "issue_offset_ms": 1})
    report = simulate(_scenario_base(seed + 4, [victim, br_block]))
    rate, n = _rate_of(report, "br")
    cells.append(ApplicabilityCell("backrun", "block-state", rate, n))

    br_net = AgentSpec("network-backrunner", 1,
                       {"name": "br", "target": "victim", "reaction_delay_ms": 5})
    report = simulate(_scenario_base(seed + 5, [victim, br_net]))
    rate, n = _rate_of(report, "br")
    cells.append(ApplicabilityCell("backrun", "network-state", rate, n))

    for state, scenario_seed in (("block-state", seed + 6),
                                 ("network-state", seed + 7)):
        clogger = AgentSpec("clogger", 1, {
            "name": "clog", "batch_size": 3000, "start_block": 2, "blocks": 5})
        config = _scenario_base(scenario_seed, [victim, clogger],
                                threshold=500, duration=10)
        report = simulate(config)
        rate, n = _rate_of(report, "clog")
        cells.append(ApplicabilityCell("clogging", state, rate, n))
    return cells


__all__ = [
    "AGENT_KINDS", "AgentOutcome", "AgentSpec", "ApplicabilityCell",
    "BlockRecord", "ConfigError", "DEFAULT_BLOCK_INTERVAL_MS", "DEFAULT_MIN_FEE",
    "EXPECTED_APPLICABILITY", "LatencyModel", "RELAY_FANOUT", "SimConfig",
    "SimReport", "load_sim_config", "ordering_applicability_check",
    "sim_config_from_dict", "simulate",
]
