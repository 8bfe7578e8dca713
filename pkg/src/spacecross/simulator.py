"""Deterministic trace replay for store-carry-forward routing.

The engine replays connectivity events in timestamp order and gives the
configured router a chance to act at every transfer opportunity.  Two
kinds of opportunity exist, and they are the same for every router:

* a direct link between two mobile nodes while it is up;
* relay through an access point: any two users inside the same AP area
  can exchange messages via the AP (one hop each way).  The AP itself
  never stores a message.

Community knowledge (the registry, encounter-ratio weights, centrality
tables and the similarity memo) is refreshed on a fixed cadence, which
models nodes learning structure from periodic scans rather than
instantaneously.  Before the first refresh the registry is empty: all
similarities are 0 and only AP spreading or direct encounters move
messages.

Traffic, the only random ingredient, comes from a dedicated seeded
generator, so a (trace, config) pair always produces byte-identical
metrics.  Messages whose destination is reached are counted once, at
first arrival; a message is undeliverable once ``now - created``
exceeds its TTL (a TTL of zero means the message is dead on arrival,
so nothing can ever be delivered).
"""

from __future__ import annotations

import random
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .community import (
    PIPELINE_PP_ONLY,
    PIPELINE_SC,
    CommunityRegistry,
    build_registry,
    empty_registry,
)
from .errors import ConfigurationError, WindowNotReadyError
from .graph import EncounterRatioTable, build_snapshot
from .metrics import ActivityVector, activity_vector, pearson_similarity
from .routing import ROUTERS, Action, betweenness_centrality
from .trace import UP, APDesignation, ContactEvent, Pair, node_universe, trace_span

CSV_HEADER = "router,alpha,ttl_s,seed,created,delivered,delivery_ratio,avg_latency_s"


# ======================================================================
# Messages and buffers
# ======================================================================

@dataclass(frozen=True)
class Message:
    id: int
    src: int
    dst: int
    created: int
    ttl: int
    size: int

    def alive(self, now: int) -> bool:
        return self.ttl > 0 and now - self.created <= self.ttl


class NodeBuffer:
    """Per-node message store with drop-oldest-created eviction."""

    def __init__(self, capacity: int | None) -> None:
        if capacity is not None and capacity <= 0:
            raise ConfigurationError(f"buffer capacity must be positive, got {capacity}")
        self.capacity = capacity
        self.entries: dict[int, Message] = {}
        self.used = 0

    def has(self, msg_id: int) -> bool:
        return msg_id in self.entries

    def ids_sorted(self) -> list[int]:
        return sorted(self.entries)

    def insert(self, msg: Message) -> tuple[bool, list[Message]]:
        """Store a copy; returns (stored, evicted messages)."""
        if msg.id in self.entries:
            return False, []
        if self.capacity is not None and msg.size > self.capacity:
            return False, []
        evicted: list[Message] = []
        if self.capacity is not None:
            while self.used + msg.size > self.capacity and self.entries:
                victim = min(self.entries.values(), key=lambda m: (m.created, m.id))
                evicted.append(victim)
                self.remove(victim.id)
        self.entries[msg.id] = msg
        self.used += msg.size
        return True, evicted

    def remove(self, msg_id: int) -> None:
        msg = self.entries.pop(msg_id, None)
        if msg is not None:
            self.used -= msg.size


# ======================================================================
# Configuration and results
# ======================================================================

@dataclass(frozen=True)
class SimConfig:
    router: str = "saas"
    alpha: float = 0.6
    ttl_s: int = 86_400
    seed: int = 1
    packets_per_node: int = 50
    size_min: int = 50_000
    size_max: int = 100_000
    buffer_bytes: int | None = 5_000_000
    interval_s: int = 86_400
    mode: str = "growing"
    window: int | None = None
    refresh_interval_s: int = 1_800
    pipeline: str = PIPELINE_SC
    audit: bool = False

    def __post_init__(self) -> None:
        if self.router not in ROUTERS:
            raise ConfigurationError(
                f"unknown router {self.router!r}; choose from {sorted(ROUTERS)}"
            )
        if self.pipeline not in (PIPELINE_SC, PIPELINE_PP_ONLY):
            raise ConfigurationError(f"unknown pipeline {self.pipeline!r}")
        if self.ttl_s < 0:
            raise ConfigurationError(f"ttl must be non-negative, got {self.ttl_s}")
        if self.size_min <= 0 or self.size_max < self.size_min:
            raise ConfigurationError("message size bounds must satisfy 0 < min <= max")
        if self.packets_per_node < 0:
            raise ConfigurationError("packets per node cannot be negative")
        if self.refresh_interval_s <= 0:
            raise ConfigurationError("refresh interval must be positive")
        if self.interval_s <= 0:
            raise ConfigurationError("aggregation interval must be positive")
        if self.mode not in ("growing", "sliding"):
            raise ConfigurationError(f"unknown window mode {self.mode!r}")
        if self.mode == "sliding" and (self.window is None or self.window < 1):
            raise ConfigurationError("sliding mode needs a window of >= 1 intervals")


@dataclass(frozen=True)
class AuditRecord:
    msg_id: int
    src: int
    dst: int
    created: int
    outcome: str  # delivered | expired | in_flight
    latency_s: int | None
    hops: tuple[int, ...]


@dataclass(frozen=True)
class Metrics:
    router: str
    alpha: float
    ttl_s: int
    seed: int
    created: int
    delivered: int
    delivery_ratio: float
    avg_latency_s: float | None
    expired: int = 0
    in_flight: int = 0
    audit: tuple[AuditRecord, ...] = ()

    def csv_row(self) -> str:
        latency = "" if self.avg_latency_s is None else f"{self.avg_latency_s:.3f}"
        return (
            f"{self.router},{self.alpha},{self.ttl_s},{self.seed},"
            f"{self.created},{self.delivered},{self.delivery_ratio:.6f},{latency}"
        )


def generate_traffic(
    mobiles: Sequence[int], span: int, cfg: SimConfig
) -> list[Message]:
    """Seeded message workload: every mobile node sources the same number
    of packets, created uniformly over the first half of the trace span,
    with uniformly random sizes and destinations."""
    rng = random.Random(f"{cfg.seed}:traffic")
    horizon = max(1, span // 2)
    msgs: list[Message] = []
    for src in sorted(mobiles):
        others = [n for n in sorted(mobiles) if n != src]
        if not others:
            continue
        for _ in range(cfg.packets_per_node):
            msgs.append(
                Message(
                    id=len(msgs),
                    src=src,
                    dst=others[rng.randrange(len(others))],
                    created=rng.randrange(horizon),
                    ttl=cfg.ttl_s,
                    size=rng.randint(cfg.size_min, cfg.size_max),
                )
            )
    msgs.sort(key=lambda m: (m.created, m.id))
    return msgs


# ======================================================================
# Engine
# ======================================================================

_PRIO_CONN = 0
_PRIO_REFRESH = 1
_PRIO_CREATE = 2


class RouterState:
    """The knowledge surface routers are allowed to read."""

    def __init__(self, engine: "_Engine") -> None:
        self._e = engine

    def similarity(self, node: int, dst: int) -> float:
        return self._e.similarity(node, dst)

    def has_copy(self, node: int, msg_id: int) -> bool:
        buf = self._e.buffers.get(node)
        return buf is not None and buf.has(msg_id)

    def ap_co_members(self, holder: int) -> tuple[int, ...]:
        """Mobile co-members of the holder's AP community (empty when the
        community pipeline carries no AP structure)."""
        if self._e.cfg.pipeline != PIPELINE_SC:
            return ()
        return self._e.area_co_members(holder)

    def communities_of(self, node: int) -> frozenset[int]:
        return self._e.registry.communities_of(node)

    def global_centrality(self, node: int) -> float:
        return self._e.global_centrality.get(node, 0.0)

    def local_centrality(self, node: int, sc_id: int) -> float:
        return self._e.local_centrality.get(sc_id, {}).get(node, 0.0)


class _Engine:
    def __init__(self, events: Sequence[ContactEvent], aps: APDesignation, cfg: SimConfig):
        self.events = list(events)
        self.aps = aps
        self.cfg = cfg
        self.decide = ROUTERS[cfg.router]
        self.mobiles = sorted(node_universe(self.events) - aps.ids)
        self.span = trace_span(self.events)
        self.now = 0

        self.buffers: dict[int, NodeBuffer] = {
            n: NodeBuffer(cfg.buffer_bytes) for n in self.mobiles
        }
        self.link_count: Counter[Pair] = Counter()
        self.neighbors: dict[int, set[int]] = {n: set() for n in self.mobiles}
        self.ap_link_count: Counter[Pair] = Counter()
        self.open_aps: dict[int, set[int]] = {n: set() for n in self.mobiles}
        self.member_of: dict[int, int] = {}
        self.area: dict[int, set[int]] = {ap: set() for ap in aps.ids}

        self.messages: dict[int, Message] = {}
        self.holders: dict[int, set[int]] = {}
        self.delivered_at: dict[int, int] = {}
        self.paths: dict[tuple[int, int], tuple[int, ...]] = {}
        self.final_path: dict[int, tuple[int, ...]] = {}

        self.registry: CommunityRegistry = empty_registry()
        self.weights = EncounterRatioTable(-1, cfg.mode, cfg.window, {})
        self.global_centrality: dict[int, float] = {}
        self.local_centrality: dict[int, dict[int, float]] = {}
        self._vector_memo: dict[int, ActivityVector] = {}
        self._sim_memo: dict[tuple[int, int], float] = {}
        self.state = RouterState(self)
        self._cascade: deque[tuple[int, int]] = deque()

    # ----- timeline ----------------------------------------------------------

    def run(self) -> Metrics:
        traffic = generate_traffic(self.mobiles, self.span, self.cfg)
        timeline: list[tuple[int, int, int, object]] = []
        for seq, ev in enumerate(self.events):
            timeline.append((ev.time, _PRIO_CONN, seq, ev))
        for seq, t in enumerate(
            range(self.cfg.refresh_interval_s, self.span + 1, self.cfg.refresh_interval_s)
        ):
            timeline.append((t, _PRIO_REFRESH, seq, None))
        for seq, msg in enumerate(traffic):
            timeline.append((msg.created, _PRIO_CREATE, seq, msg))
        timeline.sort(key=lambda item: item[:3])

        for time, prio, _, payload in timeline:
            self.now = time
            if prio == _PRIO_CONN:
                self._on_conn(payload)  # type: ignore[arg-type]
            elif prio == _PRIO_REFRESH:
                self._on_refresh(time)
            else:
                self._on_create(payload)  # type: ignore[arg-type]
            self._drain_cascade()

        return self._metrics(traffic)

    # ----- event handlers ----------------------------------------------------

    def _on_conn(self, ev: ContactEvent) -> None:
        a_is_ap = ev.a in self.aps
        b_is_ap = ev.b in self.aps
        if a_is_ap and b_is_ap:
            return  # backbone chatter carries no user messages
        if not a_is_ap and not b_is_ap:
            if ev.kind == UP:
                self.link_count[ev.pair] += 1
                if self.link_count[ev.pair] == 1:
                    self.neighbors[ev.a].add(ev.b)
                    self.neighbors[ev.b].add(ev.a)
                    self._pair_eval(ev.a, ev.b)
                    self._pair_eval(ev.b, ev.a)
            else:
                self.link_count[ev.pair] -= 1
                if self.link_count[ev.pair] <= 0:
                    del self.link_count[ev.pair]
                    self.neighbors[ev.a].discard(ev.b)
                    self.neighbors[ev.b].discard(ev.a)
            return

        user, ap = (ev.a, ev.b) if b_is_ap else (ev.b, ev.a)
        if user not in self.buffers:
            return
        pair = ev.pair
        if ev.kind == UP:
            self.ap_link_count[pair] += 1
            if self.ap_link_count[pair] == 1:
                self.open_aps[user].add(ap)
                self._update_membership(user)
        else:
            self.ap_link_count[pair] -= 1
            if self.ap_link_count[pair] <= 0:
                del self.ap_link_count[pair]
                self.open_aps[user].discard(ap)
                self._update_membership(user)

    def _update_membership(self, user: int) -> None:
        new_ap = min(self.open_aps[user]) if self.open_aps[user] else None
        old_ap = self.member_of.get(user)
        if new_ap == old_ap:
            return
        if old_ap is not None:
            self.area[old_ap].discard(user)
            del self.member_of[user]
        if new_ap is not None:
            self.member_of[user] = new_ap
            self.area[new_ap].add(user)
            self._on_area_entry(user, new_ap)

    def _on_area_entry(self, user: int, ap: int) -> None:
        for m in sorted(self.area[ap]):
            if m == user:
                continue
            self._pair_eval(m, user)
            self._pair_eval(user, m)

    def _on_create(self, msg: Message) -> None:
        self.messages[msg.id] = msg
        self.holders[msg.id] = set()
        self._store(msg, msg.src, origin=True)

    def _on_refresh(self, t: int) -> None:
        try:
            snapshot = build_snapshot(
                self.events, self.aps, t, self.cfg.interval_s, self.cfg.mode, self.cfg.window
            )
        except WindowNotReadyError:
            # Not enough history for the sliding window yet: aggregate what
            # exists instead of flying blind.
            snapshot = build_snapshot(self.events, self.aps, t, self.cfg.interval_s, "growing")
        previous = None if self.registry.t < 0 else self.registry
        self.registry = build_registry(
            snapshot, self.cfg.alpha, pipeline=self.cfg.pipeline, previous=previous
        )
        self.weights = snapshot.weights
        self._vector_memo.clear()
        self._sim_memo.clear()
        if self.cfg.router == "bubble-rap":
            adjacency = snapshot.social_adjacency(include_aps=False)
            for n in self.mobiles:
                adjacency.setdefault(n, set())
            self.global_centrality = betweenness_centrality(adjacency)
            self.local_centrality = {}
            for c in self.registry.sc:
                sub = {
                    n: adjacency.get(n, set()) & c.members
                    for n in sorted(c.members)
                    if n not in self.aps
                }
                self.local_centrality[c.id] = betweenness_centrality(sub)
        # Fresh knowledge can unlock handoffs on links that are already up.
        for a, b in sorted(self.link_count):
            self._pair_eval(a, b)
            self._pair_eval(b, a)
        for ap in sorted(self.area):
            members = sorted(self.area[ap])
            for h in members:
                for peer in members:
                    if peer != h:
                        self._pair_eval(h, peer)

    # ----- knowledge ----------------------------------------------------------

    def similarity(self, node: int, dst: int) -> float:
        key = (node, dst)
        hit = self._sim_memo.get(key)
        if hit is not None:
            return hit
        value = pearson_similarity(self._vector(node), self._vector(dst))
        self._sim_memo[key] = value
        return value

    def _vector(self, node: int) -> ActivityVector:
        vec = self._vector_memo.get(node)
        if vec is None:
            vec = activity_vector(node, self.registry, self.weights)
            self._vector_memo[node] = vec
        return vec

    def area_co_members(self, holder: int) -> tuple[int, ...]:
        ap = self.member_of.get(holder)
        if ap is None:
            return ()
        return tuple(m for m in sorted(self.area[ap]) if m != holder)

    # ----- transfers -----------------------------------------------------------

    def _pair_eval(self, holder: int, peer: int) -> None:
        buf = self.buffers.get(holder)
        if buf is None:
            return
        for msg_id in buf.ids_sorted():
            self._eval_msg(holder, msg_id, (peer,))

    def _eval_msg(self, holder: int, msg_id: int, peers: Iterable[int]) -> None:
        buf = self.buffers[holder]
        if not buf.has(msg_id):
            return
        msg = self.messages[msg_id]
        if msg_id in self.delivered_at:
            self._purge(msg_id, holder)
            return
        if not msg.alive(self.now):
            self._purge(msg_id, holder)
            return
        for peer in peers:
            if peer == msg.dst:
                self._deliver(msg, holder)
                return
            decision = self.decide(holder, peer, msg, self.state)
            if decision.action is Action.HOLD:
                continue
            if decision.action is Action.FORWARD:
                target = decision.targets[0]
                if not self.state.has_copy(target, msg_id) and self._store(
                    msg, target, from_node=holder
                ):
                    self._purge(msg_id, holder)
                    return
            elif decision.action is Action.REPLICATE:
                for target in decision.targets:
                    if target == msg.dst:
                        self._deliver(msg, holder)
                        return
                    if not self.state.has_copy(target, msg_id):
                        self._store(msg, target, from_node=holder)

    def _store(
        self, msg: Message, node: int, from_node: int | None = None, origin: bool = False
    ) -> bool:
        buf = self.buffers[node]
        stored, evicted = buf.insert(msg)
        for victim in evicted:
            self.holders[victim.id].discard(node)
            if self.cfg.audit:
                self.paths.pop((victim.id, node), None)
        if not stored:
            return False
        self.holders[msg.id].add(node)
        if self.cfg.audit:
            if origin:
                self.paths[(msg.id, node)] = (node,)
            else:
                assert from_node is not None
                base = self.paths.get((msg.id, from_node), (msg.src,))
                self.paths[(msg.id, node)] = base + (node,)
        self._cascade.append((node, msg.id))
        return True

    def _purge(self, msg_id: int, node: int) -> None:
        self.buffers[node].remove(msg_id)
        self.holders[msg_id].discard(node)
        if self.cfg.audit:
            self.paths.pop((msg_id, node), None)

    def _deliver(self, msg: Message, last_holder: int) -> None:
        self.delivered_at[msg.id] = self.now
        if self.cfg.audit:
            base = self.paths.get((msg.id, last_holder), (msg.src,))
            self.final_path[msg.id] = base + (msg.dst,)
        for node in sorted(self.holders[msg.id]):
            self.buffers[node].remove(msg.id)
            if self.cfg.audit:
                self.paths.pop((msg.id, node), None)
        self.holders[msg.id] = set()

    def _drain_cascade(self) -> None:
        while self._cascade:
            node, msg_id = self._cascade.popleft()
            buf = self.buffers.get(node)
            if buf is None or not buf.has(msg_id):
                continue
            reach = sorted(self.neighbors[node] | set(self.area_co_members(node)))
            if reach:
                self._eval_msg(node, msg_id, reach)

    # ----- results ---------------------------------------------------------------

    def _metrics(self, traffic: list[Message]) -> Metrics:
        created = len(traffic)
        delivered = len(self.delivered_at)
        latencies = [self.delivered_at[m.id] - m.created for m in traffic if m.id in self.delivered_at]
        expired = sum(
            1
            for m in traffic
            if m.id not in self.delivered_at and (m.ttl == 0 or self.span - m.created > m.ttl)
        )
        audit: tuple[AuditRecord, ...] = ()
        if self.cfg.audit:
            records = []
            for m in traffic:
                if m.id in self.delivered_at:
                    outcome = "delivered"
                    latency = self.delivered_at[m.id] - m.created
                    hops = self.final_path.get(m.id, (m.src, m.dst))
                elif m.ttl == 0 or self.span - m.created > m.ttl:
                    outcome, latency, hops = "expired", None, (m.src,)
                else:
                    outcome, latency, hops = "in_flight", None, (m.src,)
                records.append(
                    AuditRecord(m.id, m.src, m.dst, m.created, outcome, latency, hops)
                )
            audit = tuple(records)
        return Metrics(
            router=self.cfg.router,
            alpha=self.cfg.alpha,
            ttl_s=self.cfg.ttl_s,
            seed=self.cfg.seed,
            created=created,
            delivered=delivered,
            delivery_ratio=(delivered / created) if created else 0.0,
            avg_latency_s=(sum(latencies) / len(latencies)) if latencies else None,
            expired=expired,
            in_flight=created - delivered - expired,
            audit=audit,
        )


def run_simulation(
    events: Sequence[ContactEvent], aps: APDesignation, cfg: SimConfig
) -> Metrics:
    """Replay ``events`` under one router configuration and report metrics."""
    return _Engine(events, aps, cfg).run()
