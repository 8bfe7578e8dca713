"""Forwarding decision rules.

Every router is a pure function of (holder, encountered peer, message,
shared state) returning a :class:`RouterDecision`.  The simulation
engine owns the state object and applies the decisions; delivery to the
destination itself is short-circuited by the engine for all routers, so
the rules below only describe relay choices.

Routers:

* ``saas`` — inside an AP community the holder hands a copy to every
  co-member that lacks one (similarity plays no role there); otherwise
  the single copy moves to the encountered peer exactly when the peer's
  social similarity to the destination strictly exceeds the holder's.
* ``bubble-rap`` — centrality hierarchy: bubble up by global betweenness
  until the destination's community is reached, then by local
  betweenness within it.
* ``nguyen`` — hand off when the peer shares strictly more communities
  with the destination than the holder does.
* ``epidemic`` — replicate on every opportunity (upper bound).
* ``direct`` — never relay; only the destination short-circuit delivers
  (lower bound).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Callable, Mapping

if TYPE_CHECKING:  # pragma: no cover - import cycle guard for type hints
    from .simulator import Message, RouterState


class Action(Enum):
    FORWARD = "forward"      # hand the single copy to the peer, drop ours
    REPLICATE = "replicate"  # give copies to the targets, keep ours
    HOLD = "hold"


@dataclass(frozen=True)
class RouterDecision:
    action: Action
    targets: tuple[int, ...] = ()


HOLD = RouterDecision(Action.HOLD)


def saas_decide(holder: int, encountered: int, msg: "Message", state: "RouterState") -> RouterDecision:
    co_members = state.ap_co_members(holder)
    if co_members:
        targets = tuple(m for m in co_members if not state.has_copy(m, msg.id))
        return RouterDecision(Action.REPLICATE, targets) if targets else HOLD
    if state.similarity(encountered, msg.dst) > state.similarity(holder, msg.dst):
        return RouterDecision(Action.FORWARD, (encountered,))
    return HOLD


def bubble_rap_decide(holder: int, encountered: int, msg: "Message", state: "RouterState") -> RouterDecision:
    dst_comms = state.communities_of(msg.dst)
    holder_shared = state.communities_of(holder) & dst_comms
    peer_shared = state.communities_of(encountered) & dst_comms
    if holder_shared:
        if peer_shared and _local_rank(state, encountered, peer_shared) > _local_rank(
            state, holder, holder_shared
        ):
            return RouterDecision(Action.FORWARD, (encountered,))
        return HOLD
    if peer_shared:
        return RouterDecision(Action.FORWARD, (encountered,))
    if state.global_centrality(encountered) > state.global_centrality(holder):
        return RouterDecision(Action.FORWARD, (encountered,))
    return HOLD


def _local_rank(state: "RouterState", node: int, shared_comms: frozenset[int]) -> float:
    return max(state.local_centrality(node, cid) for cid in shared_comms)


def nguyen_decide(holder: int, encountered: int, msg: "Message", state: "RouterState") -> RouterDecision:
    dst_comms = state.communities_of(msg.dst)
    holder_common = len(state.communities_of(holder) & dst_comms)
    peer_common = len(state.communities_of(encountered) & dst_comms)
    if peer_common > holder_common:
        return RouterDecision(Action.FORWARD, (encountered,))
    return HOLD


def epidemic_decide(holder: int, encountered: int, msg: "Message", state: "RouterState") -> RouterDecision:
    if state.has_copy(encountered, msg.id):
        return HOLD
    return RouterDecision(Action.REPLICATE, (encountered,))


def direct_decide(holder: int, encountered: int, msg: "Message", state: "RouterState") -> RouterDecision:
    if encountered == msg.dst:
        return RouterDecision(Action.FORWARD, (encountered,))
    return HOLD


DecideFn = Callable[[int, int, "Message", "RouterState"], RouterDecision]

ROUTERS: dict[str, DecideFn] = {
    "saas": saas_decide,
    "bubble-rap": bubble_rap_decide,
    "nguyen": nguyen_decide,
    "epidemic": epidemic_decide,
    "direct": direct_decide,
}


# ======================================================================
# Betweenness centrality
# ======================================================================

def betweenness_centrality(adjacency: Mapping[int, set[int]]) -> dict[int, float]:
    """Unweighted shortest-path betweenness, endpoints excluded.

    Each unordered node pair contributes once, so on the path a-b-c the
    middle node scores exactly 1.  Brandes' accumulation over every
    source counts each pair twice on an undirected graph; the final
    halving corrects for that.
    """
    nodes = sorted(adjacency)
    score = {n: 0.0 for n in nodes}
    for source in nodes:
        # BFS with shortest-path counting.
        dist = {source: 0}
        sigma = {source: 1.0}
        preds: dict[int, list[int]] = {source: []}
        order: list[int] = []
        queue = deque([source])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in sorted(adjacency.get(v, ())):
                if w not in dist:
                    dist[w] = dist[v] + 1
                    sigma[w] = 0.0
                    preds[w] = []
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        # Dependency accumulation from the leaves back to the source.
        delta = {v: 0.0 for v in order}
        for w in reversed(order):
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != source:
                score[w] += delta[w]
    return {n: s / 2.0 for n, s in score.items()}
