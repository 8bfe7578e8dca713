"""Community structure over layered snapshots.

Three community kinds exist:

* PP — physical-proximity communities found by an overlapping detector
  on the social layer (access points excluded).  Detection is pluggable;
  the built-in detector seeds candidate communities from triangles and
  grows them greedily, admitting a neighbour when its connectivity into
  the candidate is at least ``tau`` times the candidate's internal
  density, then fuses near-duplicate candidates whose overlap score
  exceeds ``beta``.
* AP — one community per access point: the AP plus every user currently
  attributed to its area.
* SC — space-crossing communities produced by combining the other two
  kinds and by promoting whatever remains unmerged.

Combination happens in two passes.  The overlap pass merges PP and AP
communities whose shared substructure score exceeds ``alpha``; merging
is transitive (scores are evaluated between the original communities and
connected groups collapse together), which keeps the result independent
of merge order and monotone in ``alpha``.  The ring pass then unions the
communities anchored at ring-adjacent access points, once, producing one
pair community per distinct ring adjacency.

A :class:`CommunityRegistry` freezes the outcome for one interval and can
be advanced event-by-event: :func:`track_change` re-detects only the
social components touched by a change and re-runs the combination
passes, so the tracked registry always matches what a from-scratch
rebuild on the final graph would produce.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from math import comb
from typing import Iterable, Mapping, Protocol, Sequence

from .errors import ConfigurationError, TrackingStateError
from .graph import SnapshotGraph, make_structural_snapshot
from .trace import APDesignation, Pair, normalize_pair


class CommunityKind(Enum):
    PP = "PP"
    AP = "AP"
    SC = "SC"


@dataclass(frozen=True)
class Community:
    """A node group with the snapshot edges induced inside it."""

    members: frozenset[int]
    intra_edges: frozenset[Pair]
    kind: CommunityKind
    anchor_aps: frozenset[int] = frozenset()
    id: int | None = None

    def __post_init__(self) -> None:
        if not self.members:
            raise ConfigurationError("a community cannot be empty")
        for a, b in self.intra_edges:
            if a not in self.members or b not in self.members:
                raise ConfigurationError(f"intra edge {(a, b)} leaves the member set")

    @property
    def canonical_key(self) -> tuple[int, ...]:
        return tuple(sorted(self.members))

    def relabel(self, new_id: int) -> "Community":
        return replace(self, id=new_id)


def _sorted_communities(comms: Iterable[Community]) -> tuple[Community, ...]:
    return tuple(sorted(comms, key=lambda c: c.canonical_key))


# ======================================================================
# Shared-substructure score
# ======================================================================

def shared_substructure(a: Community, b: Community) -> float:
    """Overlap score in [0, 2]: shared-edge ratio plus shared-member ratio.

    Each ratio is the intersection size over the smaller side's size; a
    ratio with a zero denominator contributes 0.
    """
    score = 0.0
    min_edges = min(len(a.intra_edges), len(b.intra_edges))
    if min_edges > 0:
        score += len(a.intra_edges & b.intra_edges) / min_edges
    min_members = min(len(a.members), len(b.members))
    if min_members > 0:
        score += len(a.members & b.members) / min_members
    return score


# ======================================================================
# Proximity detection
# ======================================================================

class ProximityDetector(Protocol):
    """Anything that can find overlapping groups on a social adjacency."""

    def detect_on(
        self, adjacency: Mapping[int, set[int]], component: Sequence[int]
    ) -> list[frozenset[int]]:
        ...


def _components(adjacency: Mapping[int, set[int]]) -> list[list[int]]:
    seen: set[int] = set()
    comps: list[list[int]] = []
    for start in sorted(adjacency):
        if start in seen:
            continue
        comp = []
        stack = [start]
        seen.add(start)
        while stack:
            n = stack.pop()
            comp.append(n)
            for m in adjacency[n]:
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        comps.append(sorted(comp))
    return comps


def _component_of(adjacency: Mapping[int, set[int]], start: int) -> list[int]:
    if start not in adjacency:
        return [start]
    seen = {start}
    stack = [start]
    while stack:
        n = stack.pop()
        for m in adjacency[n]:
            if m not in seen:
                seen.add(m)
                stack.append(m)
    return sorted(seen)


@dataclass(frozen=True)
class TriangleGrowthDetector:
    """Built-in overlapping detector (triangle seeds, greedy density growth).

    tau:  admission factor — a frontier node joins when the fraction of
          current members it links to is >= tau * internal density.
    beta: near-duplicate fusion threshold on the shared-substructure
          score of two grown candidates.
    """

    tau: float = 0.5
    beta: float = 0.6

    def __post_init__(self) -> None:
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigurationError(f"tau must lie in [0, 1], got {self.tau}")
        if not 0.0 <= self.beta <= 2.0:
            raise ConfigurationError(f"beta must lie in [0, 2], got {self.beta}")

    def detect_on(
        self, adjacency: Mapping[int, set[int]], component: Sequence[int]
    ) -> list[frozenset[int]]:
        adj = {n: set(adjacency.get(n, ())) for n in component}
        triangles: list[tuple[int, int, int]] = []
        for u in sorted(adj):
            for v in sorted(adj[u]):
                if v <= u:
                    continue
                for w in sorted(adj[u] & adj[v]):
                    if w > v:
                        triangles.append((u, v, w))

        candidates: list[frozenset[int]] = []
        for tri in triangles:
            seed = frozenset(tri)
            if any(seed <= cand for cand in candidates):
                continue
            grown = self._grow(set(tri), adj)
            # Keep only maximal candidates; growth is deterministic so the
            # scan order (sorted triangles) pins the outcome.
            candidates = [c for c in candidates if not c < grown]
            if not any(grown <= c for c in candidates):
                candidates.append(grown)

        return self._fuse(candidates, adj)

    def _grow(self, members: set[int], adj: Mapping[int, set[int]]) -> frozenset[int]:
        while True:
            density = self._density(members, adj)
            frontier = sorted(set().union(*(adj[m] for m in members)) - members)
            best: tuple[float, int] | None = None
            for n in frontier:
                ratio = len(adj[n] & members) / len(members)
                if ratio >= self.tau * density:
                    if best is None or ratio > best[0] or (ratio == best[0] and n < best[1]):
                        best = (ratio, n)
            if best is None:
                return frozenset(members)
            members.add(best[1])

    @staticmethod
    def _density(members: set[int], adj: Mapping[int, set[int]]) -> float:
        n = len(members)
        if n < 2:
            return 0.0
        inside = sum(1 for u in members for v in adj[u] if v in members and v > u)
        return inside / comb(n, 2)

    def _fuse(
        self, candidates: list[frozenset[int]], adj: Mapping[int, set[int]]
    ) -> list[frozenset[int]]:
        if not candidates:
            return []
        comms = [
            Community(
                members=c,
                intra_edges=frozenset(
                    (u, v) for u in c for v in adj[u] if v in c and v > u
                ),
                kind=CommunityKind.PP,
            )
            for c in candidates
        ]
        parent = list(range(len(comms)))

        def find(i: int) -> int:
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for i in range(len(comms)):
            for j in range(i + 1, len(comms)):
                if shared_substructure(comms[i], comms[j]) > self.beta:
                    parent[find(j)] = find(i)

        groups: dict[int, set[int]] = {}
        for i, cand in enumerate(candidates):
            groups.setdefault(find(i), set()).update(cand)
        return sorted((frozenset(g) for g in groups.values()), key=lambda s: tuple(sorted(s)))


DEFAULT_DETECTOR = TriangleGrowthDetector()


def detect_pp(
    snapshot: SnapshotGraph, detector: ProximityDetector | None = None
) -> tuple[Community, ...]:
    """Run proximity detection on the social layer (access points excluded).

    Detection is strictly component-local, so incremental tracking can
    re-run it on just the components an event touched.
    """
    det = detector or DEFAULT_DETECTOR
    adjacency = snapshot.social_adjacency(include_aps=False)
    sets: list[frozenset[int]] = []
    for comp in _components(adjacency):
        sets.extend(det.detect_on(adjacency, comp))
    return _as_pp_communities(sets, snapshot)


def _as_pp_communities(
    member_sets: Iterable[frozenset[int]], snapshot: SnapshotGraph
) -> tuple[Community, ...]:
    comms = [
        Community(members=ms, intra_edges=snapshot.induced_edges(ms), kind=CommunityKind.PP)
        for ms in set(member_sets)
    ]
    return _sorted_communities(comms)


# ======================================================================
# AP communities and the two combination passes
# ======================================================================

def build_ap_communities(snapshot: SnapshotGraph) -> tuple[Community, ...]:
    """One community per access point: the AP plus the users in its area."""
    comms = []
    for ap in sorted(snapshot.aps.ids):
        members = frozenset({ap} | set(snapshot.area_users(ap)))
        comms.append(
            Community(
                members=members,
                intra_edges=snapshot.induced_edges(members),
                kind=CommunityKind.AP,
                anchor_aps=frozenset({ap}),
            )
        )
    return _sorted_communities(comms)


def absorb_contained_pp(
    pp: Iterable[Community], snapshot: SnapshotGraph
) -> tuple[Community, ...]:
    """Drop PP communities whose members are all inside AP areas.

    Such a group is fully represented by AP communities already; keeping
    it would double-count the same structure.
    """
    kept = [
        c
        for c in pp
        if not all(snapshot.membership_of(m) is not None for m in c.members)
    ]
    return _sorted_communities(kept)


def combine_overlapping(
    pp: Sequence[Community], ap: Sequence[Community], alpha: float
) -> tuple[Community, ...]:
    """Merge PP and AP communities whose shared substructure exceeds ``alpha``.

    Scores are evaluated between the original communities and connected
    groups collapse into one SC community, so the outcome is independent
    of merge order and the grouping can only get finer as ``alpha``
    grows.
    """
    if not 0.0 <= alpha <= 2.0:
        raise ConfigurationError(f"alpha must lie in [0, 2], got {alpha}")
    items = list(pp) + list(ap)
    n_pp = len(pp)
    parent = list(range(len(items)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n_pp):
        for j in range(n_pp, len(items)):
            if shared_substructure(items[i], items[j]) > alpha:
                parent[find(j)] = find(i)

    groups: dict[int, list[Community]] = {}
    for i, c in enumerate(items):
        groups.setdefault(find(i), []).append(c)

    out: list[Community] = []
    for group in groups.values():
        if len(group) == 1:
            out.append(group[0])
            continue
        members = frozenset().union(*(c.members for c in group))
        intra = frozenset().union(*(c.intra_edges for c in group))
        anchors = frozenset().union(*(c.anchor_aps for c in group))
        out.append(
            Community(members=members, intra_edges=intra, kind=CommunityKind.SC, anchor_aps=anchors)
        )
    return _sorted_communities(out)


def combine_ring_neighbors(
    communities: Sequence[Community], aps: APDesignation
) -> tuple[Community, ...]:
    """Union the communities anchored at ring-adjacent access points.

    Runs once (no chaining): every distinct ring adjacency yields one
    pair community, and the anchored inputs are consumed by the pairs
    they participate in.  Communities with no AP anchor pass through.
    With a single access point there are no adjacencies and nothing
    changes.
    """
    adjacencies = aps.ring_adjacencies()
    anchored: dict[int, int] = {}
    for idx, c in enumerate(communities):
        for ap in c.anchor_aps:
            if ap in anchored:
                raise TrackingStateError(f"two communities anchored at access point {ap}")
            anchored[ap] = idx

    consumed: set[int] = set()
    pairs: list[Community] = []
    for x, y in adjacencies:
        sides = [anchored[a] for a in (x, y) if a in anchored]
        if not sides:
            continue
        group = [communities[i] for i in dict.fromkeys(sides)]
        consumed.update(sides)
        members = frozenset().union(*(c.members for c in group))
        intra = frozenset().union(*(c.intra_edges for c in group))
        anchors = frozenset().union(*(c.anchor_aps for c in group))
        pairs.append(
            Community(members=members, intra_edges=intra, kind=CommunityKind.SC, anchor_aps=anchors)
        )

    rest = [c for i, c in enumerate(communities) if i not in consumed]
    return tuple(pairs) + tuple(rest)


# ======================================================================
# Registry
# ======================================================================

PIPELINE_SC = "sc"
PIPELINE_PP_ONLY = "pp"


@dataclass(frozen=True)
class CommunityRegistry:
    """Frozen community state for one interval.

    ``sc`` is canonically ordered (by sorted member tuple); activity
    vectors use that order, and SC ids stay stable across tracked events
    while a community keeps more than half of its previous members.
    """

    t: int
    pp: tuple[Community, ...]
    ap: tuple[Community, ...]
    sc: tuple[Community, ...]
    next_sc_id: int
    membership_index: dict[int, frozenset[int]] = field(init=False)

    def __post_init__(self) -> None:
        index: dict[int, set[int]] = {}
        for c in self.sc:
            if c.id is None:
                raise ConfigurationError("registry SC communities must carry ids")
            for m in c.members:
                index.setdefault(m, set()).add(c.id)
        object.__setattr__(
            self, "membership_index", {n: frozenset(ids) for n, ids in index.items()}
        )

    def communities_of(self, node: int) -> frozenset[int]:
        return self.membership_index.get(node, frozenset())

    def sc_by_id(self, sc_id: int) -> Community:
        for c in self.sc:
            if c.id == sc_id:
                return c
        raise KeyError(sc_id)

    @property
    def has_ap_communities(self) -> bool:
        return bool(self.ap)

    def dump(self) -> str:
        lines = [f"# t={self.t}"]
        for c in self.sc:
            lines.append(f"SC {c.id} : " + " ".join(str(m) for m in c.canonical_key))
        return "\n".join(lines) + "\n"


def empty_registry(t: int = -1) -> CommunityRegistry:
    return CommunityRegistry(t=t, pp=(), ap=(), sc=(), next_sc_id=0)


def _promote(c: Community) -> Community:
    if c.kind is CommunityKind.SC:
        return c
    return replace(c, kind=CommunityKind.SC)


def _finalize_sc(
    candidates: Iterable[Community],
    snapshot: SnapshotGraph,
    previous: CommunityRegistry | None,
) -> tuple[tuple[Community, ...], int]:
    """Canonicalise, refresh induced edges, and assign SC ids.

    New communities inherit the id of a previous community they retain
    more than half the members of (best overlap wins, each old id used
    once); everything else gets a fresh id.
    """
    fresh = [
        Community(
            members=c.members,
            intra_edges=snapshot.induced_edges(c.members),
            kind=CommunityKind.SC,
            anchor_aps=c.anchor_aps,
        )
        for c in candidates
    ]
    fresh.sort(key=lambda c: c.canonical_key)

    if previous is None:
        assigned = [c.relabel(i) for i, c in enumerate(fresh)]
        return tuple(assigned), len(assigned)

    available = {c.id: c.members for c in previous.sc}
    next_id = previous.next_sc_id
    assigned = []
    for c in fresh:
        best_id: int | None = None
        best_overlap = 0
        for old_id, old_members in sorted(available.items()):
            overlap = len(c.members & old_members)
            if 2 * overlap > len(old_members) and overlap > best_overlap:
                best_id = old_id
                best_overlap = overlap
        if best_id is not None:
            del available[best_id]
            assigned.append(c.relabel(best_id))
        else:
            assigned.append(c.relabel(next_id))
            next_id += 1
    return tuple(assigned), next_id


def _registry_from_pp(
    snapshot: SnapshotGraph,
    pp_sets: Iterable[frozenset[int]],
    alpha: float,
    pipeline: str,
    previous: CommunityRegistry | None,
) -> CommunityRegistry:
    pp = _as_pp_communities(pp_sets, snapshot)
    if pipeline == PIPELINE_PP_ONLY:
        sc, next_id = _finalize_sc(map(_promote, pp), snapshot, previous)
        return CommunityRegistry(t=snapshot.t, pp=pp, ap=(), sc=sc, next_sc_id=next_id)
    if pipeline != PIPELINE_SC:
        raise ConfigurationError(f"unknown pipeline {pipeline!r}")
    ap = build_ap_communities(snapshot)
    kept_pp = absorb_contained_pp(pp, snapshot)
    merged = combine_overlapping(kept_pp, ap, alpha)
    combined = combine_ring_neighbors(merged, snapshot.aps)
    sc, next_id = _finalize_sc(map(_promote, combined), snapshot, previous)
    return CommunityRegistry(t=snapshot.t, pp=pp, ap=ap, sc=sc, next_sc_id=next_id)


def build_registry(
    snapshot: SnapshotGraph,
    alpha: float,
    detector: ProximityDetector | None = None,
    pipeline: str = PIPELINE_SC,
    previous: CommunityRegistry | None = None,
) -> CommunityRegistry:
    """Full pipeline: detect, absorb, overlap-merge, ring-merge, promote."""
    det = detector or DEFAULT_DETECTOR
    adjacency = snapshot.social_adjacency(include_aps=False)
    sets: list[frozenset[int]] = []
    for comp in _components(adjacency):
        sets.extend(det.detect_on(adjacency, comp))
    return _registry_from_pp(snapshot, sets, alpha, pipeline, previous)


# ======================================================================
# Dynamic tracking
# ======================================================================

class ChangeKind(Enum):
    ADD_NODE = "add-node"
    REMOVE_NODE = "remove-node"
    ADD_EDGE = "add-edge"
    REMOVE_EDGE = "remove-edge"


@dataclass(frozen=True)
class ChangeEvent:
    """A single structural change between consecutive intervals.

    Edges joining a user and an access point toggle area containment;
    edges between two users are social ties.
    """

    t: int
    kind: ChangeKind
    node: int | None = None
    edge: Pair | None = None

    @classmethod
    def add_node(cls, t: int, node: int) -> "ChangeEvent":
        return cls(t, ChangeKind.ADD_NODE, node=node)

    @classmethod
    def remove_node(cls, t: int, node: int) -> "ChangeEvent":
        return cls(t, ChangeKind.REMOVE_NODE, node=node)

    @classmethod
    def add_edge(cls, t: int, u: int, v: int) -> "ChangeEvent":
        return cls(t, ChangeKind.ADD_EDGE, edge=normalize_pair(u, v))

    @classmethod
    def remove_edge(cls, t: int, u: int, v: int) -> "ChangeEvent":
        return cls(t, ChangeKind.REMOVE_EDGE, edge=normalize_pair(u, v))


def apply_change(snapshot: SnapshotGraph, event: ChangeEvent) -> SnapshotGraph:
    """Apply one change to the structural layers, validating consistency."""
    nodes = set(snapshot.nodes)
    social = set(snapshot.social_edges)
    ap_links = set(snapshot.ap_links_raw)
    aps = snapshot.aps

    if event.kind is ChangeKind.ADD_NODE:
        u = _require_node_payload(event)
        if u in nodes:
            raise TrackingStateError(f"cannot add node {u}: already present")
        nodes.add(u)
    elif event.kind is ChangeKind.REMOVE_NODE:
        u = _require_node_payload(event)
        if u not in nodes:
            raise TrackingStateError(f"cannot remove node {u}: not present")
        if u in aps:
            raise TrackingStateError(f"cannot remove access point {u}: the ring is fixed")
        nodes.discard(u)
        social = {e for e in social if u not in e}
        ap_links = {e for e in ap_links if u not in e}
    else:
        edge = event.edge
        if edge is None:
            raise TrackingStateError(f"{event.kind.value} event needs an edge payload")
        a, b = edge
        if a not in nodes or b not in nodes:
            raise TrackingStateError(f"edge {edge} references an unknown node")
        if a in aps and b in aps:
            raise TrackingStateError(f"edge {edge} joins two access points; the ring is fixed")
        target = ap_links if (a in aps) != (b in aps) else social
        if event.kind is ChangeKind.ADD_EDGE:
            if edge in target:
                raise TrackingStateError(f"cannot add edge {edge}: already present")
            target.add(edge)
        else:
            if edge not in target:
                raise TrackingStateError(f"cannot remove edge {edge}: not present")
            target.discard(edge)

    return make_structural_snapshot(
        nodes=nodes,
        aps=aps,
        social_edges=social,
        ap_links=ap_links,
        t=event.t,
        weights=snapshot.weights,
    )


def _require_node_payload(event: ChangeEvent) -> int:
    if event.node is None:
        raise TrackingStateError(f"{event.kind.value} event needs a node payload")
    return event.node


def track_change(
    registry: CommunityRegistry,
    snapshot: SnapshotGraph,
    event: ChangeEvent,
    alpha: float,
    detector: ProximityDetector | None = None,
    pipeline: str = PIPELINE_SC,
) -> tuple[CommunityRegistry, SnapshotGraph]:
    """Advance the registry across one change event.

    ``snapshot`` is the graph the registry currently describes; the
    updated snapshot is returned alongside the new registry.  Proximity
    detection is re-run only on the social components the event touched;
    combination runs on the refreshed community lists, which is exactly
    what a from-scratch rebuild would do.
    """
    det = detector or DEFAULT_DETECTOR
    post = apply_change(snapshot, event)

    pre_adj = snapshot.social_adjacency(include_aps=False)
    post_adj = post.social_adjacency(include_aps=False)

    invalid: set[int] = set()
    redetect_roots: list[int] = []
    kind = event.kind
    if kind is ChangeKind.REMOVE_NODE:
        u = event.node
        assert u is not None
        invalid.update(_component_of(pre_adj, u))
        redetect_roots.extend(sorted(pre_adj.get(u, ())))
    elif kind in (ChangeKind.ADD_EDGE, ChangeKind.REMOVE_EDGE):
        assert event.edge is not None
        a, b = event.edge
        if not ((a in snapshot.aps) != (b in snapshot.aps)):
            # Social tie: connectivity around both endpoints may change.
            invalid.update(_component_of(pre_adj, a))
            invalid.update(_component_of(pre_adj, b))
            redetect_roots.extend((a, b))
        # Containment toggles leave the social layer alone: AP communities
        # and induced edges are rebuilt below either way.
    # ADD_NODE: an isolated node joins; no proximity structure to redo.

    kept = [set(c.members) for c in registry.pp if not (c.members & invalid)]
    seen_comps: set[tuple[int, ...]] = set()
    fresh: list[frozenset[int]] = []
    for root in redetect_roots:
        comp = _component_of(post_adj, root)
        key = tuple(comp)
        if key in seen_comps:
            continue
        seen_comps.add(key)
        fresh.extend(det.detect_on(post_adj, comp))

    pp_sets = {frozenset(s) for s in kept} | set(fresh)
    new_registry = _registry_from_pp(post, pp_sets, alpha, pipeline, previous=registry)
    return new_registry, post
