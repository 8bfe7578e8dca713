"""Weighted social graph built from aggregated contacts.

The relationship weight between two nodes at interval ``p`` is their
encounter ratio: the fraction of all contacts in an aggregation window
that happened between exactly those two nodes.  Two window shapes are
supported:

* growing — aggregate intervals ``0 .. p`` (full history);
* sliding — aggregate intervals ``p - window .. p`` (both ends
  inclusive, so a window of ``w`` spans ``w + 1`` intervals).

Weights are symmetric by construction and sum to 1 over unordered pairs
whenever any contact was seen.

A snapshot composes four edge layers on top of those weights:

1. a link from every mobile user to the access point whose area it is
   currently inside (``ap_link``);
2. a complete graph among the users inside the same area (``ap_clique``);
3. the wired ring between access points (``ap_ring``);
4. social edges between pairs whose encounter ratio strictly exceeds the
   median positive ratio (``social``).

The same physical pair may appear in several layers; the snapshot keeps
one edge tagged with every applicable kind.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from statistics import median
from typing import Iterable, Mapping, Sequence

from .errors import ConfigurationError, WindowNotReadyError
from .trace import (
    UP,
    APDesignation,
    ContactEvent,
    IntervalCounts,
    Pair,
    contacts_per_interval,
    normalize_pair,
)

EDGE_SOCIAL = "social"
EDGE_AP_LINK = "ap_link"
EDGE_AP_CLIQUE = "ap_clique"
EDGE_AP_RING = "ap_ring"


# ======================================================================
# Encounter ratios
# ======================================================================

def _window_range(counts: IntervalCounts, p: int, mode: str, window: int | None) -> range:
    if p < 0:
        raise ConfigurationError(f"interval index must be non-negative, got {p}")
    if mode == "growing":
        lo = 0
    elif mode == "sliding":
        if window is None or window <= 0:
            raise ConfigurationError("sliding mode needs a positive window length")
        if p < window:
            raise WindowNotReadyError(
                f"sliding window of {window} intervals not ready at interval {p}; "
                "wait or use growing mode"
            )
        lo = p - window
    else:
        raise ConfigurationError(f"unknown window mode {mode!r}")
    # Intervals beyond the recorded range contribute nothing.
    return range(lo, min(p, counts.n_intervals - 1) + 1)


def encounter_ratio_growing(counts: IntervalCounts, u: int, v: int, p: int) -> float:
    """Encounter ratio of pair (u, v) aggregated over intervals 0..p."""
    return _ratio(counts, normalize_pair(u, v), _window_range(counts, p, "growing", None))


def encounter_ratio_sliding(
    counts: IntervalCounts, u: int, v: int, p: int, window: int
) -> float:
    """Encounter ratio of pair (u, v) aggregated over intervals p-window..p."""
    return _ratio(counts, normalize_pair(u, v), _window_range(counts, p, "sliding", window))


def _ratio(counts: IntervalCounts, pair: Pair, idx: range) -> float:
    denom = sum(counts.totals[i] for i in idx)
    if denom == 0:
        return 0.0
    num = sum(counts.pair_counts[i].get(pair, 0) for i in idx)
    return num / denom


@dataclass(frozen=True)
class EncounterRatioTable:
    """All pair weights at one interval, for one window shape."""

    t: int
    mode: str
    window: int | None
    _w: dict[Pair, float]

    def get(self, u: int, v: int) -> float:
        return self._w.get(normalize_pair(u, v), 0.0)

    def pairs(self) -> dict[Pair, float]:
        return dict(self._w)

    def positive_weights(self) -> list[float]:
        return [w for w in self._w.values() if w > 0.0]

    def total(self) -> float:
        return sum(self._w.values())


def build_ratio_table(
    counts: IntervalCounts, p: int, mode: str = "growing", window: int | None = None
) -> EncounterRatioTable:
    """Compute every pair's encounter ratio at interval ``p`` in one pass."""
    idx = _window_range(counts, p, mode, window)
    sums: dict[Pair, int] = {}
    denom = 0
    for i in idx:
        denom += counts.totals[i]
        for pair, c in counts.pair_counts[i].items():
            sums[pair] = sums.get(pair, 0) + c
    if denom == 0:
        return EncounterRatioTable(p, mode, window, {})
    return EncounterRatioTable(p, mode, window, {pair: c / denom for pair, c in sums.items()})


def median_social_edges(table: EncounterRatioTable) -> frozenset[Pair]:
    """Pairs whose weight strictly exceeds the median positive weight.

    The median is taken over pairs that interacted at all; silent pairs
    don't dilute it.  With a single positive pair (or all pairs equal)
    nothing passes the strict comparison.
    """
    positive = table.positive_weights()
    if not positive:
        return frozenset()
    cut = median(positive)
    return frozenset(pair for pair, w in table.pairs().items() if w > cut)


# ======================================================================
# Snapshots
# ======================================================================

@dataclass(frozen=True)
class SnapshotGraph:
    """The layered social graph at one aggregation interval.

    ``ap_links_raw`` holds the open user-to-AP links; a user inside
    several areas at once is attributed to the lowest AP id, and all
    derived layers (membership, ap_link edges, cliques) follow that
    single attribution.
    """

    t: int
    nodes: frozenset[int]
    aps: APDesignation
    social_edges: frozenset[Pair]
    ap_links_raw: frozenset[Pair]
    weights: EncounterRatioTable
    ap_membership: dict[int, int] = field(init=False)
    ap_link_edges: frozenset[Pair] = field(init=False)
    ap_clique_edges: frozenset[Pair] = field(init=False)
    ap_ring_edges: frozenset[Pair] = field(init=False)

    def __post_init__(self) -> None:
        open_aps: dict[int, list[int]] = {}
        for x, y in self.ap_links_raw:
            user, ap = (x, y) if y in self.aps else (y, x)
            if user in self.aps or ap not in self.aps:
                raise ConfigurationError(f"ap link {(x, y)} must join a user and an AP")
            open_aps.setdefault(user, []).append(ap)
        membership = {user: min(aps) for user, aps in open_aps.items()}
        links = frozenset(normalize_pair(u, ap) for u, ap in membership.items())
        cliques: set[Pair] = set()
        by_area: dict[int, list[int]] = {}
        for user, ap in membership.items():
            by_area.setdefault(ap, []).append(user)
        for users in by_area.values():
            users.sort()
            for i in range(len(users)):
                for j in range(i + 1, len(users)):
                    cliques.add((users[i], users[j]))
        object.__setattr__(self, "ap_membership", membership)
        object.__setattr__(self, "ap_link_edges", links)
        object.__setattr__(self, "ap_clique_edges", frozenset(cliques))
        object.__setattr__(self, "ap_ring_edges", self.aps.ring_edges())

    # ----- structure queries -------------------------------------------------

    def mobile_nodes(self) -> frozenset[int]:
        return self.nodes - self.aps.ids

    def membership_of(self, node: int) -> int | None:
        return self.ap_membership.get(node)

    def area_users(self, ap: int) -> frozenset[int]:
        return frozenset(u for u, a in self.ap_membership.items() if a == ap)

    def edge_kinds(self) -> dict[Pair, tuple[str, ...]]:
        """Every distinct edge with all the layer tags that apply to it."""
        tags: dict[Pair, list[str]] = {}
        for layer, name in (
            (self.social_edges, EDGE_SOCIAL),
            (self.ap_link_edges, EDGE_AP_LINK),
            (self.ap_clique_edges, EDGE_AP_CLIQUE),
            (self.ap_ring_edges, EDGE_AP_RING),
        ):
            for pair in layer:
                tags.setdefault(pair, []).append(name)
        return {pair: tuple(kinds) for pair, kinds in tags.items()}

    def all_edges(self) -> frozenset[Pair]:
        return frozenset(
            self.social_edges | self.ap_link_edges | self.ap_clique_edges | self.ap_ring_edges
        )

    def induced_edges(self, members: Iterable[int]) -> frozenset[Pair]:
        """All-layer edges with both endpoints in ``members``."""
        ms = set(members)
        return frozenset(p for p in self.all_edges() if p[0] in ms and p[1] in ms)

    def social_adjacency(self, include_aps: bool = False) -> dict[int, set[int]]:
        """Adjacency over social edges; AP endpoints dropped unless requested."""
        adj: dict[int, set[int]] = {}
        for a, b in self.social_edges:
            if not include_aps and (a in self.aps or b in self.aps):
                continue
            adj.setdefault(a, set()).add(b)
            adj.setdefault(b, set()).add(a)
        return adj

    def dump_edges(self) -> str:
        """Debug edge list: one ``u v weight kind`` line per edge per kind."""
        rows = []
        for pair, kinds in sorted(self.edge_kinds().items()):
            w = self.weights.get(*pair)
            for kind in sorted(kinds):
                rows.append(f"{pair[0]} {pair[1]} {w:.6f} {kind}")
        return "\n".join(rows) + ("\n" if rows else "")


def build_snapshot(
    events: Sequence[ContactEvent],
    aps: APDesignation,
    at_time: int,
    interval_s: int,
    mode: str = "growing",
    window: int | None = None,
) -> SnapshotGraph:
    """Assemble the snapshot as of wall-clock second ``at_time``.

    Events up to and including ``at_time`` contribute; the snapshot's
    interval index is ``at_time // interval_s``.  Area containment is the
    set of user-AP links open after replaying those events.
    """
    if at_time < 0:
        raise ConfigurationError(f"snapshot time must be non-negative, got {at_time}")
    if interval_s <= 0:
        raise ConfigurationError(f"interval length must be positive, got {interval_s}")
    visible = [ev for ev in events if ev.time <= at_time]
    p = at_time // interval_s
    counts = contacts_per_interval(visible, interval_s)
    weights = build_ratio_table(counts, p, mode, window)
    social = median_social_edges(weights)

    open_links: dict[Pair, int] = {}
    for ev in visible:
        involves_ap = (ev.a in aps) != (ev.b in aps)
        if not involves_ap:
            continue
        if ev.kind == UP:
            open_links[ev.pair] = open_links.get(ev.pair, 0) + 1
        else:
            left = open_links.get(ev.pair, 0) - 1
            if left > 0:
                open_links[ev.pair] = left
            else:
                open_links.pop(ev.pair, None)

    nodes: set[int] = set(aps.ids)
    for ev in visible:
        nodes.add(ev.a)
        nodes.add(ev.b)
    return SnapshotGraph(
        t=p,
        nodes=frozenset(nodes),
        aps=aps,
        social_edges=social,
        ap_links_raw=frozenset(open_links),
        weights=weights,
    )


def make_structural_snapshot(
    nodes: Iterable[int],
    aps: APDesignation,
    social_edges: Iterable[Pair] = (),
    ap_links: Iterable[Pair] = (),
    t: int = 0,
    weights: EncounterRatioTable | None = None,
) -> SnapshotGraph:
    """Build a snapshot directly from structure (no trace), e.g. for
    dynamic-tracking tests or hand-crafted graphs."""
    node_set = frozenset(nodes) | aps.ids
    w = weights if weights is not None else EncounterRatioTable(t, "growing", None, {})
    return SnapshotGraph(
        t=t,
        nodes=node_set,
        aps=aps,
        social_edges=frozenset(normalize_pair(*p) for p in social_edges),
        ap_links_raw=frozenset(normalize_pair(*p) for p in ap_links),
        weights=w,
    )
