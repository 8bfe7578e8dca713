"""Contact-trace ingestion.

Traces are plain text, one connectivity change per line::

    <time_s> CONN <id_a> <id_b> <up|down>

Times are non-negative integer seconds, ids are non-negative integers.
Pairs are unordered: a ``down`` may name the endpoints in either order
relative to its matching ``up``.  Internally every pair is normalised to
``a < b``.

This module also owns access-point designation (a deterministic random
draw from the node universe, closed into a ring) and the bucketing of
contacts into fixed-length intervals that the social-graph layer
aggregates over.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .errors import ConfigurationError, TraceFormatError, TraceValidationError

Pair = tuple[int, int]

UP = "up"
DOWN = "down"


def normalize_pair(a: int, b: int) -> Pair:
    """Return the unordered pair as (min, max)."""
    return (a, b) if a < b else (b, a)


# ======================================================================
# Events
# ======================================================================

@dataclass(frozen=True, order=True)
class ContactEvent:
    """One connectivity change.  ``a < b`` always holds."""

    time: int
    a: int
    b: int
    kind: str  # UP or DOWN

    @property
    def pair(self) -> Pair:
        return (self.a, self.b)

    @classmethod
    def make(cls, time: int, x: int, y: int, kind: str) -> "ContactEvent":
        a, b = normalize_pair(x, y)
        return cls(time, a, b, kind)


def parse_contact_trace(lines: Iterable[str]) -> list[ContactEvent]:
    """Parse a trace from an iterable of text lines.

    Returns events sorted by time; ties keep input order.  Blank lines
    and ``#`` comments are skipped.

    Raises:
        TraceFormatError: malformed line (carries the line number).
        TraceValidationError: a ``down`` with no prior matching ``up``.
    """
    raw: list[tuple[int, int, ContactEvent]] = []
    for line_no, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = stripped.split()
        if len(tokens) != 5:
            raise TraceFormatError(line_no, f"expected 5 fields, got {len(tokens)}: {stripped!r}")
        t_tok, tag, a_tok, b_tok, kind = tokens
        if tag != "CONN":
            raise TraceFormatError(line_no, f"expected CONN record, got {tag!r}")
        try:
            t = int(t_tok)
            a = int(a_tok)
            b = int(b_tok)
        except ValueError:
            raise TraceFormatError(line_no, f"non-integer field in {stripped!r}") from None
        if t < 0:
            raise TraceFormatError(line_no, f"negative timestamp {t}")
        if a < 0 or b < 0:
            raise TraceFormatError(line_no, f"negative node id in {stripped!r}")
        if a == b:
            raise TraceFormatError(line_no, f"self-contact for node {a}")
        if kind not in (UP, DOWN):
            raise TraceFormatError(line_no, f"expected 'up' or 'down', got {kind!r}")
        raw.append((t, len(raw), ContactEvent.make(t, a, b, kind)))

    raw.sort(key=lambda item: (item[0], item[1]))
    events = [ev for _, _, ev in raw]

    # Every down must close a previously opened link for the same pair.
    open_links: Counter[Pair] = Counter()
    for ev in events:
        if ev.kind == UP:
            open_links[ev.pair] += 1
        else:
            if open_links[ev.pair] <= 0:
                raise TraceValidationError(
                    f"down without matching up for pair {ev.pair} at time {ev.time}"
                )
            open_links[ev.pair] -= 1
    # Links still open at end-of-trace are fine: they close implicitly at
    # the final timestamp.
    return events


def serialize_contact_trace(events: Sequence[ContactEvent]) -> str:
    """Render events back to the line format (ends with a newline)."""
    out = [f"{ev.time} CONN {ev.a} {ev.b} {ev.kind}" for ev in events]
    return "\n".join(out) + ("\n" if out else "")


def trace_span(events: Sequence[ContactEvent]) -> int:
    """Last event timestamp, or 0 for an empty trace."""
    return events[-1].time if events else 0


def node_universe(events: Sequence[ContactEvent]) -> frozenset[int]:
    ids: set[int] = set()
    for ev in events:
        ids.add(ev.a)
        ids.add(ev.b)
    return frozenset(ids)


# ======================================================================
# Access-point designation
# ======================================================================

@dataclass(frozen=True)
class APDesignation:
    """The set of node ids playing the access-point role.

    ``ring`` preserves designation order; the wired backbone closes it
    into a circle, so ring neighbours of ``ring[i]`` are
    ``ring[(i-1) % n]`` and ``ring[(i+1) % n]``.
    """

    ring: tuple[int, ...]
    ids: frozenset[int] = field(init=False)

    def __post_init__(self) -> None:
        if not self.ring:
            raise ConfigurationError("at least one access point is required")
        if any(not isinstance(n, int) for n in self.ring):
            raise ConfigurationError(f"access-point ids must be integers: {self.ring!r}")
        if len(set(self.ring)) != len(self.ring):
            raise ConfigurationError("duplicate access-point id in ring")
        object.__setattr__(self, "ids", frozenset(self.ring))

    def __contains__(self, node: int) -> bool:
        return node in self.ids

    def __len__(self) -> int:
        return len(self.ring)

    def ring_edges(self) -> frozenset[Pair]:
        """Distinct ring edges: n for n >= 3, one for n == 2, none for n == 1."""
        n = len(self.ring)
        if n < 2:
            return frozenset()
        edges = {
            normalize_pair(self.ring[i], self.ring[(i + 1) % n]) for i in range(n)
        }
        return frozenset(edges)

    def ring_adjacencies(self) -> list[Pair]:
        """Unordered ring-neighbour pairs in ring order, deduplicated."""
        n = len(self.ring)
        if n < 2:
            return []
        seen: set[Pair] = set()
        out: list[Pair] = []
        for i in range(n):
            p = normalize_pair(self.ring[i], self.ring[(i + 1) % n])
            if p not in seen:
                seen.add(p)
                out.append(p)
        return out


def designate_aps(universe: Iterable[int], count: int, seed: int) -> APDesignation:
    """Pick ``count`` access points uniformly from ``universe``.

    Deterministic for a given (universe, count, seed).  Ring order is the
    selection order.
    """
    pool = sorted(set(universe))
    if count <= 0:
        raise ConfigurationError(f"access-point count must be positive, got {count}")
    if count > len(pool):
        raise ConfigurationError(
            f"cannot designate {count} access points from {len(pool)} nodes"
        )
    rng = random.Random(seed)
    return APDesignation(ring=tuple(rng.sample(pool, count)))


def load_ap_file(lines: Iterable[str]) -> APDesignation:
    """Read one AP id per line, in ring order.  Blank/comment lines skipped."""
    ring: list[int] = []
    for line_no, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            ring.append(int(stripped))
        except ValueError:
            raise TraceFormatError(line_no, f"expected an integer AP id, got {stripped!r}") from None
    return APDesignation(ring=tuple(ring))


# ======================================================================
# Interval bucketing
# ======================================================================

@dataclass(frozen=True)
class IntervalCounts:
    """Per-interval contact tallies.

    ``pair_counts[i]`` maps an unordered pair to the number of contacts
    (up-events) that started inside interval ``i``; ``totals[i]`` is the
    sum over all pairs.  Intervals are half-open:
    ``[i * interval_s, (i + 1) * interval_s)``.
    """

    interval_s: int
    pair_counts: tuple[dict[Pair, int], ...]
    totals: tuple[int, ...]

    @property
    def n_intervals(self) -> int:
        return len(self.totals)

    def iter_pairs(self) -> Iterator[Pair]:
        seen: set[Pair] = set()
        for table in self.pair_counts:
            for pair in table:
                if pair not in seen:
                    seen.add(pair)
                    yield pair


def contacts_per_interval(events: Sequence[ContactEvent], interval_s: int) -> IntervalCounts:
    """Bucket contacts by interval.  A contact is counted once, at its up-event.

    The bucket range covers every event in the input (trailing intervals
    that saw only down-events get a zero total).
    """
    if interval_s <= 0:
        raise ConfigurationError(f"interval length must be positive, got {interval_s}")
    if not events:
        return IntervalCounts(interval_s, (), ())
    n = max(ev.time for ev in events) // interval_s + 1
    pair_counts: list[dict[Pair, int]] = [{} for _ in range(n)]
    totals = [0] * n
    for ev in events:
        if ev.kind != UP:
            continue
        i = ev.time // interval_s
        table = pair_counts[i]
        table[ev.pair] = table.get(ev.pair, 0) + 1
        totals[i] += 1
    return IntervalCounts(interval_s, tuple(pair_counts), tuple(totals))
