"""Synthetic contact-trace generators.

Real deployment traces are large and not redistributable, so tests and
the bundled desk-scale preset run on generated ones.  Two shapes are
provided:

* :func:`random_trace` — homogeneous mobility: every node meets random
  peers and drops into random AP areas at Poisson-ish rates.  Good for
  stressing router properties on unstructured input.
* :func:`two_cluster_trace` — a planted topology: two social clusters
  that never meet directly.  One gateway node per cluster commutes to an
  access-point area (cluster one's gateway camps in area A, cluster
  two's commutes between areas B and A), so every cross-cluster path has
  to pass through AP infrastructure.  Gateways log direct contacts while
  co-present in area A, which gives them a distinctive contact profile.

Both generators emit well-formed event streams (every down matches an
up, pairs never nest) and fixed AP rings, deterministically from a seed.
"""

from __future__ import annotations

import random

from .trace import APDesignation, ContactEvent

_UP = "up"
_DOWN = "down"


class _EventSink:
    """Collects up/down pairs while guaranteeing non-nested intervals."""

    def __init__(self) -> None:
        self._rows: list[tuple[int, int, int, int, str]] = []
        self._busy_until: dict[tuple[int, int], int] = {}

    def contact(self, t: int, u: int, v: int, length: int, horizon: int) -> bool:
        """Open a link at ``t`` and close it ``length`` seconds later.

        Refused (returns False) when the pair is still open at ``t`` or
        the window would not fit before ``horizon``.
        """
        a, b = (u, v) if u < v else (v, u)
        end = t + length
        if end >= horizon:
            return False
        if self._busy_until.get((a, b), -1) >= t:
            return False
        self._busy_until[(a, b)] = end
        self._rows.append((t, len(self._rows), a, b, _UP))
        self._rows.append((end, len(self._rows), a, b, _DOWN))
        return True

    def events(self) -> list[ContactEvent]:
        self._rows.sort(key=lambda r: (r[0], r[1]))
        return [ContactEvent(t, a, b, kind) for t, _, a, b, kind in self._rows]


def random_trace(
    seed: int,
    n_mobiles: int = 27,
    n_aps: int = 3,
    duration: int = 50_000,
    step: int = 250,
    pair_prob: float = 0.05,
    visit_prob: float = 0.03,
    contact_len: int = 200,
    visit_len: int = 600,
) -> tuple[list[ContactEvent], APDesignation]:
    """Homogeneous random mobility with periodic AP-area visits.

    Node ids 0..n_aps-1 are the access points (ring in id order); the
    rest are mobiles.
    """
    rng = random.Random(f"{seed}:random-trace")
    sink = _EventSink()
    aps = list(range(n_aps))
    mobiles = list(range(n_aps, n_aps + n_mobiles))
    for t in range(0, duration, step):
        for m in mobiles:
            if rng.random() < pair_prob:
                peer = mobiles[rng.randrange(len(mobiles))]
                if peer != m:
                    sink.contact(t, m, peer, contact_len, duration)
            if rng.random() < visit_prob:
                ap = aps[rng.randrange(len(aps))]
                sink.contact(t, m, ap, visit_len, duration)
    return sink.events(), APDesignation(ring=tuple(aps))


def two_cluster_trace(
    seed: int,
    cluster_size: int = 8,
    duration: int = 200_000,
    meet_step: int = 2_000,
    meets_per_step: int = 2,
    meet_len: int = 300,
    gateway_trip_every: int = 2_000,
    gateway_trip_len: int = 500,
    visit_every: int = 3_000,
    visit_len: int = 900,
) -> tuple[list[ContactEvent], APDesignation]:
    """Two clusters bridged only through access-point areas.

    Layout (AP ring A=0, B=1, C=2; C stays silent):

    * cluster one = ids 3 .. 3+k-1, cluster two = ids 3+k .. 3+2k-1;
    * members of a cluster meet each other at a rotating pair schedule —
      no contact ever joins the two clusters directly;
    * cluster one's gateway (id 3) camps inside area A for the whole
      trace; cluster two's gateway (id 3+k) lives in area B and commutes
      to area A every ``gateway_trip_every`` seconds, logging a direct
      contact with the camping gateway while both sit in A;
    * every cluster-two member visits area B on a staggered schedule.

    Cross-cluster delivery therefore requires using the AP layer; the
    only mobile-to-mobile bridge is the gateway pair inside area A.
    """
    rng = random.Random(f"{seed}:two-cluster")
    ap_a, ap_b = 0, 1
    first = list(range(3, 3 + cluster_size))
    second = list(range(3 + cluster_size, 3 + 2 * cluster_size))
    gw1, gw2 = first[0], second[0]
    sink = _EventSink()

    # Gateway one camps in area A from start to finish.
    sink.contact(0, gw1, ap_a, duration - 1, duration)

    # Rotating intra-cluster meetings.
    for t in range(meet_step, duration, meet_step):
        for cluster in (first, second):
            pool = cluster[:]
            rng.shuffle(pool)
            for i in range(meets_per_step):
                u, v = pool[2 * i], pool[2 * i + 1]
                sink.contact(t + i, u, v, meet_len, duration)

    # Gateway two commutes: brief area-A trips with a gateway-to-gateway
    # contact while co-present, area B the rest of the time.
    t = gateway_trip_every
    while t < duration:
        if sink.contact(t, gw2, ap_a, gateway_trip_len, duration):
            sink.contact(t + 1, gw1, gw2, gateway_trip_len - 2, duration)
        t += gateway_trip_every

    # Cluster-two members drop into area B on staggered schedules
    # (gateway two included: between trips it re-enters B).
    for idx, m in enumerate(second):
        offset = (idx * visit_every) // len(second) + 7 * idx
        t = offset if offset > 0 else visit_every // 2
        while t < duration:
            sink.contact(t, m, ap_b, visit_len, duration)
            t += visit_every + rng.randrange(0, 200)

    return sink.events(), APDesignation(ring=(0, 1, 2))
