"""Per-node social activity and pairwise social similarity.

A node's local activity inside one community is the weight mass on its
own edges divided by the weight mass on every unordered member pair.
Summed over all members of a community the numerators count each pair
twice, so the activities of one community always add up to 2.

The activity vector lines a node's activity up against the registry's
SC communities (0 where the node is not a member), and social similarity
is the Pearson correlation of two such vectors.  Vectors with no spread
(including the all-zero vector of an isolated node) correlate with
nothing; their similarity is defined as 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

from .community import Community, CommunityRegistry
from .graph import EncounterRatioTable


def local_activity(node: int, community: Community, weights: EncounterRatioTable) -> float:
    """Fraction of the community's pairwise weight mass carried by ``node``."""
    if node not in community.members:
        raise ValueError(f"node {node} is not a member of {sorted(community.members)}")
    members = sorted(community.members)
    denom = 0.0
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            denom += weights.get(members[i], members[j])
    if denom == 0.0:
        return 0.0
    num = sum(weights.get(node, m) for m in members if m != node)
    return num / denom


@dataclass(frozen=True)
class ActivityVector:
    """A node's activity across the registry's SC communities, in registry order."""

    t: int
    node: int
    sc_ids: tuple[int, ...]
    values: tuple[float, ...]


def activity_vector(
    node: int, registry: CommunityRegistry, weights: EncounterRatioTable
) -> ActivityVector:
    ids = []
    values = []
    for c in registry.sc:
        ids.append(c.id)
        values.append(local_activity(node, c, weights) if node in c.members else 0.0)
    return ActivityVector(t=registry.t, node=node, sc_ids=tuple(ids), values=tuple(values))


def pearson_similarity(a: ActivityVector, b: ActivityVector) -> float:
    """Pearson correlation of two activity vectors from the same registry.

    Raises ValueError when the vectors come from different intervals or
    community orderings.  Returns 0 when either side has zero variance.
    """
    if a.t != b.t:
        raise ValueError(f"activity vectors from different intervals: {a.t} vs {b.t}")
    if a.sc_ids != b.sc_ids:
        raise ValueError("activity vectors use different community orderings")
    k = len(a.values)
    if k == 0:
        return 0.0
    if min(a.values) == max(a.values) or min(b.values) == max(b.values):
        return 0.0
    mean_a = sum(a.values) / k
    mean_b = sum(b.values) / k
    da = [x - mean_a for x in a.values]
    db = [y - mean_b for y in b.values]
    var_a = sum(x * x for x in da)
    var_b = sum(y * y for y in db)
    if var_a == 0.0 or var_b == 0.0:
        return 0.0
    r = sum(x * y for x, y in zip(da, db)) / sqrt(var_a * var_b)
    return max(-1.0, min(1.0, r))


def activity_csv(registry: CommunityRegistry, weights: EncounterRatioTable) -> str:
    """Debug table ``t,node,sc_id,activity`` covering every membership."""
    lines = ["t,node,sc_id,activity"]
    for c in registry.sc:
        for m in c.canonical_key:
            lines.append(f"{registry.t},{m},{c.id},{local_activity(m, c, weights):.9f}")
    return "\n".join(lines) + "\n"
