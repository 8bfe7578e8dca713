import pytest

from spacecross.errors import ConfigurationError, WindowNotReadyError
from spacecross.graph import (
    build_ratio_table,
    build_snapshot,
    encounter_ratio_growing,
    encounter_ratio_sliding,
    make_structural_snapshot,
    median_social_edges,
)
from spacecross.trace import (
    APDesignation,
    contacts_per_interval,
    parse_contact_trace,
)


def counts_from(lines, interval_s=100):
    return contacts_per_interval(parse_contact_trace(lines), interval_s)


# ----------------------------------------------------------------------
# Encounter ratios
# ----------------------------------------------------------------------

def test_growing_sole_pair_takes_full_mass():
    counts = counts_from(["0 CONN 1 2 up"])
    assert encounter_ratio_growing(counts, 1, 2, 0) == 1.0


def test_growing_hand_ratio_half():
    lines = [
        "0 CONN 1 2 up", "5 CONN 1 2 down",
        "10 CONN 1 2 up",
        "20 CONN 3 4 up", "25 CONN 3 4 down",
        "30 CONN 3 4 up",
    ]
    counts = counts_from(lines)
    assert encounter_ratio_growing(counts, 1, 2, 0) == 0.5
    assert encounter_ratio_growing(counts, 4, 3, 0) == 0.5  # symmetric


def test_growing_empty_denominator_is_zero():
    counts = counts_from([])
    assert encounter_ratio_growing(counts, 1, 2, 0) == 0.0


def test_growing_accumulates_all_history():
    lines = ["0 CONN 1 2 up", "150 CONN 3 4 up"]  # intervals 0 and 1
    counts = counts_from(lines)
    assert encounter_ratio_growing(counts, 1, 2, 0) == 1.0
    assert encounter_ratio_growing(counts, 1, 2, 1) == 0.5


def test_sliding_hand_ratio_quarter():
    # window Δ=2 at p=2: one {1,2} contact in interval 1, three {3,4} in interval 2
    lines = [
        "150 CONN 1 2 up",
        "250 CONN 3 4 up", "255 CONN 3 4 down",
        "260 CONN 3 4 up", "265 CONN 3 4 down",
        "270 CONN 3 4 up",
    ]
    counts = counts_from(lines)
    assert encounter_ratio_sliding(counts, 1, 2, 2, window=2) == 0.25


def test_sliding_expires_old_contacts():
    lines = ["0 CONN 1 2 up", "350 CONN 3 4 up"]
    counts = counts_from(lines)
    assert encounter_ratio_sliding(counts, 1, 2, 3, window=1) == 0.0


def test_sliding_single_pair_inside_window():
    counts = counts_from(["150 CONN 1 2 up"])
    assert encounter_ratio_sliding(counts, 1, 2, 1, window=1) == 1.0


def test_sliding_not_ready_before_window_fills():
    counts = counts_from(["0 CONN 1 2 up"])
    with pytest.raises(WindowNotReadyError):
        encounter_ratio_sliding(counts, 1, 2, 1, window=2)


def test_sliding_equals_growing_when_window_covers_history():
    lines = ["0 CONN 1 2 up", "150 CONN 3 4 up", "250 CONN 1 2 up"]
    counts = counts_from(lines)
    for pair in ((1, 2), (3, 4)):
        assert encounter_ratio_sliding(counts, *pair, 2, window=2) == \
            encounter_ratio_growing(counts, *pair, 2)


def test_ratio_table_sums_to_one_and_is_symmetric():
    lines = ["0 CONN 1 2 up", "10 CONN 2 3 up", "140 CONN 1 3 up"]
    counts = counts_from(lines)
    table = build_ratio_table(counts, 1, mode="growing")
    assert table.total() == pytest.approx(1.0)
    for u, v in table.pairs():
        assert table.get(u, v) == table.get(v, u)


# ----------------------------------------------------------------------
# Median filter
# ----------------------------------------------------------------------

def weights_table(mapping):
    from spacecross.graph import EncounterRatioTable

    w = {tuple(sorted(k)): v for k, v in mapping.items()}
    return EncounterRatioTable(0, "growing", None, w)


def test_median_admits_only_strictly_above():
    table = weights_table({(1, 2): 0.5, (3, 4): 0.3, (5, 6): 0.2})
    assert median_social_edges(table) == {(1, 2)}


def test_median_all_equal_admits_nothing():
    table = weights_table({(1, 2): 0.25, (3, 4): 0.25, (5, 6): 0.25, (7, 8): 0.25})
    assert median_social_edges(table) == set()


def test_median_single_pair_admits_nothing():
    table = weights_table({(1, 2): 1.0})
    assert median_social_edges(table) == set()


def test_median_ignores_zero_weight_pairs():
    table = weights_table({(1, 2): 0.6, (3, 4): 0.4, (5, 6): 0.0})
    # population is the two positive pairs; median 0.5
    assert median_social_edges(table) == {(1, 2)}


def test_median_admits_less_than_half_of_distinct_values():
    n = 9
    table = weights_table({(1, 10 + i): (i + 1) / 100 for i in range(n)})
    admitted = median_social_edges(table)
    assert len(admitted) <= (n + 1) // 2 - 1


# ----------------------------------------------------------------------
# Snapshots
# ----------------------------------------------------------------------

def test_snapshot_with_no_events_has_only_the_ring(three_ap_ring):
    snap = build_snapshot([], three_ap_ring, at_time=0, interval_s=100)
    assert snap.social_edges == frozenset()
    assert snap.ap_link_edges == frozenset()
    assert snap.ap_clique_edges == frozenset()
    assert snap.ap_ring_edges == frozenset({(0, 1), (1, 2), (0, 2)})


def test_snapshot_area_forms_complete_graph():
    ring = APDesignation(ring=(90,))
    lines = ["0 CONN 1 90 up", "0 CONN 2 90 up"]
    snap = build_snapshot(parse_contact_trace(lines), ring, at_time=10, interval_s=100)
    assert (1, 90) in snap.ap_link_edges
    assert (2, 90) in snap.ap_link_edges
    assert (1, 2) in snap.ap_clique_edges
    assert snap.membership_of(1) == 90
    assert snap.area_users(90) == {1, 2}


def test_snapshot_containment_ends_at_down_event():
    ring = APDesignation(ring=(90,))
    lines = ["0 CONN 1 90 up", "50 CONN 1 90 down"]
    snap = build_snapshot(parse_contact_trace(lines), ring, at_time=60, interval_s=100)
    assert snap.ap_link_edges == frozenset()
    assert snap.membership_of(1) is None


def test_snapshot_ignores_future_events():
    ring = APDesignation(ring=(90,))
    lines = ["0 CONN 1 90 up", "500 CONN 2 90 up"]
    snap = build_snapshot(parse_contact_trace(lines), ring, at_time=100, interval_s=100)
    assert snap.area_users(90) == {1}
    assert 2 not in snap.nodes


def test_snapshot_is_reproducible():
    ring = APDesignation(ring=(0, 1))
    lines = ["0 CONN 3 4 up", "10 CONN 3 0 up", "90 CONN 4 5 up"]
    events = parse_contact_trace(lines)
    a = build_snapshot(events, ring, at_time=90, interval_s=50)
    b = build_snapshot(events, ring, at_time=90, interval_s=50)
    assert a == b


def test_snapshot_rejects_unknown_mode():
    with pytest.raises(ConfigurationError):
        build_snapshot([], APDesignation(ring=(0,)), at_time=0,
                       interval_s=100, mode="quantum")


def test_edge_kinds_can_stack():
    ring = APDesignation(ring=(0, 1))
    snap = make_structural_snapshot(
        nodes=[3, 4], aps=ring,
        social_edges=[(3, 4)],
        ap_links=[(3, 0), (4, 0)],
    )
    kinds = snap.edge_kinds()
    assert set(kinds[(3, 4)]) == {"social", "ap_clique"}
    assert set(kinds[(0, 1)]) == {"ap_ring"}


def test_induced_edges_cover_all_layers():
    ring = APDesignation(ring=(0, 1))
    snap = make_structural_snapshot(
        nodes=[3, 4, 5], aps=ring,
        social_edges=[(3, 4), (4, 5)],
        ap_links=[(3, 0)],
    )
    induced = snap.induced_edges({0, 3, 4})
    assert (3, 4) in induced
    assert (0, 3) in induced
    assert (4, 5) not in induced


def test_social_adjacency_excludes_aps_by_default():
    ring = APDesignation(ring=(0,))
    snap = make_structural_snapshot(
        nodes=[3, 4], aps=ring, social_edges=[(3, 4)], ap_links=[(3, 0)]
    )
    adj = snap.social_adjacency()
    assert adj[3] == {4}
    assert 0 not in adj


def test_dump_edges_is_sorted_text():
    ring = APDesignation(ring=(0, 1))
    snap = make_structural_snapshot(nodes=[3, 4], aps=ring, social_edges=[(4, 3)])
    dump = snap.dump_edges()
    lines = dump.splitlines()
    assert lines == sorted(lines)
    assert any(line.startswith("3 4 ") and line.endswith("social") for line in lines)
