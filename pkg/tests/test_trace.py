import pytest

from spacecross.errors import ConfigurationError, TraceFormatError, TraceValidationError
from spacecross.trace import (
    APDesignation,
    ContactEvent,
    contacts_per_interval,
    designate_aps,
    load_ap_file,
    node_universe,
    parse_contact_trace,
    serialize_contact_trace,
    trace_span,
)


def test_parse_single_line():
    events = parse_contact_trace(["0 CONN 93 96 up"])
    assert events == [ContactEvent(time=0, a=93, b=96, kind="up")]


def test_parse_empty_stream():
    assert parse_contact_trace([]) == []
    assert parse_contact_trace(["", "   ", "\n"]) == []


def test_parse_normalizes_pair_order():
    events = parse_contact_trace(["5 CONN 1 2 up", "9 CONN 2 1 down"])
    assert [(e.time, e.a, e.b, e.kind) for e in events] == [
        (5, 1, 2, "up"),
        (9, 1, 2, "down"),
    ]


def test_parse_keeps_input_order_for_equal_times():
    lines = ["7 CONN 3 4 up", "7 CONN 1 2 up", "7 CONN 3 4 down"]
    events = parse_contact_trace(lines)
    assert [(e.a, e.b, e.kind) for e in events] == [
        (3, 4, "up"),
        (1, 2, "up"),
        (3, 4, "down"),
    ]


def test_parse_sorts_by_time():
    events = parse_contact_trace(["9 CONN 1 2 up", "3 CONN 4 5 up"])
    assert [e.time for e in events] == [3, 9]


@pytest.mark.parametrize(
    "line, line_no",
    [
        ("0 CONN 1 2", 1),              # missing direction
        ("0 CONN 1 2 up extra", 1),     # too many fields
        ("x CONN 1 2 up", 1),           # bad time
        ("0 LINK 1 2 up", 1),           # wrong keyword
        ("0 CONN 1 y up", 1),           # bad id
        ("0 CONN 1 2 sideways", 1),     # bad direction token
        ("0 CONN -1 2 up", 1),          # negative id
        ("0 CONN 2 2 up", 1),           # self contact
    ],
)
def test_parse_rejects_malformed_lines(line, line_no):
    with pytest.raises(TraceFormatError) as exc:
        parse_contact_trace([line])
    assert exc.value.line_no == line_no
    assert f"line {line_no}" in str(exc.value)


def test_parse_error_reports_later_line_numbers():
    lines = ["0 CONN 1 2 up", "", "1 CONN bad 2 up"]
    with pytest.raises(TraceFormatError) as exc:
        parse_contact_trace(lines)
    assert exc.value.line_no == 3


def test_down_without_up_is_a_validation_error():
    with pytest.raises(TraceValidationError) as exc:
        parse_contact_trace(["4 CONN 1 2 down"])
    msg = str(exc.value)
    assert "1" in msg and "2" in msg and "4" in msg


def test_unmatched_up_at_end_is_legal():
    events = parse_contact_trace(["4 CONN 1 2 up"])
    assert len(events) == 1


def test_serialize_round_trip():
    lines = ["0 CONN 93 96 up", "80 CONN 93 96 down", "100 CONN 5 7 up"]
    events = parse_contact_trace(lines)
    assert serialize_contact_trace(events) == "\n".join(lines) + "\n"
    assert parse_contact_trace(serialize_contact_trace(events).splitlines()) == events


def test_span_and_universe():
    events = parse_contact_trace(["0 CONN 1 2 up", "50 CONN 2 3 up"])
    assert trace_span(events) == 50
    assert node_universe(events) == {1, 2, 3}
    assert trace_span([]) == 0
    assert node_universe([]) == set()


# ----------------------------------------------------------------------
# AP designation
# ----------------------------------------------------------------------

def test_ring_edge_counts():
    assert len(APDesignation(ring=(1,)).ring_edges()) == 0
    assert len(APDesignation(ring=(1, 2)).ring_edges()) == 1
    assert len(APDesignation(ring=(1, 2, 3)).ring_edges()) == 3
    assert len(APDesignation(ring=(1, 2, 3, 4)).ring_edges()) == 4


def test_ring_edges_close_the_circle():
    d = APDesignation(ring=(5, 9, 7))
    assert d.ring_edges() == {(5, 9), (7, 9), (5, 7)}
    # adjacency walk order, pairs normalized
    assert d.ring_adjacencies() == [(5, 9), (7, 9), (5, 7)]


def test_ap_designation_rejects_bad_rings():
    with pytest.raises(ConfigurationError):
        APDesignation(ring=())
    with pytest.raises(ConfigurationError):
        APDesignation(ring=(1, 2, 1))
    with pytest.raises(ConfigurationError):
        APDesignation(ring=("1", 2))


def test_designate_aps_is_deterministic():
    universe = set(range(100))
    a = designate_aps(universe, 5, seed=42)
    b = designate_aps(universe, 5, seed=42)
    assert a == b
    assert len(a.ids) == 5
    assert a.ids <= universe
    assert designate_aps(universe, 5, seed=43) != a


def test_designate_aps_rejects_bad_counts():
    with pytest.raises(ConfigurationError):
        designate_aps({1, 2, 3}, 4, seed=1)
    with pytest.raises(ConfigurationError):
        designate_aps({1, 2, 3}, 0, seed=1)


def test_load_ap_file_skips_comments():
    d = load_ap_file(["# ring order", "3", "", "1", "2"])
    assert d.ring == (3, 1, 2)


def test_load_ap_file_reports_line_number():
    with pytest.raises(TraceFormatError) as exc:
        load_ap_file(["1", "two"])
    assert exc.value.line_no == 2


# ----------------------------------------------------------------------
# Interval bucketing
# ----------------------------------------------------------------------

def test_contacts_counted_once_at_up_event():
    # a connection spanning several intervals is one contact
    events = parse_contact_trace(["0 CONN 1 2 up", "2500 CONN 1 2 down"])
    counts = contacts_per_interval(events, interval_s=1000)
    assert counts.totals == (1, 0, 1 - 1)
    assert counts.pair_counts[0] == {(1, 2): 1}


def test_interval_boundaries_are_half_open():
    events = parse_contact_trace(["999 CONN 1 2 up", "1000 CONN 3 4 up"])
    counts = contacts_per_interval(events, interval_s=1000)
    assert counts.pair_counts[0] == {(1, 2): 1}
    assert counts.pair_counts[1] == {(3, 4): 1}


def test_interval_counts_accumulate_per_pair():
    lines = ["0 CONN 1 2 up", "10 CONN 1 2 down", "20 CONN 2 1 up"]
    counts = contacts_per_interval(parse_contact_trace(lines), interval_s=100)
    assert counts.pair_counts[0] == {(1, 2): 2}
    assert counts.totals == (2,)
    assert list(counts.iter_pairs()) == [(1, 2)]


def test_interval_length_must_be_positive():
    with pytest.raises(ConfigurationError):
        contacts_per_interval([], 0)
