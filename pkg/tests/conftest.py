"""Shared fixtures and the acceptance-summary reporting hook."""

from __future__ import annotations

import pytest

from spacecross.community import Community, CommunityKind
from spacecross.trace import APDesignation


def make_community(members, edges=(), kind=CommunityKind.PP, anchors=(), id=None):
    return Community(
        members=frozenset(members),
        intra_edges=frozenset(tuple(sorted(e)) for e in edges),
        kind=kind,
        anchor_aps=frozenset(anchors),
        id=id,
    )


@pytest.fixture
def three_ap_ring():
    return APDesignation(ring=(0, 1, 2))


# ----------------------------------------------------------------------
# Acceptance criteria reporting: each test in test_acceptance.py carries
# a `criterion` marker; the terminal summary prints one PASS/FAIL line
# per criterion.
# ----------------------------------------------------------------------

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(n, title): acceptance criterion metadata"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    n, title = marker.args
    _CRITERIA[n] = (title, "PASS" if report.passed else "FAIL")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for n in sorted(_CRITERIA):
        title, status = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {status} — {title}")
