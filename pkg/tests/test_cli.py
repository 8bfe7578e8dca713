import pytest

from spacecross.cli import main

TRACE = """\
0 CONN 1 2 up
40 CONN 1 2 down
50 CONN 2 3 up
90 CONN 2 3 down
100 CONN 1 0 up
140 CONN 1 0 down
"""

CONFIG = """\
[trace]
path = "tiny.trace"

[aps]
file = "tiny.aps"

[graph]
mode = "growing"
interval_s = 50

[community]
alphas = [0.6]
refresh_interval_s = 50

[traffic]
packets_per_node = 2
size_min = 10
size_max = 20

[sim]
routers = ["direct"]
ttl_s = [100]
seeds = [1]

[output]
workers = 1
figures = false
"""


@pytest.fixture
def config_path(tmp_path):
    (tmp_path / "tiny.trace").write_text(TRACE)
    (tmp_path / "tiny.aps").write_text("0\n")
    path = tmp_path / "tiny.toml"
    path.write_text(CONFIG)
    return path


def test_validate_trace_ok(tmp_path, capsys):
    trace = tmp_path / "a.trace"
    trace.write_text(TRACE)
    assert main(["validate-trace", str(trace)]) == 0
    out = capsys.readouterr().out
    assert out == "ok: 6 events, 4 nodes, span 140 s\n"


def test_validate_trace_missing_file(tmp_path):
    assert main(["validate-trace", str(tmp_path / "nope.trace")]) == 4


def test_validate_trace_malformed(tmp_path, capsys):
    trace = tmp_path / "bad.trace"
    trace.write_text("0 CONN 1 2 sideways\n")
    assert main(["validate-trace", str(trace)]) == 3
    assert "line 1" in capsys.readouterr().err


def test_bad_config_exits_2(tmp_path, config_path):
    config_path.write_text(config_path.read_text().replace("[graph]", "[huh]"))
    assert main(["simulate", str(config_path)]) == 2


def test_simulate_prints_metrics_row(config_path, capsys):
    assert main(["simulate", str(config_path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "router,alpha,ttl_s,seed,created,delivered,delivery_ratio,avg_latency_s"
    assert lines[1].startswith("direct,0.6,100,1,")


def test_simulate_overrides_and_audit(config_path, tmp_path, capsys):
    out = tmp_path / "cell"
    code = main([
        "simulate", str(config_path),
        "--router", "epidemic", "--ttl", "200", "--seed", "9",
        "--audit", "--out", str(out),
    ])
    assert code == 0
    metrics = (out / "metrics.csv").read_text().splitlines()
    assert metrics[1].startswith("epidemic,0.6,200,9,")
    audit = (out / "audit.csv").read_text().splitlines()
    assert audit[0] == "msg_id,src,dst,created_s,outcome,latency_s,hops"
    assert len(audit) > 1


def test_simulate_rejects_unknown_router(config_path):
    assert main(["simulate", str(config_path), "--router", "warp"]) == 2


def test_sweep_writes_outputs(config_path, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["sweep", str(config_path), "--out", str(out)]) == 0
    assert (out / "results.csv").exists()
    assert (out / "summary.csv").exists()
    series = sorted(p.name for p in (out / "series").iterdir())
    assert series == [
        "series_avg_latency_s__direct__alpha0.6.csv",
        "series_delivery_ratio__direct__alpha0.6.csv",
    ]
    # figures = false in the config: no PNGs anywhere
    assert not list(out.glob("*.png"))


def test_sweep_renders_figures_when_configured(config_path, tmp_path):
    config_path.write_text(config_path.read_text().replace("figures = false",
                                                           "figures = true"))
    out = tmp_path / "figs"
    assert main(["sweep", str(config_path), "--out", str(out)]) == 0
    names = sorted(p.name for p in out.glob("*.png"))
    assert names == ["avg_latency.png", "delivery_ratio.png"]

    bare = tmp_path / "bare"
    assert main(["sweep", str(config_path), "--out", str(bare), "--no-figures"]) == 0
    assert not list(bare.glob("*.png"))


def test_compare_detectors_outputs(config_path, tmp_path):
    out = tmp_path / "cmp"
    assert main(["compare-detectors", str(config_path), "--out", str(out)]) == 0
    comparison = (out / "comparison.csv").read_text().splitlines()
    assert comparison[0] == (
        "router,alpha,ttl_s,delivery_ratio_sc,delivery_ratio_pp,"
        "delivery_ratio_delta,avg_latency_sc_s,avg_latency_pp_s"
    )
    assert len(comparison) == 2
    assert (out / "results_sc.csv").exists()
    assert (out / "results_pp.csv").exists()


def test_dump_communities_stdout_and_files(config_path, tmp_path, capsys):
    edges = tmp_path / "edges.csv"
    activity = tmp_path / "activity.csv"
    code = main([
        "dump-communities", str(config_path), "--at", "120",
        "--edges", str(edges), "--activity", str(activity),
    ])
    assert code == 0
    out = capsys.readouterr().out
    # --at is wall seconds; the registry header counts completed intervals
    assert out.startswith("# t=2")
    assert "SC " in out
    edge_lines = edges.read_text().splitlines()
    assert edge_lines[0].split() == ["0", "1", "0.333333", "ap_link"]
    assert activity.read_text().splitlines()[0] == "t,node,sc_id,activity"


def test_dump_communities_requires_at(config_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["dump-communities", str(config_path)])
    assert exc.value.code == 2


def test_ap_count_flag_overrides_ap_file(config_path, capsys):
    # the config designates AP 0 from a file; the flag re-picks by seed
    assert main(["dump-communities", str(config_path), "--at", "120",
                 "--ap-count", "2", "--ap-seed", "3"]) == 0
    seeded = capsys.readouterr().out
    assert main(["dump-communities", str(config_path), "--at", "120"]) == 0
    from_file = capsys.readouterr().out
    assert seeded != from_file


def test_ap_count_flag_rejects_oversized_count(config_path):
    assert main(["simulate", str(config_path), "--ap-count", "99"]) == 2


def test_ap_seed_flag_needs_a_count(config_path):
    # config uses an AP file, so a bare seed has nothing to apply to
    assert main(["simulate", str(config_path), "--ap-seed", "5"]) == 2
