import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fogswitch.domain import FeatureVector, MachineProfile, ServiceInstance, Tier
from fogswitch.fogsim import (
    LIVE,
    RtModelParams,
    WorkloadRanges,
    analytic_rt,
    default_instances,
    default_machines,
    generate_monitoring,
    label_correct_decision,
    read_monitoring_csv,
    read_workloads_csv,
    sample_workloads,
    write_monitoring_csv,
    write_workloads_csv,
)
from fogswitch.errors import InstanceUnreachable, UnknownInstance

from conftest import FAST

F = FeatureVector(3, 100, 1000, 3)
BARE = RtModelParams(alpha_ms=1e-6, beta_ms=0.0, payload_overhead_bytes=0)


def test_compute_term_direct_substitution():
    edge = MachineProfile("e", Tier.EDGE, cpu_factor=1.0, bandwidth_bytes_per_ms=1e12)
    rt = analytic_rt(F, edge, BARE)
    assert rt == pytest.approx(0.9, abs=1e-6)
    # only the payload term sits on top of the compute term
    assert rt - 0.9 == pytest.approx(8 * 1000 * 3 / 1e12, rel=1e-3)


def test_remote_compute_term_divides_by_cpu():
    remote = MachineProfile("r", Tier.REMOTE, cpu_factor=4.0, rtt_ms=0.0, bandwidth_bytes_per_ms=1e12)
    slow = MachineProfile("r", Tier.REMOTE, cpu_factor=4.0, rtt_ms=0.0, bandwidth_bytes_per_ms=np.inf)
    assert analytic_rt(F, slow, BARE) == pytest.approx(0.225, abs=1e-15)
    assert analytic_rt(F, remote, BARE) - 8 * 3000 / 1e12 == pytest.approx(0.225, abs=1e-12)


def crossover_n(k, it, d, edge, remote, p):
    """Solve edge_rt(n) == remote_rt(n); both are affine in n."""
    def slope(m):
        return p.alpha_ms * k * it * d / m.cpu_factor + 8 * d / m.bandwidth_bytes_per_ms

    def intercept(m):
        return p.beta_ms + 2 * m.rtt_ms + p.payload_overhead_bytes / m.bandwidth_bytes_per_ms

    return (intercept(remote) - intercept(edge)) / (slope(edge) - slope(remote))


@pytest.mark.parametrize("k,it,d", [(5, 100, 3), (10, 200, 14), (4, 60, 8)])
def test_crossover_algebraic_oracle(k, it, d):
    edge, remote = default_machines()
    p = RtModelParams()
    table = {si.id: si for si in default_instances()}
    n_star = crossover_n(k, it, d, edge, remote, p)
    assert n_star > k
    below, above = int(np.floor(n_star)), int(np.ceil(n_star)) + 1
    for n, tier in [(below, Tier.EDGE), (above, Tier.REMOTE), (max(k, below // 4), Tier.EDGE), (above * 3, Tier.REMOTE)]:
        f = FeatureVector(k, it, n, d)
        rts = {m.id: analytic_rt(f, m, p) for m in (edge, remote)}
        assert label_correct_decision(rts, table)[0] is tier


def test_low_work_never_crosses():
    # with small k*it the remote compute saving never pays for the slower link
    edge, remote = default_machines()
    p = RtModelParams()
    assert crossover_n(2, 10, 5, edge, remote, p) < 0
    for n in (10, 1000, 11000):
        f = FeatureVector(2, 10, n, 5)
        assert analytic_rt(f, edge, p) < analytic_rt(f, remote, p)


def test_labels_and_ties():
    table = {si.id: si for si in default_instances()}
    assert label_correct_decision({"edge0": 10, "remote0": 20}, table) == (Tier.EDGE, "edge0")
    assert label_correct_decision({"edge0": 50, "remote0": 50}, table) == (Tier.EDGE, "edge0")
    assert label_correct_decision({"edge0": 51, "remote0": 50}, table) == (Tier.REMOTE, "remote0")
    with pytest.raises(UnknownInstance):
        label_correct_decision({"x": 1.0}, table)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 5), min_size=3, max_size=3))
def test_label_matches_exhaustive_scan(three_machines, rts):
    table = {m.id: ServiceInstance(m.id, f"http://h:1/{m.id}", m) for m in three_machines}
    measured = dict(zip(sorted(table), map(float, rts)))
    best = min(measured.values())
    winners = [i for i in sorted(measured) if measured[i] == best]
    edge_winners = [i for i in winners if table[i].tier is Tier.EDGE]
    expected = (edge_winners or winners)[0]
    assert label_correct_decision(measured, table) == (table[expected].tier, expected)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 10), st.integers(1, 200), st.integers(10, 11000), st.integers(1, 14), st.integers(1, 500))
def test_rt_monotone_in_each_feature(k, it, n, d, bump):
    p = RtModelParams()
    for m in default_machines():
        base = analytic_rt(FeatureVector(k, it, n, d), m, p)
        assert analytic_rt(FeatureVector(k, it + bump, n, d), m, p) > base
        assert analytic_rt(FeatureVector(k, it, n + bump, d), m, p) > base
        assert analytic_rt(FeatureVector(k, it, n, d + bump), m, p) > base
        assert base > 0


def test_monitoring_exact_values(three_machines):
    insts = [ServiceInstance(m.id, f"http://h:1/{m.id}", m) for m in three_machines]
    wl = [FeatureVector(3, 100, 1000, 3), FeatureVector(2, 10, 50, 4)]
    recs = generate_monitoring(wl, insts[::-1], sigma=0.0)
    assert len(recs) == 6
    assert [r.instance_id for r in recs] == ["edge0", "edge1", "remote0"] * 2
    for r in recs:
        m = next(m for m in three_machines if m.id == r.instance_id)
        assert r.rt_ms == analytic_rt(r.features, m, RtModelParams())


def test_monitoring_noise_deterministic():
    wl = sample_workloads(30, seed=1)
    a = generate_monitoring(wl, default_instances(), noise_seed=5, sigma=0.3)
    b = generate_monitoring(wl, default_instances(), noise_seed=5, sigma=0.3)
    c = generate_monitoring(wl, default_instances(), noise_seed=6, sigma=0.3)
    assert a == b
    assert a != c


def test_sample_workloads_empty():
    assert sample_workloads(0, seed=3) == []


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 400), st.integers(0, 2**32))
def test_samples_in_range(count, seed):
    r = WorkloadRanges()
    wl = sample_workloads(count, r, seed)
    assert len(wl) == count
    for f in wl:
        assert r.band_of(f.n) >= 0
        assert r.it[0] <= f.it <= r.it[1]
        assert r.d[0] <= f.d <= r.d[1]
        assert 1 <= f.k <= min(r.k[1], f.n)


def test_band_histogram_110():
    r = WorkloadRanges()
    wl = sample_workloads(110, r, seed=7)
    hist = np.bincount([r.band_of(f.n) for f in wl], minlength=len(r.n_bands))
    expected = 110 / len(r.n_bands)
    assert np.all(np.abs(hist - expected) <= 2)


def test_weighted_bands():
    r = WorkloadRanges(n_bands=((1, 10), (11, 20)), band_weights=(3.0, 1.0))
    assert r.band_counts(8) == [6, 2]
    assert r.band_counts(3) == [2, 1]


def test_csv_round_trip():
    wl = sample_workloads(20, seed=2)
    recs = generate_monitoring(wl, default_instances(), noise_seed=1, sigma=0.2)
    text = write_monitoring_csv(recs)
    assert text.splitlines()[0] == "k,it,n,d,instance_id,rt_ms"
    assert read_monitoring_csv(text) == recs
    assert read_workloads_csv(write_workloads_csv(wl)) == wl


def test_csv_bad_header():
    with pytest.raises(ValueError):
        read_monitoring_csv("a,b\n1,2\n")


def test_live_monitoring(live_pair):
    wl = [FeatureVector(2, 10, 40, 3), FeatureVector(3, 5, 80, 2)]
    recs = generate_monitoring(wl, live_pair, LIVE, FAST, noise_seed=4)
    assert [r.instance_id for r in recs] == ["edge0", "remote0"] * 2
    for r in recs:
        m = next(si.machine for si in live_pair if si.id == r.instance_id)
        # simulated delay is a floor on the measured time
        assert r.rt_ms >= analytic_rt(r.features, m, FAST) * 0.95


def test_live_unreachable():
    m = default_machines()[0]
    dead = [ServiceInstance("edge0", "http://127.0.0.1:9/cluster", m)]
    with pytest.raises(InstanceUnreachable):
        generate_monitoring([FeatureVector(1, 1, 2, 1)], dead, LIVE, timeout_s=2)
