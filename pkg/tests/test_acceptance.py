"""Acceptance criteria, one test each; verdicts are summarised at the end of the run."""

import random
import statistics
import subprocess
import sys
import time

import pytest

from vanet_dynkey.adversary import AttackKind, run_suite
from vanet_dynkey.analytics import TimingParams, e2e_time
from vanet_dynkey.codec import Kind
from vanet_dynkey.harness import EXPERIMENTS, emit_results, experiment_configs, run_experiment
from vanet_dynkey.netsim import LinkModel
from vanet_dynkey.protocol import Delivery
from vanet_dynkey.scenario import corridor_world, static_world
from vanet_dynkey.schemes import RevocationScheme, run_revocation

pytestmark = pytest.mark.acceptance


def _cli(argv):
    proc = subprocess.run([sys.executable, "-m", "vanet_dynkey.cli", *argv], capture_output=True,
                          text=True, timeout=30)
    return proc.returncode, proc.stdout.splitlines()


def test_1_analytic_exactness(criterion):
    t0 = time.perf_counter()
    rc1, a = _cli(["analytic", "--v", "80", "--l", "300", "--d", "500", "--N", "1000"])
    elapsed = time.perf_counter() - t0
    rc2, b = _cli(["analytic", "--v", "300", "--l", "900", "--d", "1500", "--N", "1000"])
    r_a = float(a[0].split()[2])
    ok = (rc1 == rc2 == 0 and abs(r_a - 6666.67) <= 0.01 and a[1:3] == ["m = 15", "p = 1.5 %"]
          and float(b[0].split()[2]) == 75000.0 and b[1:3] == ["m = 51", "p = 5.1 %"] and elapsed < 1.0)
    criterion(1, ok, f"{a[:3]} {b[:3]}, one CLI process in {elapsed:.3f}s")
    assert ok


def test_2_sequential_latency_matches_closed_form(criterion):
    # Wired delays all distinct and non-zero; RSU processing is zero so the only
    # term outside the closed form is the final radio hop.
    link = LinkModel(t_p_ca=0.002, t_ca=0.015, t_p_man=0.003, t_man=0.012, t_p_rsu=0.0,
                     t_rsu=0.007, radio_latency=0.002, radio_range=300.0)
    tp = TimingParams(link.t_p_ca, link.t_ca, link.t_p_man, link.t_man, link.t_p_rsu, link.t_rsu)
    t0 = time.perf_counter()
    gaps = {}
    for k in (1, 2, 5, 8):
        w = corridor_world(k, link=link)
        w.start_mobility()
        w.run_until(w.trace.duration - 20.0)
        v = w.vehicles[min(w.vehicles)]
        m = run_revocation(RevocationScheme.dyn(Delivery.SEQUENTIAL), w, v.elp.value)
        assert m.chain_lengths == [k]
        gaps[k] = m.t_e2e_measured - e2e_time(tp, k - 1)
    elapsed = time.perf_counter() - t0
    ok = all(0.0 <= g <= link.radio_latency + 1e-9 for g in gaps.values()) and elapsed < 5.0
    criterion(2, ok, f"measured - closed form per chain length {gaps}, quantum {link.radio_latency}s, "
                     f"{elapsed:.2f}s")
    assert ok


def _random_topology(rng, seed):
    n_rsu = rng.randint(1, 6)
    rsus = [(rng.uniform(0, 2000), rng.uniform(0, 2000)) for _ in range(n_rsu)]
    cars = []
    for _ in range(rng.randint(1, 5)):
        cx, cy = rsus[rng.randrange(n_rsu)]
        cars.append((min(max(cx + rng.uniform(-200, 200), 0.0), 2000.0),
                     min(max(cy + rng.uniform(-200, 200), 0.0), 2000.0)))
    return static_world(rsus, cars, managers=rng.randint(1, min(3, n_rsu)), seed=seed,
                        link=LinkModel(radio_range=300.0), bounds=(2000.0, 2000.0), duration=10.0)


def test_3_handshake_oracle(criterion):
    rng = random.Random(2024)
    t0 = time.perf_counter()
    bad = []
    for i in range(1000):
        w = _random_topology(rng, i)
        w.start_mobility()
        w.run_until(3.0)
        n = len(w.vehicles)
        if any(w.sent_by_kind[k] < n for k in (Kind.KEY_REQ1, Kind.KEY_REQ2, Kind.KEY_REQ3,
                                                Kind.KEY_RESP4, Kind.KEY_RESP5, Kind.KEY_RESP6)):
            bad.append((i, "incomplete handshake"))
            continue
        for v in w.vehicles.values():
            if v.cert is None or v.cert.session_key.key_material != w.ca.issued_keys[v.elp.value].key_material:
                bad.append((i, v.id))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 30.0
    criterion(3, ok, f"1000 topologies, mismatches {bad[:5]}, {elapsed:.1f}s")
    assert ok


def test_4_attack_suite(criterion):
    kinds = [AttackKind.REPLAY, AttackKind.MITM, AttackKind.SYBIL, AttackKind.MASQUERADE_CA]
    results = run_suite(kinds, replications=100, seed=7)
    summary = {}
    ok = True
    for kind, outs in results.items():
        wins = sum(o.succeeded for o in outs)
        undetected = sum(len(o.detection_events) < o.injections for o in outs)
        uncertified = sum(not o.victim_certified for o in outs)
        summary[kind.value] = (wins, undetected, uncertified)
        ok &= len(outs) == 100 and wins == 0 and undetected == 0 and uncertified == 0
    criterion(4, ok, f"(successes, undetected, victim uncertified) per scenario: {summary}")
    assert ok


@pytest.fixture(scope="module")
def mock_suite(tmp_path_factory):
    """The full E1-E6 suite at preset replications, mock crypto, emitted once."""
    out = tmp_path_factory.mktemp("suite_a")
    t0 = time.perf_counter()
    tables = {}
    for e in EXPERIMENTS:
        tables[e] = run_experiment(experiment_configs(e, {"crypto": "mock"}))
        emit_results(tables[e], out)
    return tables, out, time.perf_counter() - t0


def test_5_dominance(criterion, mock_suite):
    table = mock_suite[0]["E2"]
    bad = []
    for model in ("Manhattan", "Highway"):
        for d, b in zip(table.series(model, "DYN"), table.series(model, "BRD")):
            if not d.mean <= b.mean:
                bad.append((model, d.x, d.mean, b.mean))
    by_run = {(r.model, r.x, r.seed, r.scheme): r.messages_sent for r in table.runs}
    for (model, x, seed, scheme), sent in by_run.items():
        if scheme == "DYN" and sent > by_run[(model, x, seed, "BRD")]:
            bad.append((model, x, seed))
    d30 = next(r for r in table.series("Manhattan", "DYN") if r.x == 30.0)
    b30 = next(r for r in table.series("Manhattan", "BRD") if r.x == 30.0)
    ratio = d30.mean / b30.mean
    points = len({(r.model, r.x) for r in table.rows})
    ok = not bad and ratio <= 0.10 and points == 10 and all(r.n == 10 for r in table.rows)
    criterion(5, ok, f"{points} points, violations {bad[:3]}, Manhattan@30 DYN/BRD = "
                     f"{d30.mean:.1f}/{b30.mean:.1f} = {ratio:.3f}")
    assert ok


def test_6_manager_count_shape(criterion, mock_suite):
    dyn = mock_suite[0]["E6"].series("Manhattan", "DYN")
    xs, ys = [r.x for r in dyn], [r.mean for r in dyn]
    i = ys.index(min(ys))
    ok = xs == [1.0, 2.0, 4.0, 8.0, 16.0] and 0 < i < len(ys) - 1 and ys[-1] > ys[i]
    criterion(6, ok, "DYN messages by manager count " + ", ".join(f"{x:g}:{y:.1f}" for x, y in zip(xs, ys)))
    assert ok


def test_7_delivery_ratio_stability(criterion, mock_suite):
    table = mock_suite[0]["E5"]
    dyn = [r.mean for m in ("Manhattan", "Highway") for r in table.series(m, "DYN")]
    brd = [r.mean for m in ("Manhattan", "Highway") for r in table.series(m, "BRD")]
    sd_d, sd_b = statistics.stdev(dyn), statistics.stdev(brd)
    mean_d = statistics.fmean(dyn)
    ok = len(dyn) == len(brd) == 10 and sd_d < sd_b and mean_d >= 0.95
    criterion(7, ok, f"sd DYN {sd_d:.4f} vs BRD {sd_b:.4f} over {len(dyn)} density points; "
                     f"DYN mean {mean_d:.4f}")
    assert ok


def _run_suite_timed(crypto, out):
    t0 = time.perf_counter()
    for e in EXPERIMENTS:
        emit_results(run_experiment(experiment_configs(e, {"crypto": crypto})), out)
    return time.perf_counter() - t0


def test_8_determinism_and_runtime(criterion, mock_suite, tmp_path):
    _, first, t_mock_a = mock_suite
    t_mock_b = _run_suite_timed("mock", tmp_path / "b")
    names = sorted(p.name for p in first.iterdir())
    differing = [n for n in names if (first / n).read_bytes() != (tmp_path / "b" / n).read_bytes()]
    t_real = _run_suite_timed("real", tmp_path / "real")
    t_mock = (t_mock_a + t_mock_b) / 2
    overhead = (t_real - t_mock) / t_real
    ok = (len(names) == 13 and not differing and max(t_mock_a, t_mock_b) < 600.0 and overhead < 0.25)
    criterion(8, ok, f"{len(names)} files, differing {differing}; mock suite {t_mock_a:.0f}s/{t_mock_b:.0f}s, "
                     f"real {t_real:.0f}s, crypto share of real run {overhead:.1%}")
    assert ok
