import copy

import pytest
from hypothesis import given, settings, strategies as st

from vanet_dynkey.analytics import TimingParams, e2e_time
from vanet_dynkey.netsim import LinkModel
from vanet_dynkey.protocol import Delivery, Scope
from vanet_dynkey.scenario import ScenarioSpec, build_world, corridor_world, static_world
from vanet_dynkey.schemes import (
    RevocationScheme,
    SchemeKind,
    intended_recipients,
    make_scheme,
    register_scheme,
    run_revocation,
)

DYN, BRD = RevocationScheme.dyn(), RevocationScheme.brd()


def _settle(world, t):
    world.start_mobility()
    world.run_until(t)
    return world


def _grid_world(managers=3, vehicles=None, seed=0):
    rsus = [(x * 500.0, y * 500.0) for x in range(3) for y in range(3)]
    cars = vehicles or [(10.0, 10.0), (510.0, 990.0), (1000.0, 20.0)]
    return _settle(static_world(rsus, cars, managers=managers, seed=seed, bounds=(1001.0, 1001.0)), 3.0)


def _driven(rsus, **kw):
    w = corridor_world(rsus, **kw)
    return _settle(w, w.trace.duration - 20.0), w.vehicles[min(w.vehicles)]


def test_brd_targets_every_rsu():
    w = _grid_world()
    target = w.vehicles[min(w.vehicles)]
    m = run_revocation(BRD, w, target.elp.value)
    assert m.rsu_targets == len(w.rsus) == 9
    assert m.manager_receivers == 3
    assert m.messages_sent == 3 + 9 + 9


def test_dyn_targets_the_chain():
    w, v = _driven(2)
    m = run_revocation(DYN, w, v.elp.value)
    assert m.chain_lengths == [2]
    assert m.rsu_targets == 2
    assert m.messages_sent == 1 + 2 + 2
    assert v.erased


def test_expired_target_costs_nothing():
    w = static_world([(0.0, 0.0)], [(10.0, 0.0)], cert_lifetime=5.0, duration=30.0)
    _settle(w, 2.0)
    v = w.vehicles[min(w.vehicles)]
    # Stop renewing so the certificate lapses.
    w.scripted.add(v.id)
    m = run_revocation(DYN, w, v.elp.value, now=20.0)
    assert m.messages_sent == 0 and m.rsu_targets == 0
    assert v.elp.value in w.ca.blacklist


def test_intended_counts():
    empty = static_world([(0.0, 0.0)], [])
    assert intended_recipients(empty, BRD, b"x" * 8, 0.0) == 0
    spec = ScenarioSpec(vehicles=30, duration=10.0, seed=2)
    w = _settle(build_world(spec), 5.0)
    assert intended_recipients(w, BRD, b"x" * 8, 5.0) == 30


@settings(max_examples=12)
@given(seed=st.integers(0, 5000), managers=st.sampled_from([1, 2, 4]),
       model=st.sampled_from(["Manhattan", "Highway"]))
def test_dyn_never_costs_more_than_brd(seed, managers, model):
    spec = ScenarioSpec(model=model, area_km2=4.0 if model == "Manhattan" else 6.0, vehicles=15,
                        managers=managers, rsu_spacing=500.0 if model == "Manhattan" else 1500.0,
                        link=LinkModel(radio_range=300.0 if model == "Manhattan" else 800.0),
                        duration=40.0, seed=seed)
    w = _settle(build_world(spec), 30.0)
    target = w.vehicles[min(vid for vid, v in w.vehicles.items() if v.cert is not None)]
    now = w.clock
    assert intended_recipients(w, DYN, target.elp.value, now) <= intended_recipients(w, BRD, target.elp.value, now)
    w2 = copy.deepcopy(w)
    dyn = run_revocation(DYN, w, target.elp.value)
    brd = run_revocation(BRD, w2, target.elp.value)
    assert dyn.messages_sent <= brd.messages_sent
    assert dyn.rsu_targets <= brd.rsu_targets
    # Everyone the warning was meant for at broadcast time got it.
    assert dyn.vehicles_warned == dyn.intended_recipients


def test_single_manager_routing_matches_brd():
    w = _grid_world(managers=1)
    target = w.vehicles[min(w.vehicles)]
    w2 = copy.deepcopy(w)
    dyn = run_revocation(DYN, w, target.elp.value)
    brd = run_revocation(BRD, w2, target.elp.value)
    assert dyn.manager_receivers == brd.manager_receivers == 1
    dom = run_revocation(RevocationScheme.dyn(scope=Scope.DOMAIN), copy.deepcopy(w2), target.elp.value)
    assert dom.manager_receivers == 1


@pytest.mark.parametrize("k", [1, 2, 5])
def test_sequential_latency_decomposes(k):
    link = LinkModel(t_p_ca=0.001, t_ca=0.010, t_p_man=0.002, t_man=0.010, t_p_rsu=0.003,
                     t_rsu=0.005, radio_latency=0.002, radio_range=300.0)
    w, v = _driven(k, link=link)
    m = run_revocation(RevocationScheme.dyn(Delivery.SEQUENTIAL), w, v.elp.value)
    assert m.chain_lengths == [k]
    tp = TimingParams(link.t_p_ca, link.t_ca, link.t_p_man, link.t_man, link.t_p_rsu, link.t_rsu)
    assert m.t_e2e_measured == pytest.approx(e2e_time(tp, k - 1) + link.t_p_rsu + link.radio_latency, abs=1e-12)


def test_fanout_latency_is_one_hop():
    w, v = _driven(5)
    m = run_revocation(DYN, w, v.elp.value)
    ln = w.link
    expect = ln.t_p_ca + ln.t_ca + ln.t_p_man + ln.t_man + ln.t_p_rsu + ln.radio_latency
    assert m.t_e2e_measured == pytest.approx(expect, abs=1e-12)


def test_scheme_registry():
    assert make_scheme("BRD").kind is SchemeKind.BRD
    assert make_scheme("DYN", delivery=Delivery.SEQUENTIAL).delivery is Delivery.SEQUENTIAL
    with pytest.raises(ValueError):
        make_scheme("CMAC")
    with pytest.raises(ValueError):
        register_scheme("DYN", RevocationScheme.dyn)
