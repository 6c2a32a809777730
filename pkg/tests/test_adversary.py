import pytest

from vanet_dynkey.adversary import AttackKind, AttackScenario, attack_world, run_attack, run_suite
from vanet_dynkey.errors import ScriptError
from vanet_dynkey.harness import experiment_configs, simulate
from vanet_dynkey.netsim import LinkModel
from vanet_dynkey.protocol import EventKind
from vanet_dynkey.scenario import static_world


@pytest.mark.parametrize("mode", ["mock", "real"])
@pytest.mark.parametrize("kind", list(AttackKind))
def test_attack_fails_and_is_detected(kind, mode):
    for out in run_suite([kind], replications=3, seed=5, crypto=mode)[kind]:
        assert not out.succeeded, out.report()
        assert out.detection_events, out.report()
        assert out.victim_certified, out.report()


def test_replay_is_flagged_stale_and_victim_recovers():
    out = run_attack(AttackScenario(AttackKind.REPLAY, seed=1))
    assert out.detection_events[0].kind is EventKind.STALE
    assert out.victim_certified


def test_sybil_gets_nothing_usable():
    out = run_attack(AttackScenario(AttackKind.SYBIL, seed=2))
    assert {e.kind for e in out.detection_events} == {EventKind.NOT_FOR_ME}


def test_tampered_key_message_fails_authentication():
    seen = set()
    for seed in range(40):
        out = run_attack(AttackScenario(AttackKind.MITM, seed=seed))
        assert not out.succeeded
        seen.update(e.kind for e in out.detection_events)
        if "KEY_RESP6" in out.detail:
            # At the vehicle a tampered seal looks like one made for someone else.
            ev = out.detection_events[0]
            assert ev.kind is EventKind.NOT_FOR_ME and "seal check failed" in ev.detail
        else:
            assert out.detection_events[0].kind in (EventKind.BAD_SEAL, EventKind.REPLAY_OR_FORGERY)
    assert EventKind.BAD_SEAL in seen and EventKind.NOT_FOR_ME in seen


def test_report_is_line_structured():
    text = run_attack(AttackScenario(AttackKind.MASQUERADE_CA, seed=3)).report()
    lines = text.splitlines()
    assert lines[0] == "scenario=masquerade"
    assert lines[1] == "succeeded=false"
    assert any(line.startswith("event ") for line in lines)


def test_script_error_when_victim_has_no_coverage():
    world = static_world([(0.0, 0.0)], [(5000.0, 0.0)], link=LinkModel(radio_range=100.0),
                         bounds=(6000.0, 1.0))
    with pytest.raises(ScriptError):
        run_attack(AttackScenario(AttackKind.REPLAY), world)


def test_attack_world_layout():
    w = attack_world(0, attacker=True)
    assert len(w.rsus) == 2 and len(w.vehicles) == 1 and len(w.trace.tracks) == 2


@pytest.mark.parametrize("model", ["Manhattan", "Highway"])
def test_honest_runs_raise_no_security_events(model):
    cfg = experiment_configs("E2", {"model": model, "vehicles": 30, "replications": 1})[0]
    for scheme in ("DYN", "BRD"):
        for seed in range(3):
            _, world = simulate(cfg, scheme, seed)
            assert world.security_events == []
