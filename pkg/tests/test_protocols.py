import pytest
from hypothesis import given, settings, strategies as st

from twowaysim.core import ConfigError, StructuralError
from twowaysim.protocols import (BOT, C, CS, P, PairingInstance, check_pairing, format_protocol,
                                 load_protocol, parse_protocol)
from twowaysim.scheduling import SchedulerConfig, fair_run
from twowaysim.simulators import execute, make_simulator


def test_pairing_rules(pip_spec):
    assert pip_spec.delta[(C, P)] == (CS, BOT)
    assert pip_spec.delta[(P, C)] == (BOT, CS)
    assert pip_spec.delta[(C, C)] == (C, C)
    assert set(pip_spec.nontrivial_rules()) == {(C, P), (P, C)}
    assert pip_spec.is_symmetric_on(P, C)


def test_epidemic_is_asymmetric(epidemic_spec):
    assert epidemic_spec.delta[("i", "s")] == ("i", "i")
    assert epidemic_spec.delta[("s", "i")] == ("s", "i")
    assert not epidemic_spec.is_symmetric_on("i", "s")


def test_table_format_roundtrip(pip_spec, tmp_path):
    text = format_protocol(pip_spec)
    again = parse_protocol(text)
    assert again.delta == pip_spec.delta and again.states == pip_spec.states
    path = tmp_path / "mine.txt"
    path.write_text(text)
    assert load_protocol(str(path)).delta == pip_spec.delta


@pytest.mark.parametrize("text", [
    "states: a b\na b -> b a\n",
    "states: a b\ninitial: a\na b -> b\n",
    "states: a b\ninitial: a\na b -> b a\na b -> a a\n",
    "states: a b\ninitial: a\na b -> b z\n",
])
def test_table_format_errors(text):
    with pytest.raises(StructuralError):
        parse_protocol(text)


def test_unknown_protocol():
    with pytest.raises(ConfigError):
        load_protocol("no-such-protocol")


def _direct_configs(spec, init, seed, horizon):
    sim = make_simulator("none", spec)
    trace = execute(sim, "tw", sim.initial(init), fair_run(SchedulerConfig(len(init), seed, horizon)))
    return [tuple(a.state_P for a in c) for c in trace.configs()]


def test_direct_execution_two_consumers_three_producers(pip_spec):
    inst = PairingInstance(2, 3)
    rep = check_pairing(_direct_configs(pip_spec, inst.initial(), 0, 10000), inst, 10000)
    assert rep.ok and rep.safety and rep.final_cs == 2


def test_irrevocability_violation_flagged():
    inst = PairingInstance(1, 1)
    rep = check_pairing([(C, P), (CS, BOT), (BOT, BOT)], inst, 3, window=0)
    assert not rep.irrevocability and not rep.ok
    assert rep.violations[0][0] == "irrevocability"


def test_zero_producers():
    inst = PairingInstance(3, 0)
    assert inst.target == 0
    assert check_pairing([(C, C, C)] * 5, inst, 5).ok
    rep = check_pairing([(C, C, C), (CS, C, C)], inst, 2, window=0)
    assert not rep.safety


def test_instance_mismatch_is_structural():
    with pytest.raises(StructuralError):
        check_pairing([(C, C)], PairingInstance(1, 1))


def test_liveness_window():
    inst = PairingInstance(1, 1)
    late = [(C, P)] * 95 + [(CS, BOT)] * 5
    assert not check_pairing(late, inst, 100, window=0.1).liveness_at_horizon
    assert check_pairing(late, inst, 100, window=0.0).liveness_at_horizon
    early = [(C, P)] * 50 + [(CS, BOT)] * 50
    rep = check_pairing(early, inst, 100)
    assert rep.liveness_at_horizon and rep.stable_from == 50


@given(st.integers(0, 5), st.integers(0, 5), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_cs_equals_bot_under_direct_tw(nc, np_, seed):
    from twowaysim.protocols import pairing_protocol
    spec = pairing_protocol()
    inst = PairingInstance(nc, np_)
    if inst.n < 2:
        return
    configs = _direct_configs(spec, inst.initial(), seed, 3000)
    for cfg in configs:
        assert cfg.count(CS) == cfg.count(BOT)
    rep = check_pairing(configs, inst, 3000)
    assert rep.irrevocability and rep.safety and rep.liveness_at_horizon
