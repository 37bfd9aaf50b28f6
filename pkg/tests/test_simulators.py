import pytest
from hypothesis import given, settings, strategies as st

from twowaysim.analysis import check_simulation, kno_bounds, naming_checks
from twowaysim.core import ConfigError, IntegrityError, count_omissions
from twowaysim.protocols import BOT, C, CS, P
from twowaysim.scheduling import (AdversaryConfig, SchedulerConfig, adversary_rewrite,
                                  compose_run, fair_run)
from twowaysim.simulators import (JOKER, OMISSION, IDAgent, KnOAgent, NamingAgent, Token,
                                  execute, kno_reactor_step, kno_starter_step, make_simulator,
                                  naming_step, sid_reactor_step)


def tok(q, i):
    return Token("run", q, i)


def chg(qs, qr, i):
    return Token("chg", (qs, qr), i)


# --- token simulator -------------------------------------------------------

def test_starter_injects_run():
    agent, sent = kno_starter_step(KnOAgent(C), 1)
    assert sent == tok(C, 1)
    assert agent.sim == "pending" and agent.sending == (tok(C, 2),)


def test_starter_pops_head():
    agent, sent = kno_starter_step(KnOAgent(P, "pending", (JOKER, tok(C, 2))), 1)
    assert sent == JOKER and agent.sending == (tok(C, 2),)


def test_starter_single_token_run():
    agent, sent = kno_starter_step(KnOAgent(P), 0)
    assert sent == tok(P, 1) and agent.sending == () and agent.sim == "pending"


def test_pending_starter_with_empty_queue_stays_silent():
    agent = KnOAgent(P, "pending")
    assert kno_starter_step(agent, 2) == (agent, None)


def test_reactor_consumes_run(pip_spec):
    out = kno_reactor_step(KnOAgent(C), tok(P, 1), pip_spec.delta, 0)
    assert out.state_P == CS and out.sim == "available"
    assert out.sending == (chg(P, C, 1),)
    assert out.tag == ("r", ("kno", P, C)) and out.updates == 1


def test_omission_completes_run_with_second_joker(pip_spec):
    agent = KnOAgent(C, sending=(tok(P, 1), JOKER))
    out = kno_reactor_step(agent, OMISSION, pip_spec.delta, 1)
    assert out.state_P == CS
    assert out.jokers == (tok(P, 2),)
    assert out.sending == (JOKER, chg(P, C, 1), chg(P, C, 2))


def test_pending_agent_resolves_on_change_run(pip_spec):
    agent = KnOAgent(P, "pending", (chg(P, C, 1),))
    out = kno_reactor_step(agent, chg(P, C, 2), pip_spec.delta, 1)
    assert out.state_P == BOT and out.sim == "available" and out.sending == ()
    assert out.tag == ("s", ("kno", P, C))


def test_noted_token_turns_into_joker(pip_spec):
    agent = KnOAgent(C, sending=(), jokers=(tok(P, 2),))
    out = kno_reactor_step(agent, tok(P, 2), pip_spec.delta, 1)
    assert out.jokers == () and out.sending == (JOKER,)


def test_pending_agent_takes_back_own_run(pip_spec):
    agent = KnOAgent(P, "pending", (tok(P, 1),))
    out = kno_reactor_step(agent, tok(P, 2), pip_spec.delta, 1)
    assert out.sim == "available" and out.state_P == P and out.sending == ()


def test_token_serialization(pip_spec):
    for t in (tok(C, 3), chg(P, C, 1), JOKER):
        assert Token.parse(str(t)) == t
    assert [str(t) for t in (tok(C, 3), chg(P, C, 1), JOKER)] == ["c:3", "chg:p:c:1", "J"]
    sim = make_simulator("kno", pip_spec, o=2)
    a = KnOAgent(P, "pending", (JOKER, chg(C, P, 2)), (tok(C, 1),), 3, ("s", ("kno", C, P)))
    assert sim.decode(sim.encode(a)) == a


@given(st.integers(2, 6), st.integers(0, 2), st.sampled_from(["i3", "i4"]),
       st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_kno_joker_bound_and_simulation(n, o, model, seed):
    from twowaysim.protocols import pairing_protocol
    spec = pairing_protocol()
    sim = make_simulator("kno", spec, o=o)
    init = tuple(C if i % 2 else P for i in range(n))
    run = adversary_rewrite(fair_run(SchedulerConfig(n, seed, 3000)),
                            AdversaryConfig("uo", rate=0.05, max_omissions=o), model, n, seed)
    trace = execute(sim, model, sim.initial(init), run)
    assert count_omissions(trace.steps()) <= o
    stats = kno_bounds(trace, o)
    assert stats.joker_violation is None and stats.max_jokers <= o
    rep = check_simulation(trace, spec)
    assert rep.match.accepted and rep.derived.consistent_with_trace


def test_kno_model_compatibility(pip_spec):
    sim = make_simulator("kno", pip_spec, o=1)
    for bad in ("io", "i1", "i2", "tw", "t3"):
        with pytest.raises(ConfigError):
            sim.check_model(bad)
    with pytest.raises(ConfigError):
        make_simulator("kno", pip_spec, o=-1)


# --- locking simulator -----------------------------------------------------

def test_sid_available_pair_up(pip_spec):
    out = sid_reactor_step(IDAgent(7, C), IDAgent(3, P), pip_spec.delta)
    assert (out.sim, out.id_other, out.state_other) == ("pairing", 3, P)


def test_sid_lock(pip_spec):
    starter = IDAgent(7, C, 3, P, "pairing")
    out = sid_reactor_step(IDAgent(3, P), starter, pip_spec.delta)
    assert out.sim == "locked" and out.state_P == BOT
    assert out.tag == ("s", ("sid", 3, 7))


def test_sid_lock_requires_matching_state(pip_spec):
    # the starter recorded a different simulated state for us: no lock
    starter = IDAgent(7, C, 3, C, "pairing")
    assert sid_reactor_step(IDAgent(3, P), starter, pip_spec.delta) == IDAgent(3, P)


def test_sid_completion(pip_spec):
    r = IDAgent(7, C, 3, P, "pairing")
    s = IDAgent(3, BOT, 7, C, "locked", 1)
    out = sid_reactor_step(r, s, pip_spec.delta)
    assert out.state_P == CS and out.sim == "available" and out.id_other is None
    assert out.tag == ("r", ("sid", 3, 7))


def test_sid_rollback(pip_spec):
    r = IDAgent(7, C, 3, P, "pairing")
    s = IDAgent(3, P, 9, C, "pairing")
    out = sid_reactor_step(r, s, pip_spec.delta)
    assert out == IDAgent(7, C)


def test_sid_duplicate_ids(pip_spec):
    with pytest.raises(IntegrityError):
        sid_reactor_step(IDAgent(3, C), IDAgent(3, P), pip_spec.delta)
    with pytest.raises(ConfigError):
        make_simulator("sid", pip_spec, ids=[1, 1]).initial((C, P))


def test_sid_only_io(pip_spec):
    with pytest.raises(ConfigError):
        make_simulator("sid", pip_spec).check_model("t3")


@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_sid_matching_always_accepted(n, seed):
    from twowaysim.protocols import pairing_protocol
    spec = pairing_protocol()
    sim = make_simulator("sid", spec)
    init = tuple(C if (seed >> i) & 1 else P for i in range(n))
    trace = execute(sim, "io", sim.initial(init), fair_run(SchedulerConfig(n, seed, 4000)))
    rep = check_simulation(trace, spec, pairing=True, horizon=4000, window=0.0)
    assert rep.match.accepted and rep.derived.consistent_with_trace
    # every pending event is a lock whose partner has not completed yet
    assert len(rep.matching.pending) <= n // 2
    assert rep.pairing_trace.safety and rep.pairing_trace.irrevocability
    assert rep.pairing_derived.safety and rep.pairing_derived.irrevocability


# --- naming ----------------------------------------------------------------

def _named(my_id, max_id, started=False):
    return NamingAgent(my_id, max_id, started, IDAgent(0, C))


def test_naming_collision_increments():
    out = naming_step(_named(1, 1), _named(1, 1), 5)
    assert (out.my_id, out.max_id) == (2, 2)


def test_naming_max_propagates():
    out = naming_step(_named(2, 2), _named(1, 5), 8)
    assert (out.my_id, out.max_id) == (2, 5)


def test_naming_two_agents_start(pip_spec):
    sim = make_simulator("naming", pip_spec, n=2)
    trace = execute(sim, "io", sim.initial((C, P)), compose_run([(0, 1)]))
    a1 = trace.records[-1].post[1]
    assert (a1.my_id, a1.max_id, a1.started, a1.inner.my_id) == (2, 2, True, 2)


def test_naming_rejects_overflow():
    with pytest.raises(IntegrityError):
        naming_step(_named(3, 3), _named(3, 3), 3)


@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_naming_invariant(n, seed):
    from twowaysim.protocols import pairing_protocol
    spec = pairing_protocol()
    sim = make_simulator("naming", spec, n=n)
    init = tuple(C if i < n // 2 else P for i in range(n))
    trace = execute(sim, "io", sim.initial(init), fair_run(SchedulerConfig(n, seed, 5000)))
    stats = naming_checks(trace, n)
    assert stats.ok, stats.violations[:3]


def test_naming_config(pip_spec):
    with pytest.raises(ConfigError):
        make_simulator("naming", pip_spec)
    with pytest.raises(ConfigError):
        make_simulator("naming", pip_spec, n=3).initial((C, P))


# --- naive simulators -------------------------------------------------------

def test_eager_and_graceful_run(pip_spec):
    for name, params in (("eager", {}), ("graceful", {"inner": "kno", "o": 1, "threshold": 2})):
        sim = make_simulator(name, pip_spec, **params)
        trace = execute(sim, "i3", sim.initial((C, P, C, P)), fair_run(SchedulerConfig(4, 0, 500)))
        assert len(trace) == 500
        assert sim.decode(sim.encode(trace.records[-1].post[0])) == trace.records[-1].post[0]


def test_graceful_halts_after_threshold(pip_spec):
    sim = make_simulator("graceful", pip_spec, inner="kno", o=1, threshold=1)
    trace = execute(sim, "i3", sim.initial((C, P)),
                    compose_run([(0, 1, "omissive"), (1, 0), (0, 1)]))
    assert trace.records[0].post[1].halted
    assert trace.records[-1].post[1] == trace.records[0].post[1]


def test_unknown_simulator(pip_spec):
    with pytest.raises(ConfigError):
        make_simulator("magic", pip_spec)
