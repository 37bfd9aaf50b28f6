import pytest

from twowaysim.analysis import (CapExceeded, lemma1_attack, replay_plan, theorem3_rewrite)
from twowaysim.analysis.attacks import LEMMA1_MODELS, THEOREM3_MODELS
from twowaysim.core import ConfigError, Omission, count_omissions
from twowaysim.protocols import C, CS, P, parse_protocol
from twowaysim.simulators import make_simulator


@pytest.fixture(scope="module")
def kno_plan(pip_spec):
    sim = make_simulator("kno", pip_spec, o=1)
    return sim, lemma1_attack(sim, pip_spec, "i3", P, C)


def test_kno_plan_shape(kno_plan):
    sim, plan = kno_plan
    assert plan.t == 4 and plan.n == 10
    assert count_omissions(plan.run) == plan.omissions == 4
    assert plan.t_ks == [12, 2, 2, 2]
    assert [len(b) for b in plan.blocks] == [13, 3, 4, 5]
    assert plan.initial_states() == (P, C, P, C, P, C, P, C, C, C)


def test_block_lengths_follow_tk(kno_plan):
    _, plan = kno_plan
    for k, (block, t_k) in enumerate(zip(plan.blocks, plan.t_ks)):
        # I_k[:k], the two redirected steps, then I_k[k+1 : t_k]
        assert len(block) == k + 2 + max(0, t_k - k - 1)
        assert sum(st.omissive for st in block) == 1


def test_kno_replay_violates_safety(kno_plan):
    sim, plan = kno_plan
    rep = replay_plan(sim, "i3", plan, record=True)
    assert rep.transitioned == [1, 3, 5, 7, 8]
    assert rep.violated and len(rep.transitioned) >= plan.t + 1 > rep.q0_agents == plan.t
    final = rep.trace.records[-1].post
    assert sum(a.state_P == CS for a in final) == rep.final_count >= plan.t + 1


def test_first_block_alone(kno_plan):
    sim, plan = kno_plan
    rep = replay_plan(sim, "i3", plan, blocks=1)
    assert rep.transitioned == [1]


@pytest.mark.parametrize("o,t", [(2, 6), (3, 8)])
def test_kno_larger_budgets(pip_spec, o, t):
    sim = make_simulator("kno", pip_spec, o=o)
    plan = lemma1_attack(sim, pip_spec, "i3", P, C)
    rep = replay_plan(sim, "i3", plan)
    assert plan.t == t and plan.omissions == t
    assert len(rep.transitioned) == t + 1 and rep.violated


def test_kno_without_budget_cannot_resolve(pip_spec):
    # one lost token is already beyond o = 0: the q1 agent never transitions
    sim = make_simulator("kno", pip_spec, o=0)
    with pytest.raises(CapExceeded):
        lemma1_attack(sim, pip_spec, "i3", P, C, tk_cap=2000)


@pytest.mark.parametrize("model", sorted(LEMMA1_MODELS))
def test_eager_plans(pip_spec, model):
    sim = make_simulator("eager", pip_spec)
    plan = lemma1_attack(sim, pip_spec, model, P, C)
    rep = replay_plan(sim, model, plan)
    assert plan.t == 2 and plan.t_ks == [4, 1] and [len(b) for b in plan.blocks] == [5, 3]
    assert rep.transitioned == [1, 3, 4] and rep.violated
    assert plan.omissions == 2


def test_one_way_omission_placement(pip_spec):
    sim = make_simulator("eager", pip_spec)
    plan = lemma1_attack(sim, pip_spec, "i1", P, C)
    # I starts with (d0, d1): the omission is the d1 agent's missed reading, on step B
    a, b = plan.blocks[0][0], plan.blocks[0][1]
    assert (a.starter, a.reactor, a.omission) == (0, 4, Omission.NONE)
    assert (b.starter, b.reactor, b.omission) == (5, 1, Omission.OMISSIVE)
    # I[1] is (d1, d0): the d0 agent misses the reading, the omission moves to step A
    a, b = plan.blocks[1][1], plan.blocks[1][2]
    assert (a.starter, a.reactor, a.omission) == (4, 2, Omission.OMISSIVE)
    assert (b.starter, b.reactor, b.omission) == (3, 5, Omission.NONE)


def test_two_way_omission_side(pip_spec):
    sim = make_simulator("eager", pip_spec)
    plan = lemma1_attack(sim, pip_spec, "t2", P, C)
    b0, b1 = plan.blocks[0][1], plan.blocks[1][2]
    assert b0.omission is Omission.REACTOR and b0.reactor == 1
    assert b1.omission is Omission.STARTER and b1.starter == 3


@pytest.mark.parametrize("model,deltas", [("t1", [-1, -1]), ("i1", [-1, 0]), ("i2", [0, 1])])
def test_rewrite_block_arithmetic(pip_spec, model, deltas):
    sim = make_simulator("eager", pip_spec)
    plan = lemma1_attack(sim, pip_spec, model, P, C)
    out = theorem3_rewrite(model, plan)
    assert out.kind == "omission-free" and count_omissions(out.run) == 0
    assert [len(n) - len(o) for n, o in zip(out.blocks, plan.blocks)] == deltas
    rep = replay_plan(sim, model, out)
    assert rep.omissions == 0 and rep.violated and rep.transitioned == [1, 3, 4]


def test_rewrite_errors(pip_spec):
    sim = make_simulator("eager", pip_spec)
    plan = lemma1_attack(sim, pip_spec, "i1", P, C)
    with pytest.raises(ConfigError):
        theorem3_rewrite("t3", plan)
    with pytest.raises(ConfigError):
        theorem3_rewrite("i2", plan)
    assert THEOREM3_MODELS == {"t1", "i1", "i2"}


def test_attack_preconditions(pip_spec, epidemic_spec):
    kno = make_simulator("kno", pip_spec, o=1)
    with pytest.raises(ConfigError):
        lemma1_attack(kno, pip_spec, "i4", P, C)
    with pytest.raises(ConfigError):
        lemma1_attack(kno, pip_spec, "i3", C, C)
    with pytest.raises(ConfigError):
        lemma1_attack(make_simulator("eager", epidemic_spec), epidemic_spec, "i3", "i", "s")
    with pytest.raises(CapExceeded):
        lemma1_attack(make_simulator("identity", pip_spec), pip_spec, "i3", P, C, depth_cap=20)


def test_trivial_transition_rejected():
    spec = parse_protocol("states: a b\ninitial: a b\n", "still")
    with pytest.raises(ConfigError, match="t = 0"):
        lemma1_attack(make_simulator("eager", spec), spec, "i3", "a", "b")


def test_graceful_degradation(pip_spec):
    # freezing after two detected omissions is still fooled by single-omission pairs
    sim = make_simulator("graceful", pip_spec, inner="kno", o=1, threshold=2)
    plan = lemma1_attack(sim, pip_spec, "i3", P, C)
    assert replay_plan(sim, "i3", plan).violated
    # freezing at the first omission leaves the fooled pair unresolved
    sim1 = make_simulator("graceful", pip_spec, inner="kno", o=1, threshold=1)
    with pytest.raises(CapExceeded):
        lemma1_attack(sim1, pip_spec, "i3", P, C, tk_cap=2000)


def test_attack_is_seeded(pip_spec):
    sim = make_simulator("kno", pip_spec, o=1)
    a = lemma1_attack(sim, pip_spec, "i3", P, C, seed=3)
    b = lemma1_attack(sim, pip_spec, "i3", P, C, seed=3)
    assert a.run == b.run
