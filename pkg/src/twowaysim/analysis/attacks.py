"""Counterexample runs that make a simulator violate Pair.

``lemma1_attack`` fools t pairs of agents into believing they are alone
(each pair sees one redirected omission), while an extra agent replays the
q1-agent of an optimal two-agent run against one member of each pair.
``theorem3_rewrite`` removes the omissions again in the models where the
redirected interaction can be imitated without one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import ConfigError, Omission, RunStep, count_omissions, simulated
from ..models import compile_step, get_model
from ..simulators.engine import execute
from .timing import fastest_transition_time

LEMMA1_MODELS = frozenset({"t1", "t2", "t3", "i1", "i2", "i3"})
THEOREM3_MODELS = frozenset({"t1", "i1", "i2"})


class CapExceeded(RuntimeError):
    """A search (FTT or t_k) did not finish within its cap."""


@dataclass
class AttackPlan:
    kind: str  # "omissive" or "omission-free"
    model: str
    q0: str
    q1: str
    q1_after: str
    t: int
    base: list  # I: an optimal omission-free two-agent run
    prefixes: list  # I_k truncated after t_k steps, for k < t
    t_ks: list
    blocks: list  # J_k over the 2t+2 agents
    run: list = field(default_factory=list)  # I*, the concatenated blocks

    @property
    def n(self) -> int:
        return 2 * self.t + 2

    def initial_states(self) -> tuple:
        """B_0: agents 2k (k < t) in q0, everybody else in q1."""
        return tuple(self.q0 if a < 2 * self.t and a % 2 == 0 else self.q1 for a in range(self.n))

    @property
    def omissions(self) -> int:
        return count_omissions(self.run)


def _d1_side(model, d1_is_starter: bool):
    if model.two_way:
        return Omission.STARTER if d1_is_starter else Omission.REACTOR
    return Omission.OMISSIVE


def _resolve_tk(step, start, prefix, omissive, q1_after, rng, cap):
    """Run ``prefix + [omissive]`` then uniform steps until agent 1 shows ``q1_after``.

    Returns t_k and the executed two-agent run (length t_k, or the part of
    the prefix already containing the transition).
    """
    cfg = list(start)
    run = []

    def apply(st):
        s2, r2 = step(cfg[st.starter], cfg[st.reactor], st.omission)
        cfg[st.starter], cfg[st.reactor] = s2, r2
        run.append(st)
        return simulated(cfg[1]) == q1_after

    for st in list(prefix) + [omissive]:
        if apply(st):
            return len(run), run
    while len(run) < cap:
        s = int(rng.integers(2))
        if apply(RunStep(s, 1 - s)):
            return len(run), run
    raise CapExceeded(f"the q1 agent did not reach {q1_after} within {cap} steps")


def lemma1_attack(sim, spec, model, q0, q1, depth_cap: int = 64, tk_cap: int = 20000,
                  seed: int = 0) -> AttackPlan:
    """Build the run I* with t omissions over 2t+2 agents (t = FTT)."""
    m = get_model(model)
    if m.name not in LEMMA1_MODELS:
        raise ConfigError(
            f"the redirection needs the omission to be visible on one side only; "
            f"model {m.name} is not supported (use one of {sorted(LEMMA1_MODELS)})")
    if q0 == q1:
        raise ConfigError("q0 and q1 must differ")
    if not spec.is_symmetric_on(q0, q1):
        raise ConfigError(f"delta is not symmetric on ({q0}, {q1})")
    ftt = fastest_transition_time(sim, spec, m, (q0, q1), depth_cap)
    if ftt.exceeded:
        raise CapExceeded(f"fastest transition time exceeds the cap {depth_cap}")
    t = ftt.t
    if t == 0:
        raise ConfigError("the transition is trivial (t = 0); the construction needs t > 0")
    q1_after = spec.delta[(q0, q1)][1]
    base = ftt.run
    step = compile_step(m, sim.hooks(sim.check_model(m)))
    start = sim.initial((q0, q1))
    rng = np.random.default_rng([seed, 0x1E3A])
    d0, d1 = 0, 1

    prefixes, t_ks, blocks = [], [], []
    a2t, a2t1 = 2 * t, 2 * t + 1
    for k in range(t):
        pivot = base[k]
        d1_starts = pivot.starter == d1
        omissive = RunStep(pivot.starter, pivot.reactor, _d1_side(m, d1_starts))
        t_k, run_k = _resolve_tk(step, start, base[:k], omissive, q1_after, rng, tk_cap)
        prefixes.append(run_k)
        t_ks.append(t_k)

        names = {d0: 2 * k, d1: 2 * k + 1}

        def mapped(st):
            return RunStep(names[st.starter], names[st.reactor], st.omission)

        x, y = 2 * k, 2 * k + 1
        # step A: a_2k plays d0 against a_2t (who replays d1 of I)
        # step B: a_2k+1 plays d1 against the omission generator a_2t+1
        a_pair = (x, a2t) if not d1_starts else (a2t, x)
        b_pair = (y, a2t1) if d1_starts else (a2t1, y)
        if m.two_way:
            a_om = Omission.NONE
            b_om = Omission.STARTER if d1_starts else Omission.REACTOR
        elif d1_starts:
            # the loss site is the reactor, i.e. d0: the omission goes on step A
            a_om, b_om = Omission.OMISSIVE, Omission.NONE
        else:
            a_om, b_om = Omission.NONE, Omission.OMISSIVE
        block = [mapped(st) for st in base[:k]]
        block.append(RunStep(*a_pair, a_om))
        block.append(RunStep(*b_pair, b_om))
        block += [mapped(st) for st in run_k[k + 1:t_k]]
        blocks.append(block)

    plan = AttackPlan("omissive", m.name, q0, q1, q1_after, t, base, prefixes, t_ks, blocks)
    plan.run = [st for b in blocks for st in b]
    return plan


def theorem3_rewrite(model, plan: AttackPlan) -> AttackPlan:
    """Replace each block's redirected pair of steps by omission-free ones.

    Uses the same I, I_k and t_k as ``plan`` (which must have been built
    under ``model``).
    """
    m = get_model(model)
    if m.name not in THEOREM3_MODELS:
        raise ConfigError(f"the omission-free rewrite covers {sorted(THEOREM3_MODELS)}, not {m.name}")
    if plan.model != m.name:
        raise ConfigError(f"plan was built for model {plan.model}, not {m.name}")
    t = plan.t
    a2t, a2t1 = 2 * t, 2 * t + 1
    blocks = []
    for k, old in enumerate(plan.blocks):
        x, y = 2 * k, 2 * k + 1
        d0_starts = plan.base[k].starter == 0
        if m.name == "t1":
            new = [RunStep(x, a2t) if d0_starts else RunStep(a2t, x)]
        elif m.name == "i1":
            new = [RunStep(x, a2t)] if d0_starts else [RunStep(a2t, a2t1), RunStep(y, a2t1)]
        elif d0_starts:  # i2
            new = [RunStep(x, a2t), RunStep(y, a2t1)]
        else:
            new = [RunStep(a2t, a2t1), RunStep(x, a2t1), RunStep(y, a2t1)]
        blocks.append(old[:k] + new + old[k + 2:])
    out = AttackPlan("omission-free", m.name, plan.q0, plan.q1, plan.q1_after, t, plan.base,
                     plan.prefixes, plan.t_ks, blocks)
    out.run = [st for b in blocks for st in b]
    return out


@dataclass
class AttackReplay:
    transitioned: list  # agents that went from q1 to q1' at some step
    final_count: int  # agents showing q1' at the end
    q0_agents: int
    omissions: int
    trace: object = None

    @property
    def violated(self) -> bool:
        """More agents took the q1 -> q1' transition than there are q0 agents."""
        return len(self.transitioned) > self.q0_agents


def replay_plan(sim, model, plan: AttackPlan, blocks: int | None = None, record=False) -> AttackReplay:
    """Execute I* (or its first ``blocks`` blocks) from B_0 and count transitions."""
    run = plan.run if blocks is None else [st for b in plan.blocks[:blocks] for st in b]
    init = sim.initial(plan.initial_states())
    seen = set()
    q1, q1p = plan.q1, plan.q1_after

    def watch(k, st, cfg):
        for a in (st.starter, st.reactor):
            if simulated(cfg[a]) == q1p and a not in seen:
                seen.add(a)

    trace = execute(sim, model, init, run, record=record, observe=watch)
    final = trace.records[-1].post if trace.records else init
    start = plan.initial_states()
    transitioned = sorted(a for a in seen if start[a] == q1)
    return AttackReplay(transitioned, sum(simulated(a) == q1p for a in final),
                        start.count(plan.q0), count_omissions(run), trace if record else None)
