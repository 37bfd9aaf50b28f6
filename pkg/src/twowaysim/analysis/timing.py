"""Transition times of two-agent simulations."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..core import Omission, RunStep, StructuralError, Trace, project, simulated
from ..models import compile_step, get_model


def transition_time(trace: Trace, spec, initial=None) -> int | None:
    """Smallest t such that after t steps both agents show delta(C0) simulated.

    ``initial`` defaults to the trace's own initial configuration.  Returns
    ``None`` when the trace ends before that happens.
    """
    if trace.n != 2:
        raise StructuralError(f"transition time is defined for two agents, trace has {trace.n}")
    c0 = project(initial if initial is not None else trace.initial, spec)
    target = spec.delta[c0]
    for t, cfg in enumerate(trace.configs()):
        if (simulated(cfg[0]), simulated(cfg[1])) == target:
            return t
    return None


@dataclass
class FTTResult:
    t: int | None
    run: list = field(default_factory=list)  # an optimal omission-free run
    exceeded: bool = False
    explored: int = 0  # distinct configurations visited

    @property
    def found(self) -> bool:
        return self.t is not None


def fastest_transition_time(sim, spec, model, states, depth_cap: int = 64) -> FTTResult:
    """Breadth-first search over omission-free two-agent runs.

    ``states`` is the pair of initial simulated states.  Configurations are
    deduplicated, so the first level that reaches ``delta(states)`` gives
    the minimum.  If no run of length ``depth_cap`` or less gets there the
    result says so via ``exceeded``.
    """
    m = get_model(model)
    step = compile_step(m, sim.hooks(sim.check_model(m)))
    start = sim.initial(tuple(states))
    if len(start) != 2:
        raise StructuralError("fastest transition time needs exactly two agents")
    target = spec.delta[tuple(states)]

    def done(cfg):
        return (cfg[0].state_P, cfg[1].state_P) == target

    parent = {start: None}
    if done(start):
        return FTTResult(0, [], False, 1)
    level = [start]
    for depth in range(1, depth_cap + 1):
        nxt = []
        for cfg in level:
            for s_i, r_i in ((0, 1), (1, 0)):
                s2, r2 = step(cfg[s_i], cfg[r_i], Omission.NONE)
                new = [None, None]
                new[s_i], new[r_i] = s2, r2
                new = tuple(new)
                if new in parent:
                    continue
                parent[new] = (cfg, RunStep(s_i, r_i))
                if done(new):
                    return FTTResult(depth, _path(parent, new), False, len(parent))
                nxt.append(new)
        if not nxt:
            break
        level = nxt
    return FTTResult(None, [], True, len(parent))


def _path(parent, cfg):
    out = []
    while parent[cfg] is not None:
        cfg, st = parent[cfg]
        out.append(st)
    return out[::-1]
