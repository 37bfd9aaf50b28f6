"""Executes a run of interactions through a simulator under a model."""

from __future__ import annotations

from typing import Callable, Iterable

from ..core import Event, RunStep, StructuralError, Trace, TraceRecord
from ..models import compile_step, get_model


def execute(sim, model, initial: tuple, steps: Iterable[RunStep], horizon: int | None = None,
            header: dict | None = None, record: bool = True,
            observe: Callable | None = None) -> Trace:
    """Run ``steps`` (at most ``horizon`` of them) from ``initial``.

    With ``record=False`` only the final configuration is kept (as the single
    record's post configuration) which is enough for reachability searches.
    ``observe(k, step, config)`` is called after every step.
    """
    m = sim.check_model(model)
    step_fn = compile_step(m, sim.hooks(m))
    config = list(initial)
    n = len(config)
    trace = Trace(initial=tuple(initial), header=dict(header or {}))
    records = trace.records
    k = 0
    last = None
    for step in steps:
        if horizon is not None and k >= horizon:
            break
        s_i, r_i, om = step
        if not (0 <= s_i < n and 0 <= r_i < n) or s_i == r_i:
            raise StructuralError(f"step {k}: bad agent pair ({s_i}, {r_i}) for n={n}")
        s, r = config[s_i], config[r_i]
        s2, r2 = step_fn(s, r, om)
        config[s_i] = s2
        config[r_i] = r2
        events = ()
        if s2 is not s and s2.updates != s.updates:
            events = (Event(s_i, s2.tag),)
        if r2 is not r and r2.updates != r.updates:
            events += (Event(r_i, r2.tag),)
        if record:
            records.append(TraceRecord(k, step, tuple(config), events))
        else:
            last = (step, events)
        if observe is not None:
            observe(k, step, config)
        k += 1
    if not record and last is not None:
        records.append(TraceRecord(k - 1, last[0], tuple(config), last[1]))
    trace.header.setdefault("model", m.name)
    trace.header.setdefault("simulator", sim.name)
    trace.header.setdefault("protocol", sim.spec.name)
    return trace


def replay(trace: Trace, sim, model=None) -> list:
    """Re-execute every recorded step from its predecessor configuration.

    Returns the list of step indices whose recorded post configuration (or
    event annotations) differ from the re-executed ones.
    """
    m = get_model(model or trace.header.get("model"))
    step_fn = compile_step(m, sim.hooks(sim.check_model(m)))
    diffs = []
    prev = trace.initial
    for rec in trace.records:
        s_i, r_i, om = rec.step
        config = list(prev)
        s, r = config[s_i], config[r_i]
        s2, r2 = step_fn(s, r, om)
        config[s_i], config[r_i] = s2, r2
        events = ()
        if s2.updates != s.updates:
            events = (Event(s_i, s2.tag),)
        if r2.updates != r.updates:
            events += (Event(r_i, r2.tag),)
        if tuple(config) != rec.post or tuple(events) != tuple(rec.events):
            diffs.append(rec.index)
        prev = rec.post
    return diffs
