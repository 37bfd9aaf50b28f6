"""Events, matchings and derived executions."""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Any, NamedTuple

from ..core import IntegrityError, ProtocolSpec, StructuralError, Trace, simulated


class EventRef(NamedTuple):
    step: int
    agent: int
    before: str  # simulated state in C^- (before the step)
    after: str  # simulated state in C^+ (after the step)
    tag: Any = None


@dataclass
class EventSeq:
    events: list = field(default_factory=list)
    length: int = 0  # number of steps of the analysed trace

    def __len__(self):
        return len(self.events)

    def __getitem__(self, i):
        return self.events[i]

    def __iter__(self):
        return iter(self.events)

    def pairs(self):
        """(step, agent) view of the sequence."""
        return [(e.step, e.agent) for e in self.events]

    def timeline(self, initial):
        """Sparse projected timeline ``[(k, C_k), ...]`` for the pairing checker."""
        cfg = [simulated(a) for a in initial]
        points = [(0, tuple(cfg))]
        i, ev = 0, self.events
        while i < len(ev):
            k = ev[i].step
            while i < len(ev) and ev[i].step == k:
                cfg[ev[i].agent] = ev[i].after
                i += 1
            points.append((k + 1, tuple(cfg)))
        return points


def extract_events(trace: Trace) -> EventSeq:
    """Collect the simulator's event annotations and check them against the trace.

    Every step at which some agent's simulated state changed must carry an
    annotation for that agent; annotations may also mark steps where the
    simulated transition happened to be trivial.
    """
    out = EventSeq(length=len(trace.records))
    prev = trace.initial
    n = len(prev)
    for rec in trace.records:
        post = rec.post
        if len(rec.events) > 2:
            raise IntegrityError(f"step {rec.index}: {len(rec.events)} events (at most 2 allowed)")
        marked = set()
        for ev in rec.events:
            a = ev.agent
            if a not in (rec.step.starter, rec.step.reactor):
                raise IntegrityError(f"step {rec.index}: event on agent {a} which did not interact")
            if a in marked:
                raise IntegrityError(f"step {rec.index}: two events on agent {a}")
            marked.add(a)
            out.events.append(EventRef(rec.index, a, simulated(prev[a]), simulated(post[a]), ev.tag))
        for a in range(n):
            x, y = prev[a], post[a]
            if x is not y and a not in marked and simulated(x) != simulated(y):
                raise IntegrityError(
                    f"step {rec.index}: agent {a} changed simulated state "
                    f"{simulated(x)} -> {simulated(y)} without an event")
        prev = post
    return out


@dataclass
class Matching:
    """Ordered pairs ``(x, y)`` of event positions.

    ``x`` takes the starter side of the simulated interaction (first
    component of delta) and ``y`` the reactor side.  ``pending`` lists the
    positions left unmatched at the end of the analysed prefix.  ``idle``
    lists events that did not change the simulated state and were left out;
    identity transitions do not move the simulated configuration.
    """

    pairs: list = field(default_factory=list)
    pending: list = field(default_factory=list)
    idle: list = field(default_factory=list)


def construct_matching(events: EventSeq) -> Matching:
    """Pair events through their provenance tags.

    A tag is ``(role, key)`` with role ``"s"`` or ``"r"``; an event is paired
    with the oldest unmatched event of the opposite role and the same key,
    on a different agent, emitted after the newcomer's agent last changed.
    The last condition keeps every agent's simulated transitions in their
    real order once pairs are sorted by their earlier event.  Pairs in which
    neither side changes state are set aside as idle, as are unmatched
    events of that kind.
    """
    waiting: dict = defaultdict(deque)  # (role, key) -> positions
    last_step: dict = {}
    pairs = []
    for pos, ev in enumerate(events):
        tag = ev.tag
        if not (isinstance(tag, tuple) and len(tag) == 2 and tag[0] in ("s", "r")):
            raise StructuralError(f"event {pos} has no usable provenance tag: {tag!r}")
        role, key = tag
        other = ("r" if role == "s" else "s", key)
        queue = waiting.get(other)
        chosen = None
        if queue:
            floor = last_step.get(ev.agent, -1)
            for cand in queue:
                e = events[cand]
                if e.agent != ev.agent and e.step > floor:
                    chosen = cand
                    break
        if chosen is None:
            waiting[tag].append(pos)
        else:
            queue.remove(chosen)
            pairs.append((pos, chosen) if role == "s" else (chosen, pos))
        if ev.before != ev.after:
            last_step[ev.agent] = ev.step

    def still(p):
        return events[p].before == events[p].after

    idle = [p for x, y in pairs if still(x) and still(y) for p in (x, y)]
    pairs = [(x, y) for x, y in pairs if not (still(x) and still(y))]
    pending = []
    for p in sorted(p for q in waiting.values() for p in q):
        (idle if still(p) else pending).append(p)
    return Matching(pairs, pending, sorted(idle))


@dataclass
class MatchReport:
    accepted: bool
    witness: Any = None
    reason: str = ""
    pending: int = 0


def verify_matching(trace: Trace, events: EventSeq, m: Matching, spec: ProtocolSpec) -> MatchReport:
    """Annotation-independent check of a matching.

    Every pair must involve two different agents and satisfy
    ``delta(before_x, before_y) == (after_x, after_y)``; pairs, the pending
    tail and the idle events must partition the event positions, and idle
    events must leave the simulated state unchanged.
    """
    size = len(events)
    if events.events and events.events[-1].step >= len(trace.records):
        raise StructuralError("events refer to steps beyond the end of the trace")
    seen = set()
    for x, y in m.pairs:
        for p in (x, y):
            if not (isinstance(p, int) and 0 <= p < size):
                raise StructuralError(f"matching refers to event {p!r}; only {size} events")
    for p in list(m.pending) + list(m.idle):
        if not (isinstance(p, int) and 0 <= p < size):
            raise StructuralError(f"pending list refers to event {p!r}; only {size} events")
    for x, y in m.pairs:
        ex, ey = events[x], events[y]
        if x == y or ex.agent == ey.agent:
            return MatchReport(False, (x, y), "pair uses a single agent")
        if x in seen or y in seen:
            return MatchReport(False, (x, y), "event used twice")
        seen.update((x, y))
        if spec.delta[(ex.before, ey.before)] != (ex.after, ey.after):
            return MatchReport(
                False, (x, y),
                f"delta({ex.before}, {ey.before}) = {spec.delta[(ex.before, ey.before)]} "
                f"but the events show ({ex.after}, {ey.after})")
    for p in m.pending:
        if p in seen:
            return MatchReport(False, p, "pending event is also matched")
        seen.add(p)
    for p in m.idle:
        if p in seen:
            return MatchReport(False, p, "idle event is also matched or pending")
        if events[p].before != events[p].after:
            return MatchReport(False, p, "event changes the simulated state but is marked idle")
        seen.add(p)
    if len(seen) != size:
        missing = min(set(range(size)) - seen)
        return MatchReport(False, missing, "event neither matched nor pending")
    return MatchReport(True, pending=len(m.pending))


@dataclass
class DerivedExecution:
    run: list  # (starter agent, reactor agent) per simulated interaction
    configs: list  # projected configurations, configs[0] is the initial one
    pair_order: list  # the matching pairs in derived order
    consistent_with_trace: bool = True  # final derived configuration equals the trace's

    def timeline(self):
        return list(enumerate(self.configs))


def derive_execution(trace: Trace, events: EventSeq, m: Matching,
                     spec: ProtocolSpec) -> DerivedExecution:
    """Sort pairs by their earlier event and replay delta on the projections.

    Each derived interaction must find its two agents in the simulated
    states the trace shows right before their events; otherwise the
    matching does not describe an execution of ``spec``.
    """
    order = sorted(m.pairs, key=lambda p: (min(events[p[0]].step, events[p[1]].step), min(p)))
    cfg = [simulated(a) for a in trace.initial]
    for i, q in enumerate(cfg):
        if q not in spec.states:
            raise StructuralError(f"agent {i} starts in {q!r}, not a state of {spec.name}")
    configs = [tuple(cfg)]
    run = []
    for x, y in order:
        ex, ey = events[x], events[y]
        if (cfg[ex.agent], cfg[ey.agent]) != (ex.before, ey.before):
            raise IntegrityError(
                f"derived interaction ({ex.agent}, {ey.agent}) finds states "
                f"({cfg[ex.agent]}, {cfg[ey.agent]}), events expect ({ex.before}, {ey.before})")
        cfg[ex.agent], cfg[ey.agent] = spec.delta[(ex.before, ey.before)]
        run.append((ex.agent, ey.agent))
        configs.append(tuple(cfg))
    final = tuple(simulated(a) for a in (trace.records[-1].post if trace.records else trace.initial))
    pending_agents = {events[p].agent for p in m.pending}
    consistent = all(cfg[a] == final[a] for a in range(len(cfg)) if a not in pending_agents)
    return DerivedExecution(run, configs, order, consistent)
