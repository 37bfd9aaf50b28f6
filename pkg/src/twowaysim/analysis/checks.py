"""Glue between traces and the checkers, plus per-simulator invariants."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..core import ConfigError, Trace, simulated
from ..protocols import BOT, C, CS, P, PairingInstance, PairingReport, check_pairing_points
from .events import (DerivedExecution, EventSeq, Matching, MatchReport, construct_matching,
                     derive_execution, extract_events, verify_matching)


def pairing_instance_for(trace: Trace, spec) -> PairingInstance:
    """Read the consumer/producer split off the initial configuration."""
    if not {C, P} <= set(spec.states) or not set(spec.states) <= {C, P, CS, BOT}:
        raise ConfigError(f"protocol {spec.name} is not the pairing protocol")
    init = [simulated(a) for a in trace.initial]
    return PairingInstance(init.count(C), init.count(P))


@dataclass
class SimulationReport:
    events: EventSeq
    matching: Matching
    match: MatchReport
    derived: DerivedExecution | None = None
    pairing_trace: PairingReport | None = None
    pairing_derived: PairingReport | None = None
    errors: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        if self.errors or not self.match.accepted or self.derived is None:
            return False
        if not self.derived.consistent_with_trace:
            return False
        for rep in (self.pairing_trace, self.pairing_derived):
            if rep is not None and not rep.ok:
                return False
        return True


def check_simulation(trace: Trace, spec, pairing: bool = False, horizon: int | None = None,
                     window: float = 0.1) -> SimulationReport:
    """extract events -> construct matching -> verify -> derive -> (optionally) Pair."""
    events = extract_events(trace)
    m = construct_matching(events)
    rep = SimulationReport(events, m, verify_matching(trace, events, m, spec))
    if not rep.match.accepted:
        return rep
    rep.derived = derive_execution(trace, events, m, spec)
    if pairing:
        inst = pairing_instance_for(trace, spec)
        rep.pairing_trace = check_pairing_points(events.timeline(trace.initial), len(trace) + 1,
                                                 inst, horizon, window)
        # the derived execution has no clock; only its final count matters
        rep.pairing_derived = check_pairing_points(rep.derived.timeline(), len(rep.derived.configs),
                                                   inst, None, 0.0)
    return rep


@dataclass
class KnOStats:
    max_jokers: int = 0
    max_tokens: int = 0
    # tokens minus entries noted in Jokers multisets: a noted token that is
    # still travelling has already been replaced by a spent joker
    max_net_tokens: int = 0
    joker_violation: int | None = None  # first step exceeding the bound
    token_violation: int | None = None
    net_token_violation: int | None = None


def kno_bounds(trace: Trace, o: int) -> KnOStats:
    """Jokers in circulation never exceed o, tokens never exceed n(o+1)."""
    bound = trace.n * (o + 1)
    st = KnOStats()
    counts = [_queue_counts(a) for a in trace.initial]
    jokers = sum(c[0] for c in counts)
    tokens = sum(c[1] for c in counts)
    noted = sum(c[2] for c in counts)
    for rec in trace.records:
        for a in {rec.step.starter, rec.step.reactor}:
            old = counts[a]
            new = counts[a] = _queue_counts(rec.post[a])
            jokers += new[0] - old[0]
            tokens += new[1] - old[1]
            noted += new[2] - old[2]
        st.max_jokers = max(st.max_jokers, jokers)
        st.max_tokens = max(st.max_tokens, tokens)
        st.max_net_tokens = max(st.max_net_tokens, tokens - noted)
        if jokers > o and st.joker_violation is None:
            st.joker_violation = rec.index
        if tokens > bound and st.token_violation is None:
            st.token_violation = rec.index
        if tokens - noted > bound and st.net_token_violation is None:
            st.net_token_violation = rec.index
    return st


def _queue_counts(agent):
    inner = getattr(agent, "inner", agent)
    j = sum(1 for t in inner.sending if t.kind == "J")
    return j, len(inner.sending) - j, len(inner.jokers)


@dataclass
class NamingStats:
    violations: list = field(default_factory=list)  # (step, reason)
    stable_from: int | None = None  # first configuration index from which ids are final
    unique: bool = False

    @property
    def ok(self) -> bool:
        return not self.violations


def naming_checks(trace: Trace, n: int) -> NamingStats:
    """The maximum of max_id rises only on a shared my_id, and at M = n ids are distinct.

    Also reports from which configuration on every agent holds its final,
    pairwise distinct my_id and has started the inner simulator.
    """
    out = NamingStats()
    prev = trace.initial
    top = max(a.max_id for a in prev)
    last_change = 0
    for rec in trace.records:
        post = rec.post
        s, r = rec.step.starter, rec.step.reactor
        new_top = max(top, post[r].max_id)
        if new_top > top and prev[s].my_id != prev[r].my_id:
            out.violations.append((rec.index, f"max_id rose to {new_top} without a shared my_id"))
        top = new_top
        if top == n:
            ids = [a.my_id for a in post]
            if len(set(ids)) != len(ids):
                out.violations.append((rec.index, f"max_id = n but my_id values {ids} repeat"))
        if (post[r].my_id, post[r].started) != (prev[r].my_id, prev[r].started):
            last_change = rec.index + 1
        prev = post
    ids = [a.my_id for a in prev]
    out.unique = len(set(ids)) == len(ids) and all(a.started for a in prev)
    out.stable_from = last_change if out.unique else None
    return out


def pending_locks(trace: Trace) -> int:
    """Locked S_ID agents at the end of the trace."""
    final = trace.records[-1].post if trace.records else trace.initial
    return sum(1 for a in final if getattr(getattr(a, "inner", a), "sim", None) == "locked")
