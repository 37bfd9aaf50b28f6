"""Deliberately naive simulators used to exercise the attack constructions.

``EagerSim`` has no locking at all: a reactor applies its half of a
simulated interaction as soon as it reads an idle agent, and any agent in
the matching state may later claim the other half.  Lost messages only
delay it, so two-agent systems always resolve even under undetected
omissions, which is exactly what the counterexample runs exploit.

``GracefulSim`` wraps another simulator and freezes every agent that has
detected ``threshold`` omissions.
"""

from __future__ import annotations

from typing import NamedTuple

from ..models import MODELS, OneWayHooks, TwoWayHooks
from .base import Simulator, _tuple


class EagerAgent(NamedTuple):
    state_P: str
    owe: tuple | None = None  # (q_s, q_r) whose reactor half this agent applied
    ack: tuple | None = None  # (q_s, q_r) whose starter half this agent applied
    updates: int = 0
    tag: tuple | None = None


def eager_observe(me: EagerAgent, other: EagerAgent, delta) -> EagerAgent:
    if me.owe is not None:
        return me._replace(owe=None) if other.ack == me.owe else me
    if me.ack is not None:
        return me._replace(ack=None) if other.owe != me.ack else me
    if other.ack is None:
        if other.owe is not None:
            qs, qr = other.owe
            if qs != me.state_P:
                return me
            return EagerAgent(delta[(qs, qr)][0], None, other.owe, me.updates + 1,
                              ("s", ("eager", qs, qr)))
        qs, qr = other.state_P, me.state_P
        return EagerAgent(delta[(qs, qr)][1], (qs, qr), None, me.updates + 1,
                          ("r", ("eager", qs, qr)))
    return me


class EagerSim(Simulator):
    name = "eager"
    models = frozenset(MODELS)

    def initial(self, states):
        return tuple(EagerAgent(q) for q in states)

    def hooks(self, model):
        m = self.check_model(model)
        delta = self.delta
        if m.two_way:
            return TwoWayHooks(delta=lambda s, r: (s, eager_observe(r, s, delta)))
        return OneWayHooks(g=lambda s: s, f=lambda s, r: eager_observe(r, s, delta))

    def decode(self, obj):
        return EagerAgent(obj["state_P"], _tuple(obj["owe"]), _tuple(obj["ack"]),
                          obj["updates"], _tuple(obj["tag"]))


class GracefulAgent(NamedTuple):
    inner: tuple
    seen: int = 0
    halted: bool = False

    @property
    def state_P(self):
        return self.inner.state_P

    @property
    def updates(self):
        return self.inner.updates

    @property
    def tag(self):
        return self.inner.tag


class GracefulSim(Simulator):
    """Stops simulating at an agent once it has detected ``threshold`` omissions."""

    name = "graceful"

    def __init__(self, inner: Simulator, threshold: int):
        super().__init__(inner.spec)
        self.inner = inner
        self.threshold = threshold
        self.models = inner.models

    def params(self):
        return {"inner": self.inner.name, "threshold": self.threshold, **self.inner.params()}

    def initial(self, states):
        return tuple(GracefulAgent(a) for a in self.inner.initial(states))

    def hooks(self, model):
        m = self.check_model(model)
        ih = self.inner.hooks(m)
        threshold = self.threshold

        def detect(hook):
            def wrapped(a):
                if a.halted:
                    return a
                seen = a.seen + 1
                if seen >= threshold:
                    return a._replace(seen=seen, halted=True)
                return GracefulAgent(hook(a.inner), seen)
            return wrapped

        def unary(fn):
            return lambda a: a if a.halted else a._replace(inner=fn(a.inner))

        if m.two_way:
            def delta(s, r):
                if s.halted or r.halted:
                    return s, r
                s2, r2 = ih.delta(s.inner, r.inner)
                return s._replace(inner=s2), r._replace(inner=r2)

            return TwoWayHooks(delta=delta, o=detect(ih.o), h=detect(ih.h))

        def f(s, r):
            if s.halted or r.halted:
                return r
            return r._replace(inner=ih.f(s.inner, r.inner))

        return OneWayHooks(g=unary(ih.g), f=f, o=detect(ih.o), h=detect(ih.h))

    def encode(self, agent):
        return {"inner": self.inner.encode(agent.inner), "seen": agent.seen, "halted": agent.halted}

    def decode(self, obj):
        return GracefulAgent(self.inner.decode(obj["inner"]), obj["seen"], obj["halted"])

