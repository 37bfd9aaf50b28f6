"""Simulator interface plus the trivial direct and identity simulators.

Agent states are immutable named tuples carrying the simulated state in
``state_P`` and two bookkeeping fields that protocol logic never reads:
``updates`` counts assignments of ``state_P`` through the simulated
transition function, and ``tag`` is the provenance of the latest one.  The
engine turns a change of ``updates`` into an event annotation.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

from ..core import ConfigError, ProtocolSpec
from ..models import OneWayHooks, TwoWayHooks, get_model


class Simulator:
    name = "abstract"
    models: frozenset = frozenset()

    def __init__(self, spec: ProtocolSpec):
        self.spec = spec
        self.delta = spec.delta

    def check_model(self, model):
        m = get_model(model)
        if m.name not in self.models:
            raise ConfigError(
                f"simulator {self.name} runs on {sorted(self.models)}, not {m.name}")
        return m

    def initial(self, states: Sequence[str]) -> tuple:
        raise NotImplementedError

    def hooks(self, model):
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    # serialization of agent states (JSON-compatible)
    def encode(self, agent):
        return _plain(agent._asdict())

    def decode(self, obj):
        raise NotImplementedError


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


def _tuple(x):
    if isinstance(x, list):
        return tuple(_tuple(v) for v in x)
    return x


class PlainAgent(NamedTuple):
    state_P: str
    updates: int = 0
    tag: tuple | None = None


class DirectSim(Simulator):
    """Runs the protocol itself under a two-way model (no simulation layer)."""

    name = "none"
    models = frozenset({"tw", "t1", "t2", "t3"})

    def initial(self, states):
        return tuple(PlainAgent(q) for q in states)

    def hooks(self, model):
        self.check_model(model)
        delta = self.delta

        def two_way(s, r):
            qs, qr = s.state_P, r.state_P
            ns, nr = delta[(qs, qr)]
            if (ns, nr) == (qs, qr):
                return s, r
            key = ("tw", qs, qr)
            return (PlainAgent(ns, s.updates + 1, ("s", key)),
                    PlainAgent(nr, r.updates + 1, ("r", key)))

        return TwoWayHooks(delta=two_way)

    def decode(self, obj):
        return PlainAgent(obj["state_P"], obj["updates"], _tuple(obj["tag"]))


class IdentitySim(Simulator):
    """Never changes anything; its transition time is infinite."""

    name = "identity"
    models = frozenset({"tw", "t1", "t2", "t3", "it", "io", "i1", "i2", "i3", "i4"})

    def initial(self, states):
        return tuple(PlainAgent(q) for q in states)

    def hooks(self, model):
        m = self.check_model(model)
        if m.two_way:
            return TwoWayHooks(delta=lambda s, r: (s, r))
        return OneWayHooks(g=lambda s: s, f=lambda s, r: r)

    def decode(self, obj):
        return PlainAgent(obj["state_P"], obj["updates"], _tuple(obj["tag"]))
