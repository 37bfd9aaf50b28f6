"""Locking simulator for the IO model with unique identifiers, and the
naming layer that manufactures those identifiers from knowledge of n."""

from __future__ import annotations

from typing import NamedTuple

from ..core import ConfigError, IntegrityError
from ..models import OneWayHooks
from .base import Simulator, _tuple

AVAILABLE, PAIRING, LOCKED = "available", "pairing", "locked"


class IDAgent(NamedTuple):
    my_id: int
    state_P: str
    id_other: int | None = None
    state_other: str | None = None
    sim: str = AVAILABLE
    updates: int = 0
    tag: tuple | None = None


def sid_reactor_step(r: IDAgent, s: IDAgent, delta) -> IDAgent:
    """The reactor's update after observing starter ``s``; first matching branch wins."""
    if s.my_id == r.my_id:
        raise IntegrityError(f"two agents share id {r.my_id}")
    if r.sim == AVAILABLE and s.sim == AVAILABLE:
        return r._replace(sim=PAIRING, id_other=s.my_id, state_other=s.state_P)
    if (r.sim == AVAILABLE and s.sim == PAIRING and s.id_other == r.my_id
            and s.state_other == r.state_P):
        return IDAgent(r.my_id, delta[(r.state_P, s.state_P)][0], s.my_id, s.state_P, LOCKED,
                       r.updates + 1, ("s", ("sid", r.my_id, s.my_id)))
    if (r.sim == PAIRING and r.id_other == s.my_id and s.id_other == r.my_id
            and s.sim == LOCKED):
        # The partner already moved on to its new state; the pre-lock state
        # recorded at pairing time is the one the simulated interaction used.
        new = delta[(r.state_other, r.state_P)][1]
        return IDAgent(r.my_id, new, None, None, AVAILABLE,
                       r.updates + 1, ("r", ("sid", s.my_id, r.my_id)))
    if r.id_other == s.my_id and s.id_other != r.my_id:
        return r._replace(sim=AVAILABLE, id_other=None, state_other=None)
    return r


class SIDSim(Simulator):
    name = "sid"
    models = frozenset({"io"})

    def __init__(self, spec, ids=None):
        super().__init__(spec)
        self.ids = None if ids is None else list(ids)

    def params(self):
        return {} if self.ids is None else {"ids": self.ids}

    def initial(self, states):
        ids = self.ids if self.ids is not None else list(range(1, len(states) + 1))
        if len(ids) != len(states):
            raise ConfigError(f"{len(ids)} ids for {len(states)} agents")
        if len(set(ids)) != len(ids):
            raise ConfigError("ids must be unique")
        return tuple(IDAgent(i, q) for i, q in zip(ids, states))

    def hooks(self, model):
        self.check_model(model)
        delta = self.delta
        return OneWayHooks(g=lambda s: s, f=lambda s, r: sid_reactor_step(r, s, delta))

    def decode(self, obj):
        obj = dict(obj)
        obj["tag"] = _tuple(obj["tag"])
        return IDAgent(**obj)


class NamingAgent(NamedTuple):
    my_id: int
    max_id: int
    started: bool
    inner: IDAgent  # my_id of the inner agent is meaningless until started

    @property
    def state_P(self):
        return self.inner.state_P

    @property
    def updates(self):
        return self.inner.updates

    @property
    def tag(self):
        return self.inner.tag


def naming_step(r: NamingAgent, s: NamingAgent, n: int) -> NamingAgent:
    """Reactor-side naming update; starts the inner simulator once max_id reaches n."""
    if r.started:
        return r
    my_id = r.my_id + 1 if s.my_id == r.my_id else r.my_id
    max_id = max(my_id, r.max_id, s.my_id, s.max_id)
    if max_id > n:
        raise IntegrityError(f"max_id {max_id} exceeds the known population size {n}")
    if max_id == n:
        return NamingAgent(my_id, max_id, True, r.inner._replace(my_id=my_id))
    return NamingAgent(my_id, max_id, False, r.inner)


class NamingSim(Simulator):
    """Naming with knowledge of n, composed with the locking simulator."""

    name = "naming"
    models = frozenset({"io"})

    def __init__(self, spec, n: int):
        super().__init__(spec)
        if n < 2:
            raise ConfigError("naming needs n >= 2")
        self.n = n

    def params(self):
        return {"n": self.n}

    def initial(self, states):
        if len(states) != self.n:
            raise ConfigError(f"naming configured for n={self.n} but {len(states)} agents given")
        return tuple(NamingAgent(1, 1, False, IDAgent(0, q)) for q in states)

    def hooks(self, model):
        self.check_model(model)
        delta, n = self.delta, self.n

        def f(s, r):
            if not r.started:
                return naming_step(r, s, n)
            if not s.started:
                return r
            inner = sid_reactor_step(r.inner, s.inner, delta)
            return r if inner is r.inner else r._replace(inner=inner)

        return OneWayHooks(g=lambda s: s, f=f)

    def encode(self, agent):
        return {"my_id": agent.my_id, "max_id": agent.max_id, "started": agent.started,
                "inner": SIDSim.encode(self, agent.inner)}

    def decode(self, obj):
        return NamingAgent(obj["my_id"], obj["max_id"], obj["started"],
                           SIDSim.decode(self, obj["inner"]))
