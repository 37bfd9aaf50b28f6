"""Token/joker simulator for one-way models with a known omission bound ``o``.

Each simulated state travels as ``o + 1`` numbered tokens; a reactor that
detects an omission enqueues a joker which may later stand in for any
missing token of a run.
"""

from __future__ import annotations

from typing import NamedTuple

from ..core import ConfigError
from ..models import OneWayHooks
from .base import Simulator

AVAILABLE = "available"
PENDING = "pending"


class Token(NamedTuple):
    kind: str  # "run", "chg" or "J"
    q: object = None  # state symbol, or (q, q') for state-change tokens
    i: int = 0

    def __str__(self):
        if self.kind == "J":
            return "J"
        if self.kind == "chg":
            return f"chg:{self.q[0]}:{self.q[1]}:{self.i}"
        return f"{self.q}:{self.i}"

    @classmethod
    def parse(cls, text: str) -> "Token":
        if text == "J":
            return JOKER
        parts = text.split(":")
        if parts[0] == "chg" and len(parts) == 4:
            return cls("chg", (parts[1], parts[2]), int(parts[3]))
        if len(parts) == 2:
            return cls("run", parts[0], int(parts[1]))
        raise ValueError(f"bad token {text!r}")


JOKER = Token("J")
OMISSION = object()  # delivered to a reactor that detected an omission


class KnOAgent(NamedTuple):
    state_P: str
    sim: str = AVAILABLE
    sending: tuple = ()
    jokers: tuple = ()  # sorted multiset of tokens replaced by jokers
    updates: int = 0
    tag: tuple | None = None


def full_run(kind, q, o):
    return tuple(Token(kind, q, i) for i in range(1, o + 2))


def kno_starter_step(agent: KnOAgent, o: int):
    """Starter side: maybe inject a run of the own state, then pop the head token."""
    queue, sim = agent.sending, agent.sim
    if sim == AVAILABLE and not queue:
        sim = PENDING
        queue = full_run("run", agent.state_P, o)
    if not queue:
        return agent, None
    return agent._replace(sim=sim, sending=queue[1:]), queue[0]


def _find_run(queue, kind, o, state=None, first=None):
    """Oldest complete run of ``kind`` in ``queue``, using as few jokers as possible.

    Returns ``(q, positions_to_remove, substituted_tokens)`` or ``None``.
    """
    n_jokers = 0
    seen = {}
    for pos, t in enumerate(queue):
        if t.kind == "J":
            n_jokers += 1
        elif t.kind == kind and (state is None or t.q == state) and (first is None or t.q[0] == first):
            seen.setdefault(t.q, {}).setdefault(t.i, pos)
    best = None
    for q, idx in seen.items():
        missing = o + 1 - len(idx)
        if missing <= n_jokers:
            key = (min(idx.values()), missing)
            if best is None or key < best[0]:
                best = (key, q, idx)
    if best is None:
        return None
    _, q, idx = best
    missing = [i for i in range(1, o + 2) if i not in idx]
    remove = set(idx.values())
    if missing:
        jpos = [p for p, t in enumerate(queue) if t.kind == "J"][:len(missing)]
        remove.update(jpos)
    return q, remove, tuple(Token(kind, q, i) for i in missing)


def kno_reactor_step(agent: KnOAgent, received, delta, o: int) -> KnOAgent:
    """Reactor side: enqueue what was received, then the preliminary check and the core step."""
    queue = list(agent.sending)
    jokers = list(agent.jokers)
    if received is OMISSION:
        queue.append(JOKER)
    elif received is not None:
        if received.kind != "J" and received in jokers:
            jokers.remove(received)
            queue.append(JOKER)
        else:
            queue.append(received)
    state, sim, updates, tag = agent.state_P, agent.sim, agent.updates, agent.tag

    def take(found):
        q, remove, subs = found
        queue[:] = [t for p, t in enumerate(queue) if p not in remove]
        jokers.extend(subs)
        return q

    if sim == PENDING:
        found = _find_run(queue, "run", o, state=state)
        if found is not None:
            take(found)
            sim = AVAILABLE
    if sim == AVAILABLE:
        found = _find_run(queue, "run", o)
        if found is not None:
            q = take(found)
            old = state
            state = delta[(q, old)][1]
            queue.extend(full_run("chg", (q, old), o))
            updates += 1
            tag = ("r", ("kno", q, old))
    else:
        found = _find_run(queue, "chg", o, first=state)
        if found is not None:
            qs, qr = take(found)
            state = delta[(qs, qr)][0]
            sim = AVAILABLE
            updates += 1
            tag = ("s", ("kno", qs, qr))
    return KnOAgent(state, sim, tuple(queue), tuple(sorted(jokers)), updates, tag)


class KnOSim(Simulator):
    """Simulator for IT (o = 0), I3 (reactor detects) and I4 (starter detects)."""

    name = "kno"
    models = frozenset({"it", "i3", "i4"})

    def __init__(self, spec, o: int = 0):
        super().__init__(spec)
        if o < 0:
            raise ConfigError("omission bound o must be non-negative")
        self.o = o

    def params(self):
        return {"o": self.o}

    def initial(self, states):
        return tuple(KnOAgent(q) for q in states)

    def hooks(self, model):
        m = self.check_model(model)
        o, delta = self.o, self.delta

        def g(s):
            return kno_starter_step(s, o)[0]

        def f(s, r):
            return kno_reactor_step(r, kno_starter_step(s, o)[1], delta, o)

        if m.name == "i4":
            def o_hook(s):
                s2 = kno_starter_step(s, o)[0]
                return s2._replace(sending=s2.sending + (JOKER,))

            return OneWayHooks(g=g, f=f, o=o_hook)
        return OneWayHooks(g=g, f=f, h=lambda r: kno_reactor_step(r, OMISSION, delta, o))

    def encode(self, agent):
        return {
            "state_P": agent.state_P,
            "sim": agent.sim,
            "sending": [str(t) for t in agent.sending],
            "jokers": [str(t) for t in agent.jokers],
            "updates": agent.updates,
            "tag": _tag_out(agent.tag),
        }

    def decode(self, obj):
        return KnOAgent(
            obj["state_P"], obj["sim"],
            tuple(Token.parse(t) for t in obj["sending"]),
            tuple(Token.parse(t) for t in obj["jokers"]),
            obj["updates"], _tag_in(obj["tag"]),
        )


def _tag_out(tag):
    return None if tag is None else [tag[0], list(tag[1])]


def _tag_in(obj):
    if obj is None:
        return None
    return (obj[0], tuple(obj[1]))


def token_counts(config) -> tuple[int, int]:
    """(jokers, non-joker tokens) in circulation over all sending queues."""
    jokers = tokens = 0
    for a in config:
        for t in a.sending:
            if t.kind == "J":
                jokers += 1
            else:
                tokens += 1
    return jokers, tokens
