"""The ten interaction models and the one-interaction update rule.

Two-way protocols supply ``delta(s, r) -> (s', r')`` plus detection hooks
``o`` (starter) and ``h`` (reactor).  One-way protocols supply the
proximity function ``g``, the reactor update ``f`` and the hooks ``o``/``h``.
Whatever a model forces to the identity is never called.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .core import ModelError, Omission

_SIDED = frozenset({Omission.NONE, Omission.STARTER, Omission.REACTOR, Omission.BOTH})
_ONEWAY = frozenset({Omission.NONE, Omission.OMISSIVE})
_CLEAN = frozenset({Omission.NONE})


def _identity(x):
    return x


@dataclass(frozen=True)
class TwoWayHooks:
    delta: Callable
    o: Callable = _identity
    h: Callable = _identity


@dataclass(frozen=True)
class OneWayHooks:
    g: Callable
    f: Callable
    o: Callable = _identity
    h: Callable = _identity


@dataclass(frozen=True)
class ModelSpec:
    """``starter_om``/``reactor_om`` name the function each side applies on
    an omission: ``"o"``, ``"h"``, ``"g"`` or ``"id"``."""

    name: str
    two_way: bool
    descriptors: frozenset
    starter_om: str = "id"
    reactor_om: str = "id"
    proximity: bool = True  # one-way only: starter applies g (IT) or nothing (IO)

    @property
    def omissive(self) -> bool:
        return len(self.descriptors) > 1


MODELS = {
    m.name: m
    for m in (
        ModelSpec("tw", True, _CLEAN),
        ModelSpec("t1", True, _SIDED, "id", "id"),
        ModelSpec("t2", True, _SIDED, "o", "id"),
        ModelSpec("t3", True, _SIDED, "o", "h"),
        ModelSpec("it", False, _CLEAN),
        ModelSpec("io", False, _CLEAN, proximity=False),
        ModelSpec("i1", False, _ONEWAY, "g", "id"),
        ModelSpec("i2", False, _ONEWAY, "g", "g"),
        ModelSpec("i3", False, _ONEWAY, "g", "h"),
        ModelSpec("i4", False, _ONEWAY, "o", "h"),
    )
}

ONE_WAY = frozenset(k for k, m in MODELS.items() if not m.two_way)
TWO_WAY = frozenset(k for k, m in MODELS.items() if m.two_way)


def get_model(name) -> ModelSpec:
    if isinstance(name, ModelSpec):
        return name
    try:
        return MODELS[str(name).lower()]
    except KeyError:
        raise ModelError(f"unknown model {name!r}; expected one of {sorted(MODELS)}") from None


def legal_descriptors(model) -> frozenset:
    return get_model(model).descriptors


def _pick(which, hooks, state):
    if which == "id":
        return state
    return getattr(hooks, which)(state)


def apply_step(model, hooks, s, r, omission=Omission.NONE):
    """Outcome ``(s', r')`` of one interaction under ``model``.

    The omissive branch is selected by ``omission``; nothing is sampled here.
    """
    m = get_model(model)
    omission = Omission(omission)
    if omission not in m.descriptors:
        raise ModelError(f"descriptor {Omission(omission).value!r} not legal in model {m.name}")
    if m.two_way:
        if omission is Omission.NONE:
            return hooks.delta(s, r)
        if omission is Omission.BOTH:
            return _pick(m.starter_om, hooks, s), _pick(m.reactor_om, hooks, r)
        out_s, out_r = hooks.delta(s, r)
        if omission is Omission.STARTER:
            return _pick(m.starter_om, hooks, s), out_r
        return out_s, _pick(m.reactor_om, hooks, r)
    if omission is Omission.NONE:
        return (hooks.g(s) if m.proximity else s), hooks.f(s, r)
    return _pick(m.starter_om, hooks, s), _pick(m.reactor_om, hooks, r)


def compile_step(model, hooks):
    """A specialised ``step(s, r, omission)`` equivalent to :func:`apply_step`.

    Used by the engine's hot loop; ``apply_step`` stays the reference.
    """
    m = get_model(model)
    legal = m.descriptors
    none = Omission.NONE

    def omissive(s, r, omission):
        omission = Omission(omission)
        if omission not in legal:
            raise ModelError(f"descriptor {omission.value!r} not legal in model {m.name}")
        return apply_step(m, hooks, s, r, omission)

    if m.two_way:
        delta = hooks.delta

        def step(s, r, omission=none):
            if omission is none:
                return delta(s, r)
            return omissive(s, r, omission)
    elif m.proximity:
        g, f = hooks.g, hooks.f

        def step(s, r, omission=none):
            if omission is none:
                return g(s), f(s, r)
            return omissive(s, r, omission)
    else:
        f = hooks.f

        def step(s, r, omission=none):
            if omission is none:
                return s, f(s, r)
            return omissive(s, r, omission)
    return step


# ---------------------------------------------------------------------------
# hierarchy

def _restrict(**fixed):
    """Embed source hooks into the destination by fixing some to identity/g."""

    def embed(hooks):
        kw = dict(vars(hooks))
        for name, how in fixed.items():
            kw[name] = _identity if how == "id" else kw[how]
        return type(hooks)(**kw)

    return embed


def _oneway_as_twoway(hooks):
    return TwoWayHooks(delta=lambda s, r: (hooks.g(s), hooks.f(s, r)), o=hooks.o, h=hooks.h)


def _io_as_it(hooks):
    return OneWayHooks(g=_identity, f=hooks.f, o=hooks.o, h=hooks.h)


# Arrows A -> B justified by "the relation of A is a special case of B":
# maps A-hooks to B-hooks reproducing every A outcome with the same descriptor.
SPECIAL_CASE_ARROWS = {
    ("t1", "t2"): _restrict(o="id"),
    ("t2", "t3"): _restrict(h="id"),
    ("io", "it"): _io_as_it,
    ("it", "tw"): _oneway_as_twoway,
    ("i1", "i3"): _restrict(h="id"),
    ("i2", "i3"): _restrict(h="g"),
    ("i3", "i4"): _restrict(o="g"),
}

# Arrows that hold because the adversary may simply not insert omissions.
AVOIDANCE_ARROWS = frozenset({("t3", "tw"), ("i4", "it")})
