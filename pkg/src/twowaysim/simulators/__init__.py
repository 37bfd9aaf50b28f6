"""Simulators (wrapper protocols) and the execution engine."""

from ..core import ConfigError
from .base import DirectSim, IdentitySim, PlainAgent, Simulator
from .eager import EagerAgent, EagerSim, GracefulAgent, GracefulSim
from .engine import execute, replay
from .kno import (JOKER, OMISSION, KnOAgent, KnOSim, Token, kno_reactor_step, kno_starter_step,
                  token_counts)
from .sid import (IDAgent, NamingAgent, NamingSim, SIDSim, naming_step, sid_reactor_step)


def make_simulator(name: str, spec, **params) -> Simulator:
    """Build a simulator by its config name (``none``, ``kno``, ``sid``, ``naming``, ...)."""
    name = (name or "none").lower()
    if name in ("none", "direct"):
        return DirectSim(spec)
    if name == "identity":
        return IdentitySim(spec)
    if name == "eager":
        return EagerSim(spec)
    if name == "kno":
        return KnOSim(spec, o=int(params.get("o", 0)))
    if name == "sid":
        return SIDSim(spec, ids=params.get("ids"))
    if name in ("naming", "naming+sid"):
        if params.get("n") is None:
            raise ConfigError("the naming simulator needs n")
        return NamingSim(spec, n=int(params["n"]))
    if name == "graceful":
        inner = make_simulator(params.get("inner", "kno"), spec, **params)
        return GracefulSim(inner, int(params.get("threshold", 1)))
    raise ConfigError(f"unknown simulator {name!r}")


__all__ = [
    "DirectSim", "IdentitySim", "PlainAgent", "Simulator", "EagerAgent", "EagerSim",
    "GracefulAgent", "GracefulSim", "execute", "replay", "JOKER", "OMISSION", "KnOAgent",
    "KnOSim", "Token", "kno_reactor_step", "kno_starter_step", "token_counts", "IDAgent",
    "NamingAgent", "NamingSim", "SIDSim", "naming_step", "sid_reactor_step", "make_simulator",
]
