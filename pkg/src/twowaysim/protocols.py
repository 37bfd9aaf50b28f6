"""Concrete two-way protocols and the Pairing-problem checker."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .core import ConfigError, ProtocolSpec, StructuralError

CS, C, P, BOT = "cs", "c", "p", "bot"


def pairing_protocol() -> ProtocolSpec:
    """Consumers ``c`` meet producers ``p``; the consumer enters ``cs``."""
    return ProtocolSpec.from_rules(
        "pairing",
        states={CS, C, P, BOT},
        initial_states={C, P},
        rules={(C, P): (CS, BOT), (P, C): (BOT, CS)},
    )


def epidemic_protocol() -> ProtocolSpec:
    """One-shot infection: an infected starter infects a susceptible reactor."""
    return ProtocolSpec.from_rules(
        "epidemic", states={"i", "s"}, initial_states={"i", "s"}, rules={("i", "s"): ("i", "i")})


BUILTIN = {"pairing": pairing_protocol, "epidemic": epidemic_protocol}


def parse_protocol(text: str, name: str = "custom") -> ProtocolSpec:
    """Parse the transition-table text format::

        states: c p cs bot
        initial: c p
        c p -> cs bot

    Pairs without a rule map to themselves.
    """
    states = initial = None
    rules = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition(":")
        if sep and key.strip() in ("states", "initial", "name"):
            words = rest.split()
            if key.strip() == "states":
                states = words
            elif key.strip() == "initial":
                initial = words
            else:
                name = rest.strip()
            continue
        lhs, arrow, rhs = line.partition("->")
        lhs, rhs = lhs.split(), rhs.split()
        if not arrow or len(lhs) != 2 or len(rhs) != 2:
            raise StructuralError(f"line {lineno}: expected 'q_s q_r -> q_s' q_r'', got {raw!r}")
        if tuple(lhs) in rules:
            raise StructuralError(f"line {lineno}: duplicate rule for {lhs[0]} {lhs[1]}")
        rules[tuple(lhs)] = tuple(rhs)
    if states is None or initial is None:
        raise StructuralError("protocol table needs 'states:' and 'initial:' lines")
    return ProtocolSpec.from_rules(name, states, initial, rules)


def format_protocol(spec: ProtocolSpec) -> str:
    lines = [f"name: {spec.name}",
             "states: " + " ".join(sorted(spec.states)),
             "initial: " + " ".join(sorted(spec.initial_states))]
    lines += [f"{a} {b} -> {x} {y}" for (a, b), (x, y) in spec.nontrivial_rules().items()]
    return "\n".join(lines) + "\n"


def load_protocol(ref: str) -> ProtocolSpec:
    """A builtin name or a path to a transition-table file."""
    if ref in BUILTIN:
        return BUILTIN[ref]()
    path = Path(ref)
    if not path.exists():
        raise ConfigError(f"unknown protocol {ref!r} (not builtin, no such file)")
    return parse_protocol(path.read_text(), name=path.stem)


@dataclass(frozen=True)
class PairingInstance:
    n_consumers: int
    n_producers: int

    def __post_init__(self):
        if self.n_consumers < 0 or self.n_producers < 0:
            raise ConfigError("agent counts must be non-negative")

    @property
    def n(self) -> int:
        return self.n_consumers + self.n_producers

    @property
    def target(self) -> int:
        return min(self.n_consumers, self.n_producers)

    def initial(self) -> tuple:
        return (C,) * self.n_consumers + (P,) * self.n_producers


@dataclass
class PairingReport:
    irrevocability: bool = True
    safety: bool = True
    liveness_at_horizon: bool = False
    final_cs: int = 0
    stable_from: int | None = None
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.irrevocability and self.safety and self.liveness_at_horizon


def check_pairing(configs: Sequence[Sequence[str]], inst: PairingInstance,
                  horizon: int | None = None, window: float = 0.1) -> PairingReport:
    """Check irrevocability, safety and (windowed) liveness on projected configurations.

    ``configs`` is C_0, C_1, ... of simulated states.  Liveness holds when the
    number of ``cs`` agents equals the target from some step before
    ``horizon`` onward, and that stable stretch covers at least ``window`` of
    the observed steps.  ``window=0`` only asks the final configuration to
    be on target.
    """
    points = []
    prev = None
    for k, cfg in enumerate(configs):
        cfg = tuple(cfg)
        if cfg != prev:
            points.append((k, cfg))
            prev = cfg
    return check_pairing_points(points, len(configs), inst, horizon, window)


def check_pairing_points(points, length: int, inst: PairingInstance,
                         horizon: int | None = None, window: float = 0.1) -> PairingReport:
    """Same as :func:`check_pairing` on a sparse timeline.

    ``points`` lists ``(k, C_k)`` for k = 0 and every k where the projected
    configuration changed; ``length`` is the number of configurations.
    """
    if not points or points[0][0] != 0:
        raise StructuralError("timeline must start with the initial configuration")
    first = tuple(points[0][1])
    if sorted(first) != sorted(inst.initial()):
        raise StructuralError(
            f"initial configuration has {first.count(C)} c / {first.count(P)} p, "
            f"instance expects {inst.n_consumers} / {inst.n_producers}")
    rep = PairingReport()
    prev = first
    stable_from = None
    for k, cfg in points:
        ncs = 0
        for a, q in enumerate(cfg):
            if q == CS:
                ncs += 1
                if prev[a] != CS and prev[a] != C:
                    rep.irrevocability = False
                    rep.violations.append(("irrevocability", k, a, f"{prev[a]} -> cs"))
            elif prev[a] == CS:
                rep.irrevocability = False
                rep.violations.append(("irrevocability", k, a, f"cs -> {q}"))
        if ncs > inst.n_producers:
            if rep.safety:
                rep.violations.append(("safety", k, None, f"{ncs} cs > {inst.n_producers} producers"))
            rep.safety = False
        if ncs != inst.target:
            stable_from = None
        elif stable_from is None:
            stable_from = k
        prev = cfg
    rep.final_cs = prev.count(CS)
    rep.stable_from = stable_from
    if stable_from is not None:
        need = max(math.ceil(window * length), 1)
        before = horizon is None or stable_from <= horizon
        rep.liveness_at_horizon = before and (length - stable_from) >= need
    return rep
