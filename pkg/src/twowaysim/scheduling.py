"""Run generation: the uniform fair scheduler and the omission adversaries."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .core import ConfigError, Omission, RunStep, make_step
from .models import get_model

_CHUNK = 4096


@dataclass(frozen=True)
class SchedulerConfig:
    n: int
    seed: int = 0
    horizon: int | None = None  # None: unbounded

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError(f"need at least two agents, got n={self.n}")
        if self.horizon is not None and self.horizon < 0:
            raise ConfigError(f"horizon must be non-negative, got {self.horizon}")


def _pairs(n, rng) -> Iterator[tuple[int, int]]:
    m = n * (n - 1)
    while True:
        for x in rng.integers(0, m, size=_CHUNK).tolist():
            s, r = divmod(x, n - 1)
            yield s, (r + 1 if r >= s else r)


def fair_run(cfg: SchedulerConfig) -> Iterator[RunStep]:
    """Ordered pairs drawn i.i.d. uniformly; omission-free."""
    rng = np.random.default_rng(cfg.seed)
    pairs = _pairs(cfg.n, rng)
    if cfg.horizon is not None:
        pairs = itertools.islice(pairs, cfg.horizon)
    none = Omission.NONE
    for s, r in pairs:
        yield RunStep(s, r, none)


def compose_run(steps: Iterable, extend: SchedulerConfig | None = None) -> Iterator[RunStep]:
    """Replay ``steps`` verbatim, then (optionally) continue with a fair run."""
    fixed = [s if isinstance(s, RunStep) and s.starter != s.reactor else make_step(*s) for s in steps]
    if extend is None:
        return iter(fixed)
    return itertools.chain(fixed, fair_run(extend))


@dataclass(frozen=True)
class AdversaryConfig:
    """Omission adversary.

    kind: ``"uo"`` inserts a geometric number (mean ``rate``) of omissive
    steps in every gap; ``"no"`` does the same only while the output is
    shorter than ``cutoff``; ``"no1"`` inserts a single omission before input
    step ``position``.  ``max_omissions`` caps the total.  ``pins`` fixes the
    agent pairs of inserted steps in order (uniform otherwise), and
    ``descriptor`` fixes their omission descriptor.
    """

    kind: str = "uo"
    rate: float = 0.0
    cutoff: int | None = None
    position: int | None = None
    descriptor: Omission | None = None
    max_omissions: int | None = None
    omissions: int = 1  # only meaningful for no1
    pins: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in ("uo", "no", "no1"):
            raise ConfigError(f"unknown adversary kind {self.kind!r}")
        if self.rate < 0:
            raise ConfigError("adversary rate must be non-negative")
        if self.kind == "no" and self.cutoff is None:
            raise ConfigError("the eventually-non-omissive adversary needs a cutoff")
        if self.kind == "no1":
            if self.omissions > 1 or (self.max_omissions or 0) > 1:
                raise ConfigError("the single-omission adversary inserts at most one omission")
            if self.position is None or self.position < 0:
                raise ConfigError("the single-omission adversary needs a position >= 0")


def adversary_rewrite(run: Iterable[RunStep], adv: AdversaryConfig, model, n: int,
                      seed: int = 0) -> Iterator[RunStep]:
    """Insert omissive steps into ``run``; input steps are never dropped or reordered."""
    m = get_model(model)
    omissive = sorted((d for d in m.descriptors if d is not Omission.NONE), key=lambda d: d.value)
    if not omissive:
        raise ConfigError(f"model {m.name} has no omissions; adversary {adv.kind} is not applicable")
    if adv.descriptor is not None and adv.descriptor not in m.descriptors:
        raise ConfigError(f"descriptor {adv.descriptor} illegal in model {m.name}")
    rng = np.random.default_rng([seed, 0x0A11])
    pins = iter(adv.pins)
    p_more = adv.rate / (1.0 + adv.rate)
    cap = adv.max_omissions

    def inserted():
        try:
            s, r = next(pins)
        except StopIteration:
            s = int(rng.integers(n))
            r = int(rng.integers(n - 1))
            r += r >= s
        d = adv.descriptor or omissive[int(rng.integers(len(omissive)))]
        return make_step(s, r, d)

    out_len = 0
    placed = 0
    for gap, step in enumerate(run):
        if adv.kind == "no1":
            if gap == adv.position and adv.omissions > 0:
                yield inserted()
                out_len += 1
        elif adv.rate > 0:
            while (cap is None or placed < cap) and rng.random() < p_more:
                if adv.kind == "no" and out_len >= adv.cutoff:
                    break
                yield inserted()
                out_len += 1
                placed += 1
        yield step
        out_len += 1
