"""Shared domain types: protocols, interactions, runs and traces."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping, NamedTuple, Sequence


class StructuralError(ValueError):
    """Malformed input: unknown symbols, bad indices, malformed steps."""


class IntegrityError(RuntimeError):
    """An internal consistency check failed on data that parsed fine."""


class ConfigError(ValueError):
    """Incompatible or illegal experiment configuration."""


class ModelError(ValueError):
    """An omission descriptor was used in a model that does not allow it."""


class Omission(str, Enum):
    NONE = "none"
    STARTER = "starter"
    REACTOR = "reactor"
    BOTH = "both"
    OMISSIVE = "omissive"


@dataclass(frozen=True)
class ProtocolSpec:
    """A two-way protocol given as a finite transition table.

    ``delta`` must be total over ``states x states``; use :meth:`from_rules`
    to fill the trivial (identity) entries automatically.
    """

    name: str
    states: frozenset
    initial_states: frozenset
    delta: Mapping[tuple, tuple] = field(repr=False)

    def __post_init__(self):
        if not self.initial_states <= self.states:
            raise StructuralError(
                f"initial states {sorted(self.initial_states - self.states)} not in state set")
        for qs in self.states:
            for qr in self.states:
                if (qs, qr) not in self.delta:
                    raise StructuralError(f"delta undefined on ({qs}, {qr})")
        for key, out in self.delta.items():
            if len(out) != 2 or not set(out) <= self.states or not set(key) <= self.states:
                raise StructuralError(f"bad delta entry {key} -> {out}")

    @classmethod
    def from_rules(cls, name, states, initial_states, rules):
        states = frozenset(states)
        delta = {(a, b): (a, b) for a in states for b in states}
        for (qs, qr), out in dict(rules).items():
            if (qs, qr) not in delta:
                raise StructuralError(f"rule on unknown states ({qs}, {qr})")
            delta[(qs, qr)] = tuple(out)
        return cls(name, states, frozenset(initial_states), delta)

    def __call__(self, qs, qr):
        return self.delta[(qs, qr)]

    def nontrivial_rules(self):
        return {k: v for k, v in sorted(self.delta.items()) if k != v}

    def is_symmetric_on(self, q0, q1) -> bool:
        a0, a1 = self.delta[(q0, q1)]
        b1, b0 = self.delta[(q1, q0)]
        return (a0, a1) == (b0, b1)


class RunStep(NamedTuple):
    starter: int
    reactor: int
    omission: Omission = Omission.NONE

    @property
    def omissive(self) -> bool:
        return self.omission is not Omission.NONE


def make_step(starter, reactor, omission=Omission.NONE) -> RunStep:
    """Validated constructor for externally supplied steps."""
    try:
        starter, reactor = int(starter), int(reactor)
        omission = Omission(omission)
    except (TypeError, ValueError) as exc:
        raise StructuralError(f"malformed step ({starter!r}, {reactor!r}, {omission!r})") from exc
    if starter < 0 or reactor < 0:
        raise StructuralError(f"negative agent index in ({starter}, {reactor})")
    if starter == reactor:
        raise StructuralError(f"agent {starter} cannot interact with itself")
    return RunStep(starter, reactor, omission)


def count_omissions(steps: Iterable[RunStep]) -> int:
    return sum(1 for st in steps if st.omission is not Omission.NONE)


def simulated(agent):
    """Simulated-state component of one agent (plain symbols pass through)."""
    return getattr(agent, "state_P", agent)


def project(config: Sequence, spec: ProtocolSpec | None = None) -> tuple:
    out = tuple(simulated(a) for a in config)
    if spec is not None:
        for i, q in enumerate(out):
            if q not in spec.states:
                raise StructuralError(f"agent {i} has simulated state {q!r} not in {spec.name}")
    return out


class Event(NamedTuple):
    agent: int
    tag: Any


@dataclass
class TraceRecord:
    index: int
    step: RunStep
    post: tuple
    events: tuple = ()


@dataclass
class Trace:
    """An execution: initial configuration plus one record per interaction."""

    initial: tuple
    records: list = field(default_factory=list)
    header: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.initial)

    def __len__(self):
        return len(self.records)

    def config(self, k: int) -> tuple:
        """Configuration C_k, i.e. before step k (C_0 is the initial one)."""
        if k == 0:
            return self.initial
        return self.records[k - 1].post

    def configs(self):
        yield self.initial
        for rec in self.records:
            yield rec.post

    def steps(self):
        return [rec.step for rec in self.records]

    def projections(self):
        return [project(c) for c in self.configs()]


# ---------------------------------------------------------------------------
# line-delimited serialization

def _jsonable(x):
    if isinstance(x, Enum):
        return x.value
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    return x


def _tupled(x):
    if isinstance(x, list):
        return tuple(_tupled(v) for v in x)
    return x


def dump_trace(trace: Trace, fh, codec) -> None:
    """Write ``trace`` as JSON lines; ``codec`` encodes agent states."""
    header = {"kind": "header", **_jsonable(trace.header), "n": trace.n}
    fh.write(json.dumps(header, sort_keys=True) + "\n")
    init = {"kind": "initial", "config": [codec.encode(a) for a in trace.initial]}
    fh.write(json.dumps(init, sort_keys=True) + "\n")
    for rec in trace.records:
        line = {
            "i": rec.index,
            "s": rec.step.starter,
            "r": rec.step.reactor,
            "om": rec.step.omission.value,
            "ev": [[e.agent, _jsonable(e.tag)] for e in rec.events],
            "post": [codec.encode(a) for a in rec.post],
        }
        fh.write(json.dumps(line, sort_keys=True) + "\n")


def read_header(fh) -> dict:
    line = fh.readline()
    try:
        head = json.loads(line)
    except json.JSONDecodeError as exc:
        raise StructuralError(f"line 1: not JSON ({exc.msg})") from exc
    if head.get("kind") != "header":
        raise StructuralError("line 1: missing trace header")
    return head


def load_trace(fh, codec_for_header) -> Trace:
    """Parse a trace written by :func:`dump_trace`.

    ``codec_for_header`` maps the parsed header to an agent codec.
    """
    head = read_header(fh)
    codec = codec_for_header(head)
    lineno = 2
    try:
        init = json.loads(fh.readline())
        initial = tuple(codec.decode(a) for a in init["config"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise StructuralError(f"line {lineno}: bad initial configuration ({exc})") from exc
    trace = Trace(initial=initial, header={k: v for k, v in head.items() if k != "kind"})
    for lineno, line in enumerate(fh, start=3):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            step = make_step(obj["s"], obj["r"], obj["om"])
            post = tuple(codec.decode(a) for a in obj["post"])
            events = tuple(Event(int(a), _tupled(t)) for a, t in obj["ev"])
            index = int(obj["i"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError, StructuralError) as exc:
            raise StructuralError(f"line {lineno}: {exc}") from exc
        if index != len(trace.records):
            raise StructuralError(f"line {lineno}: step index {index}, expected {len(trace.records)}")
        if len(post) != trace.n:
            raise StructuralError(f"line {lineno}: configuration has {len(post)} agents, expected {trace.n}")
        trace.records.append(TraceRecord(index, step, post, events))
    return trace
