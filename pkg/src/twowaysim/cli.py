"""Command-line experiment runner.

Configuration is a flat ``key = value`` file plus ``--set key=value``
overrides.  ``TWOWAYSIM_SEED`` and ``TWOWAYSIM_OUTDIR`` override the seed
and the directory that relative output paths are written to.

Exit status: 0 when every requested check passes, 1 when a check fails,
2 on configuration or structural errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .analysis.attacks import THEOREM3_MODELS
from .analysis import (CapExceeded, check_simulation, fastest_transition_time, kno_bounds,
                       lemma1_attack, naming_checks, replay_plan,
                       theorem3_rewrite)
from .core import (ConfigError, IntegrityError, ModelError, Omission, StructuralError,
                   dump_trace, load_trace, read_header)
from .models import get_model
from .protocols import format_protocol, load_protocol, parse_protocol
from .scheduling import AdversaryConfig, SchedulerConfig, adversary_rewrite, fair_run
from .simulators import execute, make_simulator, replay

DEFAULTS = {
    "protocol": "pairing",
    "model": "tw",
    "simulator": "none",
    "seed": "0",
    "horizon": "100000",
    "adversary": "none",
    "rate": "0",
    "checks": "auto",
    "window": "0.1",
    "depth_cap": "64",
    "tk_cap": "20000",
}

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


class Failed(Exception):
    """Raised internally to turn a failed check into exit status 1."""


# ---------------------------------------------------------------------------
# configuration

def parse_config_text(text: str) -> dict:
    cfg = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        cfg[key.strip()] = value.strip()
    return cfg


def load_config(path: str | None, overrides: list | None = None, env=None) -> dict:
    env = os.environ if env is None else env
    cfg = dict(DEFAULTS)
    if path:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file {path} not found")
        cfg.update(parse_config_text(p.read_text()))
    if env.get("TWOWAYSIM_SEED"):
        cfg["seed"] = env["TWOWAYSIM_SEED"]
    for item in overrides or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        cfg[key.strip()] = value.strip()
    if env.get("TWOWAYSIM_OUTDIR"):
        cfg["outdir"] = env["TWOWAYSIM_OUTDIR"]
    return cfg


def _int(cfg, key, default=None):
    value = cfg.get(key)
    if value in (None, ""):
        return default
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {value!r}") from None


def _float(cfg, key, default=None):
    value = cfg.get(key)
    if value in (None, ""):
        return default
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {value!r}") from None


def _out_path(cfg, key):
    value = cfg.get(key)
    if not value:
        return None
    p = Path(value)
    if not p.is_absolute() and cfg.get("outdir"):
        p = Path(cfg["outdir"]) / p
    return p


def initial_states(cfg, spec) -> tuple:
    """The initial simulated configuration from ``initial``, or consumer/producer counts."""
    if cfg.get("initial"):
        states = tuple(cfg["initial"].replace(",", " ").split())
    elif cfg.get("consumers") or cfg.get("producers"):
        states = ("c",) * _int(cfg, "consumers", 0) + ("p",) * _int(cfg, "producers", 0)
    elif cfg.get("n") and {"c", "p"} <= set(spec.states):
        n = _int(cfg, "n")
        states = ("c",) * (n // 2) + ("p",) * (n - n // 2)
    else:
        raise ConfigError("give 'initial' (list of states) or consumers/producers counts")
    for q in states:
        if q not in spec.initial_states:
            raise ConfigError(f"{q!r} is not an initial state of {spec.name}")
    if cfg.get("n") and _int(cfg, "n") != len(states):
        raise ConfigError(f"n = {cfg['n']} but the initial configuration has {len(states)} agents")
    if len(states) < 2:
        raise ConfigError("need at least two agents")
    return states


def sim_params(cfg, n=None) -> dict:
    params = {}
    if cfg.get("o"):
        params["o"] = _int(cfg, "o")
    if cfg.get("ids"):
        params["ids"] = [int(x) for x in cfg["ids"].replace(",", " ").split()]
    name = cfg.get("simulator", "none").lower()
    if name in ("naming", "naming+sid") or cfg.get("inner", "").lower() in ("naming", "naming+sid"):
        params["n"] = _int(cfg, "n", n)
    if name == "graceful":
        params["inner"] = cfg.get("inner", "kno")
        params["threshold"] = _int(cfg, "threshold", 1)
    return params


def build_simulator(cfg, spec, n=None):
    sim = make_simulator(cfg.get("simulator", "none"), spec, **sim_params(cfg, n))
    sim.check_model(cfg.get("model", "tw"))  # compatibility before any execution
    return sim


def adversary_config(cfg):
    kind = cfg.get("adversary", "none").lower()
    if kind in ("", "none"):
        return None
    desc = cfg.get("descriptor")
    return AdversaryConfig(
        kind=kind,
        rate=_float(cfg, "rate", 0.0),
        cutoff=_int(cfg, "cutoff"),
        position=_int(cfg, "position"),
        descriptor=Omission(desc) if desc else None,
        max_omissions=_int(cfg, "max_omissions"),
    )


def _is_pairing(spec) -> bool:
    return {"c", "p"} <= set(spec.states) <= {"c", "p", "cs", "bot"}


def requested_checks(cfg, spec, sim) -> list:
    raw = cfg.get("checks", "auto")
    if raw != "auto":
        checks = [c.strip() for c in raw.split(",") if c.strip()]
    else:
        checks = ["matching"]
        if _is_pairing(spec):
            checks.append("pairing")
        if sim.name == "kno":
            checks.append("kno-bounds")
        if sim.name == "naming":
            checks.append("naming")
    known = {"matching", "pairing", "kno-bounds", "naming", "replay"}
    for c in checks:
        if c not in known:
            raise ConfigError(f"unknown check {c!r}; expected some of {sorted(known)}")
    if "pairing" in checks and not _is_pairing(spec):
        raise ConfigError(f"the pairing check needs the pairing protocol, not {spec.name}")
    if "kno-bounds" in checks and getattr(sim, "o", None) is None:
        raise ConfigError("kno-bounds needs the kno simulator")
    if "naming" in checks and sim.name != "naming":
        raise ConfigError("the naming check needs the naming simulator")
    return checks


# ---------------------------------------------------------------------------
# reports

def record(check, verdict, witness=None, **counters) -> dict:
    return {"check": check, "verdict": verdict, "witness": witness, "counters": counters}


def run_checks(trace, spec, sim, checks, horizon, window) -> list:
    out = []
    if "matching" in checks or "pairing" in checks:
        rep = check_simulation(trace, spec, pairing="pairing" in checks, horizon=horizon,
                               window=window)
        counters = {"events": len(rep.events), "pairs": len(rep.matching.pairs),
                    "pending": len(rep.matching.pending), "idle": len(rep.matching.idle)}
        ok = rep.match.accepted and rep.derived is not None and rep.derived.consistent_with_trace
        witness = None
        if not rep.match.accepted:
            witness = {"events": rep.match.witness, "reason": rep.match.reason}
        elif not rep.derived.consistent_with_trace:
            witness = {"reason": "derived final configuration differs from the trace"}
        out.append(record("matching", "pass" if ok else "fail", witness, **counters))
        if "pairing" in checks:
            if rep.pairing_trace is None:
                out.append(record("pairing", "fail", {"reason": "no derived execution"}))
            else:
                for name, pr in (("pairing", rep.pairing_trace),
                                 ("pairing-derived", rep.pairing_derived)):
                    out.append(record(
                        name, "pass" if pr.ok else "fail",
                        [list(v) for v in pr.violations[:5]] or None,
                        irrevocability=pr.irrevocability, safety=pr.safety,
                        liveness=pr.liveness_at_horizon, final_cs=pr.final_cs,
                        stable_from=pr.stable_from))
    if "kno-bounds" in checks:
        st = kno_bounds(trace, sim.o)
        ok = st.joker_violation is None and st.token_violation is None
        witness = None if ok else {"joker_step": st.joker_violation,
                                   "token_step": st.token_violation}
        out.append(record("kno-bounds", "pass" if ok else "fail", witness,
                          max_jokers=st.max_jokers, max_tokens=st.max_tokens,
                          max_net_tokens=st.max_net_tokens, bound=trace.n * (sim.o + 1)))
    if "naming" in checks:
        ns = naming_checks(trace, sim.n)
        ok = ns.ok and ns.unique and (horizon is None or ns.stable_from <= horizon)
        out.append(record("naming", "pass" if ok else "fail",
                          [list(v) for v in ns.violations[:5]] or None,
                          unique=ns.unique, stable_from=ns.stable_from))
    if "replay" in checks:
        diffs = replay(trace, sim)
        out.append(record("replay", "fail" if diffs else "pass", diffs[:10] or None,
                          diffs=len(diffs)))
    return out


def emit(records, fh=None, path=None):
    lines = [json.dumps(r, sort_keys=True) for r in records]
    fh = fh or sys.stdout
    for line in lines:
        print(line, file=fh)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("".join(line + "\n" for line in lines))
    return all(r["verdict"] == "pass" for r in records)


# ---------------------------------------------------------------------------
# commands

def _header(cfg, spec, sim, n, seed):
    return {
        "protocol": spec.name,
        "protocol_table": format_protocol(spec),
        "model": get_model(cfg["model"]).name,
        "simulator": sim.name,
        "params": sim.params(),
        "n": n,
        "seed": seed,
        "horizon": _int(cfg, "horizon"),
        "adversary": cfg.get("adversary", "none"),
    }


def execute_config(cfg):
    """Build everything from ``cfg`` and run it; returns (trace, spec, sim)."""
    spec = load_protocol(cfg["protocol"])
    states = initial_states(cfg, spec)
    n = len(states)
    sim = build_simulator(cfg, spec, n)
    seed = _int(cfg, "seed", 0)
    horizon = _int(cfg, "horizon")
    adv = adversary_config(cfg)
    run = fair_run(SchedulerConfig(n, seed, horizon))
    if adv is not None:
        run = adversary_rewrite(run, adv, cfg["model"], n, seed)
    trace = execute(sim, cfg["model"], sim.initial(states), run, horizon=horizon,
                    header=_header(cfg, spec, sim, n, seed))
    return trace, spec, sim


def cmd_run(cfg) -> int:
    trace, spec, sim = execute_config(cfg)
    checks = requested_checks(cfg, spec, sim)
    out = _out_path(cfg, "output")
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w") as fh:
            dump_trace(trace, fh, sim)
    recs = run_checks(trace, spec, sim, checks, _int(cfg, "horizon"), _float(cfg, "window", 0.1))
    return EXIT_OK if emit(recs, path=_out_path(cfg, "report")) else EXIT_FAIL


def _codec_from_header(head):
    spec = spec_from_header(head)
    params = dict(head.get("params") or {})
    return make_simulator(head.get("simulator", "none"), spec, **params)


def spec_from_header(head):
    if head.get("protocol_table"):
        return parse_protocol(head["protocol_table"], head.get("protocol", "custom"))
    return load_protocol(head.get("protocol", "pairing"))


def read_trace(path):
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"trace file {path} not found")
    with open(p) as fh:
        head = read_header(fh)
    sim = _codec_from_header(head)
    with open(p) as fh:
        trace = load_trace(fh, lambda h: sim)
    return trace, sim.spec, sim


def cmd_verify(path, cfg) -> int:
    trace, spec, sim = read_trace(path)
    checks = requested_checks(cfg, spec, sim)
    horizon = trace.header.get("horizon")
    recs = run_checks(trace, spec, sim, checks, horizon, _float(cfg, "window", 0.1))
    return EXIT_OK if emit(recs, path=_out_path(cfg, "report")) else EXIT_FAIL


def cmd_replay(path, cfg) -> int:
    trace, spec, sim = read_trace(path)
    diffs = replay(trace, sim)
    rec = record("replay", "fail" if diffs else "pass", diffs[:10] or None, steps=len(trace),
                 diffs=len(diffs))
    return EXIT_OK if emit([rec], path=_out_path(cfg, "report")) else EXIT_FAIL


def _pair_states(cfg, spec):
    if cfg.get("q0") and cfg.get("q1"):
        return cfg["q0"], cfg["q1"]
    if cfg.get("initial"):
        states = cfg["initial"].replace(",", " ").split()
        if len(states) == 2:
            return tuple(states)
    if _is_pairing(spec):
        return "p", "c"
    raise ConfigError("give q0 and q1 (the two initial simulated states)")


def cmd_ftt(cfg) -> int:
    spec = load_protocol(cfg["protocol"])
    sim = build_simulator(cfg, spec, 2)
    q0, q1 = _pair_states(cfg, spec)
    for q in (q0, q1):
        if q not in spec.states:
            raise ConfigError(f"{q!r} is not a state of {spec.name}")
    res = fastest_transition_time(sim, spec, cfg["model"], (q0, q1), _int(cfg, "depth_cap", 64))
    if res.exceeded:
        rec = record("ftt", "exceeds-cap", None, cap=_int(cfg, "depth_cap", 64),
                     explored=res.explored)
    else:
        rec = record("ftt", "pass", [[st.starter, st.reactor] for st in res.run], t=res.t,
                     explored=res.explored)
    return EXIT_OK if emit([rec], path=_out_path(cfg, "report")) else EXIT_FAIL


def cmd_attack(cfg) -> int:
    spec = load_protocol(cfg["protocol"])
    q0, q1 = _pair_states(cfg, spec)
    rewrite = cfg.get("rewrite", "").lower()
    model = get_model(cfg["model"])
    if rewrite and get_model(rewrite).name not in THEOREM3_MODELS:
        raise ConfigError(f"the omission-free rewrite covers {sorted(THEOREM3_MODELS)}, "
                          f"not {rewrite}")
    if rewrite and get_model(rewrite).name != model.name:
        raise ConfigError(f"rewrite {rewrite} requested for a plan under model {model.name}")
    sim = build_simulator(cfg, spec, 2)
    try:
        plan = lemma1_attack(sim, spec, model, q0, q1, _int(cfg, "depth_cap", 64),
                             _int(cfg, "tk_cap", 20000), _int(cfg, "seed", 0))
    except CapExceeded as exc:
        emit([record("attack", "exceeds-cap", {"reason": str(exc)})],
             path=_out_path(cfg, "report"))
        return EXIT_FAIL
    if rewrite:
        plan = theorem3_rewrite(model, plan)
    rep = replay_plan(sim, model, plan)
    expected_om = 0 if rewrite else plan.t
    ok = rep.violated and rep.omissions == expected_om
    rec = record(
        "attack", "pass" if ok else "fail",
        {"transitioned": rep.transitioned, "blocks": [len(b) for b in plan.blocks]},
        kind=plan.kind, t=plan.t, agents=plan.n, omissions=rep.omissions,
        t_k=plan.t_ks, critical=rep.final_count, q0_agents=rep.q0_agents,
        safety_violated=rep.violated)
    return EXIT_OK if emit([rec], path=_out_path(cfg, "report")) else EXIT_FAIL


def _batch_one(args):
    cfg, seed = args
    cfg = dict(cfg, seed=str(seed))
    out = _out_path(cfg, "output")
    if out is not None:
        cfg["output"] = str(out.with_name(f"{out.stem}-{seed}{out.suffix}"))
    trace, spec, sim = execute_config(cfg)
    if cfg.get("output"):
        p = Path(cfg["output"])
        p.parent.mkdir(parents=True, exist_ok=True)
        with open(p, "w") as fh:
            dump_trace(trace, fh, sim)
    checks = requested_checks(cfg, spec, sim)
    recs = run_checks(trace, spec, sim, checks, _int(cfg, "horizon"), _float(cfg, "window", 0.1))
    for r in recs:
        r["counters"]["seed"] = seed
    return recs


def cmd_batch(cfg, seeds: int, jobs: int) -> int:
    first = _int(cfg, "seed", 0)
    todo = [(cfg, s) for s in range(first, first + seeds)]
    # fail fast on configuration problems before fanning out
    spec = load_protocol(cfg["protocol"])
    requested_checks(cfg, spec, build_simulator(cfg, spec, len(initial_states(cfg, spec))))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_batch_one, todo))
    else:
        results = [_batch_one(x) for x in todo]
    recs = [r for rs in results for r in rs]
    summary = {}
    for r in recs:
        passed, total = summary.get(r["check"], (0, 0))
        summary[r["check"]] = (passed + (r["verdict"] == "pass"), total + 1)
    recs.append(record("batch", "pass" if all(p == t for p, t in summary.values()) else "fail",
                       None, **{k: f"{p}/{t}" for k, (p, t) in summary.items()}))
    return EXIT_OK if emit(recs, path=_out_path(cfg, "report")) else EXIT_FAIL


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twowaysim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-c", "--config", help="key = value configuration file")
        p.add_argument("-s", "--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one configuration key (repeatable)")
        p.add_argument("--report", help="also write the report records to this file")
        return p

    common(sub.add_parser("run", help="execute one experiment, write trace and report"))
    p = common(sub.add_parser("verify", help="check a recorded trace"))
    p.add_argument("trace")
    p.add_argument("--checks", help="comma-separated checks (default: auto)")
    p = common(sub.add_parser("replay", help="re-execute a trace and diff configurations"))
    p.add_argument("trace")
    common(sub.add_parser("ftt", help="fastest transition time by exhaustive search"))
    common(sub.add_parser("attack", help="build and replay the counterexample run"))
    p = common(sub.add_parser("batch", help="run one configuration over many seeds"))
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--jobs", type=int, default=1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.set)
        if args.report:
            cfg["report"] = args.report
        if getattr(args, "checks", None):
            cfg["checks"] = args.checks
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "verify":
            return cmd_verify(args.trace, cfg)
        if args.command == "replay":
            return cmd_replay(args.trace, cfg)
        if args.command == "ftt":
            return cmd_ftt(cfg)
        if args.command == "attack":
            return cmd_attack(cfg)
        return cmd_batch(cfg, args.seeds, args.jobs)
    except (ConfigError, StructuralError, ModelError, IntegrityError) as exc:
        kind = type(exc).__name__
        print(json.dumps(record("error", "error", {"type": kind, "message": str(exc)})))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
