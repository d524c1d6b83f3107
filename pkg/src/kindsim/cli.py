"""Command-line front end.

Exit codes: 0 success, 1 runtime or analysis failure, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import kernels
from .config import ConfigError, RunConfig, parse_graph_arg
from .dynamics import OutOfRange, StopRule, init_constant, init_uniform, run
from .experiments import (
    AllCensored,
    StoppingSpec,
    classify,
    decay_sweep,
    detect_absorption,
    fixation_csv,
    fixation_experiment,
    fmt,
    resolve_threads,
    sweep_csv,
    trajectory_csv,
)
from .functionals import DegenerateDrift, NoCertifiableC, certify_c_epsilon
from .graph import GraphError, generate, serialize_edge_list
from .rng import EventStream
from .verify import FAULTS, run_battery

# flag name -> config field
OVERRIDES = {
    "mu_plus": float,
    "mu_minus": float,
    "epsilon": float,
    "replicates": int,
    "event_budget": int,
    "delta": float,
    "stride": int,
}


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--seed", type=_u64, help="master seed (overrides config)")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides config)")
    common.add_argument("--threads", type=int, metavar="K",
                        help="worker threads; affects speed only (default: $KINDSIM_THREADS or all cores)")
    common.add_argument("--graph", metavar="SPEC", help="complete:N, cycle:N, grid:WxH, er:N:P or file:PATH")
    for name, typ in OVERRIDES.items():
        common.add_argument("--" + name.replace("_", "-"), dest=name, type=typ)
    common.add_argument("--ns", metavar="N,N,...", help="population sizes for sweep")
    common.add_argument("--init", help="'uniform' or a constant belief in [-1, 1]")
    common.add_argument("--stop-at-threshold", action="store_true", default=None,
                        help="simulate: stop when X leaves [-eps N, (1-eps) N]")

    parser = argparse.ArgumentParser(prog="kindsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run one trajectory, dump event,t,X")
    sub.add_parser("sweep", parents=[common], help="exit-probability decay sweep over N")
    sub.add_parser("certify", parents=[common], help="certify c_eps for one graph")
    v = sub.add_parser("verify", parents=[common], help="run the invariant battery")
    v.add_argument("--inject-fault", choices=FAULTS, help=argparse.SUPPRESS)
    sub.add_parser("graph-gen", parents=[common], help="write the configured graph as an edge list")
    sub.add_parser("fixation", parents=[common], help="absorption frequencies per replicate")
    return parser


def load_config(args) -> RunConfig:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    for name in OVERRIDES:
        v = getattr(args, name)
        if v is not None:
            data[name] = v
    if args.seed is not None:
        data["seed"] = args.seed
    if args.out is not None:
        data["out"] = args.out
    if args.graph is not None:
        data["graph"] = parse_graph_arg(args.graph)
    if args.ns is not None:
        try:
            data["Ns"] = [int(s) for s in args.ns.split(",")]
        except ValueError:
            raise ConfigError(f"cannot parse --ns {args.ns!r}") from None
    if args.init is not None:
        data["init"] = args.init if args.init == "uniform" else _float(args.init, "init")
    if args.stop_at_threshold:
        data["stop_at_threshold"] = True
    return RunConfig.from_dict(data)


def _float(text, name):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{name} must be a number, got {text!r}") from None


def _outdir(cfg) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")
    print(f"wrote {path}")


def cmd_simulate(cfg: RunConfig, threads: int) -> int:
    g = generate(cfg.graph_spec, cfg.seed)
    stream = EventStream.for_replicate(cfg.seed, 0)
    state = init_uniform(g, stream) if cfg.init == "uniform" else init_constant(g, float(cfg.init))
    stop = StopRule(max_events=cfg.event_budget, delta=cfg.delta,
                    epsilon=cfg.epsilon if cfg.stop_at_threshold else None)
    out = run(state, g, cfg.params, stop, stream, stride=cfg.stride)
    d = _outdir(cfg)
    _write(d / "trajectory.csv", trajectory_csv(out.series))
    summary = {
        "graph": g.descriptor(),
        "mu_plus": cfg.mu_plus,
        "mu_minus": cfg.mu_minus,
        "epsilon": cfg.epsilon,
        "delta": cfg.delta,
        "seed": cfg.seed,
        "stop_reason": out.reason,
        "classification": classify(state, StoppingSpec(cfg.epsilon, g.n_vertices)).value,
        "absorption": detect_absorption(state, cfg.delta).value,
        "events": state.event_count,
        "final_X": float(fmt(state.total)),
        "final_t": float(fmt(state.clock)),
    }
    _write(d / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"{summary['stop_reason']}: {summary['classification']}, absorption={summary['absorption']}, "
          f"{state.event_count} events")
    return 0


def cmd_sweep(cfg: RunConfig, threads: int) -> int:
    report = decay_sweep(cfg.graph_spec, cfg.Ns, cfg.params, cfg.epsilon, cfg.replicates,
                         cfg.event_budget, cfg.seed, cfg.cert_spec, threads)
    d = _outdir(cfg)
    _write(d / "sweep.csv", sweep_csv(report))
    rows = []
    for r in report.rows:
        emp, se, theory = r.initial_mgf()
        rows.append({
            "N": r.N,
            "upper_for_bound": r.estimate.upper_for_bound,
            "zero_hits": r.zero_hits,
            "bound": r.bound,
            "bound_ok": r.bound_ok,
            "initial_mgf": {"empirical": emp, "se": se, "closed_form": theory},
            "certificate": r.certificate.to_dict(),
        })
        flag = "ok" if r.bound_ok else "VIOLATION"
        print(f"N={r.N}: p_hat={fmt(r.estimate.p_hat)} upper={fmt(r.estimate.upper_for_bound)} "
              f"bound={fmt(r.bound)} [{flag}] censored={r.censored}")
    doc = {"rows": rows, "slope": report.slope, "bounds_ok": report.bounds_ok,
           "monotone_ok": report.monotone_ok}
    _write(d / "sweep_report.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"slope of log p_hat vs N: {fmt(report.slope)}; monotone={report.monotone_ok}")
    return 0 if report.bounds_ok else 1


def cmd_certify(cfg: RunConfig, threads: int) -> int:
    g = generate(cfg.graph_spec, cfg.seed)
    cert = certify_c_epsilon(g, cfg.params, cfg.epsilon, cfg.cert_spec, cfg.seed)
    _write(_outdir(cfg) / "certificate.json", cert.to_json())
    print(f"c_eps = {fmt(cert.c)} (max Phi {fmt(cert.max_phi)}, mgf margin {fmt(cert.mgf_margin)})")
    return 0


def cmd_verify(cfg: RunConfig, threads: int, fault: str | None = None) -> int:
    results = run_battery(cfg.seed, cfg.epsilon, fault)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    failed = sum(1 for _, ok, _ in results if not ok)
    print(f"{len(results) - failed}/{len(results)} invariants pass (kernel: {kernels.BACKEND})")
    return 0 if failed == 0 else 1


def cmd_graph_gen(cfg: RunConfig, threads: int) -> int:
    g = generate(cfg.graph_spec, cfg.seed)
    _write(_outdir(cfg) / "graph.edges", serialize_edge_list(g))
    return 0


def cmd_fixation(cfg: RunConfig, threads: int) -> int:
    g = generate(cfg.graph_spec, cfg.seed)
    initial = "uniform" if cfg.init == "uniform" else [float(cfg.init)] * g.n_vertices
    report = fixation_experiment(g, cfg.params, initial, cfg.replicates, cfg.delta,
                                 cfg.event_budget, cfg.seed, threads)
    _write(_outdir(cfg) / "fixation.csv", fixation_csv(report))
    print(f"plus {report.plus}, minus {report.minus}, censored {report.censored}, "
          f"mean events {fmt(report.mean_events)}")
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "certify": cmd_certify,
    "graph-gen": cmd_graph_gen,
    "fixation": cmd_fixation,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args)
        threads = resolve_threads(args.threads)
    except (ConfigError, GraphError, OutOfRange, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "verify":
            return cmd_verify(cfg, threads, args.inject_fault)
        return COMMANDS[args.command](cfg, threads)
    except DegenerateDrift as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NoCertifiableC, AllCensored, GraphError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
