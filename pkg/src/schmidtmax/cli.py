"""Command-line entry point.

Subcommands: decompose, maximize, ame, fermion, variety, channel, table1.
Exit codes: 0 success, 1 configuration error, 2 non-convergence,
3 internal inconsistency. Factor indices in cuts are 0-based.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import replace

import numpy as np

from .experiments import (
    InconsistencyError,
    ame_search,
    channel_min_output,
    fermion_entropy_min,
    fermion_extremal,
    probe_setting,
    table1_protocol,
    variety_probe,
)
from .measures import NormSpec
from .optimize import IterationConfig, Objective, run_single
from .states import Cut, PureState, schmidt_decompose
from .subspaces import (
    ChannelSpec,
    FermionSpace,
    antisymmetric_projector,
    channel_image_projector,
    fermion_projector,
    identity_projector,
    random_subspace_projector,
    span_projector,
    split_isometry,
    symmetric_projector,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NO_CONVERGENCE = 2
EXIT_INCONSISTENT = 3


class ConfigError(ValueError):
    pass


def _parse_dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(x) for x in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad dims {text!r}") from exc
    if not dims or any(d < 1 for d in dims):
        raise ConfigError(f"dims must be positive integers: {text!r}")
    return dims


def _check_keys(doc: dict, allowed: set[str], where: str) -> None:
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def load_state(path: str) -> PureState:
    with open(path) as fh:
        doc = json.load(fh)
    _check_keys(doc, {"dims", "amps"}, "state file")
    amps = np.array([complex(re, im) for re, im in doc["amps"]])
    return PureState(tuple(doc["dims"]), amps)


def _build_projector(doc: dict, dims: tuple[int, ...] | None):
    _check_keys(doc, {"family", "d", "N", "K", "dim", "D", "seed", "vectors", "path"},
                "projector block")
    family = doc.get("family")
    if family == "identity":
        if dims is None:
            raise ConfigError("identity projector needs dims")
        return identity_projector(math.prod(dims)), dims
    if family == "fermion":
        iso = split_isometry(FermionSpace(doc["d"], doc["N"]), doc["K"])
        proj = fermion_projector(iso.space, doc["K"], isometry=iso)
        if dims is not None and tuple(dims) != iso.dims:
            raise ConfigError(f"dims must be {list(iso.dims)} for this fermion projector")
        return proj, iso.dims
    if family == "antisymmetric":
        proj = antisymmetric_projector(doc["d"], doc["N"])
        return proj, dims or (doc["d"],) * doc["N"]
    if family == "symmetric":
        proj = symmetric_projector(doc["d"], doc["N"])
        return proj, dims or (doc["d"],) * doc["N"]
    if family == "random":
        proj = random_subspace_projector(doc["dim"], doc["D"], doc.get("seed", 0))
        if dims is None:
            raise ConfigError("random projector needs dims")
        return proj, dims
    if family == "span":
        vecs = [np.array([complex(re, im) for re, im in v]) for v in doc["vectors"]]
        if dims is None:
            raise ConfigError("span projector needs dims")
        return span_projector(vecs), dims
    if family == "channel":
        channel = ChannelSpec.from_json(doc["path"])
        proj = channel_image_projector(channel)
        return proj, (channel.d_a, channel.d_b)
    raise ConfigError(f"unknown projector family {family!r}")


def _iteration_config(doc: dict, args) -> IterationConfig:
    cfg = IterationConfig(
        max_iters=doc.get("max_iters", 100_000),
        tol_increment=doc.get("tol_increment", 1e-10),
        stall_window=doc.get("stall_window", 50),
        seed=doc.get("seed", 0),
        restarts=doc.get("restarts", 10),
        record_trace=bool(getattr(args, "trace", None)),
        threads=doc.get("threads", 1),
    )
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "restarts", None) is not None:
        cfg = replace(cfg, restarts=args.restarts)
    if getattr(args, "threads", None) is not None:
        cfg = replace(cfg, threads=args.threads)
    return cfg


def write_report(path: str | None, experiment: str, params: dict, results: dict,
                 seeds: list[int], wall_time: float) -> None:
    doc = {
        "experiment": experiment,
        "params": params,
        "results": results,
        "seeds": seeds,
        "meta": {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
                 "wall_time": wall_time},
    }
    text = json.dumps(doc, sort_keys=True, indent=2)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def write_trace(path: str, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["restart", "iter", "objective", "residual"])
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# subcommands

def cmd_decompose(args) -> int:
    state = load_state(args.state).normalized()
    cut = Cut(tuple(int(i) for i in args.cut.split(",")))
    dec = schmidt_decompose(state, cut)
    for lam in dec.coeffs:
        xi = -math.log(lam**2) if lam > 1e-150 else float("inf")
        print(f"{lam:.10f}  xi={xi:.6f}")
    return EXIT_OK


def cmd_maximize(args) -> int:
    with open(args.config) as fh:
        doc = json.load(fh)
    _check_keys(doc, {"projector", "dims", "terms", "max_iters", "tol_increment",
                      "stall_window", "seed", "restarts", "threads"}, "config")
    dims = tuple(doc["dims"]) if "dims" in doc else None
    proj, dims = _build_projector(doc.get("projector", {"family": "identity"}), dims)
    terms = []
    for t in doc["terms"]:
        _check_keys(t, {"cut", "p", "k", "weights"}, "term")
        spec = NormSpec(p=t["p"], k=t["k"],
                        weights=tuple(t["weights"]) if "weights" in t else None)
        terms.append((Cut(tuple(t["cut"])), spec))
    config = _iteration_config(doc, args)
    objective = Objective(dims, proj, tuple(terms))
    t0 = time.perf_counter()
    report = run_single(objective, config)
    best = report.best
    results = {
        "best_value": best.value,
        "best_term_norms": list(best.term_norms),
        "per_restart": [
            {"seed": r.seed, "value": r.value, "iterations": r.iterations,
             "converged": r.converged, "residual": r.residual}
            for r in report.restarts
        ],
    }
    write_report(args.out, "maximize", doc, results,
                 [r.seed for r in report.restarts], time.perf_counter() - t0)
    if args.trace:
        write_trace(args.trace, report.trace)
    print(f"best objective value: {best.value:.10f}")
    if not any(r.converged for r in report.restarts):
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def _emit_experiment(result, args) -> None:
    write_report(args.out, result.experiment, result.params, result.to_dict(),
                 [result.seed], result.wall_time)
    if getattr(args, "trace", None) and result.report is not None:
        write_trace(args.trace, result.report.trace)


def cmd_ame(args) -> int:
    dims = _parse_dims(args.dims)
    config = _iteration_config({}, args)
    result = ame_search(dims, config)
    _emit_experiment(result, args)
    print(f"AME search dims={list(dims)}: {result.success_count}/{result.restarts} "
          f"successes, per-cut values {[f'{v:.6f}' for v in result.details['best_per_cut_values']]}")
    return EXIT_OK if result.success_count > 0 else EXIT_NO_CONVERGENCE


def cmd_fermion(args) -> int:
    config = _iteration_config({}, args)
    if args.entropy_alpha is not None:
        result = fermion_entropy_min(args.d, args.N, args.K, args.entropy_alpha, config)
        print(f"min S_{args.entropy_alpha} = {result.best_value:.8f} "
              f"(target {result.target:.8f}), "
              f"{result.success_count}/{result.restarts} successes")
    else:
        spec = NormSpec(p=args.p, k=args.k)
        result = fermion_extremal(args.d, args.N, args.K, spec, config)
        sq = result.details["best_value_squared"]
        tgt = "n/a" if result.target is None else f"{result.target**2:.8f}"
        print(f"best norm^2 = {sq:.8f} (target^2 {tgt}), "
              f"{result.success_count}/{result.restarts} successes")
    _emit_experiment(result, args)
    if result.target is not None and result.success_count == 0:
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def cmd_variety(args) -> int:
    config = _iteration_config({}, args)
    dims = _parse_dims(args.dims) if args.dims else None
    setting = probe_setting(args.space, args.target, dims=dims, d=args.d,
                            n_parties=args.n_parties, rank=args.rank)
    result = variety_probe(setting, config, trials=args.trials)
    _emit_experiment(result, args)
    print(f"largest avoiding subspace dimension D = {result.details['max_avoiding_dim']}")
    return EXIT_OK


def cmd_channel(args) -> int:
    channel = ChannelSpec.from_json(args.spec)
    config = _iteration_config({}, args)
    result = channel_min_output(channel, args.alpha, config)
    _emit_experiment(result, args)
    print(f"min S_{args.alpha} = {result.best_value:.8f}, "
          f"max output norm = {result.details['max_output_alpha_norm']:.8f}")
    return EXIT_OK


def cmd_table1(args) -> int:
    with open(args.config) as fh:
        specs = json.load(fh)
    rows = table1_protocol(specs, seed=args.seed if args.seed is not None else 0)
    print(f"{'experiment':50s} {'avg iters':>10s} {'successes':>9s}")
    for row in rows:
        iters = "n/a" if row["mean_iterations"] is None else f"{row['mean_iterations']:.1f}"
        print(f"{row['label']:50s} {iters:>10s} {row['successes']:>9d}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="schmidtmax",
                                     description="Schmidt-norm maximization over subspaces")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="report JSON path")
        p.add_argument("--trace", default=None, help="iteration trace CSV path")
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--restarts", type=int, default=None)

    p = sub.add_parser("decompose", help="print Schmidt coefficients of a state file")
    p.add_argument("--state", required=True)
    p.add_argument("--cut", required=True, help="comma-separated 0-based side-A factors")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("maximize", help="run the iteration from a JSON config")
    p.add_argument("--config", required=True)
    common(p)
    p.set_defaults(func=cmd_maximize)

    p = sub.add_parser("ame", help="multi-cut maximal entanglement search")
    p.add_argument("--dims", required=True, help="comma-separated local dimensions")
    common(p)
    p.set_defaults(func=cmd_ame)

    p = sub.add_parser("fermion", help="fermionic extremal value / entropy minimum")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--entropy-alpha", type=float, default=None)
    common(p)
    p.set_defaults(func=cmd_fermion)

    p = sub.add_parser("variety", help="probe variety dimensions with random subspaces")
    p.add_argument("--space", choices=["full", "symmetric", "antisymmetric"], required=True)
    p.add_argument("--target", choices=["rank", "max_entangled", "condensate",
                                        "slater", "yang"], required=True)
    p.add_argument("--dims", default=None, help="for full spaces: d_A,d_B")
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--n-parties", type=int, default=2)
    p.add_argument("--rank", type=int, default=1)
    p.add_argument("--trials", type=int, default=5)
    common(p)
    p.set_defaults(func=cmd_variety)

    p = sub.add_parser("channel", help="minimal output Renyi entropy of a channel")
    p.add_argument("--spec", required=True, help="channel JSON file")
    p.add_argument("--alpha", type=float, required=True)
    common(p)
    p.set_defaults(func=cmd_channel)

    p = sub.add_parser("table1", help="10-restart success table for experiment list")
    p.add_argument("--config", required=True, help="JSON list of experiment specs")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="CSV output path")
    p.set_defaults(func=cmd_table1)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InconsistencyError as exc:
        print(f"inconsistency: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT


if __name__ == "__main__":
    sys.exit(main())
