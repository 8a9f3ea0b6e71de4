"""Command line entry point.

Subcommands: gen (graph files), green (one Dirichlet solve), flow (orient
and decompose the unit current), criterion (series reports), verify
(property suites), report (the full pipeline over a radius ladder).

Determinism contract: identical argv and --seed produce byte-identical
output files.  All JSON is written with sorted keys and no timestamps;
every random draw flows from the single seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict

import numpy as np

from . import criterion as crit
from . import verify as ver
from .errors import PotentialError
from .flows import (decompose_paths, edge_marginals, empirical_lower_bound,
                    flow_checks, orient_flow)
from .graphs import (WeightedGraph, ball_profile, build_lattice,
                     build_radial_model, build_tree, load_graph, save_graph)
from .green import (capacity, compute_L, green_normalization_check,
                    parabolicity_probe, sandwich_upper_bound, solve_green)
from .operators import ExponentParams, save_vertex_function
from .verify import run_suites, shoot_radial_supersolution

DEFAULT_SHOOT_STARTS = (0.1, 0.05, 0.01)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _dump_json(path: str, payload) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, sort_keys=True, indent=2)
        fh.write("\n")


def _print_json(payload) -> None:
    json.dump(_jsonable(payload), sys.stdout, sort_keys=True, indent=2)
    sys.stdout.write("\n")


def _check_rows(checks) -> list:
    return [{"name": c.name, "lower": c.lower, "upper": c.upper,
             "margin": c.margin, "ok": c.ok} for c in checks]


def _parse_int_list(text: str) -> list:
    try:
        values = [int(part) for part in text.split(",") if part != ""]
    except ValueError as exc:
        raise ValueError(f"expected comma-separated integers, got {text!r}") from exc
    if not values:
        raise ValueError("empty integer list")
    return values


def _parse_float_list(text: str) -> list:
    try:
        values = [float(part) for part in text.split(",") if part != ""]
    except ValueError as exc:
        raise ValueError(f"expected comma-separated numbers, got {text!r}") from exc
    if not values:
        raise ValueError("empty number list")
    return values


# ---------------------------------------------------------------------------
# subcommands


def _cmd_gen(args) -> int:
    if args.family == "lattice":
        graph = build_lattice(args.dimension, args.half_side)
    elif args.family == "tree":
        graph = build_tree(args.branching, args.depth)
    else:
        sizes = _parse_int_list(args.sphere_sizes)
        weights = _parse_float_list(args.weights)
        graph = build_radial_model(sizes, weights)
    save_graph(graph, args.out)
    _print_json({"family": args.family, "out": args.out,
                 "vertex_count": graph.vertex_count,
                 "edge_count": graph.edge_count})
    return 0


def _cmd_green(args) -> int:
    graph = load_graph(args.graph)
    profile = ball_profile(graph)
    center = graph.root if args.center is None else args.center
    green = solve_green(graph, profile, args.R, args.p, center=center)
    save_vertex_function(green.values, args.out)
    sidecar = os.path.splitext(args.out)[0] + ".json"
    stages = green.solver_report.stages
    _dump_json(sidecar, {
        "R": green.R,
        "p": green.p,
        "center": green.center,
        "residual": green.residual,
        "iterations": green.solver_report.total_iterations,
        "eps_schedule": [st.eps for st in stages],
        "stage_iterations": [st.iterations for st in stages],
        "energy": green.solver_report.energy,
        "value_at_center": float(green.values.values[green.center]),
    })
    _print_json({"out": args.out, "sidecar": sidecar,
                 "residual": green.residual,
                 "value_at_center": float(green.values.values[green.center])})
    return 0


def _cmd_flow(args) -> int:
    graph = load_graph(args.graph)
    profile = ball_profile(graph)
    params = ExponentParams(p=args.p, sigma=args.sigma)
    green = solve_green(graph, profile, args.R, args.p)
    flow = orient_flow(graph, profile, green)
    measure = decompose_paths(flow)
    chain = empirical_lower_bound(graph, profile, green, flow, measure, params)
    structural = flow_checks(graph, profile, flow)
    marginal_dev = float(np.abs(edge_marginals(flow, measure)
                                - flow.theta).max())

    paths_path = args.out_prefix + ".paths.json"
    report_path = args.out_prefix + ".report.json"
    _dump_json(paths_path, {
        "R": flow.R, "p": flow.p, "sigma": params.sigma,
        "center": flow.center, "boundary": flow.boundary_id,
        "paths": [{"vertices": list(path), "probability": float(prob)}
                  for path, prob in measure.items()],
    })
    _dump_json(report_path, {
        "R": flow.R, "p": flow.p, "sigma": params.sigma,
        "retained_edges": flow.edge_count,
        "path_count": len(measure),
        "probability_sum": float(measure.probabilities.sum()),
        "max_marginal_deviation": marginal_dev,
        "conservation_defect": structural["conservation_defect"],
        "min_tail_slack": structural["min_tail_slack"],
        "cut_margin": structural["cut_margin"],
        "boundary_tails_at_rim": structural["boundary_tails_at_rim"],
        "L": chain.L,
        "lower_bound": chain.rhs,
        "chain": _check_rows(chain.checks),
        "per_n": chain.per_n,
    })
    _print_json({"paths": paths_path, "report": report_path,
                 "path_count": len(measure), "L": chain.L,
                 "lower_bound": chain.rhs})
    return 0


def _load_profile_csv(path: str) -> np.ndarray:
    """Volume profile CSV with header n,W -> array indexed by n."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["n", "W"]:
            raise ValueError(f"{path}: expected header 'n,W'")
        rows = [(int(row[0]), float(row[1])) for row in reader if row]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    rows.sort()
    ns = [n for n, _ in rows]
    if ns[0] not in (0, 1) or ns != list(range(ns[0], ns[0] + len(ns))):
        raise ValueError(f"{path}: n must be contiguous from 0 or 1")
    W = np.empty(ns[-1] + 1)
    W[0] = rows[0][1]  # placeholder when the file starts at n = 1
    for n, value in rows:
        W[n] = value
    return W


def _criterion_payload(graph: WeightedGraph | None, W: np.ndarray,
                       params: ExponentParams, horizon: int,
                       terms_path: str) -> dict:
    horizon = min(horizon, W.size - 1)
    terms = crit.volume_series_terms(W, params)[:horizon]
    series = crit.classify(terms, horizon=horizon)
    with open(terms_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "t_n", "partial_sum"])
        for i, (t, s) in enumerate(zip(series.terms, series.partial_sums)):
            writer.writerow([i + 1, repr(float(t)), repr(float(s))])
    beta, gamma = series.fitted_exponents
    payload = {
        "p": params.p, "sigma": params.sigma,
        "horizon": series.horizon,
        "classification": series.classification,
        "fitted_beta": beta, "fitted_gamma": gamma,
        "fit_error": series.fit_error,
        "partial_sum": float(series.partial_sums[-1]),
        "exponent_identity": list(crit.exponent_identity(params)),
        "terms_csv": terms_path,
        "cut_series": None, "dyadic": None,
        "cut_volume_margin": None, "midrange": None,
    }
    if graph is not None:
        profile = ball_profile(graph)
        R = profile.R_max
        if R >= 1:
            s_terms = crit.cut_series_terms(profile.b, params, R)
            cut = {
                "R": R,
                "terms": s_terms,
                "sum_truncated": float(s_terms[np.isfinite(s_terms)].sum()),
                "has_infinite_terms": bool(np.any(~np.isfinite(s_terms))),
                "tail_extrapolation": None,
            }
            if R >= 4:
                tail = crit.extrapolate_cut_tail(profile.b, params, R)
                cut["tail_extrapolation"] = asdict(tail)
            payload["cut_series"] = cut
            blocks = crit.dyadic_blocks(profile.M, params)
            payload["dyadic"] = {
                "N": blocks.N, "D": blocks.D,
                "block_sum": blocks.block_sum, "ratio": blocks.ratio,
                "c_theory": blocks.c_theory,
            }
            payload["cut_volume_margin"] = crit.cut_volume_check(profile)
            if R >= 4:
                payload["midrange"] = [asdict(row) for row in
                                       crit.midrange_cut_bound(profile, params, R)]
    return payload


def _cmd_criterion(args) -> int:
    params = ExponentParams(p=args.p, sigma=args.sigma)
    if args.graph is not None:
        graph = load_graph(args.graph)
        W = ball_profile(graph).W
    else:
        graph = None
        W = _load_profile_csv(args.profile)
    terms_path = args.out_prefix + ".terms.csv"
    payload = _criterion_payload(graph, W, params, args.horizon, terms_path)
    payload["source"] = {"graph": args.graph, "profile": args.profile}
    out = args.out_prefix + ".json"
    _dump_json(out, payload)
    _print_json({"out": out, "terms_csv": terms_path,
                 "classification": payload["classification"]})
    return 0


def _cmd_verify(args) -> int:
    reports = run_suites(args.suite, trials=args.trials, seed=args.seed)
    payload = {
        "suites": [{
            "name": rep.name, "trials": rep.trials,
            "violations": rep.violations, "worst_margin": rep.worst_margin,
            "ok": rep.ok, "details": rep.details,
        } for rep in reports],
        "ok": all(rep.ok for rep in reports),
    }
    _print_json(payload)
    return 0 if payload["ok"] else 1


def _cmd_report(args) -> int:
    graph = load_graph(args.graph)
    profile = ball_profile(graph)
    params = ExponentParams(p=args.p, sigma=args.sigma)
    radii = _parse_int_list(args.R)
    if any(R < 0 or R > profile.R_max for R in radii):
        raise ValueError(f"radii must lie in [0, {profile.R_max}]")

    shoot_info: dict
    shot = None
    try:
        for u0 in DEFAULT_SHOOT_STARTS:
            attempt = shoot_radial_supersolution(graph, params, u0,
                                                 profile=profile)
            if attempt.success:
                shot = attempt
                shoot_info = {"success": True, "u0": u0,
                              "interior_radius": attempt.interior_radius,
                              "worst_defect": attempt.worst_defect}
                break
        else:
            shoot_info = {"success": False,
                          "break_radius": attempt.break_radius,
                          "tried_u0": list(DEFAULT_SHOOT_STARTS)}
    except ValueError as exc:
        shoot_info = {"success": False, "reason": str(exc)}

    ladder = []
    for R in radii:
        green = solve_green(graph, profile, R, params.p)
        row = {
            "R": R,
            "g_center": float(green.values.values[green.center]),
            "residual": green.residual,
            "iterations": green.solver_report.total_iterations,
            "normalization_dev": green_normalization_check(
                graph, green, trials=100, seed=args.seed),
            "capacity_center": capacity(graph, profile, [green.center],
                                        R, params.p),
            "L": compute_L(graph, profile, green, params.sigma),
        }
        flow = orient_flow(graph, profile, green)
        structural = flow_checks(graph, profile, flow)
        measure = decompose_paths(flow)
        chain = empirical_lower_bound(graph, profile, green, flow, measure,
                                      params)
        row.update({
            "retained_edges": flow.edge_count,
            "path_count": len(measure),
            "probability_sum": float(measure.probabilities.sum()),
            "max_marginal_deviation": float(
                np.abs(edge_marginals(flow, measure) - flow.theta).max()),
            "conservation_defect": structural["conservation_defect"],
            "lower_bound": chain.rhs,
            "chain_ok": chain.ok,
            "chain": _check_rows(chain.checks),
            "upper_bound": None,
        })
        if shot is not None and R <= shot.interior_radius:
            _, upper = sandwich_upper_bound(graph, profile, green,
                                            shot.values, params)
            row["upper_bound"] = upper
        ladder.append(row)

    probe = None
    if len(radii) >= 3 and all(b > a for a, b in zip(radii, radii[1:])):
        pr = parabolicity_probe(graph, profile, params.p, radii)
        probe = {"radii": pr.radii, "g_root": pr.g_root,
                 "cap_root": pr.cap_root, "increments": pr.increments,
                 "label": pr.label}

    terms_path = args.out_prefix + ".terms.csv"
    criterion_payload = _criterion_payload(graph, profile.W, params,
                                           args.horizon, terms_path)

    suite_reports = run_suites("all", trials=args.trials, seed=args.seed)
    payload = {
        "graph": {"path": args.graph, "vertex_count": graph.vertex_count,
                  "edge_count": graph.edge_count, "root": graph.root,
                  "eccentricity": profile.eccentricity},
        "p": params.p, "sigma": params.sigma, "seed": args.seed,
        "shoot": shoot_info,
        "ladder": ladder,
        "probe": probe,
        "criterion": criterion_payload,
        "verify": [{
            "name": rep.name, "trials": rep.trials,
            "violations": rep.violations, "worst_margin": rep.worst_margin,
            "ok": rep.ok,
        } for rep in suite_reports],
        "ok": (all(rep.ok for rep in suite_reports)
               and all(row["chain_ok"] for row in ladder)),
    }
    json_path = args.out_prefix + ".json"
    _dump_json(json_path, payload)

    csv_path = args.out_prefix + ".csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["R", "g_center", "residual", "capacity_center", "L",
                         "lower_bound", "upper_bound", "path_count",
                         "conservation_defect"])
        for row in ladder:
            upper = "" if row["upper_bound"] is None else repr(float(row["upper_bound"]))
            writer.writerow([row["R"], repr(float(row["g_center"])),
                             repr(float(row["residual"])),
                             repr(float(row["capacity_center"])),
                             repr(float(row["L"])),
                             repr(float(row["lower_bound"])), upper,
                             row["path_count"],
                             repr(float(row["conservation_defect"]))])
    _print_json({"out": json_path, "csv": csv_path, "ok": payload["ok"]})
    return 0 if payload["ok"] else 1


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="p-potential",
        description="Discrete nonlinear potential theory on weighted graphs: "
                    "Green functions, unit currents, path decompositions, and "
                    "volume-growth series reports.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a graph file")
    gen.add_argument("--family", required=True,
                     choices=["lattice", "tree", "radial"])
    gen.add_argument("--dimension", type=int, default=1)
    gen.add_argument("--half-side", type=int, default=8, dest="half_side")
    gen.add_argument("--branching", type=int, default=2)
    gen.add_argument("--depth", type=int, default=4)
    gen.add_argument("--sphere-sizes", default="1,2,4", dest="sphere_sizes",
                     help="comma-separated sphere sizes, first must be 1")
    gen.add_argument("--weights", default="1,1",
                     help="comma-separated radial edge weights")
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=_cmd_gen)

    green = sub.add_parser("green", help="solve one ball Dirichlet problem")
    green.add_argument("--graph", required=True)
    green.add_argument("--R", type=int, required=True)
    green.add_argument("--p", type=float, required=True)
    green.add_argument("--center", type=int, default=None)
    green.add_argument("--out", required=True,
                       help="CSV output path; a JSON sidecar lands beside it")
    green.set_defaults(func=_cmd_green)

    flow = sub.add_parser("flow", help="orient and decompose the unit current")
    flow.add_argument("--graph", required=True)
    flow.add_argument("--R", type=int, required=True)
    flow.add_argument("--p", type=float, required=True)
    flow.add_argument("--sigma", type=float, required=True)
    flow.add_argument("--out-prefix", default="flow", dest="out_prefix")
    flow.set_defaults(func=_cmd_flow)

    criterion = sub.add_parser("criterion", help="series report")
    group = criterion.add_mutually_exclusive_group(required=True)
    group.add_argument("--graph")
    group.add_argument("--profile", help="CSV with header n,W")
    criterion.add_argument("--p", type=float, required=True)
    criterion.add_argument("--sigma", type=float, required=True)
    criterion.add_argument("--horizon", type=int, default=10_000)
    criterion.add_argument("--out-prefix", default="criterion",
                           dest="out_prefix")
    criterion.set_defaults(func=_cmd_criterion)

    verify = sub.add_parser("verify", help="run property suites")
    verify.add_argument("--suite", default="all",
                        choices=["picone", "hardy", "positivity", "sandwich",
                                 "all"])
    verify.add_argument("--trials", type=int, default=100_000)
    verify.add_argument("--seed", type=int, default=0)
    verify.set_defaults(func=_cmd_verify)

    report = sub.add_parser("report", help="full pipeline over a radius ladder")
    report.add_argument("--graph", required=True)
    report.add_argument("--p", type=float, required=True)
    report.add_argument("--sigma", type=float, required=True)
    report.add_argument("--R", required=True,
                        help="comma-separated radius ladder, e.g. 2,4,6")
    report.add_argument("--horizon", type=int, default=10_000)
    report.add_argument("--trials", type=int, default=10_000)
    report.add_argument("--seed", type=int, default=0)
    report.add_argument("--out-prefix", default="report", dest="out_prefix")
    report.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PotentialError, ValueError, OSError) as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)},
                  sys.stderr, sort_keys=True)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
