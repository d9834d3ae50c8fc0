"""Command-line front end.

Subcommands: ``simulate`` a scenario file, ``reproduce`` shipped
presets, ``design-dac`` a consensus filter, ``analyze-graph`` a
coupling topology, ``check-spr`` a transfer function.

Exit codes are fixed for CI use: 0 success, 1 bad usage or
configuration, 2 simulation divergence, 3 infeasible design or failed
verification/metric.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, parse_scenario
from .dac import (
    build_dac_network,
    check_closed_loop_stability,
    check_divisibility,
    check_generator_match,
    design_dac_filter,
)
from .exosystem import SignalSpec
from .lti import InfeasibleDesignError, Polynomial, TransferFunction, is_spr, max_spr_epsilon
from .netgraph import (
    WeightedGraph,
    algebraic_connectivity,
    bfs_reachable,
    build_laplacian,
    is_connected,
    symmetric_eigenvalues,
)
from .agents import goodwin_iofp_gain, hill_max_slope, sync_condition_holds
from .presets import (
    PRESET_ALIASES,
    PRESET_IDS,
    evaluate_preset,
    load_preset,
    reference_preset,
    resolve_preset_id,
)
from .sim import Scenario, SimulationDivergenceError, simulate, sync_error, trace_to_csv

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DIVERGED = 2
EXIT_INFEASIBLE = 3


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _output_root(flag_value: str | None) -> Path:
    if flag_value:
        return Path(flag_value)
    env = os.environ.get("SYNCNET_OUT")
    if env:
        return Path(env)
    return Path("syncnet_out")


def _write_summary(path: Path, lines) -> None:
    path.write_text("\n".join(lines) + "\n")


def _scenario_outputs(scenario: Scenario, out_dir: Path, svg: bool) -> list[str]:
    trace = simulate(scenario)
    out_dir.mkdir(parents=True, exist_ok=True)
    trace_to_csv(trace, out_dir / "trace.csv")
    _, late = sync_error(trace)
    lines = [
        f"scenario: {scenario.name or '(unnamed)'}",
        f"nodes: {scenario.n_nodes}",
        f"mode: {scenario.controller.mode}",
        f"t_end: {scenario.t_end:g}  dt: {scenario.dt:g}",
        f"late sync error (trailing 20%): {late:.6g}",
    ]
    if trace.target is not None:
        from .sim import tracking_error

        lines.append(f"late tracking error: {tracking_error(trace):.6g}")
    if svg:
        from .plotting import trace_svg

        trace_svg(trace, out_dir / "trace.svg")
    _write_summary(out_dir / "summary.txt", lines)
    return lines


def _cmd_simulate(args) -> int:
    path = Path(args.scenario)
    try:
        text = path.read_text()
    except OSError as exc:
        print(f"cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        scenario = parse_scenario(text)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    overrides = {}
    if args.dt is not None:
        overrides["dt"] = args.dt
    if args.t_end is not None:
        overrides["t_end"] = args.t_end
    if args.states:
        overrides["record_states"] = True
    if overrides:
        from dataclasses import replace

        try:
            scenario = replace(scenario, **overrides)
        except ValueError as exc:
            print(f"invalid override: {exc}", file=sys.stderr)
            return EXIT_USAGE
    out_dir = _output_root(args.out) / (scenario.name or path.stem)
    try:
        lines = _scenario_outputs(scenario, out_dir, args.svg)
    except SimulationDivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    for line in lines:
        print(line)
    print(f"outputs written to {out_dir}")
    return EXIT_OK


def _run_one_preset(pid: str, out_root: str, svg: bool):
    """Run one preset plus its reference; returns (pid, passed, lines).

    Top-level shape keeps this callable picklable for process pools.
    """
    scenario = load_preset(pid)
    trace = simulate(scenario)
    ref_id = reference_preset(pid)
    reference = simulate(load_preset(ref_id)) if ref_id else None
    report = evaluate_preset(pid, trace, reference)
    out_dir = Path(out_root) / pid
    out_dir.mkdir(parents=True, exist_ok=True)
    trace_to_csv(trace, out_dir / "trace.csv")
    if svg:
        from .plotting import trace_svg

        trace_svg(trace, out_dir / "trace.svg")
    lines = list(report.lines) + [f"{pid}: {'PASS' if report.passed else 'FAIL'}"]
    _write_summary(out_dir / "summary.txt", lines)
    return pid, report.passed, lines


def _cmd_reproduce(args) -> int:
    if args.preset == "all":
        pids = list(PRESET_IDS)
    else:
        try:
            pids = [resolve_preset_id(args.preset)]
        except KeyError as exc:
            print(exc.args[0], file=sys.stderr)
            return EXIT_USAGE
    out_root = _output_root(args.out)
    results = []
    try:
        if args.jobs > 1 and len(pids) > 1:
            from concurrent.futures import ProcessPoolExecutor

            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                futures = [
                    pool.submit(_run_one_preset, pid, str(out_root), args.svg)
                    for pid in pids
                ]
                results = [f.result() for f in futures]
        else:
            # Sequential runs share reference traces between presets.
            traces = {}
            for pid in pids:
                scenario = load_preset(pid)
                traces[pid] = simulate(scenario)
            for pid in pids:
                ref_id = reference_preset(pid)
                reference = traces.get(ref_id) if ref_id else None
                if ref_id and reference is None:
                    reference = simulate(load_preset(ref_id))
                report = evaluate_preset(pid, traces[pid], reference)
                out_dir = out_root / pid
                out_dir.mkdir(parents=True, exist_ok=True)
                trace_to_csv(traces[pid], out_dir / "trace.csv")
                if args.svg:
                    from .plotting import trace_svg

                    trace_svg(traces[pid], out_dir / "trace.svg")
                lines = list(report.lines) + [
                    f"{pid}: {'PASS' if report.passed else 'FAIL'}"
                ]
                _write_summary(out_dir / "summary.txt", lines)
                results.append((pid, report.passed, lines))
    except SimulationDivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED

    all_passed = True
    for pid, passed, lines in results:
        for line in lines:
            print(f"[{pid}] {line}")
        all_passed = all_passed and passed
    print(f"outputs written to {out_root}")
    return EXIT_OK if all_passed else EXIT_INFEASIBLE


def _parse_cli_graph(args) -> WeightedGraph:
    if args.edge:
        edges = []
        n_max = 0
        for text in args.edge:
            parts = text.split(",")
            if len(parts) not in (3, 4):
                raise ValueError(f"edge {text!r} is not i,j,w or i,j,wp,wn")
            i, j = int(parts[0]), int(parts[1])
            w = float(parts[2])
            edges.append((i - 1, j - 1, w))
            n_max = max(n_max, i, j)
        n = args.nodes or n_max
        return WeightedGraph(n, tuple(edges))
    n = args.cycle or 4
    return WeightedGraph.cycle(n)


def _cmd_design_dac(args) -> int:
    try:
        spec = SignalSpec(args.constant, tuple(args.omega))
    except ValueError as exc:
        print(f"signal class: {exc}", file=sys.stderr)
        return EXIT_USAGE
    filter_num = Polynomial(args.numerator) if args.numerator else None
    try:
        graph = _parse_cli_graph(args)
    except ValueError as exc:
        print(f"graph: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        design = design_dac_filter(spec, filter_num=filter_num, epsilon=args.epsilon)
    except (InfeasibleDesignError, ValueError) as exc:
        print(f"design infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE

    lap = build_laplacian(graph)
    div_ok = check_divisibility(design)
    gen_ok = check_generator_match(design)
    stability = check_closed_loop_stability(design, lap)
    bound = max_spr_epsilon(design.filter_num, design.signal_den)

    print(f"signal class polynomial: {design.signal_den.coeffs.tolist()} (ascending)")
    print(f"filter numerator:        {design.filter_num.coeffs.tolist()} (ascending)")
    print(f"filter denominator:      {design.node_tf.den.coeffs.tolist()} (ascending)")
    print(f"epsilon: {design.epsilon:g}   (strictly positive real up to ~{bound:.4g})")
    print(f"positive-realness margin: min real part {design.spr.min_real_part:.4g}")
    print(f"internal-model divisibility: {'pass' if div_ok else 'FAIL'}")
    print(f"generator matches signal class: {'pass' if gen_ok else 'FAIL'}")
    print(
        "closed-loop stability at eigenvalues "
        f"{[f'{v:.4g}' for v in stability.eigenvalues]}: "
        f"{'pass' if stability.ok else 'FAIL'}"
    )
    if stability.marginal:
        print(f"  marginal at: {list(stability.marginal)}")
    if stability.unstable:
        print(f"  unstable at: {list(stability.unstable)}")
    if div_ok and gen_ok and stability.ok:
        return EXIT_OK
    return EXIT_INFEASIBLE


def _cmd_analyze_graph(args) -> int:
    if args.scenario:
        try:
            scenario = parse_scenario(Path(args.scenario).read_text())
        except OSError as exc:
            print(f"cannot read scenario: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except ConfigError as exc:
            print(exc, file=sys.stderr)
            return EXIT_USAGE
        graph = scenario.graph_im if args.family == "im" else scenario.graph_p
        if graph is None:
            print("scenario has no coupling graph", file=sys.stderr)
            return EXIT_USAGE
        agent = scenario.agent
    else:
        try:
            graph = _parse_cli_graph(args)
        except ValueError as exc:
            print(f"graph: {exc}", file=sys.stderr)
            return EXIT_USAGE
        agent = None

    lap = build_laplacian(graph)
    eigs = symmetric_eigenvalues(lap.matrix)
    mu2 = algebraic_connectivity(lap)
    connected = is_connected(lap)
    reach = bfs_reachable(graph)
    print(f"nodes: {graph.n_nodes}   edges: {len(graph.edges)}")
    print(f"Laplacian eigenvalues: {[f'{v:.6g}' for v in eigs]}")
    print(f"algebraic connectivity: {mu2:.6g}")
    print(f"connected (spectral test): {'yes' if connected else 'no'}")
    if not bool(reach.all()) and connected:
        print("warning: spectral and breadth-first tests disagree")
    if not connected:
        missing = [str(i + 1) for i in np.nonzero(~reach)[0]]
        if missing:
            print(f"nodes unreachable from node 1: {', '.join(missing)}")
    if agent is not None and agent.kind == "goodwin":
        gain = goodwin_iofp_gain(agent.goodwin, hill_max_slope(agent.goodwin.hill_p))
        holds = sync_condition_holds(gain, mu2)
        print(
            f"passivity gain {gain:.6g} + connectivity {mu2:.6g} > 0: "
            f"{'yes' if holds else 'NO'}"
        )
    return EXIT_OK


def _cmd_check_spr(args) -> int:
    try:
        tf = TransferFunction(Polynomial(args.num), Polynomial(args.den))
        verdict = is_spr(tf)
    except (ValueError, ZeroDivisionError) as exc:
        print(f"invalid transfer function: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"strictly positive real: {'yes' if verdict.ok else 'no'} ({verdict.reason})")
    if verdict.critical_omega is not None:
        print(
            f"worst real part {verdict.min_real_part:.6g} "
            f"near omega = {verdict.critical_omega:.6g}"
        )
    return EXIT_OK if verdict.ok else EXIT_INFEASIBLE


def build_parser() -> _Parser:
    parser = _Parser(prog="syncnet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a scenario TOML file")
    p_sim.add_argument("scenario", help="path to a scenario file")
    p_sim.add_argument("--out", help="output directory (default: $SYNCNET_OUT or ./syncnet_out)")
    p_sim.add_argument("--dt", type=float, help="override the step size")
    p_sim.add_argument("--t-end", type=float, dest="t_end", help="override the horizon")
    p_sim.add_argument("--svg", action="store_true", help="also write trace.svg")
    p_sim.add_argument("--states", action="store_true", help="record full agent states")
    p_sim.set_defaults(func=_cmd_simulate)

    p_rep = sub.add_parser("reproduce", help="run shipped presets and judge their metrics")
    p_rep.add_argument(
        "preset",
        help=f"one of {', '.join(PRESET_IDS)}, an alias "
        f"({', '.join(sorted(PRESET_ALIASES))}), or 'all'",
    )
    p_rep.add_argument("--out", help="output directory (default: $SYNCNET_OUT or ./syncnet_out)")
    p_rep.add_argument("--svg", action="store_true", help="also write trace.svg files")
    p_rep.add_argument("--jobs", type=int, default=1, help="parallel preset runs")
    p_rep.set_defaults(func=_cmd_reproduce)

    p_dac = sub.add_parser("design-dac", help="design and verify a consensus filter")
    p_dac.add_argument("--constant", action="store_true", help="signal class includes constants")
    p_dac.add_argument(
        "--omega", type=float, nargs="*", default=[], help="sinusoid frequencies in the class"
    )
    p_dac.add_argument(
        "--numerator",
        type=float,
        nargs="+",
        help="filter numerator coefficients, ascending (default (s+0.4)^(m-1))",
    )
    p_dac.add_argument("--epsilon", type=float, help="singular-perturbation parameter")
    p_dac.add_argument("--cycle", type=int, help="use a cycle graph of this size (default 4)")
    p_dac.add_argument("--nodes", type=int, help="node count when giving explicit edges")
    p_dac.add_argument(
        "--edge", action="append", default=[], help="edge as i,j,w (repeatable, 1-based)"
    )
    p_dac.set_defaults(func=_cmd_design_dac)

    p_gr = sub.add_parser("analyze-graph", help="connectivity and spectrum of a coupling graph")
    p_gr.add_argument("scenario", nargs="?", help="scenario file to read the graph from")
    p_gr.add_argument(
        "--family", choices=("p", "im"), default="p", help="which coupling family to analyze"
    )
    p_gr.add_argument("--cycle", type=int, help="analyze a cycle graph of this size")
    p_gr.add_argument("--nodes", type=int, help="node count when giving explicit edges")
    p_gr.add_argument(
        "--edge", action="append", default=[], help="edge as i,j,w (repeatable, 1-based)"
    )
    p_gr.set_defaults(func=_cmd_analyze_graph)

    p_spr = sub.add_parser("check-spr", help="strict positive-realness of num/den")
    p_spr.add_argument(
        "--num", type=float, nargs="+", required=True, help="numerator coefficients, ascending"
    )
    p_spr.add_argument(
        "--den", type=float, nargs="+", required=True, help="denominator coefficients, ascending"
    )
    p_spr.set_defaults(func=_cmd_check_spr)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
