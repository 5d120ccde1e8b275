"""Command-line driver.

Every subcommand reads an optional ``--config`` INI file plus ``--set key=value``
overrides and writes CSV or JSON to stdout or ``--out``.  Exit codes: 0 on
success, 2 when a resource cap is hit, 3 for invalid configuration.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, dump_config, load_config
from .counting import MeasurementSource, adaptive_count, exact_target_source, state_source
from .dynamics import FullEngine, SubspaceEngine, find_aqo_time, grover_steps_needed, run_aqo, run_grover
from .errors import ResourceCapError
from .gatecost import GateCostModel, circuit_costs
from .omcs import omcs_estimate, trials_csv
from .problem import (
    Graph,
    SpectrumSummary,
    WeightModel,
    build_edge_cover_hamiltonian,
    dp_spectrum_path_and_ladder,
    enumerate_spectrum,
    generate_graph,
    ground_states,
    read_graph,
)
from .qaoa import min_constant_depth, optimize_constant_angles, run_qaoa_fixed, run_qaoa_greedy
from .studies import (
    aqo_bound_study,
    aqo_family_study,
    cost_study,
    grover_time_window,
    qaoa_family_study,
    qaoa_grover_ratio_study,
    random_ensemble,
)
from .symspace import (
    SymmetricSubspace,
    aqo_time_bound,
    beta_star_window,
    min_gap_closed_form,
    min_gap_over_schedule,
    spectrum_scan_csv,
)

EXIT_OK = 0
EXIT_CAP = 2
EXIT_CONFIG = 3


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def build_graph(cfg: ExperimentConfig) -> Graph:
    if cfg.graph_file:
        return read_graph(cfg.graph_file)
    params = {k: getattr(cfg, k) for k in ("edges", "columns", "vertices") if getattr(cfg, k) is not None}
    if cfg.graph_kind == "random_mean_degree":
        params["degree"] = cfg.degree
    return generate_graph(cfg.graph_kind, seed=cfg.graph_seed, **params)


def build_problem(cfg: ExperimentConfig):
    g = build_graph(cfg)
    if g.edge_count > cfg.exhaustive_limit:
        raise ResourceCapError(f"{g.edge_count} edges exceeds exhaustive_limit={cfg.exhaustive_limit}")
    h = build_edge_cover_hamiltonian(g)
    m = WeightModel.bernoulli(g.edge_count, cfg.weight_q)
    return g, h, m


def build_engine(cfg: ExperimentConfig, h, m):
    if cfg.engine == "full":
        return FullEngine(h, m, limit=cfg.exhaustive_limit)
    return SubspaceEngine.from_spectrum(enumerate_spectrum(h, m, limit=cfg.exhaustive_limit))


def emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def header(lines) -> str:
    return "".join(f"# {line}\n" for line in lines)


def evolve(cfg: ExperimentConfig, engine, observe=None):
    """Run the configured algorithm and return its RunRecord."""
    target = 1.0 - cfg.eta2
    if cfg.algorithm == "grover":
        steps = cfg.steps if cfg.steps is not None else grover_steps_needed(engine.P, cfg.eta)
        return run_grover(engine, steps, observe=observe)
    if cfg.algorithm == "aqo":
        if cfg.total_time is not None:
            T = cfg.total_time
        else:
            T = find_aqo_time(engine, cfg.eta, cfg.dt, refine=cfg.refine, schedule=cfg.schedule,
                              max_doublings=cfg.aqo_max_doublings) * cfg.dt
        return run_aqo(engine, T, cfg.dt, cfg.schedule, observe=observe)
    if cfg.algorithm == "qaoa-greedy":
        return run_qaoa_greedy(engine, target, cap=cfg.qaoa_cap, grid=cfg.grid, sweeps=cfg.sweeps, observe=observe)
    if cfg.algorithm == "qaoa-constant":
        if cfg.alpha is not None and cfg.beta is not None:
            alpha, beta = cfg.alpha * math.pi, cfg.beta * math.pi
        elif cfg.steps is not None:
            alpha, beta, _ = optimize_constant_angles(engine, cfg.steps, grid=cfg.grid, sweeps=cfg.sweeps)
        else:
            depth, alpha, beta, _ = min_constant_depth(engine, target, cap=cfg.qaoa_cap, grid=cfg.grid,
                                                       sweeps=cfg.sweeps)
            return run_qaoa_fixed(engine, alpha, beta, depth=depth, observe=observe)
        if cfg.steps is not None:
            return run_qaoa_fixed(engine, alpha, beta, depth=cfg.steps, observe=observe)
        return run_qaoa_fixed(engine, alpha, beta, target=target, cap=cfg.qaoa_cap, observe=observe)
    raise ConfigError(f"algorithm {cfg.algorithm!r} has no evolution")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_gen_graph(cfg: ExperimentConfig, args) -> int:
    emit(build_graph(cfg).to_text(), args.out)
    return EXIT_OK


def cmd_brute_force(cfg: ExperimentConfig, args) -> int:
    g, h, m = build_problem(cfg)
    spec = enumerate_spectrum(h, m, max_moment=cfg.max_moment, limit=cfg.exhaustive_limit)
    ground = ground_states(h)
    lines = [
        f"exhaustive spectrum of the edge-cover Hamiltonian: {g.vertex_count} vertices, {g.edge_count} edges, q={cfg.weight_q!r}",
        f"ground_states = {ground.size}",
        f"P = {spec.P!r}",
        f"P2 = {spec.P2!r}",
    ]
    emit(header(lines) + spec.to_csv(), args.out)
    return EXIT_OK


def cmd_spectrum_dp(cfg: ExperimentConfig, args) -> int:
    if cfg.edges is None:
        raise ConfigError("spectrum-dp needs edges")
    kind = "path" if cfg.family in ("linear", "path") else cfg.family
    spec = dp_spectrum_path_and_ladder(kind, cfg.edges, cfg.weight_q, cfg.max_moment)
    lines = [f"transfer-matrix spectrum for the {cfg.family} family, {cfg.edges} edges, q={cfg.weight_q!r}",
             f"P = {spec.P!r}", f"P2 = {spec.P2!r}"]
    emit(header(lines) + spec.to_csv(), args.out)
    return EXIT_OK


def _spectrum_for(cfg: ExperimentConfig) -> SpectrumSummary:
    if cfg.graph_kind in ("linear", "grid2xn") and cfg.graph_file is None and cfg.edges is not None:
        kind = "path" if cfg.graph_kind == "linear" else "grid2xn"
        return dp_spectrum_path_and_ladder(kind, cfg.edges, cfg.weight_q, cfg.max_moment)
    _, h, m = build_problem(cfg)
    return enumerate_spectrum(h, m, cfg.max_moment, limit=cfg.exhaustive_limit)


def cmd_gap_scan(cfg: ExperimentConfig, args) -> int:
    s = SymmetricSubspace.from_spectrum(_spectrum_for(cfg))
    gap, beta_star = min_gap_over_schedule(s, cfg.schedule, cfg.resolution)
    lo, hi = beta_star_window(s)
    lines = [
        f"symmetric-subspace spectrum along the {cfg.schedule} schedule, q={cfg.weight_q!r}",
        f"P = {s.P!r}",
        f"min_gap = {gap!r}",
        f"beta_star = {beta_star!r}",
        f"beta_star_window = [{lo!r}, {hi!r}]",
    ]
    if s.dimension >= 2:
        lines += [f"min_gap_closed_form = {min_gap_closed_form(s)!r}",
                  f"aqo_time_bound = {aqo_time_bound(s, cfg.eta)!r}"]
    betas = np.linspace(0.0, 1.0, cfg.resolution)
    emit(header(lines) + spectrum_scan_csv(s, betas, cfg.schedule), args.out)
    return EXIT_OK


def cmd_run(cfg: ExperimentConfig, args) -> int:
    if cfg.algorithm == "omcs":
        return cmd_omcs(cfg, args)
    g, h, m = build_problem(cfg)
    per_state = cfg.per_state
    engine = FullEngine(h, m, limit=cfg.exhaustive_limit) if (per_state or cfg.engine == "full") else build_engine(cfg, h, m)
    ground = ground_states(h)
    trace = []
    observe = (lambda step, psi: trace.append(np.abs(psi[ground]) ** 2)) if per_state else None
    rec = evolve(cfg, engine, observe)
    lines = [f"{cfg.algorithm} on {g.vertex_count} vertices / {g.edge_count} edges, q={cfg.weight_q!r}, engine={engine.kind}",
             f"steps = {rec.steps}", f"final_occupation = {rec.final!r}"]
    lines += [f"{k} = {v}" for k, v in sorted(rec.meta.items()) if k != "engine"]
    body = rec.to_csv(angles_in_pi=cfg.algorithm.startswith("qaoa"))
    if per_state:
        rows = body.splitlines()
        rows[0] += "," + ",".join(f"state_{int(gs)}" for gs in ground)
        for k in range(1, len(rows)):
            rows[k] += "," + ",".join(repr(float(x)) for x in trace[k - 1])
        lines.append("ground-state weights: " + " ".join(f"{int(gs)}:{float(m.weight_of(gs))!r}" for gs in ground))
        body = "\n".join(rows) + "\n"
    emit(header(lines) + body, args.out)
    return EXIT_OK


def _evolved_source(cfg: ExperimentConfig, h, m) -> MeasurementSource:
    engine = FullEngine(h, m, limit=cfg.exhaustive_limit)
    psi_holder = []
    rec = evolve(cfg, engine, observe=lambda step, psi: psi_holder.append(psi) if step else None)
    psi = psi_holder[-1] if psi_holder else engine.initial()
    return state_source(psi, h, m, steps_per_run=rec.steps)


def cmd_count(cfg: ExperimentConfig, args) -> int:
    if cfg.algorithm == "omcs":
        return cmd_omcs(cfg, args)
    _, h, m = build_problem(cfg)
    source = exact_target_source(h, m) if cfg.source == "exact" else _evolved_source(cfg, h, m)
    try:
        est = adaptive_count(source, cfg.epsilon, cfg.delta, seed=cfg.seed, M=cfg.M, S=cfg.S,
                             budget=cfg.measurement_budget, statistic=cfg.statistic)
    except ResourceCapError as exc:
        partial = {"error": str(exc), "batches_collected": len(exc.partial or [])}
        emit(json.dumps(partial, sort_keys=True) + "\n", args.out)
        raise
    emit(est.to_json(indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_omcs(cfg: ExperimentConfig, args) -> int:
    _, h, m = build_problem(cfg)
    E0 = float(h.energies.min())
    results = []
    for k in range(cfg.trials):
        seed = cfg.seed + k
        results.append(omcs_estimate(h, m, cfg.epsilon, cfg.delta, np.random.default_rng(seed),
                                     ground_energy=E0, budget=cfg.omcs_budget, seed=seed))
    if cfg.trials == 1:
        emit(json.dumps(results[0].as_dict(), sort_keys=True, indent=2) + "\n", args.out)
    else:
        lines = [f"stopping-rule Monte Carlo trials, epsilon={cfg.epsilon}, delta={cfg.delta}, q={cfg.weight_q!r}"]
        emit(header(lines) + trials_csv(results), args.out)
    return EXIT_OK


def cmd_scaling_study(cfg: ExperimentConfig, args) -> int:
    sizes = cfg.size_list()
    q = cfg.weight_q
    if cfg.study == "aqo-family":
        result = aqo_family_study(cfg.family, sizes, q, cfg.eta, cfg.dt, cfg.aqo_max_doublings)
    elif cfg.study == "qaoa-family":
        result = qaoa_family_study(cfg.family, sizes, q, cfg.eta, cfg.qaoa_cap, cfg.grid)
    elif cfg.study == "qaoa-grover-ratio":
        P_min, P_max = grover_time_window(cfg.eta, cfg.grover_time_min, cfg.grover_time_max)
        ens = random_ensemble(cfg.instances, cfg.seed, edge_range=(min(sizes), max(sizes)), P_min=P_min, P_max=P_max)
        result = qaoa_grover_ratio_study(ens, cfg.eta, cfg.depth_limit, cfg.grid)
    elif cfg.study == "aqo-bound":
        ens = random_ensemble(cfg.instances, cfg.seed, edge_range=(min(sizes), max(sizes)), P_min=cfg.P_min, P_max=cfg.P_max)
        result = aqo_bound_study(ens, cfg.eta, cfg.dt, cfg.aqo_max_doublings)
    elif cfg.study == "cost":
        model = GateCostModel(cfg.ancilla_policy, cfg.c1, cfg.c2)
        result = cost_study(cfg.family, sizes, q, eta=cfg.eta, epsilon=cfg.epsilon, delta=cfg.delta, S=cfg.S,
                            model=model, grid=cfg.grid, cap=cfg.qaoa_cap)
    else:
        raise ConfigError(f"unknown study {cfg.study!r}")
    emit(result.to_csv(), args.out)
    return EXIT_OK


def cmd_gate_cost(cfg: ExperimentConfig, args) -> int:
    g = build_graph(cfg)
    model = GateCostModel(cfg.ancilla_policy, cfg.c1, cfg.c2)
    c = circuit_costs(g, model)
    text = header([f"gate-cost model {cfg.ancilla_policy}, c1={cfg.c1}, c2={cfg.c2}"])
    text += "vertices,edges,T_psi0,T_x,T_z\n"
    text += f"{g.vertex_count},{g.edge_count},{c.T_psi0!r},{c.T_x!r},{c.T_z!r}\n"
    emit(text, args.out)
    return EXIT_OK


def cmd_show_config(cfg: ExperimentConfig, args) -> int:
    emit(dump_config(cfg), args.out)
    return EXIT_OK


COMMANDS = {
    "gen-graph": (cmd_gen_graph, "write a graph in the 'v N' / 'e u w' text format"),
    "brute-force": (cmd_brute_force, "exhaustive spectrum and weighted ground-state count"),
    "spectrum-dp": (cmd_spectrum_dp, "transfer-matrix spectrum for path or 2 x n graphs"),
    "gap-scan": (cmd_gap_scan, "symmetric-subspace eigenvalues and minimum gap along the schedule"),
    "run": (cmd_run, "one Grover, AQO or QAOA evolution with its occupation trajectory"),
    "count": (cmd_count, "adaptive capture-recapture estimate of P"),
    "omcs": (cmd_omcs, "classical stopping-rule Monte Carlo estimate of P"),
    "scaling-study": (cmd_scaling_study, "depth, ratio, bound or cost studies across sizes"),
    "gate-cost": (cmd_gate_cost, "abstract gate counts for one evolution step"),
    "show-config": (cmd_show_config, "print the resolved configuration"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wgcount", description="Weighted ground-state counting experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", "-c", help="INI file with an [experiment] section")
        p.add_argument("--set", "-s", action="append", default=[], metavar="KEY=VALUE",
                       help="override one configuration key (repeatable)")
        p.add_argument("--out", "-o", help="output path (default stdout)")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handler = COMMANDS[args.command][0]
    try:
        cfg = load_config(args.config, args.set)
        return handler(cfg, args)
    except ResourceCapError as exc:
        print(f"wgcount: resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ConfigError, ValueError, KeyError, OSError) as exc:
        print(f"wgcount: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
