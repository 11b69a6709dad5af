"""Command-line interface.

Every subcommand reads inputs from files, writes its main table to the path
given by ``--output`` (CSV by default, ``--format json`` for a columns/rows
object), and writes a ``<output>.meta.json`` sidecar with the tool version,
the resolved options, sha256 digests of the inputs, and convergence
diagnostics, so any result can be audited and reproduced. ``fit`` writes a
single JSON document with the metadata embedded. All writes are atomic, no
output carries a timestamp, and rerunning a command with the same inputs
produces bit-identical files for any ``--threads`` setting.

Exit codes: 0 success, 1 validation or file errors, 2 usage errors,
3 non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from typing import Sequence

from . import __version__
from .domain import (
    EventPanel,
    ModelParams,
    load_network,
    load_panel,
    save_network,
    save_panel,
)
from .errors import CarpError, ConvergenceError, ValidationError
from .influence import category_influence, influence_matrix
from .meanfield import InitMode, ext_int_ratio, fixed_point, stationarity_residual, transition_fractions
from .mle import FitConfig, fit
from .montecarlo import SimulationConfig, simulate, temporal_influence
from .synth import generate_synthetic
from .utils import atomic_write_text, sha256_file

THREADS_ENV = "CARPNET_THREADS"


def _resolve_threads(value: int | None) -> int:
    if value is None:
        raw = os.environ.get(THREADS_ENV, "1")
        try:
            value = int(raw)
        except ValueError as exc:
            raise ValidationError(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ValidationError(f"threads must be at least 1, got {value}")
    return value


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return "" if value is None else str(value)


def _write_table(path: str, fmt: str, header: list[str], rows: list[list]) -> None:
    if fmt == "json":
        payload = {"columns": header, "rows": rows}
        atomic_write_text(path, json.dumps(payload, indent=2) + "\n")
        return
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    atomic_write_text(path, buffer.getvalue())


def _write_sidecar(output: str, meta: dict) -> None:
    atomic_write_text(str(output) + ".meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _meta(args: argparse.Namespace, inputs: dict[str, str], **extra) -> dict:
    meta = {
        "tool": "carpnet",
        "version": __version__,
        "command": args.command,
        "inputs": {name: sha256_file(path) for name, path in inputs.items()},
    }
    meta.update(extra)
    return meta


def _params(args: argparse.Namespace) -> ModelParams:
    return ModelParams(args.alpha, args.beta, args.gamma)


def _cmd_generate(args: argparse.Namespace) -> int:
    params = _params(args)
    network, panel = generate_synthetic(
        nodes=args.nodes,
        edges=args.edges,
        likelihood_range=tuple(args.likelihood_range),
        params=params,
        panel_length=args.panel_length,
        seed=args.seed,
        initial_state=args.initial_state,
    )
    if args.start_label:
        panel = EventPanel(panel.states, start_label=args.start_label)
    save_network(network, args.network_out)
    save_panel(panel, args.panel_out)
    _write_sidecar(
        args.panel_out,
        _meta(
            args,
            inputs={},
            options={
                "nodes": args.nodes,
                "edges": args.edges,
                "likelihood_range": list(args.likelihood_range),
                "alpha": params.alpha,
                "beta": params.beta,
                "gamma": params.gamma,
                "panel_length": args.panel_length,
                "seed": args.seed,
                "initial_state": args.initial_state,
            },
            outputs={"network": str(args.network_out), "panel": str(args.panel_out)},
        ),
    )
    return 0


def _cmd_fit(args: argparse.Namespace) -> int:
    network = load_network(args.network)
    panel = load_panel(args.panel)
    config = FitConfig(
        starts=args.starts,
        seed=args.seed,
        max_iter=args.max_iter,
        threads=_resolve_threads(args.threads),
    )
    init = ModelParams(args.init_alpha, args.init_beta, args.init_gamma)
    result = fit(panel, network, init=init, config=config)
    document = _meta(
        args,
        inputs={"network": args.network, "panel": args.panel},
        options={
            "starts": config.starts,
            "seed": config.seed,
            "max_iter": config.max_iter,
            "init": {"alpha": init.alpha, "beta": init.beta, "gamma": init.gamma},
        },
        result={
            "alpha": result.params.alpha,
            "beta": result.params.beta,
            "gamma": result.params.gamma,
            "log_likelihood": result.log_likelihood,
            "iterations": result.iterations,
            "converged": result.converged,
            "degenerate": result.degenerate,
            "n_starts": result.n_starts,
        },
    )
    atomic_write_text(args.output, json.dumps(document, indent=2, sort_keys=True) + "\n")
    if not result.converged:
        print("fit did not converge within the iteration budget", file=sys.stderr)
        return 3
    return 0


def _steady(args: argparse.Namespace, network, params: ModelParams):
    steady = fixed_point(
        network,
        params,
        tol=args.tol,
        max_iter=args.max_iter,
        init=InitMode(args.init),
        damping=args.damping,
    )
    if not steady.converged:
        raise ConvergenceError(
            f"fixed point not reached in {args.max_iter} iterations (residual {steady.residual:.3e})"
        )
    return steady


def _cmd_steady_state(args: argparse.Namespace) -> int:
    network = load_network(args.network)
    params = _params(args)
    steady = _steady(args, network, params)
    rows = [[r.id, r.name, float(steady.p_hat[r.id])] for r in network.risks]
    _write_table(args.output, args.format, ["risk", "name", "p_hat"], rows)
    _write_sidecar(
        args.output,
        _meta(
            args,
            inputs={"network": args.network},
            options=_solver_options(args),
            result={
                "iterations": steady.iterations,
                "residual": steady.residual,
                "stationarity_residual": stationarity_residual(steady.p_hat, network, params),
                "converged": steady.converged,
            },
        ),
    )
    return 0


def _solver_options(args: argparse.Namespace) -> dict:
    return {
        "alpha": args.alpha,
        "beta": args.beta,
        "gamma": args.gamma,
        "tol": args.tol,
        "max_iter": args.max_iter,
        "init": args.init,
        "damping": args.damping,
    }


def _cmd_transitions(args: argparse.Namespace) -> int:
    network = load_network(args.network)
    params = _params(args)
    steady = _steady(args, network, params)
    fractions = transition_fractions(steady, network, params)
    rows = []
    for r in network.risks:
        exact, taylor = ext_int_ratio(steady, network, params, r.id)
        rows.append(
            [
                r.id,
                r.name,
                r.category.value,
                float(fractions.a_int[r.id]),
                float(fractions.a_ext[r.id]),
                float(fractions.a_rec[r.id]),
                float(fractions.raw_int[r.id]),
                float(fractions.raw_ext[r.id]),
                float(fractions.raw_rec[r.id]),
                exact,
                taylor,
            ]
        )
    header = [
        "risk",
        "name",
        "category",
        "a_int",
        "a_ext",
        "a_rec",
        "raw_int",
        "raw_ext",
        "raw_rec",
        "ratio_exact",
        "ratio_taylor",
    ]
    _write_table(args.output, args.format, header, rows)
    share = fractions.a_int / (fractions.a_int + fractions.a_ext)
    _write_sidecar(
        args.output,
        _meta(
            args,
            inputs={"network": args.network},
            options=_solver_options(args),
            result={
                "iterations": steady.iterations,
                "residual": steady.residual,
                "mean_internal_share": float(share.mean()),
                "mean_ratio_exact": float(sum(row[9] for row in rows) / len(rows)),
                "mean_ratio_taylor": float(sum(row[10] for row in rows) / len(rows)),
            },
        ),
    )
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    network = load_network(args.network)
    params = _params(args)
    threads = _resolve_threads(args.threads)
    config = SimulationConfig(
        runs=args.runs,
        horizon=args.horizon,
        seed=args.seed,
        initial_state=args.initial_state,
        threads=threads,
    )
    trajectory = simulate(network, params, config)
    frequencies = trajectory.frequencies
    header = ["t"] + [f"risk_{r.id}" for r in network.risks]
    rows: list[list] = [[t] + [float(v) for v in frequencies[:, t]] for t in range(trajectory.horizon)]
    steady = fixed_point(network, params)
    if steady.converged:
        rows.append(["inf"] + [float(v) for v in steady.p_hat])
    else:
        print("mean-field solve did not converge, 'inf' row omitted", file=sys.stderr)
    _write_table(args.output, args.format, header, rows)
    _write_sidecar(
        args.output,
        _meta(
            args,
            inputs={"network": args.network},
            options={
                "alpha": params.alpha,
                "beta": params.beta,
                "gamma": params.gamma,
                "runs": config.runs,
                "horizon": config.horizon,
                "seed": config.seed,
                "initial_state": args.initial_state,
            },
            result={"meanfield_row": bool(steady.converged)},
        ),
    )
    return 0


def _cmd_temporal_influence(args: argparse.Namespace) -> int:
    network = load_network(args.network)
    params = _params(args)
    threads = _resolve_threads(args.threads)
    config = SimulationConfig(
        runs=args.runs,
        horizon=args.horizon,
        seed=args.seed,
        threads=threads,
    )
    result = temporal_influence(network, params, args.source, config, baseline=args.baseline)
    rows = []
    for t in range(config.horizon):
        rows.append(
            [
                t,
                float(result.one_hop[t]) if result.one_hop is not None else None,
                float(result.two_hop[t]) if result.two_hop is not None else None,
            ]
        )
    _write_table(args.output, args.format, ["t", "one_hop", "two_hop"], rows)
    _write_sidecar(
        args.output,
        _meta(
            args,
            inputs={"network": args.network},
            options={
                "alpha": params.alpha,
                "beta": params.beta,
                "gamma": params.gamma,
                "source": args.source,
                "runs": config.runs,
                "horizon": config.horizon,
                "seed": config.seed,
                "baseline": args.baseline,
            },
            result={
                "one_hop_ids": list(result.one_hop_ids),
                "two_hop_ids": list(result.two_hop_ids),
            },
        ),
    )
    return 0


def _cmd_influence(args: argparse.Namespace) -> int:
    network = load_network(args.network)
    params = _params(args)
    threads = _resolve_threads(args.threads)
    matrix = influence_matrix(network, params, tol=args.tol, max_iter=args.max_iter, threads=threads)
    rows = [
        [i, j, float(matrix.values[i, j])]
        for i in range(network.size)
        for j in range(network.size)
    ]
    _write_table(args.output, args.format, ["source", "target", "influence"], rows)
    _write_sidecar(
        args.output,
        _meta(
            args,
            inputs={"network": args.network},
            options={
                "alpha": params.alpha,
                "beta": params.beta,
                "gamma": params.gamma,
                "tol": args.tol,
                "max_iter": args.max_iter,
            },
        ),
    )
    return 0


def _cmd_category_influence(args: argparse.Namespace) -> int:
    network = load_network(args.network)
    params = _params(args)
    threads = _resolve_threads(args.threads)
    matrix = influence_matrix(network, params, tol=args.tol, max_iter=args.max_iter, threads=threads)
    aggregated = category_influence(matrix, network)
    rows = []
    for a, cat_a in enumerate(aggregated.categories):
        for b, cat_b in enumerate(aggregated.categories):
            rows.append(
                [
                    cat_a.value,
                    cat_b.value,
                    float(aggregated.raw[a, b]),
                    float(aggregated.normalized[a, b]),
                ]
            )
    _write_table(
        args.output, args.format, ["source_category", "target_category", "raw", "normalized"], rows
    )
    _write_sidecar(
        args.output,
        _meta(
            args,
            inputs={"network": args.network},
            options={
                "alpha": params.alpha,
                "beta": params.beta,
                "gamma": params.gamma,
                "tol": args.tol,
                "max_iter": args.max_iter,
            },
            result={"categories": [cat.value for cat in aggregated.categories]},
        ),
    )
    return 0


def _add_output_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--output", required=True, help="path for the result table")
    sub.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")


def _add_param_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--alpha", type=float, required=True, help="internal activation scale")
    sub.add_argument("--beta", type=float, required=True, help="external activation scale per neighbor")
    sub.add_argument("--gamma", type=float, required=True, help="continuation scale")


def _add_solver_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--tol", type=float, default=1e-10, help="fixed-point tolerance")
    sub.add_argument("--max-iter", type=int, default=100_000, help="fixed-point iteration cap")


def _add_steady_args(sub: argparse.ArgumentParser) -> None:
    _add_solver_args(sub)
    sub.add_argument(
        "--init", choices=[m.value for m in InitMode], default=InitMode.LIKELIHOODS.value,
        help="starting vector for the fixed-point iteration",
    )
    sub.add_argument("--damping", type=float, default=1.0, help="update damping in (0, 1]")


def _add_threads_arg(sub: argparse.ArgumentParser) -> None:
    sub.add_argument(
        "--threads", type=int, default=None,
        help=f"worker threads (default: ${THREADS_ENV} or 1); results do not depend on this",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="carpnet",
        description="Interdependent risk networks: fitting, steady states, cascades, influence.",
    )
    parser.add_argument("--version", action="version", version=f"carpnet {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    generate = commands.add_parser("generate", help="generate a synthetic network and panel")
    generate.add_argument("--nodes", type=int, required=True)
    generate.add_argument("--edges", type=int, required=True)
    generate.add_argument(
        "--likelihood-range", type=float, nargs=2, default=(0.3, 0.8), metavar=("LOW", "HIGH")
    )
    _add_param_args(generate)
    generate.add_argument("--panel-length", type=int, required=True, help="panel length in months")
    generate.add_argument("--seed", type=int, default=0)
    generate.add_argument("--initial-state", choices=("dormant", "active"), default="dormant")
    generate.add_argument("--start-label", default=None, help="calendar label YYYY-MM for month 0")
    generate.add_argument("--network-out", required=True)
    generate.add_argument("--panel-out", required=True)
    generate.set_defaults(handler=_cmd_generate)

    fit_cmd = commands.add_parser("fit", help="maximum-likelihood parameter fit from a panel")
    fit_cmd.add_argument("--network", required=True)
    fit_cmd.add_argument("--panel", required=True)
    fit_cmd.add_argument("--starts", type=int, default=5, help="random restarts beyond the init point")
    fit_cmd.add_argument("--seed", type=int, default=0)
    fit_cmd.add_argument("--max-iter", type=int, default=2000)
    fit_cmd.add_argument("--init-alpha", type=float, default=0.01)
    fit_cmd.add_argument("--init-beta", type=float, default=0.01)
    fit_cmd.add_argument("--init-gamma", type=float, default=1.0)
    _add_threads_arg(fit_cmd)
    fit_cmd.add_argument("--output", required=True, help="path for the result JSON")
    fit_cmd.set_defaults(handler=_cmd_fit)

    steady = commands.add_parser("steady-state", help="mean-field activation probabilities")
    steady.add_argument("--network", required=True)
    _add_param_args(steady)
    _add_steady_args(steady)
    _add_output_args(steady)
    steady.set_defaults(handler=_cmd_steady_state)

    transitions = commands.add_parser(
        "transitions", help="steady-state transition fractions per risk"
    )
    transitions.add_argument("--network", required=True)
    _add_param_args(transitions)
    _add_steady_args(transitions)
    _add_output_args(transitions)
    transitions.set_defaults(handler=_cmd_transitions)

    simulate_cmd = commands.add_parser("simulate", help="Monte Carlo activation frequencies")
    simulate_cmd.add_argument("--network", required=True)
    _add_param_args(simulate_cmd)
    simulate_cmd.add_argument("--runs", type=int, default=1000)
    simulate_cmd.add_argument("--horizon", type=int, default=120, help="number of recorded months")
    simulate_cmd.add_argument("--seed", type=int, default=0)
    simulate_cmd.add_argument("--initial-state", choices=("dormant", "active"), default="dormant")
    _add_threads_arg(simulate_cmd)
    _add_output_args(simulate_cmd)
    simulate_cmd.set_defaults(handler=_cmd_simulate)

    temporal = commands.add_parser(
        "temporal-influence", help="one-hop and two-hop influence curves of a source risk"
    )
    temporal.add_argument("--network", required=True)
    _add_param_args(temporal)
    temporal.add_argument("--source", type=int, required=True)
    temporal.add_argument("--runs", type=int, default=1000)
    temporal.add_argument("--horizon", type=int, default=120)
    temporal.add_argument("--seed", type=int, default=0)
    temporal.add_argument("--baseline", choices=("dormant", "steady"), default="dormant")
    _add_threads_arg(temporal)
    _add_output_args(temporal)
    temporal.set_defaults(handler=_cmd_temporal_influence)

    influence = commands.add_parser("influence", help="pairwise knockout influence matrix")
    influence.add_argument("--network", required=True)
    _add_param_args(influence)
    _add_solver_args(influence)
    _add_threads_arg(influence)
    _add_output_args(influence)
    influence.set_defaults(handler=_cmd_influence)

    category = commands.add_parser(
        "category-influence", help="category-level influence matrix, raw and normalized"
    )
    category.add_argument("--network", required=True)
    _add_param_args(category)
    _add_solver_args(category)
    _add_threads_arg(category)
    _add_output_args(category)
    category.set_defaults(handler=_cmd_category_influence)

    return parser


def run(argv: Sequence[str] | None = None) -> int:
    """Parse arguments and dispatch; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage or version
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.handler(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except CarpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))
