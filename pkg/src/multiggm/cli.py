"""Command-line interface.

Subcommands: ``estimate`` (solve, optionally debias), ``test``
(linear-combination z-tests), ``tune`` (e-BIC grid), ``simulate`` (Monte
Carlo experiments), ``diagnose`` (theory diagnostics on true precision
matrices).  Every run writes a JSON report (plus CSV tables) into
``--out-dir``; the report echoes the resolved configuration, so any run can
be reproduced from it.

Exit codes: 0 success, 1 configuration error, 2 data error,
3 solver non-convergence.  Edge indices on the command line and in all
output files are 1-based.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field

from . import __version__
from .core import sample_covariance
from .diagnostics import diagnostics_report
from .errors import (
    ConfigError,
    ConvergenceError,
    DataFormatError,
    MultiGGMError,
    NotPositiveDefiniteError,
)
from .experiments import RUNNERS, ExperimentConfig
from .graphs import GraphSpec
from .inference import LinearCombo, confidence_interval, debias, test_linear_combo
from .io import (
    ingest_csv,
    read_matrix_csv,
    write_csv_atomic,
    write_json_atomic,
    write_matrix_csv,
)
from .selection import TuningGrid, penalty_scale, score_table_rows, tune_penalties
from .solver import PenaltyPair, SolverOptions, solve_ggl

REPORT_SCHEMA = 1

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_NONCONVERGENCE = 3


@dataclass
class RunConfig:
    command: str
    params: dict
    out_dir: str = "multiggm-out"
    seed: int = 0
    threads: int = 1
    verbosity: int = 1


@dataclass
class AnalysisReport:
    tool_version: str
    schema: int
    command: str
    config: dict
    timings: dict = field(default_factory=dict)
    payload: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)

    def to_jsonable(self) -> dict:
        return asdict(self)


class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage errors exit with the config code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated integer list, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated number list, got {text!r}")


def _edge_list(text: str) -> list[tuple[int, int]]:
    """Parse '1,2;3,4' into 0-based pairs."""
    edges = []
    for part in text.split(";"):
        if not part.strip():
            continue
        bits = part.split(",")
        if len(bits) != 2:
            raise ConfigError(f"bad edge {part!r}; expected 'i,j'")
        try:
            i, j = int(bits[0]), int(bits[1])
        except ValueError:
            raise ConfigError(f"bad edge {part!r}; expected integers")
        if i < 1 or j < 1:
            raise ConfigError(f"edge indices are 1-based; got {part!r}")
        edges.append((i - 1, j - 1))
    if not edges:
        raise ConfigError("no edges given")
    return edges


def build_parser() -> _Parser:
    parser = _Parser(prog="multiggm", description=__doc__)
    parser.add_argument(
        "--version",
        action="version",
        version=f"multiggm {__version__} (report schema {REPORT_SCHEMA})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--out-dir", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="base RNG seed")
        p.add_argument("--threads", type=int, default=None, help="worker threads")
        p.add_argument("-q", "--quiet", action="store_true", help="suppress progress output")

    def data_opts(p):
        p.add_argument("--data", required=False, help="comma-separated CSV paths, one per population")
        p.add_argument("--center", action="store_true")
        p.add_argument("--standardize", action="store_true")
        p.add_argument("--first-difference", action="store_true")

    def penalty_opts(p):
        p.add_argument("--lam", type=float, default=None, help="l1 penalty (absolute)")
        p.add_argument("--rho", type=float, default=None, help="group penalty (absolute)")
        p.add_argument("--c1", type=float, default=None, help="l1 constant on the sqrt(log p / n) scale")
        p.add_argument("--c2", type=float, default=None, help="group constant on the sqrt(log p / n) scale")

    p_est = sub.add_parser("estimate", help="fit precision matrices")
    common(p_est); data_opts(p_est); penalty_opts(p_est)
    p_est.add_argument("--debias", action="store_true", help="also write debiased matrices")

    p_test = sub.add_parser("test", help="z-tests on linear combinations across populations")
    common(p_test); data_opts(p_test); penalty_opts(p_test)
    p_test.add_argument("--edges", required=True, help="semicolon-separated 1-based pairs, e.g. '1,2;2,3'")
    p_test.add_argument("--coeffs", required=True, help="comma-separated combination coefficients, one per population")
    p_test.add_argument("--alpha", type=float, default=0.05)
    p_test.add_argument("--ci-level", type=float, default=0.95)

    p_tune = sub.add_parser("tune", help="e-BIC grid search over penalty constants")
    common(p_tune); data_opts(p_tune)
    p_tune.add_argument("--c1-grid", default=None, help="comma-separated C1 values")
    p_tune.add_argument("--c2-grid", default=None, help="comma-separated C2 values")
    p_tune.add_argument("--gamma", type=float, default=0.5)

    p_sim = sub.add_parser("simulate", help="Monte Carlo experiments")
    common(p_sim)
    p_sim.add_argument("experiment", choices=sorted(RUNNERS))
    p_sim.add_argument("--graph", choices=["chain", "star"], default="chain")
    p_sim.add_argument("--p", default="50", help="comma-separated dimensions")
    p_sim.add_argument("--n", default="600", help="comma-separated sample sizes")
    p_sim.add_argument("--B", type=int, default=100, help="replications")
    p_sim.add_argument("--chain-rho", default="0.2,0.35")
    p_sim.add_argument("--star-d", type=int, default=25)
    p_sim.add_argument("--star-diag", default="2.0,2.5")
    p_sim.add_argument("--star-offdiag", default="0.3,0.45")
    p_sim.add_argument("--hub-seed", type=int, default=0)
    p_sim.add_argument("--penalty-rule", choices=["ebic_grid", "fixed"], default="ebic_grid")
    p_sim.add_argument("--c1", type=float, default=1.0)
    p_sim.add_argument("--c2", type=float, default=3.5)
    p_sim.add_argument("--edges", default="1,2;2,3", help="edges for the normality experiment")
    p_sim.add_argument("--alpha", type=float, default=0.05)
    p_sim.add_argument("--ci-level", type=float, default=0.95)
    p_sim.add_argument("--retune-per-replication", action="store_true")

    p_diag = sub.add_parser("diagnose", help="theory diagnostics on true precision matrices")
    common(p_diag)
    p_diag.add_argument("--precision", required=True, help="comma-separated matrix CSV paths, one per population")
    p_diag.add_argument("--lam", type=float, default=0.1)
    p_diag.add_argument("--rho", type=float, default=0.1)
    p_diag.add_argument("--psi", type=float, default=0.5)
    p_diag.add_argument("--gamma", type=float, default=2.5)
    p_diag.add_argument("--k1", type=float, default=1.0)
    p_diag.add_argument("--eigen-bound", type=float, default=None)
    p_diag.add_argument("--sample-sizes", default=None, help="comma-separated n_k")

    return parser


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}")
    if not isinstance(obj, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return obj


def resolve_config(argv) -> RunConfig:
    """Parse flags, merge the optional config file (flags win), validate."""
    args = build_parser().parse_args(argv)
    params = dict(vars(args))
    command = params.pop("command")
    file_values = {}
    config_path = params.pop("config", None)
    if config_path:
        file_values = _load_config_file(config_path)

    def pick(name, default):
        flag = params.pop(name, None)
        if flag is not None:
            return flag
        if name in file_values:
            return file_values[name]
        return default

    out_dir = pick("out_dir", "multiggm-out")
    seed = int(pick("seed", 0))
    threads = int(pick("threads", 1))
    quiet = params.pop("quiet", False)
    # Remaining file values fill in unset optional flags.
    for key, value in file_values.items():
        if key in params and (params[key] is None or params[key] is False):
            params[key] = value
    if threads < 1:
        raise ConfigError("--threads must be at least 1")
    return RunConfig(
        command=command,
        params=params,
        out_dir=str(out_dir),
        seed=seed,
        threads=threads,
        verbosity=0 if quiet else 1,
    )


def _require_data(params) -> list[str]:
    data = params.get("data")
    if not data:
        raise ConfigError("--data is required for this command")
    paths = [p for p in str(data).split(",") if p.strip()]
    for p in paths:
        if not os.path.exists(p):
            raise ConfigError(f"data file not found: {p}")
    return paths


def _ingest(params) -> "MultiPopDataset":
    paths = _require_data(params)
    return ingest_csv(
        paths,
        center=bool(params.get("center")),
        standardize=bool(params.get("standardize")),
        first_difference=bool(params.get("first_difference")),
    )


def _resolve_penalty(params, p: int, n: int) -> PenaltyPair:
    lam, rho = params.get("lam"), params.get("rho")
    c1, c2 = params.get("c1"), params.get("c2")
    if lam is None and c1 is None:
        raise ConfigError("give either --lam/--rho or --c1/--c2")
    if lam is not None:
        return PenaltyPair(float(lam), float(rho or 0.0))
    scale = penalty_scale(p, n)
    return PenaltyPair(float(c1) * scale, float(c2 or 0.0) * scale)


def _solver_options(params) -> SolverOptions:
    return SolverOptions()


def run_command(config: RunConfig) -> tuple[AnalysisReport, int]:
    """Dispatch one validated command; returns the report and an exit code."""
    t_start = time.perf_counter()
    report = AnalysisReport(
        tool_version=__version__,
        schema=REPORT_SCHEMA,
        command=config.command,
        config={
            "command": config.command,
            "params": {k: v for k, v in config.params.items()},
            "out_dir": config.out_dir,
            "seed": config.seed,
            "threads": config.threads,
        },
    )
    out = config.out_dir
    code = EXIT_OK

    if config.command == "estimate":
        dataset = _ingest(config.params)
        covs = sample_covariance(dataset)
        penalty = _resolve_penalty(config.params, covs.p, min(covs.sample_sizes))
        solve = solve_ggl(covs, penalty, _solver_options(config.params))
        if not solve.converged:
            code = EXIT_NONCONVERGENCE
        for k, m in enumerate(solve.estimate.matrices):
            path = f"{out}/estimate_k{k + 1}.csv"
            write_matrix_csv(m, path)
            report.outputs.append(path)
        if config.params.get("debias"):
            for k, m in enumerate(debias(solve.estimate, covs).matrices):
                path = f"{out}/debiased_k{k + 1}.csv"
                write_matrix_csv(m, path)
                report.outputs.append(path)
        report.payload = {
            "penalty": {"lam": penalty.lam, "rho": penalty.rho},
            "converged": solve.converged,
            "iterations": solve.iterations,
            "kkt_violation": solve.kkt_violation,
            "objective": solve.objective,
            "sample_sizes": list(covs.sample_sizes),
        }

    elif config.command == "test":
        dataset = _ingest(config.params)
        covs = sample_covariance(dataset)
        penalty = _resolve_penalty(config.params, covs.p, min(covs.sample_sizes))
        solve = solve_ggl(covs, penalty, _solver_options(config.params))
        if not solve.converged:
            code = EXIT_NONCONVERGENCE
        deb = debias(solve.estimate, covs)
        coeffs = _float_list(str(config.params["coeffs"]))
        if len(coeffs) != covs.K:
            raise ConfigError(f"{len(coeffs)} coefficients for {covs.K} populations")
        alpha = float(config.params.get("alpha") or 0.05)
        level = float(config.params.get("ci_level") or 0.95)
        edges = _edge_list(str(config.params["edges"]))
        results = []
        rows = [["i", "j", "estimate", "std_error", "z", "p_value", "reject"]]
        for (i, j) in edges:
            if not (0 <= i < covs.p and 0 <= j < covs.p):
                raise ConfigError(f"edge ({i + 1},{j + 1}) out of range for p={covs.p}")
            r = test_linear_combo(
                deb, solve.estimate, covs, LinearCombo(coeffs, (i, j)), alpha
            )
            cis = [
                confidence_interval(deb, solve.estimate, covs, k, i, j, level)
                for k in range(covs.K)
            ]
            results.append(
                {
                    "edge": [i + 1, j + 1],
                    "estimate": r.estimate,
                    "std_error": r.std_error,
                    "z_stat": r.z_stat,
                    "p_value": r.p_value,
                    "reject": r.reject,
                    "alpha_level": r.alpha_level,
                    "intervals": [
                        {"population": k + 1, "lower": c.lower, "upper": c.upper,
                         "level": c.level}
                        for k, c in enumerate(cis)
                    ],
                }
            )
            rows.append([i + 1, j + 1, r.estimate, r.std_error, r.z_stat,
                         r.p_value, int(r.reject)])
        path = f"{out}/tests.csv"
        write_csv_atomic(rows, path)
        report.outputs.append(path)
        report.payload = {
            "penalty": {"lam": penalty.lam, "rho": penalty.rho},
            "converged": solve.converged,
            "tests": results,
        }

    elif config.command == "tune":
        dataset = _ingest(config.params)
        covs = sample_covariance(dataset)
        grid = TuningGrid(
            c1_values=tuple(_float_list(config.params["c1_grid"]))
            if config.params.get("c1_grid")
            else TuningGrid().c1_values,
            c2_values=tuple(_float_list(config.params["c2_grid"]))
            if config.params.get("c2_grid")
            else TuningGrid().c2_values,
            gamma=float(config.params.get("gamma") or 0.5),
        )
        result = tune_penalties(covs, grid, _solver_options(config.params))
        path = f"{out}/score_table.csv"
        write_csv_atomic(score_table_rows(result), path)
        report.outputs.append(path)
        report.payload = {
            "best_constants": list(result.best_constants),
            "best_penalty": {
                "lam": result.best_penalty.lam,
                "rho": result.best_penalty.rho,
            },
        }

    elif config.command == "simulate":
        params = config.params
        experiment = params["experiment"]
        if params.get("graph") == "star":
            graph = GraphSpec(
                kind="star",
                star_d=int(params.get("star_d") or 25),
                star_diag=tuple(_float_list(str(params.get("star_diag") or "2.0,2.5"))),
                star_offdiag=tuple(
                    _float_list(str(params.get("star_offdiag") or "0.3,0.45"))
                ),
                hub_seed=int(params.get("hub_seed") or 0),
            )
        else:
            graph = GraphSpec(
                kind="chain",
                chain_rho=tuple(_float_list(str(params.get("chain_rho") or "0.2,0.35"))),
            )
        edges = ()
        if experiment == "normality":
            edges = tuple(_edge_list(str(params.get("edges") or "1,2;2,3")))
        exp_config = ExperimentConfig(
            graph=graph,
            dims=tuple(_int_list(str(params.get("p") or "50"))),
            sample_sizes=tuple(_int_list(str(params.get("n") or "600"))),
            replications=int(params.get("B") or 100),
            base_seed=config.seed,
            penalty_rule=str(params.get("penalty_rule") or "ebic_grid"),
            fixed_constants=(
                float(params.get("c1") or 1.0),
                float(params.get("c2") or 3.5),
            ),
            alpha_level=float(params.get("alpha") or 0.05),
            ci_level=float(params.get("ci_level") or 0.95),
            edges_of_interest=edges,
            retune_per_replication=bool(params.get("retune_per_replication")),
            threads=config.threads,
        )
        result = RUNNERS[experiment](exp_config)
        csv_path = f"{out}/{experiment}.csv"
        json_path = f"{out}/{experiment}.json"
        write_csv_atomic(result.csv_rows(), csv_path)
        write_json_atomic(result.to_jsonable(), json_path)
        report.outputs.extend([csv_path, json_path])
        report.payload = {"experiment": experiment, "cells": len(result.cells)}

    elif config.command == "diagnose":
        paths = [
            p for p in str(config.params.get("precision") or "").split(",") if p.strip()
        ]
        if not paths:
            raise ConfigError("--precision is required")
        for p in paths:
            if not os.path.exists(p):
                raise ConfigError(f"precision file not found: {p}")
        from .core import PrecisionSet

        mats = [read_matrix_csv(p) for p in paths]
        try:
            precisions = PrecisionSet([(m + m.T) / 2 for m in mats], positive_definite=True)
        except NotPositiveDefiniteError as exc:
            raise DataFormatError(str(exc))
        sizes = (
            _int_list(str(config.params["sample_sizes"]))
            if config.params.get("sample_sizes")
            else None
        )
        diag = diagnostics_report(
            precisions,
            PenaltyPair(
                float(config.params.get("lam") or 0.1),
                float(config.params.get("rho") or 0.1),
            ),
            psi=float(config.params.get("psi") or 0.5),
            sample_sizes=sizes,
            gamma=float(config.params.get("gamma") or 2.5),
            k1=float(config.params.get("k1") or 1.0),
            eigen_bound_l=config.params.get("eigen_bound"),
        )
        path = f"{out}/diagnostics.json"
        write_json_atomic(json.loads(diag.to_json()), path)
        report.outputs.append(path)
        report.payload = json.loads(diag.to_json())

    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown command {config.command!r}")

    report.timings = {"wall_seconds": time.perf_counter() - t_start}
    report_path = f"{out}/report.json"
    write_json_atomic(report.to_jsonable(), report_path)
    report.outputs.append(report_path)
    return report, code


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        config = resolve_config(argv)
        report, code = run_command(config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataFormatError, NotPositiveDefiniteError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except MultiGGMError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if config.verbosity:
        for path in report.outputs:
            print(path)
    return code


if __name__ == "__main__":
    sys.exit(main())
