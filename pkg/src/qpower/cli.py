"""Command-line front end: approximate, fit, iterate, analyze, pipeline.

A run lives in one output directory holding the resolved config snapshot
(resolved.yaml), tensor binaries (tt.npz, unitary.npz), CSV reports (each
with a schema comment line), and a content-hash manifest.  All randomness
derives from the global seed, so a fixed config reproduces every
non-timing artifact byte for byte.  Errors leave a single-line JSON record
on stderr and a nonzero exit code.
"""

from __future__ import annotations

import copy
import itertools
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from .analysis import (
    cost_timing_scan,
    n_independence_scan,
    rank_growth_report,
    success_probability_report,
    success_probability_sum,
)
from .benchmarks import get_benchmark, load_tabulated
from .cross import CrossConfig, tt_cross
from .grids import (
    Grid,
    ObjectiveSpec,
    bits_to_points,
    flat_to_bits,
    flat_to_multi,
    grid_to_config,
    index_to_point,
    lattice_function,
    make_grid,
    objective_to_config,
    point_to_index,
    preprocess_objective,
)
from .serialize import (
    load_tt_vector,
    load_unitary_mpo,
    read_config,
    save_tt_vector,
    save_unitary_mpo,
    write_config_snapshot,
    write_csv,
    write_manifest,
)
from .simulate import DeadBranchError, power_iterate
from .ttcore import TTOperator, diag_mpo_from_mps, mpo_frobenius_norm
from .unitary import (
    UnitaryMPO,
    exact_diagonal_embedding,
    frobenius_cost,
    gate_count_estimate,
    riemannian_fit,
)

_DEFAULTS: dict = {
    "benchmark": None,
    "tabulated": None,  # {"path": ..., "domain": [[a, b], ...], "direction": ...}
    "grid": {"qubits": None, "domain": None},
    "pilot": {"samples": 256, "full_scan_limit": 4096},
    "cross": {"max_rank": 4, "n_sweeps": 8, "validation": 256, "tol": 1.0e-12},
    "fit": {
        "ansatz_rank": 4,
        "lr": 0.02,
        "iters": 10000,
        "restarts": 1,
        "init": "completion",
        "method": "riemannian",
    },
    "powers": [1, 10],
    "analysis": {"rank_growth_steps": 3, "timing_n": 10, "timing_repeats": 5},
    "seed": 0,
    "jobs": 1,
    "out": None,
}

# Per-benchmark defaults; config file and flags still override.
_BENCH_DEFAULTS: dict = {
    "sine": {
        "grid": {"qubits": [8]},
        "cross": {"max_rank": 2},
        "fit": {"ansatz_rank": 2, "method": "completion"},
        "powers": [1, 10, 50, 100],
    },
    "ackley": {
        "grid": {"qubits": [5, 5]},
        "cross": {"max_rank": 6},
        "fit": {"ansatz_rank": 4},
        "powers": [1, 25],
    },
    "rosenbrock": {
        "grid": {"qubits": [4, 4]},
        "cross": {"max_rank": 16},
        "fit": {"ansatz_rank": 8},
        "powers": [5, 30],
    },
}

_FLAG_LABELS = {
    "rank": "cross.max_rank",
    "ansatz_rank": "fit.ansatz_rank",
    "lr": "fit.lr",
    "iters": "fit.iters",
    "restarts": "fit.restarts",
}


def _subseed(seed: int, stream: int) -> int:
    """Deterministic independent integer seed per (global seed, purpose)."""
    return int(np.random.SeedSequence([int(seed), int(stream)]).generate_state(1)[0])


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def _parse_powers(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise ValueError(f"powers must be comma-separated integers, got {text!r}")


def _apply_flags(cfg: dict, flags: dict) -> None:
    if flags.get("benchmark") is not None:
        cfg["benchmark"] = flags["benchmark"]
    for name in ("seed", "jobs", "out"):
        if flags.get(name) is not None:
            cfg[name] = flags[name]
    if flags.get("rank") is not None:
        cfg["cross"]["max_rank"] = flags["rank"]
    if flags.get("ansatz_rank") is not None:
        cfg["fit"]["ansatz_rank"] = flags["ansatz_rank"]
    for name in ("lr", "iters", "restarts"):
        if flags.get(name) is not None:
            cfg["fit"][name] = flags[name]
    if flags.get("powers") is not None:
        cfg["powers"] = _parse_powers(flags["powers"])


def _validate_config(cfg: dict) -> None:
    if bool(cfg.get("benchmark")) == bool(cfg.get("tabulated")):
        raise ValueError("config needs exactly one of a benchmark or a tabulated objective")
    if cfg.get("tabulated"):
        tab = cfg["tabulated"]
        for key in ("path", "domain"):
            if key not in tab:
                raise ValueError(f"tabulated objective config is missing {key!r}")
        if not Path(tab["path"]).is_file():
            raise FileNotFoundError(f"tabulated objective file {tab['path']} does not exist")
        if cfg["grid"].get("qubits") is None:
            raise ValueError("tabulated objectives need grid.qubits in the config")
    rank = cfg["fit"]["ansatz_rank"]
    if rank < 1 or rank & (rank - 1):
        raise ValueError(f"fit.ansatz_rank must be a power of two, got {rank}")
    powers = cfg["powers"]
    if not powers or any((not isinstance(p, int)) or p < 0 for p in powers):
        raise ValueError(f"powers must be nonnegative integers, got {powers!r}")
    if cfg["fit"]["restarts"] < 1:
        raise ValueError("fit.restarts must be at least 1")
    if cfg["jobs"] < 1:
        raise ValueError("jobs must be at least 1")
    if cfg["fit"]["method"] not in ("riemannian", "completion"):
        raise ValueError(f"unknown fit.method {cfg['fit']['method']!r}")
    if not cfg.get("out"):
        raise ValueError("an output directory is required (--out or config key out)")


def _resolve_config(flags: dict) -> dict:
    config_path = flags.get("config")
    file_cfg = {}
    if config_path is not None:
        if not Path(config_path).is_file():
            raise FileNotFoundError(f"config file {config_path} does not exist")
        file_cfg = read_config(config_path)
    bench = flags.get("benchmark") or file_cfg.get("benchmark")
    cfg = copy.deepcopy(_DEFAULTS)
    if bench in _BENCH_DEFAULTS:
        cfg = _deep_merge(cfg, copy.deepcopy(_BENCH_DEFAULTS[bench]))
    cfg = _deep_merge(cfg, file_cfg)
    _apply_flags(cfg, flags)
    _validate_config(cfg)
    return cfg


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg["out"])
    if not out.is_dir():
        raise FileNotFoundError(f"output directory {out} does not exist")
    return out


def _build_grid(cfg: dict) -> Grid:
    if cfg.get("benchmark"):
        bench = get_benchmark(cfg["benchmark"])
        domain = cfg["grid"].get("domain") or [
            [lo, hi] for lo, hi in zip(bench.lower, bench.upper)
        ]
    else:
        domain = cfg["tabulated"]["domain"]
    qubits = cfg["grid"].get("qubits")
    if qubits is None:
        raise ValueError("grid.qubits is not set")
    return make_grid([tuple(map(float, pair)) for pair in domain], list(qubits))


def _pilot_points(grid: Grid, cfg: dict, anchors: list[tuple[float, ...]]) -> np.ndarray:
    """Preprocessing sample: full lattice when small, else random + anchors.

    Anchors (the known optimum when available, plus the domain corners) are
    snapped to the lattice so the sampled extrema are exact grid values.
    """
    limit = int(cfg["pilot"].get("full_scan_limit", 4096))
    if grid.size <= limit:
        flats = np.arange(1, grid.size + 1, dtype=np.int64)
        return bits_to_points(grid, flat_to_bits(grid, flats))
    rng = np.random.default_rng(_subseed(cfg["seed"], 0))
    count = int(cfg["pilot"].get("samples", 256))
    flats = rng.integers(1, grid.size + 1, size=count)
    points = [bits_to_points(grid, flat_to_bits(grid, flats))]
    corner_multis = itertools.product(*[(1, m) for m in grid.points_per_dim])
    snapped = [index_to_point(grid, multi) for multi in corner_multis]
    snapped += [index_to_point(grid, point_to_index(grid, a)) for a in anchors]
    points.append(np.asarray(snapped, dtype=float))
    return np.concatenate(points, axis=0)


def _build_objective(cfg: dict, grid: Grid) -> ObjectiveSpec:
    if cfg.get("benchmark"):
        bench = get_benchmark(cfg["benchmark"])
        raw = ObjectiveSpec(fn=bench.fn, direction=bench.direction)
        anchors = [bench.optimum_point]
    else:
        tab = cfg["tabulated"]
        fn = load_tabulated(tab["path"], grid)
        raw = ObjectiveSpec(fn=fn, direction=tab.get("direction", "minimize"))
        anchors = []
    return preprocess_objective(raw, _pilot_points(grid, cfg, anchors))


def _snapshot(cfg: dict, out: Path, grid: Grid, spec: ObjectiveSpec | None) -> None:
    record = copy.deepcopy(cfg)
    record["grid"] = grid_to_config(grid)
    if spec is not None:
        record["objective_state"] = objective_to_config(spec)
    write_config_snapshot(out / "resolved.yaml", record)


def _fmt(value) -> object:
    """CSV cell: full-precision repr for floats, verbatim otherwise."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def _joined(values) -> str:
    return ";".join(str(_fmt(v)) for v in values)


# ---------------------------------------------------------------------------
# command bodies (shared by the individual commands and the pipeline)


def _cmd_approximate(cfg: dict) -> None:
    out = _out_dir(cfg)
    grid = _build_grid(cfg)
    spec = _build_objective(cfg, grid)
    if spec.degenerate:
        click.echo("note: objective is constant on the pilot sample; scale set to 1")
    cross_cfg = CrossConfig(
        max_rank=int(cfg["cross"]["max_rank"]),
        n_sweeps=int(cfg["cross"]["n_sweeps"]),
        validation_sample_count=int(cfg["cross"]["validation"]),
        seed=_subseed(cfg["seed"], 1),
        tol=float(cfg["cross"]["tol"]),
    )
    result = tt_cross(lattice_function(grid, spec), grid.total_qubits, cross_cfg)
    save_tt_vector(out / "tt.npz", result.tt)
    write_csv(
        out / "cross_validation.csv",
        "cross-validation-v1",
        ["pass", "relative_error"],
        [[i + 1, _fmt(err)] for i, err in enumerate(result.validation_errors)],
    )
    write_csv(
        out / "approximate_report.csv",
        "approximate-v1",
        [
            "total_qubits",
            "max_rank",
            "ranks",
            "n_evaluations",
            "evaluation_budget",
            "converged",
            "clip_count",
        ],
        [
            [
                grid.total_qubits,
                result.tt.max_rank,
                _joined(result.tt.ranks),
                result.n_evaluations,
                result.evaluation_budget,
                int(result.converged),
                spec.clip_count,
            ]
        ],
    )
    _snapshot(cfg, out, grid, spec)
    write_manifest(out)
    click.echo(f"ranks: {_joined(result.tt.ranks)}")
    click.echo(f"validation error: {result.validation_errors[-1]:.3e}")
    click.echo(f"evaluations: {result.n_evaluations} (budget {result.evaluation_budget})")


def _fit_restart_worker(args: tuple) -> dict:
    cores, rank, lr, iters, seed, init = args
    h = TTOperator([np.asarray(c) for c in cores])
    try:
        umpo, report = riemannian_fit(h, rank, lr=lr, iters=iters, seed=seed, init=init)
    except RuntimeError as exc:
        return {"ok": False, "seed": seed, "message": str(exc)}
    return {
        "ok": True,
        "seed": seed,
        "gates": [np.asarray(g) for g in umpo.gates],
        "scale": umpo.scale,
        "final_cost": report.final_cost,
        "iterations": report.iterations,
        "lr_final": report.lr_final,
        "max_unitarity_error": report.max_unitarity_error,
        "wall_time_s": report.wall_time_s,
    }


def _cmd_fit(cfg: dict) -> None:
    out = _out_dir(cfg)
    tt_path = out / "tt.npz"
    if not tt_path.is_file():
        raise FileNotFoundError(f"{tt_path} not found; run approximate first")
    tt = load_tt_vector(tt_path)
    h = diag_mpo_from_mps(tt)
    h_norm = mpo_frobenius_norm(h)
    fit_cfg = cfg["fit"]
    rows = []
    timing_rows = []

    if fit_cfg["method"] == "completion":
        best = exact_diagonal_embedding(tt)
        cost = frobenius_cost(best, h)
        rows.append(
            [0, "", "completion", _fmt(cost), _fmt(cost / h_norm), _fmt(best.scale),
             0, "", _fmt(0.0), "ok", 1]
        )
    else:
        restarts = int(fit_cfg["restarts"])
        args = [
            (
                list(h.cores),
                int(fit_cfg["ansatz_rank"]),
                float(fit_cfg["lr"]),
                int(fit_cfg["iters"]),
                _subseed(cfg["seed"], 100 + i),
                fit_cfg["init"],
            )
            for i in range(restarts)
        ]
        if cfg["jobs"] > 1 and restarts > 1:
            with ProcessPoolExecutor(max_workers=int(cfg["jobs"])) as pool:
                results = list(pool.map(_fit_restart_worker, args))
        else:
            results = [_fit_restart_worker(a) for a in args]
        best = None
        best_cost = np.inf
        best_row = -1
        for i, res in enumerate(results):
            if not res["ok"]:
                click.echo(f"warning: restart {i} diverged: {res['message']}")
                rows.append([i, res["seed"], "riemannian", "", "", "", "", "", "", "diverged", 0])
                continue
            rows.append(
                [i, res["seed"], "riemannian", _fmt(res["final_cost"]),
                 _fmt(res["final_cost"] / h_norm), _fmt(res["scale"]), res["iterations"],
                 _fmt(res["lr_final"]), _fmt(res["max_unitarity_error"]), "ok", 0]
            )
            timing_rows.append([i, _fmt(res["wall_time_s"])])
            if res["final_cost"] < best_cost:
                best_cost = res["final_cost"]
                best = UnitaryMPO(tuple(res["gates"]), res["scale"])
                best_row = i
        if best is None:
            raise RuntimeError("all fit restarts diverged")
        rows[best_row][-1] = 1

    save_unitary_mpo(out / "unitary.npz", best)
    write_csv(
        out / "fit_report.csv",
        "fit-report-v1",
        ["restart", "seed", "method", "final_cost", "relative_cost", "scale",
         "iterations", "lr_final", "max_unitarity_error", "status", "best"],
        rows,
    )
    write_csv(out / "fit_timing.csv", "fit-timing-v1", ["restart", "wall_time_s"], timing_rows)
    write_manifest(out)
    final = frobenius_cost(best, h)
    click.echo(f"ansatz rank: {best.rank} ({best.n_ancilla} ancillas)")
    click.echo(f"final cost: {final:.6e} (relative {final / h_norm:.6e})")


def _cmd_iterate(cfg: dict) -> None:
    out = _out_dir(cfg)
    umpo_path = out / "unitary.npz"
    if not umpo_path.is_file():
        raise FileNotFoundError(f"{umpo_path} not found; run fit first")
    umpo = load_unitary_mpo(umpo_path)
    grid = _build_grid(cfg)
    if umpo.n != grid.total_qubits:
        raise ValueError(
            f"circuit has {umpo.n} gates but the grid needs {grid.total_qubits}"
        )
    summary = []
    for p in cfg["powers"]:
        try:
            report = power_iterate(umpo, p, grid.total_qubits, grid)
        except DeadBranchError as exc:
            click.echo(f"p={p}: dead branch ({exc})")
            summary.append([p, "", "", "", "", "", 1])
            continue
        write_csv(
            out / f"distribution_p{p}.csv",
            "distribution-v1",
            ["flat_index", "probability"],
            [[k + 1, _fmt(q)] for k, q in enumerate(report.distribution)],
        )
        multi_idx = flat_to_multi(grid, report.candidate_index)
        summary.append(
            [
                p,
                _fmt(report.cumulative_probability),
                report.candidate_index,
                _joined(multi_idx),
                _joined(report.candidate_point),
                _fmt(report.candidate_probability),
                0,
            ]
        )
        point = ", ".join(f"{v:.6g}" for v in report.candidate_point)
        click.echo(
            f"p={p}: candidate site {report.candidate_index} at ({point}) "
            f"prob {report.candidate_probability:.4f} "
            f"cumulative {report.cumulative_probability:.3e}"
        )
    write_csv(
        out / "iterate_report.csv",
        "iteration-summary-v1",
        ["p", "cumulative_probability", "candidate_flat", "candidate_index",
         "candidate_point", "candidate_probability", "dead_branch"],
        summary,
    )
    write_manifest(out)


def _cmd_analyze(cfg: dict) -> None:
    out = _out_dir(cfg)
    grid = _build_grid(cfg)
    spec = _build_objective(cfg, grid)
    g = spec.evaluate
    powers = cfg["powers"]

    prob_rows = []
    for p in powers:
        if grid.ndim == 1:
            rep = success_probability_report(g, grid, p)
            prob_rows.append(
                [p, grid.total_qubits, _fmt(rep.sum_value), _fmt(rep.integral_value),
                 _fmt(rep.integral_literal), _fmt(rep.discrepancy)]
            )
        else:
            value = success_probability_sum(g, grid, p)
            prob_rows.append([p, grid.total_qubits, _fmt(value), "", "", ""])
    write_csv(
        out / "success_probability.csv",
        "success-probability-v1",
        ["p", "total_qubits", "sum_value", "integral_value", "integral_literal",
         "discrepancy"],
        prob_rows,
    )

    scan_rows = []
    if grid.ndim == 1:
        a, b = grid.lower[0], grid.upper[0]
        for p in powers:
            scan = n_independence_scan(g, a, b, p, ns=(6, 8, 10))
            for n_val, value in zip(scan.ns, scan.values):
                scan_rows.append([p, n_val, _fmt(value), _fmt(scan.max_deviation)])
    else:
        domain = list(zip(grid.lower, grid.upper))
        for p in powers:
            values = []
            totals = []
            for q in (4, 5, 6):
                grid_q = make_grid(domain, [q] * grid.ndim)
                values.append(success_probability_sum(g, grid_q, p))
                totals.append(grid_q.total_qubits)
            dev = max(values) - min(values)
            for n_val, value in zip(totals, values):
                scan_rows.append([p, n_val, _fmt(value), _fmt(dev)])
    write_csv(
        out / "success_scan.csv",
        "success-scan-v1",
        ["p", "total_qubits", "value", "max_deviation"],
        scan_rows,
    )

    tt_path = out / "tt.npz"
    if not tt_path.is_file():
        raise FileNotFoundError(f"{tt_path} not found; run approximate first")
    tt = load_tt_vector(tt_path)
    h = diag_mpo_from_mps(tt)
    growth = rank_growth_report(h, tt, int(cfg["analysis"]["rank_growth_steps"]))
    write_csv(
        out / "rank_growth.csv",
        "rank-growth-v1",
        ["step", "measured_max_rank", "predicted_rank", "dense_cap"],
        [
            [s, m, pr, growth.dense_cap]
            for s, m, pr in zip(growth.steps, growth.measured, growth.predicted)
        ],
    )

    gate_rows = []
    for rank in sorted({2, 4, 8, 16, int(cfg["fit"]["ansatz_rank"])}):
        gates, per_gate = gate_count_estimate(grid.total_qubits, rank)
        gate_rows.append([grid.total_qubits, rank, gates, per_gate])
    write_csv(
        out / "gate_counts.csv",
        "gate-count-v1",
        ["n", "rank", "two_qubit_gates", "per_gate_bound"],
        gate_rows,
    )

    timing = cost_timing_scan(
        n=int(cfg["analysis"]["timing_n"]),
        repeats=int(cfg["analysis"]["timing_repeats"]),
        seed=_subseed(cfg["seed"], 2),
    )
    write_csv(
        out / "timing.csv",
        "timing-v1",
        ["n", "rank", "seconds"],
        [[timing.n, r, _fmt(t)] for r, t in zip(timing.ranks, timing.seconds)],
    )
    write_csv(
        out / "timing_slope.csv",
        "timing-slope-v1",
        ["n", "loglog_slope"],
        [[timing.n, _fmt(timing.loglog_slope)]],
    )
    _snapshot(cfg, out, grid, spec)
    write_manifest(out)
    click.echo(f"success probabilities written for p in {list(powers)}")
    click.echo(
        "rank growth: "
        + ", ".join(f"step {s}: {m}" for s, m in zip(growth.steps, growth.measured))
    )
    click.echo(f"cost-eval log-log slope vs rank: {timing.loglog_slope:.2f}")


# ---------------------------------------------------------------------------
# click wiring


def _execute(name: str, flags: dict, steps) -> None:
    try:
        cfg = _resolve_config(flags)
        for step in steps:
            step(cfg)
    except Exception as exc:  # noqa: BLE001 - single error surface by design
        record = {"command": name, "error": type(exc).__name__, "message": str(exc)}
        click.echo(json.dumps(record), err=True)
        sys.exit(1)


def _common_options(fn):
    options = [
        click.option("--config", default=None, help="YAML config file"),
        click.option("--seed", type=int, default=None, help="global seed"),
        click.option("--out", default=None, help="existing output directory"),
        click.option("--jobs", type=int, default=None, help="parallel fit restarts"),
        click.option("--benchmark", default=None, help="sine | ackley | rosenbrock"),
        click.option("--rank", type=int, default=None, help="cross max bond rank r"),
        click.option("--ansatz-rank", type=int, default=None, help="unitary rank R"),
        click.option("--powers", default=None, help="comma-separated powers"),
        click.option("--lr", type=float, default=None, help="fit learning rate"),
        click.option("--iters", type=int, default=None, help="fit iterations"),
        click.option("--restarts", type=int, default=None, help="fit restarts"),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


@click.group()
def main() -> None:
    """Tensor-train power iteration: approximate, fit, iterate, analyze."""


@main.command()
@_common_options
def approximate(**flags) -> None:
    """Cross-approximate the objective into a tensor train."""
    _execute("approximate", flags, [_cmd_approximate])


@main.command()
@_common_options
def fit(**flags) -> None:
    """Fit (or complete) a unitary circuit for the stored tensor train."""
    _execute("fit", flags, [_cmd_fit])


@main.command()
@_common_options
def iterate(**flags) -> None:
    """Simulate post-selected power iterations for each power."""
    _execute("iterate", flags, [_cmd_iterate])


@main.command()
@_common_options
def analyze(**flags) -> None:
    """Success probabilities, rank growth, gate counts, and timing."""
    _execute("analyze", flags, [_cmd_analyze])


@main.command()
@_common_options
def pipeline(**flags) -> None:
    """Run approximate, fit, iterate, and analyze in sequence."""
    _execute("pipeline", flags, [_cmd_approximate, _cmd_fit, _cmd_iterate, _cmd_analyze])


if __name__ == "__main__":
    main()
