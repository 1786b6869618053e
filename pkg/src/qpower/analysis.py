"""Success-probability estimates, rank-growth tables, and cost timing.

For a diagonal operator with entries g(x_k), |g| <= 1, the probability of
keeping every ancilla-zero branch over p power iterations from the uniform
start is the lattice average of g**(2p).  The integral form replaces the
average by (1/(b-a)) * integral of g**(2p) plus a boundary correction of
order 2**-n coming from the trapezoid rule on the left-endpoint lattice.
"""

from __future__ import annotations

from dataclasses import dataclass
from time import perf_counter
from typing import Callable, Sequence

import numpy as np

from .grids import Grid, flat_to_bits, bits_to_points, make_grid
from .ttcore import (
    TTOperator,
    TTVector,
    classical_power_iteration,
    diag_mpo_from_mps,
    random_tt,
)
from .unitary import UnitaryMPO, frobenius_cost, random_unitary_mpo

_SUM_QUBIT_LIMIT = 22
_RANK_GUARD = 4096
_DEFAULT_PANELS = 100_000


@dataclass
class SuccessProbabilityResult:
    n: int
    p: int
    sum_value: float
    integral_value: float
    integral_literal: float
    discrepancy: float


def success_probability_sum(
    g: Callable[[np.ndarray], np.ndarray], grid: Grid, p: int
) -> float:
    """Exact lattice average of g**(2p) over the full grid."""
    if p < 0:
        raise ValueError("p must be nonnegative")
    if grid.total_qubits > _SUM_QUBIT_LIMIT:
        raise ValueError(
            f"full lattice sum limited to {_SUM_QUBIT_LIMIT} qubits, "
            f"got {grid.total_qubits}"
        )
    flats = np.arange(1, grid.size + 1, dtype=np.int64)
    points = bits_to_points(grid, flat_to_bits(grid, flats))
    vals = np.asarray(g(points), dtype=float)
    return float(np.mean(vals ** (2 * p)))


def _endpoint_values(
    g: Callable[[np.ndarray], np.ndarray], a: float, b: float, p: int, panels: int
) -> tuple[float, float, float]:
    xs = np.linspace(a, b, panels + 1)
    vals = np.asarray(g(xs[:, None]), dtype=float) ** (2 * p)
    integral = float(np.trapezoid(vals, xs) / (b - a))
    return integral, float(vals[0]), float(vals[-1])


def success_probability_integral(
    g: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    p: int,
    n: int,
    panels: int = _DEFAULT_PANELS,
) -> float:
    """Integral form of the lattice average with the exact boundary term.

    The lattice samples a but never b, so the trapezoid identity gives
    mean = (1/(b-a)) * integral + (g(a)**2p - g(b)**2p) / 2**(n+1),
    accurate to O(4**-n).
    """
    if a >= b:
        raise ValueError("need a < b")
    integral, va, vb = _endpoint_values(g, a, b, p, panels)
    return integral + (va - vb) / (2.0 ** (n + 1))


def success_probability_integral_literal(
    g: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    p: int,
    panels: int = _DEFAULT_PANELS,
) -> float:
    """Printed-convention variant: subtracts the raw endpoint average.

    Kept for comparison only; its boundary term lacks the 2**-n factor, so
    it does not converge to the lattice average.
    """
    integral, va, vb = _endpoint_values(g, a, b, p, panels)
    return integral - (va + vb) / 2.0


def success_probability_report(
    g: Callable[[np.ndarray], np.ndarray], grid: Grid, p: int
) -> SuccessProbabilityResult:
    if grid.ndim != 1:
        raise ValueError("integral comparison is one-dimensional")
    sum_value = success_probability_sum(g, grid, p)
    a, b = grid.lower[0], grid.upper[0]
    n = grid.qubits[0]
    integral_value = success_probability_integral(g, a, b, p, n)
    literal = success_probability_integral_literal(g, a, b, p)
    return SuccessProbabilityResult(
        n=n,
        p=p,
        sum_value=sum_value,
        integral_value=integral_value,
        integral_literal=literal,
        discrepancy=abs(sum_value - integral_value),
    )


@dataclass
class NIndependenceScan:
    p: int
    ns: tuple[int, ...]
    values: tuple[float, ...]
    max_deviation: float


def n_independence_scan(
    g: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    p: int,
    ns: Sequence[int],
) -> NIndependenceScan:
    """Lattice average of g**(2p) across qubit counts, plus its spread."""
    values = []
    for n in ns:
        grid = make_grid([(a, b)], [n])
        values.append(success_probability_sum(g, grid, p))
    arr = np.asarray(values)
    max_dev = float(np.max(arr) - np.min(arr)) if len(values) > 1 else 0.0
    return NIndependenceScan(
        p=p, ns=tuple(int(n) for n in ns), values=tuple(values), max_deviation=max_dev
    )


@dataclass
class RankGrowthReport:
    steps: tuple[int, ...]
    measured: tuple[int, ...]
    predicted: tuple[int, ...]
    dense_cap: int


def rank_growth_report(h: TTOperator, f0: TTVector, p: int) -> RankGrowthReport:
    """Measured versus predicted rank growth of untruncated power iteration.

    The prediction after step j is r_H**j * r_f (product law); stored ranks
    additionally obey the dense cap 2**floor(n/2).  Aborts once the capped
    prediction passes 4096.
    """
    n = h.n
    r_h = h.max_rank
    r_f = f0.max_rank
    cap = 1 << (n // 2)
    predicted = []
    for j in range(1, p + 1):
        pred = (r_h**j) * r_f
        if min(pred, cap) > _RANK_GUARD:
            raise ValueError(
                f"rank guard: step {j} would reach rank {min(pred, cap)} > {_RANK_GUARD}"
            )
        predicted.append(pred)
    _, trace = classical_power_iteration(h, f0, p, tol=0.0, max_rank=None)
    return RankGrowthReport(
        steps=tuple(range(1, p + 1)),
        measured=tuple(trace),
        predicted=tuple(predicted),
        dense_cap=cap,
    )


@dataclass
class TimingScan:
    n: int
    ranks: tuple[int, ...]
    seconds: tuple[float, ...]
    loglog_slope: float


def cost_timing_scan(
    n: int = 10,
    ranks: Sequence[int] = (2, 4, 8, 16),
    repeats: int = 5,
    seed: int = 0,
) -> TimingScan:
    """Wall time of one TT-form cost evaluation across ansatz ranks.

    Times frobenius_cost for random circuits against a fixed random rank-2
    diagonal target, taking the best of ``repeats`` runs per rank, and fits
    a straight line to log(time) versus log(rank).
    """
    rng = np.random.default_rng(seed)
    target = diag_mpo_from_mps(random_tt(n, 2, rng))
    times = []
    for rank in ranks:
        umpo = random_unitary_mpo(n, rank, rng)
        frobenius_cost(umpo, target)  # warm up
        best = np.inf
        for _ in range(repeats):
            t0 = perf_counter()
            frobenius_cost(umpo, target)
            dt = perf_counter() - t0
            best = min(best, dt)
        times.append(best)
    slope = float(
        np.polyfit(np.log(np.asarray(ranks, dtype=float)), np.log(times), 1)[0]
    )
    return TimingScan(
        n=n, ranks=tuple(int(r) for r in ranks), seconds=tuple(times), loglog_slope=slope
    )
