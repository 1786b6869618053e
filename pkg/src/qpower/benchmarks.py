"""Benchmark objectives and tabulated custom objectives."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grids import Grid, multi_to_flat


@dataclass(frozen=True)
class Benchmark:
    name: str
    dimension: int
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    fn: Callable[[np.ndarray], np.ndarray]
    optimum_point: tuple[float, ...]
    optimum_value: float
    direction: str


def sine_values(points: np.ndarray) -> np.ndarray:
    points = np.atleast_2d(points)
    return np.sin(points[:, 0])


def ackley_values(points: np.ndarray) -> np.ndarray:
    points = np.atleast_2d(points)
    x, y = points[:, 0], points[:, 1]
    return (
        -20.0 * np.exp(-0.2 * np.sqrt(0.5 * (x * x + y * y)))
        - np.exp(0.5 * (np.cos(2.0 * np.pi * x) + np.cos(2.0 * np.pi * y)))
        + 20.0
        + np.e
    )


def rosenbrock_values(points: np.ndarray) -> np.ndarray:
    points = np.atleast_2d(points)
    x, y = points[:, 0], points[:, 1]
    return (1.0 - x) ** 2 + 100.0 * (y - x * x) ** 2


REGISTRY: dict[str, Benchmark] = {
    "sine": Benchmark(
        name="sine",
        dimension=1,
        lower=(0.0,),
        upper=(np.pi,),
        fn=sine_values,
        optimum_point=(np.pi / 2.0,),
        optimum_value=1.0,
        direction="maximize",
    ),
    "ackley": Benchmark(
        name="ackley",
        dimension=2,
        lower=(-5.0, -5.0),
        upper=(5.0, 5.0),
        fn=ackley_values,
        optimum_point=(0.0, 0.0),
        optimum_value=0.0,
        direction="minimize",
    ),
    "rosenbrock": Benchmark(
        name="rosenbrock",
        dimension=2,
        lower=(-2.5, -2.5),
        upper=(2.5, 2.5),
        fn=rosenbrock_values,
        optimum_point=(1.0, 1.0),
        optimum_value=0.0,
        direction="minimize",
    ),
}


def get_benchmark(name: str) -> Benchmark:
    try:
        return REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(REGISTRY))
        raise ValueError(f"unknown benchmark {name!r}; known: {known}") from None


def load_tabulated(path, grid: Grid) -> Callable[[np.ndarray], np.ndarray]:
    """Load a tabulated objective from a CSV of (multi-index, value) rows.

    Each row carries the 1-based lattice index per dimension followed by the
    objective value.  The returned callable evaluates points by snapping them
    to the nearest lattice site; indices absent from the file raise.
    """
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if data.shape[1] != grid.ndim + 1:
        raise ValueError(
            f"tabulated file has {data.shape[1]} columns, "
            f"expected {grid.ndim + 1} (indices plus value)"
        )
    if grid.total_qubits > 22:
        raise ValueError("tabulated objectives limited to 22 total qubits")
    table = np.full(grid.size, np.nan)
    idx = np.rint(data[:, : grid.ndim]).astype(np.int64)
    for row, value in zip(idx, data[:, grid.ndim]):
        table[multi_to_flat(grid, tuple(row)) - 1] = value

    lower = np.asarray(grid.lower)
    spac = np.asarray(grid.spacings)
    sizes = np.asarray(grid.points_per_dim, dtype=np.int64)

    def fn(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        k = np.rint((points - lower) / spac).astype(np.int64)
        k = np.clip(k, 0, sizes - 1)
        flat = np.zeros(points.shape[0], dtype=np.int64)
        for d in range(grid.ndim):
            flat = flat * sizes[d] + k[:, d]
        vals = table[flat]
        if np.any(np.isnan(vals)):
            missing = flat[np.isnan(vals)][0] + 1
            raise ValueError(f"tabulated objective has no entry for flat index {missing}")
        return vals

    return fn
