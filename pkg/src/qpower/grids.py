"""Dyadic grids over boxes and black-box objective preprocessing.

A d-dimensional grid assigns 2**n_i lattice points to dimension i.  Per
dimension the lattice is x_k = a + (k - 1) * (b - a) / 2**n for k = 1..2**n,
so the left endpoint is on the lattice and the right endpoint never is.
Flat indices concatenate per-dimension qubit blocks with the first dimension
most significant, matching the ordering of tensor-train cores and of the
simulated register.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

Direction = str  # "minimize" | "maximize"

_DIRECTIONS = ("minimize", "maximize")

# Tolerance below which out-of-range preprocessed values are treated as
# roundoff rather than genuine clips.
_CLIP_EPS = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform dyadic lattice over a box."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    qubits: tuple[int, ...]

    @property
    def ndim(self) -> int:
        return len(self.qubits)

    @property
    def total_qubits(self) -> int:
        return sum(self.qubits)

    @property
    def points_per_dim(self) -> tuple[int, ...]:
        return tuple(1 << n for n in self.qubits)

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(
            (b - a) / (1 << n)
            for a, b, n in zip(self.lower, self.upper, self.qubits)
        )

    @property
    def size(self) -> int:
        return 1 << self.total_qubits


def make_grid(domain: Sequence[tuple[float, float]], qubits: Sequence[int]) -> Grid:
    """Build a grid from per-dimension intervals and qubit counts.

    Parameters
    ----------
    domain:
        Sequence of (a, b) intervals, one per dimension, each with a < b.
    qubits:
        Number of qubits per dimension, each at least 1.
    """
    if len(domain) != len(qubits):
        raise ValueError(
            f"domain has {len(domain)} dimensions but qubits has {len(qubits)}"
        )
    if len(domain) == 0:
        raise ValueError("grid needs at least one dimension")
    for a, b in domain:
        if not (np.isfinite(a) and np.isfinite(b)) or a >= b:
            raise ValueError(f"invalid domain interval ({a}, {b}): need a < b")
    for n in qubits:
        if int(n) != n or n < 1:
            raise ValueError(f"qubit count must be a positive integer, got {n}")
    return Grid(
        lower=tuple(float(a) for a, _ in domain),
        upper=tuple(float(b) for _, b in domain),
        qubits=tuple(int(n) for n in qubits),
    )


def _as_multi(grid: Grid, k) -> tuple[int, ...]:
    if np.isscalar(k):
        if grid.ndim != 1:
            raise ValueError("scalar index only valid for 1-dimensional grids")
        return (int(k),)
    k = tuple(int(v) for v in k)
    if len(k) != grid.ndim:
        raise ValueError(f"index has {len(k)} components, grid has {grid.ndim}")
    return k


def index_to_point(grid: Grid, k) -> tuple[float, ...]:
    """Map a 1-based lattice index (int for 1D, tuple otherwise) to a point."""
    multi = _as_multi(grid, k)
    out = []
    for kd, a, h, m in zip(multi, grid.lower, grid.spacings, grid.points_per_dim):
        if not 1 <= kd <= m:
            raise ValueError(f"index {kd} outside 1..{m}")
        out.append(a + (kd - 1) * h)
    return tuple(out)


def point_to_index(grid: Grid, x) -> tuple[int, ...]:
    """Map a point to the 1-based index of the nearest lattice site."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (grid.ndim,):
        raise ValueError(f"point has shape {x.shape}, expected ({grid.ndim},)")
    out = []
    for xd, a, h, m in zip(x, grid.lower, grid.spacings, grid.points_per_dim):
        kd = int(np.rint((xd - a) / h)) + 1
        out.append(min(max(kd, 1), m))
    return tuple(out)


def multi_to_flat(grid: Grid, k) -> int:
    """1-based per-dimension indices to the 1-based flat lattice index."""
    multi = _as_multi(grid, k)
    flat = 0
    for kd, m in zip(multi, grid.points_per_dim):
        if not 1 <= kd <= m:
            raise ValueError(f"index {kd} outside 1..{m}")
        flat = flat * m + (kd - 1)
    return flat + 1


def flat_to_multi(grid: Grid, flat: int) -> tuple[int, ...]:
    """1-based flat lattice index to 1-based per-dimension indices."""
    if not 1 <= flat <= grid.size:
        raise ValueError(f"flat index {flat} outside 1..{grid.size}")
    rem = flat - 1
    out = []
    for m in reversed(grid.points_per_dim):
        out.append(rem % m + 1)
        rem //= m
    return tuple(reversed(out))


def bits_to_indices(grid: Grid, bits: np.ndarray) -> np.ndarray:
    """Rows of qubit values to 1-based per-dimension indices.

    ``bits`` has shape (m, total_qubits); within each per-dimension block the
    first qubit is the most significant bit of k - 1.
    """
    bits = np.asarray(bits)
    if bits.ndim != 2 or bits.shape[1] != grid.total_qubits:
        raise ValueError(
            f"bits must have shape (m, {grid.total_qubits}), got {bits.shape}"
        )
    out = np.empty((bits.shape[0], grid.ndim), dtype=np.int64)
    start = 0
    for d, n in enumerate(grid.qubits):
        block = bits[:, start : start + n]
        weights = 1 << np.arange(n - 1, -1, -1, dtype=np.int64)
        out[:, d] = block @ weights + 1
        start += n
    return out


def indices_to_points(grid: Grid, indices: np.ndarray) -> np.ndarray:
    """Rows of 1-based per-dimension indices to lattice points, shape (m, d)."""
    indices = np.asarray(indices, dtype=np.int64)
    lower = np.asarray(grid.lower)
    spac = np.asarray(grid.spacings)
    return lower + (indices - 1) * spac


def bits_to_points(grid: Grid, bits: np.ndarray) -> np.ndarray:
    return indices_to_points(grid, bits_to_indices(grid, bits))


def flat_to_bits(grid: Grid, flats: np.ndarray) -> np.ndarray:
    """1-based flat indices to rows of qubit values, shape (m, total_qubits)."""
    flats = np.asarray(flats, dtype=np.int64)
    vals = flats - 1
    n = grid.total_qubits
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((vals[:, None] >> shifts) & 1).astype(np.int64)


@dataclass
class ObjectiveSpec:
    """A black-box objective together with its affine preprocessing.

    ``fn`` evaluates raw objective values on an (m, d) array of points and
    returns an (m,) array.  After :func:`preprocess_objective` has fixed the
    shift C and scale s, :meth:`evaluate` returns
    g = (C - f) / s for minimization or g = f / s for maximization, clipped
    to [0, 1].  Clips beyond roundoff are tallied in ``clip_count``.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    direction: Direction = "minimize"
    shift: float = 0.0
    scale: float = 1.0
    degenerate: bool = False
    clip_count: int = 0

    def __post_init__(self):
        if self.direction not in _DIRECTIONS:
            raise ValueError(
                f"direction must be one of {_DIRECTIONS}, got {self.direction!r}"
            )

    def raw(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        vals = np.asarray(self.fn(points), dtype=float)
        if vals.shape != (points.shape[0],):
            raise ValueError(
                f"objective returned shape {vals.shape}, expected ({points.shape[0]},)"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("objective returned a non-finite value")
        return vals

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        vals = self.raw(points)
        if self.direction == "minimize":
            g = (self.shift - vals) / self.scale
        else:
            g = vals / self.scale
        clips = int(np.count_nonzero((g < -_CLIP_EPS) | (g > 1.0 + _CLIP_EPS)))
        if clips:
            self.clip_count += clips
        return np.clip(g, 0.0, 1.0)


def preprocess_objective(spec: ObjectiveSpec, samples: np.ndarray) -> ObjectiveSpec:
    """Fix shift and scale from raw objective values at sample points.

    The returned spec maps the best sampled point to g = 1 and, for
    minimization, the worst sampled point to g = 0.  A constant sample set
    (or a maximization target with no positive sample) cannot be normalized;
    it is flagged degenerate and given unit scale.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[0] < 1:
        raise ValueError("need at least one preprocessing sample")
    vals = spec.raw(samples)
    degenerate = False
    if spec.direction == "minimize":
        shift = float(np.max(vals))
        scale = shift - float(np.min(vals))
        if scale <= 0.0:
            degenerate = True
            scale = 1.0
    else:
        shift = 0.0
        scale = float(np.max(vals))
        if scale <= 0.0:
            degenerate = True
            scale = 1.0
    return replace(
        spec, shift=shift, scale=scale, degenerate=degenerate, clip_count=0
    )


def lattice_function(grid: Grid, spec: ObjectiveSpec) -> Callable[[np.ndarray], np.ndarray]:
    """Preprocessed objective as a function of qubit-value rows.

    The returned callable maps an (m, total_qubits) array of 0/1 values to
    the (m,) array of g values, which is the evaluation contract expected by
    the cross-interpolation driver.
    """

    def fn(bits: np.ndarray) -> np.ndarray:
        return spec.evaluate(bits_to_points(grid, bits))

    return fn


def grid_to_config(grid: Grid) -> dict:
    return {
        "domain": [[a, b] for a, b in zip(grid.lower, grid.upper)],
        "qubits": list(grid.qubits),
    }


def grid_from_config(cfg: dict) -> Grid:
    try:
        domain = [tuple(pair) for pair in cfg["domain"]]
        qubits = list(cfg["qubits"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed grid config: {exc}") from exc
    return make_grid(domain, qubits)


def objective_to_config(spec: ObjectiveSpec) -> dict:
    return {
        "direction": spec.direction,
        "shift": float(spec.shift),
        "scale": float(spec.scale),
        "degenerate": bool(spec.degenerate),
    }
