"""Statevector simulation of power iteration with ancilla post-selection.

The register layout is (ancilla block, system block) with the ancilla
block most significant, so amplitude index a * 2**n + s holds ancilla
value a and system basis state s.  System qubit 1 is the most significant
bit of s, matching the tensor-train core order and the grid flat index.

One power iteration applies the full step-like circuit and post-selects
the ancilla block on zero.  Ancillas are reset and reused between
iterations rather than appended, so p iterations need n + log2(R) qubits
total.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import Grid, flat_to_multi, index_to_point
from .unitary import UnitaryMPO

_TOTAL_QUBIT_LIMIT = 26
_DEAD_BRANCH = 1e-300


class DeadBranchError(RuntimeError):
    """Post-selection probability fell below the representable floor."""


@dataclass
class StateVector:
    amplitudes: np.ndarray
    n: int
    n_ancilla: int

    def __post_init__(self):
        want = 1 << (self.n + self.n_ancilla)
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (want,):
            raise ValueError(
                f"need {want} amplitudes for {self.n}+{self.n_ancilla} qubits, "
                f"got shape {self.amplitudes.shape}"
            )


@dataclass
class IterationReport:
    """Outcome of p simulated power iterations."""

    p: int
    n: int
    n_ancilla: int
    step_probabilities: np.ndarray
    cumulative_probability: float
    distribution: np.ndarray
    candidate_index: int  # 1-based flat lattice index
    candidate_probability: float
    candidate_point: tuple[float, ...] | None = None


def prepare_initial(n: int, n_ancilla: int) -> StateVector:
    """Ancillas in zero, system in the uniform superposition."""
    if n < 1 or n_ancilla < 0:
        raise ValueError("need n >= 1 system qubits and n_ancilla >= 0")
    total = n + n_ancilla
    if total > _TOTAL_QUBIT_LIMIT:
        raise ValueError(
            f"statevector limited to {_TOTAL_QUBIT_LIMIT} qubits, got {total}"
        )
    amps = np.zeros(1 << total, dtype=np.complex128)
    amps[: 1 << n] = 2.0 ** (-n / 2.0)
    return StateVector(amps, n, n_ancilla)


def apply_unitary_mpo(state: StateVector, umpo: UnitaryMPO) -> StateVector:
    """Apply gate k to (ancilla block, system qubit k) for k = 1..n."""
    n = state.n
    rank = umpo.rank
    if umpo.n != n:
        raise ValueError(f"circuit has {umpo.n} gates, state has {n} system qubits")
    if umpo.n_ancilla != state.n_ancilla:
        raise ValueError(
            f"circuit needs {umpo.n_ancilla} ancillas, state has {state.n_ancilla}"
        )
    psi = state.amplitudes.reshape((rank,) + (2,) * n)
    for k, gate in enumerate(umpo.gates):
        t = gate.reshape(rank, 2, rank, 2)
        psi = np.tensordot(t, psi, axes=([2, 3], [0, k + 1]))
        psi = np.moveaxis(psi, 1, k + 1)
    return StateVector(psi.reshape(-1), n, state.n_ancilla)


def postselect_ancillas(state: StateVector) -> tuple[StateVector, float]:
    """Project the ancilla block on zero and renormalize.

    Returns the post-measurement state (ancillas reset to zero) and the
    selection probability.  Raises DeadBranchError when the probability
    underflows.
    """
    block = 1 << state.n
    kept = state.amplitudes[:block]
    prob = float(np.real(np.vdot(kept, kept)))
    if prob < _DEAD_BRANCH:
        raise DeadBranchError(
            f"ancilla-zero probability {prob:.3e} below {_DEAD_BRANCH:.0e}"
        )
    amps = np.zeros_like(state.amplitudes)
    amps[:block] = kept / np.sqrt(prob)
    return StateVector(amps, state.n, state.n_ancilla), prob


def power_iterate(
    umpo: UnitaryMPO, p: int, n: int, grid: Grid | None = None
) -> IterationReport:
    """Run p power iterations from the uniform start and report the outcome.

    Each iteration applies the circuit and post-selects the ancilla block;
    the product of the per-step probabilities is the probability of the
    whole post-selected branch.  p = 0 reports the uniform distribution.
    """
    if p < 0:
        raise ValueError("p must be nonnegative")
    state = prepare_initial(n, umpo.n_ancilla)
    probs = []
    for _ in range(p):
        state = apply_unitary_mpo(state, umpo)
        state, prob = postselect_ancillas(state)
        probs.append(prob)
    dist = np.abs(state.amplitudes[: 1 << n]) ** 2
    total = float(dist.sum())
    if total > 0.0:
        dist = dist / total
    k0 = int(np.argmax(dist))
    report = IterationReport(
        p=p,
        n=n,
        n_ancilla=umpo.n_ancilla,
        step_probabilities=np.asarray(probs),
        cumulative_probability=float(np.prod(probs)) if probs else 1.0,
        distribution=dist,
        candidate_index=k0 + 1,
        candidate_probability=float(dist[k0]),
    )
    if grid is not None:
        report.candidate_point = extract_candidate(report, grid)[1]
    return report


def extract_candidate(
    report: IterationReport, grid: Grid
) -> tuple[tuple[int, ...], tuple[float, ...], float]:
    """Most probable lattice site as (per-dimension index, point, probability).

    Ties break toward the lowest flat index.
    """
    if grid.size != report.distribution.shape[0]:
        raise ValueError(
            f"grid has {grid.size} sites, distribution has "
            f"{report.distribution.shape[0]}"
        )
    multi = flat_to_multi(grid, report.candidate_index)
    point = index_to_point(grid, multi if grid.ndim > 1 else multi[0])
    return multi, point, report.candidate_probability


def sample_measurements(report: IterationReport, shots: int, seed: int = 0) -> np.ndarray:
    """Multinomial measurement histogram over system basis states."""
    if shots < 1:
        raise ValueError("shots must be positive")
    rng = np.random.default_rng(seed)
    return rng.multinomial(shots, report.distribution)
