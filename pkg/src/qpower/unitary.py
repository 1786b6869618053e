"""Unitary tensor-train operators and their variational fitting.

A UnitaryMPO is a step-like circuit of n unitaries, each acting on one
system qubit plus a shared block of log2(R) ancilla qubits.  The ancilla
register threads through the gate sequence and plays the role of the bond
index: boundary-contracting the ancillas (enter in zero, post-select zero)
yields a rank-R operator on the system register.  Fitting minimizes the
Frobenius distance between the scaled contraction and a target operator by
Riemannian gradient descent on the product of unitary groups.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .ttcore import (
    TTOperator,
    TTVector,
    _left_orthogonalize_cores,
    _round_cores,
    diag_mpo_from_mps,
    mpo_inner,
    tt_left_canonicalize,
    tt_round,
    tt_to_dense,
)

_UNITARY_TOL = 1e-8
_MAX_HALVINGS = 10


@dataclass(frozen=True)
class UnitaryMPO:
    """Gate list of a step-like circuit plus a real scale factor.

    Gate k (k = 1..n) is a 2R x 2R unitary on (ancilla block, system qubit
    k); its row and column indices are a * 2 + s with a the ancilla value
    and s the qubit value.  scale * boundary_contract(self) approximates
    the fitted target.
    """

    gates: tuple[np.ndarray, ...]
    scale: float = 1.0

    def __post_init__(self):
        gates = tuple(
            np.array(g, dtype=np.complex128, order="C", copy=True)
            for g in self.gates
        )
        if len(gates) < 2:
            raise ValueError("need at least 2 gates")
        d = gates[0].shape[0]
        r = d // 2
        if d < 2 or d % 2 or r & (r - 1):
            raise ValueError(f"gate dimension must be 2 * power-of-two, got {d}")
        for k, g in enumerate(gates):
            if g.shape != (d, d):
                raise ValueError(f"gate {k} has shape {g.shape}, expected ({d}, {d})")
            err = np.max(np.abs(g.conj().T @ g - np.eye(d)))
            if err > _UNITARY_TOL:
                raise ValueError(f"gate {k} deviates from unitarity by {err:.2e}")
        for g in gates:
            g.flags.writeable = False
        object.__setattr__(self, "gates", gates)
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def n(self) -> int:
        return len(self.gates)

    @property
    def rank(self) -> int:
        return self.gates[0].shape[0] // 2

    @property
    def n_ancilla(self) -> int:
        return int(self.rank).bit_length() - 1


@dataclass
class FitReport:
    cost_trace: np.ndarray
    final_cost: float
    final_scale: float
    iterations: int
    seed: int
    wall_time_s: float
    lr_final: float
    max_unitarity_error: float
    spot_check_max_dev: float | None = None


def _gate_to_core(gate: np.ndarray, rank: int, first: bool, last: bool) -> np.ndarray:
    """Gate matrix to operator core (a_in, s_out, s_in, a_out)."""
    core = gate.reshape(rank, 2, rank, 2).transpose(2, 1, 3, 0)
    if first:
        core = core[:1]
    if last:
        core = core[..., :1]
    return np.ascontiguousarray(core)


def _gates_to_cores(gates, rank: int) -> list[np.ndarray]:
    n = len(gates)
    return [
        _gate_to_core(g, rank, k == 0, k == n - 1) for k, g in enumerate(gates)
    ]


def boundary_contract(umpo: UnitaryMPO) -> TTOperator:
    """Contract ancillas (in |0..0>, out <0..0|) into a rank-R operator."""
    return TTOperator(_gates_to_cores(umpo.gates, umpo.rank))


def _left_envs(bra_cores, ket_cores) -> list[np.ndarray]:
    n = len(bra_cores)
    envs = [np.ones((1, 1), dtype=np.complex128)]
    for k in range(n):
        t = np.tensordot(envs[k], np.conj(bra_cores[k]), axes=(0, 0))
        envs.append(np.tensordot(t, ket_cores[k], axes=([0, 1, 2], [0, 1, 2])))
    return envs


def _right_envs(bra_cores, ket_cores) -> list[np.ndarray]:
    n = len(bra_cores)
    envs: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    envs[n - 1] = np.ones((1, 1), dtype=np.complex128)
    for k in range(n - 2, -1, -1):
        t = np.tensordot(np.conj(bra_cores[k + 1]), envs[k + 1], axes=(3, 0))
        envs[k] = np.tensordot(t, ket_cores[k + 1], axes=([1, 2, 3], [1, 2, 3]))
    return envs


def _site_env(left: np.ndarray, ket_core: np.ndarray, right: np.ndarray) -> np.ndarray:
    t = np.tensordot(left, ket_core, axes=(1, 0))
    return np.tensordot(t, right, axes=(3, 1))


def frobenius_cost(umpo: UnitaryMPO, h: TTOperator) -> float:
    """Squared Frobenius distance ||c * contraction - H||_F**2 in TT form."""
    cores = _gates_to_cores(umpo.gates, umpo.rank)
    uu = np.real(_left_envs(cores, cores)[-1][0, 0])
    uh = np.real(_left_envs(cores, h.cores)[-1][0, 0])
    hh = mpo_inner(h, h)
    c = umpo.scale
    # Cancellation can leave a squared distance at -1e-17; clamp.
    return float(max(c * c * uu - 2.0 * c * uh + np.real(hh), 0.0))


def optimal_scale(umpo: UnitaryMPO, h: TTOperator) -> float:
    """Scale minimizing the Frobenius cost, Re<contraction, H> / <contraction, contraction>."""
    cores = _gates_to_cores(umpo.gates, umpo.rank)
    uu = np.real(_left_envs(cores, cores)[-1][0, 0])
    if uu <= 0.0:
        raise ValueError("contracted operator has zero Frobenius norm")
    uh = np.real(_left_envs(cores, h.cores)[-1][0, 0])
    return float(uh / uu)


def qr_retract(mat: np.ndarray) -> np.ndarray:
    """QR factor with the positive-diagonal convention (nearest unitary gauge)."""
    q, r = np.linalg.qr(mat)
    diag = np.diagonal(r)
    phase = np.where(np.abs(diag) > 0, diag / np.abs(diag), 1.0)
    return q * phase


def random_unitary_mpo(n: int, rank: int, rng: np.random.Generator, scale: float = 1.0) -> UnitaryMPO:
    """Haar-like random gates from QR of a complex Gaussian matrix."""
    d = 2 * rank
    gates = []
    for _ in range(n):
        z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        gates.append(qr_retract(z))
    return UnitaryMPO(tuple(gates), scale)


def riemannian_fit(
    h: TTOperator,
    rank: int,
    lr: float = 0.02,
    iters: int = 10000,
    seed: int = 0,
    init: str = "completion",
    spot_check: bool = False,
) -> tuple[UnitaryMPO, FitReport]:
    """Fit a unitary MPO of the given rank to a target operator.

    Each iteration eliminates the scale analytically, computes Euclidean
    gradients of the cost for every gate from cached environment chains,
    projects them onto the unitary tangent spaces (skew projection
    (G - U G^dagger U) / 2), and retracts with QR.  All gates update
    simultaneously from the same environments.  A non-finite cost halves
    the learning rate and restores the best iterate; more than 10
    consecutive halvings abort.  The best iterate seen is returned.

    Parameters
    ----------
    init:
        "completion" (default) warm-starts from an isometry completion of
        the rounded, canonicalized target; "random" starts from seeded
        Haar-like gates.  Random starts on strongly diagonal targets sit in
        a plateau where the optimal scale suppresses the gradient, so the
        warm start is the practical default.
    spot_check:
        If true (needs n <= 6), recompute the cost densely every iteration
        and record the maximal deviation from the TT-form cost.
    """
    n = h.n
    if n < 2:
        raise ValueError("need at least 2 sites")
    if rank < 1 or rank & (rank - 1):
        raise ValueError(f"ansatz rank must be a power of two, got {rank}")
    if spot_check and n > 6:
        raise ValueError("spot_check limited to 6 qubits")
    rng = np.random.default_rng(seed)
    d = 2 * rank
    if init == "random":
        gates = [
            qr_retract(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
            for _ in range(n)
        ]
    elif init == "completion":
        target = _rounded_canonical(h, rank)
        warm = _completion_gates(target, rank, project=True)[0]
        gates = [np.array(g) for g in warm]
    else:
        raise ValueError(f"unknown init {init!r}")

    hh = float(np.real(mpo_inner(h, h)))
    h_dense = tt_to_dense(h) if spot_check else None
    eye = np.eye(d)

    t0 = time.perf_counter()
    trace = np.empty(iters + 1)
    best_cost = np.inf
    best_gates = [g.copy() for g in gates]
    best_scale = 1.0
    lr_current = float(lr)
    halvings = 0
    max_unit_err = 0.0
    spot_dev = 0.0 if spot_check else None

    for it in range(iters + 1):
        cores = _gates_to_cores(gates, rank)
        uu_left = _left_envs(cores, cores)
        uh_left = _left_envs(cores, h.cores)
        uu = float(np.real(uu_left[-1][0, 0]))
        uh = float(np.real(uh_left[-1][0, 0]))
        diverged = not np.isfinite(uu) or not np.isfinite(uh) or uu <= 0.0
        if not diverged:
            c = uh / uu
            cost = max(c * c * uu - 2.0 * c * uh + hh, 0.0)
            diverged = not np.isfinite(cost)
        if diverged:
            halvings += 1
            if halvings > _MAX_HALVINGS:
                raise RuntimeError(
                    "fit diverged: learning rate halved more than "
                    f"{_MAX_HALVINGS} times in a row"
                )
            lr_current *= 0.5
            gates = [g.copy() for g in best_gates]
            trace[it] = best_cost
            continue
        halvings = 0
        trace[it] = cost
        if cost < best_cost:
            best_cost = cost
            best_gates = [g.copy() for g in gates]
            best_scale = c
        for g in gates:
            err = float(np.max(np.abs(g.conj().T @ g - eye)))
            if err > max_unit_err:
                max_unit_err = err
        if spot_check:
            u_dense = tt_to_dense(TTOperator(cores))
            dense_cost = float(np.linalg.norm(c * u_dense - h_dense) ** 2)
            spot_dev = max(spot_dev, abs(dense_cost - cost))
        if it == iters:
            break

        uu_right = _right_envs(cores, cores)
        uh_right = _right_envs(cores, h.cores)
        new_gates = []
        for k in range(n):
            e_uu = _site_env(uu_left[k], cores[k], uu_right[k])
            e_uh = _site_env(uh_left[k], h.cores[k], uh_right[k])
            grad_core = c * c * e_uu - c * e_uh
            full = np.zeros((rank, 2, 2, rank), dtype=np.complex128)
            full[: grad_core.shape[0], :, :, : grad_core.shape[3]] = grad_core
            grad = full.transpose(3, 1, 0, 2).reshape(d, d)
            u = gates[k]
            rgrad = 0.5 * (grad - u @ grad.conj().T @ u)
            new_gates.append(qr_retract(u - lr_current * rgrad))
        gates = new_gates

    wall = time.perf_counter() - t0
    fitted = UnitaryMPO(tuple(best_gates), best_scale)
    report = FitReport(
        cost_trace=trace,
        final_cost=float(best_cost),
        final_scale=float(best_scale),
        iterations=iters,
        seed=seed,
        wall_time_s=wall,
        lr_final=lr_current,
        max_unitarity_error=max_unit_err,
        spot_check_max_dev=spot_dev,
    )
    return fitted, report


def unitary_completion(h: TTOperator, tol: float = 1e-8) -> UnitaryMPO:
    """Extend isometric operator cores to a unitary MPO, exactly embedding h.

    Each core (scaled by a per-core factor lambda, accumulated into the
    returned scale) must reshape to an isometry within tol: for cores
    1..n-1 the (2 r_out, 2 r_in) matrix taking (ancilla-in, qubit-in) to
    (ancilla-out, qubit-out) needs orthonormal columns, for core n the two
    post-selected rows need to be orthonormal.  The free gate columns and
    rows are filled with an orthonormal complement, so the boundary
    contraction of the result reproduces h / scale exactly.
    """
    interior = max(h.ranks[1:-1], default=1)
    rank = 1 << max(0, int(interior - 1).bit_length())
    gates, scale = _completion_gates(h, rank, project=False, tol=tol)
    return UnitaryMPO(tuple(gates), scale)


def exact_diagonal_embedding(f: TTVector, tol: float = 1e-8) -> UnitaryMPO:
    """Unitary MPO that embeds diag(f) exactly, when the gauge allows it.

    Rounds f losslessly, moves it to left-canonical gauge, promotes it to a
    diagonal operator, and completes the cores to unitaries.  Succeeds only
    for targets whose canonical cores are scaled isometries slice by slice
    (the sine chain is the canonical example); anything else raises, which
    is the signal to fall back to variational fitting.
    """
    canon = tt_left_canonicalize(tt_round(f, tol=0.0))
    return unitary_completion(diag_mpo_from_mps(canon), tol=tol)


def _rounded_canonical(h: TTOperator, rank: int) -> TTOperator:
    """Round operator bonds to at most rank and left-orthogonalize."""
    cores = [c.reshape(c.shape[0], 4, c.shape[3]) for c in h.cores]
    cores = _round_cores(cores, tol=0.0, max_rank=rank)
    cores = _left_orthogonalize_cores(cores)
    return TTOperator([c.reshape(c.shape[0], 2, 2, c.shape[2]) for c in cores])


def _completion_gates(
    h: TTOperator, rank: int, project: bool, tol: float = 1e-8
) -> tuple[list[np.ndarray], float]:
    n = h.n
    if n < 2:
        raise ValueError("need at least 2 sites")
    if max(h.ranks) > rank:
        raise ValueError(
            f"operator rank {max(h.ranks)} exceeds ansatz rank {rank}"
        )
    d = 2 * rank
    gates: list[np.ndarray] = []
    scale = 1.0
    for k, core in enumerate(h.cores):
        r_l, _, _, r_r = core.shape
        if k < n - 1:
            v = core.transpose(3, 1, 0, 2).reshape(2 * r_r, 2 * r_l)
            lam = float(np.sqrt(np.sum(np.abs(v) ** 2) / (2 * r_l)))
            if lam == 0.0:
                raise ValueError(f"core {k} is zero, cannot scale to isometry")
            v = v / lam
            block = np.zeros((d, 2 * r_l), dtype=np.complex128)
            block[: 2 * r_r] = v
            if project:
                # Polar factor of the padded block: orthonormal columns even
                # when the core itself is rank deficient (tapering bonds).
                a, _, bh = np.linalg.svd(block, full_matrices=False)
                block = a @ bh
            else:
                dev = np.max(np.abs(v.conj().T @ v - np.eye(2 * r_l)))
                if dev > tol:
                    raise ValueError(
                        f"core {k} is not a column isometry (deviation {dev:.2e})"
                    )
            gate = np.zeros((d, d), dtype=np.complex128)
            gate[:, : 2 * r_l] = block
            if 2 * r_l < d:
                gate[:, 2 * r_l :] = scipy.linalg.null_space(block.conj().T)
        else:
            v = core[..., 0].transpose(1, 0, 2).reshape(2, 2 * r_l)
            lam = float(np.sqrt(np.sum(np.abs(v) ** 2) / 2))
            if lam == 0.0:
                raise ValueError("last core is zero, cannot scale to isometry")
            v = v / lam
            if project:
                a, _, bh = np.linalg.svd(v, full_matrices=False)
                v = a @ bh
            else:
                dev = np.max(np.abs(v @ v.conj().T - np.eye(2)))
                if dev > tol:
                    raise ValueError(
                        f"last core rows are not orthonormal (deviation {dev:.2e})"
                    )
            gate = np.zeros((d, d), dtype=np.complex128)
            gate[:2, : 2 * r_l] = v
            gate[2:, :] = scipy.linalg.null_space(gate[:2, :]).conj().T
        scale *= lam
        gates.append(gate)
    return gates, scale


def gate_count_estimate(n: int, rank: int) -> tuple[int, int]:
    """Two-qubit gate estimate for the circuit plus the per-gate bound.

    The estimate follows the n * R**2 scaling law with unit constant.  The
    second value is the compilation lower bound for one gate: a unitary on
    log2(rank) + 1 qubits needs on the order of 4 ** (log2(rank) + 1)
    = 4 rank**2 two-qubit gates.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if rank < 1 or rank & (rank - 1):
        raise ValueError(f"rank must be a power of two, got {rank}")
    return n * rank * rank, 4 * rank * rank
