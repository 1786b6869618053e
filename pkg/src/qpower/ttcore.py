"""Tensor-train vectors and operators over qubit grids.

A TTVector stores a length-2**n vector as n cores of shape
(r_{j-1}, 2, r_j) with border ranks r_0 = r_n = 1; a TTOperator stores a
2**n x 2**n matrix as cores of shape (r_{j-1}, 2, 2, r_j) with physical
legs ordered (row, column).  Core 1 corresponds to the most significant
qubit of the flat index.  Cores are copied and frozen at construction;
every operation returns new values.
"""

from __future__ import annotations

import numpy as np

_DENSE_VECTOR_LIMIT = 16
_DENSE_OPERATOR_LIMIT = 10

# Relative singular-value threshold below which a pivoted-QR factor is
# treated as rank deficient during rounding and canonicalization.
_RANK_EPS = 1e-14


def _freeze(core: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(core):
        out = np.array(core, dtype=np.complex128, order="C")
    else:
        out = np.array(core, dtype=np.float64, order="C")
    out.flags.writeable = False
    return out


class _TTBase:
    _phys_axes: int

    def __init__(self, cores):
        cores = tuple(_freeze(np.asarray(c)) for c in cores)
        if not cores:
            raise ValueError("need at least one core")
        want_ndim = 2 + self._phys_axes
        for j, c in enumerate(cores):
            if c.ndim != want_ndim:
                raise ValueError(
                    f"core {j} has {c.ndim} axes, expected {want_ndim}"
                )
            if any(c.shape[1 + a] != 2 for a in range(self._phys_axes)):
                raise ValueError(f"core {j} physical dimension is not 2")
        if cores[0].shape[0] != 1 or cores[-1].shape[-1] != 1:
            raise ValueError("border ranks must be 1")
        for j in range(len(cores) - 1):
            if cores[j].shape[-1] != cores[j + 1].shape[0]:
                raise ValueError(
                    f"rank mismatch between cores {j} and {j + 1}: "
                    f"{cores[j].shape[-1]} vs {cores[j + 1].shape[0]}"
                )
        self.cores = cores

    @property
    def n(self) -> int:
        return len(self.cores)

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(c.shape[0] for c in self.cores) + (1,)

    @property
    def max_rank(self) -> int:
        return max(self.ranks)

    @property
    def dtype(self):
        return np.result_type(*(c.dtype for c in self.cores))


class TTVector(_TTBase):
    """Length-2**n vector in tensor-train form."""

    _phys_axes = 1


class TTOperator(_TTBase):
    """2**n x 2**n operator in tensor-train form."""

    _phys_axes = 2


def tt_ones(n: int, dtype=np.float64) -> TTVector:
    """Rank-1 tensor train of the all-ones vector."""
    core = np.ones((1, 2, 1), dtype=dtype)
    return TTVector([core] * n)


def random_tt(n: int, max_rank: int, rng: np.random.Generator, dtype=np.float64) -> TTVector:
    """Random tensor train with ranks min(max_rank, 2**j, 2**(n-j))."""
    ranks = [min(max_rank, 2**j, 2 ** (n - j)) for j in range(n + 1)]
    cores = []
    for j in range(n):
        shape = (ranks[j], 2, ranks[j + 1])
        core = rng.standard_normal(shape)
        if np.issubdtype(dtype, np.complexfloating):
            core = core + 1j * rng.standard_normal(shape)
        cores.append(core)
    return TTVector(cores)


def tt_scale(x: TTVector, alpha) -> TTVector:
    """Multiply by a scalar, absorbed into the first core."""
    cores = list(x.cores)
    cores[0] = cores[0] * alpha
    return TTVector(cores)


def tt_to_dense(x) -> np.ndarray:
    """Contract to a dense vector (n <= 16) or matrix (n <= 10).

    Vector entries come out with qubit 1 as the most significant bit of the
    flat index; operators come out as (2**n, 2**n) matrices with the same
    bit convention on rows and columns.
    """
    if isinstance(x, TTVector):
        if x.n > _DENSE_VECTOR_LIMIT:
            raise ValueError(
                f"dense vector limited to {_DENSE_VECTOR_LIMIT} qubits, got {x.n}"
            )
        out = x.cores[0][0]
        for core in x.cores[1:]:
            out = np.tensordot(out, core, axes=(-1, 0))
        return np.ascontiguousarray(out.reshape(-1))
    if isinstance(x, TTOperator):
        if x.n > _DENSE_OPERATOR_LIMIT:
            raise ValueError(
                f"dense operator limited to {_DENSE_OPERATOR_LIMIT} qubits, got {x.n}"
            )
        out = x.cores[0][0]
        for core in x.cores[1:]:
            out = np.tensordot(out, core, axes=(-1, 0))
        out = out[..., 0]
        n = x.n
        perm = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
        out = out.transpose(perm)
        return np.ascontiguousarray(out.reshape(2**n, 2**n))
    raise TypeError(f"expected TTVector or TTOperator, got {type(x).__name__}")


def tt_entries(x: TTVector, bits: np.ndarray) -> np.ndarray:
    """Evaluate entries at rows of qubit values, shape (m, n) -> (m,)."""
    bits = np.asarray(bits, dtype=np.int64)
    if bits.ndim != 2 or bits.shape[1] != x.n:
        raise ValueError(f"bits must have shape (m, {x.n}), got {bits.shape}")
    running = np.ones((bits.shape[0], 1), dtype=x.dtype)
    for j, core in enumerate(x.cores):
        slices = core[:, bits[:, j], :]  # (r_l, m, r_r)
        running = np.einsum("ma,amb->mb", running, slices)
    return running[:, 0]


def tt_inner(x: TTVector, y: TTVector):
    """Inner product <x, y> with the first argument conjugated."""
    if x.n != y.n:
        raise ValueError(f"length mismatch: {x.n} vs {y.n} qubits")
    env = np.ones((1, 1), dtype=np.result_type(x.dtype, y.dtype))
    for cx, cy in zip(x.cores, y.cores):
        t = np.tensordot(env, np.conj(cx), axes=(0, 0))  # (ry, s, rx')
        env = np.tensordot(t, cy, axes=([0, 1], [0, 1]))  # (rx', ry')
    val = env[0, 0]
    return float(val.real) if not np.iscomplexobj(val) else complex(val)


def tt_norm(x: TTVector) -> float:
    val = tt_inner(x, x)
    return float(np.sqrt(max(np.real(val), 0.0)))


def mpo_inner(a: TTOperator, b: TTOperator):
    """Frobenius inner product <A, B> = sum(conj(A) * B)."""
    if a.n != b.n:
        raise ValueError(f"length mismatch: {a.n} vs {b.n} qubits")
    env = np.ones((1, 1), dtype=np.result_type(a.dtype, b.dtype))
    for ca, cb in zip(a.cores, b.cores):
        t = np.tensordot(env, np.conj(ca), axes=(0, 0))  # (rb, i, j, ra')
        env = np.tensordot(t, cb, axes=([0, 1, 2], [0, 1, 2]))
    val = env[0, 0]
    return float(val.real) if not np.iscomplexobj(val) else complex(val)


def mpo_frobenius_norm(a: TTOperator) -> float:
    val = mpo_inner(a, a)
    return float(np.sqrt(max(np.real(val), 0.0)))


def diag_mpo_from_mps(x: TTVector) -> TTOperator:
    """Diagonal operator whose diagonal is the vector, same ranks.

    Each vector core A[r, k, r'] becomes the operator core
    A[r, k, j, r'] * delta_{kj}.
    """
    eye = np.eye(2)
    cores = [np.einsum("akb,kj->akjb", c, eye) for c in x.cores]
    return TTOperator(cores)


def mpo_apply(a: TTOperator, x: TTVector) -> TTVector:
    """Apply an operator to a vector without rounding.

    Output bond ranks are exactly the products of the input bond ranks.
    """
    if a.n != x.n:
        raise ValueError(f"length mismatch: {a.n} vs {x.n} qubits")
    cores = []
    for ca, cx in zip(a.cores, x.cores):
        ra_l, _, _, ra_r = ca.shape
        rx_l, _, rx_r = cx.shape
        out = np.einsum("aijb,cjd->acibd", ca, cx)
        cores.append(out.reshape(ra_l * rx_l, 2, ra_r * rx_r))
    return TTVector(cores)


def _round_cores(cores, tol: float, max_rank) -> list[np.ndarray]:
    """Shared rounding sweep for cores of shape (r, q, r).

    Left-to-right QR orthogonalization followed by a right-to-left truncated
    SVD sweep.  Per bond, singular values strictly below tol * sigma_max are
    discarded (a value exactly at the threshold is kept); max_rank caps the
    kept count when given.
    """
    cores = [np.asarray(c) for c in cores]
    n = len(cores)
    if n == 1:
        return cores
    for j in range(n - 1):
        r_l, q, r_r = cores[j].shape
        mat = cores[j].reshape(r_l * q, r_r)
        qmat, rmat = np.linalg.qr(mat)
        cores[j] = qmat.reshape(r_l, q, qmat.shape[1])
        cores[j + 1] = np.tensordot(rmat, cores[j + 1], axes=(1, 0))
    for j in range(n - 1, 0, -1):
        r_l, q, r_r = cores[j].shape
        mat = cores[j].reshape(r_l, q * r_r)
        u, s, vh = np.linalg.svd(mat, full_matrices=False)
        if s[0] > 0.0 and tol > 0.0:
            keep = int(np.count_nonzero(s >= tol * s[0]))
        else:
            keep = len(s)
        keep = max(keep, 1)
        if max_rank is not None:
            keep = min(keep, max_rank)
        cores[j] = vh[:keep].reshape(keep, q, r_r)
        carry = u[:, :keep] * s[:keep]
        cores[j - 1] = np.tensordot(cores[j - 1], carry, axes=(-1, 0))
    return cores


def tt_round(x: TTVector, tol: float = 1e-10, max_rank: int | None = None) -> TTVector:
    """Truncate ranks; the result deviates by at most about tol * norm.

    With tol = 0 and no max_rank the sweep is lossless: nothing is
    discarded, but economy factorization shapes still reduce stored ranks to
    min(2**j, 2**(n-j)).
    """
    if tol < 0.0:
        raise ValueError("tol must be nonnegative")
    if max_rank is not None and max_rank < 1:
        raise ValueError("max_rank must be at least 1")
    return TTVector(_round_cores(list(x.cores), tol, max_rank))


def _left_orthogonalize_cores(cores) -> list[np.ndarray]:
    """QR sweep leaving all but the last core left-orthogonal.

    Works for any physical dimension.  QR factors get the positive-diagonal
    convention, so the gauge is deterministic for a given input.
    """
    cores = [np.asarray(c) for c in cores]
    for j in range(len(cores) - 1):
        r_l, q, r_r = cores[j].shape
        qmat, rmat = np.linalg.qr(cores[j].reshape(r_l * q, r_r))
        diag = np.diagonal(rmat).copy()
        phase = np.where(np.abs(diag) > 0, diag / np.abs(diag), 1.0)
        qmat = qmat * phase
        rmat = np.conj(phase)[:, None] * rmat
        cores[j] = qmat.reshape(r_l, q, qmat.shape[1])
        cores[j + 1] = np.tensordot(rmat, cores[j + 1], axes=(1, 0))
    return cores


def tt_left_canonicalize(x: TTVector) -> TTVector:
    """Gauge with cores 1..n-1 left-orthogonal; the last core carries the norm."""
    return TTVector(_left_orthogonalize_cores(list(x.cores)))


def classical_power_iteration(
    h: TTOperator,
    f0: TTVector,
    p: int,
    tol: float = 0.0,
    max_rank: int | None = None,
) -> tuple[TTVector, list[int]]:
    """Iterate x <- round(H x) / ||round(H x)|| for p steps.

    Returns the final normalized iterate and the per-step maximal stored
    rank.  The default tol = 0 keeps every singular value, so rank growth
    follows the product law capped only by dense unfolding shapes.
    """
    if p < 0:
        raise ValueError("p must be nonnegative")
    nrm = tt_norm(f0)
    if nrm == 0.0:
        raise ValueError("initial vector has zero norm")
    x = tt_scale(f0, 1.0 / nrm)
    rank_trace: list[int] = []
    for _ in range(p):
        y = mpo_apply(h, x)
        y = tt_round(y, tol=tol, max_rank=max_rank)
        nrm = tt_norm(y)
        if nrm == 0.0 or not np.isfinite(nrm):
            raise ValueError("power iterate collapsed to zero norm")
        x = tt_scale(y, 1.0 / nrm)
        rank_trace.append(x.max_rank)
    return x, rank_trace
