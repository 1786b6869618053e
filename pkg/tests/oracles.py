"""Independent reference implementations used as test oracles.

Everything here works by direct dense enumeration with explicit bit
arithmetic, no tensor-train shortcuts, so agreement with the library is
meaningful evidence rather than a tautology.
"""

import numpy as np


def bits_of(flat: int, n: int) -> list[int]:
    """Big-endian bit list of a 0-based flat index."""
    return [(flat >> (n - 1 - j)) & 1 for j in range(n)]


def dense_vector(cores) -> np.ndarray:
    """Contract TT vector cores entry by entry, qubit 1 most significant."""
    n = len(cores)
    dtype = np.result_type(*(np.asarray(c).dtype for c in cores))
    out = np.zeros(2**n, dtype=dtype)
    for flat in range(2**n):
        mat = np.eye(1, dtype=dtype)
        for j, b in enumerate(bits_of(flat, n)):
            mat = mat @ np.asarray(cores[j])[:, b, :]
        out[flat] = mat[0, 0]
    return out


def dense_operator(cores) -> np.ndarray:
    """Contract TT operator cores entry by entry; cores are (l, row, col, r)."""
    n = len(cores)
    dtype = np.result_type(*(np.asarray(c).dtype for c in cores))
    dim = 2**n
    out = np.zeros((dim, dim), dtype=dtype)
    for row in range(dim):
        rbits = bits_of(row, n)
        for col in range(dim):
            cbits = bits_of(col, n)
            mat = np.eye(1, dtype=dtype)
            for j in range(n):
                mat = mat @ np.asarray(cores[j])[:, rbits[j], cbits[j], :]
            out[row, col] = mat[0, 0]
    return out


def embed_gate(gate: np.ndarray, n: int, n_ancilla: int, k: int) -> np.ndarray:
    """Dense matrix of one circuit gate on (ancilla block, system qubit k).

    The register index is a * 2**n + s with the ancilla block most
    significant and system qubit 1 the most significant bit of s.  k is
    1-based.
    """
    rank = 1 << n_ancilla
    dim = 1 << (n + n_ancilla)
    out = np.zeros((dim, dim), dtype=np.complex128)
    qbit = 1 << (n - k)
    for x in range(dim):
        a_in = x >> n
        s = x & ((1 << n) - 1)
        b_in = 1 if s & qbit else 0
        col = a_in * 2 + b_in
        for a_out in range(rank):
            for b_out in (0, 1):
                s_out = (s & ~qbit) | (qbit if b_out else 0)
                y = (a_out << n) | s_out
                out[y, x] += gate[a_out * 2 + b_out, col]
    return out


def full_circuit_matrix(umpo) -> np.ndarray:
    """Dense matrix of the whole step-like circuit, gate 1 applied first."""
    n = umpo.n
    dim = 1 << (n + umpo.n_ancilla)
    full = np.eye(dim, dtype=np.complex128)
    for k, gate in enumerate(umpo.gates, start=1):
        full = embed_gate(np.asarray(gate), n, umpo.n_ancilla, k) @ full
    return full


def projected_block(umpo) -> np.ndarray:
    """Ancilla-in zero, ancilla-out zero block of the full circuit matrix."""
    dim = 1 << umpo.n
    return full_circuit_matrix(umpo)[:dim, :dim]


def sine_tt_cores(a: float, b: float, n: int) -> list[np.ndarray]:
    """Exact rank-2 TT of sin(x_k) on the lattice x_k = a + (k-1)(b-a)/2**n.

    Carries the running pair (sin t, cos t) through the chain with the angle
    addition rotation, so the construction is analytic, not numeric.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    h = (b - a) / 2**n
    steps = [h * 2 ** (n - 1 - j) for j in range(n)]
    first = np.zeros((1, 2, 2))
    for bit in (0, 1):
        theta = a + bit * steps[0]
        first[0, bit] = (np.sin(theta), np.cos(theta))
    cores = [first]
    for j in range(1, n - 1):
        core = np.zeros((2, 2, 2))
        for bit in (0, 1):
            phi = bit * steps[j]
            core[:, bit, :] = [
                [np.cos(phi), -np.sin(phi)],
                [np.sin(phi), np.cos(phi)],
            ]
        cores.append(core)
    last = np.zeros((2, 2, 1))
    for bit in (0, 1):
        phi = bit * steps[n - 1]
        last[:, bit, 0] = (np.cos(phi), np.sin(phi))
    cores.append(last)
    return cores
