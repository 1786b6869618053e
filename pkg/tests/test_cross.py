"""Maxvol pivot selection and sampled cross-interpolation."""

import numpy as np
import pytest

from oracles import sine_tt_cores
from qpower import grids
from qpower.benchmarks import ackley_values
from qpower.cross import CrossConfig, CrossResult, evaluation_budget, maxvol, tt_cross
from qpower.ttcore import TTVector, tt_entries, tt_to_dense


def test_maxvol_picks_identity_rows():
    rng = np.random.default_rng(0)
    mat = np.vstack([np.eye(3), 0.1 * rng.standard_normal((9, 3))])
    assert maxvol(mat).tolist() == [0, 1, 2]


def test_maxvol_dominance():
    rng = np.random.default_rng(1)
    for trial in range(20):
        mat = rng.standard_normal((30, 5))
        piv = maxvol(mat)
        assert len(piv) == 5
        assert np.all(np.diff(piv) > 0)  # sorted, distinct
        b = mat @ np.linalg.inv(mat[piv])
        assert np.max(np.abs(b)) <= 1.0 + 1e-2 + 1e-9


def test_maxvol_volume_quasi_optimal():
    rng = np.random.default_rng(2)
    mat = rng.standard_normal((40, 3))
    piv = maxvol(mat)
    vol = abs(np.linalg.det(mat[piv]))
    best = 0.0
    for _ in range(1000):
        rows = rng.choice(40, size=3, replace=False)
        best = max(best, abs(np.linalg.det(mat[rows])))
    # dominance bounds the volume gap by (1 + tol) per column
    assert vol >= best / 1.01**3


def test_maxvol_permutation_equivariant():
    rng = np.random.default_rng(3)
    mat = rng.standard_normal((12, 4))
    perm = rng.permutation(12)
    rows1 = np.sort(mat[maxvol(mat)], axis=0)
    rows2 = np.sort(mat[perm][maxvol(mat[perm])], axis=0)
    assert np.allclose(rows1, rows2)


def test_maxvol_square_input_returns_everything():
    mat = np.random.default_rng(4).standard_normal((4, 4))
    assert maxvol(mat).tolist() == [0, 1, 2, 3]


def test_maxvol_validation():
    rng = np.random.default_rng(5)
    with pytest.raises(ValueError):
        maxvol(rng.standard_normal((3, 5)))
    with pytest.raises(ValueError, match="deficient"):
        mat = np.ones((6, 2))
        maxvol(mat)
    with pytest.raises(ValueError):
        maxvol(rng.standard_normal(7))


def _sine_fn(n):
    g = grids.make_grid([(0.0, np.pi)], [n])
    spec = grids.ObjectiveSpec(lambda p: np.sin(p[:, 0]), direction="maximize", scale=1.0)
    return grids.lattice_function(g, spec), g


def test_cross_recovers_exact_rank_two_function():
    n = 8
    fn, g = _sine_fn(n)
    res = tt_cross(fn, n, CrossConfig(max_rank=2, seed=0))
    assert isinstance(res, CrossResult)
    assert res.validation_errors[-1] < 1e-10
    assert res.converged
    dense = tt_to_dense(res.tt)
    ref = tt_to_dense(TTVector(sine_tt_cores(0.0, np.pi, n)))
    assert np.max(np.abs(dense - ref)) < 1e-10


def test_cross_separable_function_shrinks_to_rank_one():
    n = 6
    w = np.array([0.3, 0.7, 0.1, 0.2, 0.4, 0.05])

    def fn(bits):
        return np.exp(-(np.asarray(bits) @ w))

    res = tt_cross(fn, n, CrossConfig(max_rank=3, seed=0))
    assert res.tt.max_rank == 1
    all_bits = ((np.arange(64)[:, None] >> np.arange(5, -1, -1)) & 1).astype(np.int64)
    assert np.max(np.abs(tt_entries(res.tt, all_bits) - fn(all_bits))) < 1e-12


def test_cross_rugged_two_dimensional_objective():
    g = grids.make_grid([(-5.0, 5.0), (-5.0, 5.0)], [4, 4])
    pts = grids.bits_to_points(g, grids.flat_to_bits(g, np.arange(1, g.size + 1)))
    spec = grids.preprocess_objective(
        grids.ObjectiveSpec(ackley_values, direction="minimize"), pts
    )
    fn = grids.lattice_function(g, spec)
    res = tt_cross(fn, g.total_qubits, CrossConfig(max_rank=6, seed=1))
    bits = grids.flat_to_bits(g, np.arange(1, g.size + 1))
    ref = fn(bits)
    rel = np.linalg.norm(tt_entries(res.tt, bits) - ref) / np.linalg.norm(ref)
    assert rel < 0.05


def test_cross_respects_evaluation_budget():
    n = 8
    fn, _ = _sine_fn(n)
    cfg = CrossConfig(max_rank=4, n_sweeps=3, validation_sample_count=64, seed=0)
    res = tt_cross(fn, n, cfg)
    budget = evaluation_budget(n, cfg)
    assert res.evaluation_budget == budget
    assert res.n_evaluations <= budget
    ranks = [min(4, 2**j, 2 ** (n - j)) for j in range(n + 1)]
    by_hand = 3 * 2 * sum(ranks[j] * 2 * ranks[j + 1] for j in range(n)) + 64
    assert budget == by_hand


def test_cross_interpolates_exactly_on_returned_index_sets():
    # The snapshot must reproduce the objective on every cross fiber built
    # from the stored prefix/suffix sets, even when the approximation is
    # inexact elsewhere.
    g = grids.make_grid([(-5.0, 5.0), (-5.0, 5.0)], [4, 4])
    pts = grids.bits_to_points(g, grids.flat_to_bits(g, np.arange(1, g.size + 1)))
    spec = grids.preprocess_objective(
        grids.ObjectiveSpec(ackley_values, direction="minimize"), pts
    )
    fn = grids.lattice_function(g, spec)
    n = g.total_qubits
    res = tt_cross(fn, n, CrossConfig(max_rank=4, seed=2))
    assert len(res.left_sets) == len(res.right_sets) == n - 1
    for lset, rset in zip(res.left_sets, res.right_sets):
        assert lset.shape[1] + rset.shape[1] == n
        rows = np.array([np.concatenate([l, r]) for l in lset for r in rset])
        dev = np.max(np.abs(tt_entries(res.tt, rows) - fn(rows)))
        assert dev < 1e-10


def test_cross_deterministic():
    n = 8
    fn, _ = _sine_fn(n)
    cfg = CrossConfig(max_rank=3, seed=7)
    r1 = tt_cross(fn, n, cfg)
    r2 = tt_cross(fn, n, cfg)
    assert r1.n_evaluations == r2.n_evaluations
    assert r1.validation_errors == r2.validation_errors
    for c1, c2 in zip(r1.tt.cores, r2.tt.cores):
        assert np.array_equal(c1, c2)


def test_cross_rejects_bad_objective():
    with pytest.raises(ValueError, match="finite"):
        tt_cross(lambda bits: np.full(len(bits), np.nan), 4, CrossConfig(max_rank=2))
    with pytest.raises(ValueError, match="shape"):
        tt_cross(lambda bits: np.ones(3), 4, CrossConfig(max_rank=2))
    fn, _ = _sine_fn(4)
    with pytest.raises(ValueError, match="2 qubits"):
        tt_cross(fn, 1, CrossConfig(max_rank=2))


def test_cross_config_validation():
    with pytest.raises(ValueError):
        CrossConfig(max_rank=0)
    with pytest.raises(ValueError):
        CrossConfig(max_rank=2, n_sweeps=0)
    with pytest.raises(ValueError):
        CrossConfig(max_rank=2, validation_sample_count=0)
    with pytest.raises(ValueError):
        CrossConfig(max_rank=2, tol=-1e-3)
