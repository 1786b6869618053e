"""Benchmark objective values and the tabulated-objective loader."""

import numpy as np
import pytest

from qpower import grids
from qpower.benchmarks import (
    ackley_values,
    get_benchmark,
    load_tabulated,
    rosenbrock_values,
    sine_values,
)


def test_sine_values():
    pts = np.array([[0.0], [np.pi / 2], [np.pi / 4]])
    out = sine_values(pts)
    assert out[0] == pytest.approx(0.0, abs=1e-15)
    assert out[1] == pytest.approx(1.0)
    assert out[2] == pytest.approx(np.sqrt(0.5))


def test_ackley_values():
    assert ackley_values(np.array([[0.0, 0.0]]))[0] == pytest.approx(0.0, abs=1e-14)
    # at (1, 1) the cosine term cancels e exactly
    expected = 20.0 * (1.0 - np.exp(-0.2))
    assert ackley_values(np.array([[1.0, 1.0]]))[0] == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(3.62538493, abs=1e-8)


def test_ackley_symmetry_and_sign():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-5, 5, size=(50, 2))
    vals = ackley_values(pts)
    assert np.all(vals >= 0.0)
    assert np.allclose(vals, ackley_values(-pts))
    assert np.allclose(vals, ackley_values(pts[:, ::-1]))


def test_rosenbrock_values():
    pts = np.array([[1.0, 1.0], [0.0, 0.0], [-1.0, 1.0]])
    assert np.allclose(rosenbrock_values(pts), [0.0, 1.0, 4.0])
    rng = np.random.default_rng(1)
    assert np.all(rosenbrock_values(rng.uniform(-2.5, 2.5, (50, 2))) >= 0.0)


def test_registry_optima_reproduce():
    for name in ("sine", "ackley", "rosenbrock"):
        bench = get_benchmark(name)
        val = bench.fn(np.array([bench.optimum_point]))[0]
        assert val == pytest.approx(bench.optimum_value, abs=1e-12)
        assert bench.dimension == len(bench.lower) == len(bench.upper)


def test_get_benchmark_unknown():
    with pytest.raises(ValueError, match="sine"):
        get_benchmark("nope")


def test_load_tabulated_round_trip(tmp_path):
    g = grids.make_grid([(0.0, 1.0), (0.0, 1.0)], [2, 1])
    rng = np.random.default_rng(3)
    rows = []
    values = {}
    for k1 in range(1, 5):
        for k2 in range(1, 3):
            v = rng.standard_normal()
            values[(k1, k2)] = v
            rows.append(f"{k1},{k2},{v!r}")
    path = tmp_path / "table.csv"
    path.write_text("# index1,index2,value\n" + "\n".join(rows) + "\n")

    fn = load_tabulated(path, g)
    for (k1, k2), v in values.items():
        pt = grids.index_to_point(g, (k1, k2))
        assert fn(np.array([pt]))[0] == v
    # off-lattice points snap to the nearest site
    pt = np.asarray(grids.index_to_point(g, (2, 1))) + 0.01
    assert fn(pt[None, :])[0] == values[(2, 1)]


def test_load_tabulated_missing_entry(tmp_path):
    g = grids.make_grid([(0.0, 1.0)], [1])
    path = tmp_path / "table.csv"
    path.write_text("1,0.5\n")
    fn = load_tabulated(path, g)
    assert fn(np.array([[0.0]]))[0] == 0.5
    with pytest.raises(ValueError, match="no entry"):
        fn(np.array([[0.5]]))


def test_load_tabulated_wrong_columns(tmp_path):
    g = grids.make_grid([(0.0, 1.0), (0.0, 1.0)], [1, 1])
    path = tmp_path / "table.csv"
    path.write_text("1,0.5\n")
    with pytest.raises(ValueError, match="columns"):
        load_tabulated(path, g)
