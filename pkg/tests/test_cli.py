"""End-to-end command-line runs against temporary run directories."""

import json

import numpy as np
import pytest
import yaml
from click.testing import CliRunner

from qpower.cli import main
from qpower.serialize import load_tt_vector, read_csv

_EXPECTED_PIPELINE_FILES = [
    "tt.npz",
    "cross_validation.csv",
    "approximate_report.csv",
    "unitary.npz",
    "fit_report.csv",
    "fit_timing.csv",
    "iterate_report.csv",
    "success_probability.csv",
    "success_scan.csv",
    "rank_growth.csv",
    "gate_counts.csv",
    "timing.csv",
    "timing_slope.csv",
    "resolved.yaml",
    "manifest.json",
]


def _run(args):
    return CliRunner().invoke(main, args, catch_exceptions=False)


def _error_record(result):
    assert result.exit_code == 1
    lines = [line for line in result.stderr.splitlines() if line.strip()]
    assert len(lines) == 1
    return json.loads(lines[0])


@pytest.fixture(scope="module")
def sine_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("sine_run")
    result = _run(
        ["pipeline", "--benchmark", "sine", "--out", str(out), "--seed", "3"]
    )
    assert result.exit_code == 0, result.output
    return out


def test_pipeline_writes_expected_artifacts(sine_run):
    for name in _EXPECTED_PIPELINE_FILES:
        assert (sine_run / name).is_file(), name
    for p in (1, 10, 50, 100):
        assert (sine_run / f"distribution_p{p}.csv").is_file()


def test_pipeline_csvs_carry_schema_lines(sine_run):
    for path in sorted(sine_run.glob("*.csv")):
        first = path.read_text().splitlines()[0]
        assert first.startswith("# schema="), path.name


def test_pipeline_manifest_covers_everything(sine_run):
    from qpower.serialize import sha256_file

    data = json.loads((sine_run / "manifest.json").read_text())
    on_disk = sorted(
        p.name for p in sine_run.iterdir() if p.is_file() and p.name != "manifest.json"
    )
    assert sorted(data["files"]) == on_disk
    assert data["files"]["tt.npz"] == sha256_file(sine_run / "tt.npz")


def test_pipeline_resolved_snapshot(sine_run):
    cfg = yaml.safe_load((sine_run / "resolved.yaml").read_text())
    assert cfg["benchmark"] == "sine"
    assert cfg["grid"] == {"domain": [[0.0, np.pi]], "qubits": [8]}
    assert cfg["cross"]["max_rank"] == 2
    assert cfg["fit"]["method"] == "completion"
    assert cfg["seed"] == 3
    state = cfg["objective_state"]
    assert state["direction"] == "maximize"
    # the lattice hits the sine maximum exactly, so the pilot scale is 1
    assert state["scale"] == pytest.approx(1.0)
    assert state["degenerate"] is False


def test_pipeline_approximation_quality(sine_run):
    _, _, rows = read_csv(sine_run / "cross_validation.csv")
    assert float(rows[-1][1]) < 1e-10
    _, header, report = read_csv(sine_run / "approximate_report.csv")
    row = dict(zip(header, report[0]))
    assert row["total_qubits"] == "8"
    assert row["max_rank"] == "2"
    assert int(row["n_evaluations"]) <= int(row["evaluation_budget"])


def test_pipeline_iteration_summary(sine_run):
    _, header, rows = read_csv(sine_run / "iterate_report.csv")
    table = {int(dict(zip(header, r))["p"]): dict(zip(header, r)) for r in rows}
    assert set(table) == {1, 10, 50, 100}
    # one selected step from the uniform start keeps half the mass
    assert float(table[1]["cumulative_probability"]) == pytest.approx(0.5, abs=1e-3)
    for p in (10, 50, 100):
        point = float(table[p]["candidate_point"])
        assert abs(point - np.pi / 2) < np.pi / 2**8 + 1e-12
        assert table[p]["dead_branch"] == "0"


def test_pipeline_distribution_files(sine_run):
    _, _, rows = read_csv(sine_run / "distribution_p1.csv")
    assert len(rows) == 256
    probs = np.array([float(r[1]) for r in rows])
    assert probs.sum() == pytest.approx(1.0, abs=1e-9)
    lattice = np.arange(256) * np.pi / 256
    ref = np.sin(lattice) ** 2
    ref /= ref.sum()
    assert np.max(np.abs(probs - ref)) < 1e-8


def test_pipeline_analysis_tables(sine_run):
    _, header, rows = read_csv(sine_run / "success_probability.csv")
    row1 = dict(zip(header, rows[0]))
    assert row1["p"] == "1"
    assert float(row1["sum_value"]) == pytest.approx(0.5, abs=1e-12)
    assert float(row1["discrepancy"]) < 1e-6

    _, header, rows = read_csv(sine_run / "success_scan.csv")
    p1 = [r for r in rows if r[0] == "1"]
    assert [r[1] for r in p1] == ["6", "8", "10"]
    assert all(float(r[3]) < 2.0**-5 for r in p1)

    # iteration starts from the stored approximation (rank 2), so growth is
    # 2**j * 2 and the measurement saturates the product-law prediction
    _, header, rows = read_csv(sine_run / "rank_growth.csv")
    assert [(r[0], r[1], r[2]) for r in rows] == [
        ("1", "4", "4"),
        ("2", "8", "8"),
        ("3", "16", "16"),
    ]

    _, header, rows = read_csv(sine_run / "gate_counts.csv")
    table = {r[1]: r for r in rows}
    assert table["4"][2] == "128"  # 8 qubits, rank 4
    assert table["4"][3] == "64"
    assert set(table) == {"2", "4", "8", "16"}

    _, _, slope_rows = read_csv(sine_run / "timing_slope.csv")
    assert np.isfinite(float(slope_rows[0][1]))


def test_pipeline_deterministic_artifacts(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    out1.mkdir()
    out2.mkdir()
    args = ["pipeline", "--benchmark", "sine", "--out", None, "--seed", "11"]
    for out in (out1, out2):
        args[4] = str(out)
        result = _run(args)
        assert result.exit_code == 0, result.output
    # resolved.yaml embeds the output path itself; timing files measure wall
    # time; the manifest hashes both.  Everything else must match exactly.
    skip = {
        "timing.csv",
        "timing_slope.csv",
        "fit_timing.csv",
        "manifest.json",
        "resolved.yaml",
    }
    names = sorted(p.name for p in out1.iterdir() if p.is_file())
    assert names == sorted(p.name for p in out2.iterdir() if p.is_file())
    for name in names:
        if name in skip:
            continue
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name
    cfg1 = yaml.safe_load((out1 / "resolved.yaml").read_text())
    cfg2 = yaml.safe_load((out2 / "resolved.yaml").read_text())
    cfg1.pop("out")
    cfg2.pop("out")
    assert cfg1 == cfg2
    m1 = json.loads((out1 / "manifest.json").read_text())["files"]
    m2 = json.loads((out2 / "manifest.json").read_text())["files"]
    assert {k: v for k, v in m1.items() if k not in skip} == {
        k: v for k, v in m2.items() if k not in skip
    }


def test_flag_overrides_reach_snapshot_and_artifacts(tmp_path):
    out = tmp_path / "run"
    out.mkdir()
    result = _run(
        [
            "approximate",
            "--benchmark",
            "sine",
            "--out",
            str(out),
            "--rank",
            "3",
            "--powers",
            "2,7",
        ]
    )
    assert result.exit_code == 0, result.output
    cfg = yaml.safe_load((out / "resolved.yaml").read_text())
    assert cfg["cross"]["max_rank"] == 3
    assert cfg["powers"] == [2, 7]
    assert load_tt_vector(out / "tt.npz").max_rank <= 3


def test_tabulated_pipeline_with_zero_power(tmp_path):
    out = tmp_path / "run"
    out.mkdir()
    grid_n = 3
    table = tmp_path / "objective.csv"
    values = [0.1, 0.3, 0.2, 0.9, 0.25, 0.2, 0.15, 0.1]
    table.write_text(
        "".join(f"{k},{v}\n" for k, v in zip(range(1, 9), values))
    )
    config = tmp_path / "run.yaml"
    config.write_text(
        yaml.safe_dump(
            {
                "tabulated": {
                    "path": str(table),
                    "domain": [[0.0, 1.0]],
                    "direction": "maximize",
                },
                "grid": {"qubits": [grid_n]},
                "cross": {"max_rank": 4},
                "fit": {"ansatz_rank": 2, "iters": 400},
                "powers": [0, 2],
                "out": str(out),
            }
        )
    )
    result = _run(["pipeline", "--config", str(config)])
    assert result.exit_code == 0, result.output

    _, _, rows = read_csv(out / "distribution_p0.csv")
    probs = [float(r[1]) for r in rows]
    assert np.allclose(probs, 1.0 / 8)
    _, header, rows = read_csv(out / "iterate_report.csv")
    zero = dict(zip(header, rows[0]))
    assert zero["p"] == "0"
    assert float(zero["cumulative_probability"]) == 1.0
    assert zero["candidate_flat"] == "1"  # uniform tie breaks to site 1
    # the p=2 candidate tracks the tabulated argmax (site 4)
    two = dict(zip(header, rows[1]))
    assert two["candidate_flat"] == "4"


def test_error_missing_out_dir(tmp_path):
    record = _error_record(
        _run(["approximate", "--benchmark", "sine", "--out", str(tmp_path / "gone")])
    )
    assert record["command"] == "approximate"
    assert record["error"] == "FileNotFoundError"
    assert "does not exist" in record["message"]


def test_error_no_objective(tmp_path):
    record = _error_record(_run(["approximate", "--out", str(tmp_path)]))
    assert record["error"] == "ValueError"
    assert "benchmark" in record["message"]


def test_error_bad_ansatz_rank(tmp_path):
    record = _error_record(
        _run(
            ["fit", "--benchmark", "sine", "--out", str(tmp_path), "--ansatz-rank", "3"]
        )
    )
    assert record["error"] == "ValueError"
    assert "power of two" in record["message"]


def test_error_bad_powers(tmp_path):
    record = _error_record(
        _run(
            ["iterate", "--benchmark", "sine", "--out", str(tmp_path), "--powers", "1,x"]
        )
    )
    assert record["error"] == "ValueError"
    assert "powers" in record["message"]


def test_error_iterate_before_fit(tmp_path):
    record = _error_record(
        _run(["iterate", "--benchmark", "sine", "--out", str(tmp_path)])
    )
    assert record["error"] == "FileNotFoundError"
    assert "run fit first" in record["message"]


def test_error_fit_before_approximate(tmp_path):
    record = _error_record(
        _run(["fit", "--benchmark", "sine", "--out", str(tmp_path)])
    )
    assert record["error"] == "FileNotFoundError"
    assert "run approximate first" in record["message"]


def test_error_missing_config_file(tmp_path):
    record = _error_record(
        _run(["approximate", "--config", str(tmp_path / "nope.yaml")])
    )
    assert record["error"] == "FileNotFoundError"


def test_error_unknown_benchmark(tmp_path):
    record = _error_record(
        _run(["approximate", "--benchmark", "bogus", "--out", str(tmp_path)])
    )
    assert record["error"] == "ValueError"
    assert "bogus" in record["message"]