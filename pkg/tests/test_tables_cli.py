import json
import math
import subprocess
import sys

import numpy as np
import pytest

from narrowescape.cli import main, read_rows, write_rows
from narrowescape.geometry import HeadDomain, NeckSpec, ProblemSpec, ValidationError, problem_to_dict
from narrowescape.tables import (
    FIT_EXPECTED,
    RankDeficientFitError,
    configurations,
    fit_series,
    table_rows,
)

from reference_data import TABLE_EPS, TABLE_L, TABLE_SWEEP


def write_problem(tmp_path, spec, name="problem.json"):
    path = tmp_path / name
    path.write_text(json.dumps(problem_to_dict(spec)))
    return str(path)


@pytest.fixture
def disk_problem(tmp_path):
    return write_problem(tmp_path, ProblemSpec.disk([0.0, math.pi / 2], 0.01, [1.0, 2.0]))


@pytest.fixture
def wide_problem(tmp_path):
    return write_problem(tmp_path, ProblemSpec.disk([0.0, math.pi / 2], 0.1, 1.5), "wide.json")


# -- tables -------------------------------------------------------------------


@pytest.mark.parametrize("which, n", [("L", 8), ("eps", 10), ("fit", 10)])
def test_configuration_counts(which, n):
    confs = configurations(which)
    assert len(confs) == n
    for _, spec in confs:
        assert spec.n == 2
        assert spec.positions == pytest.approx([0.0, math.pi / 2])


def test_unknown_table():
    with pytest.raises(ValueError):
        configurations("nope")


def test_length_table_rows_match_reference():
    rows = table_rows("L")
    for row, ref in zip(rows, TABLE_L):
        assert (row["L1"], row["L2"]) == ref[:2]
        assert row["u_asym"] == pytest.approx(ref[4], abs=6e-6)
        assert row["u_bie"] == pytest.approx(ref[3], rel=1e-4)
        assert row["rel_err"] < 1e-4


def test_eps_table_asymptotic_column():
    rows = table_rows("eps", bie=False)
    assert "u_bie" not in rows[0]
    for row, ref in zip(rows, TABLE_EPS):
        assert row["u_asym"] == pytest.approx(ref[4], abs=6e-6)


# -- fit ----------------------------------------------------------------------


def test_fit_recovers_exact_coefficients_of_asymptotic_series():
    rows = table_rows("fit", bie=False)
    fit = fit_series([r["eps"] for r in rows], [r["u_asym"] for r in rows])
    assert (fit.a, fit.b, fit.c) == pytest.approx(FIT_EXPECTED, abs=1e-9)
    assert fit.residual < 1e-9


def test_fit_recovers_synthetic_coefficients(rng):
    eps = np.sort(rng.uniform(0.01, 0.1, 12))
    a, b, c = 1.3, -0.7, 2.2
    fit = fit_series(eps, a / eps + b * np.log(eps) + c)
    assert (fit.a, fit.b, fit.c) == pytest.approx((a, b, c), rel=1e-9)


def test_fit_on_composite_reference_values():
    fit = fit_series([r[0] for r in TABLE_SWEEP], [r[1] for r in TABLE_SWEEP])
    assert fit.a == pytest.approx(math.pi / 2, rel=2e-3)


def test_fit_needs_four_distinct_eps():
    with pytest.raises(ValidationError):
        fit_series([0.1, 0.1, 0.05, 0.02], [1.0, 2.0, 3.0, 4.0])


def test_fit_rejects_nonpositive_eps():
    with pytest.raises(ValidationError):
        fit_series([0.1, 0.05, 0.0, 0.02], [1.0, 2.0, 3.0, 4.0])


def test_fit_rank_deficiency_is_reported():
    # 1/eps, ln eps and 1 collapse to rank 2 when eps spans 1e+-300 around 1
    eps = np.array([1e-300, 1.0 - 1e-16, 1.0, 1.0 + 2e-16])
    with pytest.raises(RankDeficientFitError):
        fit_series(eps, np.ones(4))


# -- serialization --------------------------------------------------------------


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_rows_round_trip_bit_exact(tmp_path, fmt, rng):
    rows = [{"i": k, "x": float(v), "label": f"r{k}"} for k, v in enumerate(rng.normal(size=20) * 1e3)]
    rows[3]["x"] = 1 / 3
    rows[4]["x"] = 5e-324
    path = tmp_path / f"rows.{fmt}"
    write_rows(rows, fmt, str(path))
    assert read_rows(str(path)) == rows


# -- command line ---------------------------------------------------------------


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_eval_asymptotic_default_point(disk_problem, capsys):
    code, out, _ = run(["eval", "--problem", disk_problem, "--format", "json"], capsys)
    assert code == 0
    (row,) = json.loads(out)["rows"]
    assert row["u"] == pytest.approx(108.82240, abs=6e-6)


def test_eval_all_methods_csv(tmp_path, disk_problem, capsys):
    out_path = tmp_path / "eval.csv"
    argv = ["eval", "--problem", disk_problem, "--method", "bie", "--at", "0,0", "--at", "0.2,-0.3", "--out", str(out_path)]
    code, out, _ = run(argv, capsys)
    assert code == 0 and out == ""
    rows = read_rows(str(out_path))
    assert [(r["x"], r["y"]) for r in rows] == [(0.0, 0.0), (0.2, -0.3)]
    assert rows[0]["u"] == pytest.approx(108.81837, abs=0.01)
    assert rows[0]["residual"] < 1e-6


def test_eval_monte_carlo(wide_problem, capsys):
    argv = ["eval", "--problem", wide_problem, "--method", "mc", "--walkers", "400", "--dt", "1e-3", "--format", "json"]
    code, out, _ = run(argv, capsys)
    assert code == 0
    (row,) = json.loads(out)["rows"]
    assert row["method"] == "mc" and row["stderr"] > 0


def test_eval_inside_guard_exits_2(disk_problem, capsys):
    code, out, err = run(["eval", "--problem", disk_problem, "--at", "0.99,0.0"], capsys)
    assert code == 2
    assert "too close" in err


def test_eval_missing_problem_exits_2(tmp_path, capsys):
    code, _, err = run(["eval", "--problem", str(tmp_path / "missing.json")], capsys)
    assert code == 2 and "cannot read" in err


def test_table_display(capsys):
    code, out, _ = run(["table", "L", "--method", "asymptotic", "--display"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "L1,L2,u_asym"
    assert lines[3] == "1,2,108.82240"


def test_table_full_precision_json(capsys):
    code, out, _ = run(["table", "fit", "--method", "asymptotic", "--format", "json"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["table"] == "fit"
    assert [r["eps"] for r in doc["rows"]] == [r[0] for r in TABLE_SWEEP]


def test_fit_command_from_table_output(tmp_path, capsys):
    series = tmp_path / "series.csv"
    assert main(["table", "fit", "--method", "asymptotic", "--out", str(series)]) == 0
    code, out, _ = run(["fit", str(series), "--format", "json"], capsys)
    assert code == 0
    (row,) = json.loads(out)["rows"]
    assert row["column"] == "u_asym"
    assert (row["a"], row["b"], row["c"]) == pytest.approx(FIT_EXPECTED, abs=1e-9)


def test_fit_command_too_few_points_exits_2(tmp_path, capsys):
    series = tmp_path / "short.csv"
    series.write_text("eps,u\n0.1,1\n0.05,2\n0.02,3\n")
    code, _, err = run(["fit", str(series)], capsys)
    assert code == 2 and "at least 4" in err


def test_fit_command_rank_deficient_exits_3(tmp_path, capsys):
    series = tmp_path / "degenerate.csv"
    write_rows([{"eps": e, "u": 1.0} for e in (1e-300, 1.0 - 1e-16, 1.0, 1.0 + 2e-16)], "csv", str(series))
    code, _, err = run(["fit", str(series)], capsys)
    assert code == 3 and "rank" in err


def test_fit_command_unknown_column_exits_2(tmp_path, capsys):
    series = tmp_path / "s.csv"
    series.write_text("eps,u\n0.1,1\n0.05,2\n0.02,3\n0.01,4\n")
    code, _, _ = run(["fit", str(series), "--column", "nope"], capsys)
    assert code == 2


def test_validate_ok(disk_problem, capsys):
    code, out, _ = run(["validate", "--problem", disk_problem], capsys)
    assert code == 0
    assert out.splitlines()[1].startswith("True")


@pytest.mark.parametrize(
    "necks, message",
    [
        ([(0.0, 0.05, 1.0), (0.05, 0.05, 1.0)], "overlap"),
        ([(0.0, 0.25, 1.0), (math.pi, 0.01, 1.0)], "thinness"),
    ],
)
def test_validate_rejects(tmp_path, capsys, necks, message):
    spec = ProblemSpec(HeadDomain.unit_disk(), [NeckSpec(*n) for n in necks])
    code, _, err = run(["validate", "--problem", write_problem(tmp_path, spec)], capsys)
    assert code == 2
    assert message in err


def test_solver_commands_refuse_invalid_problem(tmp_path, capsys):
    spec = ProblemSpec(HeadDomain.unit_disk(), [NeckSpec(0.0, 0.05, 1.0), NeckSpec(0.05, 0.05, 1.0)])
    path = write_problem(tmp_path, spec)
    for cmd in ("eval", "density-dump", "mc"):
        code, _, _ = run([cmd, "--problem", path, "--walkers", "200"], capsys)
        assert code == 2


def test_density_dump(tmp_path, disk_problem, capsys):
    out_path = tmp_path / "density.csv"
    code, _, _ = run(["density-dump", "--problem", disk_problem, "--resolution", "48", "--out", str(out_path)], capsys)
    assert code == 0
    rows = read_rows(str(out_path))
    assert len(rows) == 2 * 48
    assert {r["window_index"] for r in rows} == {0, 1}
    assert all(-1 < r["t"] < 1 for r in rows)


def test_mc_command_with_histogram(tmp_path, wide_problem, capsys):
    hist = tmp_path / "hist.csv"
    argv = ["mc", "--problem", wide_problem, "--walkers", "300", "--dt", "1e-3", "--seed", "7", "--histogram", str(hist)]
    code, out, _ = run(argv, capsys)
    assert code == 0
    header, row = out.strip().splitlines()
    assert header == "x,y,mean,stderr,n,dt,seed,absorbed_fraction"
    assert row.split(",")[4:7] == ["300", "0.001", "7"]
    assert hist.read_text().startswith("t_lo,t_hi,count")


def test_mc_step_too_large_exits_2(wide_problem, capsys):
    code, _, err = run(["mc", "--problem", wide_problem, "--walkers", "200", "--dt", "0.01"], capsys)
    assert code == 2 and "dt" in err


def test_ill_conditioned_exits_3(disk_problem, capsys, monkeypatch):
    import narrowescape.robin_bie as rb

    monkeypatch.setattr(rb, "_COND_LIMIT", 1.0)
    code, _, err = run(["eval", "--problem", disk_problem, "--method", "bie"], capsys)
    assert code == 3 and "condition" in err


def test_bad_point_argument():
    with pytest.raises(SystemExit) as exc:
        main(["eval", "--problem", "x.json", "--at", "1;2"])
    assert exc.value.code == 2


def test_console_entry_point(disk_problem):
    proc = subprocess.run(
        [sys.executable, "-m", "narrowescape", "eval", "--problem", disk_problem],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "method,x,y,u,order"
