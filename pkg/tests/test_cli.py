import json

import pytest

from ipround.cli import (
    EXIT_IO,
    EXIT_OK,
    EXIT_SOLVER_FAILURE,
    RunSpec,
    execute,
    parse_args,
)


def test_defaults():
    spec = parse_args([])
    assert spec == RunSpec()
    assert spec.problem == "two-circles"
    assert spec.formulation == "condensed"
    assert spec.solver is None  # resolves to cholesky
    assert spec.mantissa_bits == 53
    assert spec.step_fraction == 0.99
    assert spec.max_iters == 12


def test_reference_experiment_flags():
    spec = parse_args(
        ["run", "--problem", "two-circles", "--formulation", "augmented", "--solver", "gepp"]
    )
    assert spec.problem == "two-circles"
    assert spec.formulation == "augmented"
    assert spec.solver == "gepp"


@pytest.mark.parametrize(
    "argv",
    [
        ["--mantissa-bits", "7"],
        ["--mantissa-bits", "54"],
        ["--problem", "nonexistent"],
        ["--solver", "qr"],
        ["--no-such-flag"],
        ["--centrality", "1,2"],
        ["--sigma", "2.0"],
        ["--step-fraction", "1.5"],
        ["--max-iters", "0"],
        ["--formulation", "full", "--solver", "cholesky"],
        ["frobnicate"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        parse_args(argv)
    assert exc.value.code == 2


def test_flag_parsing_details():
    spec = parse_args(
        [
            "--centrality",
            "5,0.2,0.1",
            "--sweep-solver",
            "bunch-kaufman,gepp",
            "--sweep-bits",
            "24,53",
            "--t-rule",
            "centering",
            "--sigma",
            "0.5",
            "--mu-stop",
            "1e-17",
        ]
    )
    assert spec.centrality == (5.0, 0.2, 0.1)
    assert spec.sweep_solver == ("bunch-kaufman", "gepp")
    assert spec.sweep_bits == (24, 53)
    assert spec.t_rule == "centering" and spec.sigma == 0.5
    assert spec.mu_stop == 1e-17


def test_execute_reproduces_reference_rows(tmp_path):
    out = tmp_path / "table.json"
    spec = parse_args(
        [
            "run",
            "--problem",
            "two-circles",
            "--formulation",
            "augmented",
            "--solver",
            "gepp",
            "--max-iters",
            "10",
            "--mu-stop",
            "1e-18",
            "--output",
            "json",
            "--emit-table",
            str(out),
        ]
    )
    assert execute(spec) == EXIT_OK
    doc = json.loads(out.read_text())
    rows = doc["rows"]
    assert len(rows) == 10
    assert abs(rows[0]["log_mu"] - (-1.0)) <= 0.3
    assert abs(rows[0]["alpha_max"] - 0.9227) <= 0.005
    assert abs(rows[1]["log_mu"] - (-2.7)) <= 0.3
    assert abs(rows[1]["log_dz"] - (-1.5)) <= 0.3


def test_execute_writes_deterministic_output(tmp_path):
    a, b = tmp_path / "a.md", tmp_path / "b.md"
    base = ["--max-iters", "6", "--emit-table"]
    assert execute(parse_args(base + [str(a)])) == EXIT_OK
    assert execute(parse_args(base + [str(b)])) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_sweep_writes_one_file_per_combination(tmp_path):
    spec = parse_args(
        [
            "--formulation",
            "augmented",
            "--sweep-solver",
            "bunch-kaufman,bunch-parlett,gepp",
            "--max-iters",
            "4",
            "--emit-table",
            str(tmp_path),
            "--trace",
            str(tmp_path),
        ]
    )
    assert execute(spec) == EXIT_OK
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == [
        "two-circles_augmented_bunch-kaufman_p53.md",
        "two-circles_augmented_bunch-kaufman_p53.trace.json",
        "two-circles_augmented_bunch-parlett_p53.md",
        "two-circles_augmented_bunch-parlett_p53.trace.json",
        "two-circles_augmented_gepp_p53.md",
        "two-circles_augmented_gepp_p53.trace.json",
    ]
    doc = json.loads((tmp_path / "two-circles_augmented_gepp_p53.trace.json").read_text())
    assert doc["solver"] == "gepp"
    assert len(doc["records"]) == 4
    assert doc["records"][0]["row_pivots"]


def test_immediate_stop_gives_single_row(capsys):
    spec = parse_args(["--mu-stop", "1", "--output", "csv"])
    assert execute(spec) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2  # header plus exactly one recorded iteration


def test_solver_breakdown_exit_code(tmp_path, capsys):
    # at 24 bits the augmented run hits its precision floor before the
    # iteration budget; a partial table must still be written
    out = tmp_path / "partial.csv"
    spec = parse_args(
        [
            "--formulation",
            "augmented",
            "--solver",
            "gepp",
            "--mantissa-bits",
            "24",
            "--max-iters",
            "10",
            "--mu-stop",
            "1e-18",
            "--output",
            "csv",
            "--emit-table",
            str(out),
        ]
    )
    assert execute(spec) == EXIT_SOLVER_FAILURE
    assert out.exists()
    assert len(out.read_text().strip().splitlines()) > 1


def test_io_failure_exit_code(tmp_path):
    target = tmp_path / "not-a-dir" / "x" / "table.md"
    spec = parse_args(["--max-iters", "2", "--emit-table", str(target)])
    assert execute(spec) == EXIT_IO


def test_trace_document_schema(tmp_path):
    out = tmp_path / "t.json"
    spec = parse_args(["--max-iters", "3", "--trace", str(out), "--emit-table", str(tmp_path / "t.md")])
    assert execute(spec) == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["problem"] == "two-circles"
    assert doc["mantissa_bits"] == 53
    rec = doc["records"][0]
    for field in (
        "iter",
        "z",
        "lambda",
        "s",
        "mu",
        "r_f",
        "r_g",
        "dz",
        "dlambda",
        "ds",
        "alpha_max",
        "alpha_taken",
        "u_component",
        "v_component",
        "pivots",
        "row_pivots",
        "centrality",
    ):
        assert field in rec
    assert rec["centrality"]["holds"] is True
