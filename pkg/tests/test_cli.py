import numpy as np
import pytest

from dmqr.cli import main
from dmqr.harness import CSV_HEADER, random_rank_deficient
from dmqr.mmio import read_matrix_market, write_matrix_market


@pytest.fixture
def matrix_file(tmp_path):
    A = random_rank_deficient(16, 12, 8, 1e9, seed=21)
    p = tmp_path / "m.mtx"
    write_matrix_market(p, A)
    return p


def test_factor_summary(matrix_file, capsys):
    rc = main(["factor", "--input", str(matrix_file), "--algo", "qrdm2", "--stop", "n"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "rank: 8" in out
    assert "leading pivots (1-based):" in out


def test_compare_writes_csv(matrix_file, tmp_path):
    out = tmp_path / "report.csv"
    rc = main([
        "compare", "--inputs", str(matrix_file),
        "--algos", "qrp,qrdm2", "--stop", "none", "--out", str(out),
    ])
    assert rc == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert len(lines) == 3
    assert lines[1].startswith("m,qrp,16,12,8,")


def test_compare_determinism_except_time(matrix_file, tmp_path):
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / f"{tag}.csv"
        assert main(["compare", "--inputs", str(matrix_file),
                     "--algos", "qrdm2", "--stop", "none", "--out", str(out)]) == 0
        outs.append(out.read_text().strip().split("\n"))
    t = CSV_HEADER.split(",").index("time_s")
    for l1, l2 in zip(*outs):
        f1, f2 = l1.split(","), l2.split(",")
        assert [x for i, x in enumerate(f1) if i != t] == [x for i, x in enumerate(f2) if i != t]


def test_sweep(matrix_file, tmp_path):
    out = tmp_path / "sweep.csv"
    rc = main([
        "sweep", "--inputs", str(matrix_file),
        "--tau-grid", "0.15,0.5", "--delta-grid", "0.9", "--out", str(out),
    ])
    assert rc == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "tau,delta,log10_min_ratio,cumulative_time_s"
    assert len(lines) == 3


def test_gen_single_matrix(tmp_path):
    rc = main(["gen", "--m", "10", "--n", "8", "--rank", "5", "--seed", "3",
               "--out", str(tmp_path)])
    assert rc == 0
    files = list(tmp_path.glob("*.mtx"))
    assert len(files) == 1
    A = read_matrix_market(files[0])
    assert A.shape == (10, 8)
    assert np.array_equal(A, random_rank_deficient(10, 8, 5, 1e9, seed=3))


def test_unknown_flag_exits_1(matrix_file):
    with pytest.raises(SystemExit) as exc:
        main(["factor", "--input", str(matrix_file), "--bogus-flag", "1"])
    assert exc.value.code == 1


def test_unknown_subcommand_exits_1():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1


def test_parse_error_exit_code(tmp_path):
    bad = tmp_path / "bad.mtx"
    bad.write_text("not a matrix market file\n")
    rc = main(["factor", "--input", str(bad)])
    assert rc == 1


def test_missing_inputs_exit_1(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["compare", "--fixtures", str(tmp_path)])
    assert exc.value.code == 1


def test_bad_grid_values_exit_1(matrix_file):
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--inputs", str(matrix_file), "--tau-grid", "0.5,1.5"])
    assert exc.value.code == 1


def test_oracle_failure_exits_2_with_flagged_row(matrix_file, tmp_path, monkeypatch):
    import dmqr.harness as harness
    from dmqr.svd import JacobiConvergenceError, SpectrumReport

    def exploding_oracle(A, *a, **kw):
        raise JacobiConvergenceError(SpectrumReport(np.zeros(1), 0, 30))

    monkeypatch.setattr(harness, "jacobi_svd", exploding_oracle)
    out = tmp_path / "r.csv"
    rc = main(["compare", "--inputs", str(matrix_file),
               "--algos", "qrp", "--stop", "none", "--out", str(out)])
    assert rc == 2
    line = out.read_text().strip().split("\n")[1].split(",")
    header = CSV_HEADER.split(",")
    assert line[header.index("flags")] == "oracle_failed"
    assert line[header.index("ratio_d_min")] == ""  # ratio fields left blank
