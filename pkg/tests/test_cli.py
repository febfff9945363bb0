import re

import numpy as np
import pytest

from identest import ColumnSpec, DgpConfig, draw_sample
from identest.cli import ingest_table, main, write_table
from identest.errors import ParseError

SPEC = ColumnSpec("y", "d", "z", ("x1", "x2"))


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def sample_file(tmp_path, n=200, seed=0, p=3):
    frame = draw_sample(DgpConfig(n=n, p=p, seed=seed))
    path = tmp_path / "data.csv"
    write_table(frame, str(path))
    return path, frame


def strip_timings(text: str) -> str:
    return text.split("\n[timings]\n")[0]


# ------------------------------------------------------------- ingestion


def test_ingest_worked_example(tmp_path):
    path = tmp_path / "t.csv"
    write_lines(path, ["y,d,z,x1,x2", "1.5,0,1,0.25,-3", "2,1,0,0,4"])
    frame = ingest_table(str(path), SPEC)
    np.testing.assert_allclose(frame.y, [1.5, 2.0])
    np.testing.assert_allclose(frame.x, [[0.25, -3.0], [0.0, 4.0]])
    assert frame.feature_names == ("x1", "x2")


def test_ingest_rest_covariates(tmp_path):
    path = tmp_path / "t.csv"
    write_lines(path, ["y,d,extra,z", "1,0,9,1", "2,1,8,0"])
    frame = ingest_table(str(path), ColumnSpec("y", "d", "z", ("rest",)))
    assert frame.feature_names == ("extra",)


def test_ingest_errors_carry_location(tmp_path):
    path = tmp_path / "t.csv"
    write_lines(path, ["y,d,z,x1", "1,0,1,0.5", "2,1"])
    with pytest.raises(ParseError, match=r":3:"):
        ingest_table(str(path), ColumnSpec("y", "d", "z", ("x1",)))
    write_lines(path, ["y,d,z,x1", "1,0,1,apple"])
    with pytest.raises(ParseError, match="apple"):
        ingest_table(str(path), ColumnSpec("y", "d", "z", ("x1",)))
    write_lines(path, ["y,y,z,x1"])
    with pytest.raises(ParseError, match="duplicate"):
        ingest_table(str(path), ColumnSpec("y", "d", "z", ("x1",)))
    (tmp_path / "empty.csv").write_text("", encoding="utf-8")
    with pytest.raises(ParseError, match="empty"):
        ingest_table(str(tmp_path / "empty.csv"), SPEC)


def test_round_trip_is_exact(tmp_path):
    frame = draw_sample(DgpConfig(n=50, p=4, seed=1))
    path = tmp_path / "rt.csv"
    write_table(frame, str(path))
    again = ingest_table(str(path), ColumnSpec("y", "d", "z", frame.feature_names))
    np.testing.assert_array_equal(frame.y, again.y)
    np.testing.assert_array_equal(frame.d, again.d)
    np.testing.assert_array_equal(frame.z, again.z)
    np.testing.assert_array_equal(frame.x, again.x)


# ------------------------------------------------------------- commands


def run_cli(args, tmp_path, name):
    out = tmp_path / name
    code = main([*args, "--output", str(out)])
    return code, out.read_text(encoding="utf-8")


def test_test_command_report(tmp_path):
    path, _ = sample_file(tmp_path)
    code, text = run_cli(["test", "--input", str(path), "--seed", "3"],
                         tmp_path, "r1.txt")
    assert code == 0
    assert text.startswith("identest report\n")
    for section in ("[config]", "[results]", "[machine]", "[diagnostics]", "[timings]"):
        assert section in text
    assert re.search(r"^all\b", text, flags=re.M)
    assert re.search(r"^treated\b", text, flags=re.M)
    assert re.search(r"^control\b", text, flags=re.M)


def test_report_body_reproducible(tmp_path):
    path, _ = sample_file(tmp_path, seed=2)
    _, a = run_cli(["test", "--input", str(path), "--seed", "5"], tmp_path, "a.txt")
    _, b = run_cli(["test", "--input", str(path), "--seed", "5"], tmp_path, "b.txt")
    assert strip_timings(a) == strip_timings(b)
    _, c = run_cli(["test", "--input", str(path), "--seed", "6"], tmp_path, "c.txt")
    assert strip_timings(a) != strip_timings(c)


def test_simulate_report_independent_of_threads(tmp_path):
    args = ["simulate", "--n", "300", "--p", "3", "--delta", "0.0",
            "--reps", "3", "--seed", "1"]
    _, a = run_cli([*args, "--threads", "1"], tmp_path, "s1.txt")
    _, b = run_cli([*args, "--threads", "2"], tmp_path, "s2.txt")
    assert (strip_timings(a).replace("threads: 1", "threads: T")
            == strip_timings(b).replace("threads: 2", "threads: T"))


def test_subgroup_command_report(tmp_path):
    path, _ = sample_file(tmp_path, n=400, seed=4)
    code, text = run_cli(["subgroup", "--input", str(path), "--bins", "2",
                          "--seed", "0"], tmp_path, "g.txt")
    assert code == 0
    assert "split_variable:" in text
    assert "leaf 1" in text and "leaf 2" in text
    assert "wald_stat" in text


def test_config_file_and_flag_precedence(tmp_path):
    path, _ = sample_file(tmp_path, seed=5)
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"input = {path}\nseed = 9\nfolds = 3\n", encoding="utf-8")
    _, from_file = run_cli(["test", "--config", str(cfg)], tmp_path, "f1.txt")
    assert "seed: 9" in from_file
    _, overridden = run_cli(["test", "--config", str(cfg), "--seed", "2"],
                            tmp_path, "f2.txt")
    assert "seed: 2" in overridden


def test_error_exit_codes(tmp_path, capsys):
    assert main(["test", "--input", str(tmp_path / "missing.csv")]) == 1
    assert "error:" in capsys.readouterr().err
    assert main(["test"]) == 1
    bad = tmp_path / "bad.csv"
    write_lines(bad, ["y,d,z,x1", "1,0,1,oops"])
    assert main(["test", "--input", str(bad)]) == 1


def test_duplicate_roles_and_bad_config_values(tmp_path, capsys):
    path, _ = sample_file(tmp_path, n=100)
    assert main(["test", "--input", str(path), "--instrument", "d"]) == 1
    assert "distinct" in capsys.readouterr().err
    assert main(["test", "--input", str(path), "--trim", "0.7"]) == 1
    assert main(["test", "--input", str(path), "--folds", "1"]) == 1
