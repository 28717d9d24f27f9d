import json

import pytest

from bayesdebug.cli import main
from bayesdebug.minilang.testing import TestCase
from bayesdebug.pipeline import Project

COVERAGE = """\
tests 3 elements 3
elements L1 L2 L3
t1 fail L1:1 L2:1
t2 pass L1:1
t3 pass L2:1 L3:1
"""

SIGN = """\
fn sign(a, b) {
    let p = a * b;
    if (p >= 0) {
        return 1;
    }
    return -1;
}
"""


@pytest.fixture
def coverage(tmp_path):
    path = tmp_path / "cov.txt"
    path.write_text(COVERAGE)
    return str(path)


@pytest.fixture
def project(tmp_path):
    tests = [
        TestCase.from_text("t1", "sign(0, 5)", [["result", "-1"]], "fail"),
        TestCase.from_text("t2", "sign(2, 3)", [["result", "1"]]),
        TestCase.from_text("t3", "sign(-2, 3)", [["result", "-1"]]),
    ]
    return str(Project("sign", {"main.mini": SIGN}, tests).save(tmp_path / "sign"))


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_fl_bayes_example(capsys, coverage):
    code, out, _ = run(capsys, "fl", coverage, "--formula", "bayes", "--p", "0.5", "--out", "json")
    assert code == 0
    ranks = {row["id"]: row["rank"] for row in json.loads(out)}
    assert ranks == {"L1": 2, "L2": 2, "L3": 3}


def test_fl_csv_and_output_file(capsys, coverage, tmp_path):
    dest = tmp_path / "out.csv"
    code, out, err = run(capsys, "fl", coverage, "-o", str(dest))
    assert code == 0 and out == ""
    assert dest.read_text().splitlines()[0].startswith("id")
    assert "wall time" in err


def test_fl_bayes_needs_p(capsys, coverage):
    code, _, err = run(capsys, "fl", coverage, "--formula", "bayes")
    assert code == 2 and err.startswith("error:")


def test_derive_passes(capsys):
    code, out, _ = run(capsys, "derive", "--check", "naish01-equiv", "--trials", "200", "--seed", "7")
    assert code == 0
    assert out.strip() == "naish01-equiv: PASS 200/200"


def test_repair_report(capsys, project):
    code, out, _ = run(capsys, "repair", project, "--with-baseline")
    assert code == 0
    report = json.loads(out)
    assert [r["strategy"] for r in report["results"]] == ["baseline", "multiply"]
    assert report["results"][1]["first_plausible_rank"] >= 1


def test_patches_trace_and_baseline(capsys, project, tmp_path):
    code, out, _ = run(capsys, "patches", project)
    rows = json.loads(out)
    assert code == 0 and rows and all("prior" in r for r in rows)
    events = tmp_path / "events.jsonl"
    code, out, _ = run(capsys, "trace", project, "--events", str(events))
    assert code == 0 and out.startswith("patch_id,c_f,c_p,u_f,u_p\n")
    assert len(out.splitlines()) == len(rows) + 1
    assert all(json.loads(line)["test_id"] for line in events.read_text().splitlines())
    code, out, _ = run(capsys, "baseline", project)
    assert code == 0 and json.loads(out)["results"][0]["strategy"] == "baseline"


def test_missing_project_exits_2(capsys, tmp_path):
    code, _, err = run(capsys, "repair", str(tmp_path / "nope"))
    assert code == 2 and "not a project directory" in err


def test_bad_arguments_exit_nonzero():
    with pytest.raises(SystemExit):
        main(["repair", "x", "--alpha", "-1"])


def test_bench_is_byte_identical(capsys, tmp_path):
    argv = ["bench", "--seed", "4", "--count", "2", "--alpha-sweep", "3", "--modes", "multiply"]
    for name in ("a", "b"):
        code, _, _ = run(capsys, *argv, "--out-dir", str(tmp_path / name), "-o", str(tmp_path / f"{name}.json"))
        assert code == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()
    assert (tmp_path / "a" / "tables" / "per_bug.csv").is_file()
