import json
from fractions import Fraction

import numpy as np
import pytest

from lasserre_lab.cli import DEMOS, main, run
from lasserre_lab.cli.problem import ProblemSyntaxError, format_problem, parse_expression, parse_problem, parse_system
from lasserre_lab.cli.report import RunReport, csv_text, plain
from lasserre_lab.polyalg import Polynomial
from lasserre_lab.sdp_core import read_sdpa

TWO_DISKS = "vars: x y\ng1: -(1 - x^2 - y^2)*(4 - (x-4)^2 - y^2)\ng2: 1 - y\n"
DISK = "vars: x y\ng: 1 - x^2 - y^2\n"
X, Y = Polynomial.variables(2)


@pytest.fixture
def files(tmp_path):
    out = {}
    for name, text in {"twodisks": TWO_DISKS, "disk": DISK, "interval": "vars: x\ng: 1 - x^2\n",
                       "line": "vars: x\ng: x\n", "bad": "vars: x y\ng: 1 -\n",
                       "empty": "vars: x y\ng1: 1 - x^2 - y^2\ng2: x^2 + y^2 - 4\n"}.items():
        p = tmp_path / f"{name}.txt"
        p.write_text(text)
        out[name] = str(p)
    out["dir"] = tmp_path
    return out


# ---------------------------------------------------------------------------
# parser

def test_parse_two_disks():
    s = parse_system(TWO_DISKS)
    assert s.names == ("x", "y") and s.labels == ("g1", "g2")
    assert s.constraints[0] == -(1 - X**2 - Y**2) * (4 - (X - 4)**2 - Y**2)
    assert s.constraints[1] == 1 - Y


def test_parse_interval():
    s = parse_system("vars: x\ng: 1 - x^2")
    (x,) = Polynomial.variables(1)
    assert s.constraints == (1 - x**2,)
    assert s.contains((0.5,)) and not s.contains((1.5,))


def test_parse_error_position():
    with pytest.raises(ProblemSyntaxError) as info:
        parse_problem("g: 1 -")
    err = info.value
    assert (err.line, err.column) == (1, 7)
    assert "^" in str(err)
    with pytest.raises(ProblemSyntaxError) as info:
        parse_problem("vars: x y\ng: 1 -\n")
    assert (info.value.line, info.value.column) == (2, 7)
    assert str(info.value).splitlines()[-1] == "  " + " " * 6 + "^"


@pytest.mark.parametrize("text, fragment", [
    ("vars: x\ng: 2x", "implicit multiplication"),
    ("vars: x\ng: x^65", "exceeds"),
    ("vars: x\ng: z + 1", "unknown identifier"),
    ("vars: x\ng: x^2^2", "chained"),
    ("vars: x\ng: x^-1", "exponent"),
    ("vars: x\ng: x^1.5", "exponent"),
    ("vars: x\ng: 1/0", "zero denominator"),
    ("vars: x\ng: (x + 1", "expected ')'"),
    ("vars: x\ng: x $ 1", "unexpected character"),
    ("vars: x\n", "at least one constraint"),
    ("vars: x x\ng: x", "duplicate variable"),
    ("vars: x\ng: x\ng: 1", "duplicate label"),
    ("g: x\nvars: x", "must come first"),
    ("vars: x\ng: x\noptions: degree=", "numbers"),
])
def test_parse_errors(text, fragment):
    with pytest.raises(ProblemSyntaxError) as info:
        parse_problem(text)
    assert fragment in str(info.value)


def test_numbers_are_exact():
    p = parse_expression("0.05*x + 1e-3 + 3/4", ["x"])
    (x,) = Polynomial.variables(1)
    assert p == Fraction(1, 20) * x + Fraction(1, 1000) + Fraction(3, 4)


def test_precedence():
    (x,) = Polynomial.variables(1)
    assert parse_expression("-x^2", ["x"]) == -(x**2)
    assert parse_expression("2*x^2*3", ["x"]) == 6 * x**2
    assert parse_expression("1 - x - x", ["x"]) == 1 - 2 * x
    assert parse_expression("(1 - x)^2", ["x"]) == (1 - x)**2
    assert parse_expression("--x", ["x"]) == x


def test_options_and_comments():
    pf = parse_problem("# header\nvars: x y   # two\ng: 1 - x^2 - y^2\noptions: degree=4 d_cap=6 tol=-1/2\n")
    assert pf.options == {"degree": 4, "d_cap": 6, "tol": Fraction(-1, 2)}
    assert parse_problem(format_problem(pf)) == pf


def _random_expr(rng, names, depth=0):
    r = rng.random()
    if depth > 2 or r < 0.3:
        k = rng.integers(0, 3)
        if k == 0:
            return names[rng.integers(len(names))]
        if k == 1:
            return str(int(rng.integers(0, 20)))
        return f"{int(rng.integers(1, 9))}/{int(rng.integers(1, 9))}"
    a = _random_expr(rng, names, depth + 1)
    b = _random_expr(rng, names, depth + 1)
    op = ["+", "-", "*", "^"][rng.integers(4)]
    if op == "^":
        return f"({a})^{int(rng.integers(0, 4))}"
    ws = " " * int(rng.integers(0, 3))
    return f"({a}{ws}{op}{ws}{b})" if rng.random() < 0.5 else f"{a} {op} {b}"


def test_round_trip_corpus(tmp_path):
    rng = np.random.default_rng(2024)
    for k in range(30):
        n = int(rng.integers(1, 4))
        names = [f"v{j}" for j in range(n)] if k % 2 else ["x", "y", "z"][:n]
        lines = ["vars: " + " ".join(names)]
        for c in range(int(rng.integers(1, 4))):
            lines.append(f"c{c}: {_random_expr(rng, names)}")
        if k % 3 == 0:
            lines.append(f"options: degree={2 * int(rng.integers(1, 4))}")
        path = tmp_path / f"p{k:02d}.txt"
        path.write_text("\n".join(lines) + "\n")
        first = parse_problem(path.read_text())
        text = format_problem(first)
        again = parse_problem(text)
        assert again == first
        assert format_problem(again) == text


# ---------------------------------------------------------------------------
# reports

def test_plain_conversion():
    assert plain(Fraction(-3, 4)) == "-3/4"
    assert plain(float("nan")) == "nan"
    assert plain(np.array([1.0, 2.5])) == [1.0, 2.5]
    assert plain({1: (True, None)}) == {"1": [True, None]}


def test_csv_format():
    text = csv_text(["a", "b"], [[0.1, "x"], [1 / 3, 2]])
    assert text == "a,b\n0.10000000000000001,x\n0.33333333333333331,2\n"


def test_report_json_is_canonical():
    rep = RunReport("x", "definitive", "abc", {"b": 1, "a": Fraction(1, 3)}, {"v": 0.1})
    data = json.loads(rep.to_json())
    assert data["config"] == {"a": "1/3", "b": 1}
    assert list(data) == sorted(data)
    assert rep.exit_code == 0


# ---------------------------------------------------------------------------
# subcommands and exit codes

def test_relax_writes_sdpa(files):
    out = files["dir"] / "r.dat-s"
    rep, code = run(["relax", files["twodisks"], "-d", "4", "--out", str(out)])
    assert code == 0 and rep.metrics["block_sizes"] == [6, 1, 3]
    assert read_sdpa(out).block_sizes == (6, 1, 3)
    rep, code = run(["relax", files["disk"], "-d", "0"])
    assert code == 0 and rep.metrics["block_sizes"] == [1]


EXIT_CASES = [
    # relax
    (["relax", "{twodisks}", "-d", "4"], 0),
    (["relax", "{dir}/missing.txt"], 1),
    (["relax", "{bad}"], 1),
    # member
    (["member", "{disk}", "--target", "1 - 3/5*x - 4/5*y", "-d", "2"], 0),
    (["member", "{disk}", "--target", "-1", "--search", "--d-cap", "4"], 2),
    (["member", "{disk}", "--target", "x^5", "-d", "2"], 1),
    # point
    (["point", "{twodisks}", "--point=-1/20,1", "-d", "4"], 0),
    (["point", "{twodisks}", "--point", "0,0,0"], 1),
    # qc
    (["qc", "{twodisks}", "--index", "1"], 0),
    (["qc", "{twodisks}", "--index", "3"], 1),
    # arch
    (["arch", "{disk}"], 0),
    (["arch", "{line}", "--N-cap", "4", "--d-cap", "4"], 2),
    (["arch", "{bad}"], 1),
    # soscv
    (["soscv", "{disk}", "--target", "1 - y"], 0),
    (["soscv", "{disk}", "--target", "x^3", "--d-cap", "4"], 2),
    (["soscv", "{disk}", "--target", "w"], 1),
    # gadget
    (["gadget", "--H", "2", "--delta", "1/10", "--eps", "3/10", "--R", "1"], 0),
    (["gadget", "--H", "2", "--delta", "3/10", "--eps", "1/10", "--R", "1"], 1),
    # pain
    (["pain", "{disk}", "--pairs", "4"], 0),
    (["pain", "{line}"], 1),
    # gn
    (["gn", "{twodisks}", "--u", "0,1", "--dir", "1,0"], 0),
    (["gn", "{twodisks}", "--u", "0,2", "--dir", "1,0"], 2),
    (["gn", "{twodisks}", "--u", "0,1", "--dir", "0,0"], 1),
    # probe
    (["probe", "{disk}", "-d", "2", "-K", "8"], 0),
    (["probe", "{disk}", "-d", "2", "-K", "0"], 2),
    (["probe", "{empty}"], 1),
    # demo
    (["demo", "unitdisk"], 0),
    (["demo", "nowhere"], 1),
    # usage errors are errors, not "inconclusive"
    (["relax"], 1),
]


@pytest.mark.parametrize("argv, code", EXIT_CASES, ids=[" ".join(a[:2]) + f"->{c}" for a, c in EXIT_CASES])
def test_exit_codes(files, argv, code):
    argv = [a.format(**files) for a in argv]
    if code == 1 and argv[0] == "relax" and len(argv) == 1:
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == 1
        return
    assert main(argv) == code


def test_every_subcommand_is_exercised():
    from lasserre_lab.cli import build_parser
    names = set(build_parser()._subparsers._group_actions[0].choices)
    assert names == {a[0] for a, _ in EXIT_CASES}


def test_error_report_is_appended(files):
    log = files["dir"] / "log.jsonl"
    assert main(["relax", files["bad"], "--report", str(log)]) == 1
    rec = json.loads(log.read_text())
    assert rec["status"] == "error" and "line 2" in rec["message"]


def test_reports_are_byte_identical(files, monkeypatch):
    d = files["dir"]
    for k in ("a", "b"):
        (d / k).mkdir()
        monkeypatch.chdir(d / k)
        assert main(["probe", files["disk"], "-d", "2", "-K", "6", "--report", "r.jsonl", "--csv", "c.csv"]) == 0
        assert main(["point", files["twodisks"], "--point=-1/20,1", "-d", "4", "--report", "r.jsonl"]) == 0
    for name in ("r.jsonl", "c.csv"):
        assert (d / "a" / name).read_bytes() == (d / "b" / name).read_bytes()
    lines = (d / "a" / "r.jsonl").read_text().splitlines()
    assert len(lines) == 2      # one report per run, appended
    head = (d / "a" / "c.csv").read_text().splitlines()[0]
    assert head == "w1,w2,set_min,relax_min,gap,moment_status,membership"
    assert b"\r" not in (d / "a" / "c.csv").read_bytes()


def test_point_report_for_witness(files):
    rep, code = run(["point", files["twodisks"], "--point=-1/20,1", "-d", "4"])
    assert code == 0
    assert rep.metrics["in_S"] is False and rep.metrics["membership"] == "feasible"


def test_options_block_supplies_defaults(files):
    p = files["dir"] / "opt.txt"
    p.write_text(TWO_DISKS + "options: degree=6\n")
    rep, _ = run(["relax", str(p)])
    assert rep.metrics["block_sizes"] == [10, 3, 6]
    rep, _ = run(["relax", str(p), "-d", "4"])
    assert rep.metrics["block_sizes"] == [6, 1, 3]


# ---------------------------------------------------------------------------
# demos

def test_demo_unitdisk():
    rep, code = run(["demo", "unitdisk"])
    assert code == 0
    assert rep.metrics["verdict"] == "exact-evidence"
    assert rep.metrics["max_gap"] <= 1e-5
    assert rep.metrics["memberships"] == ["feasible"] * 16


def test_demo_twodisks():
    rep, code = run(["demo", "twodisks"])
    assert code == 0
    m = rep.metrics
    assert m["qc_verdict"] is True
    assert m["gn_verdict"] == "obstructed"
    assert m["g1_at_point"] == Fraction(-5361, 160000)
    assert m["point_membership"][4]["status"] == "feasible"
    # at d = 6 the point sits just outside the relaxation
    assert m["point_membership"][6]["status"] == "infeasible"
    assert m["point_membership"][6]["margin"] == pytest.approx(-8.3e-4, rel=0.05)
    assert m["probe_verdict"] == "non-exact"


def test_demo_unknown_lists_available(capsys):
    assert main(["demo", "unknown"]) == 1
    err = capsys.readouterr().err
    assert all(name in err for name in DEMOS)
