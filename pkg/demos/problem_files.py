"""Problem files and the command line front end."""

from pathlib import Path

from lasserre_lab.cli import run
from lasserre_lab.cli.problem import format_problem, read_problem

here = Path(__file__).parent / "problems"

pf = read_problem(here / "twodisks.txt")
print(pf.system.names, pf.options)
print(format_problem(pf))

# each call returns the report and the exit code (0 definitive, 2 inconclusive, 1 error)
for argv in (["point", str(here / "twodisks.txt"), "--point=-1/20,1"],
             ["gn", str(here / "twodisks.txt"), "--u", "0,1", "--dir", "1,0"],
             ["member", str(here / "unitdisk.txt"), "--target", "1 - y"],
             ["probe", str(here / "unitdisk.txt"), "-K", "8"]):
    rep, code = run(argv)
    print(code, rep.text())
