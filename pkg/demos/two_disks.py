"""The two-disks set: quasiconcave boundary, obstruction, and a relaxation that is too big."""

from fractions import Fraction

from lasserre_lab.certchecks import gn_obstruction, left_neighbourhood_width, strict_qc_check
from lasserre_lab.polyalg import PolySystem, Polynomial
from lasserre_lab.relaxation import build_relaxation, point_membership

x, y = Polynomial.variables(2)
g1 = -(1 - x**2 - y**2) * (4 - (x - 4)**2 - y**2)
system = PolySystem(("x", "y"), (g1, 1 - y))

qc = strict_qc_check(system, 1)
print("g1 strictly quasiconcave on Z(g1):", qc.verdict, "margin", qc.margin, "points", len(qc.points))

# along y = 1 the two active gradients are orthogonal to the line
gn = gn_obstruction(system, (0, 1), (1, 0))
print(gn.verdict, gn.dots, gn.interior_interval)

# so every S_d(g) pokes out to the left of (0, 1), and less so as d grows
w = (Fraction(-1, 20), Fraction(1))
print("g1 at the witness:", g1.eval_exact(w))
for d in (4, 6):
    _, lmi = build_relaxation(system, d)
    r = point_membership(lmi, w)
    width = left_neighbourhood_width(lmi, (0, 1), (-1, 0))
    print(f"d={d}: witness {r.status} (margin {r.margin:.2e}), left width {width:.4f}")
