"""Modified constraints h_i = g_i h(g_i) and their integrated Hessians on segments."""

from fractions import Fraction

from lasserre_lab.certchecks import kkt_recover, pain_pipeline
from lasserre_lab.polyalg import PolySystem, Polynomial

x, y = Polynomial.variables(2)
g1 = -(1 - x**2 - y**2) * (4 - (x - 4)**2 - y**2)
system = PolySystem(("x", "y"), (g1, 1 - y))

# restrict C to the small disk, and take exact rational points of the unit circle as u
ts = [Fraction(k, 16) for k in range(-16, 17)]
circle = [((1 - t * t) / (1 + t * t), 2 * t / (1 + t * t)) for t in ts]
rep = pain_pipeline(system, region=lambda p: p[0] <= 1.5, pairs=100, u_points={1: circle})

c = rep.constants
print("R", c.R, "eps", c.eps, "delta", c.delta, "H", c.H)
mod = rep.modified[0]
print("guess c, d:", mod.params.c, mod.params.d, "Hessian formula exact:", mod.hessian_formula_equal)
print(rep.message, "all negative:", rep.verdict)

# KKT multipliers of 1 - y at the corner (0, 1)
print(kkt_recover(system, 1 - y, (0, 1)).multipliers)
