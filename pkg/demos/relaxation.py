"""Lasserre relaxations: block LMI, point membership, linear optimisation, certificates."""

from fractions import Fraction

from lasserre_lab.polyalg import PolySystem, Polynomial
from lasserre_lab.relaxation import build_relaxation, module_membership, optimize_linear, point_membership

x, y = Polynomial.variables(2)
disk = PolySystem(("x", "y"), (1 - x**2 - y**2,))

spec, lmi = build_relaxation(disk, 2)
print("blocks", lmi.block_sizes, "lifted monomials", spec.y_index)

# S_2 of the disk is the disk itself
for p in [(0, 0), (0.6, 0.8), (1.5, 0)]:
    print(p, point_membership(lmi, p).status)

# minimise a linear function over the relaxation
opt = optimize_linear(lmi, (0.6, 0.8))
print("min 0.6x + 0.8y =", opt.value, "at", opt.x)

# the supporting functional 1 - wx has a Gram certificate
f = 1 - Fraction(3, 5) * x - Fraction(4, 5) * y
res = module_membership(disk, f, 2)
print(res.status, "residual", res.certificate.residual)
print(res.certificate.G)
