"""Exact sparse polynomials: arithmetic, derivatives, evaluation, matrices."""

from fractions import Fraction

import numpy as np

from lasserre_lab.polyalg import PolyMatrix, PolySystem, Polynomial, monomial_basis

x, y = Polynomial.variables(2)

# the two-disks constraint, expanded with rational coefficients
g1 = -(1 - x**2 - y**2) * (4 - (x - 4)**2 - y**2)
print("g1 =", g1)
print("degree", g1.degree)

# exact values and gradients
p = (Fraction(-1, 20), Fraction(1))
print("g1(-1/20, 1) =", g1.eval_exact(p))
print("grad g1 at (0,1):", [d.eval_exact((0, 1)) for d in g1.gradient()])

# the Hessian is a symmetric polynomial matrix
H = g1.hessian()
print("Hess g1(1, 0) =\n", H.eval((1.0, 0.0)))

# vectorised float evaluation on a grid
pts = np.random.default_rng(0).uniform(-1, 1, size=(5, 2))
print(g1.eval_many(pts))

# grlex monomial basis, as used for moment matrices
print(monomial_basis(2, 2))

# systems and membership of points in S(g)
system = PolySystem(("x", "y"), (g1, 1 - y))
print(system.contains((0, 0), 0.0), system.contains((1.5, 0), 0.0))

M = PolyMatrix([[1 - x**2, x * y], [x * y, 1 - y**2]])
print(M.eval((0.5, 0.5)))
