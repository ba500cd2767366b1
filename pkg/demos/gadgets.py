"""Truncated exponentials and the univariate guess polynomial h."""

from fractions import Fraction

from lasserre_lab.gadgets import (UnivariatePoly, count_real_roots, e_taylor, f_taylor, select_guess_params,
                                  sos_decompose)

T = UnivariatePoly([0, 1])

# e_{c,d}(t) = sum_k (ct)^k / k!  and f_{c,d} with c t f = 1 - e_{c,d+1}(-t)
e = e_taylor(2, 4)
f = f_taylor(2, 4)
print("e_{2,4} =", e)
print("f_{2,4} =", f)
assert T * f * 2 == 1 - e_taylor(2, 5).reflect()

# even truncations have no real roots; Sturm sequences count them exactly
for d in (2, 4, 6, 20):
    print(d, count_real_roots(e_taylor(5, d)), count_real_roots(f_taylor(5, d)))

# a nonnegative polynomial as a sum of two squares
p = T**4 + 1
pair = sos_decompose(p)
print("t^4 + 1 = a^2 + b^2 with residual", pair.residual(p))

# the guess polynomial for (H, delta, eps, R) = (2, 1/10, 3/10, 1)
params, h = select_guess_params(2, Fraction(1, 10), Fraction(3, 10), 1)
print("c =", params.c, "d =", params.d, "gamma =", params.gamma)
print("conditions:", params.checks)
print("sos residual of h - 1:", params.sos.residual(h - 1))
