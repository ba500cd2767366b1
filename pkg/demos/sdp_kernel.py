"""The dense primal-dual interior point solver and SDPA files."""

import numpy as np

from lasserre_lab.sdp_core import SdpProblem, parse_sdpa, psd_check, sdpa_text, solve

# min tr X  s.t.  X_12 = 1: the optimum is 2, at X = [[1, 1], [1, 1]]
E12 = np.array([[0, 0.5], [0.5, 0]])
prob = SdpProblem((2,), [np.eye(2)], [[E12]], [1])
sol = solve(prob)
print(sol.status, sol.primal_objective, sol.dual_objective)
print(sol.X[0].round(6))
print("residuals", sol.residuals)

# an infeasible system comes back with a Farkas certificate
bad = SdpProblem((1,), [np.zeros((1, 1))], [[np.ones((1, 1))]], [-1])
r = solve(bad)
print(r.status, r.certificate["y"])

# SDPA sparse text round trip
text = sdpa_text(prob)
print(text)
assert parse_sdpa(text) == prob

# psd classification with a tolerance
for A in (np.eye(3), np.diag([1.0, 0.0]), np.diag([14.0, -10.0])):
    print(psd_check(A).status)
