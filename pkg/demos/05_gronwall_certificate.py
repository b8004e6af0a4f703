"""
A computable global error bound
===============================

If f has one-sided Lipschitz constant L, the residual R of the
reconstruction bounds the error at the final time by
(|u(0) - u_hat(0)| + int |R| exp(-L s) ds) exp(L T).
The integral is accumulated step by step during the solve.
"""
import numpy as np

from rkcertify.controller import PI_CONTROLLER, ControllerConfig
from rkcertify.integrator import default_k, final_error, gronwall_bound, solve
from rkcertify.problems import lipschitz_linear, lipschitz_nonlinear

for problem in (lipschitz_linear(), lipschitz_nonlinear()):
    for method in ("heun2", "bs3"):
        cfg = ControllerConfig(PI_CONTROLLER, default_k(method, "residual-l2"))
        print(f"\n{problem.name}, {method}, L = {problem.L}")
        for tol in 10.0 ** -np.arange(3, 8):
            tr = solve(problem, method, "residual-l2", cfg, tol, tol, L=problem.L)
            err, bound = final_error(tr, problem), gronwall_bound(tr, problem.L)
            print(f"    tau {tol:.0e}  error {err:.3e}  bound {bound:.3e}  ratio {bound / err:6.2f}")

# For u' = u the residual keeps one sign and the bound is almost sharp. For
# u' = exp(-u) the flow contracts, which L = 0 cannot express, so the bound
# overestimates by a modest factor.
