"""
Accepted and rejected steps on a rotating stiff problem
=======================================================

The Hairer-Wanner test problem has a Jacobian with eigenvalues of size 2000
that rotate with time, so an explicit method spends most of its steps at
the edge of its stability region. Whether the step size controller is stable
there shows up directly in the number of rejected steps.
"""
import time

from rkcertify.controller import I_CONTROLLER, PI_CONTROLLER, ControllerConfig
from rkcertify.integrator import default_k, solve
from rkcertify.problems import hairer_wanner

problem = hairer_wanner()
columns = [(est, name, beta) for name, beta in (("I", I_CONTROLLER), ("PI", PI_CONTROLLER))
           for est in ("embedded", "residual-l1", "residual-l2")]

for method in ("heun2_euler1", "bs3"):
    print(f"\n{method}, tau = 1e-4")
    print(f"{'controller':>10} {'estimator':>12} {'k':>2} {'accepted':>9} {'rejected':>9} {'seconds':>8}")
    for est, name, beta in columns:
        k = default_k(method, est)
        t0 = time.perf_counter()
        trace = solve(problem, method, est, ControllerConfig(beta, k), 1e-4, 1e-4)
        dt = time.perf_counter() - t0
        print(f"{name:>10} {est:>12} {k:>2} {trace.n_accepted:>9} {trace.n_rejected:>9} {dt:>8.2f}")

# With the I controller the embedded estimator keeps overshooting the
# stability boundary; the residual estimators see a larger sensitivity to
# the step size (q = p + 1 instead of p) and settle. The PI controller
# damps both.
