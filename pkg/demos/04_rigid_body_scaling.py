"""
Tolerance proportionality on the rigid body
===========================================

With error-per-step control, an embedded pair in local extrapolation mode
gives a global error roughly proportional to the tolerance. A residual
estimate of order p + 1 gives tau^(p / (p + 1)) instead.
"""
import numpy as np

from rkcertify.controller import PI_CONTROLLER, ControllerConfig
from rkcertify.integrator import default_k, final_error, solve
from rkcertify.problems import rigid_body

problem = rigid_body()
tols = 10.0 ** -np.arange(4, 10)

for est in ("embedded", "residual-l1", "residual-l2"):
    cfg = ControllerConfig(PI_CONTROLLER, default_k("bs3", est))
    traces = [solve(problem, "bs3", est, cfg, tol, tol) for tol in tols]
    errs = np.array([final_error(tr, problem) for tr in traces])
    slope = np.polyfit(np.log(tols), np.log(errs), 1)[0]
    print(f"{est:>12}: slope {slope:.3f}, rejected {sum(tr.n_rejected for tr in traces)}")
    for tol, tr, e in zip(tols, traces, errs):
        print(f"    tau {tol:.0e}  steps {tr.n_accepted:6d}  error {e:.3e}")
