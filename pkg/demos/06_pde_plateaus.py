"""
Step sizes on semidiscretized PDEs
==================================

Two method-of-lines problems: the BBM equation with a Fourier collocation in
space (a soliton crossing the periodic domain once), and linear advection
with first-order upwinding. Both are limited by stability rather than by
accuracy, so dt levels off early and the controller should not reject.
"""
import numpy as np

from rkcertify.controller import PI_CONTROLLER, ControllerConfig
from rkcertify.integrator import default_k, solve
from rkcertify.problems import advection_1d_upwind, bbm_fourier

for problem in (bbm_fourier(256), advection_1d_upwind()):
    print(f"\n{problem.name}")
    for est in ("embedded", "residual-l1", "residual-l2"):
        cfg = ControllerConfig(PI_CONTROLLER, default_k("bs3", est))
        tr = solve(problem, "bs3", est, cfg, 1e-4, 1e-4, record_rejected=False)
        # the final step is cut to hit t_end, so it is left out
        dt = tr.accepted_steps(controlled_only=True)
        tail = dt[len(dt) // 2:]
        print(f"    {est:>12}: {tr.n_accepted:5d} accepted, {tr.n_rejected} rejected, "
              f"late dt {tail.mean():.4e} +- {tail.std() / tail.mean():.2%}")
