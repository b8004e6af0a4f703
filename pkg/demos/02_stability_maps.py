"""
Step size control stability along the stability boundary
=========================================================

For u' = lambda u the coupled (solution, step size) dynamics has a fixed
point wherever z = dt lambda sits on the boundary of the stability region.
The spectral radius of its Jacobian decides whether the controller settles
(< 1) or oscillates (> 1). We scan the upper half of the boundary.
"""
import numpy as np

from rkcertify.controller import I_CONTROLLER, PI_CONTROLLER, ControllerConfig
from rkcertify.integrator import default_k
from rkcertify.stability import default_phi_grid, stability_map

configs = [
    ("heun2", "residual-l1", "PI", PI_CONTROLLER),
    ("heun2", "embedded", "PI", PI_CONTROLLER),
    ("heun2", "residual-l1", "I", I_CONTROLLER),
    ("heun2", "embedded", "I", I_CONTROLLER),
    ("bs3", "residual-l1", "I", I_CONTROLLER),
    ("bs3", "residual-l2", "I", I_CONTROLLER),
    ("bs3", "residual-l2", "PI", PI_CONTROLLER),
    ("bs3", "embedded", "PI", PI_CONTROLLER),
]
grid = default_phi_grid(256)

print(f"{'method':>6} {'estimator':>12} {'ctrl':>4} {'max rho':>8} {'at phi/pi':>9} {'unstable pts':>12}")
for method, est, name, beta in configs:
    pts = stability_map(method, est, ControllerConfig(beta, default_k(method, est)), grid)
    rho = np.array([p.spectral_radius for p in pts])
    i = int(np.argmax(rho))
    print(f"{method:>6} {est:>12} {name:>4} {rho[i]:8.4f} {grid[i] / np.pi:9.4f} {int(np.sum(rho > 1)):12d}")

# Explicit Euler with a residual estimate and the I controller is marginal
# on the negative real axis: the Jacobian [[1, 2], [-1/2, 0]] has a pair of
# eigenvalues on the unit circle.
euler = stability_map("euler", "residual-l1", ControllerConfig(I_CONTROLLER, 2), [np.pi])[0]
print(f"\neuler/residual/I at phi = pi: rho = {euler.spectral_radius:.12f}")
