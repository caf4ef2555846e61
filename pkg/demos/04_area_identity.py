"""
Why the area stays constant
===========================

Without renormalization, a single Euler step changes each vertex area at
the rate d(A_i)/dt, and the total at sum_i (r - R_i) A_i, which is zero.
The finite-difference drift of the total area is therefore first order in
dt and halves as dt halves.
"""

import math

import riccilab as rl
from riccilab.geometry import curvature_state

metric = rl.rescale_to_area(
    rl.perturb(rl.metric_from_positions(rl.build_icosphere(2)), 0.2, 3), 4 * math.pi)
dt = 1e-3 / curvature_state(metric).max_dev

previous = None
for k in range(4):
    rep = rl.area_evolution_check(metric, dt / 2 ** k)
    ratio = "" if previous is None else f"  ratio {previous / rep.total_drift:.4f}"
    print(f"dt={rep.dt:.3e}  total drift {rep.total_drift: .3e}  "
          f"per-vertex FD error {rep.fd_error:.2e}{ratio}")
    previous = rep.total_drift

print(f"exact total rate: {rep.total_exact_rate:.1e}")
