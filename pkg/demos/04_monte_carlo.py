"""Brownian walkers on the composite domain (disk plus two neck strips).

Monte Carlo is the only method here that simulates the actual head-and-neck
geometry; the other two replace each neck by a Robin condition. The wide
windows below (eps = 0.1, L = 1.5) and a coarse step keep the run to a few
seconds. The acceptance run at eps = 0.05 with 20000 walkers takes minutes.

The second half checks the one-dimensional neck picture: along a neck the
MFPT should be the parabola -(L - x)^2 / 2 + beta (L - x).

Run: python3 demos/04_monte_carlo.py
"""

import numpy as np

from narrowescape.asymptotics import solve_asymptotic
from narrowescape.montecarlo import neck_profile_check, simulate
from narrowescape.robin_bie import solve_robin
from narrowescape.tables import perpendicular_disk

spec = perpendicular_disk(0.1, 0.1, 1.5, 1.5)
stats = simulate(spec, (0.0, 0.0), dt=1e-3, n_walkers=4000, seed=1)
print(f"Monte Carlo       {stats.mean_fpt:8.3f} +- {stats.stderr:.3f}  ({stats.n_walkers} walkers)")
print(f"boundary integral {float(solve_robin(spec).u((0.0, 0.0))):8.3f}")
print(f"asymptotic        {float(solve_asymptotic(spec).u((0.0, 0.0))):8.3f}")
print("(eps = 0.1 is at the edge of the thin-neck regime, so a few percent spread is expected)")

prof = neck_profile_check(spec, 1, n_walkers=1000, seed=3, dt=1e-3)
print("\nMFPT along neck 1")
print("    x       u       fit")
y = spec.lengths[1] - prof.x
for xk, uk, fk in zip(prof.x, prof.u, prof.alpha * y**2 + prof.beta * y):
    print(f"{xk:6.3f}  {uk:7.3f}  {fk:7.3f}")
print(f"quadratic coefficient {prof.alpha:.3f} (one-dimensional theory: -0.5)")

times = np.sort(stats.times)
print(f"\nmedian exit time {np.median(times):.2f}, 95th percentile {times[int(0.95 * len(times))]:.2f}")
