"""Necks on non-circular heads.

Off the disk the Neumann function has no closed form. The kernel solves for
its regular part numerically, and the same asymptotic and boundary-integral
code runs unchanged. Necks are placed by arc length s along the boundary.

Run: python3 demos/05_general_heads.py
"""

from narrowescape.asymptotics import solve_asymptotic
from narrowescape.geometry import HeadDomain, NeckSpec, ProblemSpec
from narrowescape.montecarlo import simulate
from narrowescape.neumann import NeumannKernel
from narrowescape.robin_bie import solve_robin

heads = {
    "ellipse 2 x 1": HeadDomain.ellipse(2.0, 1.0),
    "three-lobe star": HeadDomain.star(0.2, 3),
}

for name, head in heads.items():
    kernel = NeumannKernel(head)
    x0 = tuple(head.centroid())
    print(f"\n{name}: area {head.area:.4f}, perimeter {head.perimeter:.4f}")
    for eps in (0.05, 0.02, 0.01):
        spec = ProblemSpec(head, [NeckSpec(0.3, eps, 1.5), NeckSpec(0.3 + head.perimeter / 2, eps, 1.5)])
        ua = float(solve_asymptotic(spec, kernel).u(x0))
        ub = float(solve_robin(spec, kernel).u(x0))
        print(f"  eps {eps:5.2f}: asymptotic {ua:9.4f}  boundary integral {ub:9.4f}  rel gap {abs(ua - ub) / ub:.1e}")

# A short Monte Carlo check on the star with wide windows.
head = heads["three-lobe star"]
# wide windows need the guard radius 10 eps = 1 clear of the centroid
spec = ProblemSpec(head, [NeckSpec(0.3, 0.1, 1.5), NeckSpec(2.5, 0.1, 1.5)])
x0 = tuple(head.centroid())
st = simulate(spec, x0, dt=1e-3, n_walkers=3000, seed=2)
print(f"\nstar, eps 0.1: Monte Carlo {st.mean_fpt:.3f} +- {st.stderr:.3f}, boundary integral {float(solve_robin(spec).u(x0)):.3f}")
