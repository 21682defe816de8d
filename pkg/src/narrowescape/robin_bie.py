"""Boundary-integral solver for the Neumann-Robin model on the head domain.

The Green representation

    u(x) = g(x) + sum_i int_{window i} N(x, y) phi_i(y) dsigma(y) + C_eps

combined with the Robin data ``L_i^2/2 - L_i phi_i = u`` on each window gives a
second-kind equation for the window fluxes ``phi_i`` plus the scalar
``C_eps``; the flux balance ``sum_i int phi_i = -|Omega|`` closes the system.

Each window is split into Gauss-Legendre panels graded toward its endpoints,
where the flux has ``(1 -+ t) ln(1 -+ t)`` behaviour. The ``ln|t - s|`` part of
the self-interaction is integrated with Legendre product weights; everything
else is smooth and uses plain Gauss-Legendre.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss, legval, legvander

from .asymptotics import GUARD_FACTOR, TooCloseToWindowError, solve_asymptotic
from .geometry import require_valid
from .neumann import NeumannKernel
from .quadrature import product_weights

__all__ = [
    "BoundaryDensity",
    "RobinSolution",
    "IllConditionedError",
    "solve_robin",
    "robin_residual",
    "compare",
    "PANEL_ORDER",
]

#: Gauss-Legendre points per panel
PANEL_ORDER = 8
_NEAR = 3.0
_COND_LIMIT = 1e12


class IllConditionedError(RuntimeError):
    pass


class _Panels:
    """Composite Gauss-Legendre rule on [-1, 1] graded toward both ends."""

    def __init__(self, resolution, order=None):
        order = PANEL_ORDER if order is None else order
        if resolution < 16:
            raise ValueError("resolution must be at least 16 nodes per window")
        order = min(order, resolution)
        npan = max(1, int(round(resolution / order)))
        self.breaks = _graded_breaks(npan)
        self.order = order
        x, w = leggauss(order)
        a, b = self.breaks[:-1], self.breaks[1:]
        self.center = 0.5 * (a + b)
        self.half = 0.5 * (b - a)
        self.nodes = (self.center[:, None] + self.half[:, None] * x[None, :]).ravel()
        self.weights = (self.half[:, None] * w[None, :]).ravel()
        self._ref_nodes = x
        self._ref_weights = w
        transform = legvander(x, order - 1).T * w[None, :]
        self._transform = transform * ((2 * np.arange(order) + 1)[:, None] / 2.0)

    @property
    def size(self):
        return self.nodes.size

    def log_weights(self, t):
        """Matrix approximating ``int_{-1}^{1} ln|t - s| f(s) ds`` from nodal values."""
        t = np.atleast_1d(t)
        out = np.empty((t.size, self.size))
        p = self.order
        for k, (c, h) in enumerate(zip(self.center, self.half)):
            tau = (t - c) / h
            # moments are continuous at the panel ends; keep Q_n off its poles
            edge = np.abs(np.abs(tau) - 1.0) < 1e-13
            tau = np.where(edge, np.sign(tau) * (1.0 - 1e-13), tau)
            cols = slice(k * p, (k + 1) * p)
            block = np.log(h) * self._ref_weights[None, :] * np.ones((t.size, 1))
            near = np.abs(tau) < _NEAR
            far = ~near
            if np.any(near):
                block[near] += product_weights(tau[near], p)
            if np.any(far):
                block[far] += np.log(np.abs(tau[far, None] - self._ref_nodes[None, :])) * self._ref_weights[None, :]
            out[:, cols] = h * block
        return out

    def interpolate(self, values, t):
        """Panelwise polynomial interpolation of nodal ``values`` at ``t``."""
        t = np.atleast_1d(t)
        k = np.clip(np.searchsorted(self.breaks, t, side="right") - 1, 0, len(self.center) - 1)
        p = self.order
        coef = (self._transform @ values.reshape(-1, p).T)  # (p, npan)
        tau = (t - self.center[k]) / self.half[k]
        return np.array([legval(tau[i], coef[:, k[i]]) for i in range(t.size)])


def _graded_breaks(npan):
    if npan == 1:
        return np.array([-1.0, 1.0])
    half = npan // 2
    sizes = 2.0 ** np.arange(half)
    sizes = sizes / sizes.sum()
    left = -1.0 + np.concatenate([[0.0], np.cumsum(sizes)])
    if npan % 2:
        # odd count: the middle panel straddles 0, the graded halves shrink
        left = -1.0 + (left + 1.0) * (2.0 / 3.0)
        right = -left[::-1]
        return np.concatenate([left, right])
    return np.concatenate([left[:-1], -left[::-1]])


@dataclass
class BoundaryDensity:
    """Solved window fluxes: ``phi[i]`` at local nodes ``t`` (per unit arc length)."""

    t: np.ndarray
    weights: np.ndarray
    phi: list
    C_eps: float
    eps: np.ndarray

    def flux_integrals(self):
        return np.array([e * (self.weights @ p) for e, p in zip(self.eps, self.phi)])


@dataclass
class RobinSolution:
    spec: object
    kernel: object
    density: BoundaryDensity
    condition: float
    residual: float = None
    _panels: object = field(default=None, repr=False)
    _theta: list = field(default=None, repr=False)
    _points: list = field(default=None, repr=False)

    @property
    def C_eps(self):
        return self.density.C_eps

    def u(self, x):
        """Reference MFPT at interior points away from the windows."""
        x = np.asarray(x, dtype=float)
        xs = np.atleast_2d(x)
        c = self.spec.centers()
        dist = np.linalg.norm(xs[:, None, :] - c[None, :, :], axis=2)
        if np.any(dist < GUARD_FACTOR * self.spec.eps.max()):
            raise TooCloseToWindowError("evaluation point too close to window")
        val = self.kernel.g_function(xs) + self.C_eps
        val = np.atleast_1d(val).astype(float)
        for i in range(self.spec.n):
            y = self._points[i]
            r = np.linalg.norm(xs[:, None, :] - y[None, :, :], axis=2)
            N = -np.log(r) / math.pi
            if self.kernel.mode == "numerical":
                N = N + self.kernel.regular_matrix_interior(xs, self._theta[i])
            val = val + self.spec.eps[i] * (N @ (self.density.weights * self.density.phi[i]))
        return val.reshape(x.shape[:-1])[()]

    __call__ = u

    def boundary_u(self, i, t):
        """``u`` on window ``i`` at local coordinates ``t`` via the boundary identity."""
        rows = _interaction_rows(self.spec, self.kernel, self._panels, i, np.atleast_1d(t), self._theta, self._points)
        phi = np.concatenate(self.density.phi)
        theta_t = self.spec.head.theta_at(self.spec.necks[i].s + self.spec.eps[i] * np.atleast_1d(t))
        return self.kernel.g_param(theta_t) + rows @ phi + self.C_eps

    def flux(self, i, t):
        return self._panels.interpolate(self.density.phi[i], t)

    def to_record(self, points=()):
        return {
            "u_r_at": [{"x": float(p[0]), "y": float(p[1]), "u": float(self.u(p))} for p in points],
            "C_eps": self.C_eps,
            "residual": self.residual,
            "condition": self.condition,
            "flux": self.density.flux_integrals().tolist(),
        }

    def dump_density_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["window_index", "t", "phi"])
            for i, ph in enumerate(self.density.phi):
                for t, v in zip(self.density.t, ph):
                    wr.writerow([i, repr(float(t)), repr(float(v))])


def _interaction_rows(spec, kernel, panels, i, t, thetas, points):
    """Rows mapping all nodal fluxes to ``sum_j int N(x_i(t), y) phi_j dsigma``."""
    head = spec.head
    eps_i = spec.eps[i]
    s_t = spec.necks[i].s + eps_i * t
    theta_t = head.theta_at(s_t)
    x_t = head.point(theta_t)
    w = panels.weights
    blocks = []
    for j in range(spec.n):
        eps_j = spec.eps[j]
        if j == i:
            dt = t[:, None] - panels.nodes[None, :]
            chord = np.linalg.norm(x_t[:, None, :] - points[j][None, :, :], axis=2)
            same = np.abs(dt) < 1e-14
            with np.errstate(divide="ignore", invalid="ignore"):
                smooth = np.where(same, 0.0, np.log(chord / (eps_j * np.abs(dt))))
            logpart = math.log(eps_j) * w[None, :] + panels.log_weights(t) + smooth * w[None, :]
            block = -logpart / math.pi
        else:
            r = np.linalg.norm(x_t[:, None, :] - points[j][None, :, :], axis=2)
            block = -np.log(r) * w[None, :] / math.pi
        if kernel.mode == "numerical":
            block = block + kernel.regular_matrix_param(theta_t, thetas[j]) * w[None, :]
        blocks.append(eps_j * block)
    return np.hstack(blocks)


def solve_robin(spec, kernel=None, resolution=96):
    """Solve the Neumann-Robin model; ``resolution`` is nodes per window."""
    require_valid(spec)
    if kernel is None:
        kernel = NeumannKernel(spec.head)
    panels = _Panels(resolution)
    m = panels.size
    n = spec.n
    head = spec.head
    thetas, points = [], []
    for nk in spec.necks:
        th = head.theta_at(nk.s + nk.epsilon * panels.nodes)
        thetas.append(th)
        points.append(head.point(th))

    size = n * m + 1
    A = np.zeros((size, size))
    b = np.zeros(size)
    for i in range(n):
        rows = slice(i * m, (i + 1) * m)
        L = spec.lengths[i]
        A[rows, : n * m] = _interaction_rows(spec, kernel, panels, i, panels.nodes, thetas, points)
        A[rows, rows] += L * np.eye(m)
        A[rows, -1] = 1.0
        b[rows] = L**2 / 2.0 - kernel.g_param(thetas[i])
        A[-1, rows] = spec.eps[i] * panels.weights
    b[-1] = -head.area
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise IllConditionedError(f"Robin system condition estimate {cond:.3e}")
    sol = np.linalg.solve(A, b)
    phi = [sol[i * m:(i + 1) * m] for i in range(n)]
    density = BoundaryDensity(panels.nodes.copy(), panels.weights.copy(), phi, float(sol[-1]), spec.eps.copy())
    out = RobinSolution(spec, kernel, density, cond, None, panels, thetas, points)
    out.residual = robin_residual(out)
    return out


def _check_points(n_check):
    # interior equispaced grid nudged off any symmetric node pattern
    return np.linspace(-1.0, 1.0, n_check + 2)[1:-1] + 1.0 / (7.0 * (n_check + 1))


def robin_residual(solution, n_check=40):
    """Max Robin-condition defect ``|du/dnu + u/L - L/2|`` at off-node window points."""
    t = _check_points(n_check)
    worst = 0.0
    for i in range(solution.spec.n):
        L = solution.spec.lengths[i]
        u = solution.boundary_u(i, t)
        dudn = solution.flux(i, t)
        defect = np.abs(dudn + u / L - L / 2.0)
        if not np.all(np.isfinite(defect)):
            return math.inf
        worst = max(worst, float(defect.max()))
    return worst


def compare(spec, kernel=None, x=(0.0, 0.0), resolution=96):
    """Asymptotic versus boundary-integral MFPT at ``x``."""
    if kernel is None:
        kernel = NeumannKernel(spec.head)
    asym = solve_asymptotic(spec, kernel)
    ref = solve_robin(spec, kernel, resolution)
    u_asym = float(asym.u(x))
    u_r = float(ref.u(x))
    return {"u_asym": u_asym, "u_r": u_r, "rel_err": abs(u_r - u_asym) / abs(u_r), "residual": ref.residual}
