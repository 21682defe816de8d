"""High-order asymptotics of the mean first passage time through thin necks.

Each neck of length ``L_i`` attached on a window of half-width ``eps_i``
is replaced by the Robin condition ``du/dnu + u/L_i = L_i/2``. The window
fluxes ``C_i`` and the boundary mean ``C_eps`` then solve an ``(N+1)``-square
interaction system whose expansion in ``eps`` gives

    u(x) = |Omega| / (2 sum eps_i/L_i)
           + (|Omega|/pi) (sum_{i<j} T_ij ln(eps_i eps_j) - sum F_i ln eps_i)
           + C + Q(x) + O(eps ln^2 eps).

Times are in units where the diffusivity is 1.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .geometry import require_valid
from .neumann import log_op_L1

__all__ = [
    "GeometryFactors",
    "AsymptoticSolution",
    "SingularSystemError",
    "TooCloseToWindowError",
    "robin_coefficients",
    "neck_profile",
    "geometry_factors",
    "two_neck_T",
    "assemble_system",
    "solve_constants",
    "constant_C",
    "q_term",
    "mfpt_two",
    "mfpt_two_disk_symmetric",
    "mfpt_n",
    "flux_density",
    "solve_asymptotic",
    "GUARD_FACTOR",
]

LN2 = math.log(2.0)
# (2 ln 2 - 3) / (2 pi): the window self-interaction constant
SELF_CONST = (2.0 * LN2 - 3.0) / (2.0 * math.pi)
#: evaluation points must be farther than ``GUARD_FACTOR * max(eps)`` from every window center
GUARD_FACTOR = 10.0

ORDER_TWO = "O(sqrt(eps1^2 + eps2^2) ln eps1 ln eps2)"
ORDER_IDENTICAL = "O(eps ln^2 eps)"
ORDER_LEADING = "O(1)"


class SingularSystemError(np.linalg.LinAlgError):
    pass


class TooCloseToWindowError(ValueError):
    pass


@dataclass(frozen=True)
class GeometryFactors:
    T: np.ndarray
    F: np.ndarray


def robin_coefficients(L):
    """Robin data ``(alpha, beta)`` of a neck of length ``L``: ``du/dnu + alpha u = beta``."""
    if not L > 0:
        raise ValueError("neck length must be positive")
    return 1.0 / L, L / 2.0


def neck_profile(x, L, C):
    """1-D MFPT along a neck; ``x`` is the distance from the window, ``C`` the window value."""
    x = np.asarray(x, dtype=float)
    return -0.5 * (L - x) ** 2 + (C / L + L / 2.0) * (L - x)


def geometry_factors(spec):
    ratio = spec.eps / spec.lengths
    total = ratio.sum()
    F = ratio / total
    T = np.outer(ratio, ratio) / total**2
    return GeometryFactors(T=T, F=F)


def two_neck_T(e1, e2, L1, L2):
    """Pair factor in the two-neck closed form, ``e1 e2 / ((L2/L1) e1^2 + 2 e1 e2 + (L1/L2) e2^2)``."""
    return e1 * e2 / ((L2 / L1) * e1**2 + 2.0 * e1 * e2 + (L1 / L2) * e2**2)


def _chords(spec):
    c = spec.centers()
    return np.linalg.norm(c[:, None, :] - c[None, :, :], axis=2)


def _center_data(spec, kernel):
    """``r_ij`` at window centers and ``f_i = g(window center)``."""
    theta = spec.head.theta_at(spec.positions)
    r = kernel.regular_matrix_param(theta, theta)
    r = 0.5 * (r + r.T)
    f = kernel.g_param(theta)
    return r, f


def assemble_system(spec, kernel):
    """Interaction matrix ``K`` and right-hand side for ``(C_1..C_N, C_eps)``."""
    n = spec.n
    eps, L = spec.eps, spec.lengths
    r, f = _center_data(spec, kernel)
    d = _chords(spec)
    K = np.zeros((n + 1, n + 1))
    with np.errstate(divide="ignore"):
        K[:n, :n] = -np.log(d) / math.pi + r
    K[np.arange(n), np.arange(n)] = L / (2.0 * eps) - np.log(eps) / math.pi - SELF_CONST + np.diag(r)
    K[:n, n] = 1.0
    K[n, :n] = 1.0
    rhs = np.empty(n + 1)
    rhs[:n] = L**2 / 2.0 - f
    rhs[n] = -spec.head.area
    return K, rhs


def solve_constants(K, rhs):
    """Dense solve of the interaction system; returns ``(C, C_eps)``."""
    try:
        sol = scipy.linalg.solve(K, rhs)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise SingularSystemError(str(exc)) from exc
    if not np.all(np.isfinite(sol)):
        raise SingularSystemError("interaction system is singular")
    return sol[:-1], float(sol[-1])


def constant_C(spec, kernel, factors=None):
    """O(1) constant of the two-neck expansion."""
    if spec.n != 2:
        raise ValueError("constant_C is defined for two necks")
    if factors is None:
        factors = geometry_factors(spec)
    A = spec.head.area
    r, f = _center_data(spec, kernel)
    T, F = factors.T[0, 1], factors.F
    d12 = float(_chords(spec)[0, 1])
    pair = r[0, 0] + r[1, 1] - 2.0 * r[0, 1] + (2.0 * math.log(d12) - 2.0 * LN2 + 3.0) / math.pi
    return float(-pair * T * A + A * np.sum(F * (-SELF_CONST + np.diag(r))) + np.sum(F * (spec.lengths**2 / 2.0 - f)))


def _guard(spec, x):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    c = spec.centers()
    dist = np.linalg.norm(x[:, None, :] - c[None, :, :], axis=2)
    if np.any(dist < GUARD_FACTOR * spec.eps.max()):
        raise TooCloseToWindowError("evaluation point too close to window")
    return x


def _neumann_to_centers(spec, kernel, x):
    c = spec.centers()
    r = np.linalg.norm(x[:, None, :] - c[None, :, :], axis=2)
    reg = kernel.regular_part(x, c).reshape(len(x), spec.n) if kernel.mode == "numerical" else 0.0
    return -np.log(r) / math.pi + reg


def q_term(spec, kernel, x):
    """``Q(x) = g(x) - |Omega| sum_i F_i N(x, s_i)``."""
    xs = _guard(spec, x)
    F = geometry_factors(spec).F
    val = kernel.g_function(xs) - spec.head.area * (_neumann_to_centers(spec, kernel, xs) @ F)
    return _shape_like(val, x)


def _shape_like(val, x):
    x = np.asarray(x, dtype=float)
    return np.asarray(val).reshape(x.shape[:-1])[()]


def _log_terms(spec, factors):
    eps = spec.eps
    le = np.log(eps)
    pair = np.add.outer(le, le)
    iu = np.triu_indices(spec.n, 1)
    return spec.head.area / math.pi * (np.sum(factors.T[iu] * pair[iu]) - np.sum(factors.F * le))


def _leading(spec):
    return spec.head.area / (2.0 * np.sum(spec.eps / spec.lengths))


def mfpt_two(spec, kernel, x):
    """Two-neck MFPT expansion at ``x`` (leading + log + C + Q)."""
    if spec.n != 2:
        raise ValueError("mfpt_two needs exactly two necks")
    factors = geometry_factors(spec)
    base = _leading(spec) + _log_terms(spec, factors) + constant_C(spec, kernel, factors)
    return base + q_term(spec, kernel, x)


def mfpt_two_disk_symmetric(L, eps, s1, s2, x):
    """Closed form for two identical necks on the unit disk (window angles ``s1``, ``s2``)."""
    A = math.pi
    x = np.asarray(x, dtype=float)
    p1 = np.array([math.cos(s1), math.sin(s1)])
    p2 = np.array([math.cos(s2), math.sin(s2)])
    d12 = float(np.linalg.norm(p1 - p2))
    n1 = -np.log(np.linalg.norm(x - p1, axis=-1)) / math.pi
    n2 = -np.log(np.linalg.norm(x - p2, axis=-1)) / math.pi
    val = (
        A * L / (4.0 * eps)
        - A * math.log(eps) / (2.0 * math.pi)
        - A * (2.0 * LN2 - 3.0) / (4.0 * math.pi)
        + L**2 / 2.0
        - A * math.log(d12) / (2.0 * math.pi)
        + 0.25 * (1.0 - np.sum(x * x, axis=-1))
        - A / 2.0 * (n1 + n2)
    )
    return val[()] if isinstance(val, np.ndarray) else val


def _identical(spec):
    return np.allclose(spec.eps, spec.eps[0], rtol=1e-12, atol=0) and np.allclose(
        spec.lengths, spec.lengths[0], rtol=1e-12, atol=0
    )


def mfpt_n(spec, kernel, x):
    """N-neck MFPT.

    Identical necks get every O(1) term; mixed necks only the leading and
    logarithmic terms (error O(1)). Use :func:`solve_asymptotic` to see which
    order applies.
    """
    xs = _guard(spec, x)
    n = spec.n
    A = spec.head.area
    if not _identical(spec):
        val = np.full(len(xs), _leading(spec) + _log_terms(spec, geometry_factors(spec)))
        return _shape_like(val, x)
    eps, Lc = float(spec.eps[0]), float(spec.lengths[0])
    r, f = _center_data(spec, kernel)
    d = _chords(spec)
    iu = np.triu_indices(n, 1)
    const = (
        A * Lc / (2.0 * n * eps)
        - A * math.log(eps) / (math.pi * n)
        - A * (2.0 * LN2 - 3.0) / (2.0 * math.pi * n)
        + Lc**2 / 2.0
        - 2.0 * A / (math.pi * n**2) * np.sum(np.log(d[iu]))
        - np.sum(f) / n
        + A / n**2 * np.trace(r)
        + 2.0 * A / n**2 * np.sum(r[iu])
    )
    val = const + kernel.g_function(xs) - A / n * _neumann_to_centers(spec, kernel, xs).sum(axis=1)
    return _shape_like(val, x)


def flux_density(solution, i, t):
    """Window flux density (per unit length) at local coordinate ``t`` in (-1, 1)."""
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) >= 1.0):
        raise ValueError("flux_density requires |t| < 1")
    C = solution.C[i]
    eps = solution.spec.eps[i]
    L = solution.spec.lengths[i]
    return C / (2.0 * eps) - C * (2.0 * LN2 - 3.0) / (2.0 * math.pi * L) + C / (2.0 * math.pi * L) * log_op_L1(t)


@dataclass
class AsymptoticSolution:
    """Solved interaction system plus the pointwise MFPT evaluator."""

    spec: object
    kernel: object
    C: np.ndarray
    C_eps: float
    factors: GeometryFactors
    Cconst: float = None
    error_order: str = ORDER_TWO
    K: np.ndarray = field(default=None, repr=False)

    def u(self, x):
        if self.spec.n == 2:
            return mfpt_two(self.spec, self.kernel, x)
        return mfpt_n(self.spec, self.kernel, x)

    __call__ = u

    def to_record(self, points=()):
        pts = [np.asarray(p, dtype=float) for p in points]
        return {
            "C": [float(c) for c in self.C],
            "C_eps": self.C_eps,
            "T": self.factors.T.tolist(),
            "F": self.factors.F.tolist(),
            "Cconst": self.Cconst,
            "error_order": self.error_order,
            "u_at": [{"x": float(p[0]), "y": float(p[1]), "u": float(self.u(p))} for p in pts],
        }


def solve_asymptotic(spec, kernel=None):
    """Validate, assemble and solve; returns an :class:`AsymptoticSolution`."""
    from .neumann import NeumannKernel

    require_valid(spec)
    if kernel is None:
        kernel = NeumannKernel(spec.head)
    K, rhs = assemble_system(spec, kernel)
    C, C_eps = solve_constants(K, rhs)
    factors = geometry_factors(spec)
    if spec.n == 2:
        order, Cconst = ORDER_TWO, constant_C(spec, kernel, factors)
    elif _identical(spec):
        order, Cconst = ORDER_IDENTICAL, None
    else:
        order, Cconst = ORDER_LEADING, None
    return AsymptoticSolution(spec, kernel, C, C_eps, factors, Cconst, order, K)
