"""Quadrature helpers for logarithmic kernels.

Two families live here:

* Legendre product integration on an interval, for integrals of the form
  ``int_{-1}^{1} ln|t - s| f(s) ds`` with ``f`` sampled at Gauss-Legendre
  nodes. The weights are built from closed-form log moments of the Legendre
  polynomials, so the singularity is integrated exactly for polynomial ``f``.
* Kress-type weights for the periodic log kernel ``ln(4 sin^2((t - s)/2))``
  on an equispaced grid, used by the Nystrom solver for closed curves.
"""

import numpy as np
from numpy.polynomial.legendre import leggauss, legvander
from scipy.special import xlogy

__all__ = [
    "log_moment_zero",
    "legendre_q",
    "legendre_log_moments",
    "product_weights",
    "kress_weights",
]


def log_moment_zero(t):
    """``int_{-1}^{1} ln|t - s| ds`` for any real ``t`` (0 ln 0 taken as 0)."""
    t = np.asarray(t, dtype=float)
    return xlogy(t + 1.0, np.abs(t + 1.0)) - xlogy(t - 1.0, np.abs(t - 1.0)) - 2.0


def legendre_q(t, nmax):
    """Legendre functions of the second kind ``Q_0..Q_nmax`` at real ``t``.

    On the cut (|t| < 1) this is the Ferrers function, evaluated by forward
    recurrence. Off the cut ``Q_n`` is the minimal solution of the three-term
    recurrence, so it is computed by Miller's backward recurrence normalized
    against the closed form of ``Q_0``. ``t = +-1`` is not allowed.

    Returns an array of shape ``(nmax + 1,) + t.shape``.
    """
    t = np.asarray(t, dtype=float)
    out = np.empty((nmax + 1,) + t.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        q0 = 0.5 * np.log(np.abs((1.0 + t) / (1.0 - t)))
    inside = np.abs(t) < 1.0

    if np.any(inside):
        ti = t[inside]
        qm1 = q0[inside]
        out[0][inside] = qm1
        if nmax >= 1:
            q = ti * qm1 - 1.0
            out[1][inside] = q
            for m in range(1, nmax):
                qm1, q = q, ((2 * m + 1) * ti * q - m * qm1) / (m + 1)
                out[m + 1][inside] = q

    outside = ~inside
    if np.any(outside):
        to = np.abs(t[outside])
        rho = to + np.sqrt(to * to - 1.0)
        # Q_n ~ rho**(-n); start far enough that the seed error is below eps.
        start = int(min(20000, nmax + 10 + 40.0 / max(np.log(rho.min()), 1e-3)))
        vals = np.empty((nmax + 1, to.size))
        qp1 = np.zeros_like(to)
        q = np.full_like(to, 1e-300)
        for m in range(start, 0, -1):
            qm1 = ((2 * m + 1) * to * q - (m + 1) * qp1) / m
            qp1, q = q, qm1
            if m - 1 <= nmax:
                vals[m - 1] = q
            big = np.abs(q) > 1e250
            if np.any(big):
                scale = np.where(big, 1e-250, 1.0)
                q = q * scale
                qp1 = qp1 * scale
                if m - 1 <= nmax:
                    vals[m - 1:] *= scale
        vals *= 0.5 * np.log((to + 1.0) / (to - 1.0)) / vals[0]
        # Q_n(-t) = (-1)**(n+1) Q_n(t)
        negative = t[outside] < 0
        for n in range(nmax + 1):
            out[n][outside] = np.where(negative, (-1.0) ** (n + 1), 1.0) * vals[n]
    return out


def legendre_log_moments(t, nmax):
    """``M_n(t) = int_{-1}^{1} ln|t - s| P_n(s) ds`` for ``n = 0..nmax``.

    Valid for any real ``t`` except ``t = +-1`` when ``nmax >= 1``. Uses
    ``M_n = 2 (Q_{n+1} - Q_{n-1}) / (2n + 1)``, obtained by integrating by
    parts against ``(P_{n+1} - P_{n-1}) / (2n + 1)``.
    """
    t = np.asarray(t, dtype=float)
    out = np.empty((nmax + 1,) + t.shape)
    out[0] = log_moment_zero(t)
    if nmax >= 1:
        q = legendre_q(t, nmax + 1)
        for n in range(1, nmax + 1):
            out[n] = 2.0 * (q[n + 1] - q[n - 1]) / (2 * n + 1)
    return out


def product_weights(targets, order):
    """Weights ``W`` with ``sum_j W[k, j] f(s_j) ~ int ln|t_k - s| f(s) ds``.

    ``s_j`` are the ``order``-point Gauss-Legendre nodes on [-1, 1]; the rule
    is exact when ``f`` is a polynomial of degree < ``order``.
    """
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    nodes, w = leggauss(order)
    moments = legendre_log_moments(targets, order - 1)  # (order, nt)
    # Discrete Legendre transform on GL nodes: a_n = (2n+1)/2 sum_j w_j P_n(s_j) f_j
    transform = legvander(nodes, order - 1).T * w[None, :]
    transform *= (2 * np.arange(order) + 1)[:, None] / 2.0
    return moments.T @ transform


def kress_weights(t, n):
    """Weights for ``int_0^{2pi} ln(4 sin^2((t - s)/2)) f(s) ds`` on ``n`` nodes.

    ``f`` is sampled on the equispaced grid ``s_j = 2 pi j / n`` (``n`` even);
    ``t`` may be any array of targets. The rule integrates the trigonometric
    interpolant of ``f`` exactly.
    """
    t = np.asarray(t, dtype=float)
    s = 2.0 * np.pi * np.arange(n) / n
    d = t[..., None] - s
    m = np.arange(1, n // 2)
    acc = np.zeros(d.shape)
    for mm in m:
        acc += np.cos(mm * d) / mm
    return -(4.0 * np.pi / n) * acc - (4.0 * np.pi / n**2) * np.cos((n // 2) * d)
