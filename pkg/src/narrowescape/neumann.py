"""Neumann functions of the head domain.

For a boundary source ``z`` the boundary Neumann function is

    N(x, z) = -(1/pi) ln|x - z| + R(x, z),

where the regular part ``R`` is harmonic in ``x`` and fixes the Neumann data to
``-1/|dOmega|``. On the unit disk ``R`` vanishes identically and
``g(x) = (1 - |x|^2) / 4``; on other heads both are obtained from an interior
Neumann problem solved with a single-layer potential

    (1/2 I + K' + W) sigma = h,

discretized by the periodic trapezoid rule (Nystrom). ``W`` adds the density
mean and removes the one-dimensional null space; the additive constant is fixed
afterwards by the zero-boundary-mean normalization.
"""

import csv

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.special import xlogy

from .quadrature import kress_weights

__all__ = ["NeumannKernel", "CoincidentPointError", "log_op_L1", "L1_INTEGRAL"]

#: ``int_{-1}^{1} L[1](t) dt``
L1_INTEGRAL = 4.0 * np.log(2.0) - 6.0

_COINCIDENT = 1e-14
_ON_BOUNDARY = 1e-11


class CoincidentPointError(ValueError):
    pass


def log_op_L1(t):
    """``L[1](t) = int_{-1}^{1} ln|t - s| ds`` for ``|t| <= 1``."""
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1.0):
        raise ValueError("log_op_L1 requires |t| <= 1")
    return xlogy(1.0 + t, 1.0 + t) + xlogy(1.0 - t, 1.0 - t) - 2.0


class NeumannKernel:
    """Boundary Neumann function, its regular part and the torsion function ``g``.

    Parameters
    ----------
    head : HeadDomain
    n : int
        Trapezoid nodes on the boundary for the numerical mode (even).
    """

    def __init__(self, head, n=256):
        self.head = head
        self.mode = "exact-disk" if head.kind == "unit-disk" else "numerical"
        self.n = int(n)
        if self.mode == "numerical":
            self._build()

    # -- numerical setup --------------------------------------------------

    def _build(self):
        head, n = self.head, self.n
        if n % 2:
            raise ValueError("number of boundary nodes must be even")
        th = 2.0 * np.pi * np.arange(n) / n
        self._theta = th
        self._y = head.point(th)
        self._nu = head.normal(th)
        self._speed = head.speed(th)
        self._w = self._speed * (2.0 * np.pi / n)
        self._kappa = head.curvature(th)
        P = head.perimeter

        d = self._y[:, None, :] - self._y[None, :, :]
        r2 = np.sum(d * d, axis=2)
        np.fill_diagonal(r2, 1.0)
        dn = np.sum(d * self._nu[:, None, :], axis=2) / r2
        np.fill_diagonal(dn, self._kappa / 2.0)
        A = 0.5 * np.eye(n) - dn * self._w[None, :] / (2.0 * np.pi) + self._w[None, :]
        self._lu = lu_factor(A)

        # S[1] at the nodes, needed for boundary integrals of single layers
        self._v1 = self._single_layer_boundary(th, np.ones((n, 1)))[:, 0]

        # torsion function g = -|x - x0|^2/4 + S[sigma_g] + c_g
        self._x0 = head.centroid()
        rel = self._y - self._x0
        data = -head.area / P + 0.5 * np.sum(rel * self._nu, axis=1)
        self._sigma_g = lu_solve(self._lu, data)
        quad_part = -np.sum(self._w * np.sum(rel * rel, axis=1)) / 4.0
        layer_part = np.sum(self._sigma_g * self._w * self._v1)
        self._c_g = -(quad_part + layer_part) / P

    def _single_layer_boundary(self, theta_t, sigma):
        """``S[sigma]`` at boundary parameters ``theta_t``; ``sigma`` is (n, m)."""
        theta_t = np.atleast_1d(theta_t)
        zt = self.head.z(theta_t)
        ys = self._y[:, 0] + 1j * self._y[:, 1]
        diff = theta_t[:, None] - self._theta[None, :]
        s2 = 4.0 * np.sin(diff / 2.0) ** 2
        dist2 = np.abs(zt[:, None] - ys[None, :]) ** 2
        same = s2 < 1e-28
        with np.errstate(divide="ignore", invalid="ignore"):
            smooth = 0.5 * np.log(dist2 / s2)
        if np.any(same):
            lim = np.log(self.head.speed(theta_t))
            smooth = np.where(same, lim[:, None], smooth)
        kw = kress_weights(theta_t, self.n)
        dens = sigma * self._speed[:, None]
        integral = 0.5 * (kw @ dens) + (2.0 * np.pi / self.n) * (smooth @ dens)
        return -integral / (2.0 * np.pi)

    def _single_layer_interior(self, x, sigma):
        """``S[sigma]`` at interior points, upsampling the rule near the boundary."""
        x = np.atleast_2d(x)
        _, sd = self.head.project(x)
        h = self.head.perimeter / self.n
        out = np.empty((len(x), sigma.shape[1]))
        factors = np.ones(len(x), dtype=int)
        close = np.abs(sd) < 5.0 * h
        if np.any(close):
            need = 5.0 * h / np.maximum(np.abs(sd[close]), 1e-12)
            factors[close] = np.minimum(2 ** np.ceil(np.log2(need)).astype(int), 256)
        for f in np.unique(factors):
            sel = factors == f
            if f == 1:
                ys, w, sg = self._y, self._w, sigma
            else:
                m = self.n * int(f)
                th = 2.0 * np.pi * np.arange(m) / m
                ys = self.head.point(th)
                w = self.head.speed(th) * (2.0 * np.pi / m)
                sg = _upsample(sigma, m)
            r = np.linalg.norm(x[sel][:, None, :] - ys[None, :, :], axis=2)
            out[sel] = -(np.log(r) * w[None, :]) @ sg / (2.0 * np.pi)
        return out

    def _densities(self, theta_z):
        """Single-layer densities and constants for boundary sources ``theta_z``."""
        theta_z = np.atleast_1d(theta_z)
        zs = self.head.point(theta_z)
        d = self._y[:, None, :] - zs[None, :, :]
        r2 = np.sum(d * d, axis=2)
        dn = np.sum(d * self._nu[:, None, :], axis=2)
        near = r2 < (1e-7 * self.head.perimeter) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(near, (self._kappa / 2.0)[:, None], dn / r2)
        data = -1.0 / self.head.perimeter + ratio / np.pi
        sigma = lu_solve(self._lu, data)
        v1_z = self._single_layer_boundary(theta_z, np.ones((self.n, 1)))[:, 0]
        # normalization: int R ds = (1/pi) int ln|x - z| ds = -2 S[1](z)
        const = (-2.0 * v1_z - (self._w * self._v1) @ sigma) / self.head.perimeter
        return sigma, const

    # -- boundary parameter helpers ----------------------------------------

    def _theta_of(self, z, what="point"):
        z = np.atleast_2d(z)
        theta, sd = self.head.project(z)
        if np.any(np.abs(sd) > _ON_BOUNDARY * (1.0 + np.abs(z).max())):
            raise ValueError(f"{what} is not on the head boundary")
        return theta

    def _split_targets(self, x):
        x = np.atleast_2d(x)
        theta, sd = self.head.project(x)
        scale = 1.0 + np.abs(x).max()
        if np.any(sd > _ON_BOUNDARY * scale):
            raise ValueError("evaluation point lies outside the head domain")
        return theta, np.abs(sd) <= _ON_BOUNDARY * scale

    def regular_matrix_param(self, theta_x, theta_z):
        """``R(x(theta_x), z(theta_z))`` for boundary parameters (both arrays)."""
        theta_x = np.atleast_1d(theta_x)
        theta_z = np.atleast_1d(theta_z)
        if self.mode == "exact-disk":
            return np.zeros((theta_x.size, theta_z.size))
        sigma, const = self._densities(theta_z)
        return self._single_layer_boundary(theta_x, sigma) + const[None, :]

    def regular_matrix_interior(self, x, theta_z):
        """``R(x, z(theta_z))`` for interior points ``x`` (nx, 2)."""
        x = np.atleast_2d(x)
        theta_z = np.atleast_1d(theta_z)
        if self.mode == "exact-disk":
            return np.zeros((len(x), theta_z.size))
        sigma, const = self._densities(theta_z)
        return self._single_layer_interior(x, sigma) + const[None, :]

    def g_param(self, theta):
        """``g`` at boundary parameters."""
        theta = np.atleast_1d(theta)
        if self.mode == "exact-disk":
            return np.zeros(theta.shape)
        p = self.head.point(theta)
        rel = p - self._x0
        layer = self._single_layer_boundary(theta, self._sigma_g[:, None])[:, 0]
        return -np.sum(rel * rel, axis=1) / 4.0 + layer + self._c_g

    # -- public API --------------------------------------------------------

    def regular_part(self, x, z):
        """``R(x, z)``; result has shape ``x.shape[:-1] + z.shape[:-1]``."""
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        out_shape = x.shape[:-1] + z.shape[:-1]
        if self.mode == "exact-disk":
            return np.zeros(out_shape)[()]
        theta_z = self._theta_of(z.reshape(-1, 2), "source")
        xs = x.reshape(-1, 2)
        theta_x, on_b = self._split_targets(xs)
        out = np.empty((len(xs), theta_z.size))
        if np.any(on_b):
            out[on_b] = self.regular_matrix_param(theta_x[on_b], theta_z)
        if np.any(~on_b):
            out[~on_b] = self.regular_matrix_interior(xs[~on_b], theta_z)
        return out.reshape(out_shape)[()]

    def boundary_neumann(self, x, z):
        """``N(x, z) = -(1/pi) ln|x - z| + R(x, z)``."""
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        xs = x.reshape(-1, 2)
        zs = z.reshape(-1, 2)
        r = np.linalg.norm(xs[:, None, :] - zs[None, :, :], axis=2)
        if np.any(r < _COINCIDENT):
            raise CoincidentPointError("x and z coincide")
        val = -np.log(r) / np.pi
        if self.mode == "numerical":
            val = val + np.asarray(self.regular_part(xs, zs)).reshape(val.shape)
        return val.reshape(x.shape[:-1] + z.shape[:-1])[()]

    def g_function(self, x):
        """Torsion-type function: ``-Lap g = 1``, ``dg/dnu = -|Omega|/|dOmega|``, zero boundary mean."""
        x = np.asarray(x, dtype=float)
        xs = x.reshape(-1, 2)
        if self.mode == "exact-disk":
            val = 0.25 * (1.0 - np.sum(xs * xs, axis=1))
        else:
            theta, on_b = self._split_targets(xs)
            val = np.empty(len(xs))
            if np.any(on_b):
                val[on_b] = self.g_param(theta[on_b])
            if np.any(~on_b):
                pts = xs[~on_b]
                rel = pts - self._x0
                layer = self._single_layer_interior(pts, self._sigma_g[:, None])[:, 0]
                val[~on_b] = -np.sum(rel * rel, axis=1) / 4.0 + layer + self._c_g
        return val.reshape(x.shape[:-1])[()]

    def dump_regular_csv(self, path, m=32):
        """Write ``R`` on an ``m x m`` grid of boundary parameters (theta_x, theta_z, value)."""
        th = 2.0 * np.pi * np.arange(m) / m
        vals = self.regular_matrix_param(th, th)
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["theta_x", "theta_z", "value"])
            for i in range(m):
                for j in range(m):
                    wr.writerow([repr(th[i]), repr(th[j]), repr(vals[i, j])])


def _upsample(values, m):
    """Trigonometric interpolation of periodic columns onto ``m`` equispaced nodes."""
    n = values.shape[0]
    vh = np.fft.fft(values, axis=0)
    out = np.zeros((m,) + values.shape[1:], dtype=complex)
    half = n // 2
    out[:half] = vh[:half]
    out[-half + 1:] = vh[-half + 1:]
    out[half] = vh[half] / 2
    out[-half] = vh[half] / 2
    return np.fft.ifft(out, axis=0).real * (m / n)
