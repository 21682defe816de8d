"""Head domain, neck attachments and problem validation.

A head boundary is stored as a truncated complex Fourier series
``z(theta) = sum_k c_k exp(i k theta)`` traversed counter-clockwise. The unit
disk is the single-mode series ``c_1 = 1``; sampled curves are ingested by
trigonometric interpolation of an equispaced sample table. Necks are
positioned by the arc length ``s`` of their window center along the boundary,
measured from ``theta = 0``.
"""

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import shapely

__all__ = [
    "HeadDomain",
    "NeckSpec",
    "ProblemSpec",
    "ValidationReport",
    "ValidationError",
    "window_point",
    "window_center",
    "window_normal",
    "validate",
    "require_valid",
    "chord_distance",
    "problem_from_dict",
    "problem_to_dict",
    "load_problem",
    "THIN_HARD",
    "THIN_WARN",
    "SEPARATION_FACTOR",
]

#: ``epsilon / length`` above which a neck is rejected
THIN_HARD = 0.2
#: ``epsilon / length`` above which a neck draws a warning
THIN_WARN = 0.1
#: windows must be separated by ``SEPARATION_FACTOR * max(epsilon)`` beyond their half-widths
SEPARATION_FACTOR = 10.0

_POLY_SAMPLES = 2048


class ValidationError(ValueError):
    """Raised when a problem description fails validation."""

    def __init__(self, report):
        self.report = report
        super().__init__("; ".join(report.problems) or "invalid problem")


@dataclass(frozen=True, eq=False)
class HeadDomain:
    """Smooth closed head boundary given by Fourier modes.

    Parameters
    ----------
    kind : str
        ``"unit-disk"`` or ``"curve"``.
    modes : ndarray of int
        Wavenumbers ``k``.
    coeffs : ndarray of complex
        Coefficients ``c_k`` matching ``modes``.
    """

    kind: str
    modes: np.ndarray
    coeffs: np.ndarray
    area: float = field(init=False)
    perimeter: float = field(init=False)
    _speed_modes: np.ndarray = field(init=False, repr=False)
    _speed_coeffs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("unit-disk", "curve"):
            raise ValueError(f"unknown head kind {self.kind!r}")
        modes = np.asarray(self.modes, dtype=int)
        coeffs = np.asarray(self.coeffs, dtype=complex)
        keep = np.abs(coeffs) > 1e-15 * np.abs(coeffs).max()
        modes, coeffs = modes[keep], coeffs[keep]
        area = math.pi * float(np.sum(modes * np.abs(coeffs) ** 2))
        if area < 0:
            # reverse orientation: z(theta) -> z(-theta)
            modes = -modes
            area = -area
        if area <= 0:
            raise ValueError("degenerate head boundary (zero area)")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "area", area)

        # Spectral arc length: Fourier series of the speed |z'(theta)|.
        kmax = int(np.abs(modes).max())
        m = max(1024, 16 * kmax)
        theta = 2.0 * np.pi * np.arange(m) / m
        speed_hat = np.fft.fft(self.speed(theta)) / m
        freqs = np.fft.fftfreq(m, d=1.0 / m).astype(int)
        object.__setattr__(self, "_speed_modes", freqs)
        object.__setattr__(self, "_speed_coeffs", speed_hat)
        object.__setattr__(self, "perimeter", float(speed_hat[0].real) * 2.0 * np.pi)

    # -- constructors -----------------------------------------------------

    @classmethod
    def unit_disk(cls):
        return cls("unit-disk", np.array([1]), np.array([1.0 + 0j]))

    @classmethod
    def ellipse(cls, a, b):
        """Ellipse with semi-axes ``a`` (x) and ``b`` (y), centered at the origin."""
        return cls("curve", np.array([1, -1]), np.array([(a + b) / 2, (a - b) / 2], dtype=complex))

    @classmethod
    def star(cls, amplitude=0.2, lobes=3, radius=1.0):
        """Star-shaped curve ``r(theta) = radius * (1 + amplitude cos(lobes theta))``."""
        modes = np.array([1, 1 + lobes, 1 - lobes])
        coeffs = radius * np.array([1.0, amplitude / 2, amplitude / 2], dtype=complex)
        return cls("curve", modes, coeffs)

    @classmethod
    def from_points(cls, points):
        """Trigonometric interpolant through an equispaced-in-parameter sample table."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 8:
            raise ValueError("points must be an (M, 2) array with M >= 8")
        m = len(pts)
        chat = np.fft.fft(pts[:, 0] + 1j * pts[:, 1]) / m
        freqs = np.fft.fftfreq(m, d=1.0 / m).astype(int)
        if m % 2 == 0:
            nyq = m // 2
            idx = np.flatnonzero(np.abs(freqs) == nyq)[0]
            half = chat[idx] / 2
            chat = np.append(chat, half)
            chat[idx] = half
            freqs = np.append(freqs, -freqs[idx])
        return cls("curve", freqs, chat)

    # -- pointwise geometry -----------------------------------------------

    def _series(self, theta, order=0):
        theta = np.asarray(theta, dtype=float)
        phase = np.exp(1j * theta[..., None] * self.modes)
        c = self.coeffs * (1j * self.modes) ** order
        return phase @ c

    def z(self, theta, order=0):
        """Complex position (or ``order``-th derivative) at parameter ``theta``."""
        return self._series(theta, order)

    def point(self, theta):
        zz = self._series(theta)
        return np.stack([zz.real, zz.imag], axis=-1)

    def speed(self, theta):
        return np.abs(self._series(theta, 1))

    def tangent(self, theta):
        d = self._series(theta, 1)
        d = d / np.abs(d)
        return np.stack([d.real, d.imag], axis=-1)

    def normal(self, theta):
        """Outward unit normal."""
        d = self._series(theta, 1)
        d = d / np.abs(d)
        return np.stack([d.imag, -d.real], axis=-1)

    def curvature(self, theta):
        d1 = self._series(theta, 1)
        d2 = self._series(theta, 2)
        return (np.conj(d1) * d2).imag / np.abs(d1) ** 3

    def centroid(self):
        theta = 2.0 * np.pi * np.arange(4096) / 4096
        p = self.point(theta)
        d = self._series(theta, 1)
        # Green's theorem: x_c = (1/2A) int x^2 dy, y_c = -(1/2A) int y^2 dx
        dtheta = 2.0 * np.pi / 4096
        xc = np.sum(p[:, 0] ** 2 * d.imag) * dtheta / (2 * self.area)
        yc = -np.sum(p[:, 1] ** 2 * d.real) * dtheta / (2 * self.area)
        return np.array([xc, yc])

    # -- arc length -------------------------------------------------------

    def arc_length(self, theta):
        """Arc length from ``theta = 0`` (monotone, not wrapped)."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == "unit-disk":
            return theta.copy()
        k = self._speed_modes
        c = self._speed_coeffs
        nz = k != 0
        phase = np.exp(1j * theta[..., None] * k[nz]) - 1.0
        return c[0].real * theta + (phase @ (c[nz] / (1j * k[nz]))).real

    def theta_at(self, s):
        """Inverse of :meth:`arc_length`; ``s`` may lie outside ``[0, perimeter)``."""
        s = np.asarray(s, dtype=float)
        if self.kind == "unit-disk":
            return s.copy()
        theta = 2.0 * np.pi * s / self.perimeter
        for _ in range(50):
            step = (self.arc_length(theta) - s) / self.speed(theta)
            theta = theta - step
            if np.all(np.abs(step) < 1e-15 * (1.0 + np.abs(theta))):
                break
        return theta

    def point_at(self, s):
        return self.point(self.theta_at(s))

    def normal_at(self, s):
        return self.normal(self.theta_at(s))

    # -- global queries ---------------------------------------------------

    def polyline(self, m=_POLY_SAMPLES):
        return self.point(2.0 * np.pi * np.arange(m) / m)

    def project(self, x):
        """Closest boundary parameter and signed distance (negative inside)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        m = 1024
        grid = 2.0 * np.pi * np.arange(m) / m
        poly = self.z(grid)
        xz = x[:, 0] + 1j * x[:, 1]
        theta = grid[np.argmin(np.abs(xz[:, None] - poly[None, :]), axis=1)]
        for _ in range(30):
            r = self.z(theta) - xz
            d1 = self.z(theta, 1)
            d2 = self.z(theta, 2)
            f = (r * np.conj(d1)).real
            fp = np.abs(d1) ** 2 + (r * np.conj(d2)).real
            # fp vanishes when every boundary point is equidistant (circle centre)
            safe = np.abs(fp) > 1e-14
            step = np.where(safe, f / np.where(safe, fp, 1.0), 0.0)
            theta = theta - step
            if np.all(np.abs(step) < 1e-15):
                break
        theta = np.mod(theta, 2.0 * np.pi)
        r = self.point(theta) - x
        dist = np.linalg.norm(r, axis=1)
        side = np.sign(np.sum(-r * self.normal(theta), axis=1))
        return theta, side * dist

    def contains(self, x):
        _, d = self.project(x)
        return d < 0

    def check(self):
        """Return the list of violated boundary invariants (empty if healthy)."""
        problems = []
        m = _POLY_SAMPLES
        theta = 2.0 * np.pi * np.arange(m) / m
        p = self.point(theta)
        gap = np.linalg.norm(self.point(0.0) - self.point(2.0 * np.pi))
        if gap > 1e-12:
            problems.append(f"curve not closed (gap {gap:.2e})")
        if not shapely.LinearRing(p).is_simple:
            problems.append("curve self-intersects")
        # second divided differences as a curvature proxy
        dd = np.roll(p, -1, axis=0) - 2 * p + np.roll(p, 1, axis=0)
        seg = np.linalg.norm(np.roll(p, -1, axis=0) - p, axis=1)
        kappa = np.linalg.norm(dd, axis=1) / seg**2
        if not np.all(np.isfinite(kappa)):
            problems.append("curvature proxy not finite")
        else:
            jump = np.abs(np.diff(np.append(kappa, kappa[0])))
            if jump.max() > 0.05 * (kappa.max() + 1.0):
                problems.append("curvature changes abruptly")
        d = self.z(theta, 1)
        area = 0.5 * np.sum(p[:, 0] * d.imag - p[:, 1] * d.real) * (2 * np.pi / m)
        perim = np.sum(np.abs(d)) * (2 * np.pi / m)
        if abs(area - self.area) > 1e-8 * self.area:
            problems.append("area mismatch")
        if abs(perim - self.perimeter) > 1e-8 * self.perimeter:
            problems.append("perimeter mismatch")
        return problems


@dataclass(frozen=True)
class NeckSpec:
    """Straight neck attached normally at arc position ``s``."""

    s: float
    epsilon: float
    length: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("neck epsilon must be positive")
        if not self.length > 0:
            raise ValueError("neck length must be positive")


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    head: HeadDomain
    necks: tuple

    def __post_init__(self):
        object.__setattr__(self, "necks", tuple(self.necks))
        if len(self.necks) < 1:
            raise ValueError("at least one neck is required")

    @property
    def n(self):
        return len(self.necks)

    @property
    def eps(self):
        return np.array([nk.epsilon for nk in self.necks])

    @property
    def lengths(self):
        return np.array([nk.length for nk in self.necks])

    @property
    def positions(self):
        return np.array([nk.s for nk in self.necks])

    def centers(self):
        return self.head.point_at(self.positions)

    def rotated(self, angle):
        """Same necks shifted by ``angle`` of arc (a rigid rotation on the unit disk)."""
        return ProblemSpec(self.head, [NeckSpec(nk.s + angle, nk.epsilon, nk.length) for nk in self.necks])

    @classmethod
    def disk(cls, angles, eps, lengths):
        """Unit-disk problem from window angles; scalars broadcast."""
        angles = np.atleast_1d(angles)
        eps = np.broadcast_to(eps, angles.shape)
        lengths = np.broadcast_to(lengths, angles.shape)
        necks = [NeckSpec(float(a), float(e), float(L)) for a, e, L in zip(angles, eps, lengths)]
        return cls(HeadDomain.unit_disk(), necks)


@dataclass
class ValidationReport:
    ok: bool
    problems: list
    warnings: list

    def __bool__(self):
        return self.ok


def _neck(spec, i):
    if not 0 <= i < spec.n:
        raise IndexError(f"neck index {i} out of range for {spec.n} necks")
    return spec.necks[i]


def window_point(spec, i, t):
    """Boundary point at arc length ``s_i + epsilon_i * t`` (``i`` is 0-based)."""
    nk = _neck(spec, i)
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1.0):
        raise ValueError("local window coordinate must satisfy |t| <= 1")
    return spec.head.point_at(nk.s + nk.epsilon * t)


def window_center(spec, i):
    return window_point(spec, i, 0.0)


def window_normal(spec, i):
    """Outward normal at the window center, which is also the neck axis."""
    return spec.head.normal_at(_neck(spec, i).s)


def chord_distance(spec, i, j):
    return float(np.linalg.norm(window_center(spec, i) - window_center(spec, j)))


def _arc_gap(head, s1, s2):
    d = abs(s1 - s2) % head.perimeter
    return min(d, head.perimeter - d)


def validate(spec):
    """Check every problem invariant; never raises."""
    problems, warns = [], []
    try:
        problems.extend(spec.head.check())
    except Exception as exc:  # malformed curves must still produce a report
        problems.append(f"head check failed: {exc}")
    for i, nk in enumerate(spec.necks):
        ratio = nk.epsilon / nk.length
        if ratio > THIN_HARD:
            problems.append(f"neck {i}: thinness violated (epsilon/length = {ratio:.3g} > {THIN_HARD})")
        elif ratio > THIN_WARN:
            warns.append(f"neck {i}: epsilon/length = {ratio:.3g} exceeds {THIN_WARN}")
    sep = SEPARATION_FACTOR * float(spec.eps.max())
    for i in range(spec.n):
        for j in range(i + 1, spec.n):
            a, b = spec.necks[i], spec.necks[j]
            gap = _arc_gap(spec.head, a.s, b.s)
            if gap < a.epsilon + b.epsilon:
                problems.append(f"necks {i},{j}: windows overlap")
            elif gap < a.epsilon + b.epsilon + sep:
                problems.append(f"necks {i},{j}: windows not well separated (gap {gap:.3g})")
    if 2 * float(spec.eps.max()) >= spec.head.perimeter:
        problems.append("window longer than the head boundary")
    return ValidationReport(not problems, problems, warns)


def require_valid(spec):
    report = validate(spec)
    if not report.ok:
        raise ValidationError(report)
    for w in report.warnings:
        warnings.warn(w, stacklevel=2)
    return spec


# -- problem files --------------------------------------------------------

def _head_from_dict(d):
    kind = d.get("kind", "unit-disk")
    if kind == "unit-disk":
        return HeadDomain.unit_disk()
    if kind == "curve":
        return HeadDomain.from_points(d["points"])
    if kind == "ellipse":
        return HeadDomain.ellipse(float(d["a"]), float(d["b"]))
    if kind == "star":
        return HeadDomain.star(float(d.get("amplitude", 0.2)), int(d.get("lobes", 3)), float(d.get("radius", 1.0)))
    raise ValueError(f"unknown head kind {kind!r}")


def problem_from_dict(d):
    head = _head_from_dict(d.get("head", {"kind": "unit-disk"}))
    necks = [NeckSpec(float(n["angle_or_s"]), float(n["epsilon"]), float(n["length"])) for n in d["necks"]]
    return ProblemSpec(head, necks)


def problem_to_dict(spec):
    head = spec.head
    if head.kind == "unit-disk":
        hd = {"kind": "unit-disk"}
    else:
        hd = {"kind": "curve", "points": head.polyline(512).tolist()}
    return {
        "head": hd,
        "necks": [{"angle_or_s": nk.s, "epsilon": nk.epsilon, "length": nk.length} for nk in spec.necks],
    }


def load_problem(path):
    return problem_from_dict(json.loads(Path(path).read_text()))
