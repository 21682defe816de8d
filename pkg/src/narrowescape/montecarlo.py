"""Monte Carlo first passage times for the composite head-plus-necks domain.

Walkers take Euler-Maruyama steps of unit diffusivity (variance ``2 dt`` per
coordinate). The head boundary and the neck side walls reflect specularly;
the far end of each neck absorbs. A point belongs to the domain if it lies in
the head or in any neck box. Each neck box spans the window chord laterally
and runs from ``-half_width`` below the chord to the absorbing end, so the
thin sliver between a window arc and its chord is always covered whether the
boundary bulges outward or inward there.

Absorption also uses the Brownian-bridge crossing probability
``exp(-(L - a_p)(L - a_q) / dt)`` for steps that stay inside the neck, which
removes the leading discrete-monitoring bias at the absorbing end.

Every walker owns a xoshiro256** stream seeded from ``(seed, walker_index)``
through splitmix64, so results do not depend on how walkers are scheduled
across threads.
"""

import csv
import math
import os
import warnings
from dataclasses import dataclass, field

import numba
import numpy as np

from .geometry import require_valid, window_point

if "NUMBA_THREADING_LAYER" not in os.environ:
    # avoid probing an incompatible TBB; results are layer independent anyway
    numba.config.THREADING_LAYER = "workqueue"

__all__ = [
    "CompositeGeometry",
    "WalkerStats",
    "NeckProfile",
    "InsufficientWalkersError",
    "BudgetWarning",
    "simulate",
    "neck_profile_check",
    "default_dt",
    "HEAD_SEGMENTS",
]

#: polyline resolution for non-circular heads
HEAD_SEGMENTS = 4096
_BUDGET_FACTOR = 10.0
_MIN_WALKERS = 100

_FULL = 0
_CONFINED = 1

ABSORBED = 0
BUDGET = 1
WINDOW_EXIT = 2


class InsufficientWalkersError(RuntimeError):
    pass


class BudgetWarning(RuntimeWarning):
    pass


def default_dt(spec):
    return min(spec.eps.min() ** 2 / 4.0, 1e-4)


@dataclass
class CompositeGeometry:
    """Head polyline plus one rectangle per neck.

    Neck ``k`` uses local coordinates ``a`` (along the outward axis, 0 on the
    window chord) and ``b`` (across the neck, ``|b| < half_width[k]``).
    """

    is_disk: bool
    center: np.ndarray
    vertices: np.ndarray
    angles: np.ndarray
    inner_radius: float
    mid: np.ndarray
    axis: np.ndarray
    half_width: np.ndarray
    length: np.ndarray
    chord_ends: np.ndarray

    @classmethod
    def from_spec(cls, spec, segments=HEAD_SEGMENTS):
        head = spec.head
        is_disk = head.kind == "unit-disk"
        center = np.zeros(2) if is_disk else np.asarray(head.centroid(), dtype=float)
        verts = head.polyline(segments)
        rel = verts - center
        ang = np.unwrap(np.arctan2(rel[:, 1], rel[:, 0]))
        if not np.all(np.diff(ang) > 0) or not ang[-1] - ang[0] < 2.0 * np.pi:
            raise ValueError("Monte Carlo needs a head that is star-shaped about its centroid")
        # rotate so the angle table starts at the branch cut of atan2
        start = int(np.argmin(np.mod(ang + np.pi, 2.0 * np.pi)))
        verts = np.roll(verts, -start, axis=0)
        rel = verts - center
        ang = np.unwrap(np.arctan2(rel[:, 1], rel[:, 0]))
        ang = ang - 2.0 * np.pi * np.floor((ang[0] + np.pi) / (2.0 * np.pi))
        nxt = np.roll(verts, -1, axis=0)
        seg = nxt - verts
        # distance from center to each segment line (star-shaped, ccw)
        line_dist = np.abs(seg[:, 0] * (center[1] - verts[:, 1]) - seg[:, 1] * (center[0] - verts[:, 0]))
        inner = 1.0 if is_disk else float(np.min(line_dist / np.linalg.norm(seg, axis=1)))

        n = spec.n
        mid = np.empty((n, 2))
        axis = np.empty((n, 2))
        hw = np.empty(n)
        ends = np.empty((n, 2, 2))
        for k in range(n):
            p0, p1 = window_point(spec, k, -1.0), window_point(spec, k, 1.0)
            chord = p1 - p0
            nrm = np.array([chord[1], -chord[0]]) / np.linalg.norm(chord)
            if nrm @ head.normal_at(spec.necks[k].s) < 0:
                nrm = -nrm
            mid[k] = 0.5 * (p0 + p1)
            axis[k] = nrm
            hw[k] = 0.5 * np.linalg.norm(chord)
            ends[k] = (p0, p1)
        return cls(is_disk, center, verts, ang, inner, mid, axis, hw, spec.lengths.astype(float), ends)

    def _local(self, x):
        x = np.atleast_2d(x)
        d = x[:, None, :] - self.mid[None, :, :]
        tang = np.stack([-self.axis[:, 1], self.axis[:, 0]], axis=1)
        a = np.einsum("pkd,kd->pk", d, self.axis)
        b = np.einsum("pkd,kd->pk", d, tang)
        return a, b

    def in_neck(self, x):
        """Boolean ``(points, necks)`` membership in the neck boxes."""
        a, b = self._local(x)
        return (a >= -self.half_width) & (a < self.length) & (np.abs(b) < self.half_width)

    def in_head(self, x):
        x = np.atleast_2d(x)
        return np.array([_in_head(p[0], p[1], self.is_disk, self.center, self.vertices, self.angles) for p in x])

    def contains(self, x):
        return self.in_head(x) | np.any(self.in_neck(x), axis=1)

    def neck_point(self, k, a):
        """Point on the axis of neck ``k`` at distance ``a`` from the window chord."""
        return self.mid[k] + a * self.axis[k]

    def _args(self):
        return (
            self.is_disk,
            self.center,
            self.vertices,
            self.angles,
            self.inner_radius,
            self.mid,
            self.axis,
            self.half_width,
            self.length,
        )


@dataclass
class WalkerStats:
    """Monte Carlo MFPT estimate over the absorbed walkers."""

    mean_fpt: float
    stderr: float
    n_walkers: int
    dt: float
    seed: int
    absorbed_fraction: float
    times: np.ndarray = field(default=None, repr=False)

    def to_record(self):
        return {
            "mean": self.mean_fpt,
            "stderr": self.stderr,
            "n": self.n_walkers,
            "dt": self.dt,
            "seed": self.seed,
            "absorbed_fraction": self.absorbed_fraction,
        }

    def write_histogram(self, path, bins=50):
        counts, edges = np.histogram(self.times, bins=bins)
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t_lo", "t_hi", "count"])
            for lo, hi, c in zip(edges[:-1], edges[1:], counts):
                wr.writerow([repr(float(lo)), repr(float(hi)), int(c)])


# -- random numbers ---------------------------------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@numba.njit(cache=True, inline="always")
def _splitmix(x):
    z = x + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@numba.njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@numba.njit(cache=True)
def _seed_state(seed, index, state):
    x = _splitmix(np.uint64(seed)) ^ _splitmix(np.uint64(index) * _GOLDEN)
    for j in range(4):
        x = x + _GOLDEN
        state[j] = _splitmix(x)


@numba.njit(cache=True, inline="always")
def _next(s):
    result = _rotl(s[1] * np.uint64(5), 7) * np.uint64(9)
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@numba.njit(cache=True, inline="always")
def _uniform(s):
    return float(_next(s) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@numba.njit(cache=True, inline="always")
def _normal_pair(s):
    while True:
        u = 2.0 * _uniform(s) - 1.0
        v = 2.0 * _uniform(s) - 1.0
        r2 = u * u + v * v
        if 0.0 < r2 < 1.0:
            f = math.sqrt(-2.0 * math.log(r2) / r2)
            return u * f, v * f


# -- geometry kernels -------------------------------------------------------


@numba.njit(cache=True)
def _segment(x, y, center, angles):
    phi = math.atan2(y - center[1], x - center[0])
    m = angles.size
    if phi < angles[0]:
        phi += 2.0 * math.pi
    k = np.searchsorted(angles, phi, side="right") - 1
    if k < 0:
        k = m - 1
    return k


@numba.njit(cache=True)
def _in_head(x, y, is_disk, center, verts, angles):
    if is_disk:
        return x * x + y * y < 1.0
    k = _segment(x, y, center, angles)
    k1 = (k + 1) % verts.shape[0]
    ex = verts[k1, 0] - verts[k, 0]
    ey = verts[k1, 1] - verts[k, 1]
    return ex * (y - verts[k, 1]) - ey * (x - verts[k, 0]) > 0.0


@numba.njit(cache=True)
def _reflect_head(x, y, is_disk, center, verts, angles):
    if is_disk:
        r = math.sqrt(x * x + y * y)
        f = (2.0 - r) / r
        return x * f, y * f
    k = _segment(x, y, center, angles)
    k1 = (k + 1) % verts.shape[0]
    ex = verts[k1, 0] - verts[k, 0]
    ey = verts[k1, 1] - verts[k, 1]
    ln = math.sqrt(ex * ex + ey * ey)
    nx, ny = ey / ln, -ex / ln
    d = (x - verts[k, 0]) * nx + (y - verts[k, 1]) * ny
    return x - 2.0 * d * nx, y - 2.0 * d * ny


@numba.njit(cache=True, inline="always")
def _local(x, y, mid, axis, k):
    dx = x - mid[k, 0]
    dy = y - mid[k, 1]
    return dx * axis[k, 0] + dy * axis[k, 1], -dx * axis[k, 1] + dy * axis[k, 0]


@numba.njit(cache=True, inline="always")
def _fold(b, h):
    # repeated specular reflection between the walls b = -h and b = h
    u = (b + h) % (4.0 * h)
    if u > 2.0 * h:
        u = 4.0 * h - u
    return u - h


@numba.njit(cache=True)
def _which_neck(x, y, mid, axis, hw, length):
    for k in range(mid.shape[0]):
        a, b = _local(x, y, mid, axis, k)
        if a >= -hw[k] and a < length[k] and abs(b) < hw[k]:
            return k
    return -1


@numba.njit(cache=True, fastmath=True)
def _walk(x, y, dt, budget, mode, neck, state, is_disk, center, verts, angles, r_fast, mid, axis, hw, length):
    """One walker; returns ``(steps, status)``."""
    sig = math.sqrt(2.0 * dt)
    r_fast2 = r_fast * r_fast
    cur = _which_neck(x, y, mid, axis, hw, length)
    steps = 0
    while steps < budget:
        g1, g2 = _normal_pair(state)
        qx = x + sig * g1
        qy = y + sig * g2
        steps += 1
        dxc = qx - center[0]
        dyc = qy - center[1]
        if cur < 0 and dxc * dxc + dyc * dyc < r_fast2:
            if mode == _CONFINED:
                return steps, WINDOW_EXIT
            x, y = qx, qy
            continue

        k = cur if cur >= 0 else _which_neck(qx, qy, mid, axis, hw, length)
        ap = -1.0
        if k >= 0:
            ap, bp = _local(x, y, mid, axis, k)
            aq, bq = _local(qx, qy, mid, axis, k)
            h = hw[k]
            L = length[k]
            moved = False
            if ap < 0.0 <= aq:
                # crossing the chord line: only the window lets walkers through
                bc = bp + (bq - bp) * (-ap) / (aq - ap)
                if abs(bc) >= h:
                    aq = -aq
                    moved = True
                elif abs(bq) >= h:
                    bq = _fold(bq, h)
                    moved = True
            elif ap >= 0.0 and abs(bq) >= h:
                # side wall, unless the path leaves through the window first
                aw = ap + (aq - ap) * (math.copysign(h, bq) - bp) / (bq - bp)
                if aw >= 0.0:
                    bq = _fold(bq, h)
                    moved = True
            if moved:
                qx = mid[k, 0] + aq * axis[k, 0] - bq * axis[k, 1]
                qy = mid[k, 1] + aq * axis[k, 1] + bq * axis[k, 0]
            if aq >= L:
                return steps, ABSORBED
            if ap >= 0.0 and aq >= 0.0 and abs(bq) < h:
                if _uniform(state) < math.exp(-(L - ap) * (L - aq) / dt):
                    return steps, ABSORBED
                # a confined walker also leaves through the window between steps
                if mode == _CONFINED and _uniform(state) < math.exp(-ap * aq / dt):
                    return steps, WINDOW_EXIT

        nq = _which_neck(qx, qy, mid, axis, hw, length)
        if nq < 0 and not _in_head(qx, qy, is_disk, center, verts, angles):
            if k >= 0 and ap >= 0.0:
                continue  # left a neck sideways through a corner: stay put
            qx, qy = _reflect_head(qx, qy, is_disk, center, verts, angles)
            nq = _which_neck(qx, qy, mid, axis, hw, length)
            if nq < 0 and not _in_head(qx, qy, is_disk, center, verts, angles):
                continue  # rejected step: stay put
        if mode == _CONFINED:
            if nq != neck:
                return steps, WINDOW_EXIT
            aq, bq = _local(qx, qy, mid, axis, neck)
            if aq < 0.0:
                return steps, WINDOW_EXIT
        x, y = qx, qy
        cur = nq
    return steps, BUDGET


@numba.njit(cache=True, parallel=True)
def _run(x0, y0, dt, n, seed, budget, mode, neck, is_disk, center, verts, angles, r_fast, mid, axis, hw, length):
    steps = np.empty(n, dtype=np.int64)
    status = np.empty(n, dtype=np.int8)
    for i in numba.prange(n):
        state = np.empty(4, dtype=np.uint64)
        _seed_state(seed, i, state)
        s, st = _walk(x0, y0, dt, budget, mode, neck, state, is_disk, center, verts, angles, r_fast, mid, axis, hw, length)
        steps[i] = s
        status[i] = st
    return steps, status


def _fast_radius(geom):
    # inside this disk about the center no neck box is reachable in one step
    reach = [max(0.0, (m - geom.center) @ ax - h) for m, ax, h in zip(geom.mid, geom.axis, geom.half_width)]
    return max(0.0, min(geom.inner_radius, min(reach)))


def _expected_time(spec):
    from .asymptotics import solve_asymptotic

    try:
        c = spec.head.centroid() if spec.head.kind != "unit-disk" else np.zeros(2)
        return float(solve_asymptotic(spec).u(c))
    except Exception:
        return float(spec.head.area * spec.lengths.max() / (2.0 * spec.eps.min()))


def _launch(spec, geom, x0, dt, n_walkers, seed, mode=_FULL, neck=-1, budget=None):
    if budget is None:
        budget = int(math.ceil(_BUDGET_FACTOR * _expected_time(spec) / dt))
    args = geom._args()
    r_fast = _fast_radius(geom)
    return _run(
        float(x0[0]), float(x0[1]), float(dt), int(n_walkers), int(seed), int(budget),
        mode, int(neck), args[0], args[1], args[2], args[3], r_fast, *args[5:],
    )


def _check_inputs(spec, x0, dt, n_walkers, geom):
    if dt is None:
        dt = default_dt(spec)
    if not dt > 0 or dt > spec.eps.min() ** 2 / 4.0 * (1 + 1e-12):
        raise ValueError("dt must satisfy 0 < dt <= (min epsilon)^2 / 4")
    if n_walkers < _MIN_WALKERS:
        raise ValueError(f"need at least {_MIN_WALKERS} walkers")
    if not bool(geom.contains(np.asarray(x0, dtype=float))[0]):
        raise ValueError("start point is not inside the composite domain")
    return dt


def simulate(spec, x0=(0.0, 0.0), dt=None, n_walkers=20000, seed=0, geometry=None):
    """Estimate the MFPT from ``x0`` by simulating reflected Brownian motion.

    Parameters
    ----------
    spec : ProblemSpec
    x0 : array_like
        Start point anywhere in the head or a neck.
    dt : float, optional
        Time step; defaults to ``min(min(eps)^2 / 4, 1e-4)``.
    n_walkers : int
    seed : int
        Walker ``i`` draws from a stream keyed by ``(seed, i)``.
    geometry : CompositeGeometry, optional
        Prebuilt geometry to reuse across calls.

    Returns
    -------
    WalkerStats
        Mean and standard error over absorbed walkers. Walkers that exhaust
        the step budget (ten times the expected step count) are excluded and
        show up in ``absorbed_fraction``.
    """
    require_valid(spec)
    geom = geometry or CompositeGeometry.from_spec(spec)
    dt = _check_inputs(spec, x0, dt, n_walkers, geom)
    steps, status = _launch(spec, geom, x0, dt, n_walkers, seed)
    done = status == ABSORBED
    frac = float(done.mean())
    if frac < 0.999:
        warnings.warn(f"{int((~done).sum())} walkers exceeded the step budget", BudgetWarning, stacklevel=2)
    times = steps[done] * dt
    if times.size < 2:
        raise InsufficientWalkersError("too few walkers were absorbed")
    return WalkerStats(
        float(times.mean()),
        float(times.std(ddof=1) / math.sqrt(times.size)),
        int(n_walkers),
        float(dt),
        int(seed),
        frac,
        times,
    )


@dataclass
class NeckProfile:
    """Simulated MFPT along a neck axis and its quadratic fit.

    ``x`` is the distance from the window chord; the fit is
    ``u = alpha (L - x)^2 + beta (L - x)`` and ``C_fit`` is its value at ``x = 0``.
    """

    neck: int
    x: np.ndarray
    u: np.ndarray
    stderr: np.ndarray
    alpha: float
    beta: float
    C_fit: float
    C_window: float
    C_stderr: float
    rms: float

    def to_record(self):
        return {
            "neck": self.neck,
            "x": self.x.tolist(),
            "u": self.u.tolist(),
            "stderr": self.stderr.tolist(),
            "alpha": self.alpha,
            "beta": self.beta,
            "C_fit": self.C_fit,
            "C_window": self.C_window,
            "C_stderr": self.C_stderr,
            "rms": self.rms,
        }


def neck_profile_check(spec, i, n_walkers=2000, seed=0, dt=None, n_points=7, max_rel_stderr=0.05, confined_factor=50):
    """Check the quadratic MFPT profile along neck ``i``.

    A walker starting on the neck axis either reaches the absorbing end or
    returns through the window first. By the strong Markov property
    ``u(x) = E[tau] + P_window * u(window)``, where ``tau`` is the exit time
    from the neck alone. Both ``E[tau]`` and ``P_window`` come from walkers
    confined to the neck (cheap, low variance); ``u(window)`` comes from full
    walkers started at the window center. Confined walks are short, so each
    start point uses ``confined_factor * n_walkers`` of them; otherwise the
    binomial noise in ``P_window`` hides the curvature. The profile is then
    fitted by least squares.

    Raises
    ------
    InsufficientWalkersError
        If the window estimate has relative standard error above
        ``max_rel_stderr``.
    """
    require_valid(spec)
    geom = CompositeGeometry.from_spec(spec)
    if not 0 <= i < spec.n:
        raise IndexError(f"neck index {i} out of range for {spec.n} necks")
    L = float(spec.lengths[i])
    window = geom.neck_point(i, 0.0)
    full = simulate(spec, window, dt, n_walkers, seed, geometry=geom)
    if full.stderr > max_rel_stderr * full.mean_fpt:
        raise InsufficientWalkersError(
            f"window MFPT stderr {full.stderr:.3g} exceeds {max_rel_stderr:.0%} of the mean"
        )
    dt = full.dt
    xs = L * np.arange(1, n_points) / n_points
    u = [full.mean_fpt]
    se = [full.stderr]
    for k, x in enumerate(xs):
        steps, status = _launch(
            spec, geom, geom.neck_point(i, x), dt, confined_factor * n_walkers, seed + 7919 * (k + 1), _CONFINED, i,
            budget=int(math.ceil(_BUDGET_FACTOR * L * L / dt)) + 1,
        )
        tau = steps * dt
        p = float(np.mean(status == WINDOW_EXIT))
        u.append(tau.mean() + p * full.mean_fpt)
        se.append(math.hypot(tau.std(ddof=1) / math.sqrt(tau.size), p * full.stderr))
    x = np.concatenate([[0.0], xs, [L]])
    u = np.array(u + [0.0])
    se = np.array(se + [0.0])
    y = L - x
    A = np.stack([y * y, y], axis=1)
    (alpha, beta), *_ = np.linalg.lstsq(A, u, rcond=None)
    rms = float(np.sqrt(np.mean((A @ [alpha, beta] - u) ** 2)))
    return NeckProfile(
        i, x, u, se, float(alpha), float(beta), float(alpha * L * L + beta * L),
        full.mean_fpt, full.stderr, rms,
    )
