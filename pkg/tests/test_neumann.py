import math

import numpy as np
import pytest
from scipy.integrate import quad

from narrowescape.geometry import HeadDomain
from narrowescape.neumann import L1_INTEGRAL, CoincidentPointError, NeumannKernel, log_op_L1
from narrowescape.quadrature import kress_weights


def _kite():
    th = 2 * np.pi * np.arange(512) / 512
    return HeadDomain.from_points(np.stack([np.cos(th) + 0.65 * np.cos(2 * th) - 0.65, 1.5 * np.sin(th)], axis=1))


def _interior_points(head, rng, m):
    c = np.asarray(head.centroid())
    th = rng.uniform(0, 2 * np.pi, m)
    frac = rng.uniform(0.0, 0.7, m)
    return c + frac[:, None] * (head.point(th) - c)


# -- log operator -------------------------------------------------------------


def test_log_op_values():
    assert log_op_L1(0.0) == pytest.approx(-2.0, abs=1e-15)
    assert log_op_L1(1.0) == pytest.approx(2 * math.log(2) - 2, abs=1e-15)
    assert log_op_L1(-1.0) == pytest.approx(2 * math.log(2) - 2, abs=1e-15)


def test_log_op_integral():
    # split at the interior kink of the integrand
    val = sum(quad(lambda t: float(log_op_L1(t)), a, b, epsabs=1e-14, limit=200)[0] for a, b in ((-1, 0), (0, 1)))
    assert val == pytest.approx(4 * math.log(2) - 6, abs=1e-12)
    assert L1_INTEGRAL == pytest.approx(4 * math.log(2) - 6, abs=1e-15)


def test_log_op_rejects_outside():
    with pytest.raises(ValueError):
        log_op_L1(1.01)


# -- disk ----------------------------------------------------------------------


def test_disk_examples(disk_kernel):
    assert disk_kernel.boundary_neumann([0, 0], [1, 0]) == pytest.approx(0.0, abs=1e-15)
    assert disk_kernel.boundary_neumann([0.5, 0], [1, 0]) == pytest.approx(0.220636, abs=1e-6)
    assert disk_kernel.regular_part([0.3, 0.1], [0, 1]) == 0.0
    assert disk_kernel.g_function([0, 0]) == pytest.approx(0.25, abs=1e-15)
    assert disk_kernel.g_function([math.cos(1.0), math.sin(1.0)]) == pytest.approx(0.0, abs=1e-15)


def test_disk_exactness_random_pairs(disk_kernel, rng):
    x = _interior_points(disk_kernel.head, rng, 100)
    phi = rng.uniform(0, 2 * np.pi, 100)
    z = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    got = np.array([disk_kernel.boundary_neumann(a, b) for a, b in zip(x, z)])
    ref = -np.log(np.linalg.norm(x - z, axis=1)) / math.pi
    assert np.max(np.abs(got - ref)) < 1e-12


def test_coincident_points_rejected(disk_kernel):
    with pytest.raises(CoincidentPointError):
        disk_kernel.boundary_neumann([1.0, 0.0], [1.0, 0.0])


def _boundary_mean(kernel, theta_z, n=512):
    head = kernel.head
    s = 2 * np.pi * np.arange(n) / n
    x = head.point(s)
    z = head.point(np.array([theta_z]))[0]
    sp = head.speed(s)
    with np.errstate(divide="ignore"):
        smooth = np.log(np.sum((x - z) ** 2, axis=1) / (4 * np.sin((s - theta_z) / 2) ** 2)) / 2
    k = np.argmin(np.abs(np.angle(np.exp(1j * (s - theta_z)))))
    # continuous limit at the source: ln |z'|
    smooth[k] = math.log(head.speed(np.array([theta_z]))[0]) if abs(s[k] - theta_z) < 1e-14 else smooth[k]
    log_part = 0.5 * kress_weights(theta_z, n) @ sp + (2 * np.pi / n) * np.sum(smooth * sp)
    reg = kernel.regular_matrix_param(s, np.array([theta_z]))[:, 0]
    return -log_part / math.pi + (2 * np.pi / n) * np.sum(reg * sp)


def test_disk_boundary_mean_zero(disk_kernel):
    assert abs(_boundary_mean(disk_kernel, 0.3)) < 1e-8


@pytest.mark.parametrize("fixture", ["ellipse_kernel", "star_kernel"])
def test_numerical_boundary_mean_zero(fixture, request):
    kernel = request.getfixturevalue(fixture)
    for tz in (0.3, 2.0):
        assert abs(_boundary_mean(kernel, tz)) < 1e-6


# -- numerical heads -----------------------------------------------------------


@pytest.mark.parametrize("fixture", ["ellipse_kernel", "star_kernel"])
def test_regular_part_symmetry(fixture, request):
    kernel = request.getfixturevalue(fixture)
    th = np.array([0.2, 1.1, 2.9, 4.4])
    R = kernel.regular_matrix_param(th, th)
    assert np.max(np.abs(R - R.T)) < 1e-8
    z = kernel.head.point(th)
    N12 = kernel.boundary_neumann(z[0], z[1])
    N21 = kernel.boundary_neumann(z[1], z[0])
    assert N12 == pytest.approx(N21, abs=1e-8)


def test_ellipse_regular_part_self_convergence(ellipse_kernel):
    fine = NeumannKernel(ellipse_kernel.head, n=512)
    x, z = np.array([0.0, 0.0]), np.array([2.0, 0.0])
    assert ellipse_kernel.regular_part(x, z) == pytest.approx(fine.regular_part(x, z), abs=1e-6)


def test_kite_self_convergence():
    head = _kite()
    coarse, fine = NeumannKernel(head, n=256), NeumannKernel(head, n=512)
    z = head.point(np.array([0.7, 3.5]))
    x = np.array([[-0.2, 0.1], [0.2, -0.8]])
    assert np.max(np.abs(coarse.boundary_neumann(x, z) - fine.boundary_neumann(x, z))) < 1e-6
    assert np.max(np.abs(coarse.g_function(x) - fine.g_function(x))) < 1e-6


def test_regular_part_mean_value(star_kernel, rng):
    z = star_kernel.head.point(np.array([1.0]))
    x0 = np.array([0.1, -0.2])
    ang = 2 * np.pi * np.arange(64) / 64
    ring = x0 + 0.05 * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    centre = star_kernel.regular_part(x0, z)
    mean = np.mean(star_kernel.regular_part(ring, z))
    assert abs(float(np.squeeze(centre)) - mean) < 1e-5


def _inward_derivative(f, p, nu, h=1e-3):
    # second-order one-sided difference of f along the outward normal
    return (3 * f(p) - 4 * f(p - h * nu) + f(p - 2 * h * nu)) / (2 * h)


def test_regular_part_flux_residual(ellipse_kernel):
    head = ellipse_kernel.head
    tz = 0.4
    z = head.point(np.array([tz]))[0]
    th = np.linspace(0, 2 * np.pi, 24, endpoint=False) + 0.05
    th = th[np.abs(np.angle(np.exp(1j * (th - tz)))) > 0.5]
    worst = 0.0
    for t in th:
        p = head.point(np.array([t]))[0]
        nu = head.normal(np.array([t]))[0]
        dR = _inward_derivative(lambda q: np.atleast_1d(ellipse_kernel.regular_part(q, z))[0], p, nu)
        data = -1 / head.perimeter + np.dot(p - z, nu) / (math.pi * np.dot(p - z, p - z))
        worst = max(worst, abs(dR - data))
    assert worst < 1e-5


@pytest.mark.parametrize("fixture", ["ellipse_kernel", "star_kernel"])
def test_g_laplacian(fixture, request):
    kernel = request.getfixturevalue(fixture)
    h = 1e-3
    for x in ([0.1, 0.2], [-0.4, 0.05], [0.3, -0.3]):
        x = np.array(x)
        st = np.array([x, x + [h, 0], x - [h, 0], x + [0, h], x - [0, h]])
        g = kernel.g_function(st)
        lap = (g[1] + g[2] + g[3] + g[4] - 4 * g[0]) / h**2
        assert lap == pytest.approx(-1.0, abs=1e-4)


def test_g_boundary_normalization_and_flux(ellipse_kernel):
    head = ellipse_kernel.head
    n = 256
    s = 2 * np.pi * np.arange(n) / n
    mean = (2 * np.pi / n) * np.sum(ellipse_kernel.g_param(s) * head.speed(s))
    assert abs(mean) < 1e-6
    target = -head.area / head.perimeter
    for t in (0.0, 1.0, 2.5):
        p = head.point(np.array([t]))[0]
        nu = head.normal(np.array([t]))[0]
        assert _inward_derivative(lambda q: ellipse_kernel.g_function(q), p, nu) == pytest.approx(target, abs=1e-5)


def test_g_disk_agrees_with_numerical_mode():
    th = 2 * np.pi * np.arange(256) / 256
    circle = HeadDomain.from_points(np.stack([np.cos(th), np.sin(th)], axis=1))
    num = NeumannKernel(circle)
    x = np.array([[0.0, 0.0], [0.3, -0.5]])
    assert np.allclose(num.g_function(x), 0.25 * (1 - np.sum(x * x, axis=1)), atol=1e-10)
    assert abs(float(num.regular_part(x[1], [1.0, 0.0]))) < 1e-10


def test_dump_regular_csv(tmp_path, ellipse_kernel):
    path = tmp_path / "r.csv"
    ellipse_kernel.dump_regular_csv(path, m=4)
    lines = path.read_text().splitlines()
    assert lines[0] == "theta_x,theta_z,value"
    assert len(lines) == 17
