import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from narrowescape.geometry import (
    HeadDomain,
    NeckSpec,
    ProblemSpec,
    ValidationError,
    chord_distance,
    load_problem,
    problem_from_dict,
    problem_to_dict,
    require_valid,
    validate,
    window_normal,
    window_point,
)


def test_disk_area_and_perimeter():
    d = HeadDomain.unit_disk()
    assert d.area == pytest.approx(math.pi, rel=1e-14)
    assert d.perimeter == pytest.approx(2 * math.pi, rel=1e-14)


def test_ellipse_area_and_perimeter():
    e = HeadDomain.ellipse(2.0, 1.0)
    assert e.area == pytest.approx(2 * math.pi, rel=1e-12)
    # complete elliptic integral value of the 2:1 ellipse perimeter
    assert e.perimeter == pytest.approx(9.688448220547675, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(-1, 1))
def test_disk_window_point_is_on_circle(s, t):
    spec = ProblemSpec.disk([s], 0.01, 1.0)
    p = window_point(spec, 0, t)
    ang = s + 0.01 * t
    assert np.allclose(p, [math.cos(ang), math.sin(ang)], atol=1e-12)


@pytest.mark.parametrize("head", [HeadDomain.unit_disk(), HeadDomain.ellipse(2, 1), HeadDomain.star(0.2, 3)])
def test_window_ends_are_two_eps_apart_in_arc_length(head):
    spec = ProblemSpec(head, [NeckSpec(1.3, 0.03, 1.0)])
    th0 = head.theta_at(1.3 - 0.03)
    th1 = head.theta_at(1.3 + 0.03)
    assert head.arc_length(th1) - head.arc_length(th0) == pytest.approx(0.06, rel=1e-10)
    assert np.allclose(head.point(th0), window_point(spec, 0, -1.0), atol=1e-14)


def test_window_normal_on_disk_is_radial():
    spec = ProblemSpec.disk([0.4], 0.01, 1.0)
    assert np.allclose(window_normal(spec, 0), [math.cos(0.4), math.sin(0.4)], atol=1e-13)


def test_chord_distance_perpendicular():
    spec = ProblemSpec.disk([0, math.pi / 2], 0.01, [1, 2])
    assert chord_distance(spec, 0, 1) == pytest.approx(math.sqrt(2), rel=1e-13)


def test_window_point_rejects_bad_indices():
    spec = ProblemSpec.disk([0.0], 0.01, 1.0)
    with pytest.raises(IndexError):
        window_point(spec, 1, 0.0)
    with pytest.raises(ValueError):
        window_point(spec, 0, 1.5)


def test_validate_accepts_perpendicular_necks():
    rep = validate(ProblemSpec.disk([0, math.pi / 2], 0.01, [1, 2]))
    assert rep.ok and not rep.problems


def test_validate_rejects_overlap():
    rep = validate(ProblemSpec.disk([1.0, 1.0], 0.01, 1.0))
    assert not rep.ok
    assert any("overlap" in p for p in rep.problems)


def test_validate_rejects_thick_neck():
    rep = validate(ProblemSpec.disk([0.0], 0.5, 1.0))
    assert not rep.ok
    assert any("thinness" in p for p in rep.problems)


def test_validate_warns_on_moderately_thick_neck():
    rep = validate(ProblemSpec.disk([0.0], 0.15, 1.0))
    assert rep.ok and rep.warnings


def test_validate_rejects_poor_separation():
    rep = validate(ProblemSpec.disk([0.0, 0.1], 0.01, 1.0))
    assert not rep.ok
    assert any("separated" in p for p in rep.problems)


def test_validate_is_idempotent():
    spec = ProblemSpec.disk([0.0, 0.05], 0.05, 1.0)
    a, b = validate(spec), validate(spec)
    assert (a.ok, a.problems, a.warnings) == (b.ok, b.problems, b.warnings)


def test_require_valid_raises():
    with pytest.raises(ValidationError):
        require_valid(ProblemSpec.disk([0.0, 0.0], 0.01, 1.0))


def test_neck_spec_rejects_nonpositive():
    with pytest.raises(ValueError):
        NeckSpec(0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        NeckSpec(0.0, 0.01, -1.0)


def test_sampled_curve_matches_analytic_ellipse():
    th = 2 * np.pi * np.arange(512) / 512
    pts = np.stack([2 * np.cos(th), np.sin(th)], axis=1)
    head = HeadDomain.from_points(pts)
    assert head.area == pytest.approx(2 * math.pi, rel=1e-10)
    assert head.check() == []


def test_self_intersecting_curve_fails_check():
    th = 2 * np.pi * np.arange(512) / 512
    # limacon with an inner loop
    r = 0.5 + np.cos(th)
    head = HeadDomain.from_points(np.stack([r * np.cos(th), r * np.sin(th)], axis=1))
    assert head.check() != []


def test_figure_eight_has_no_area():
    th = 2 * np.pi * np.arange(512) / 512
    with pytest.raises(ValueError):
        HeadDomain.from_points(np.stack([np.sin(th), np.sin(th) * np.cos(th)], axis=1))


def test_contains_and_project():
    e = HeadDomain.ellipse(2, 1)
    inside = e.contains(np.array([[0.0, 0.0], [1.9, 0.0], [2.1, 0.0], [0.0, 1.01]]))
    assert list(inside) == [True, True, False, False]


def test_problem_round_trip(tmp_path):
    spec = ProblemSpec.disk([0.0, math.pi / 2], [0.01, 0.02], [1.0, 2.0])
    d = problem_to_dict(spec)
    back = problem_from_dict(d)
    assert np.allclose(back.eps, spec.eps) and np.allclose(back.lengths, spec.lengths)
    path = tmp_path / "p.json"
    import json

    path.write_text(json.dumps(d))
    again = load_problem(path)
    assert np.allclose(again.positions, spec.positions)


def test_problem_from_dict_ellipse_and_star():
    for head in ({"kind": "ellipse", "a": 2, "b": 1}, {"kind": "star", "amplitude": 0.2, "lobes": 3}):
        spec = problem_from_dict({"head": head, "necks": [{"angle_or_s": 0.5, "epsilon": 0.02, "length": 1}]})
        assert validate(spec).ok
