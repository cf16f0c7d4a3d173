import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from radonhough.families import (
    DomainError, ImplicitFamily, NotSolvableError, SolvableFamily, conchoid_of_sluse, from_name,
    hough_transform_of_point, hyperplane, line_angle, line_slope, projection, validate_solvability,
    weierstrass_cubic,
)

angles = st.floats(0.0, math.pi, allow_nan=False)
coords = st.floats(-1.0, 1.0, allow_nan=False)


@given(coords, coords, angles)
def test_line_angle_graph_is_a_sinusoid(x1, x2, theta):
    graph = hough_transform_of_point(line_angle(), (x1, x2))
    assert float(graph([theta])) == pytest.approx(x1 * math.cos(theta) + x2 * math.sin(theta), abs=1e-14)


def test_origin_graph_is_zero():
    graph = hough_transform_of_point(line_angle(), (0.0, 0.0))
    np.testing.assert_array_equal(graph(np.linspace(0, math.pi, 7)[:, None]), 0.0)


@pytest.mark.parametrize("a", [-2.0, -0.5, 0.0, 1.3])
def test_weierstrass_graph_of_point_is_a_line(a):
    graph = hough_transform_of_point(weierstrass_cubic(), (1.0, 2.0))
    assert float(graph([a])) == pytest.approx(3.0 - a)


def test_point_outside_domain():
    fam = SolvableFamily("boxed", 2, 2, line_angle().F, line_angle().grad_x_F, image_box=((-1, 1), (-1, 1)))
    with pytest.raises(DomainError):
        hough_transform_of_point(fam, (2.0, 0.0))


@given(coords, coords, angles, st.floats(-2, 2))
def test_duality(x1, x2, theta, gamma):
    # x lies on S(lam) exactly when f(x; lam) = 0, i.e. lam lies on the graph of x
    fam = line_angle()
    gamma_on = float(fam.F(np.array([x1, x2]), np.array([theta])))
    assert fam.f((x1, x2), (theta, gamma_on)) == pytest.approx(0.0, abs=1e-14)
    assert fam.f((x1, x2), (theta, gamma)) == pytest.approx(gamma - gamma_on, abs=1e-14)


@pytest.mark.parametrize("fam", [line_angle(), line_slope(), weierstrass_cubic(), hyperplane(3)])
def test_grad_lambda_last_component_is_one(fam):
    rng = np.random.default_rng(1)
    x = rng.uniform(-1, 1, fam.n)
    lam = rng.uniform(-1, 1, fam.t)
    g = fam.grad_lambda_f(x, lam)
    assert g[-1] == 1.0
    assert np.linalg.norm(g) >= 1.0


@pytest.mark.parametrize("fam", [line_angle(), line_slope(), weierstrass_cubic()])
def test_grad_x_matches_finite_differences(fam):
    rng = np.random.default_rng(2)
    for _ in range(10):
        x = rng.uniform(-1, 1, 2)
        lp = rng.uniform(-1, 1, 1)
        h = 1e-6
        fd = [(fam.F(x + e, lp) - fam.F(x - e, lp)) / (2 * h) for e in np.eye(2) * h]
        np.testing.assert_allclose(fam.grad_x_F(x, lp), fd, atol=1e-7)


@pytest.mark.parametrize("fam", [line_angle(), line_slope(), hyperplane(2)])
def test_linear_form_matches_F(fam):
    rng = np.random.default_rng(3)
    for _ in range(10):
        x = rng.uniform(-1, 1, fam.n)
        lp = rng.uniform(0.1, 1.0, fam.t - 1)
        omega, offset = fam.linear(lp)
        assert float(np.dot(omega, x) + offset) == pytest.approx(float(fam.F(x, lp)), abs=1e-14)


def test_projection_family_is_one_parameter():
    fam = projection(0.3)
    assert fam.t == 1
    x = np.array([0.2, -0.7])
    assert float(fam.F(x, np.zeros(0))) == pytest.approx(0.2 * math.cos(0.3) - 0.7 * math.sin(0.3))


@given(angles)
def test_line_angle_graph_branches_lie_on_the_line(theta):
    fam = line_angle()
    gamma = 0.3
    for branch in fam.graphs((theta, gamma)):
        pts = branch.points(np.linspace(-0.5, 0.5, 5))
        np.testing.assert_allclose(fam.f(pts, (theta, gamma)), 0.0, atol=1e-9 * max(1, np.abs(pts).max()))


def test_weierstrass_graph_branches_lie_on_the_curve():
    fam = weierstrass_cubic()
    lam = (-1.0, 1.0)
    for branch in fam.graphs(lam):
        lo, hi = branch.interval
        u = np.linspace(lo, min(hi, 2.0), 50)[1:-1]
        np.testing.assert_allclose(fam.f(branch.points(u), lam), 0.0, atol=1e-9)


@pytest.mark.parametrize("name", ["line-angle", "line-slope", "hyperplane", "weierstrass", "projection"])
def test_from_name(name):
    assert from_name(name).name == name


def test_from_name_unknown():
    with pytest.raises(ValueError, match="unknown family"):
        from_name("parabola")


def test_validate_accepts_builtins():
    for fam in (line_angle(), weierstrass_cubic()):
        assert validate_solvability(fam) is fam


def test_validate_converts_solvable_implicit_family():
    def f(x, lam):
        return 2.0 * lam[..., 1] - 2.0 * (x[..., 0] * np.cos(lam[..., 0]) + x[..., 1] * np.sin(lam[..., 0]))

    cand = ImplicitFamily("scaled-lines", 2, 2, f, ((-1, 1), (-1, 1)), ((0, math.pi), (-1, 1)))
    fam = validate_solvability(cand)
    x = np.array([0.3, -0.4])
    assert float(fam.F(x, np.array([0.7]))) == pytest.approx(0.3 * math.cos(0.7) - 0.4 * math.sin(0.7))


def test_conchoid_is_rejected():
    with pytest.raises(NotSolvableError, match="not solvable in any parameter"):
        validate_solvability(conchoid_of_sluse())


def test_rejection_names_a_solvable_parameter():
    # the Weierstrass cubic written with b first and a last: solvable only in lambda_1
    def f(x, lam):
        return lam[..., 0] - (x[..., 1] ** 2 - x[..., 0] ** 3 - lam[..., 1] * x[..., 0])

    cand = ImplicitFamily("cubic-swapped", 2, 2, f, ((-2, 2), (-2, 2)), ((-2, 2), (-2, 2)))
    with pytest.raises(NotSolvableError, match=r"lambda_\[1\]"):
        validate_solvability(cand)
