import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import clipped_area
from radonhough.families import line_angle, line_slope, weierstrass_cubic
from radonhough.grid import Discretization
from radonhough.hough import (
    HoughCounter, UnsupportedFamilyError, accumulate_discrete, accumulate_pixel, column_sum_is_unit,
    detect_peaks, kernel, rescale, target_index,
)
from radonhough.images import DiscreteImage, PixelImage
from radonhough.radon import Sinogram


def angle_grid(d=(math.pi / 100, 0.1), gamma=1.5):
    return Discretization.covering((0.0, 0.0), d, [(0.0, math.pi - d[0] / 2), (-gamma, gamma)])


def test_kernel_example():
    disc = angle_grid()
    fam = line_angle()
    hits = [g for g in disc.centers(1) if kernel(fam, (1.0, 0.0), (0.0, g), disc)]
    assert hits == [pytest.approx(1.0)]


def test_kernel_half_open_bracket():
    disc = Discretization((0.0, 0.0), (1.0, 0.5), (0, -8), (3, 8))
    fam = line_slope()
    # F(x; w) = w x1 + x2, so in the column w = 0 the value is F = x2
    assert kernel(fam, (0.0, 0.25), (0.0, 0.0), disc) == 1     # lam_t - F = -d/2
    assert kernel(fam, (0.0, 0.25), (0.0, 0.5), disc) == 0     # lam_t - F = +d/2
    assert kernel(fam, (0.0, -0.25), (0.0, -0.5), disc) == 1
    assert kernel(fam, (0.0, -0.25), (0.0, 0.0), disc) == 0


@given(st.floats(-1, 1), st.floats(-1, 1), st.integers(0, 99))
def test_column_holds_exactly_one_vote(x1, x2, i):
    disc = angle_grid()
    prefix = (disc.centers(0)[i],)
    assert column_sum_is_unit(line_angle(), (x1, x2), prefix, disc) == 1


def test_column_outside_the_range_holds_none():
    disc = angle_grid(gamma=0.5)
    assert column_sum_is_unit(line_angle(), (1.0, 0.0), (0.0,), disc) == 0


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=30))
def test_target_index_agrees_with_the_bracket(values):
    disc = Discretization((0.0, 0.1), (1.0, 0.3), (0, -20), (0, 20))
    n = target_index(disc, np.array(values))
    diff = disc.lambda_star[1] + n * disc.d[1] - np.array(values)
    assert np.all(diff >= -disc.d[1] / 2) and np.all(diff < disc.d[1] / 2)


def test_target_index_exact_edges():
    disc = Discretization((0.0, 0.0), (1.0, 0.5), (0, -8), (0, 8))
    # F on the upper edge of cell 0 belongs to cell 0; on its lower edge to cell -1
    np.testing.assert_array_equal(target_index(disc, np.array([0.25, -0.25])), [0, -1])


def test_single_point_counter():
    disc = angle_grid()
    H = accumulate_discrete(line_angle(), DiscreteImage.unit([[0.3, -0.4]]), disc)
    np.testing.assert_array_equal(H.values.sum(axis=1), 1.0)
    assert H.values.sum() == disc.shape[0]
    assert H.skipped == 0
    assert max(p.value for p in detect_peaks(H, 5)) <= 1.0


def test_counter_matches_brute_force_kernel():
    disc = Discretization.covering((0.0, 0.0), (math.pi / 12, 0.25), [(0.0, math.pi), (-1.5, 1.5)])
    pts = np.random.default_rng(0).uniform(-1, 1, (4, 2))
    img = DiscreteImage(pts, np.array([1.0, 2.0, 0.5, 3.0]))
    H = accumulate_discrete(line_angle(), img, disc)
    brute = np.zeros(disc.shape)
    for idx, centre in disc.iter_cells():
        brute[disc.array_index(idx)] = sum(mu * kernel(line_angle(), x, centre, disc)
                                           for x, mu in zip(img.points, img.weights))
    np.testing.assert_array_equal(H.values, brute)


def test_counter_is_linear_in_the_weights():
    disc = angle_grid()
    p1, p2 = [0.2, 0.5], [-0.7, 0.1]
    both = accumulate_discrete(line_angle(), DiscreteImage([p1, p2], [2.0, 3.0]), disc).values
    one = accumulate_discrete(line_angle(), DiscreteImage.unit([p1]), disc).values
    two = accumulate_discrete(line_angle(), DiscreteImage.unit([p2]), disc).values
    np.testing.assert_array_equal(both, 2 * one + 3 * two)


def test_collinear_points_meet_in_one_cell():
    disc = Discretization((0.0, 0.0), (math.pi / 180, 0.02), (0, -75), (179, 75))
    theta, gamma = disc.cell_center((60, 20))
    t = np.linspace(-0.8, 0.8, 12)
    pts = np.stack([gamma * math.cos(theta) - t * math.sin(theta), gamma * math.sin(theta) + t * math.cos(theta)], 1)
    H = accumulate_discrete(line_angle(), DiscreteImage.unit(pts), disc)
    peak = detect_peaks(H, 1)[0]
    assert peak.index == (60, 20) and peak.value == 12


def test_skipped_votes_are_counted():
    disc = angle_grid(gamma=0.5)
    H = accumulate_discrete(line_angle(), DiscreteImage.unit([[1.0, 1.0]]), disc)
    assert H.skipped > 0
    assert H.values.sum() + H.skipped == disc.shape[0]


def test_family_grid_mismatch():
    with pytest.raises(ValueError):
        accumulate_discrete(line_angle(), DiscreteImage.unit([[0, 0]]), Discretization((0.0,), (1.0,), (0,), (2,)))


def test_strip_average_of_one_pixel():
    img = PixelImage(np.ones((1, 1)), (-1, 1, -1, 1))
    disc = Discretization((math.pi / 2, 0.0), (0.1, 0.01), (0, -20), (0, 20))
    H = accumulate_pixel(line_angle(), img, disc)
    assert rescale(H).values[0, 20] == pytest.approx(2.0, abs=1e-12)


@given(st.floats(0.0, math.pi), st.integers(-6, 6))
def test_exact_strip_cells_match_clipped_areas(theta, n):
    img = PixelImage(np.array([[1.0, 0.5], [0.0, 2.0]]), (-0.6, 0.6, -0.6, 0.6))
    disc = Discretization((theta, 0.0), (0.1, 0.13), (0, -6), (0, 6))
    H = accumulate_pixel(line_angle(), img, disc).values[0, n + 6]
    w = (math.cos(theta), math.sin(theta))
    lo, hi = n * 0.13 - 0.065, n * 0.13 + 0.065
    oracle = 0.0
    for (cx, cy), v in zip([(-0.3, 0.3), (0.3, 0.3), (-0.3, -0.3), (0.3, -0.3)], [1.0, 0.5, 0.0, 2.0]):
        oracle += v * (clipped_area(0.3, cx, cy, w, hi) - clipped_area(0.3, cx, cy, w, lo))
    assert H == pytest.approx(oracle, abs=1e-12)


def test_exact_strip_columns_keep_the_mass():
    img = PixelImage.on_square(np.random.default_rng(1).uniform(0, 1, (6, 6)))
    disc = Discretization.sinogram(20, 41)
    H = accumulate_pixel(line_angle(), img, disc, threads=2)
    np.testing.assert_allclose(H.values.sum(axis=1), img.mass(), rtol=1e-12)


def test_supersampling_approaches_exact_strip():
    # cumulative strip masses differ by at most the mass of sub-pixels cut by one edge
    img = PixelImage.on_square(np.random.default_rng(2).uniform(0, 1, (4, 4)))
    disc = Discretization.sinogram(15, 31)
    exact = accumulate_pixel(line_angle(), img, disc).values
    s = 16
    sub = accumulate_pixel(line_angle(), img, disc, "supersample", supersample=s).values
    th = disc.centers(0)
    a = img.half_side
    reach = 2 * (a / s) * (np.abs(np.cos(th)) + np.abs(np.sin(th)))
    bound = img.values.max() * 2 * math.sqrt(2) * 2 * a * img.width * reach + 1e-12
    gap = np.abs(np.cumsum(sub, axis=1) - np.cumsum(exact, axis=1)).max(axis=1)
    assert np.all(gap <= bound)


def test_zero_image_and_unsupported_family():
    img = PixelImage(np.zeros((2, 2)), (-1, 1, -1, 1))
    disc = Discretization.sinogram(5, 7)
    assert np.all(accumulate_pixel(line_angle(), img, disc).values == 0)
    wdisc = Discretization.covering((0.0, 0.0), (0.1, 0.1), [(-1, 1), (-1, 1)])
    with pytest.raises(UnsupportedFamilyError):
        accumulate_pixel(weierstrass_cubic(), PixelImage(np.ones((1, 1))), wdisc)
    H = accumulate_pixel(weierstrass_cubic(), PixelImage(np.ones((1, 1)), (-0.1, 0.1, -0.1, 0.1)), wdisc,
                         "supersample", supersample=4)
    assert H.values.sum() == pytest.approx(0.04 * wdisc.shape[0])


def test_rescale():
    disc = Discretization((0.0, 0.0), (1.0, 0.1), (0, 0), (1, 1))
    H = HoughCounter(disc, np.array([[3.0, 1.0], [0.0, 2.0]]))
    S = rescale(H)
    assert S.values[0, 0] == pytest.approx(30.0)
    assert S.provenance == "hough-rescaled"
    assert np.argmax(S.values) == np.argmax(H.values)
    with pytest.raises(ValueError):
        rescale(S)
    with pytest.raises(ValueError):
        rescale(HoughCounter(disc, H.values, rescaled=True))
    assert isinstance(S, Sinogram)


def test_detect_peaks_ties_and_suppression():
    disc = Discretization((0.0, 0.0), (1.0, 1.0), (0, 0), (4, 4))
    v = np.zeros((5, 5))
    v[1, 1] = v[3, 3] = 5.0
    v[1, 2] = 4.0
    peaks = detect_peaks(HoughCounter(disc, v), k=2, min_separation=1)
    assert [p.index for p in peaks] == [(1, 1), (3, 3)]
    peaks = detect_peaks(HoughCounter(disc, v), k=3, min_separation=0)
    assert [p.index for p in peaks] == [(1, 1), (3, 3), (1, 2)]
    with pytest.raises(ValueError):
        detect_peaks(HoughCounter(disc, v), k=0)


def cubic_points(a, b, n, rng):
    # points on x2^2 = x1^3 + a x1 + b with x1 chosen where the right side is positive
    x1 = []
    while len(x1) < n:
        u = rng.uniform(-2, 2)
        if u ** 3 + a * u + b > 0 and u ** 3 + a * u + b < 4:
            x1.append(u)
    x1 = np.array(x1)
    x2 = np.sqrt(x1 ** 3 + a * x1 + b) * rng.choice([-1.0, 1.0], size=n)
    return np.stack([x1, x2], axis=1)


def test_two_cubics_give_two_peaks():
    rng = np.random.default_rng(7)
    pts = np.vstack([cubic_points(-1.0, 1.0, 30, rng), cubic_points(0.5, -0.5, 30, rng)])
    disc = Discretization.covering((0.0, 0.0), (0.05, 0.05), [(-2, 2), (-2, 2)])
    peaks = detect_peaks(accumulate_discrete(weierstrass_cubic(), DiscreteImage.unit(pts), disc), 2, 2)
    found = sorted(p.center for p in peaks)
    np.testing.assert_allclose(found, [(-1.0, 1.0), (0.5, -0.5)], atol=1e-12)
