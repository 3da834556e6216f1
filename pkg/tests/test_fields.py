import numpy as np
import pytest
from hypothesis import given, strategies as st

from orliczlab import (OrliczH, ParameterError, PowerOrlicz, RegionError, ScalarField,
                       best_shift_norm, gradient_magnitude, integral_average, lp_norm,
                       luxemburg_norm, make_ball, make_box, modular)

SQ = make_box(2, (0, 0), (1, 1), 1 / 32)
BOX4 = make_box(2, (0, 0), (2, 2), 1 / 16)
SYM = make_box(2, (-1, -1), (2, 2), 1 / 16)
T2 = OrliczH("power:1", 1, 2)

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


def random_field(dom, seed):
    rng = np.random.default_rng(seed)
    return ScalarField(dom, rng.normal(size=dom.n_inside))


def test_field_is_read_only():
    u = ScalarField.constant(SQ, 1.0)
    with pytest.raises(ValueError):
        u.values[0] = 2.0


def test_field_rejects_wrong_length_and_nan():
    with pytest.raises(ParameterError):
        ScalarField(SQ, np.zeros(3))
    with pytest.raises(ParameterError):
        ScalarField(SQ, np.full(SQ.n_inside, np.nan))


def test_gradient_linear_and_constant():
    g = gradient_magnitude(ScalarField.from_function(SQ, lambda x: x[:, 0]))
    np.testing.assert_allclose(g.values, 1.0, rtol=1e-12)
    assert np.all(gradient_magnitude(ScalarField.constant(SQ, 3.0)).values == 0)


def test_gradient_quadratic():
    d = make_box(2, (0, 0), (1, 1), 0.01)
    u = ScalarField.from_function(d, lambda x: x[:, 0] ** 2)
    g = gradient_magnitude(u).on_grid()
    x = d.axis_centers(0)
    np.testing.assert_allclose(g[1:-1, 1:-1], 2 * x[1:-1, None] * np.ones((1, 98)), atol=1e-4)


def test_gradient_isolated_axis_flag():
    mask = np.zeros((3, 3), dtype=bool)
    mask[1, :] = True
    from orliczlab import GridDomain
    d = GridDomain(mask, 0.5, (0, 0))
    _, flags = gradient_magnitude(ScalarField.constant(d, 1.0), return_diagnostics=True)
    assert flags[:, 0].all() and not flags[:, 1].any()


def test_lp_norm_constants():
    assert lp_norm(ScalarField.constant(BOX4, 1.0), 2) == pytest.approx(2.0)
    assert lp_norm(ScalarField.constant(BOX4, 3.0), 3) == pytest.approx(3.0 * 4 ** (1 / 3))


def test_lp_norm_linear():
    d = make_box(2, (0, 0), (1, 1), 1e-3)
    assert lp_norm(ScalarField.from_function(d, lambda x: x[:, 0]), 1) == pytest.approx(0.5, abs=1e-3)


def test_modular_examples():
    one = ScalarField.constant(BOX4, 1.0)
    assert modular(one, T2, 2.0) == pytest.approx(1.0)
    assert modular(one, T2, 1e6) < 1e-6
    assert modular(ScalarField.constant(BOX4, 0.0), T2, 0.5) == 0.0


def test_luxemburg_examples():
    assert luxemburg_norm(ScalarField.constant(BOX4, 1.0), T2) == pytest.approx(2.0, rel=1e-7)
    H = OrliczH("powerlog:1.1,1", 1.5, 2)
    one = ScalarField.constant(make_box(2, (0, 0), (1, 1), 0.25), 1.0)
    assert luxemburg_norm(one, H) == pytest.approx(1.0 / H.F_inv(1.0), rel=1e-7)


def test_luxemburg_homogeneous():
    u = random_field(SQ, 0)
    H = OrliczH("power:1.3", 1, 2)
    assert luxemburg_norm(u * 3.0, H) == pytest.approx(3.0 * luxemburg_norm(u, H), rel=1e-6)


@given(seeds)
def test_luxemburg_equals_lebesgue_for_power(seed):
    u = random_field(SQ, seed)
    assert luxemburg_norm(u, T2) == pytest.approx(lp_norm(u, 2), rel=1e-6)
    assert luxemburg_norm(u, PowerOrlicz(3.0)) == pytest.approx(lp_norm(u, 3), rel=1e-6)


@given(seeds, seeds)
def test_triangle_inequality(s1, s2):
    u, v = random_field(SQ, s1), random_field(SQ, s2)
    assert luxemburg_norm(u + v, T2) <= (luxemburg_norm(u, T2) + luxemburg_norm(v, T2)) * (1 + 1e-7)


@given(seeds, st.floats(min_value=0.01, max_value=100.0))
def test_modular_decreasing(seed, lam):
    u = random_field(SQ, seed)
    H = OrliczH("power:1.2", 1, 2)
    assert modular(u, H, lam * 1.01) < modular(u, H, lam)


def test_integral_average_cases():
    assert integral_average(ScalarField.constant(SQ, 2.5)) == 2.5
    x0 = ScalarField.from_function(SQ, lambda x: x[:, 0])
    assert integral_average(x0) == pytest.approx(0.5, abs=SQ.h)
    odd = ScalarField.from_function(SYM, lambda x: x[:, 0] ** 3 - x[:, 1])
    assert abs(integral_average(odd)) < 1e-12
    assert abs(integral_average(odd, ((0.0, 0.0), 0.5))) < 1e-12
    with pytest.raises(RegionError):
        integral_average(x0, ((10.0, 10.0), 0.1))


def test_integral_average_over_subdomain():
    b = make_box(2, (0, 0), (1, 1), 0.25)
    sub = b.restrict(b.mesh()[0] < 0.5)
    u = ScalarField.from_function(b, lambda x: x[:, 0])
    assert integral_average(u, sub) == pytest.approx(0.25)


def test_best_shift_constant_and_odd():
    assert best_shift_norm(ScalarField.constant(SQ, 4.0), T2) == (4.0, 0.0)
    odd = ScalarField.from_function(SYM, lambda x: x[:, 0])
    b, _ = best_shift_norm(odd, T2)
    assert abs(b) < 1e-4


def test_best_shift_two_valued_sweep():
    A = 1.5
    u = ScalarField.from_function(SYM, lambda x: np.where(x[:, 0] < 0, -A, A))
    b, norm = best_shift_norm(u, T2)
    assert abs(b) < 1e-4
    assert norm == pytest.approx(A * SYM.measure ** 0.5, rel=1e-6)
    sweep = min(luxemburg_norm(u - c, T2) for c in np.linspace(-A, A, 1001))
    assert norm <= sweep * (1 + 1e-8)


def test_best_shift_non_convex_path():
    d = make_box(2, (0, 0), (1, 1), 1 / 8)
    u = ScalarField.from_function(d, lambda x: x[:, 0] ** 2 + x[:, 1])
    H = OrliczH("power:1.4", 1, 2)
    b, norm = best_shift_norm(u, H)
    assert norm <= luxemburg_norm(u - integral_average(u), H) * (1 + 1e-8)


@given(seeds)
def test_best_shift_below_mean_shift(seed):
    u = random_field(make_box(2, (0, 0), (1, 1), 1 / 8), seed)
    _, norm = best_shift_norm(u, T2)
    assert norm <= luxemburg_norm(u - integral_average(u), T2) * (1 + 1e-6)


def test_field_csv_and_restrict():
    d = make_box(2, (0, 0), (1, 1), 0.5)
    u = ScalarField.from_function(d, lambda x: x.sum(axis=1))
    lines = u.to_csv().splitlines()
    assert lines[0] == "cell,x0,x1,value" and len(lines) == 5
    sub = d.restrict(d.mesh()[1] < 0.5)
    assert u.restrict(sub).values.tolist() == [0.5, 1.0]


def test_ball_norm_closed_form():
    b = make_ball(2, (0, 0), 1.0, 1 / 64)
    H = OrliczH("power:1.2", 1, 2)
    norm = luxemburg_norm(ScalarField.constant(b, 1.0), H)
    assert norm * H.F_inv(1.0 / b.measure) == pytest.approx(1.0, abs=1e-6)
