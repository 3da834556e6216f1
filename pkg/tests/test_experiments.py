from functools import partial

import numpy as np
import pytest
from hypothesis import given, strategies as st

from orliczlab import (CuspPrototype, MushroomSpec, ParameterError, PhiSpec, PsiFunction,
                       ScalarField, exhaustion_experiment, farfield_bump_counterexample,
                       luxemburg_norm, make_box, make_cusp, mushroom_counterexample,
                       poincare_ratio, poincare_sweep, sjohn_exponent_table)
from orliczlab.experiments import (PoincareConstantEstimator, dichotomy, mushroom_exponent,
                                   predicted_exponent, test_functions as catalogue)
from orliczlab.orlicz import OrliczH

SQ = make_box(2, (0, 0), (1, 1), 1 / 32)
SYM = make_box(2, (-1, -1), (2, 2), 1 / 16)


def test_ratio_linear_oracle():
    d = make_box(2, (0, 0), (1, 1), 1 / 128)
    r = poincare_ratio(d, "power:1", 1, lambda x: x[:, 0])
    assert r == pytest.approx(np.sqrt(1 / 12), abs=1e-2)


def test_ratio_constant_raises():
    with pytest.raises(ParameterError):
        poincare_ratio(SQ, "power:1", 1, lambda x: np.ones(len(x)))


@given(st.floats(min_value=0.1, max_value=100.0))
def test_ratio_homogeneous(c):
    u = ScalarField.from_function(SQ, lambda x: np.sin(3 * x[:, 0]) + x[:, 1] ** 2)
    assert poincare_ratio(SQ, "power:1", 1, u * c) == pytest.approx(
        poincare_ratio(SQ, "power:1", 1, u), rel=1e-6)


@given(st.floats(min_value=-50.0, max_value=50.0))
def test_ratio_shift_invariant(c):
    u = ScalarField.from_function(SQ, lambda x: x[:, 0] * x[:, 1])
    assert poincare_ratio(SQ, "power:1.3", 1, u + c) == pytest.approx(
        poincare_ratio(SQ, "power:1.3", 1, u), rel=1e-7)


def test_ratio_odd_on_symmetric_box():
    H = OrliczH("power:1", 1, 2)
    u = ScalarField.from_function(SYM, lambda x: x[:, 0])
    from orliczlab import gradient_magnitude, lp_norm
    expected = luxemburg_norm(u, H) / lp_norm(gradient_magnitude(u), 1)
    assert poincare_ratio(SYM, "power:1", 1, u) == pytest.approx(expected, rel=1e-12)


def test_sweep_refinement_trend():
    unit = partial(make_box, 2, (0, 0), (1, 1))
    run = poincare_sweep(unit, "power:1", 1, "standard", [1 / 16, 1 / 32])
    assert len(run.names) == 10
    assert 1 / 1.5 <= run.refinement_trend <= 1.5
    rep = run.to_report()
    assert rep.summary["max_ratio"] == run.max_ratio


def test_sweep_empty_family():
    with pytest.raises(ParameterError):
        poincare_sweep(partial(make_box, 2, (0, 0), (1, 1)), "power:1", 1, [], [1 / 8])
    with pytest.raises(ParameterError):
        poincare_sweep(partial(make_box, 2, (0, 0), (1, 1)), "power:1", 1, "standard", [])


def test_sweep_cusp_family_finite():
    psi = PsiFunction(PhiSpec.power(1.2))
    run = poincare_sweep(lambda h: make_cusp(psi, 1.0, h), "power:1.2", 1, "cusp", [1 / 32])
    assert len(run.ratios) == 6 and all(np.isfinite(run.ratios))


def test_unknown_family():
    with pytest.raises(ParameterError):
        catalogue("nope", 2)


def test_exhaustion_compact_support():
    proto = CuspPrototype(PsiFunction(PhiSpec.power(2.0)))
    rep = exhaustion_experiment(proto, (1, 2, 4, 8), "power:2", 1,
                                lambda x: np.maximum(0, 0.25 - (x ** 2).sum(1)), h=1 / 16)
    avg = np.abs(rep.column("average"))
    assert np.all(np.diff(avg) < 0)
    integral = avg * np.array(rep.column("measure"))
    np.testing.assert_allclose(integral, integral[0], rtol=1e-12)
    assert np.isfinite(rep.summary["average_bound_chain"])


def test_exhaustion_zero_field_skipped():
    proto = CuspPrototype(PsiFunction(PhiSpec.power(1.0)))
    rep = exhaustion_experiment(proto, (1, 2), "power:1", 1, lambda x: np.zeros(len(x)), h=1 / 8)
    assert all(np.isnan(rep.column("ratio"))) and len(rep.notes) == 2


@pytest.mark.parametrize("n,p,s,q", [(2, 1, 1, 2), (2, 1, 1.5, 4 / 3), (3, 1, 1, 1.5)])
def test_predicted_exponent(n, p, s, q):
    assert predicted_exponent(n, p, s) == pytest.approx(q)


def test_sjohn_table():
    rep = sjohn_exponent_table([1.0, 1.2, 1.4], [1.0, 1.5], 2)
    assert rep.summary["max_abs_error"] < 1e-3
    with pytest.raises(ParameterError):
        sjohn_exponent_table([2.0], [1.0], 2)


def test_mushroom_examples():
    rows = mushroom_counterexample(PhiSpec.power(2.0), 1, 2, 3)
    assert rows[0].F_rm == pytest.approx(8.0) and rows[0].lower_bound == pytest.approx(4.0)
    assert rows[1].F_rm == pytest.approx(32.0) and rows[1].lower_bound == pytest.approx(16.0)
    flat = mushroom_counterexample(PhiSpec.power(1.0), 1, 2, 12)
    np.testing.assert_allclose([r.lower_bound for r in flat], 0.25, rtol=1e-14)


def test_mushroom_from_spec():
    spec = MushroomSpec.dyadic(PhiSpec.power(2.0), 2, 5)
    rows = mushroom_counterexample(spec, 1, 2)
    assert [r.m for r in rows] == [2, 3, 4, 5]


@given(st.floats(min_value=1.0, max_value=1.9), st.floats(min_value=1.0, max_value=1.9),
       st.floats(min_value=0.5, max_value=8.0))
def test_gradient_normalisation(s, p, q):
    for row in mushroom_counterexample(PhiSpec.power(s), p, q, 10):
        assert row.grad_norm_p == pytest.approx(1.0, rel=1e-12)


@given(st.floats(min_value=1.01, max_value=1.9), st.floats(min_value=1.0, max_value=1.5))
def test_dichotomy_no_q_wins(s, p):
    n = 2
    crit = n * p / (n - p)
    for q in (0.5 * crit, 0.99 * crit, crit, 1.5 * crit):
        d = dichotomy(PhiSpec.power(s), n, p, q)
        assert d["mushroom_blowup"] or d["farfield_blowup"]
        if q >= crit:
            rows = mushroom_counterexample(PhiSpec.power(s), p, q, 8)
            factor = 2.0 ** -mushroom_exponent(PhiSpec.power(s), n, p, q)
            assert factor > 1
            lb = [r.lower_bound for r in rows]
            np.testing.assert_allclose(np.array(lb[1:]) / lb[:-1], factor, rtol=1e-9)


def test_dichotomy_linear_phi_bounded():
    d = dichotomy(PhiSpec.power(1.0), 2, 1, 2)
    assert not d["mushroom_blowup"] and not d["farfield_blowup"]


def test_mushroom_rejects_bad_arguments():
    with pytest.raises(ParameterError):
        mushroom_counterexample(PhiSpec.power(2.0), 1, 2, 1)
    with pytest.raises(ParameterError):
        mushroom_counterexample(PhiSpec.power(2.0), 1, 0.0, 5)


@pytest.mark.parametrize("n,p,q,expo", [(2, 1, 1, 1.0), (2, 1, 2, 0.0), (3, 2, 5, 0.5)])
def test_farfield_exponent(n, p, q, expo):
    rep = farfield_bump_counterexample(p, q, n, [1.0, 2.0, 4.0, 8.0])
    assert rep.summary["exponent"] == pytest.approx(expo)
    grad = rep.column("grad_norm_p")
    np.testing.assert_allclose(grad, grad[0], rtol=1e-12)
    lb = np.array(rep.column("lower_bound"))
    np.testing.assert_allclose(lb[1:] / lb[:-1], 2.0 ** expo, rtol=1e-12)


def test_farfield_gradient_closed_form():
    rep = farfield_bump_counterexample(1.0, 1.0, 2, [3.0])
    # two annuli of area 3 pi s**2 with |grad| = height / s
    assert rep.rows[0]["grad_norm_p"] == pytest.approx(2 * 3 * np.pi, rel=1e-13)


def test_farfield_requires_increasing():
    with pytest.raises(ParameterError):
        farfield_bump_counterexample(1, 1, 2, [2.0, 1.0])


def test_poincare_estimator():
    fields = [ScalarField.from_function(SQ, f) for _, f in catalogue("polynomial", 2)]
    est = PoincareConstantEstimator(phi="power:1", p=1.0).fit(fields)
    assert est.constant_ == est.ratios_.max()
    best = PoincareConstantEstimator(phi="power:1", p=1.0, shift="best").fit(fields[:2])
    assert np.all(best.ratios_ <= est.ratios_[:2] * (1 + 1e-6))
    assert est.score(fields[:1]) == pytest.approx(-est.ratios_[0])


def test_hypothesis_notes():
    from orliczlab.experiments import hypothesis_notes

    assert hypothesis_notes(PhiSpec.power(1.2), 2) == []
    loose = PhiSpec("power", s=1.2, c_phi=2.0)
    assert any("c_phi" in note for note in hypothesis_notes(loose, 2))
    assert any("alpha_star" in note for note in hypothesis_notes(PhiSpec.power(2.0), 2))
    run = poincare_sweep(partial(make_box, 2, (0, 0), (1, 1)), loose, 1, "polynomial", [1 / 8])
    assert run.to_report().notes
