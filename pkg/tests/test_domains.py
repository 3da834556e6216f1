import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from orliczlab import (CoreCurve, CurveError, CuspPrototype, GridDomain, MushroomSpec,
                       ParameterError, PhiSpec, PsiFunction, ResolutionError, check_cigar,
                       make_ball, make_box, make_cusp, make_exhaustion, make_mushroom_domain)

PSI2 = PsiFunction(PhiSpec.power(2.0))


@pytest.mark.parametrize("n,sides,h,cells,measure", [
    (2, (1, 1), 0.25, 16, 1.0), (2, (2, 2), 0.5, 16, 4.0), (3, (1, 1, 1), 0.5, 8, 1.0)])
def test_box_counts(n, sides, h, cells, measure):
    d = make_box(n, [0.0] * n, sides, h)
    assert d.n_inside == cells and d.measure == pytest.approx(measure)


def test_box_rejects_coarse_h():
    with pytest.raises(ParameterError):
        make_box(2, (0, 0), (0.1, 1), 1.0)


def test_domain_is_immutable():
    d = make_box(2, (0, 0), (1, 1), 0.25)
    with pytest.raises(ValueError):
        d.mask[0, 0] = False


def test_disconnected_mask_rejected():
    mask = np.zeros((4, 4), dtype=bool)
    mask[0, 0] = mask[3, 3] = True
    with pytest.raises(ParameterError):
        GridDomain(mask, 0.1, (0, 0))


def test_ball_centre_cell():
    b = make_ball(2, (0.3, -0.2), 1.0, 0.02)
    idx, inside = b.locate([[0.3, -0.2]])
    assert inside[0]
    centre = b.origin + (idx[0] + 0.5) * b.h
    np.testing.assert_allclose(centre, [0.3, -0.2], atol=1e-12)
    assert b.measure == pytest.approx(np.pi, rel=0.02)


def test_cusp_membership():
    # cell centres at x' = 0, +-0.2, ... and x_n = 0.1, 0.3, 0.5, ...
    d = make_cusp(PSI2, 1.0, 0.2)
    _, inside = d.locate([[0.2, 0.5], [0.4, 0.5]])
    assert inside.tolist() == [True, False]


def test_cusp_mask_is_centre_rule():
    d = make_cusp(PSI2, 1.0, 0.05)
    x = d.mesh()
    expected = (x[1] <= 1.0) & (np.abs(x[0]) < np.where(x[1] <= 1, x[1] ** 2, x[1]))
    assert np.array_equal(d.mask, expected)


def test_cusp_measure():
    d = make_cusp(PSI2, 1.0, 1e-3)
    assert d.measure == pytest.approx(2.0 / 3.0, rel=0.05)


def test_cusp_too_coarse():
    with pytest.raises(ResolutionError):
        make_cusp(PSI2, 0.1, 1.0)


def test_exhaustion_nested_and_growing():
    doms = make_exhaustion(CuspPrototype(PSI2), (1, 2, 4), 1 / 16)
    measures = [d.measure for d in doms]
    assert measures == sorted(measures) and len(set(measures)) == 3
    for a, b in zip(doms, doms[1:]):
        assert not np.any(a.mask & ~b.mask)


def test_exhaustion_requires_increasing_scales():
    with pytest.raises(ParameterError):
        make_exhaustion(CuspPrototype(PSI2), (1, 1), 0.1)


def test_distance_transform_box():
    d = make_box(2, (0, 0), (2, 1), 1 / 32)
    dist = d.distance_transform()
    assert dist.max() == pytest.approx(0.5, abs=d.h)
    pt = d.distance_to_outside([[1.0, 0.5]])[0]
    assert pt == pytest.approx(0.5, abs=d.h)


def test_refine_preserves_measure():
    d = make_cusp(PSI2, 1.0, 1 / 16)
    r = d.refine()
    assert r.h == d.h / 2 and r.measure == pytest.approx(d.measure)


def test_pgm_round_trip():
    d = make_cusp(PSI2, 1.0, 1 / 8)
    back = GridDomain.from_pgm(d.to_pgm())
    assert np.array_equal(back.mask, d.mask)
    assert back.h == d.h
    np.testing.assert_array_equal(back.origin, d.origin)


def test_pgm_round_trip_3d():
    d = make_ball(3, (0, 0, 0), 1.0, 0.25)
    back = GridDomain.from_pgm(d.to_pgm())
    assert np.array_equal(back.mask, d.mask)


# -- mushrooms -------------------------------------------------------------------

def test_mushroom_component_measures():
    spec = MushroomSpec((0.25,), PhiSpec.power(2.0))
    box, parts = spec.component_measures()
    assert box == 25.0
    assert parts == [(0.25, 1.0 / 32.0)]


def test_mushroom_domain_measure():
    spec = MushroomSpec.dyadic(PhiSpec.power(2.0), 2, 3)
    h = 1 / 128
    d = make_mushroom_domain(spec, h)
    assert d.meta["dropped"] == []
    box, parts = spec.component_measures()
    expected = box + 2 * sum(c + k for c, k in parts)
    # one 2h-perimeter band per component
    slack = 2 * h * (4 * 5.0 + 2 * sum(4 * 2 * r + 2 * r for r in spec.radii))
    assert abs(d.measure - expected) <= slack


def test_mushroom_zero_attachments_is_box():
    spec = MushroomSpec((), PhiSpec.power(2.0))
    d = make_mushroom_domain(spec, 1 / 8)
    assert d.measure == pytest.approx(25.0)


def test_mushroom_overlap_rejected():
    with pytest.raises(ParameterError):
        MushroomSpec((0.25, 0.2), PhiSpec.power(2.0), attach_heights=(1.5, 1.7))


def test_mushroom_outside_wall_band_rejected():
    with pytest.raises(ParameterError, match="wall band"):
        MushroomSpec((0.25,), PhiSpec.power(2.0), attach_heights=(3.9,))


def test_mushroom_phi_above_identity_rejected():
    with pytest.raises(ParameterError, match="phi"):
        MushroomSpec((2.0,), PhiSpec.power(2.0))


def test_unresolvable_mushrooms_dropped():
    spec = MushroomSpec.dyadic(PhiSpec.power(2.0), 2, 4)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        d = make_mushroom_domain(spec, 1 / 32)
    assert d.meta["dropped"] and caught


# -- cigar checks ----------------------------------------------------------------

def test_cigar_ball_large_cj():
    b = make_ball(2, (0, 0), 1.0, 1 / 32)
    curve = CoreCurve.segment([-0.95, 0.0], [0.95, 0.0])
    assert check_cigar(b, curve, 1e3, "power:1").ok


def test_cigar_square_linear_psi():
    d = make_box(2, (0, 0), (4, 4), 1 / 16)
    curve = CoreCurve.segment([1.0, 2.0], [3.0, 2.0])
    assert check_cigar(d, curve, 1.0, "power:1").ok


def test_cigar_mushroom_neck_fails():
    spec = MushroomSpec((0.25,), PhiSpec.power(2.0))
    d = make_mushroom_domain(spec, 1 / 64)
    c = spec.attach_heights[0]
    curve = CoreCurve.segment([0.5, c], [-0.5, c], pieces=4)
    res = check_cigar(d, curve, 2.5, PsiFunction(spec.phi), samples=400)
    assert not res.ok
    assert -0.25 <= res.witness[0] <= 0.0
    assert abs(res.witness[1] - c) < 1 / 16


def test_cigar_curve_outside_raises():
    d = make_box(2, (0, 0), (1, 1), 1 / 16)
    with pytest.raises(CurveError):
        check_cigar(d, CoreCurve.segment([0.5, 0.5], [1.5, 0.5]), 1.0, "power:1")


@given(st.floats(min_value=0.5, max_value=50.0), st.floats(min_value=1.0, max_value=10.0))
def test_cigar_monotone_in_cj(cj, factor):
    spec = MushroomSpec((0.25,), PhiSpec.power(2.0))
    d = _mushroom_domain()
    c = spec.attach_heights[0]
    curve = CoreCurve.segment([0.5, c], [-0.5, c], pieces=4)
    psi = PsiFunction(spec.phi)
    if check_cigar(d, curve, cj, psi, samples=100).ok:
        assert check_cigar(d, curve, cj * factor, psi, samples=100).ok


_CACHE = {}


def _mushroom_domain():
    if "d" not in _CACHE:
        _CACHE["d"] = make_mushroom_domain(MushroomSpec((0.25,), PhiSpec.power(2.0)), 1 / 32)
    return _CACHE["d"]


def test_pickle_round_trip():
    import pickle

    d = make_cusp(PSI2, 1.0, 1 / 8)
    back = pickle.loads(pickle.dumps(d))
    assert np.array_equal(back.mask, d.mask) and back.meta["kind"] == "cusp"
