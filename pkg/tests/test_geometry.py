import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcflab.errors import GeometryError, NonFinite, NonPositiveH, NotClosed
from mcflab.geometry import (CurvatureField, Profile, ProfileKind, capsule, compute_curvatures,
                             cone_body, ellipsoid, gauss_integrals, paraboloid_body,
                             pinching_constant, sphere, sphere_area, trace_free_norm,
                             uniform_polar)
from mcflab.flow.existence import reflect_truncate

import oracles


def test_sphere_radius_two_is_umbilic():
    cf = compute_curvatures(sphere(2, 2.0, 101))
    np.testing.assert_allclose(cf.kappa_ax, 0.5, atol=1e-12)
    np.testing.assert_allclose(cf.kappa_rot, 0.5, atol=1e-12)
    np.testing.assert_allclose(cf.H, 1.0, atol=1e-12)
    np.testing.assert_allclose(cf.normAring2, 0.0, atol=1e-24)
    np.testing.assert_allclose(cf.ratio, 0.5, atol=1e-12)


def test_cylinder_segment_has_a_flat_direction():
    x = np.linspace(0.0, 2.0, 41)
    cf = compute_curvatures(Profile(ProfileKind.AXIS, 2, x, np.ones_like(x)))
    np.testing.assert_allclose(cf.kappa_min, 0.0, atol=1e-12)
    np.testing.assert_allclose(cf.kappa_max, 1.0, atol=1e-12)
    np.testing.assert_allclose(cf.H, 1.0, atol=1e-12)
    np.testing.assert_allclose(cf.ratio, 0.0, atol=1e-12)


def test_paraboloid_graph_curvatures_at_unit_radius():
    # u = rho^2/2 at rho = 1 is the axis point x = 1/2
    body = paraboloid_body(2, x_max=2.0, nodes=2001)
    cf = compute_curvatures(body.profile)
    i = int(np.argmin(np.abs(body.profile.param - 0.5)))
    assert cf.kappa_ax[i] == pytest.approx(2 ** -1.5, abs=1e-6)
    assert cf.kappa_rot[i] == pytest.approx(2 ** -0.5, abs=1e-6)


def test_trace_free_norm_arithmetic():
    cf = CurvatureField(2, [0.0], [0.0], [1.0], [1.0], [2.0])
    assert cf.normA2[0] == 5.0
    assert cf.H[0] == 3.0
    assert cf.normAring2[0] == pytest.approx(0.5, rel=1e-15)
    assert trace_free_norm(cf)[0] == pytest.approx(math.sqrt(0.5), rel=1e-15)


@pytest.mark.parametrize("R", [0.3, 1.0, 7.5])
def test_trace_free_norm_vanishes_on_spheres(R):
    assert np.max(trace_free_norm(compute_curvatures(sphere(3, R, 81)))) < 1e-9 / R


def test_trace_free_norm_vanishes_at_the_bowl_tip(bowl):
    assert trace_free_norm(bowl.field)[0] == pytest.approx(0.0, abs=1e-12)


def test_gauss_integrals_unit_sphere():
    K, H2 = gauss_integrals(sphere(2, 1.0, 401))
    assert K == pytest.approx(4 * math.pi, rel=1e-6)
    assert H2 == pytest.approx(16 * math.pi, rel=1e-6)


def test_gauss_integrals_ellipsoid_match_quadrature():
    K_ref, H2_ref = oracles.ellipsoid_integrals(1.0, 1.5)
    assert K_ref == pytest.approx(4 * math.pi, rel=1e-10)
    K, H2 = gauss_integrals(ellipsoid(2, 1.0, 1.5, 401))
    assert K == pytest.approx(K_ref, rel=1e-3)
    assert H2 == pytest.approx(H2_ref, rel=1e-3)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_gauss_integral_is_sphere_area(n):
    K, _ = gauss_integrals(ellipsoid(n, 1.0, 1.3, 401))
    assert K == pytest.approx(sphere_area(n), rel=1e-3)


def test_gauss_integrals_need_closed_profile():
    with pytest.raises(NotClosed):
        gauss_integrals(paraboloid_body(2).profile)


def test_pinching_constants():
    assert pinching_constant(compute_curvatures(sphere(2, 1.0, 51))) == pytest.approx(0.5)
    x = np.linspace(0.0, 1.0, 21)
    cyl = compute_curvatures(Profile(ProfileKind.AXIS, 2, x, np.ones_like(x)))
    assert pinching_constant(cyl) == pytest.approx(0.0, abs=1e-12)
    ref = oracles.ellipsoid_min_ratio(1.0, 1.5)
    cf = compute_curvatures(ellipsoid(2, 1.0, 1.5, 401))
    assert pinching_constant(cf) == pytest.approx(ref, abs=1e-5)
    assert pinching_constant(cf, "kappa") == pytest.approx(
        min(oracles.ellipsoid_curvatures(1.0, 1.5, np.linspace(0, math.pi, 40001))[0]
            / oracles.ellipsoid_curvatures(1.0, 1.5, np.linspace(0, math.pi, 40001))[1]), abs=1e-5)


def test_pinching_constant_rejects_nonpositive_H():
    cf = CurvatureField(2, [0.0, 1.0], [0.0, 1.0], [1.0, 1.0], [1.0, -1.0], [0.5, -0.5])
    with pytest.raises(NonPositiveH):
        pinching_constant(cf)


def _ellipsoid_error(nodes, a=1.0, c=1.5):
    cf = compute_curvatures(ellipsoid(2, a, c, nodes))
    phi = np.arctan2(cf.r / a, cf.z / c)
    k_ax, k_rot = oracles.ellipsoid_curvatures(a, c, phi)
    return max(np.max(np.abs(cf.kappa_ax - k_ax)), np.max(np.abs(cf.kappa_rot - k_rot)))


def test_curvature_refinement_is_second_order():
    e = [_ellipsoid_error(N) for N in (101, 201, 401)]
    for coarse, fine in zip(e, e[1:]):
        assert 3.5 <= coarse / fine <= 4.5


def test_capsule_curvatures_are_convex_up_to_the_junction_jump():
    # the meridian curvature jumps where the caps meet the cylinder; the
    # centred stencil straddling the jump undershoots by O(h^2)
    for N in (201, 401):
        p = capsule(2, 1.0, 1.0, N)
        cf = compute_curvatures(p)
        assert np.min(cf.kappa_min) > -p.spacing**2


def test_profile_validation():
    th = np.linspace(0, math.pi, 11)
    with pytest.raises(NonFinite):
        Profile(ProfileKind.POLAR, 2, th, np.full(11, np.nan))
    with pytest.raises(GeometryError):
        Profile(ProfileKind.POLAR, 2, th, -np.ones(11))
    with pytest.raises(GeometryError):
        Profile(ProfileKind.POLAR, 0, th, np.ones(11))
    with pytest.raises(GeometryError):
        compute_curvatures(sphere(2, 1.0, 4))


def test_curvature_csv_round_trip(tmp_path):
    cf = compute_curvatures(ellipsoid(2, 1.0, 1.5, 41))
    path = tmp_path / "field.csv"
    cf.to_csv(path)
    back = CurvatureField.from_csv(path, 2)
    np.testing.assert_array_equal(back.H, cf.H)
    np.testing.assert_array_equal(back.kappa_min, cf.kappa_min)
    header = path.read_text().splitlines()[0]
    assert header == "node_index,param,axis_coord,radius,kappa1,kappan,H,normAring,ratio"


def test_reflect_truncate_paraboloid_geometry():
    body = reflect_truncate(paraboloid_body(2, x_max=20.0), 2.0, 801)
    z, r = body.profile.positions()
    assert z.max() - z.min() == pytest.approx(4.0, abs=1e-9)
    assert r.max() == pytest.approx(2.0, abs=1e-9)


def test_reflect_truncate_cone_is_bicone():
    body = reflect_truncate(cone_body(2, 1.0, x_max=5.0), 1.0, 801)
    z, r = body.profile.positions()
    k = int(np.argmax(r))
    assert z[k] == pytest.approx(1.0, abs=1e-12)
    assert r[k] == pytest.approx(1.0, abs=1e-12)


def test_inradius_matches_inscribed_circle_search():
    body = reflect_truncate(paraboloid_body(2, x_max=20.0), 2.0, 801)
    zz = np.linspace(0.0, 4.0, 4001)
    ref = oracles.inscribed_circle(zz, np.sqrt(2 * np.minimum(zz, 4 - zz)), grid=81)
    assert ref == pytest.approx(math.sqrt(3), abs=2e-4)
    assert body.inradius() == pytest.approx(ref, abs=2e-4)


def test_containment_is_consistent_with_the_profile():
    body = reflect_truncate(paraboloid_body(2, x_max=20.0), 2.0, 401)
    z, r = body.profile.positions()
    assert np.all(body.contains(z, r))
    assert not np.any(body.contains(z + 1.01 * (z - 2.0), 1.01 * r + 1e-3))
    assert body.contains(2.0, 0.0) and not body.contains(5.0, 0.0)


def test_unbounded_body_has_infinite_inradius():
    assert paraboloid_body(2).inradius() == math.inf


@settings(max_examples=30, deadline=None)
@given(a=st.floats(0.5, 2.0), c=st.floats(0.5, 2.0), n=st.integers(1, 4))
def test_curvature_identities(a, c, n):
    cf = compute_curvatures(ellipsoid(n, a, c, 101))
    lhs = cf.normAring2
    rhs = cf.normA2 - cf.H**2 / n
    assert np.all(np.abs(lhs - rhs) <= 1e-12 * np.maximum(cf.normA2, 1.0) + 1e-15) or n == 1
    assert np.all(cf.kappa_min <= cf.kappa_max)
    if n > 1:
        expect = np.where(cf.kappa_ax <= cf.kappa_rot,
                          cf.kappa_min + (n - 1) * cf.kappa_max,
                          cf.kappa_max + (n - 1) * cf.kappa_min)
        np.testing.assert_allclose(cf.H, expect, rtol=1e-14)


@settings(max_examples=25, deadline=None)
@given(R=st.floats(0.2, 5.0), n=st.integers(1, 5))
def test_sphere_curvature_scales_inversely(R, n):
    cf = compute_curvatures(uniform_polar(n, 61, lambda th: R + 0 * th))
    np.testing.assert_allclose(cf.H, n / R, rtol=1e-10)
