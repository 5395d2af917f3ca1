import math

import numpy as np
import pytest

from mcflab.errors import NonConvex, StepTooLarge
from mcflab.soliton import (DIAGNOSTIC_COLUMNS, alpha_max, blow_down, decay_audit, derivative,
                            identity_residuals, shoot_expander, shoot_translator,
                            soliton_summary, verify_identities)

import oracles


def _at(s, rho):
    return int(round(rho / s.step))


@pytest.mark.parametrize("n", [2, 3, 5])
def test_translator_tip(n):
    s = shoot_translator(n, 5.0, 0.01)
    assert s.u[0] == 0.0 and s.du[0] == 0.0
    assert s.H[0] == pytest.approx(1.0, abs=1e-8)
    assert s.kappa_ax[0] == pytest.approx(1.0 / n, abs=1e-8)
    assert s.ratio[0] == pytest.approx(1.0 / n, abs=1e-8)


def test_translator_matches_rk4(bowl):
    ref = oracles.rk4_translator(2, 10.0, 1e-3)
    k = _at(bowl, 10.0)
    assert bowl.u[k] == pytest.approx(ref[0], rel=1e-6)
    assert bowl.du[k] == pytest.approx(ref[1], rel=1e-6)


@pytest.mark.parametrize("tip", [0.5, 1.0, 2.0])
def test_expander_tip_and_cone(tip):
    s = shoot_expander(2, tip, 10.0, 0.01)
    assert s.H[0] == pytest.approx(tip / 2, abs=1e-8)
    ref = oracles.rk4_expander(2, tip, 10.0, 1e-3)
    assert s.u[-1] == pytest.approx(ref[0], rel=1e-6)
    assert s.cone_slope == pytest.approx(ref[1], rel=1e-6)


def test_blow_down_shrinks_linearly(expander):
    rows = blow_down(expander)
    devs = [r["sup_deviation"] for r in rows]
    assert devs[0] > 0
    for a, b in zip(devs, devs[1:]):
        assert b == pytest.approx(a / 2, rel=1e-12)


def test_translator_moves_at_unit_speed(bowl):
    np.testing.assert_allclose(bowl.normV**2 + bowl.H**2, 1.0, atol=1e-8)


@pytest.mark.parametrize("which", ["bowl", "expander"])
def test_curvature_decreases_outward(which, request):
    s = request.getfixturevalue(which)
    assert np.all(np.diff(s.H) <= 1e-10)
    assert np.all(np.diff(alpha_max(s)) <= 0)
    assert s.max_residual < 1e-6


@pytest.mark.parametrize("which", ["bowl", "expander"])
def test_identities_hold_to_second_order(which, request):
    s = request.getfixturevalue(which)
    res = identity_residuals(s)
    assert res["gradient_field"][0] == pytest.approx(0.0, abs=1e-12)
    rep = verify_identities(s)
    for key in ("gradient_field", "hessian_meridian", "hessian_rotational"):
        assert rep["levels"][0][key] < 1e-3
        assert rep["refinement_factors"][key][0] >= 3.0


def test_translator_flattens_below_small_pinching(bowl):
    amax = alpha_max(bowl)
    flat = bowl.H < 0.1
    assert flat.any() and np.all(amax[flat] < 0.05)


@pytest.mark.parametrize("which", ["bowl", "expander"])
@pytest.mark.parametrize("alpha", [0.3, 0.1, 0.03])
def test_decay_inequalities_hold_where_pinched(which, alpha, request):
    s = request.getfixturevalue(which)
    rep = decay_audit(s, alpha)
    assert rep["pass"], rep["checks"]
    assert rep["pinched_nodes"] > 1


def test_crossings_move_outward_as_alpha_drops(bowl, expander):
    for s in (bowl, expander):
        cr = soliton_summary(s)["alpha_crossings"]
        d = [cr[str(a)] for a in (0.3, 0.1, 0.03)]
        assert all(v is not None for v in d)
        assert d[0] < d[1] < d[2]


def test_summary_fields(bowl, expander):
    sb = soliton_summary(bowl)
    assert sb["unit_speed_identity"] < 1e-8
    assert sb["H_non_increasing"]
    se = soliton_summary(expander)
    assert se["cone_slope"] == expander.cone_slope
    assert len(se["blow_down"]) == 4


def test_diagnostics_csv(tmp_path, expander):
    path = tmp_path / "diag.csv"
    expander.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(DIAGNOSTIC_COLUMNS)
    assert len(lines) == expander.size + 1


@pytest.mark.parametrize("deg,parity", [(0, 1), (2, 1), (4, 1), (1, -1), (3, -1)])
def test_derivative_is_exact_on_low_degree_polynomials(deg, parity):
    h = 0.1
    x = h * np.arange(40)
    expect = deg * x ** (deg - 1) if deg else 0 * x
    np.testing.assert_allclose(derivative(x**deg, h, parity), expect, atol=1e-9)


def test_errors():
    with pytest.raises(ValueError):
        shoot_translator(1)
    with pytest.raises(ValueError):
        shoot_expander(1)
    with pytest.raises(NonConvex):
        shoot_expander(2, 0.0)
    with pytest.raises(ValueError):
        shoot_translator(2, 1.0, 0.3)
    with pytest.raises(StepTooLarge):
        shoot_translator(2, 20.0, 0.5)
    with pytest.raises(ValueError):
        decay_audit(shoot_translator(2, 1.0, 0.01), 0.0)
    assert math.isfinite(shoot_translator(2, 1.0, 0.01).max_residual)
