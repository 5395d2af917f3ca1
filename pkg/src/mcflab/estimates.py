"""Measured audits of curvature estimates over recorded flows.

Each audit turns an inequality into numbers computed from the snapshots of a
``FlowHistory``: suprema over the recorded nodes, a fitted constant, and a
verdict that depends only on those numbers and the stated tolerance.  Balls
are centred at points of the (axis, radius) half-plane and a node counts with
its whole orbit circle, so distances are ``hypot(z - z_p, r - r_p)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (BallNotContained, BetaNonPositive, EmptyRegion, InitialPinchFails,
                     NotPinched)
from .flow.history import FlowHistory
from .geometry import Profile, ProfileKind, _segment_distance, trace_free_norm


@dataclass
class EstimateReport:
    estimate: str
    measured: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    passed: bool = False
    grid: dict = field(default_factory=dict)
    tolerance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def summary(self) -> str:
        consts = ", ".join(f"{k}={_fmt(v)}" for k, v in self.constants.items())
        return f"{self.estimate}: {'PASS' if self.passed else 'FAIL'} ({consts})"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {_fmt(x)}" for k, x in v.items()) + "}"
    return str(v)


def _grid(hist: FlowHistory) -> dict:
    return {"nodes": hist[0].field.size, "snapshots": len(hist), "t_last": hist[-1].t}


def _dist(f, p) -> np.ndarray:
    return np.hypot(f.z - p[0], f.r - p[1])


def _rel_change(a: float, b: float) -> float:
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b))


def default_center(hist: FlowHistory) -> tuple[float, float]:
    p = hist[0].profile
    if p.kind is ProfileKind.POLAR:
        return (p.origin, 0.0)
    return (float(p.param[0]), 0.0)


# -- local umbilic estimate ----------------------------------------------
def _umbilic_measure(hist, p, L, alpha, eps_list, pinch_tol):
    theta_vals, counts = [], {"outer_initial": 0, "annulus": 0, "inner": 0}
    for k, snap in enumerate(hist):
        f = snap.field
        d = _dist(f, p)
        ball2 = d <= 2 * L
        if ball2.any():
            scale = float(np.max(np.abs(f.H)))
            if np.min(f.kappa_min[ball2] - alpha * f.H[ball2]) < -pinch_tol * scale:
                raise NotPinched(f"kappa_1 < alpha H inside B_2L at t={snap.t:.6g}")
        region = ball2 if k == 0 else ball2 & (d >= L)
        if region.any():
            theta_vals.append(float(np.max(f.H[region])))
            counts["outer_initial" if k == 0 else "annulus"] += int(region.sum())
    if not theta_vals:
        raise EmptyRegion("no recorded node in the region that defines Theta")
    theta = max(theta_vals)
    if not theta > 0:
        raise EmptyRegion("Theta vanishes on the recorded nodes")
    C = {float(e): 0.0 for e in eps_list}
    for snap in hist:
        f = snap.field
        m = _dist(f, p) <= L / 2
        if not m.any():
            continue
        counts["inner"] += int(m.sum())
        ring = trace_free_norm(f)[m]
        for e in C:
            C[e] = max(C[e], float(np.max(np.maximum(ring - e * f.H[m], 0.0))) / theta)
    if counts["inner"] == 0:
        raise EmptyRegion("no recorded node in B_{L/2}")
    return theta, C, counts


def audit_umbilic(hist: FlowHistory, L: float, alpha: float, eps_list: Sequence[float],
                  center=None, refined: Optional[FlowHistory] = None,
                  stability_tol: float = 0.1, pinch_tol: float = 1e-3) -> EstimateReport:
    """Measured constant in ``|Å| <= eps H + C_eps Theta`` on ``B_{L/2}``.

    ``Theta`` is the largest ``H`` over ``B_{2L}`` at the first snapshot and
    over ``B_{2L} \\ B_L`` at later ones.  The flow must be ``alpha``-pinched in
    ``B_{2L}`` up to the normalised slack ``pinch_tol``.  With ``refined`` the
    constants are recomputed on the finer run and must agree within
    ``stability_tol`` (two zeros agree).
    """
    p = default_center(hist) if center is None else (float(center[0]), float(center[1]))
    theta, C, counts = _umbilic_measure(hist, p, L, alpha, eps_list, pinch_tol)
    eps_sorted = sorted(C)
    monotone = all(C[a] >= C[b] for a, b in zip(eps_sorted, eps_sorted[1:]))
    rep = EstimateReport(
        "umbilic",
        measured={"Theta": theta, "node_counts": counts, "center": list(p), "L": L,
                  "alpha": alpha, "C_meas": {str(e): C[e] for e in eps_sorted},
                  "non_increasing_in_eps": monotone},
        constants={"C_eps": {str(e): C[e] for e in eps_sorted}},
        grid=_grid(hist),
        tolerance={"stability": stability_tol, "pinch": pinch_tol},
    )
    ok = monotone and all(math.isfinite(v) for v in C.values())
    if refined is not None:
        theta_r, C_r, counts_r = _umbilic_measure(refined, p, L, alpha, eps_list, pinch_tol)
        change = {str(e): _rel_change(C[e], C_r[e]) for e in eps_sorted}
        rep.measured["refined"] = {"Theta": theta_r, "C_meas": {str(e): C_r[e] for e in eps_sorted},
                                   "node_counts": counts_r, "grid": _grid(refined)}
        rep.measured["relative_change"] = change
        ok = ok and all(v < stability_tol for v in change.values())
    rep.passed = bool(ok)
    return rep


# -- interior estimate ---------------------------------------------------
def _contains_ball(profile: Profile, p, r) -> bool:
    z, rr = profile.positions()
    if profile.kind is ProfileKind.POLAR:
        th = math.atan2(abs(p[1]), p[0] - profile.origin)
        inside = math.hypot(p[0] - profile.origin, p[1]) < np.interp(th, profile.param, profile.value)
    else:
        inside = profile.param[0] <= p[0] <= profile.param[-1] and abs(p[1]) < np.interp(
            p[0], profile.param, profile.value)
    # chords of a convex meridian lie inside the body: this distance is conservative
    return bool(inside) and _segment_distance(p[0], abs(p[1]), z, rr) >= r * (1 - 1e-12)


def _interior_measure(hist, p, r, L, strict):
    f0 = hist[0].field
    near0 = _dist(f0, p) <= 2 * L * r
    theta = max(1.0, r * float(np.max(f0.H[near0]))) if near0.any() else 1.0
    R = L * r
    best, best_t, audited, skipped, count = 0.0, None, 0, [], 0
    for k, snap in enumerate(hist):
        if not _contains_ball(snap.profile, p, r):
            if k == 0 or strict:
                raise BallNotContained(f"B_r(p) is not inside the body at t={snap.t:.6g}", snap.t)
            skipped.append(snap.t)
            continue
        audited += 1
        f = snap.field
        d = _dist(f, p)
        m = d <= R * (1 + 1e-12)
        if not m.any():
            continue
        count += int(m.sum())
        w = 1.0 - (d[m] / R) ** 2
        w[np.abs(d[m] - R) <= 1e-12 * R] = 0.0  # nodes on the sphere of radius Lr
        val = float(np.max(w * f.H[m]))
        if val > best:
            best, best_t = val, snap.t
    C = best * r / (L**3 * theta)
    return C, theta, best, best_t, audited, skipped, count


def audit_interior(hist: FlowHistory, p, r: float, L: float,
                   refined: Optional[FlowHistory] = None, stability_tol: float = 0.1,
                   strict: bool = False) -> EstimateReport:
    """Measured ``C`` in ``sup (1 - |X-p|^2/(Lr)^2) H <= C L^3 Theta / r``.

    ``Theta = max(1, r sup_{B_2Lr} H(., 0))``.  Only snapshots with
    ``B_r(p)`` inside the body are audited; ``BallNotContained`` is raised if
    the first snapshot fails (or any, when ``strict``).
    """
    p = (float(p[0]), float(p[1]))
    if not (r > 0 and L > 1):
        raise ValueError("need r > 0 and L > 1")
    C, theta, lhs, t_at, audited, skipped, count = _interior_measure(hist, p, r, L, strict)
    rep = EstimateReport(
        "interior",
        measured={"Theta": theta, "lhs_sup": lhs, "attained_at_t": t_at, "center": list(p),
                  "r": r, "L": L, "audited_snapshots": audited,
                  "skipped_snapshots": len(skipped),
                  "first_skipped_t": skipped[0] if skipped else None, "node_count": count},
        constants={"C_meas": C},
        grid=_grid(hist),
        tolerance={"stability": stability_tol},
    )
    ok = math.isfinite(C)
    if refined is not None:
        C_r, *_ = _interior_measure(refined, p, r, L, strict)
        rep.measured["refined"] = {"C_meas": C_r, "grid": _grid(refined)}
        rep.measured["relative_change"] = _rel_change(C, C_r)
        ok = ok and math.isfinite(C_r) and rep.measured["relative_change"] < stability_tol
    rep.passed = bool(ok)
    return rep


# -- pinching preservation -----------------------------------------------
def pinching_curve(hist: FlowHistory, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """``m(t) = min (kappa_1 - alpha H) / max H`` for every snapshot."""
    m = np.array([float(np.min(s.field.kappa_min - alpha * s.field.H) / np.max(s.field.H))
                  for s in hist])
    return hist.times, m


def audit_pinching_preservation(hist: FlowHistory, alpha: float, tol: float = 1e-3) -> EstimateReport:
    f0 = hist[0].field
    if np.min(f0.kappa_min - alpha * f0.H) < -1e-12 * float(np.max(np.abs(f0.H))):
        raise InitialPinchFails(f"kappa_1 >= {alpha} H fails on the first snapshot")
    t, m = pinching_curve(hist, alpha)
    k = int(np.argmin(m))
    return EstimateReport(
        "pinching",
        measured={"alpha": alpha, "m_min": float(m[k]), "m_min_t": float(t[k]),
                  "t": t.tolist(), "m": m.tolist()},
        constants={"m_min": float(m[k])},
        passed=bool(m[k] >= -tol),
        grid=_grid(hist),
        tolerance={"normalized_slack": tol},
    )


# -- barrier identity ------------------------------------------------------
def _param_derivs(f: np.ndarray, h: float, parity: tuple):
    """Second-order first/second differences with ghost parity at the ends.

    ``parity`` entries are +1 (even), -1 (odd) or 0 (one-sided stencil).
    """
    d1 = np.empty_like(f)
    d2 = np.empty_like(f)
    d1[1:-1] = (f[2:] - f[:-2]) / (2 * h)
    d2[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / h**2
    for end, (i, j, k, l, s) in zip(parity, ((0, 1, 2, 3, 1), (-1, -2, -3, -4, -1))):
        if end == 0:
            d1[i] = s * (-3 * f[i] + 4 * f[j] - f[k]) / (2 * h)
            d2[i] = (2 * f[i] - 5 * f[j] + 4 * f[k] - f[l]) / h**2
        else:
            ghost = end * f[j]
            d1[i] = s * (f[j] - ghost) / (2 * h)
            d2[i] = (f[j] - 2 * f[i] + ghost) / h**2
    return d1, d2


def meridian_frame(profile: Profile):
    """Arclength derivatives of ``z`` and ``r`` and the outward normal."""
    z, r = profile.positions()
    h = profile.spacing
    if profile.kind is ProfileKind.POLAR:
        poles = profile.pole_ends
        pz = tuple(1 if e else 0 for e in poles)
        pr = tuple(-1 if e else 0 for e in poles)
        sign = 1.0
    else:
        pz = pr = (0, 0)
        sign = -1.0
    z1, z2 = _param_derivs(z, h, pz)
    r1, r2 = _param_derivs(r, h, pr)
    s1 = np.hypot(z1, r1)
    s2 = (z1 * z2 + r1 * r2) / s1
    zs, rs = z1 / s1, r1 / s1
    zss = (z2 - zs * s2) / s1**2
    rss = (r2 - rs * s2) / s1**2
    nu = (sign * rs, -sign * zs)
    return z, r, zs, rs, zss, rss, nu


def _heat_residuals(hist: FlowHistory, k: int, p):
    """Residuals of the heat operator on the axial and radial coordinates at snapshot ``k``."""
    n = hist.n
    snaps = hist[k - 1], hist[k], hist[k + 1]
    tm, t0, tp = (s.t for s in snaps)
    a, b = t0 - tm, tp - t0
    pos = [s.profile.positions() for s in snaps]
    vz = (-b / (a * (a + b))) * pos[0][0] + ((b - a) / (a * b)) * pos[1][0] + (a / (b * (a + b))) * pos[2][0]
    vr = (-b / (a * (a + b))) * pos[0][1] + ((b - a) / (a * b)) * pos[1][1] + (a / (b * (a + b))) * pos[2][1]
    z, r, zs, rs, zss, rss, nu = meridian_frame(snaps[1].profile)
    vn = vz * nu[0] + vr * nu[1]
    with np.errstate(divide="ignore", invalid="ignore"):
        lap_z = zss + (n - 1) * rs * zs / r
        lap_x = rss + (n - 1) * (rs**2 - 1) / r
    axis = r == 0
    lap_z[axis] = n * zss[axis]
    lap_x[axis] = 0.0
    Rz = vn * nu[0] - lap_z
    Rx = np.where(axis, 0.0, vn * nu[1] - lap_x)
    return Rz, Rx


def mcf_residual(hist: FlowHistory) -> np.ndarray:
    """Relative MCF residual ``max |V_n + H| / max H`` at each interior snapshot.

    ``V_n`` is the outward normal velocity from a three-point time
    difference of node positions at fixed parameter.  The quotient is
    invariant under parabolic rescaling.
    """
    if len(hist) < 3:
        raise ValueError("the residual needs at least three snapshots")
    out = []
    for k in range(1, len(hist) - 1):
        snaps = hist[k - 1], hist[k], hist[k + 1]
        tm, t0, tp = (s.t for s in snaps)
        a, b = t0 - tm, tp - t0
        w = (-b / (a * (a + b)), (b - a) / (a * b), a / (b * (a + b)))
        pos = [s.profile.positions() for s in snaps]
        vz = sum(c * q[0] for c, q in zip(w, pos))
        vr = sum(c * q[1] for c, q in zip(w, pos))
        *_, nu = meridian_frame(snaps[1].profile)
        H = snaps[1].field.H
        out.append(float(np.max(np.abs(vz * nu[0] + vr * nu[1] + H)) / np.max(H)))
    return np.array(out)


def barrier_beta(profile: Profile, p, e) -> np.ndarray:
    """Per-node minimum over the orbit of ``<(X - p)/|X - p|, e>``."""
    z, r = profile.positions()
    dz = z - p[0]
    return (e[0] * dz - abs(e[1]) * r) / np.hypot(dz, r)


def _barrier_measure(hist, p, e, C):
    if C is None:
        C = max(float(np.max(s.field.normA2)) for s in hist)
    sup_R, sup_psi, per_t = 0.0, 0.0, []
    origins = {s.profile.origin for s in hist}
    if len(origins) > 1 and hist[0].profile.kind is ProfileKind.POLAR:
        raise ValueError("barrier audit needs a fixed parametrisation (no remeshing)")
    for k in range(1, len(hist) - 1):
        Rz, Rx = _heat_residuals(hist, k, p)
        res = np.abs(e[0] * Rz) + np.abs(e[1] * Rx)
        val = float(np.max(res))
        per_t.append(val)
        sup_R = max(sup_R, val)
        sup_psi = max(sup_psi, val * math.exp((C + 1) * hist[k].t))
    return C, sup_R, sup_psi, per_t


def audit_barrier(hist: FlowHistory, p, e, C: Optional[float] = None,
                  refined: Optional[FlowHistory] = None, min_order_factor: float = 3.0,
                  require_beta: bool = True) -> EstimateReport:
    """Discrete check of ``(d/dt - Laplacian) psi = (C + 1) psi`` for
    ``psi = <X - p, e> exp((C + 1) t)``.

    ``p`` is a point on the axis and ``e = (e_axis, e_perp)`` a unit vector;
    the residual reported is the supremum over nodes and orbit angles of
    ``(d/dt - Laplacian) <X - p, e>``, with the time derivative taken along
    the normal from neighbouring snapshots.  ``C`` defaults to the recorded
    ``sup |A|^2``.
    """
    p = (float(p[0]), float(p[1]))
    if p[1] != 0.0:
        raise ValueError("the barrier base point must lie on the axis")
    e = np.asarray(e, dtype=float)
    e = e / np.linalg.norm(e)
    if len(hist) < 3:
        raise ValueError("the barrier audit needs at least three snapshots")
    beta_nodes = barrier_beta(hist[0].profile, p, e)
    beta = float(np.min(beta_nodes))
    if require_beta and not beta > 0:
        raise BetaNonPositive(f"beta = {beta:.6g} on the first snapshot")
    z, r = hist[0].profile.positions()
    dz = z - p[0]
    psi0 = e[0] * dz - abs(e[1]) * r
    lower = float(np.min(psi0 - beta * np.hypot(dz, r)))
    C, sup_R, sup_psi, per_t = _barrier_measure(hist, p, e, C)
    rep = EstimateReport(
        "barrier",
        measured={"beta": beta, "psi_minus_beta_dist_min": lower, "C": C,
                  "sup_residual": sup_R, "sup_psi_residual": sup_psi,
                  "residual_per_snapshot": per_t, "p": list(p), "e": e.tolist()},
        constants={"beta": beta, "sup_residual": sup_R},
        grid=_grid(hist),
        tolerance={"min_order_factor": min_order_factor, "lower_bound_slack": 1e-12},
    )
    ok = lower >= -1e-12 and (beta > 0 or not require_beta)
    if refined is not None:
        _, sup_R2, sup_psi2, _ = _barrier_measure(refined, p, e, C)
        factor = sup_R / sup_R2 if sup_R2 > 0 else math.inf
        rep.measured["refined"] = {"sup_residual": sup_R2, "sup_psi_residual": sup_psi2,
                                   "grid": _grid(refined)}
        rep.measured["refinement_factor"] = factor
        ok = ok and factor >= min_order_factor
    rep.passed = bool(ok)
    return rep
