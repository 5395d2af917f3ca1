"""Truncate, mollify and flow: finite approximations of an unbounded convex body.

An unbounded body ``{x >= u(y)}`` is cut by its mirror image in the plane
``x = h``, the resulting closed body is smoothed by the heat flow of its
polar radial function on the sphere, and the smoothed body is flowed by mean
curvature.  The matrix over heights and smoothing levels is compared near the
tip at a fixed time.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import expm_multiply

from ..errors import FlowError, GeometryError, HeightTooSmall
from ..geometry import ConvexBody, Profile, ProfileKind, compute_curvatures
from .engine import FlowConfig, polar_weights, run_flow
from .history import FlowHistory


def _bisect_polar(R, h, x0, theta, iters=80):
    """Solve ``rho sin(theta) = R(h - rho |cos(theta)|)`` for each angle."""
    c, s = np.abs(np.cos(theta)), np.sin(theta)
    lo = np.zeros_like(theta)
    hi = np.full_like(theta, h - x0)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        inside = mid * s < R(h - mid * c)
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return 0.5 * (lo + hi)


def reflect_truncate(body: ConvexBody, h: float, nodes: int = 801) -> ConvexBody:
    """Intersect ``body`` with its reflection in the plane ``{x = h}``.

    Returns a closed polar profile centred at ``x = h``, the midpoint of the
    axis segment inside the truncated body.
    """
    p = body.profile
    if p.kind is not ProfileKind.AXIS or body.bounded:
        raise GeometryError("reflect_truncate needs an unbounded axis-graph body")
    if not p.pole_ends[0] or p.pole_ends[1]:
        raise GeometryError("the body must have its tip at the lower end of the axis range")
    x0 = float(p.param[0])
    if not h > x0:
        raise HeightTooSmall(f"height {h} does not exceed the tip at {x0}")
    if h - x0 > p.param[-1] - x0 and body.radius_fn is None:
        raise GeometryError("height exceeds the sampled range of the body")
    theta = np.linspace(0.0, math.pi, nodes)
    rho = _bisect_polar(body.radius, h, x0, theta)
    return ConvexBody(Profile(ProfileKind.POLAR, p.n, theta, rho, h), convexity_tol=1e-6)


@lru_cache(maxsize=32)
def _laplacian(nodes: int, n: int):
    _, _, cL, cR = polar_weights(nodes, n)
    diag = -(cL + cR)
    return sparse.diags([cL[1:], diag, cR[:-1]], [-1, 0, 1], format="csr")


def mollify_polar(p: Profile, eps: float) -> Profile:
    """Run the rotationally symmetric heat flow on S^n for time ``eps``.

    The radial function is evolved by ``f_s = f'' + (n-1) cot(theta) f'`` with
    reflecting poles; ``eps = 0`` returns ``p`` itself.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if eps == 0:
        return p
    if not p.is_closed or not p.is_uniform():
        raise GeometryError("mollify_polar needs a closed polar profile on a uniform grid")
    f = expm_multiply(eps * _laplacian(p.size, p.n), np.asarray(p.value))
    return p.with_values(f)


def _lower_cap(profile: Profile):
    """The part of the boundary below the equator as a graph ``z(r)``."""
    z, r = profile.positions()
    k = int(np.argmax(r))
    zr, rr = z[k:][::-1], r[k:][::-1]
    keep = np.concatenate([[True], np.diff(rr) > 0])
    return rr[keep], zr[keep]


def _cap_in_ball(profile: Profile, tip, radius):
    rr, zz = _lower_cap(profile)
    inside = np.hypot(zz - tip[0], rr - tip[1]) <= radius
    # contiguous run from the axis
    stop = int(np.argmin(inside)) if not inside.all() else inside.size
    return rr[:stop], zz[:stop]


def cap_distance(a: Profile, b: Profile, tip, radius: float, samples: int = 400) -> float:
    """Sup-norm distance of the lower caps of ``a`` and ``b`` inside a ball."""
    ra, za = _cap_in_ball(a, tip, radius)
    rb, zb = _cap_in_ball(b, tip, radius)
    top = min(ra[-1] if ra.size else 0.0, rb[-1] if rb.size else 0.0)
    if top <= 0:
        raise FlowError("the flowed caps do not meet the comparison ball")
    grid = np.linspace(0.0, top, samples)
    return float(np.max(np.abs(np.interp(grid, ra, za) - np.interp(grid, rb, zb))))


def _local_sup_A(hist: FlowHistory, tip, radius: float) -> float:
    best = 0.0
    for snap in hist:
        f = snap.field
        m = np.hypot(f.z - tip[0], f.r - tip[1]) <= radius
        if m.any():
            best = max(best, float(np.sqrt(np.max(f.normA2[m]))))
    return best


def _local_max_H(snap, tip, radius: float) -> float:
    f = snap.field
    m = np.hypot(f.z - tip[0], f.r - tip[1]) <= radius
    return float(np.max(f.H[m])) if m.any() else math.nan


def _same_height(a: float, b: float) -> bool:
    return a == b or (math.isnan(a) and math.isnan(b))


@dataclass
class ExistenceResult:
    runs: list = field(default_factory=list)
    report: dict = field(default_factory=dict)

    def history(self, height, eps) -> FlowHistory:
        for run in self.runs:
            if _same_height(run["height"], height) and run["eps"] == eps:
                return run["history"]
        raise KeyError((height, eps))


def existence_pipeline(body: ConvexBody, heights: Sequence[float], epss: Sequence[float],
                       cfg: FlowConfig, delta: float = 0.05, ball_radius: float = 1.0,
                       spacing: float = 0.005, threads: int = 1,
                       nodes: Optional[int] = None) -> ExistenceResult:
    """Run the truncate-mollify-flow matrix and compare the runs near the tip.

    ``eps`` is a smoothing time in ambient units (length squared); on a body
    whose tip lies at distance ``rho_tip`` from the polar centre it becomes
    the sphere time ``eps / rho_tip**2``.  Node counts are chosen so that
    the arc spacing at the tip is about ``spacing`` unless ``nodes`` is given.
    The report compares caps at time ``delta`` inside the ball of radius
    ``ball_radius`` about the original tip.
    """
    heights = [float(h) for h in heights]
    epss = [float(e) for e in epss]
    if any(b <= a for a, b in zip(heights, heights[1:])):
        raise ValueError("heights must be increasing")
    if any(b >= a for a, b in zip(epss, epss[1:])):
        raise ValueError("epss must be decreasing")
    if cfg.n != body.profile.n:
        raise ValueError("config n does not match the body dimension")
    fcfg = replace(cfg, t_end=delta, record_times=tuple(t for t in cfg.record_times if t < delta))

    if body.bounded:
        heights = [math.nan]
        z, r = body.profile.positions()
        tip = (float(z[-1]), 0.0)
    else:
        tip = (float(body.profile.param[0]), 0.0)

    def truncated(h):
        if math.isnan(h):
            return body.profile
        N = nodes or 2 * int(math.ceil(math.pi * (h - tip[0]) / spacing / 2)) + 1
        return reflect_truncate(body, h, N).profile

    bases = {h: truncated(h) for h in heights}

    def task(h, eps):
        p = bases[h]
        rho_tip = float(p.value[-1])
        p0 = mollify_polar(p, eps / rho_tip**2)
        hist = run_flow(p0, fcfg)
        return {"height": h, "eps": eps, "nodes": p.size, "history": hist}

    jobs = [(h, e) for h in heights for e in epss]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            runs = list(ex.map(lambda a: task(*a), jobs))
    else:
        runs = [task(*a) for a in jobs]

    result = ExistenceResult(runs)
    for run in runs:
        hist = run["history"]
        if hist[-1].t < delta:
            raise FlowError(f"run h={run['height']} eps={run['eps']} stopped before t={delta}")
        run["sup_A"] = _local_sup_A(hist, tip, ball_radius)
        run["max_H_at_delta"] = _local_max_H(hist[-1], tip, ball_radius)

    def cap(run):
        return run["history"][-1].profile

    finest = [r for r in runs if r["eps"] == epss[-1]]
    rep = {
        "delta": delta, "ball_radius": ball_radius, "tip": list(tip),
        "heights": [None if math.isnan(h) else h for h in heights], "epss": epss,
        "runs": [{k: (None if isinstance(v, float) and math.isnan(v) else v)
                  for k, v in r.items() if k != "history"} for r in runs],
    }
    if len(finest) >= 2:
        a, b = finest[-2], finest[-1]
        rep["finest_pair"] = [[a["height"], a["eps"]], [b["height"], b["eps"]]]
        rep["finest_spread"] = cap_distance(cap(a), cap(b), tip, ball_radius)
    else:
        a = finest[-1]
        same = [r for r in runs if _same_height(r["height"], a["height"])]
        if len(same) >= 2:
            rep["finest_pair"] = [[same[-2]["height"], same[-2]["eps"]], [a["height"], a["eps"]]]
            rep["finest_spread"] = cap_distance(cap(same[-2]), cap(a), tip, ball_radius)
    eps_study = []
    for h in heights:
        row = [r for r in runs if _same_height(r["height"], h)]
        diffs = [cap_distance(cap(x), cap(y), tip, ball_radius) for x, y in zip(row, row[1:])]
        rates = [math.log(d0 / d1) / math.log(e0 / e1) if d0 > 0 and d1 > 0 else None
                 for d0, d1, e0, e1 in zip(diffs, diffs[1:], epss, epss[1:])]
        eps_study.append({"height": None if math.isnan(h) else h, "successive": diffs,
                          "measured_rates": rates})
    rep["eps_study"] = eps_study
    if len(heights) > 1:
        rep["height_study"] = [
            cap_distance(cap(x), cap(y), tip, ball_radius)
            for x, y in zip(finest, finest[1:])
        ]
    sups = [r["sup_A"] for r in runs]
    rep["sup_A_max"] = max(sups)
    rep["sup_A_bounded"] = bool(all(math.isfinite(s) for s in sups))
    result.report = rep
    return result
