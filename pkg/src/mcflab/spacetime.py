"""Parabolic cylinders, curvature point-picking, rescaling and type evidence.

All operations read recorded snapshots only; nothing is interpolated in time.
Distances are ambient: a node stands for its whole orbit circle, so its
distance to a point ``(z_c, r_c)`` of the half-plane is
``hypot(z - z_c, r - r_c)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import EmptyWindow, SeedNotCovered
from .flow.history import FlowHistory, Snapshot
from .geometry import CurvatureField, Profile, ProfileKind


@dataclass(frozen=True)
class SpacetimePoint:
    z: float
    r: float
    t: float
    snapshot: int
    node: int

    @property
    def position(self) -> tuple[float, float]:
        return (self.z, self.r)

    def to_dict(self) -> dict:
        return {"z": self.z, "r": self.r, "t": self.t, "snapshot": self.snapshot, "node": self.node}


def point_at(hist: FlowHistory, snapshot: int, node: int) -> SpacetimePoint:
    if snapshot < 0:
        snapshot += len(hist)
    f = hist[snapshot].field
    if node < 0:
        node += f.size
    return SpacetimePoint(float(f.z[node]), float(f.r[node]), hist[snapshot].t, snapshot, node)


def H_at(hist: FlowHistory, pt: SpacetimePoint) -> float:
    return float(hist[pt.snapshot].field.H[pt.node])


@dataclass(frozen=True)
class ParabolicCylinder:
    """``B_r(center) x (t - r^2/(2n), t]``."""

    center: SpacetimePoint
    r: float
    n: int

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("cylinder radius must be positive")

    @property
    def t_max(self) -> float:
        return self.center.t

    @property
    def t_min(self) -> float:
        return self.center.t - self.r**2 / (2 * self.n)


def _window(hist: FlowHistory, cyl: ParabolicCylinder) -> list[int]:
    return [k for k, s in enumerate(hist) if cyl.t_min < s.t <= cyl.t_max]


def _members(hist: FlowHistory, cyl: ParabolicCylinder):
    """Yield ``(snapshot, node_indices)`` for every snapshot in the window."""
    ks = _window(hist, cyl)
    if not ks:
        raise EmptyWindow(f"no snapshot in ({cyl.t_min:.6g}, {cyl.t_max:.6g}]")
    zc, rc = cyl.center.z, cyl.center.r
    for k in ks:
        f = hist[k].field
        yield k, np.flatnonzero(np.hypot(f.z - zc, f.r - rc) <= cyl.r)


def cylinder_nodes(hist: FlowHistory, cyl: ParabolicCylinder) -> list[SpacetimePoint]:
    """All recorded nodes in the cylinder, ordered by snapshot then node."""
    out = []
    for k, idx in _members(hist, cyl):
        f, t = hist[k].field, hist[k].t
        out.extend(SpacetimePoint(float(f.z[i]), float(f.r[i]), t, k, int(i)) for i in idx)
    return out


def _first_above(hist: FlowHistory, cyl: ParabolicCylinder, level: float) -> Optional[SpacetimePoint]:
    for k, idx in _members(hist, cyl):
        H = hist[k].field.H[idx]
        hit = np.flatnonzero(H > level)
        if hit.size:
            return point_at(hist, k, int(idx[hit[0]]))
    return None


def _cyl_max(hist, cyl) -> tuple[float, int]:
    best, count = -math.inf, 0
    for k, idx in _members(hist, cyl):
        count += idx.size
        if idx.size:
            best = max(best, float(np.max(hist[k].field.H[idx])))
    return best, count


def pick_point(hist: FlowHistory, seed: SpacetimePoint, delta: float = 0.5):
    """Doubling search for a point whose curvature controls a neighbourhood.

    Returns ``(Y, certificate)`` where ``Y`` lies in the cylinder of radius
    ``delta/(2 H(seed))`` about the seed, ``H(Y) >= H(seed)``, and ``H <= 2 H(Y)``
    on the cylinder of radius ``delta/(4 H(Y))`` about ``Y``.  Each step moves
    to the first recorded point (by snapshot, then node) with more than twice
    the current curvature.
    """
    n = hist.n
    H0 = H_at(hist, seed)
    if not H0 > 0:
        raise ValueError("the seed must have positive mean curvature")
    if not delta > 0:
        raise ValueError("delta must be positive")
    outer = ParabolicCylinder(seed, delta / (2 * H0), n)
    if hist[0].t > outer.t_min:
        raise SeedNotCovered(
            f"history starts at t={hist[0].t:.6g} but the cylinder reaches back to {outer.t_min:.6g}")
    chain = [seed]
    while True:
        Y = chain[-1]
        HY = H_at(hist, Y)
        nxt = _first_above(hist, ParabolicCylinder(Y, delta / (4 * HY), n), 2 * HY)
        if nxt is None:
            break
        chain.append(nxt)
    Y = chain[-1]
    HY = H_at(hist, Y)
    inner = ParabolicCylinder(Y, delta / (4 * HY), n)
    inner_max, inner_count = _cyl_max(hist, inner)
    _, outer_count = _cyl_max(hist, outer)
    cert = {
        "delta": delta,
        "seed": {**seed.to_dict(), "H": H0},
        "chain": [{**p.to_dict(), "H": H_at(hist, p)} for p in chain],
        "chain_length": len(chain) - 1,
        "result": {**Y.to_dict(), "H": HY},
        "outer_radius": outer.r,
        "inner_radius": inner.r,
        "outer_node_count": outer_count,
        "inner_node_count": inner_count,
        "inner_max_H": inner_max,
        "property_1": _in_cylinder(Y, outer),
        "property_2": HY >= H0,
        "property_3": inner_max <= 2 * HY,
    }
    return Y, cert


def _in_cylinder(p: SpacetimePoint, cyl: ParabolicCylinder) -> bool:
    d = math.hypot(p.z - cyl.center.z, p.r - cyl.center.r)
    return d <= cyl.r and cyl.t_min < p.t <= cyl.t_max


def _scaled_profile(p: Profile, zc: float, lam: float) -> Profile:
    if p.kind is ProfileKind.POLAR:
        return Profile(p.kind, p.n, p.param, lam * p.value, lam * (p.origin - zc))
    return Profile(p.kind, p.n, lam * (p.param - zc), lam * p.value)


def rescale(hist: FlowHistory, center: SpacetimePoint, lam: float) -> FlowHistory:
    """Parabolic rescaling ``X -> lam (X - Y)``, ``t -> lam^2 (t - s)``.

    Only the axial coordinate of the centre is subtracted so the result stays
    a hypersurface of revolution about the same axis; the radial offset
    ``lam * r_c`` is recorded in ``meta``.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    snaps = [Snapshot.of(lam**2 * (s.t - center.t), _scaled_profile(s.profile, center.z, lam))
             for s in hist]
    meta = dict(hist.meta)
    meta["rescale"] = {"lambda": lam, "center": center.to_dict(),
                       "radial_offset": lam * center.r, "parent": hist.meta.get("rescale")}
    return FlowHistory(snaps, hist.termination, dict(hist.config), meta)


def classify_type(hist: FlowHistory, horizons: Optional[Sequence[float]] = None) -> dict:
    """Evidence for the singularity type of a flow.

    Reports ``sqrt(t) max H`` at each snapshot and, for each horizon ``j``,
    the recorded maximiser of ``t (j - t) H^2`` over snapshots with
    ``0 <= t <= j``.  Finite data cannot prove a supremum finite, so the
    label is evidence only unless the flow stopped on curvature blow-up.
    """
    t = hist.times
    maxH = hist.max_H()
    with np.errstate(invalid="ignore"):
        lam = np.sqrt(np.maximum(t, 0.0)) * maxH
    k_sup = int(np.nanargmax(lam))
    horizons = list(horizons) if horizons is not None else [float(t[-1])]
    found = []
    for j in horizons:
        best = None
        for k, s in enumerate(hist):
            if s.t < 0 or s.t > j:
                continue
            q = s.t * (j - s.t) * s.field.H**2
            i = int(np.argmax(q))
            if best is None or q[i] > best[0]:
                best = (float(q[i]), k, i)
        if best is None:
            found.append({"horizon": j, "covered": False})
            continue
        pt = point_at(hist, best[1], best[2])
        found.append({"horizon": j, "covered": bool(j <= t[-1]), "value": best[0],
                      **pt.to_dict(), "H": H_at(hist, pt)})
    finite = hist.termination is not None and hist.termination.value == "CurvatureBlowup"
    if finite:
        label = "finite-time"
    else:
        # compare the late-time level of sqrt(t) max H with what came before
        late = t >= 0.75 * t[-1]
        early = ~late & (t > 0)
        growing = early.any() and np.max(lam[late]) > 1.1 * np.max(lam[early])
        label = "type-IIb evidence" if growing else "type-III evidence"
    return {
        "label": label,
        "evidence_only": not finite,
        "finite_time": finite,
        "termination": hist.termination.value if hist.termination else None,
        "times": t.tolist(),
        "sqrt_t_maxH": lam.tolist(),
        "sup_sqrt_t_maxH": float(lam[k_sup]),
        "sup_at_time": float(t[k_sup]),
        "horizons": found,
    }


def synthetic_history(n: int, times: Iterable[float], positions, H) -> FlowHistory:
    """History of umbilic fields with prescribed positions and mean curvature.

    ``positions`` is ``(z, r)`` shared by every slice or a per-slice list;
    ``H`` is an array ``(snapshots, nodes)``.  The profiles are axis graphs
    through the positions and serve only as carriers for the fields.
    """
    times = list(times)
    H = np.asarray(H, dtype=float)
    snaps = []
    for k, t in enumerate(times):
        z, r = positions[k] if isinstance(positions, list) else positions
        z, r = np.asarray(z, dtype=float), np.asarray(r, dtype=float)
        prof = Profile(ProfileKind.AXIS, n, z, np.maximum(r, 0.0))
        snaps.append(Snapshot(float(t), prof, CurvatureField.umbilic(n, z, z, r, H[k])))
    return FlowHistory(snaps, None, {"synthetic": True}, {})


def random_history(rng: np.random.Generator, n: int = 2, snapshots: int = 12, nodes: int = 120,
                   t_start: float = -0.25) -> FlowHistory:
    """Random positive curvature data on a shrinking half-circle meridian.

    Times are sorted uniform draws in ``[t_start, 0]`` with both ends kept.
    ``H`` is ``0.5`` plus a few Gaussian bumps of random height whose width
    shrinks as the height grows, times log-normal noise, so doubling chains
    of several steps occur.  Every seed at ``t = 0`` is covered when
    ``t_start <= -1/(4n)`` and ``delta <= 1``.
    """
    inner = np.sort(rng.uniform(t_start, 0.0, size=max(snapshots - 2, 0)))
    times = np.concatenate([[t_start], inner, [0.0]])
    theta = np.linspace(0.0, math.pi, nodes)
    k = int(rng.integers(1, 5))
    centres = rng.uniform(0.0, math.pi, size=k)
    heights = np.exp(rng.normal(1.0, 1.0, size=k))
    widths = 0.6 / (1.0 + heights)
    pos, H = [], []
    for t in times:
        R = math.sqrt(1.0 - 2 * n * t)
        pos.append((-R * np.cos(theta), R * np.sin(theta)))
        grow = 1.0 + (t - t_start) / abs(t_start)
        bumps = sum(a * grow * np.exp(-(((theta - c) * R) / w) ** 2)
                    for a, c, w in zip(heights, centres, widths))
        H.append((0.5 + bumps) * np.exp(rng.normal(0.0, 0.2, size=nodes)))
    return synthetic_history(n, times, pos, np.array(H))


def check_pick(hist: FlowHistory, seed: SpacetimePoint, Y: SpacetimePoint, delta: float,
               chain: Optional[Sequence[SpacetimePoint]] = None) -> dict:
    """Exhaustive check of a point-picking result over every recorded node."""
    n = hist.n
    H0 = float(hist[seed.snapshot].field.H[seed.node])
    HY = float(hist[Y.snapshot].field.H[Y.node])
    ro, ri = delta / (2 * H0), delta / (4 * HY)
    fY = hist[Y.snapshot].field
    same_node = fY.z[Y.node] == Y.z and fY.r[Y.node] == Y.r and hist[Y.snapshot].t == Y.t
    p1 = (math.hypot(Y.z - seed.z, Y.r - seed.r) <= ro
          and seed.t - ro**2 / (2 * n) < Y.t <= seed.t)
    worst = -math.inf
    for snap in hist:
        if not (Y.t - ri**2 / (2 * n) < snap.t <= Y.t):
            continue
        f = snap.field
        for i in range(f.size):
            if math.hypot(f.z[i] - Y.z, f.r[i] - Y.r) <= ri:
                worst = max(worst, float(f.H[i]))
    out = {"recorded": bool(same_node), "property_1": bool(p1), "property_2": HY >= H0,
           "property_3": worst <= 2 * HY, "inner_max_H": worst}
    if chain is not None:
        links = []
        for a, b in zip(chain, chain[1:]):
            Ha = float(hist[a.snapshot].field.H[a.node])
            Hb = float(hist[b.snapshot].field.H[b.node])
            rr = delta / (4 * Ha)
            inside = (math.hypot(b.z - a.z, b.r - a.r) <= rr
                      and a.t - rr**2 / (2 * n) < b.t <= a.t)
            links.append(bool(inside and Hb > 2 * Ha))
        out["chain_links"] = links
    out["pass"] = all(v for k, v in out.items() if k not in ("inner_max_H", "chain_links")) and \
        all(out.get("chain_links", []))
    return out
