"""Rotationally symmetric hypersurfaces and their curvature.

A hypersurface of revolution in R^{n+1} is described by its meridian in the
(axis, radius) half-plane.  Two generating representations are supported:

* ``AXIS``: radius as a function of the axis coordinate, ``r(x)``;
* ``POLAR``: distance from a fixed origin on the axis as a function of the
  polar angle, ``rho(theta)`` with ``theta`` in ``[0, pi]`` measured from the
  positive axis direction.

Orientation convention: the unit normal points out of the enclosed convex
region, and the mean curvature of a round sphere of radius ``R`` is ``n/R``.
On a hypersurface of revolution the shape operator has two eigenvalues, the
meridian curvature ``kappa_ax`` (multiplicity 1) and the rotational curvature
``kappa_rot`` (multiplicity ``n - 1``).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize

from .errors import DegenerateRadius, GeometryError, NonFinite, NonPositiveH, NotClosed

UNIFORM_RTOL = 1e-8
CSV_COLUMNS = (
    "node_index", "param", "axis_coord", "radius",
    "kappa1", "kappan", "H", "normAring", "ratio",
)


class ProfileKind(str, Enum):
    AXIS = "axis"
    POLAR = "polar"


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Profile:
    """Sampled generating function of a hypersurface of revolution.

    ``origin`` is the axis coordinate of the polar centre and is ignored for
    axis graphs.
    """

    kind: ProfileKind
    n: int
    param: np.ndarray
    value: np.ndarray
    origin: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ProfileKind(self.kind))
        object.__setattr__(self, "param", _frozen(self.param))
        object.__setattr__(self, "value", _frozen(self.value))
        object.__setattr__(self, "origin", float(self.origin))
        if int(self.n) != self.n or self.n < 1:
            raise GeometryError(f"dimension n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        p, v = self.param, self.value
        if p.ndim != 1 or p.shape != v.shape or p.size < 2:
            raise GeometryError("param and value must be 1-D arrays of equal length >= 2")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(v))):
            raise NonFinite("profile samples must be finite")
        if np.any(np.diff(p) <= 0):
            raise GeometryError("profile parameter must be strictly increasing")
        if self.kind is ProfileKind.AXIS:
            if np.any(v < 0):
                raise GeometryError("axis-graph radius must be non-negative")
        else:
            if np.any(v <= 0):
                raise GeometryError("polar radial function must be positive")
            if p[0] < -1e-12 or p[-1] > math.pi + 1e-12:
                raise GeometryError("polar angle must lie in [0, pi]")

    # -- basic geometry ---------------------------------------------------
    @property
    def size(self) -> int:
        return self.param.size

    @property
    def spacing(self) -> float:
        return float((self.param[-1] - self.param[0]) / (self.size - 1))

    def is_uniform(self) -> bool:
        d = np.diff(self.param)
        return bool(np.all(np.abs(d - self.spacing) <= UNIFORM_RTOL * abs(self.spacing)))

    @property
    def pole_ends(self) -> tuple[bool, bool]:
        """Which endpoints sit on the symmetry axis."""
        if self.kind is ProfileKind.POLAR:
            return (abs(self.param[0]) < 1e-12, abs(self.param[-1] - math.pi) < 1e-12)
        return (self.value[0] == 0.0, self.value[-1] == 0.0)

    @property
    def is_closed(self) -> bool:
        return self.kind is ProfileKind.POLAR and all(self.pole_ends)

    def positions(self) -> tuple[np.ndarray, np.ndarray]:
        """Node positions ``(z, r)`` in the (axis, radius) half-plane."""
        if self.kind is ProfileKind.AXIS:
            return self.param.copy(), self.value.copy()
        th, rho = self.param, self.value
        z = self.origin + rho * np.cos(th)
        r = rho * np.sin(th)
        if self.pole_ends[0]:
            r[0] = 0.0
        if self.pole_ends[-1]:
            r[-1] = 0.0
        return z, r

    def with_values(self, value) -> "Profile":
        return replace(self, value=value)


def uniform_polar(n: int, nodes: int, rho_fn: Callable, origin: float = 0.0) -> Profile:
    theta = np.linspace(0.0, math.pi, nodes)
    rho = np.broadcast_to(np.asarray(rho_fn(theta), dtype=float), theta.shape)
    return Profile(ProfileKind.POLAR, n, theta, rho, origin)


def sphere(n: int, R: float = 1.0, nodes: int = 401, origin: float = 0.0) -> Profile:
    return uniform_polar(n, nodes, lambda th: np.full_like(th, R), origin)


def ellipsoid(n: int, a: float = 1.0, c: float = 1.5, nodes: int = 401) -> Profile:
    """Ellipsoid of revolution with equatorial semi-axis ``a`` and polar semi-axis ``c``."""
    return uniform_polar(
        n, nodes, lambda th: 1.0 / np.sqrt(np.cos(th) ** 2 / c**2 + np.sin(th) ** 2 / a**2)
    )


def capsule(n: int, half_length: float = 1.0, R: float = 1.0, nodes: int = 401) -> Profile:
    """Cylinder of radius ``R`` capped by hemispheres, centred at the origin."""

    def rho(th):
        c, s = np.abs(np.cos(th)), np.sin(th)
        # ray meets the cylinder wall or a cap, whichever is nearer the axis end
        with np.errstate(divide="ignore"):
            wall = np.where(s > 0, R / np.where(s > 0, s, 1.0), np.inf)
        cap = half_length * c + np.sqrt(np.maximum(R**2 - (half_length * s) ** 2, 0.0))
        return np.where(wall * c <= half_length, wall, cap)

    return uniform_polar(n, nodes, rho)


# -- finite differences --------------------------------------------------
def _fd(f: np.ndarray, h: float, even: tuple[bool, bool]):
    """Second-order first/second derivatives on a uniform grid.

    Endpoints flagged ``even`` use ghost nodes by even reflection; the others
    use one-sided second-order stencils.
    """
    f = np.asarray(f, dtype=float)
    d1 = np.empty_like(f)
    d2 = np.empty_like(f)
    d1[1:-1] = (f[2:] - f[:-2]) / (2 * h)
    d2[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / h**2
    if even[0]:
        d1[0] = 0.0
        d2[0] = 2 * (f[1] - f[0]) / h**2
    else:
        d1[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h)
        d2[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / h**2
    if even[1]:
        d1[-1] = 0.0
        d2[-1] = 2 * (f[-2] - f[-1]) / h**2
    else:
        d1[-1] = (3 * f[-1] - 4 * f[-2] + f[-3]) / (2 * h)
        d2[-1] = (2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]) / h**2
    return d1, d2


def profile_derivatives(p: Profile):
    """First and second parameter derivatives of the generating function."""
    if not p.is_uniform():
        raise GeometryError("finite differences require a uniform parameter grid")
    even = p.pole_ends if p.kind is ProfileKind.POLAR else (False, False)
    return _fd(p.value, p.spacing, even)


def _cap_curvature(s: np.ndarray, x: np.ndarray) -> float:
    # even fit x - x0 = c1 s^2 + c2 s^4 through the two nodes next to the cap
    M = np.array([[s[1] ** 2, s[1] ** 4], [s[2] ** 2, s[2] ** 4]])
    c1, _ = np.linalg.solve(M, [x[1] - x[0], x[2] - x[0]])
    return 2.0 * c1


# -- curvature field -----------------------------------------------------
@dataclass(frozen=True)
class CurvatureField:
    """Pointwise curvature quantities of a hypersurface of revolution."""

    n: int
    param: np.ndarray
    z: np.ndarray
    r: np.ndarray
    kappa_ax: np.ndarray
    kappa_rot: np.ndarray
    kappa_min: np.ndarray = field(init=False)
    kappa_max: np.ndarray = field(init=False)
    H: np.ndarray = field(init=False)
    normA2: np.ndarray = field(init=False)
    normAring2: np.ndarray = field(init=False)
    ratio: np.ndarray = field(init=False)

    def __post_init__(self):
        for name in ("param", "z", "r", "kappa_ax", "kappa_rot"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        ka, kr, n = self.kappa_ax, self.kappa_rot, self.n
        if not (np.all(np.isfinite(ka)) and np.all(np.isfinite(kr))):
            raise NonFinite("non-finite principal curvature")
        H = ka + (n - 1) * kr
        # |A|^2 - H^2/n written without cancellation; never negative
        ring = (n - 1) / n * (ka - kr) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(H > 0, np.minimum(ka, kr) / np.where(H > 0, H, 1.0), np.nan)
        kmin = ka if n == 1 else np.minimum(ka, kr)
        kmax = ka if n == 1 else np.maximum(ka, kr)
        if n == 1:
            ratio = np.where(H > 0, 1.0, np.nan)
        vals = dict(kappa_min=kmin, kappa_max=kmax, H=H,
                    normA2=ka**2 + (n - 1) * kr**2, normAring2=ring, ratio=ratio)
        for k, v in vals.items():
            object.__setattr__(self, k, _frozen(v))

    @property
    def size(self) -> int:
        return self.param.size

    @classmethod
    def umbilic(cls, n, param, z, r, H) -> "CurvatureField":
        """Field with prescribed mean curvature and equal principal curvatures."""
        k = np.asarray(H, dtype=float) / n
        return cls(n, param, z, r, k, k)

    def to_csv(self, path) -> None:
        ring = trace_free_norm(self)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for i in range(self.size):
                w.writerow([i] + [repr(float(v)) for v in (
                    self.param[i], self.z[i], self.r[i], self.kappa_min[i],
                    self.kappa_max[i], self.H[i], ring[i], self.ratio[i])])

    @classmethod
    def from_csv(cls, path, n: int) -> "CurvatureField":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows or tuple(rows[0].keys()) != CSV_COLUMNS:
            raise GeometryError(f"{path}: unexpected CSV header")
        col = {k: np.array([float(r[k]) for r in rows]) for k in CSV_COLUMNS}
        k1, kn, H = col["kappa1"], col["kappan"], col["H"]
        # recover which eigenvalue is the meridian one from H = k_ax + (n-1) k_rot
        ax_is_min = np.abs(k1 + (n - 1) * kn - H) <= np.abs(kn + (n - 1) * k1 - H)
        ka = np.where(ax_is_min, k1, kn)
        kr = np.where(ax_is_min, kn, k1)
        return cls(n, col["param"], col["axis_coord"], col["radius"], ka, kr)


def compute_curvatures(p: Profile) -> CurvatureField:
    """Principal curvatures of ``p`` by centred second-order differences.

    Polar poles take the umbilic limit ``kappa_rot = kappa_ax``; axis-graph
    caps (``r = 0`` at an endpoint) use an even polynomial fit of the axis
    coordinate against the radius.
    """
    if p.size < 5:
        raise GeometryError("at least 5 nodes are required")
    d1, d2 = profile_derivatives(p)
    z, r = p.positions()
    v = p.value
    with np.errstate(divide="ignore", invalid="ignore"):
        if p.kind is ProfileKind.POLAR:
            th = p.param
            D = v**2 + d1**2
            ka = (v**2 + 2 * d1**2 - v * d2) / D**1.5
            kr = (1.0 - d1 / (v * np.tan(th))) / np.sqrt(D)
            for end, idx in zip(p.pole_ends, (0, -1)):
                if end:
                    kr[idx] = ka[idx]
        else:
            interior = np.ones(p.size, dtype=bool)
            caps = p.pole_ends
            if caps[0]:
                interior[0] = False
            if caps[1]:
                interior[-1] = False
            if np.any(v[interior] <= 0):
                raise DegenerateRadius("axis-graph radius vanishes away from a cap")
            W = np.sqrt(1 + d1**2)
            ka = -d2 / W**3
            kr = 1.0 / (v * W)
            x = p.param
            if caps[0]:
                ka[0] = kr[0] = _cap_curvature(v[:3], x[:3])
            if caps[1]:
                ka[-1] = kr[-1] = _cap_curvature(v[::-1][:3], x[-1] - x[::-1][:3])
    if not (np.all(np.isfinite(ka)) and np.all(np.isfinite(kr))):
        raise NonFinite("non-finite curvature from finite differences")
    return CurvatureField(p.n, p.param, z, r, ka, kr)


def trace_free_norm(cf: CurvatureField) -> np.ndarray:
    """|Å| per node."""
    return np.sqrt(np.maximum(cf.normA2 - cf.H**2 / cf.n, 0.0))


def sphere_area(k: int) -> float:
    """Area of the unit sphere S^k."""
    return 2 * math.pi ** ((k + 1) / 2) / math.gamma((k + 1) / 2)


def gauss_integrals(p: Profile) -> tuple[float, float]:
    """Return ``(∫ K dμ, ∫ H^n dμ)`` over a closed polar profile."""
    if not p.is_closed:
        raise NotClosed("gauss_integrals needs a polar profile covering [0, pi]")
    cf = compute_curvatures(p)
    d1, _ = profile_derivatives(p)
    n = p.n
    ds = np.sqrt(p.value**2 + d1**2)
    orbit = sphere_area(n - 1) * cf.r ** (n - 1) if n > 1 else 2.0 * np.ones_like(cf.r)
    K = cf.kappa_ax * cf.kappa_rot ** (n - 1)
    intK = integrate.simpson(K * orbit * ds, x=p.param)
    intHn = integrate.simpson(cf.H**n * orbit * ds, x=p.param)
    return float(intK), float(intHn)


def pinching_constant(cf: CurvatureField, normalized_by: str = "H") -> float:
    """Minimum of ``kappa_1/H`` (default) or ``kappa_1/kappa_n`` over the nodes."""
    if np.any(cf.H <= 0):
        raise NonPositiveH("pinching constant needs H > 0 at every node")
    if normalized_by == "H":
        return float(np.min(cf.kappa_min / cf.H))
    if normalized_by == "kappa":
        return float(np.min(cf.kappa_min / cf.kappa_max))
    raise ValueError(f"normalized_by must be 'H' or 'kappa', not {normalized_by!r}")


# -- convex bodies -------------------------------------------------------
def _segment_distance(pz, pr, z, r) -> float:
    az, ar = z[:-1], r[:-1]
    bz, br = z[1:], r[1:]
    dz, dr = bz - az, br - ar
    L2 = dz * dz + dr * dr
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(L2 > 0, ((pz - az) * dz + (pr - ar) * dr) / np.where(L2 > 0, L2, 1), 0.0)
    s = np.clip(s, 0.0, 1.0)
    return float(np.min(np.hypot(az + s * dz - pz, ar + s * dr - pr)))


@dataclass(frozen=True)
class ConvexBody:
    """Closed convex region bounded by the hypersurface of ``profile``.

    For an axis graph the region is ``{r <= r(x)}``; ``radius_fn`` may supply
    the exact generating function for operations that resample the boundary.
    """

    profile: Profile
    radius_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    convexity_tol: float = 1e-8

    def __post_init__(self):
        cf = compute_curvatures(self.profile)
        scale = max(float(np.max(np.abs(cf.kappa_max))), 1.0)
        if np.min(cf.kappa_min) < -self.convexity_tol * scale:
            raise GeometryError("profile is not convex (kappa_1 < 0)")

    @property
    def bounded(self) -> bool:
        return self.profile.is_closed

    def radius(self, x) -> np.ndarray:
        p = self.profile
        if p.kind is not ProfileKind.AXIS:
            raise GeometryError("radius(x) is defined for axis graphs")
        if self.radius_fn is not None:
            return np.asarray(self.radius_fn(np.asarray(x, dtype=float)), dtype=float)
        return np.interp(x, p.param, p.value)

    def contains(self, z, r, rtol: float = 1e-9) -> np.ndarray:
        """Whether half-plane points ``(z, r)`` lie in the closed body."""
        z = np.asarray(z, dtype=float)
        r = np.abs(np.asarray(r, dtype=float))
        p = self.profile
        if p.kind is ProfileKind.POLAR:
            d = np.hypot(z - p.origin, r)
            th = np.arctan2(r, z - p.origin)
            return d <= np.interp(th, p.param, p.value) * (1 + rtol)
        inside = (z >= p.param[0]) & (z <= p.param[-1])
        return inside & (r <= self.radius(np.clip(z, p.param[0], p.param[-1])) * (1 + rtol))

    def boundary_distance(self, point) -> float:
        """Euclidean distance in R^{n+1} from the half-plane point to the boundary."""
        z, r = self.profile.positions()
        return _segment_distance(float(point[0]), abs(float(point[1])), z, r)

    def inradius(self) -> float:
        """Radius of the largest inscribed ball (infinite for unbounded bodies)."""
        if not self.bounded:
            return math.inf
        z, _ = self.profile.positions()
        res = optimize.minimize_scalar(
            lambda c: -self.boundary_distance((c, 0.0)),
            bounds=(float(z.min()), float(z.max())), method="bounded",
            options={"xatol": 1e-10},
        )
        return float(-res.fun)


def paraboloid_body(n: int, x_max: float = 10.0, nodes: int = 2001) -> ConvexBody:
    """The region above ``u = |y|^2/2``, i.e. ``r(x) = sqrt(2x)``."""
    x = np.linspace(0.0, x_max, nodes)
    fn = lambda x: np.sqrt(2.0 * np.maximum(x, 0.0))  # noqa: E731
    return ConvexBody(Profile(ProfileKind.AXIS, n, x, fn(x)), radius_fn=fn)


def cone_body(n: int, slope: float = 1.0, x_max: float = 10.0, nodes: int = 2001) -> ConvexBody:
    """The region above the cone ``u = slope * |y|``, i.e. ``r(x) = x / slope``."""
    x = np.linspace(0.0, x_max, nodes)
    fn = lambda x: np.maximum(x, 0.0) / slope  # noqa: E731
    return ConvexBody(Profile(ProfileKind.AXIS, n, x, fn(x)), radius_fn=fn)
