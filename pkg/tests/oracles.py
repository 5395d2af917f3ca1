"""Independent reference computations used as test oracles.

Nothing here calls into mcflab; each routine solves the same mathematical
problem by a different method (spectral collocation, series expansions,
quadrature, exhaustive search).
"""

import math

import numpy as np
from scipy import integrate, special


# -- polar mean curvature, written directly from the parametrisation ------
def polar_H(rho, d1, d2, theta, n):
    """Mean curvature of the hypersurface with polar radius ``rho(theta)``."""
    W = np.sqrt(rho**2 + d1**2)
    k_ax = (rho**2 + 2 * d1**2 - rho * d2) / W**3
    k_rot = (rho * np.sin(theta) - d1 * np.cos(theta)) / (rho * np.sin(theta) * W)
    return k_ax + (n - 1) * k_rot


# -- spectral implicit MCF -------------------------------------------------
class CosineCollocation:
    """Even cosine series on Gauss-Chebyshev angles (poles excluded)."""

    def __init__(self, M):
        self.theta = (np.arange(M) + 0.5) * math.pi / M
        k = np.arange(M)
        self.k = k
        C = np.cos(np.outer(self.theta, k))
        S = np.sin(np.outer(self.theta, k))
        Ci = np.linalg.inv(C)
        self.Ci = Ci
        self.D1 = -S @ np.diag(k) @ Ci
        self.D2 = -C @ np.diag(k**2) @ Ci

    def evaluate(self, values, theta):
        a = self.Ci @ values
        return np.cos(np.outer(np.asarray(theta), self.k)) @ a


def spectral_polar_flow(rho_fn, t_end, n=2, M=48):
    """MCF of a star-shaped hypersurface of revolution by stiff BDF in time.

    ``rho_t = -H sqrt(rho^2 + rho'^2) / rho`` collocated on a cosine basis.
    Returns the collocation object and the radii at ``t_end``.
    """
    cc = CosineCollocation(M)
    th = cc.theta

    def rhs(_, rho):
        d1, d2 = cc.D1 @ rho, cc.D2 @ rho
        H = polar_H(rho, d1, d2, th, n)
        return -H * np.sqrt(rho**2 + d1**2) / rho

    sol = integrate.solve_ivp(rhs, (0.0, t_end), rho_fn(th), method="BDF",
                              rtol=1e-10, atol=1e-12)
    assert sol.success
    return cc, sol.y[:, -1]


# -- spherical heat kernel via Legendre modes ----------------------------
def legendre_heat(rho_fn, eps, kinks=(0.0,), lmax=160, quad=2000):
    """Heat flow on S^2 for time ``eps`` of a zonal function, by modes.

    Returns a callable ``theta -> (f, f', f'')``.  ``kinks`` are the values
    of ``cos(theta)`` where ``rho_fn`` is not smooth; quadrature is split there.
    """
    edges = [-1.0] + sorted(kinks) + [1.0]
    xg, wg = np.polynomial.legendre.leggauss(quad)
    xs, ws = [], []
    for a, b in zip(edges, edges[1:]):
        xs.append(0.5 * (b - a) * xg + 0.5 * (b + a))
        ws.append(0.5 * (b - a) * wg)
    x, w = np.concatenate(xs), np.concatenate(ws)
    f = rho_fn(np.arccos(np.clip(x, -1, 1)))
    ls = np.arange(lmax + 1)
    coef = np.array([(2 * l + 1) / 2 * np.sum(w * f * special.eval_legendre(l, x)) for l in ls])
    coef *= np.exp(-ls * (ls + 1) * eps)

    def at(theta):
        theta = np.asarray(theta, dtype=float)
        c = np.cos(theta)
        P = np.array([special.eval_legendre(l, c) for l in ls])
        # d/dtheta P_l(cos theta) = P_l^1(cos theta) with the Condon-Shortley phase
        P1 = np.array([special.lpmv(1, l, c) for l in ls])
        f0 = coef @ P
        f1 = coef @ P1
        lap = -(coef * ls * (ls + 1)) @ P
        with np.errstate(divide="ignore", invalid="ignore"):
            f2 = np.where(np.sin(theta) > 1e-12, lap - np.cos(theta) / np.sin(theta) * f1, lap / 2)
        return f0, f1, f2

    return at


def max_H_legendre(at, n=2, samples=4001):
    theta = np.linspace(0.0, math.pi, samples)
    f0, f1, f2 = at(theta)
    interior = slice(1, -1)
    H = np.empty_like(theta)
    H[interior] = polar_H(f0[interior], f1[interior], f2[interior], theta[interior], n)
    for i in (0, -1):
        # umbilic pole: kappa = 1/rho - rho''/rho^2 in every direction
        H[i] = n * (1 / f0[i] - f2[i] / f0[i] ** 2)
    return float(np.max(H))


# -- soliton ODEs by fixed-step RK4 ---------------------------------------
def _rk4(f, y0, x0, x1, h):
    steps = int(round((x1 - x0) / h))
    h = (x1 - x0) / steps
    x, y = x0, np.array(y0, dtype=float)
    for _ in range(steps):
        k1 = f(x, y)
        k2 = f(x + h / 2, y + h / 2 * k1)
        k3 = f(x + h / 2, y + h / 2 * k2)
        k4 = f(x + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        x += h
    return y


def rk4_translator(n, rho_end, h, rho0=1e-3):
    """``u''/(1+u'^2) + (n-1) u'/rho = 1`` with ``u = rho^2/(2n) + rho^4/(4n^3(n+2))``."""
    b2, b4 = 1 / (2 * n), 1 / (4 * n**3 * (n + 2))
    y0 = (b2 * rho0**2 + b4 * rho0**4, 2 * b2 * rho0 + 4 * b4 * rho0**3)

    def f(x, y):
        return np.array([y[1], (1 + y[1] ** 2) * (1 - (n - 1) * y[1] / x)])

    return _rk4(f, y0, rho0, rho_end, h)


def rk4_expander(n, tip, rho_end, h, rho0=1e-3):
    """``u''/(1+u'^2) + (n-1) u'/rho = (u - rho u')/2`` with ``u(0) = tip``."""
    b2 = tip / (4 * n)
    b4 = (8 * b2**3 - b2 / 2) / (4 * (n + 2))
    y0 = (tip + b2 * rho0**2 + b4 * rho0**4, 2 * b2 * rho0 + 4 * b4 * rho0**3)

    def f(x, y):
        u, p = y
        return np.array([p, (1 + p**2) * (0.5 * (u - x * p) - (n - 1) * p / x)])

    return _rk4(f, y0, rho0, rho_end, h)


# -- analytic ellipsoid of revolution ------------------------------------
def ellipsoid_curvatures(a, c, phi):
    """Curvatures of ``(z, r) = (c cos phi, a sin phi)`` rotated about the z axis."""
    q = np.sqrt(a**2 * np.cos(phi) ** 2 + c**2 * np.sin(phi) ** 2)
    return a * c / q**3, c / (a * q)


def ellipsoid_integrals(a, c):
    """``(int K, int H^2)`` over the n = 2 ellipsoid by adaptive quadrature."""
    def density(phi, which):
        k_ax, k_rot = ellipsoid_curvatures(a, c, phi)
        q = math.sqrt(a**2 * math.cos(phi) ** 2 + c**2 * math.sin(phi) ** 2)
        dmu = 2 * math.pi * a * math.sin(phi) * q
        return dmu * (k_ax * k_rot if which == "K" else (k_ax + k_rot) ** 2)

    K = integrate.quad(density, 0, math.pi, args=("K",), epsabs=1e-13, epsrel=1e-13)[0]
    H2 = integrate.quad(density, 0, math.pi, args=("H2",), epsabs=1e-13, epsrel=1e-13)[0]
    return K, H2


def ellipsoid_min_ratio(a, c, samples=40001):
    phi = np.linspace(0.0, math.pi, samples)
    k_ax, k_rot = ellipsoid_curvatures(a, c, phi)
    return float(np.min(np.minimum(k_ax, k_rot) / (k_ax + k_rot)))


# -- 2-D computational geometry -----------------------------------------
def inscribed_circle(boundary_z, boundary_r, grid=201):
    """Largest circle inside a region symmetric about ``r = 0``.

    The region is ``|r| <= R(z)`` with the upper boundary given as dense
    samples.  Candidate centres fill a grid over the region; the radius at a
    centre is its distance to the nearest sampled boundary point (of either
    half).  Refines once around the best centre.
    """
    bz = np.concatenate([boundary_z, boundary_z])
    br = np.concatenate([boundary_r, -boundary_r])

    def best(zs, rs):
        Z, R = np.meshgrid(zs, rs, indexing="ij")
        Z, R = Z.ravel(), R.ravel()
        inside = np.abs(R) <= np.interp(Z, boundary_z, boundary_r)
        Z, R = Z[inside], R[inside]
        d = np.full(Z.size, np.inf)
        for s in range(0, bz.size, 2000):
            d = np.minimum(d, np.min(np.hypot(Z[:, None] - bz[None, s:s + 2000],
                                              R[:, None] - br[None, s:s + 2000]), axis=1))
        k = int(np.argmax(d))
        return d[k], Z[k], R[k]

    zs = np.linspace(boundary_z.min(), boundary_z.max(), grid)
    rmax = boundary_r.max()
    rs = np.linspace(-rmax, rmax, grid)
    _, z0, r0 = best(zs, rs)
    hz, hr = zs[1] - zs[0], rs[1] - rs[0]
    d, _, _ = best(np.linspace(z0 - hz, z0 + hz, grid), np.linspace(r0 - hr, r0 + hr, grid))
    return d


# -- spacetime brute force ----------------------------------------------
def history_arrays(hist):
    """Plain arrays ``(times, Z, R, H)`` read once from a history."""
    times = [float(s.t) for s in hist]
    Z = [np.asarray(s.field.z, dtype=float) for s in hist]
    R = [np.asarray(s.field.r, dtype=float) for s in hist]
    H = [np.asarray(s.field.H, dtype=float) for s in hist]
    return times, Z, R, H


def cylinder_scan(arrays, zc, rc, tc, radius, n):
    times, Z, R, _ = arrays
    out = []
    for k, t in enumerate(times):
        if not (tc - radius**2 / (2 * n) < t <= tc):
            continue
        for i in range(len(Z[k])):
            if math.sqrt((Z[k][i] - zc) ** 2 + (R[k][i] - rc) ** 2) <= radius:
                out.append((k, i))
    return out


def check_pick_properties(arrays, seed, result, delta, n):
    """The three defining properties of a picked point, checked over every node."""
    times, Z, R, H = arrays
    ks, i_s = seed
    ky, iy = result
    H0, HY = H[ks][i_s], H[ky][iy]
    zs, rs, ts = Z[ks][i_s], R[ks][i_s], times[ks]
    zy, ry, ty = Z[ky][iy], R[ky][iy], times[ky]
    ro = delta / (2 * H0)
    p1 = (math.hypot(zy - zs, ry - rs) <= ro) and (ts - ro**2 / (2 * n) < ty <= ts)
    p2 = HY >= H0
    ri = delta / (4 * HY)
    members = cylinder_scan(arrays, zy, ry, ty, ri, n)
    p3 = all(H[k][i] <= 2 * HY for k, i in members)
    return p1, p2, p3


def horizon_argmax(arrays, j):
    times, _, _, H = arrays
    best = None
    for k, t in enumerate(times):
        if t < 0 or t > j:
            continue
        for i in range(len(H[k])):
            v = t * (j - t) * H[k][i] ** 2
            if best is None or v > best[0]:
                best = (v, k, i)
    return best
