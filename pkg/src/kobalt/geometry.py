"""Convex-domain oracles and boundary geometry in C^d.

Domains are represented by defining-function oracles r with Omega = {r < 0},
never by meshes.  Every boundary query reduces to 1D root finding along rays
(bracketing + bisection), and all certified quantities are computed so that
rounding can only weaken a bound, never overstate it.

Complex vectors are numpy arrays of shape (..., d); defining functions and
gradients broadcast over leading axes.  The real gradient of r is stored as a
complex vector g with  dr(v) = Re<v, g>  for the Hermitian pairing
<u, w> = sum_i u_i * conj(w_i).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateGradient,
    DimensionMismatch,
    NotOnBoundary,
    PointOutsideDomain,
    ZeroDirection,
)

BOUNDARY_TOL = 1e-8
GRADIENT_FLOOR = 1e-10
# bisection count along rays; interval shrinks by 2^-k
_RAY_BISECTIONS = 46
_THETA_DEFAULT = 64


def as_point(z, dim=None):
    """Coerce to a finite complex vector of shape (d,)."""
    p = np.asarray(z, dtype=complex)
    if p.ndim != 1 or p.size == 0:
        raise DimensionMismatch(f"expected a 1-d complex vector, got shape {p.shape}")
    if not (np.all(np.isfinite(p.real)) and np.all(np.isfinite(p.imag))):
        raise DimensionMismatch("point has non-finite entries")
    if dim is not None and p.size != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {p.size}")
    return p


def herm(u, v):
    """Hermitian pairing sum_i u_i conj(v_i), broadcasting over leading axes."""
    return np.sum(np.asarray(u) * np.conj(np.asarray(v)), axis=-1)


def cnorm(u):
    """Euclidean norm over the last axis."""
    u = np.asarray(u)
    return np.sqrt(np.sum(np.abs(u) ** 2, axis=-1))


def real_dot(u, v):
    """Real inner product Re<u, v> (the underlying R^{2d} dot product)."""
    return np.real(herm(u, v))


def sphere_directions(dim, n, rng):
    """n seeded directions on the unit sphere of C^dim (uniform)."""
    raw = rng.standard_normal((n, 2 * dim))
    vec = raw[:, :dim] + 1j * raw[:, dim:]
    return vec / cnorm(vec)[:, None]


_FIXED_DIRECTION_CACHE: dict = {}


def fixed_sphere_directions(dim, n):
    """Deterministic low-discrepancy directions on the unit sphere of C^dim."""
    key = (dim, n)
    hit = _FIXED_DIRECTION_CACHE.get(key)
    if hit is None:
        from scipy.stats import qmc
        from scipy.special import ndtri

        sampler = qmc.Halton(d=2 * dim, scramble=False)
        sampler.fast_forward(1)  # skip the origin sample
        raw = ndtri(np.clip(sampler.random(n), 1e-12, 1 - 1e-12))
        vec = raw[:, :dim] + 1j * raw[:, dim:]
        hit = vec / cnorm(vec)[:, None]
        hit.setflags(write=False)
        _FIXED_DIRECTION_CACHE[key] = hit
    return hit


@dataclass(frozen=True)
class ComplexHyperplane:
    """Complex hyperplane H = {z : <z, normal> = offset} with ||normal|| = 1.

    ``inward_phase`` (a unit complex number), when set, certifies that
    Im(inward_phase * (<z, normal> - offset)) > 0 on the domain the plane
    supports, i.e. composing with the phase is a holomorphic projection into
    the upper half plane.  Planes built from boundary tangents carry it.
    """

    normal: np.ndarray
    offset: complex
    inward_phase: complex | None = None

    def distance(self, z):
        """Euclidean distance from z (shape (..., d)) to the hyperplane."""
        return np.abs(herm(z, self.normal) - self.offset)

    def halfplane_coord(self, z):
        """Holomorphic half-plane coordinate; requires ``inward_phase``."""
        if self.inward_phase is None:
            raise ValueError("hyperplane has no certified half-plane phase")
        return self.inward_phase * (herm(z, self.normal) - self.offset)

    def contains(self, z, tol=1e-9):
        return bool(self.distance(z) <= tol)


@dataclass(frozen=True)
class BoundaryPoint:
    """Boundary point with inward unit normal and complex tangent hyperplane."""

    point: np.ndarray
    normal: np.ndarray
    tangent: ComplexHyperplane


class ConvexDomain:
    """Oracle bundle for a bounded convex domain Omega = {r < 0} in C^d.

    Parameters
    ----------
    dim : int
        Complex dimension d.
    defining_fn : callable
        r(z) -> real, broadcasting over input shape (..., d).
    gradient_fn : callable
        real gradient of r as a complex vector field (..., d), with
        dr(v) = Re<v, g>.
    bounding_radius : float
        Euclidean radius of a ball (about the origin) containing Omega.
    anchor : array, optional
        A strictly interior point (defaults to the origin).
    smoothness : {"C1alpha", "Cinfty"}
        Declarative smoothness tag; no alpha is estimated.
    support_fn : callable, optional
        Exact real support function u -> sup_Omega Re<z, u>.  Used to sharpen
        certified bounds when available; numeric fallback otherwise.
    """

    def __init__(self, dim, defining_fn, gradient_fn, bounding_radius,
                 anchor=None, smoothness="Cinfty", support_fn=None,
                 support_batch_fn=None, label=""):
        self.dim = int(dim)
        self.defining_fn = defining_fn
        self.gradient_fn = gradient_fn
        self.bounding_radius = float(bounding_radius)
        self.smoothness_tag = smoothness
        self.support_fn = support_fn
        self.support_batch_fn = support_batch_fn
        self.label = label
        self.anchor = (np.zeros(self.dim, dtype=complex) if anchor is None
                       else as_point(anchor, self.dim))
        if self.r(self.anchor) >= 0:
            raise PointOutsideDomain("anchor is not interior to the domain")
        self._caches: dict = {}

    # -- oracle access ----------------------------------------------------

    def r(self, z):
        return self.defining_fn(np.asarray(z, dtype=complex))

    def grad(self, z):
        return self.gradient_fn(np.asarray(z, dtype=complex))

    def contains(self, z, tol=0.0):
        return self.r(z) < -tol

    def require_inside(self, p, what="point"):
        p = as_point(p, self.dim)
        if not self.r(p) < 0:
            raise PointOutsideDomain(f"{what} has r = {float(self.r(p)):.3g} >= 0")
        return p

    def support(self, u):
        """sup over Omega of Re<z, u>; exact when support_fn is present."""
        if self.support_fn is not None:
            return float(self.support_fn(np.asarray(u, dtype=complex)))
        return _support_numeric(self, np.asarray(u, dtype=complex))

    def support_batch(self, us):
        """Vectorized support values for directions of shape (n, d)."""
        us = np.asarray(us, dtype=complex)
        if self.support_batch_fn is not None:
            return np.asarray(self.support_batch_fn(us), dtype=float)
        return np.array([self.support(u) for u in us])

    def __repr__(self):
        tag = self.label or type(self).__name__
        return f"<{tag} d={self.dim} R={self.bounding_radius:g}>"


# ---------------------------------------------------------------------------
# ray root finding


def ray_to_boundary(dom, p, dirs):
    """Parameters t > 0 with r(p + t*dirs) = 0, vectorized over rays.

    ``p`` must be interior; ``dirs`` has shape (n, d) and need not be
    normalized.  Bisection to ~1e-16 relative in t.
    """
    p = np.asarray(p, dtype=complex)
    dirs = np.atleast_2d(np.asarray(dirs, dtype=complex))
    speed = cnorm(dirs)
    if np.any(speed == 0):
        raise ZeroDirection("zero direction in ray bundle")
    hi = np.full(len(dirs), 2.0) * (dom.bounding_radius + cnorm(p)) / speed
    # outside the bounding ball r >= 0 is guaranteed, but double defensively
    for _ in range(6):
        bad = dom.r(p + hi[:, None] * dirs) < 0
        if not np.any(bad):
            break
        hi[bad] *= 2.0
    lo = np.zeros_like(hi)
    for _ in range(_RAY_BISECTIONS):
        mid = 0.5 * (lo + hi)
        inside = dom.r(p + mid[:, None] * dirs) < 0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return 0.5 * (lo + hi)


def slice_radii(dom, points, unit_v, n_theta=24, zoom_rounds=3, bisections=None):
    """Batched minimum ray length within the complex lines points + C*unit_v.

    For each point, scans rays along e^{i theta} * unit_v over a coarse theta
    grid and zooms the grid around the running argmin.  Returns an estimate of
    each slice's inner radius (not yet certified; see certify_slice_radii).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    npts = len(pts)
    thetas = np.broadcast_to(
        np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False), (npts, n_theta)).copy()
    width = np.full(npts, 2 * np.pi / n_theta)
    best = np.full(npts, np.inf)
    best_theta = np.zeros(npts)
    for round_idx in range(zoom_rounds + 1):
        dirs = np.exp(1j * thetas)[..., None] * unit_v
        t = _ray_batch(dom, pts[:, None, :], dirs, bisections=bisections)
        k = np.argmin(t, axis=1)
        tmin = t[np.arange(npts), k]
        improved = tmin < best
        best = np.where(improved, tmin, best)
        best_theta = np.where(improved, thetas[np.arange(npts), k], best_theta)
        if round_idx == zoom_rounds:
            break
        grid = np.linspace(-1.0, 1.0, 9)
        thetas = best_theta[:, None] + width[:, None] * grid[None, :]
        width = width * (2.2 / 8.0)
    return best if best.ndim else float(best)


def _ray_batch(dom, base_pts, dirs, bisections=None):
    """Bisection roots along ray bundles; base_pts broadcasts against dirs."""
    speed = cnorm(dirs)
    hi = 2.0 * (dom.bounding_radius + cnorm(base_pts)) / np.maximum(speed, 1e-300)
    for _ in range(6):
        bad = dom.r(base_pts + hi[..., None] * dirs) < 0
        if not np.any(bad):
            break
        hi = np.where(bad, 2.0 * hi, hi)
    lo = np.zeros_like(hi)
    for _ in range(bisections or _RAY_BISECTIONS):
        mid = 0.5 * (lo + hi)
        inside = dom.r(base_pts + mid[..., None] * dirs) < 0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return 0.5 * (lo + hi)


def certify_slice_radii(dom, points, unit_v, radii, n_vertices=1024, rounds=40):
    """Certified inner radii of planar slices via inscribed verified polygons.

    Vertices of a regular n-gon at the candidate radius are checked to be
    inside the domain; on failure the radius backs off geometrically.  The
    certified value is the polygon's inscribed-circle radius (one factor of
    cos(pi/n) below the verified vertex radius), so rounding can only make
    the reported radius smaller than the true one.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    rho = np.asarray(radii, dtype=float).reshape(len(pts)).copy() * (1.0 - 1e-12)
    ring = np.exp(1j * np.linspace(0.0, 2 * np.pi, n_vertices, endpoint=False))
    active = np.ones(len(pts), dtype=bool)
    for _ in range(rounds):
        if not np.any(active):
            break
        probe = (pts[active, None, :]
                 + rho[active, None, None] * ring[None, :, None] * unit_v[None, None, :])
        ok = np.all(dom.r(probe) < 0, axis=1)
        idx = np.flatnonzero(active)
        rho[idx[~ok]] *= 0.5 ** 0.25
        active[idx[ok]] = False
    rho[active] = 0.0
    out = rho * np.cos(np.pi / n_vertices)
    return out if np.ndim(radii) else float(out[0])


def directional_boundary_distance(dom, p, v, n_theta=_THETA_DEFAULT, refine=True,
                                  certify_n=0):
    """Distance from p to the boundary within the complex line p + C*v.

    Scans rays p + t e^{i theta} v over a theta grid, zooming near the
    minimum.  With ``certify_n`` > 0 the result is a certified inner radius
    of the planar slice at p (inscribed circle of a verified polygon), which
    can only understate the true distance.
    """
    p = dom.require_inside(p)
    v = as_point(v, dom.dim)
    nv = cnorm(v)
    if nv < 1e-15:
        raise ZeroDirection("direction has norm < 1e-15")
    unit_v = v / nv
    est = slice_radii(dom, p[None, :], unit_v, n_theta=n_theta,
                      zoom_rounds=4 if refine else 0)
    est = float(est[0])
    if certify_n:
        return float(certify_slice_radii(dom, p[None, :], unit_v, est, certify_n))
    return est


def nearest_boundary_point(dom, p, n_dirs=None, polish_iters=16, pattern_rounds=14):
    """(distance, boundary point) realizing delta_Omega(p).

    Coarse direction scan over the real sphere, then an alternating
    gradient-direction fixed point with a pattern-search fallback; convexity
    makes the nearest-point problem well behaved.
    """
    p = dom.require_inside(p)
    d = dom.dim
    if n_dirs is None:
        n_dirs = max(32, 16 * d)
    dirs = fixed_sphere_directions(d, n_dirs)
    t = ray_to_boundary(dom, p, dirs)
    k = int(np.argmin(t))
    best_t, best_u = float(t[k]), dirs[k]
    # fixed point: the optimal direction is the outward gradient direction
    u = best_u
    for _ in range(polish_iters):
        y = p + best_t * u
        g = dom.grad(y)
        ng = cnorm(g)
        if ng < GRADIENT_FLOOR:
            break
        u_new = g / ng
        t_new = float(ray_to_boundary(dom, p, u_new[None, :])[0])
        if t_new < best_t:
            best_t, u = t_new, u_new
            best_u = u_new
        else:
            # damped blend; stop once progress stalls
            mix = u + u_new
            nm = cnorm(mix)
            if nm < 1e-14:
                break
            u_try = mix / nm
            t_try = float(ray_to_boundary(dom, p, u_try[None, :])[0])
            if t_try < best_t - 1e-15:
                best_t, u, best_u = t_try, u_try, u_try
            else:
                break
    best_t, best_u = _pattern_min_ray(dom, p, best_u, best_t, rounds=pattern_rounds)
    return best_t, p + best_t * best_u


def _pattern_min_ray(dom, p, u0, t0, rounds=14):
    """Pattern search over sphere directions minimizing ray length."""
    d = dom.dim
    basis = np.eye(2 * d)
    u, best = u0, t0
    step = 0.2
    for _ in range(rounds):
        cand = []
        for b in basis:
            dv = b[:d] + 1j * b[d:]
            for s in (step, -step):
                w = u + s * dv
                cand.append(w / cnorm(w))
        cand = np.array(cand)
        t = ray_to_boundary(dom, p, cand)
        k = int(np.argmin(t))
        if t[k] < best:
            best, u = float(t[k]), cand[k]
        else:
            step *= 0.5
            if step < 1e-9:
                break
    return best, u


def boundary_distance(dom, p, **kw):
    """delta_Omega(p): Euclidean distance from p to the boundary."""
    return nearest_boundary_point(dom, p, **kw)[0]


def boundary_distance_batch(dom, pts, n_dirs=96):
    """Coarse delta_Omega estimates for many points (fixed direction fan).

    Overestimates by O(angular gap^2); intended for diagnostics and trend
    detection, not for certified bounds.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=complex))
    dirs = fixed_sphere_directions(dom.dim, n_dirs)
    t = _ray_batch(dom, pts[:, None, :], dirs[None, :, :])
    return np.min(t, axis=1)


# ---------------------------------------------------------------------------
# boundary data


def boundary_data(dom, x, boundary_tol=BOUNDARY_TOL):
    """Inward unit normal and complex tangent hyperplane at x in dOmega.

    The complex tangent is the kernel of the (1,0) part of the gradient,
    i.e. {z : <z, a> = <x, a>} for the unit outward complex normal a.
    """
    x = as_point(x, dom.dim)
    rx = float(dom.r(x))
    if abs(rx) > boundary_tol:
        raise NotOnBoundary(f"|r(x)| = {abs(rx):.3g} exceeds {boundary_tol:g}")
    g = dom.grad(x)
    ng = cnorm(g)
    if ng < GRADIENT_FLOOR:
        raise DegenerateGradient(f"gradient norm {ng:.3g} below floor")
    a = g / ng
    tangent = ComplexHyperplane(normal=a, offset=complex(herm(x, a)),
                                inward_phase=-1j)
    return BoundaryPoint(point=x, normal=-a, tangent=tangent)


def same_complex_tangent(a, b, tol=1e-6):
    """True iff two boundary points share their complex tangent hyperplane.

    Normals must be collinear up to phase and offsets must match after the
    phase is aligned.
    """
    ha, hb = a.tangent, b.tangent
    ip = herm(hb.normal, ha.normal)
    if abs(abs(ip) - 1.0) > tol:
        return False
    phase = ip / abs(ip)
    if cnorm(hb.normal - phase * ha.normal) > tol:
        return False
    return abs(hb.offset - phase * ha.offset) <= tol


def supporting_hyperplanes(dom, n_samples, seed, verify_samples=128,
                           disjoint_tol=BOUNDARY_TOL):
    """Seeded boundary tangent hyperplanes, verified disjoint from Omega.

    Convexity guarantees tangent planes are disjoint from the open domain;
    the verification minimizes r over sampled points of H inside the bounding
    ball and drops any plane violating r >= -disjoint_tol.
    """
    if n_samples < 1:
        return []
    rng = np.random.default_rng(seed)
    dirs = sphere_directions(dom.dim, n_samples, rng)
    t = ray_to_boundary(dom, dom.anchor, dirs)
    planes = []
    for k in range(n_samples):
        x = dom.anchor + t[k] * dirs[k]
        try:
            bp = boundary_data(dom, x, boundary_tol=1e-6)
        except (NotOnBoundary, DegenerateGradient):
            continue
        H = bp.tangent
        if _min_r_on_hyperplane(dom, H, rng, verify_samples) >= -disjoint_tol:
            planes.append(H)
    return planes


def _min_r_on_hyperplane(dom, H, rng, n_samples):
    """Sampled minimum of r over H intersected with the bounding ball."""
    d = dom.dim
    # complex orthonormal basis of the orthogonal complement of the normal
    basis = _complement_basis(H.normal)
    x0 = H.offset * H.normal  # closest point of H to the origin
    if basis.size == 0:  # d == 1: the hyperplane is a single point
        return float(dom.r(x0))
    R = dom.bounding_radius
    coeff = (rng.standard_normal((n_samples, d - 1))
             + 1j * rng.standard_normal((n_samples, d - 1)))
    coeff *= R / np.maximum(cnorm(coeff), 1e-12)[:, None]
    coeff *= rng.uniform(0, 1, n_samples)[:, None] ** (1.0 / max(2 * d - 2, 1))
    pts = x0[None, :] + coeff @ basis
    vals = dom.r(pts)
    k = int(np.argmin(vals))
    best, bc = float(vals[k]), coeff[k]
    # local pattern polish in the plane coordinates
    step = 0.25 * R
    eye = np.eye(d - 1)
    for _ in range(16):
        cand = [bc + s * e for e in eye for s in (step, -step)]
        cand += [bc + s * 1j * e for e in eye for s in (step, -step)]
        cand = np.array(cand)
        vals = dom.r(x0[None, :] + cand @ basis)
        j = int(np.argmin(vals))
        if vals[j] < best:
            best, bc = float(vals[j]), cand[j]
        else:
            step *= 0.5
            if step < 1e-10:
                break
    return best


def _complement_basis(a):
    """Complex orthonormal basis of the Hermitian complement of a unit vector."""
    d = a.size
    if d == 1:
        return np.zeros((0, 1), dtype=complex)
    cols = np.eye(d, dtype=complex)
    mat = np.concatenate([a[None, :], cols], axis=0)
    q, _ = np.linalg.qr(mat.conj().T)
    return q[:, 1:d].T.conj()


# ---------------------------------------------------------------------------
# support values (numeric fallback)


def _support_numeric(dom, u, iters=80):
    """sup over Omega of Re<z, u> by a boundary ascent walk."""
    nu = cnorm(u)
    if nu < 1e-15:
        return 0.0
    w = u / nu
    t = float(ray_to_boundary(dom, dom.anchor, w[None, :])[0])
    x = dom.anchor + t * w
    best = real_dot(x, u)
    step = 0.25 * dom.bounding_radius
    for _ in range(iters):
        g = dom.grad(x)
        ng = cnorm(g)
        if ng < GRADIENT_FLOOR:
            break
        gh = g / ng
        tau = u - real_dot(u, gh) * gh
        ntau = cnorm(tau)
        if ntau < 1e-13 * nu:
            break
        y = x + step * tau / ntau
        # retract to the boundary along the ray from the anchor
        dirv = y - dom.anchor
        t = float(ray_to_boundary(dom, dom.anchor, dirv[None, :])[0])
        y = dom.anchor + min(t, 1.0) * dirv
        val = real_dot(y, u)
        if val > best:
            best, x = val, y
        else:
            step *= 0.5
            if step < 1e-12:
                break
    return float(best)


def support_value(dom, u):
    """Real support function of the domain in direction u (Re<z,u> form)."""
    return dom.support(u)


# ---------------------------------------------------------------------------
# probes used by constructors and tests


def sample_interior(dom, n, rng, radius_cap=None):
    """n seeded interior points, uniform on the admissible part of Omega.

    With ``radius_cap`` set, rejection-samples uniformly from the Euclidean
    ball of that radius intersected with the domain.
    """
    cap = dom.bounding_radius if radius_cap is None else float(radius_cap)
    out = []
    while len(out) < n:
        m = max(4 * (n - len(out)), 16)
        u = sphere_directions(dom.dim, m, rng)
        rad = cap * rng.uniform(0.0, 1.0, m) ** (1.0 / (2 * dom.dim))
        pts = rad[:, None] * u
        good = dom.r(pts) < 0
        if radius_cap is not None:
            good &= cnorm(pts) <= cap
        out.extend(pts[good][: n - len(out)])
    return np.array(out)


def validate_domain(dom, n_samples=400, seed=0, tol=1e-9):
    """Sampled checks of the convex-domain contract.

    Verifies midpoint convexity of the defining function, nonvanishing
    gradients at sampled boundary points, and positivity of r on the
    bounding sphere.  Returns a dict of findings; raises nothing.
    """
    rng = np.random.default_rng(seed)
    report = {"convexity_violation": convexity_probe(dom, n_samples, seed, tol)}
    dirs = sphere_directions(dom.dim, n_samples, rng)
    t = ray_to_boundary(dom, dom.anchor, dirs)
    grads = cnorm(dom.grad(dom.anchor + t[:, None] * dirs))
    report["min_boundary_gradient"] = float(np.min(grads))
    sphere = dom.bounding_radius * sphere_directions(dom.dim, n_samples, rng)
    report["min_r_on_bounding_sphere"] = float(np.min(dom.r(sphere)))
    report["ok"] = (report["convexity_violation"] <= tol
                    and report["min_boundary_gradient"] > GRADIENT_FLOOR
                    and report["min_r_on_bounding_sphere"] > 0.0)
    return report


def convexity_probe(dom, n_pairs=1000, seed=0, tol=1e-9):
    """Sampled midpoint-convexity check of the defining function.

    Returns the worst violation r(mid) - max(r(p), r(q)); convex oracles give
    values <= tol.
    """
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < 2 * n_pairs:
        cand = (rng.uniform(-1, 1, (4 * n_pairs, dom.dim))
                + 1j * rng.uniform(-1, 1, (4 * n_pairs, dom.dim)))
        cand *= dom.bounding_radius
        cand = cand[dom.r(cand) < 0]
        pts.extend(cand[: 2 * n_pairs - len(pts)])
    pts = np.array(pts)
    p, q = pts[:n_pairs], pts[n_pairs:]
    lam = rng.uniform(0, 1, n_pairs)[:, None]
    mid = lam * p + (1 - lam) * q
    viol = dom.r(mid) - np.maximum(dom.r(p), dom.r(q))
    return float(np.max(viol))
