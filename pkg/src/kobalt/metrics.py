"""Certified two-sided bounds on Kobayashi distances and Gromov products.

Every bound is a consequence of the distance-decreasing property of the
Kobayashi metric under holomorphic maps:

* lower bounds come from holomorphic projections of the domain into the unit
  disk or the upper half plane (complex-affine functionals composed with a
  certified enclosure of the planar image), including the classical
  disjoint-hyperplane bound 0.5*|log(d(H,p)/d(H,q))|;
* upper bounds come from holomorphic disks inside the domain: a single
  analytic disk in the complex line through the two points, or a chain of
  such disks along a path, combined by the triangle inequality.

All enclosure radii are inflated and all inscribed radii are shrunk so that
floating-point error can only widen a bracket, never invalidate it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    InternalInconsistency,
    OutsideDisk,
    OutsideHalfplane,
    ZeroDirection,
)
from .geometry import (
    _complement_basis,
    as_point,
    certify_slice_radii,
    cnorm,
    herm,
    nearest_boundary_point,
    slice_radii,
    supporting_hyperplanes,
)

DEFAULT_HYPERPLANE_COUNT = 64
DEFAULT_HYPERPLANE_SEED = 20240801
# polygon sizes for certified inscribed disks
_CERT_VERTICES = {"orbit": 512, "fast": 2048, "tight": 16384}
_CHAIN_CERT_VERTICES = {"orbit": 256, "fast": 512, "tight": 1024}
_CHAIN_SEGMENT_CAP = {"orbit": 0.25, "fast": 0.12, "tight": 0.05}
_ENCLOSURE_GRID = 192
_ENCLOSURE_GRID_NUMERIC = 48


@dataclass(frozen=True)
class DistanceInterval:
    """Certified bracket [lower, upper] with witness descriptions."""

    lower: float
    upper: float
    lower_witness: str = ""
    upper_witness: str = ""

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper + 1e-9) or not np.isfinite(self.upper):
            raise InternalInconsistency(
                f"invalid bracket [{self.lower}, {self.upper}]")

    @property
    def width(self):
        return self.upper - self.lower

    @property
    def midpoint(self):
        return 0.5 * (self.lower + self.upper)

    def __contains__(self, value):
        return self.lower - 1e-12 <= value <= self.upper + 1e-12


@dataclass(frozen=True)
class MetricSample:
    """Bracket on the infinitesimal metric at a point in a direction."""

    point: np.ndarray
    direction: np.ndarray
    lower: float
    upper: float


# ---------------------------------------------------------------------------
# exact one-dimensional formulas


def dist_disk(a, b):
    """Poincare (= Kobayashi) distance on the unit disk."""
    a, b = complex(a), complex(b)
    if abs(a) >= 1.0 or abs(b) >= 1.0:
        raise OutsideDisk(f"|{a}|, |{b}| must be < 1")
    return float(np.arctanh(abs((a - b) / (1.0 - a * np.conj(b)))))


def _acosh1p(x):
    """arccosh(1 + x) for x >= 0, accurate near 0."""
    return np.log1p(x + np.sqrt(x * (x + 2.0)))


def dist_halfplane(a, b):
    """Poincare (= Kobayashi) distance on the upper half plane."""
    a, b = complex(a), complex(b)
    if a.imag <= 0.0 or b.imag <= 0.0:
        raise OutsideHalfplane(f"Im {a}, Im {b} must be > 0")
    u = abs(a - b) ** 2 / (2.0 * a.imag * b.imag)
    return float(0.5 * _acosh1p(u))


# ---------------------------------------------------------------------------
# planar enclosures of projected domains


def _normalize_direction(a):
    """Phase-normalize a direction (first sizable entry made real positive)."""
    a = np.asarray(a, dtype=complex)
    k = int(np.argmax(np.abs(a)))
    phase = a[k] / abs(a[k])
    return a / phase, phase


def _enclosing_disk(dom, a, coarse=False):
    """Disk certified to contain the image of Omega under z -> <z, a>.

    Support samples of the planar image on a theta grid give supporting
    half planes; the Chebyshev center of their envelope is the disk center
    and the radius is the sampled maximum plus a second-difference inflation
    covering the gap between grid points (so the enclosure stays valid; a
    coarse grid only loosens it).  Returns (center, radius).
    """
    a_norm, phase = _normalize_direction(a)
    key = tuple(np.round(a_norm.view(float), 12)) + (dom.dim, bool(coarse))
    cache = dom._caches.setdefault("disk_enclosure", {})
    hit = cache.get(key)
    if hit is None:
        n = _ENCLOSURE_GRID if dom.support_fn is not None else _ENCLOSURE_GRID_NUMERIC
        if coarse:
            n = min(n, 48)
        thetas = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        h = dom.support_batch(np.exp(1j * thetas)[:, None] * a_norm[None, :])
        c = _chebyshev_center(thetas, h)
        f = h - np.real(np.exp(-1j * thetas) * c)
        second = np.abs(np.roll(f, -1) - 2 * f + np.roll(f, 1))
        radius = float(np.max(f)) + float(np.max(second)) / 8.0
        radius = radius * (1.0 + 1e-12) + 1e-9
        hit = (c, radius)
        cache[key] = hit
    c, radius = hit
    # un-rotate the center: <z, a> = conj(phase) * <z, a_norm>
    return np.conj(phase) * c, radius


def _chebyshev_center(thetas, h):
    """Center minimizing the maximal support gap.

    f(c) = max_k (h_k - Re(e^{-i theta_k} c)) is convex; alternating golden
    sections on the two real coordinates converge fast and stay dependency
    free.  Any center yields a valid (if looser) enclosure.
    """
    cosk, sink = np.cos(thetas), np.sin(thetas)
    span = float(np.max(h))

    def f(cx, cy):
        return float(np.max(h - cosk * cx - sink * cy))

    cx = cy = 0.0
    width = max(span, 1.0)
    for _ in range(3):
        cx = _golden_min_1d(lambda t: f(t, cy), cx - width, cx + width)
        cy = _golden_min_1d(lambda t: f(cx, t), cy - width, cy + width)
        width *= 0.12
    return complex(cx, cy)


def _golden_min_1d(f, a, b, iters=30):
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return c if fc < fd else d


def disk_projection_bound(dom, a, p, q, coarse=False):
    """Lower bound from the holomorphic projection z -> <z, a> into a disk."""
    c, s = _enclosing_disk(dom, a, coarse=coarse)
    zp = (complex(herm(p, a)) - c) / s
    zq = (complex(herm(q, a)) - c) / s
    if abs(zp) >= 1.0 or abs(zq) >= 1.0:
        return 0.0
    return dist_disk(zp, zq)


def _disk_projection_metric(dom, a, p, v):
    """Infinitesimal version of the disk projection bound."""
    c, s = _enclosing_disk(dom, a)
    zp = complex(herm(p, a)) - c
    if abs(zp) >= s:
        return 0.0
    return float(s * abs(herm(v, a)) / (s * s - abs(zp) ** 2))


def hyperplane_lower_bound(H, p, q):
    """Disjoint-hyperplane bound 0.5*|log(d(H,p)/d(H,q))|."""
    dp, dq = float(H.distance(p)), float(H.distance(q))
    if dp <= 0.0 or dq <= 0.0:
        return 0.0
    return 0.5 * abs(np.log(dp / dq))


def halfplane_refined_bound(H, p, q):
    """Half-plane distance of the projections; needs a certified phase."""
    if H.inward_phase is None:
        return 0.0
    zp, zq = complex(H.halfplane_coord(p)), complex(H.halfplane_coord(q))
    if zp.imag <= 0.0 or zq.imag <= 0.0:
        return 0.0
    return dist_halfplane(zp, zq)


# ---------------------------------------------------------------------------
# lower bounds


def _default_hyperplanes(dom):
    cache = dom._caches.setdefault("default_hyperplanes", {})
    key = (DEFAULT_HYPERPLANE_COUNT, DEFAULT_HYPERPLANE_SEED)
    if key not in cache:
        cache[key] = supporting_hyperplanes(dom, *key)
    return cache[key]


class _PlaneSet:
    """Stacked arrays for vectorized bounds over a hyperplane family."""

    def __init__(self, planes):
        self.planes = list(planes)
        n = len(self.planes)
        d = self.planes[0].normal.size if n else 0
        self.normals = np.array([H.normal for H in self.planes]).reshape(n, d)
        self.offsets = np.array([H.offset for H in self.planes], dtype=complex)
        self.phases = np.array(
            [H.inward_phase if H.inward_phase is not None else np.nan
             for H in self.planes], dtype=complex)

    def coords(self, z):
        """<z, a_i> - b_i for all planes; z is a single point."""
        return np.conj(self.normals) @ np.asarray(z, dtype=complex) - self.offsets

    def best_pair_bound(self, p, q):
        """Max over planes of the log bound and the half-plane refinement."""
        if not self.planes:
            return 0.0, -1, "none"
        cp, cq = self.coords(p), self.coords(q)
        dp, dq = np.abs(cp), np.abs(cq)
        ok = (dp > 0) & (dq > 0)
        logb = np.where(ok, 0.5 * np.abs(np.log(np.where(ok, dp, 1.0) /
                                                np.where(ok, dq, 1.0))), 0.0)
        wp, wq = self.phases * cp, self.phases * cq
        hp_ok = np.isfinite(self.phases.real) & (wp.imag > 0) & (wq.imag > 0)
        u = np.where(hp_ok, np.abs(wp - wq) ** 2
                     / np.maximum(2.0 * wp.imag * wq.imag, 1e-300), 0.0)
        hpb = np.where(hp_ok, 0.5 * _acosh1p(u), 0.0)
        vals = np.maximum(logb, hpb)
        k = int(np.argmax(vals))
        kind = "half-plane projection" if hpb[k] >= logb[k] else "log ratio"
        return float(vals[k]), k, kind


def _plane_set(dom, planes):
    if planes is None:
        cache = dom._caches.setdefault("default_plane_set", {})
        if "set" not in cache:
            cache["set"] = _PlaneSet(_default_hyperplanes(dom))
        return cache["set"]
    return _PlaneSet(planes)


def _nearest_tangent(dom, p):
    """Tangent hyperplane at the boundary point nearest to p (cached)."""
    from .geometry import boundary_data

    cache = dom._caches.setdefault("nearest_tangent", {})
    key = tuple(np.round(np.asarray(p).view(float), 10))
    if key not in cache:
        _, y = nearest_boundary_point(dom, p)
        try:
            cache[key] = boundary_data(dom, y, boundary_tol=1e-5)
        except Exception:
            cache[key] = None
    return cache[key]


def _projection_directions(dom, p, q, budget, tangents):
    """(primary directions, tilt directions) for the projection bounds."""
    primary = []
    chord = q - p
    L = float(cnorm(chord))
    a0 = None
    if L > 1e-14:
        a0 = chord / L
        primary.append(a0)
    primary.extend(np.eye(dom.dim, dtype=complex))
    for bp in tangents:
        if bp is not None:
            primary.append(-bp.normal)  # outward complex normal
    tilts = []
    if budget == "tight" and a0 is not None and dom.dim > 1:
        basis = _complement_basis(a0)
        for b in basis:
            for tau in (0.45, 1.0, 2.0):
                for s in (1.0, -1.0):
                    for ph in (1.0, 1j):
                        w = a0 + s * tau * ph * b
                        tilts.append(w / cnorm(w))
    return primary, tilts


def _canonical_pair(p, q):
    """Deterministic unordered-pair representative (makes brackets symmetric)."""
    kp = tuple(np.ascontiguousarray(np.asarray(p, dtype=complex)).view(float))
    kq = tuple(np.ascontiguousarray(np.asarray(q, dtype=complex)).view(float))
    return (q, p) if kq < kp else (p, q)


def lower_distance(dom, p, q, hyperplanes=None, budget="tight"):
    """Certified lower bound for the Kobayashi distance, with witness.

    Maximizes over disjoint-hyperplane log bounds, their half-plane
    refinements, and disk projections along a family of complex directions.
    """
    p, q = dom.require_inside(p), dom.require_inside(q)
    p, q = _canonical_pair(p, q)
    if cnorm(q - p) < 1e-15:
        return 0.0, "coincident"
    pset = _plane_set(dom, hyperplanes)
    best, k, kind = pset.best_pair_bound(p, q)
    witness = f"hyperplane[{k}] {kind}" if best > 0 else "none"
    tangents = []
    if budget == "tight":
        tangents = [t for t in (_nearest_tangent(dom, p), _nearest_tangent(dom, q))
                    if t is not None]
        for j, bp in enumerate(tangents):
            for kind_name, fn in (("log ratio", hyperplane_lower_bound),
                                  ("half-plane projection", halfplane_refined_bound)):
                b = fn(bp.tangent, p, q)
                if b > best:
                    best, witness = b, f"nearest tangent[{j}] {kind_name}"
    primary, tilts = _projection_directions(dom, p, q, budget, tangents)
    for a in primary:
        b = disk_projection_bound(dom, a, p, q)
        if b > best:
            best, witness = b, "disk projection"
    if tilts:
        # scan tilted directions with coarse enclosures, refine the winner
        scan = [(disk_projection_bound(dom, a, p, q, coarse=True), i)
                for i, a in enumerate(tilts)]
        coarse_best, i_best = max(scan)
        if coarse_best > best:
            best, witness = coarse_best, "disk projection (tilted, coarse)"
        b = disk_projection_bound(dom, tilts[i_best], p, q)
        if b > best:
            best, witness = b, "disk projection (tilted)"
    return best, witness


# ---------------------------------------------------------------------------
# upper bounds


def slice_disk_upper(dom, p, q, budget="tight", extra_centers=()):
    """Upper bound from one analytic disk in the complex line through p, q.

    Searches over disk centers in slice coordinates (pattern search with
    batched radius queries), then certifies the winning disk's radius by an
    inscribed verified polygon.  Returns (value, payload) or None when no
    admissible disk contains both points.
    """
    p, q = np.asarray(p, dtype=complex), np.asarray(q, dtype=complex)
    chord = q - p
    L = float(cnorm(chord))
    if L < 1e-15:
        return 0.0, {"center": 0.0, "radius": 0.0}
    v = chord / L

    def bounds_at(cs):
        cs = np.asarray(cs, dtype=complex)
        pts = p[None, :] + cs[:, None] * v[None, :]
        inside = dom.r(pts) < 0
        rho = np.full(len(cs), -1.0)
        if np.any(inside):
            rho[inside] = slice_radii(dom, pts[inside], v, n_theta=10,
                                      zoom_rounds=0, bisections=28)
        vals = np.full(len(cs), np.inf)
        ok = rho > 0
        za = np.where(ok, np.abs(cs) / np.where(ok, rho, 1.0), np.inf)
        zb = np.where(ok, np.abs(L - cs) / np.where(ok, rho, 1.0), np.inf)
        m = np.maximum(za, zb)
        feas = ok & (m < 1.0)
        if np.any(feas):
            x = (0 - cs[feas]) / rho[feas]
            y = (L - cs[feas]) / rho[feas]
            vals[feas] = np.arctanh(np.minimum(
                np.abs((x - y) / (1.0 - x * np.conj(y))), 1.0 - 1e-16))
        penal = ok & ~feas
        vals[penal] = 50.0 + m[penal]  # infeasible penalty guides the search
        return vals

    grid_rounds, compass_rounds = {"tight": (4, 30), "fast": (3, 14),
                                   "orbit": (1, 5)}[budget]
    # phase A: grid-zoom along the chord (centers on the real axis of the slice)
    c_anchor = complex(herm(dom.anchor - p, v))
    center, width = 0.5 * L, 1.1 * max(L, 0.5)
    c_best, f_best = 0.5 * L + 0j, np.inf
    for _ in range(grid_rounds):
        grid = center + width * np.linspace(-1.0, 1.0, 13)
        cand = np.concatenate([grid.astype(complex), [c_anchor]])
        vals = bounds_at(cand)
        j = int(np.argmin(vals))
        if vals[j] < f_best:
            c_best, f_best = complex(cand[j]), float(vals[j])
            center = c_best.real
        width *= 2.4 / 12.0
    for c in extra_centers:
        vals = bounds_at(np.array([c], dtype=complex))
        if vals[0] < f_best:
            c_best, f_best = complex(c), float(vals[0])
    # phase B: compass polish in the full slice plane
    step = 0.05 * max(L, 0.5)
    for _ in range(compass_rounds):
        cand = np.array([c_best + step, c_best - step,
                         c_best + 1j * step, c_best - 1j * step])
        vals = bounds_at(cand)
        j = int(np.argmin(vals))
        if vals[j] < f_best:
            c_best, f_best = complex(cand[j]), float(vals[j])
        else:
            step *= 0.55
            if step < 1e-10 * max(L, 1.0):
                break
    if not np.isfinite(f_best) or f_best >= 50.0:
        return None
    # certify the winning disk
    pt = p + c_best * v
    if dom.r(pt) >= 0:
        return None
    rho = float(slice_radii(dom, pt[None, :], v, n_theta=64, zoom_rounds=4)[0])
    rho = float(certify_slice_radii(dom, pt[None, :], v, rho,
                                    _CERT_VERTICES[budget]))
    if rho <= 0 or max(abs(c_best), abs(L - c_best)) >= rho:
        return None
    val = dist_disk((0 - c_best) / rho, (L - c_best) / rho)
    return val, {"center": c_best, "radius": rho}


def chain_upper(dom, p, q, budget="tight", max_nodes=400):
    """Upper bound from a chain of analytic disks along the straight chord.

    Nodes on the chord carry certified slice radii; the bound for a chord
    segment is the Poincare distance inside the best covering node disk, and
    segments are split until each contributes at most a fixed cap.  Summing
    segment bounds uses only the triangle inequality, so the result is a
    certified upper bound (no quadrature error).
    """
    p, q = np.asarray(p, dtype=complex), np.asarray(q, dtype=complex)
    chord = q - p
    L = float(cnorm(chord))
    if L < 1e-15:
        return 0.0, {"nodes": 1}
    v = chord / L
    cap = _CHAIN_SEGMENT_CAP[budget]
    nvert = _CHAIN_CERT_VERTICES[budget]

    def certified_radii(us):
        pts = p[None, :] + np.asarray(us)[:, None] * v[None, :]
        est = slice_radii(dom, pts, v, n_theta=16, zoom_rounds=1, bisections=40)
        return certify_slice_radii(dom, pts, v, est, nvert)

    us = np.linspace(0.0, L, 17)
    rhos = certified_radii(us)

    def seg_bounds(a_arr, b_arr):
        """Vectorized best covering-disk bound per segment (inf if uncovered).

        Disks whose Mobius magnitude rounds to 1 count as uncovered rather
        than clipped, so the reported bound can never understate.
        """
        a2 = a_arr[:, None] - us[None, :]
        b2 = b_arr[:, None] - us[None, :]
        r2 = np.broadcast_to(rhos[None, :], a2.shape)
        covered = (np.maximum(np.abs(a2), np.abs(b2)) < r2) & (r2 > 0)
        x = np.where(covered, a2 / np.where(r2 > 0, r2, 1.0), 0.0)
        y = np.where(covered, b2 / np.where(r2 > 0, r2, 1.0), 0.0)
        mob = np.abs(x - y) / np.abs(1.0 - x * y)
        usable = covered & (mob < 1.0)
        vals = np.where(usable, np.arctanh(np.where(mob < 1.0, mob, 0.0)), np.inf)
        return np.min(vals, axis=1)

    for _ in range(40):
        su = np.sort(us)
        a_arr, b_arr = su[:-1], su[1:]
        wide = (b_arr - a_arr) > 1e-13 * max(L, 1.0)
        need = wide & (seg_bounds(a_arr, b_arr) > cap)
        if not np.any(need) or len(us) + int(np.sum(need)) > max_nodes:
            break
        new_pts = 0.5 * (a_arr[need] + b_arr[need])
        us = np.concatenate([us, new_pts])
        rhos = np.concatenate([rhos, certified_radii(new_pts)])

    su = np.sort(us)
    vals = seg_bounds(su[:-1], su[1:])
    if not np.all(np.isfinite(vals)):
        return None
    return float(np.sum(vals)), {"nodes": len(us)}


def upper_distance(dom, p, q, budget="tight"):
    """Certified upper bound for the Kobayashi distance, with witness.

    Minimum over the candidate family: single slice disk, chain of disks
    along the chord, and (when the direct bounds are poor) a two-leg chain
    through the domain anchor.
    """
    p, q = dom.require_inside(p), dom.require_inside(q)
    p, q = _canonical_pair(p, q)
    if cnorm(q - p) < 1e-15:
        return 0.0, "coincident", {}
    best, witness, payload = np.inf, "none", {}
    res = slice_disk_upper(dom, p, q, budget=budget)
    if res is not None:
        best, witness, payload = res[0], "slice_disk", res[1]
    if not np.isfinite(best) or best > 2.5:
        res = chain_upper(dom, p, q, budget=budget)
        if res is not None and res[0] < best:
            best, witness, payload = res[0], "chord_chain", res[1]
    if best > 4.0 and budget == "tight":
        legs = []
        ok = True
        for leg in ((p, dom.anchor), (dom.anchor, q)):
            r = chain_upper(dom, leg[0], leg[1], budget=budget)
            if r is None:
                ok = False
                break
            legs.append(r[0])
        if ok and sum(legs) < best:
            best, witness, payload = sum(legs), "waypoint_chain", {"legs": legs}
    if not np.isfinite(best):
        raise InternalInconsistency("no admissible upper-bound strategy")
    return float(best), witness, payload


# ---------------------------------------------------------------------------
# brackets and products


def distance_interval(dom, p, q, hyperplanes=None, budget="tight"):
    """Certified [lower, upper] bracket on the Kobayashi distance."""
    p, q = dom.require_inside(p), dom.require_inside(q)
    if cnorm(q - p) < 1e-15:
        return DistanceInterval(0.0, 0.0, "coincident", "coincident")
    lo, lo_wit = lower_distance(dom, p, q, hyperplanes=hyperplanes, budget=budget)
    up, up_wit, _ = upper_distance(dom, p, q, budget=budget)
    if lo > up + 1e-9:
        raise InternalInconsistency(
            f"lower bound {lo} exceeds upper bound {up} ({lo_wit} vs {up_wit})")
    return DistanceInterval(lo, max(up, lo), lo_wit, up_wit)


def interval_from_bounds(lower, upper, lw="", uw=""):
    return DistanceInterval(max(0.0, lower), upper, lw, uw)


def gromov_product_interval(dom, o, p, q, hyperplanes=None, budget="tight",
                            precomputed=None):
    """Interval for the Gromov product (p|q)_o = (K(p,o)+K(o,q)-K(p,q))/2.

    Interval arithmetic over the three distance brackets, with the lower end
    clamped at 0 (the product is nonnegative by the triangle inequality).
    """
    ivs = precomputed or {}

    def get(key, a, b):
        if key not in ivs:
            ivs[key] = distance_interval(dom, a, b, hyperplanes=hyperplanes,
                                         budget=budget)
        return ivs[key]

    po = get("po", p, o)
    oq = get("oq", o, q)
    pq = get("pq", p, q)
    lower = max(0.0, 0.5 * (po.lower + oq.lower - pq.upper))
    upper = 0.5 * (po.upper + oq.upper - pq.lower)
    if upper < lower:
        raise InternalInconsistency("product interval inverted; bounds inconsistent")
    return DistanceInterval(lower, upper, "product arithmetic", "product arithmetic")


# ---------------------------------------------------------------------------
# intrinsic brackets on the unbounded Siegel-type model


def siegel_distance_interval(s, q1, q2, n_theta=48):
    """Certified bracket computed intrinsically in Siegel-model coordinates.

    Lower bound: the first coordinate maps the model holomorphically into
    the upper half plane (the balanced polynomial is nonnegative), so the
    half-plane distance of the w-parts is a lower bound.  Upper bound: a
    three-leg path (vertical half-plane slice, horizontal affine disk at a
    safe height, vertical slice), each leg inside an explicitly embedded
    disk or half plane.
    """
    q1 = np.asarray(q1, dtype=complex)
    q2 = np.asarray(q2, dtype=complex)
    if s.defining_fn(q1) >= 0 or s.defining_fn(q2) >= 0:
        raise OutsideHalfplane("points must lie in the model domain")
    w1, z1 = q1[0], q1[1:]
    w2, z2 = q2[0], q2[1:]
    lower = dist_halfplane(w1, w2) if (w1.imag > 0 and w2.imag > 0) else 0.0
    # safe height for the horizontal leg
    seg = z1[None, :] + np.linspace(0, 1, 65)[:, None] * (z2 - z1)[None, :]
    hmax = float(np.max(s.poly.value(seg)))
    height = 4.0 * (hmax + abs(w1) + abs(w2) + 1.0)
    wm = complex(w1.real, height)
    c1, c2 = float(s.poly.value(z1)), float(s.poly.value(z2))
    # vertical leg at z1, horizontal disk leg at w = wm, vertical leg at z2
    up = dist_halfplane(w1 - 1j * c1, wm - 1j * c1)
    up += dist_halfplane(wm - 1j * c2, w2 - 1j * c2)
    L = float(cnorm(z2 - z1))
    if L > 1e-15:
        v = (z2 - z1) / L
        thetas = np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False)
        # slice radius of {p(z) < height} around the midpoint, certified by
        # a verified polygon in the plane of the segment
        mid = 0.5 * (z1 + z2)
        lo_r, hi_r = 0.0, 1.0
        while np.max(s.poly.value(mid[None, :]
                                  + (hi_r * np.exp(1j * thetas))[:, None] * v[None, :])) \
                < height and hi_r < 1e8:
            hi_r *= 2.0
        for _ in range(60):
            mid_r = 0.5 * (lo_r + hi_r)
            ring = mid[None, :] + (mid_r * np.exp(1j * thetas))[:, None] * v[None, :]
            if np.max(s.poly.value(ring)) < height:
                lo_r = mid_r
            else:
                hi_r = mid_r
        rho = lo_r * np.cos(np.pi / n_theta)
        if rho > 0.5 * L:
            up += dist_disk(-0.5 * L / rho, 0.5 * L / rho)
        else:
            up = np.inf
    if not np.isfinite(up):
        raise InternalInconsistency("no admissible intrinsic upper path")
    return DistanceInterval(max(0.0, lower), max(up, lower),
                            "w-projection half plane", "three-leg slice path")


# ---------------------------------------------------------------------------
# infinitesimal bounds


def infinitesimal_bounds(dom, p, v, hyperplanes=None, budget="tight"):
    """Bracket on the infinitesimal Kobayashi metric k(p; v).

    Upper: ||v|| / delta(p; v) with a certified directional distance.  Lower:
    best of the half-plane projection estimates |<v, a_H>| / (2 d(p, H_R))
    over supporting hyperplanes and the disk-projection metric over the
    direction family.
    """
    from .geometry import directional_boundary_distance

    p = dom.require_inside(p)
    v = as_point(v, dom.dim)
    nv = float(cnorm(v))
    if nv < 1e-15:
        raise ZeroDirection("zero direction")
    delta = directional_boundary_distance(dom, p, v, certify_n=4096)
    upper = nv / delta
    planes = list(_default_hyperplanes(dom) if hyperplanes is None else hyperplanes)
    tangents = []
    if budget == "tight":
        tangents = [_nearest_tangent(dom, p)]
        planes.extend(bp.tangent for bp in tangents if bp is not None)
    lower = 0.0
    for H in planes:
        if H.inward_phase is None:
            continue
        height = float(np.imag(H.halfplane_coord(p)))
        if height <= 0:
            continue
        lower = max(lower, abs(complex(herm(v, H.normal))) / (2.0 * height))
    dirs = [v / nv] + list(np.eye(dom.dim, dtype=complex))
    dirs += [-bp.normal for bp in tangents if bp is not None]
    for a in dirs:
        lower = max(lower, _disk_projection_metric(dom, a, p, v))
    if lower > upper + 1e-9:
        raise InternalInconsistency("infinitesimal bounds inverted")
    return MetricSample(point=p, direction=v, lower=lower, upper=max(upper, lower))
