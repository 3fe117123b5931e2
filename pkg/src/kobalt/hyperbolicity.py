"""Almost-geodesics, quasi-geodesic certification, Gromov-product experiments,
four-point hyperbolicity estimation and visibility probes.

Certification is conservative throughout: the upper quasi-geodesic inequality
is checked against the certified upper distance bound and the lower inequality
against the certified lower bound, so a "pass" survives the bracket widths.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EpsTooLarge, PointOutsideDomain, SameFace, TooFewPoints
from .geometry import (
    boundary_distance_batch,
    cnorm,
    same_complex_tangent,
)
from .metrics import (
    DistanceInterval,
    distance_interval,
    upper_distance,
    _default_hyperplanes,
)

__all__ = [
    "ParamCurve", "QuasiGeodesicCert", "normal_curve", "two_face_curve",
    "certify_quasi_geodesic", "product_dichotomy_experiment", "DichotomyReport",
    "four_point_delta", "Delta4Report", "visibility_probe", "VisibilityReport",
]


@dataclass
class ParamCurve:
    """Parametrized curve in a domain."""

    eval_fn: object
    t_min: float
    t_max: float
    label: str = ""

    def __call__(self, t):
        return self.eval_fn(np.asarray(t, dtype=float))

    def grid(self, n):
        return np.linspace(self.t_min, self.t_max, n)


@dataclass
class QuasiGeodesicCert:
    """Certification report for the two-sided quasi-geodesic inequalities."""

    A: float
    B: float
    pairs: list
    verdicts: list
    all_pass: bool
    B_hat: float          # tightest additive constant at multiplicative 1
    A_hat: float          # tightest multiplicative constant at additive 0
    K_almost: float       # exp(B_hat) combined with the Lipschitz ratio
    intervals: list = field(default_factory=list)

    def as_dict(self):
        """JSON-ready form of the certification report."""
        return {
            "A": self.A, "B": self.B, "all_pass": self.all_pass,
            "B_hat": self.B_hat, "A_hat": self.A_hat, "K_almost": self.K_almost,
            "samples": [
                {"s": s, "t": t, "pass": bool(v),
                 "lower": iv.lower, "upper": iv.upper}
                for (s, t), v, iv in zip(self.pairs, self.verdicts, self.intervals)
            ],
        }


def normal_curve(dom, x, eps, t_max=8.0):
    """Inward-normal approach curve  t -> x + eps * exp(-2t) * n_x.

    The start point x + eps * n_x must be interior; convexity then keeps the
    whole curve inside the domain.
    """
    if eps <= 0:
        raise EpsTooLarge("eps must be positive")
    start = x.point + eps * x.normal
    if not dom.r(start) < 0:
        raise EpsTooLarge(f"x + eps*n_x exits the domain (r = {float(dom.r(start)):.3g})")

    point, normal = x.point.copy(), x.normal.copy()

    def eval_fn(t):
        t = np.asarray(t, dtype=float)
        return point + eps * np.exp(-2.0 * t)[..., None] * normal

    return ParamCurve(eval_fn, 0.0, float(t_max), label="normal_curve")


def two_face_curve(dom, x, y, eps_cap=None, n_bridge_estimate=True):
    """Concatenation of the two inward-normal curves at x and y.

    The curve runs from y (t -> -infinity) through a straight bridge between
    the two inner endpoints to x (t -> +infinity).  The normal offsets are
    chosen by halving from eps_cap (default half the bounding radius) until
    the start points are interior.
    """
    cap = 0.5 * dom.bounding_radius if eps_cap is None else float(eps_cap)

    def pick_eps(bp):
        eps = cap
        for _ in range(40):
            if dom.r(bp.point + eps * bp.normal) < 0:
                return eps
            eps *= 0.5
        raise EpsTooLarge("no admissible normal offset found")

    eps_x, eps_y = pick_eps(x), pick_eps(y)
    ax = x.point + eps_x * x.normal
    ay = y.point + eps_y * y.normal
    bridge = float(cnorm(ax - ay))
    if n_bridge_estimate and bridge > 1e-12:
        up, _, _ = upper_distance(dom, ay, ax, budget="fast")
        L = max(up, 1e-6)
    else:
        L = max(bridge, 1e-6)

    xp, xn, yp, yn = x.point.copy(), x.normal.copy(), y.point.copy(), y.normal.copy()

    def eval_fn(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty(t.shape + (dom.dim,), dtype=complex)
        neg = t <= 0.0
        mid = (t > 0.0) & (t < L)
        pos = t >= L
        out[neg] = yp + eps_y * np.exp(2.0 * t[neg])[..., None] * yn
        s = (t[mid] / L)[..., None]
        out[mid] = (1.0 - s) * ay + s * ax
        out[pos] = xp + eps_x * np.exp(-2.0 * (t[pos] - L))[..., None] * xn
        return out if np.ndim(t) else out[0]

    curve = ParamCurve(eval_fn, -6.0, L + 6.0, label="two_face_curve")
    curve.bridge_length = L
    curve.eps = (eps_x, eps_y)
    return curve


def certify_quasi_geodesic(dom, curve, A, B, grid, hyperplanes=None,
                           budget="tight"):
    """Conservative verdicts of the quasi-geodesic inequalities on a grid.

    For each parameter pair (s, t) the upper inequality is checked against
    the certified upper distance bound and the lower inequality against the
    certified lower bound.  Also reports the tightest (1, B_hat) and
    (A_hat, 0) constants consistent with the certified samples, and the
    resulting almost-geodesic constant.
    """
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    pts = curve(grid)
    if np.any(dom.r(pts) >= 0):
        raise PointOutsideDomain("curve sample leaves the domain")
    pairs, verdicts, intervals = [], [], []
    B1 = 0.0
    Ahat = 1.0
    lip = 0.0
    all_pass = True
    for i in range(len(grid)):
        for j in range(i + 1, len(grid)):
            dt = abs(grid[j] - grid[i])
            iv = distance_interval(dom, pts[i], pts[j], hyperplanes=hyperplanes,
                                   budget=budget)
            ok_upper = iv.upper <= A * dt + B + 1e-9
            ok_lower = iv.lower >= dt / A - B - 1e-9
            ok = bool(ok_upper and ok_lower)
            pairs.append((float(grid[i]), float(grid[j])))
            verdicts.append(ok)
            intervals.append(iv)
            all_pass &= ok
            B1 = max(B1, iv.upper - dt, dt - iv.lower)
            if dt > 0:
                lip = max(lip, iv.upper / dt)
                Ahat = max(Ahat, iv.upper / dt)
                Ahat = max(Ahat, dt / iv.lower if iv.lower > 0 else np.inf)
    B1 = max(B1, 0.0)
    return QuasiGeodesicCert(A=A, B=B, pairs=pairs, verdicts=verdicts,
                             all_pass=all_pass, B_hat=B1, A_hat=Ahat,
                             K_almost=max(np.exp(B1), lip), intervals=intervals)


# ---------------------------------------------------------------------------
# Gromov-product dichotomy


@dataclass
class DichotomyReport:
    """Gromov-product trajectories for boundary approach sequences."""

    levels: np.ndarray
    lower: np.ndarray          # (n, m) matrix of product lower ends
    upper: np.ndarray          # (n, m) matrix of product upper ends
    diag_lower: np.ndarray
    diag_upper: np.ndarray
    same_point: bool


def product_dichotomy_experiment(dom, x, y, o, n_steps, base=2.0,
                                 hyperplanes=None, budget="fast"):
    """Products (p_n | q_m)_o for p_n, q_m approaching x, y along normals.

    p_n = x + base^-n * n_x and q_m = y + base^-m * n_y for n, m = 0..n_steps;
    the full matrix of certified product intervals is returned.  When the two
    base points coincide the diagonal lower trajectory is the distance from o
    (the product collapses), and divergence is read off the trajectory.
    """
    o = dom.require_inside(o)
    levels = np.arange(n_steps + 1)
    p_pts = x.point[None, :] + (base ** -levels)[:, None] * x.normal[None, :]
    q_pts = y.point[None, :] + (base ** -levels)[:, None] * y.normal[None, :]
    if np.any(dom.r(p_pts) >= 0) or np.any(dom.r(q_pts) >= 0):
        raise PointOutsideDomain("approach sequence leaves the domain; shrink base^-0")
    planes = list(_default_hyperplanes(dom) if hyperplanes is None else hyperplanes)
    planes += [x.tangent, y.tangent]
    same_pt = bool(cnorm(x.point - y.point) < 1e-12)

    ivs_po = [distance_interval(dom, p, o, hyperplanes=planes, budget=budget)
              for p in p_pts]
    ivs_oq = [distance_interval(dom, q, o, hyperplanes=planes, budget=budget)
              for q in q_pts]
    n = n_steps + 1
    lower = np.zeros((n, n))
    upper = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if same_pt and i == j:
                iv_pq = DistanceInterval(0.0, 0.0)
            else:
                iv_pq = distance_interval(dom, p_pts[i], q_pts[j],
                                          hyperplanes=planes, budget=budget)
            lo = max(0.0, 0.5 * (ivs_po[i].lower + ivs_oq[j].lower - iv_pq.upper))
            up = 0.5 * (ivs_po[i].upper + ivs_oq[j].upper - iv_pq.lower)
            lower[i, j] = lo
            upper[i, j] = max(up, lo)
    return DichotomyReport(levels=levels, lower=lower, upper=upper,
                           diag_lower=np.diag(lower), diag_upper=np.diag(upper),
                           same_point=same_pt)


# ---------------------------------------------------------------------------
# four-point hyperbolicity constant


@dataclass
class Delta4Report:
    delta_hat: float
    interval_slack: float
    n_points: int


def four_point_delta(points, dom, hyperplanes=None, budget="fast"):
    """Four-point hyperbolicity estimate from Gromov-product midpoints.

    delta_hat = max over quadruples (x, y, z, w) of
    min((x|z)_w, (z|y)_w) - (x|y)_w, computed from midpoint distances of the
    certified brackets; the maximal bracket width is reported as slack.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    n = len(pts)
    if n < 4:
        raise TooFewPoints(f"need at least 4 points, got {n}")
    D = np.zeros((n, n))
    slack = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            iv = distance_interval(dom, pts[i], pts[j], hyperplanes=hyperplanes,
                                   budget=budget)
            D[i, j] = D[j, i] = iv.midpoint
            slack = max(slack, iv.width)
    delta = 0.0
    for w in range(n):
        G = 0.5 * (D[:, w][:, None] + D[w, :][None, :] - D)
        maxmin = np.minimum(G[:, :, None], G[None, :, :]).max(axis=1)
        delta = max(delta, float((maxmin - G).max()))
    return Delta4Report(delta_hat=delta, interval_slack=slack, n_points=n)


# ---------------------------------------------------------------------------
# visibility


@dataclass
class VisibilityReport:
    levels: np.ndarray
    penetration_depth: np.ndarray   # max boundary distance along each path
    endpoint_delta: np.ndarray      # min boundary distance (endpoint scale)
    witness_kinds: list
    stable: bool


def visibility_probe(dom, x, y, n_levels, base=2.0, n_path=65, budget="fast"):
    """Track how deep best upper-bound paths dip into the domain.

    For pairs approaching x and y along their normals, materializes the path
    of the winning upper-bound strategy and records its penetration depth,
    the maximum boundary distance along the path.  Distinct complex tangents
    are required; visibility predicts the depth stays bounded away from 0
    across levels (the paths all meet a fixed compact core), while the
    minimum along the path simply tracks the endpoint scale.
    """
    if same_complex_tangent(x, y):
        raise SameFace("boundary points share their complex tangent hyperplane")
    levels = np.arange(1, n_levels + 1)
    depth = np.zeros(len(levels))
    end_delta = np.zeros(len(levels))
    kinds = []
    for idx, n in enumerate(levels):
        p = x.point + base ** -float(n) * x.normal
        q = y.point + base ** -float(n) * y.normal
        path = _witness_path(dom, p, q, n_path, budget)
        deltas = boundary_distance_batch(dom, path)
        depth[idx] = float(np.max(deltas))
        end_delta[idx] = float(np.min(deltas))
        kinds.append(path.kind if hasattr(path, "kind") else "chord")
    stable = bool(np.min(depth) > 0.25 * np.max(depth))
    return VisibilityReport(levels=levels, penetration_depth=depth,
                            endpoint_delta=end_delta, witness_kinds=kinds,
                            stable=stable)


class _PathArray(np.ndarray):
    pass


def _witness_path(dom, p, q, n_path, budget):
    """Sampled path realizing the best upper-bound strategy for (p, q)."""
    from .metrics import _canonical_pair

    p, q = _canonical_pair(p, q)  # match the orientation of the witness payload
    val, kind, payload = upper_distance(dom, p, q, budget=budget)
    chord = q - p
    L = float(cnorm(chord))
    s = np.linspace(0.0, 1.0, n_path)
    if kind == "slice_disk" and L > 1e-14:
        v = chord / L
        c, rho = payload["center"], payload["radius"]
        za = (0.0 - c) / rho
        zb = (L - c) / rho
        w = (zb - za) / (1.0 - np.conj(za) * zb)
        seg = s * w
        zeta = (seg + za) / (1.0 + np.conj(za) * seg)
        path = p[None, :] + (c + rho * zeta)[:, None] * v[None, :]
    elif kind == "waypoint_chain":
        half = n_path // 2
        path = np.concatenate([
            p[None, :] + np.linspace(0, 1, half)[:, None] * (dom.anchor - p)[None, :],
            dom.anchor[None, :]
            + np.linspace(0, 1, n_path - half)[:, None] * (q - dom.anchor)[None, :],
        ])
    else:
        path = p[None, :] + s[:, None] * chord[None, :]
    out = path.view(_PathArray)
    out.kind = kind
    return out
