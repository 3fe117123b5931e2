"""Line type, weighted homogeneous limit polynomials, anisotropic rescaling
maps and local Hausdorff comparison of convex-domain oracles.

Line type is computed symbolically when the domain carries a polynomial
expansion (exact order by coefficient inspection after composing with the
affine line) and numerically otherwise (log-log slope fitting of maxima over
annuli, with a stability check before rounding to an integer).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyIntersection,
    NoConvergence,
    NotVanishing,
    SpecValidationError,
)
from .geometry import (
    BoundaryPoint,
    _complement_basis,
    cnorm,
    fixed_sphere_directions,
    real_dot,
)
from .models import PolynomialEllipsoid, SiegelDomain

__all__ = [
    "INFINITE_TYPE", "LineTypeResult", "ScalingSequence", "DomainOracle",
    "vanishing_order", "line_type", "homogeneous_model", "HomogeneousModelFit",
    "frankel_scaling", "local_hausdorff_distance",
]

INFINITE_TYPE = math.inf

_ANNULUS_J_MIN = 4
_SLOPE_TOL = 0.15


@dataclass
class LineTypeResult:
    point: BoundaryPoint
    type_value: float               # integer order, or INFINITE_TYPE
    maximizing_line: tuple          # (base, direction)
    cap: int


@dataclass
class ScalingSequence:
    base_point: np.ndarray
    deltas: tuple
    times: np.ndarray
    lambdas: np.ndarray
    maps: list                      # diagonal entries of each scaling map
    domains: list                   # scaled-domain oracles
    kind: str


class DomainOracle:
    """Minimal oracle bundle (defining function + gradient) for comparisons.

    Used for rescaled domains that need not be bounded; only membership and
    gradient queries are required by the Hausdorff machinery.
    """

    def __init__(self, defining_fn, gradient_fn, anchor=None, label="", dim=None):
        self.defining_fn = defining_fn
        self.gradient_fn = gradient_fn
        self.anchor = None if anchor is None else np.asarray(anchor, dtype=complex)
        self.label = label
        if dim is not None:
            self.dim = int(dim)
        elif anchor is not None:
            self.dim = len(self.anchor)

    def r(self, z):
        return self.defining_fn(np.asarray(z, dtype=complex))

    def grad(self, z):
        return self.gradient_fn(np.asarray(z, dtype=complex))

    def __repr__(self):
        return f"<oracle {self.label}>"


# ---------------------------------------------------------------------------
# order of vanishing


def vanishing_order(g, cap=20, n_theta=64):
    """Order of vanishing at 0 of a real-valued function of one complex
    variable.

    Polynomial input (a dict (j, k) -> coefficient of zeta^j conj(zeta)^k)
    gets the exact order by coefficient inspection.  Smooth oracles are
    sampled on annuli of radii 2^-j; consecutive log2-decay slopes must
    stabilize near an integer <= cap, else the order is reported infinite.
    """
    if isinstance(g, dict):
        return _poly_order(g, cap)
    radii = 2.0 ** -np.arange(_ANNULUS_J_MIN, cap + 1)
    thetas = np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False)
    ring = np.exp(1j * thetas)
    maxima = np.array([float(np.max(np.abs(g(r * ring)))) for r in radii])
    g0 = abs(complex(g(np.zeros(1))[0] if np.ndim(g(np.zeros(1))) else g(0.0)))
    scale = max(float(np.max(maxima)), 1.0)
    if g0 > 1e-13 * scale:
        raise NotVanishing(f"|g(0)| = {g0:.3g} does not vanish")
    floor = float(np.max(maxima)) * 1e-13
    valid = maxima > max(floor, 1e-290)
    if not np.any(valid):
        return INFINITE_TYPE
    slopes = []
    for i in range(len(radii) - 1):
        if valid[i] and valid[i + 1]:
            slopes.append((i, np.log2(maxima[i] / maxima[i + 1])))
    if len(slopes) < 3:
        return INFINITE_TYPE
    # deepest run of >= 3 consecutive slopes stable around one integer
    best = None
    run = []
    for idx, s in slopes:
        if run and idx != run[-1][0] + 1:
            run = []
        run.append((idx, s))
        if len(run) >= 3:
            tail = [s for _, s in run[-3:]]
            k = round(float(np.mean(tail)))
            if all(abs(s - k) <= _SLOPE_TOL for s in tail) and 0 <= k <= cap:
                best = k
    if best is None:
        return INFINITE_TYPE
    return int(best)


def _poly_order(terms, cap):
    mags = {key: abs(c) for key, c in terms.items()}
    top = max(mags.values(), default=0.0)
    if top == 0.0:
        return INFINITE_TYPE
    live = [j + k for (j, k), m in mags.items() if m > 1e-11 * top]
    if not live:
        return INFINITE_TYPE
    order = min(live)
    if order == 0:
        raise NotVanishing("restriction has a nonzero constant term")
    return int(order) if order <= cap else INFINITE_TYPE


# ---------------------------------------------------------------------------
# line type


def line_type(dom, x, cap=20, n_starts=32, seed=0):
    """Supremum of vanishing orders of the defining function along affine
    lines through a boundary point.

    Polynomial domains take the exact symbolic path (composition with the
    line, exact coefficient orders) over complex tangent directions plus a
    seeded sphere sample; smooth oracles use the numeric annulus estimator
    with multi-start refinement over the tangent sphere.
    """
    rng = np.random.default_rng(seed)
    a = -x.normal  # outward complex normal
    basis = _complement_basis(a)
    dirs = [np.asarray(b) for b in basis]
    if len(basis):
        raw = (rng.standard_normal((n_starts, len(basis)))
               + 1j * rng.standard_normal((n_starts, len(basis))))
        raw /= np.maximum(cnorm(raw), 1e-300)[:, None]
        dirs += list(raw @ basis)
    dirs.append(a)  # one non-tangent reference line (order 1)
    poly = getattr(dom, "polynomial", None)
    best, best_v = 0, dirs[0]
    for v in dirs:
        if poly is not None:
            order = vanishing_order(poly.compose_line(x.point, v), cap=cap)
        else:
            order = vanishing_order(lambda zeta: dom.r(
                x.point[None, :] + np.atleast_1d(zeta)[:, None] * v[None, :]), cap=cap)
        if order == INFINITE_TYPE:
            return LineTypeResult(x, INFINITE_TYPE, (x.point, v), cap)
        if order > best:
            best, best_v = order, v
    return LineTypeResult(x, int(best), (x.point, best_v), cap)


# ---------------------------------------------------------------------------
# weighted homogeneous limit fits


@dataclass
class HomogeneousModelFit:
    coefficients: dict              # (alpha, beta) -> complex
    residuals: np.ndarray           # per grid time, RMS of the fit residual
    t_grid: np.ndarray
    homogeneity_defect: float
    basis: list

    def value(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape[:-1])
        for (alpha, beta), c in self.coefficients.items():
            za = np.prod(z ** np.array(alpha), axis=-1)
            zb = np.prod(np.conj(z) ** np.array(beta), axis=-1)
            out = out + np.real(c * za * zb)
        return out


def _weighted_basis(dim, deltas, tol=1e-12):
    """Monomial pairs (alpha, beta) of weighted degree exactly 1."""
    caps = [int(np.ceil(1.0 / d)) for d in deltas]
    singles = list(itertools.product(*[range(c + 1) for c in caps]))
    pairs = []
    for alpha in singles:
        for beta in singles:
            deg = sum((a + b) * d for a, b, d in zip(alpha, beta, deltas))
            if abs(deg - 1.0) <= tol and (alpha, beta) >= (beta, alpha):
                pairs.append((alpha, beta))
    return pairs


def homogeneous_model(f, deltas, t_grid, n_samples=96, seed=0, sample_radius=0.9):
    """Fit the weighted homogeneous limit of a boundary graph function.

    Evaluates (1/t) f(0, t^{d_1} z_1, ...) on a fixed sample for decreasing t
    and least-squares fits monomials of weighted degree one (Hermitian pairs
    give real coefficients).  Residuals must not grow as t decreases.
    """
    deltas = tuple(float(d) for d in deltas)
    if not all(0.0 < d < 0.5 for d in deltas):
        raise SpecValidationError("dilation exponents must lie in (0, 1/2)")
    dim = len(deltas)
    t_grid = np.sort(np.asarray(t_grid, dtype=float))[::-1]
    if np.any(t_grid <= 0):
        raise SpecValidationError("t grid must be positive")
    rng = np.random.default_rng(seed)
    z = sample_radius * (rng.uniform(-1, 1, (n_samples, dim))
                         + 1j * rng.uniform(-1, 1, (n_samples, dim)))
    pairs = _weighted_basis(dim, deltas)
    cols, col_meta = [], []
    for alpha, beta in pairs:
        mono = (np.prod(z ** np.array(alpha), axis=-1)
                * np.prod(np.conj(z) ** np.array(beta), axis=-1))
        if alpha == beta:
            cols.append(np.real(mono))
            col_meta.append((alpha, beta, "re"))
        else:
            cols.append(2.0 * np.real(mono))
            col_meta.append((alpha, beta, "re"))
            cols.append(-2.0 * np.imag(mono))
            col_meta.append((alpha, beta, "im"))
    M = np.column_stack(cols) if cols else np.zeros((n_samples, 0))
    residuals = []
    coeff = np.zeros(M.shape[1])
    for t in t_grid:
        zs = z * (t ** np.array(deltas))
        y = np.array([float(f(0.0, zr)) for zr in zs]) / t
        if M.shape[1]:
            coeff, *_ = np.linalg.lstsq(M, y, rcond=None)
            res = float(np.sqrt(np.mean((M @ coeff - y) ** 2)))
        else:
            res = float(np.sqrt(np.mean(y ** 2)))
        residuals.append(res)
    residuals = np.array(residuals)
    if residuals[-1] > max(residuals[0] * (1.0 + 1e-6), 1e-12):
        raise NoConvergence(
            f"fit residuals fail to decrease: {residuals[0]:.3g} -> {residuals[-1]:.3g}")
    coeffs: dict = {}
    for c, (alpha, beta, part) in zip(coeff, col_meta):
        if alpha == beta:
            coeffs[(alpha, beta)] = coeffs.get((alpha, beta), 0.0) + c
        else:
            add = c if part == "re" else 1j * c
            coeffs[(alpha, beta)] = coeffs.get((alpha, beta), 0.0) + add
            coeffs[(beta, alpha)] = np.conj(coeffs[(alpha, beta)])
    fit = HomogeneousModelFit(coefficients=coeffs, residuals=residuals,
                              t_grid=t_grid, homogeneity_defect=0.0,
                              basis=pairs)
    base_vals = fit.value(z)
    scaled_vals = fit.value(z * (0.5 ** np.array(deltas)))
    denom = np.maximum(np.abs(0.5 * base_vals), 1e-30)
    fit.homogeneity_defect = float(np.max(np.abs(scaled_vals - 0.5 * base_vals) / denom))
    return fit


# ---------------------------------------------------------------------------
# anisotropic rescaling


def frankel_scaling(dom, times, deltas=None, base_point=None):
    """Scaling maps diag(lambda, lambda^{d_1}, ...) with lambda = e^{2 t}.

    Siegel-type models scale on coefficients (exactly; the model is invariant
    when the exponents match the weights).  A polynomial ellipsoid at a
    boundary point (w0, 0) is first normalized by the affine change
    zeta_1 = 2i (1 - conj(w0) w), putting the point at the origin with
    complex tangent {zeta_1 = 0} and the domain in {Im zeta_1 > 0}; the
    rescaled oracles then converge to the matching Siegel model.
    """
    times = np.asarray(times, dtype=float)
    lambdas = np.exp(2.0 * times)

    if isinstance(dom, SiegelDomain):
        deltas = tuple(deltas) if deltas is not None else dom.poly.deltas
        maps = [np.concatenate([[lam], lam ** np.array(deltas)]) for lam in lambdas]
        domains = [dom.scaled(lam, deltas) for lam in lambdas]
        base = np.zeros(dom.dim, dtype=complex)
        return ScalingSequence(base, deltas, times, lambdas, maps, domains,
                               kind="siegel")

    if isinstance(dom, PolynomialEllipsoid):
        if base_point is None:
            raise SpecValidationError("ellipsoid scaling requires a boundary point")
        base = np.asarray(base_point, dtype=complex)
        w0 = base[0]
        if abs(abs(w0) - 1.0) > 1e-8 or cnorm(base[1:]) > 1e-8:
            raise SpecValidationError(
                "supported boundary points have |w| = 1 and z = 0")
        deltas = tuple(deltas) if deltas is not None else dom.poly.deltas
        poly = dom.poly

        def normalized_defining(q):
            q = np.asarray(q, dtype=complex)
            z1 = q[..., 0]
            return (np.abs(z1) ** 2 / 4.0 - np.imag(z1) + poly.value(q[..., 1:]))

        def normalized_gradient(q):
            q = np.asarray(q, dtype=complex)
            g = np.empty_like(q)
            g[..., 0] = q[..., 0] / 2.0 - 1j
            g[..., 1:] = 2.0 * poly.dzbar(q[..., 1:])
            return g

        maps, domains = [], []
        for lam in lambdas:
            diag = np.concatenate([[lam], lam ** np.array(deltas)])
            inv = 1.0 / diag

            def defining(q, inv=inv):
                return normalized_defining(np.asarray(q, dtype=complex) * inv)

            def gradient(q, inv=inv):
                return inv * normalized_gradient(np.asarray(q, dtype=complex) * inv)

            maps.append(diag)
            domains.append(DomainOracle(defining, gradient,
                                        anchor=np.array([0.5j] + [0.0] * poly.dim),
                                        label=f"scaled_ellipsoid(lam={lam:g})"))
        return ScalingSequence(base, deltas, times, lambdas, maps, domains,
                               kind="ellipsoid")

    raise SpecValidationError("scaling requires a Siegel model or a polynomial ellipsoid")


# ---------------------------------------------------------------------------
# local Hausdorff distance


def local_hausdorff_distance(A, B, radius, n_dirs=128, anchor_a=None,
                             anchor_b=None):
    """Hausdorff distance between A and B intersected with the test ball.

    Convexity makes support sampling sound: for compact convex sets the
    Hausdorff distance equals the sup over unit directions of the support
    difference, estimated here on a deterministic direction set.  Each
    support value is a constrained maximization of a linear functional over
    {r <= 0} within the ball, polished to a feasible point so the reported
    value never overstates the support.
    """
    dim = _oracle_dim(A)
    if _oracle_dim(B) != dim:
        raise SpecValidationError("oracles have different dimensions")
    dirs = fixed_sphere_directions(dim, n_dirs)
    aa = _feasible_anchor(A, radius, anchor_a)
    ab = _feasible_anchor(B, radius, anchor_b)
    worst = 0.0
    for u in dirs:
        ha = _support_in_ball(A, u, radius, aa)
        hb = _support_in_ball(B, u, radius, ab)
        worst = max(worst, abs(ha - hb))
    return float(worst)


def _oracle_dim(X):
    dim = getattr(X, "dim", None)
    if dim is not None:
        return dim
    anchor = getattr(X, "anchor", None)
    if anchor is None:
        raise SpecValidationError("oracle exposes neither a dimension nor an anchor")
    return len(np.atleast_1d(anchor))


def _feasible_anchor(X, radius, hint):
    candidates = []
    if hint is not None:
        candidates.append(np.asarray(hint, dtype=complex))
    anch = getattr(X, "anchor", None)
    if anch is not None:
        candidates.append(np.asarray(anch, dtype=complex))
    dim = _oracle_dim(X)
    candidates.append(np.zeros(dim, dtype=complex))
    for k in range(1, 8):
        v = np.zeros(dim, dtype=complex)
        v[0] = 0.5j * (0.5 ** (k - 1))
        candidates.append(v)
    for c in candidates:
        if c is None or len(c) != dim:
            continue
        if float(X.r(c)) < 0 and float(cnorm(c)) < radius * (1 - 1e-9):
            return c
    raise EmptyIntersection("no interior point of the oracle inside the test ball")


def _support_in_ball(X, u, radius, anchor):
    """max Re<x, u> over {r <= 0, |x| <= radius}; feasible-point certified."""
    from scipy.optimize import minimize

    u = np.ascontiguousarray(np.asarray(u, dtype=complex))
    sphere_pt = radius * u * (1.0 - 1e-14)
    if float(X.r(sphere_pt)) <= 0:
        return float(radius * real_dot(u, u))
    dim = len(u)
    u_real = u.view(float)

    def pack(xc):
        return np.ascontiguousarray(xc).view(float)

    def unpack(xr):
        return np.ascontiguousarray(xr).view(complex)

    def obj(xr):
        return -float(np.dot(xr, u_real))

    def obj_grad(xr):
        return -u_real

    def con_dom(xr):
        return -float(X.r(unpack(xr)))

    def con_dom_grad(xr):
        return -np.ascontiguousarray(X.grad(unpack(xr))).view(float)

    def con_ball(xr):
        return radius ** 2 - float(np.dot(xr, xr))

    def con_ball_grad(xr):
        return -2.0 * xr

    res = minimize(obj, pack(anchor), jac=obj_grad, method="SLSQP",
                   constraints=[{"type": "ineq", "fun": con_dom, "jac": con_dom_grad},
                                {"type": "ineq", "fun": con_ball, "jac": con_ball_grad}],
                   options={"maxiter": 200, "ftol": 1e-14})
    x = unpack(res.x)
    # pull back to feasibility along the segment to the anchor, then push
    # along +u while feasible: the reported value comes from a feasible point
    if float(X.r(x)) > 0 or cnorm(x) > radius:
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            cand = anchor + mid * (x - anchor)
            if float(X.r(cand)) <= 0 and cnorm(cand) <= radius:
                lo = mid
            else:
                hi = mid
        x = anchor + lo * (x - anchor)
    step = 0.5 * radius
    val = real_dot(x, u)
    for _ in range(60):
        cand = x + step * u
        if float(X.r(cand)) <= 0 and cnorm(cand) <= radius:
            x = cand
            val = real_dot(x, u)
        else:
            step *= 0.5
            if step < 1e-15 * radius:
                break
    return float(val)
