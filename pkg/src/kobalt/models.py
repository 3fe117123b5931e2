"""Model domains: balls, weighted balanced polynomials, polynomial ellipsoids,
Siegel-type unbounded models, the Cayley biholomorphism between them, and a
smooth bounded convex domain with genuine flat complex boundary faces.

Sign convention for the Cayley map: the adopted first coordinate is
(1 + i z0/4)/(1 - i z0/4), which maps {Im z0 > 0} into the unit disk and has
its pole at z0 = -4i, outside the closed upper half plane.  Fractional powers
use the principal branch; the denominator has positive real part on the
closure of the model, so the branch is single valued there.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import exp1

from .errors import (
    DimensionMismatch,
    InvalidPolynomial,
    InvalidRadius,
    PoleProximity,
    SpecValidationError,
)
from .geometry import ConvexDomain, as_point, cnorm

__all__ = [
    "WeightVector", "weight", "WeightedPolynomial", "validate_balanced",
    "BalancedValidation", "PolynomialEllipsoid", "SiegelDomain",
    "cayley_map", "cayley_inverse", "ball_domain", "flat_face_domain",
    "diagonal_ellipsoid", "domain_from_spec", "RealPolynomial",
]


@dataclass(frozen=True)
class WeightVector:
    """Vector of positive integer weights (m_1, ..., m_d)."""

    m: tuple

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(int(v) for v in self.m))
        if len(self.m) == 0 or any(v < 1 for v in self.m):
            raise SpecValidationError(f"weights must be positive integers, got {self.m}")

    def __len__(self):
        return len(self.m)

    @property
    def deltas(self):
        """Dilation exponents delta_i = 1/(2 m_i) as floats."""
        return tuple(1.0 / (2 * v) for v in self.m)


def weight(m, alpha):
    """Weight of a multi-index: sum_i alpha_i / (2 m_i), exact rational."""
    mv = m.m if isinstance(m, WeightVector) else tuple(int(v) for v in m)
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != len(mv):
        raise DimensionMismatch(f"multi-index length {len(alpha)} != weights {len(mv)}")
    if any(a < 0 for a in alpha):
        raise SpecValidationError("multi-index must be componentwise nonnegative")
    return sum(Fraction(a, 2 * mi) for a, mi in zip(alpha, mv))


class WeightedPolynomial:
    """Real polynomial p(z) = sum C_{ab} z^a conj(z)^b with a weight vector.

    Construction stores coefficients as given; structural validity (Hermitian
    symmetry, the half-weight condition on every stored term) is checked by
    :func:`validate_balanced`, and domain constructors reject invalid data
    instead of silently symmetrizing it.
    """

    def __init__(self, dim, coeffs, weights, nondegenerate=True):
        self.dim = int(dim)
        self.weights = weights if isinstance(weights, WeightVector) else WeightVector(weights)
        if len(self.weights) != self.dim:
            raise DimensionMismatch("weight vector length != polynomial dimension")
        self.coeffs = {}
        for (alpha, beta), c in coeffs.items():
            alpha, beta = tuple(int(a) for a in alpha), tuple(int(b) for b in beta)
            if len(alpha) != self.dim or len(beta) != self.dim:
                raise DimensionMismatch("multi-index length != dimension")
            self.coeffs[(alpha, beta)] = complex(c)
        self.nondegenerate = bool(nondegenerate)
        terms = sorted(self.coeffs.items())
        self._alphas = np.array([t[0][0] for t in terms], dtype=int).reshape(len(terms), self.dim)
        self._betas = np.array([t[0][1] for t in terms], dtype=int).reshape(len(terms), self.dim)
        self._cvals = np.array([t[1] for t in terms], dtype=complex)

    @property
    def deltas(self):
        return self.weights.deltas

    def value(self, z):
        """Evaluate p at z, shape (..., dim) -> (...); real part returned."""
        z = np.asarray(z, dtype=complex)
        if self._cvals.size == 0:
            return np.zeros(z.shape[:-1])
        za = np.prod(z[..., None, :] ** self._alphas, axis=-1)
        zb = np.prod(np.conj(z)[..., None, :] ** self._betas, axis=-1)
        return np.real(np.sum(self._cvals * za * zb, axis=-1))

    def dzbar(self, z):
        """Wirtinger derivative dp/d(conj z), shape (..., dim)."""
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        if self._cvals.size == 0:
            return out
        za = np.prod(z[..., None, :] ** self._alphas, axis=-1)
        for j in range(self.dim):
            bj = self._betas[:, j]
            active = bj > 0
            if not np.any(active):
                continue
            betas_red = self._betas[active].copy()
            betas_red[:, j] -= 1
            zb = np.prod(np.conj(z)[..., None, :] ** betas_red, axis=-1)
            out[..., j] = np.sum(self._cvals[active] * bj[active]
                                 * za[..., active] * zb, axis=-1)
        return out

    def is_diagonal(self):
        """True when p = sum_i c_i |z_i|^{2 k_i} with c_i > 0 real."""
        for (alpha, beta), c in self.coeffs.items():
            if alpha != beta:
                return False
            if sum(1 for a in alpha if a > 0) != 1:
                return False
            if abs(c.imag) > 1e-14 or c.real <= 0:
                return False
        return True

    def diagonal_terms(self):
        """(coordinate index, half-degree k, coefficient) for diagonal p."""
        out = []
        for (alpha, _), c in sorted(self.coeffs.items()):
            j = next(i for i, a in enumerate(alpha) if a > 0)
            out.append((j, alpha[j], c.real))
        return out

    def as_real_polynomial(self, offset=0, total_dim=None):
        """Embed into a RealPolynomial on C^{total_dim} at coordinate offset."""
        total_dim = self.dim if total_dim is None else total_dim
        terms = {}
        for (alpha, beta), c in self.coeffs.items():
            a = [0] * total_dim
            b = [0] * total_dim
            a[offset:offset + self.dim] = alpha
            b[offset:offset + self.dim] = beta
            terms[(tuple(a), tuple(b))] = c
        return RealPolynomial(total_dim, terms)


@dataclass
class BalancedValidation:
    """Structured report of the balanced-polynomial checks; never raised."""

    ok: bool
    failures: list = field(default_factory=list)
    homogeneity_defect: float = 0.0
    min_sampled_value: float = float("inf")


def validate_balanced(p, n_samples=100, seed=0, tol=1e-10):
    """Check Hermitian symmetry, the half-weight condition per term, and the
    weighted dilation identity p(t^{d_1} z_1, ...) = t p(z) on samples.

    Returns a report; never raises.
    """
    failures = []
    for (alpha, beta), c in p.coeffs.items():
        mirror = p.coeffs.get((beta, alpha))
        if mirror is None or abs(np.conj(mirror) - c) > 1e-12 * max(1.0, abs(c)):
            failures.append(f"term {alpha},{beta}: Hermitian partner missing or mismatched")
        wa, wb = weight(p.weights, alpha), weight(p.weights, beta)
        if wa != Fraction(1, 2) or wb != Fraction(1, 2):
            failures.append(f"term {alpha},{beta}: weights ({wa},{wb}) != (1/2,1/2)")
    rng = np.random.default_rng(seed)
    z = (rng.uniform(-1, 1, (n_samples, p.dim))
         + 1j * rng.uniform(-1, 1, (n_samples, p.dim)))
    base = p.value(z)
    if p._cvals.size and np.any(np.abs(np.imag(np.sum(
            p._cvals * np.prod(z[..., None, :] ** p._alphas, axis=-1)
            * np.prod(np.conj(z)[..., None, :] ** p._betas, axis=-1), axis=-1))) > 1e-9):
        failures.append("polynomial takes non-real values on samples")
    defect = 0.0
    deltas = np.array(p.deltas)
    for t in np.geomspace(1e-3, 1e3, 13):
        scaled = p.value(z * (t ** deltas))
        scale_err = np.max(np.abs(scaled - t * base) / np.maximum(np.abs(t * base), 1e-300))
        defect = max(defect, float(scale_err))
    if defect > tol and not failures:
        failures.append(f"dilation identity defect {defect:.3g} exceeds {tol:g}")
    min_val = float(np.min(base)) if n_samples else float("inf")
    if min_val < -1e-12:
        failures.append(f"negative value {min_val:.3g} sampled")
    if p.nondegenerate and p._cvals.size and np.any(np.abs(base) < 1e-300):
        failures.append("zero value at a nonzero sample despite nondegeneracy flag")
    return BalancedValidation(ok=not failures, failures=failures,
                              homogeneity_defect=defect, min_sampled_value=min_val)


# ---------------------------------------------------------------------------
# bounded models


def ball_domain(dim, radius=1.0, center=None):
    """Euclidean ball {||z - c|| < radius} as a ConvexDomain (exact support)."""
    c = np.zeros(dim, dtype=complex) if center is None else as_point(center, dim)
    r2 = radius ** 2

    def defining(z):
        return np.sum(np.abs(z - c) ** 2, axis=-1) - r2

    def gradient(z):
        return 2.0 * (z - c)

    def support(u):
        return float(np.real(np.sum(c * np.conj(u))) + radius * cnorm(u))

    def support_batch(us):
        return np.real(np.sum(c * np.conj(us), axis=-1)) + radius * cnorm(us)

    dom = ConvexDomain(dim, defining, gradient,
                       bounding_radius=float(cnorm(c) + radius) * 1.0 + 1e-9,
                       anchor=c, support_fn=support, support_batch_fn=support_batch,
                       label=f"ball{dim}")
    dom.polynomial = RealPolynomial(dim, _ball_terms(dim, c, r2))
    dom.radius = radius
    dom.center = c
    return dom


def _ball_terms(dim, c, r2):
    terms = {}
    zero = (0,) * dim
    const = -r2 + float(np.sum(np.abs(c) ** 2))
    terms[(zero, zero)] = complex(const)
    for i in range(dim):
        ei = tuple(1 if j == i else 0 for j in range(dim))
        terms[(ei, ei)] = 1.0 + 0j
        if abs(c[i]) > 0:
            terms[(ei, zero)] = terms.get((ei, zero), 0.0) - np.conj(c[i])
            terms[(zero, ei)] = terms.get((zero, ei), 0.0) - c[i]
    return terms


class PolynomialEllipsoid(ConvexDomain):
    """Bounded model {(w, z) : |w|^2 + p(z) < 1} for a valid balanced p."""

    def __init__(self, poly):
        report = validate_balanced(poly)
        if not report.ok:
            raise InvalidPolynomial(report)
        self.poly = poly
        dim = 1 + poly.dim

        def defining(x):
            x = np.asarray(x, dtype=complex)
            return np.abs(x[..., 0]) ** 2 + poly.value(x[..., 1:]) - 1.0

        def gradient(x):
            x = np.asarray(x, dtype=complex)
            g = np.empty_like(x)
            g[..., 0] = 2.0 * x[..., 0]
            g[..., 1:] = 2.0 * poly.dzbar(x[..., 1:])
            return g

        z_extent = _sublevel_extent(poly)
        diag = poly.is_diagonal()
        support = _diagonal_support(poly) if diag else None
        support_batch = _diagonal_support_batch(poly) if diag else None
        super().__init__(dim, defining, gradient,
                         bounding_radius=float(np.hypot(1.0, z_extent)) * 1.02 + 1e-9,
                         anchor=np.zeros(dim, dtype=complex),
                         support_fn=support, support_batch_fn=support_batch,
                         label="ellipsoid")
        self.polynomial = poly.as_real_polynomial(offset=1, total_dim=dim)
        self.polynomial.terms[((0,) * dim, (0,) * dim)] = \
            self.polynomial.terms.get(((0,) * dim, (0,) * dim), 0.0) - 1.0
        e0 = tuple([1] + [0] * (dim - 1))
        self.polynomial.terms[(e0, e0)] = 1.0 + 0j
        self.polynomial._refresh()


def _sublevel_extent(poly, level=1.0, n_dirs=128, t_cap=1e3):
    """Radius bound for {p <= level}: largest sampled crossing of p = level."""
    if poly._cvals.size == 0:
        raise SpecValidationError("empty polynomial defines an unbounded model")
    rng = np.random.default_rng(12345)
    dirs = (rng.standard_normal((n_dirs, poly.dim))
            + 1j * rng.standard_normal((n_dirs, poly.dim)))
    dirs /= cnorm(dirs)[:, None]
    worst = 0.0
    for u in dirs:
        t_lo, t_hi = 0.0, 1.0
        while poly.value(t_hi * u) <= level:
            t_hi *= 2.0
            if t_hi > t_cap:
                raise SpecValidationError("sublevel set appears unbounded along a direction")
        for _ in range(60):
            mid = 0.5 * (t_lo + t_hi)
            if poly.value(mid * u) <= level:
                t_lo = mid
            else:
                t_hi = mid
        worst = max(worst, t_hi)
    return worst


def _diagonal_support(poly):
    """Exact support function of {|w|^2 + sum c_i |z_i|^{2k_i} < 1}.

    Solved through the Lagrange dual: each coordinate maximizer has a closed
    form in the multiplier, and the multiplier is found by bisection on the
    constraint.
    """
    terms = poly.diagonal_terms()
    covered = {j for j, _, _ in terms}
    if covered != set(range(poly.dim)):
        return None  # a free coordinate would make the model unbounded

    def support(u):
        u = np.asarray(u, dtype=complex)
        mw = abs(u[0])
        mz = np.abs(u[1:])
        if mw < 1e-300 and np.all(mz < 1e-300):
            return 0.0

        def parts(lam):
            x = mw / (2.0 * lam)
            total = x * x
            s_vals = []
            for j, k, c in terms:
                if mz[j] < 1e-300:
                    s_vals.append(0.0)
                    continue
                s = (mz[j] / (2.0 * k * c * lam)) ** (1.0 / (2 * k - 1))
                s_vals.append(s)
                total += c * s ** (2 * k)
            return total, x, s_vals

        lo, hi = 1e-9, 1.0
        while parts(hi)[0] > 1.0:
            hi *= 2.0
        while parts(lo)[0] < 1.0:
            lo *= 0.5
            if lo < 1e-300:
                break
        for _ in range(200):
            mid = np.sqrt(lo * hi)
            if parts(mid)[0] > 1.0:
                lo = mid
            else:
                hi = mid
        _, x, s_vals = parts(np.sqrt(lo * hi))
        val = x * mw
        for (j, _, _), s in zip(terms, s_vals):
            val += s * mz[j]
        return float(val)

    return support


def _diagonal_support_batch(poly):
    """Vectorized variant of the diagonal support (bisects all multipliers)."""
    terms = poly.diagonal_terms()
    if {j for j, _, _ in terms} != set(range(poly.dim)):
        return None
    ks = np.array([k for _, k, _ in terms], dtype=float)
    cs = np.array([c for _, _, c in terms], dtype=float)
    order = np.array([j for j, _, _ in terms], dtype=int)

    def support_batch(us):
        us = np.asarray(us, dtype=complex)
        mw = np.abs(us[:, 0])
        mz = np.abs(us[:, 1:])[:, order]
        trivial = (mw < 1e-300) & np.all(mz < 1e-300, axis=1)

        def parts(lam):
            x = mw / (2.0 * lam)
            s = np.where(mz > 1e-300,
                         (mz / (2.0 * ks * cs * lam[:, None])) ** (1.0 / (2 * ks - 1)),
                         0.0)
            g = x * x + np.sum(cs * s ** (2 * ks), axis=1)
            return g, x, s

        lo = np.full(len(us), 1e-6)
        hi = np.ones(len(us))
        for _ in range(40):
            g, _, _ = parts(hi)
            grow = g > 1.0
            if not np.any(grow):
                break
            hi[grow] *= 4.0
        for _ in range(40):
            g, _, _ = parts(lo)
            shrink = (g < 1.0) & ~trivial
            if not np.any(shrink):
                break
            lo[shrink] *= 0.25
        for _ in range(64):
            mid = np.sqrt(lo * hi)
            g, _, _ = parts(mid)
            high = g > 1.0
            lo = np.where(high, mid, lo)
            hi = np.where(high, hi, mid)
        _, x, s = parts(np.sqrt(lo * hi))
        vals = x * mw + np.sum(s * mz, axis=1)
        return np.where(trivial, 0.0, vals)

    return support_batch


def diagonal_ellipsoid(exponents, coefficients=None):
    """{|w|^2 + sum_i c_i |z_i|^{2 m_i} < 1} for positive integer exponents."""
    exponents = tuple(int(m) for m in exponents)
    coefficients = (1.0,) * len(exponents) if coefficients is None else tuple(coefficients)
    coeffs = {}
    d = len(exponents)
    for i, (m, c) in enumerate(zip(exponents, coefficients)):
        alpha = tuple(m if j == i else 0 for j in range(d))
        coeffs[(alpha, alpha)] = complex(c)
    poly = WeightedPolynomial(d, coeffs, WeightVector(exponents))
    return PolynomialEllipsoid(poly)


class SiegelDomain:
    """Unbounded model {(w, z) : Im(w) > p(z)}; stored as p(z) - Im(w) < 0.

    Not a ConvexDomain (no bounding radius): distance machinery reaches it
    only through the Cayley conjugation, scaling maps, or local Hausdorff
    comparisons on a test ball.
    """

    def __init__(self, poly):
        report = validate_balanced(poly)
        if not report.ok:
            raise InvalidPolynomial(report)
        self.poly = poly
        self.dim = 1 + poly.dim
        self.anchor = np.zeros(self.dim, dtype=complex)
        self.anchor[0] = 1j
        self.label = "siegel"

    def defining_fn(self, x):
        x = np.asarray(x, dtype=complex)
        return self.poly.value(x[..., 1:]) - np.imag(x[..., 0])

    r = defining_fn

    def gradient_fn(self, x):
        x = np.asarray(x, dtype=complex)
        g = np.empty_like(x)
        g[..., 0] = -1j
        g[..., 1:] = 2.0 * poly_dzbar_safe(self.poly, x[..., 1:])
        return g

    grad = gradient_fn

    def contains(self, x, tol=0.0):
        return self.defining_fn(x) < -tol

    def scaled(self, lam, deltas=None):
        """The image of the model under diag(lam, lam^{d_1}, ...), computed on
        coefficients: it is again a Siegel-type model with
        C'_{ab} = lam^{1 - sum_i (a_i + b_i) d_i} C_{ab}."""
        deltas = self.poly.deltas if deltas is None else tuple(deltas)
        new_coeffs = {}
        for (alpha, beta), c in self.poly.coeffs.items():
            expo = 1.0 - sum((a + b) * dl for a, b, dl in zip(alpha, beta, deltas))
            new_coeffs[(alpha, beta)] = c * lam ** expo
        return SiegelDomain(WeightedPolynomial(self.poly.dim, new_coeffs,
                                               self.poly.weights,
                                               self.poly.nondegenerate))

    def __repr__(self):
        return f"<siegel d={self.dim}>"


def poly_dzbar_safe(poly, z):
    return poly.dzbar(z)


# ---------------------------------------------------------------------------
# the Cayley biholomorphism


_POLE_TOL = 1e-12


def cayley_map(s, q):
    """Map the Siegel model onto the polynomial ellipsoid (adopted sign).

    First coordinate (1 + i z0/4)/(1 - i z0/4); remaining coordinates
    z_j / (1 - i z0/4)^{1/m_j} with principal fractional powers.
    """
    q = np.asarray(q, dtype=complex)
    z0 = q[..., 0]
    denom = 1.0 - 1j * z0 / 4.0
    if np.any(np.abs(denom) < _POLE_TOL):
        raise PoleProximity("Cayley denominator |1 - i z0/4| < 1e-12")
    out = np.empty_like(q)
    out[..., 0] = (1.0 + 1j * z0 / 4.0) / denom
    for j, mj in enumerate(s.poly.weights.m):
        out[..., 1 + j] = q[..., 1 + j] / denom ** (1.0 / mj)
    return out


def cayley_inverse(s, x):
    """Inverse of :func:`cayley_map`; pole at w = -1."""
    x = np.asarray(x, dtype=complex)
    w = x[..., 0]
    denom = 1.0 + w
    if np.any(np.abs(denom) < _POLE_TOL):
        raise PoleProximity("inverse Cayley denominator |1 + w| < 1e-12")
    out = np.empty_like(x)
    out[..., 0] = 4j * (1.0 - w) / denom
    for j, mj in enumerate(s.poly.weights.m):
        out[..., 1 + j] = x[..., 1 + j] * (2.0 / denom) ** (1.0 / mj)
    return out


# ---------------------------------------------------------------------------
# flat-face fixture


def flat_face_domain(face_radius):
    """Smooth bounded convex domain in C^2 with flat complex boundary faces.

    Omega = {(w, z) : |w|^2 + psi(|z|) < 1} where psi vanishes identically on
    [0, face_radius] and rises smoothly to psi(1) = 1.  The boundary contains
    the complex disks {w0} x {|z| <= face_radius} for every |w0| = 1, so
    distinct boundary points can share a complex tangent hyperplane.
    """
    if not 0.0 < face_radius < 1.0:
        raise InvalidRadius(f"face_radius must lie in (0, 1), got {face_radius}")
    r0 = float(face_radius)
    norm = _bump_integral(1.0 - r0)

    def psi(s):
        return _bump_integral(np.asarray(s, dtype=float) - r0) / norm

    def psi_prime(s):
        s = np.asarray(s, dtype=float)
        u = s - r0
        out = np.zeros_like(u)
        pos = u > 0
        out[pos] = np.exp(-1.0 / u[pos]) / norm
        return out

    def defining(x):
        x = np.asarray(x, dtype=complex)
        return np.abs(x[..., 0]) ** 2 + psi(np.abs(x[..., 1])) - 1.0

    def gradient(x):
        x = np.asarray(x, dtype=complex)
        g = np.empty_like(x)
        g[..., 0] = 2.0 * x[..., 0]
        az = np.abs(x[..., 1])
        scale = np.where(az > 0, psi_prime(az) / np.maximum(az, 1e-300), 0.0)
        g[..., 1] = scale * x[..., 1]
        return g

    def support(u):
        u = np.asarray(u, dtype=complex)
        mw, mz = abs(u[0]), abs(u[1])
        return _golden_max(lambda s: s * mz + np.sqrt(max(1.0 - float(psi(s)), 0.0)) * mw,
                           0.0, 1.0)

    def support_batch(us):
        us = np.asarray(us, dtype=complex)
        mw, mz = np.abs(us[:, 0]), np.abs(us[:, 1])

        def f(s):
            return s * mz + np.sqrt(np.maximum(1.0 - psi(s), 0.0)) * mw

        invphi = (np.sqrt(5.0) - 1.0) / 2.0
        a = np.zeros(len(us))
        b = np.ones(len(us))
        c, d = b - invphi * (b - a), a + invphi * (b - a)
        fc, fd = f(c), f(d)
        for _ in range(44):
            take = fc > fd
            b = np.where(take, d, b)
            a = np.where(take, a, c)
            c, d = b - invphi * (b - a), a + invphi * (b - a)
            fc, fd = f(c), f(d)
        return np.maximum.reduce([fc, fd, f(np.zeros_like(a)), f(np.ones_like(a))])

    dom = ConvexDomain(2, defining, gradient, bounding_radius=np.sqrt(2.0) * 1.01,
                       support_fn=support, support_batch_fn=support_batch,
                       label="flat_face")
    dom.face_radius = r0
    dom.face_profile = psi
    dom.face_profile_slope = psi_prime
    return dom


def _bump_integral(t):
    """Integral of exp(-1/u) du from 0 to t (0 for t <= 0), elementwise."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    if np.any(pos):
        tp = t[pos]
        out[pos] = tp * np.exp(-1.0 / tp) - exp1(1.0 / tp)
    return out if out.ndim else float(out)


def _golden_max(f, a, b, iters=90):
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return float(max(fc, fd, f(a), f(b)))


# ---------------------------------------------------------------------------
# polynomial expansions (symbolic path for line type)


class RealPolynomial:
    """Real polynomial on C^d stored as terms (alpha, beta) -> complex coeff."""

    def __init__(self, dim, terms):
        self.dim = int(dim)
        self.terms = {(tuple(a), tuple(b)): complex(c) for (a, b), c in terms.items()}
        self._refresh()

    def _refresh(self):
        items = sorted(self.terms.items())
        n = len(items)
        self._alphas = np.array([t[0][0] for t in items], dtype=int).reshape(n, self.dim)
        self._betas = np.array([t[0][1] for t in items], dtype=int).reshape(n, self.dim)
        self._cvals = np.array([t[1] for t in items], dtype=complex)

    def value(self, z):
        z = np.asarray(z, dtype=complex)
        if self._cvals.size == 0:
            return np.zeros(z.shape[:-1])
        za = np.prod(z[..., None, :] ** self._alphas, axis=-1)
        zb = np.prod(np.conj(z)[..., None, :] ** self._betas, axis=-1)
        return np.real(np.sum(self._cvals * za * zb, axis=-1))

    def compose_line(self, base, direction):
        """Restrict to the affine line zeta -> base + zeta * direction.

        Returns the 1D expansion as a dict (j, k) -> coefficient of
        zeta^j conj(zeta)^k.
        """
        base = as_point(base, self.dim)
        direction = as_point(direction, self.dim)
        out: dict = {}
        for (alpha, beta), c in self.terms.items():
            # per-coordinate binomial expansions of (x_i + zeta v_i)^{a_i}
            fac = {(0, 0): c}
            for i in range(self.dim):
                fac = _mul_binomial(fac, base[i], direction[i], alpha[i], conjugate=False)
                fac = _mul_binomial(fac, base[i], direction[i], beta[i], conjugate=True)
            for key, val in fac.items():
                out[key] = out.get(key, 0.0) + val
        return out


def _mul_binomial(acc, x, v, power, conjugate):
    from math import comb

    if power == 0:
        return acc
    if conjugate:
        x, v = np.conj(x), np.conj(v)
    tab = [(comb(power, k) * x ** (power - k) * v ** k, k) for k in range(power + 1)]
    out: dict = {}
    for (j0, k0), c0 in acc.items():
        for cc, k in tab:
            if cc == 0:
                continue
            key = (j0, k0 + k) if conjugate else (j0 + k, k0)
            out[key] = out.get(key, 0.0) + c0 * cc
    return out


# ---------------------------------------------------------------------------
# JSON domain specifications


_COEFF_KEYS = {"alpha", "beta", "re", "im"}


def _poly_from_spec(spec):
    weights = WeightVector(spec["weights"])
    coeffs = {}
    for entry in spec["coeffs"]:
        extra = set(entry) - _COEFF_KEYS
        if extra:
            raise SpecValidationError(f"unknown coefficient fields {sorted(extra)}")
        missing = _COEFF_KEYS - set(entry)
        if missing:
            raise SpecValidationError(f"missing coefficient fields {sorted(missing)}")
        key = (tuple(int(a) for a in entry["alpha"]), tuple(int(b) for b in entry["beta"]))
        coeffs[key] = complex(float(entry["re"]), float(entry["im"]))
    return WeightedPolynomial(len(weights), coeffs, weights)


def domain_from_spec(spec):
    """Build a domain from the JSON schema; unknown fields are rejected."""
    if not isinstance(spec, dict):
        raise SpecValidationError("domain spec must be a JSON object")
    kind = spec.get("kind")
    allowed = {
        "ball": {"kind", "dim"},
        "ellipsoid": {"kind", "dim", "weights", "coeffs"},
        "siegel": {"kind", "dim", "weights", "coeffs"},
        "flat_face": {"kind", "dim", "face_radius"},
    }
    if kind not in allowed:
        raise SpecValidationError(f"unknown domain kind {kind!r}")
    extra = set(spec) - allowed[kind]
    if extra:
        raise SpecValidationError(f"unknown fields {sorted(extra)} for kind {kind!r}")
    if kind == "ball":
        if "dim" not in spec:
            raise SpecValidationError("ball spec requires 'dim'")
        return ball_domain(int(spec["dim"]))
    if kind == "flat_face":
        if "face_radius" not in spec:
            raise SpecValidationError("flat_face spec requires 'face_radius'")
        if "dim" in spec and int(spec["dim"]) != 2:
            raise SpecValidationError("flat_face domain is two dimensional")
        return flat_face_domain(float(spec["face_radius"]))
    if "weights" not in spec or "coeffs" not in spec:
        raise SpecValidationError(f"{kind} spec requires 'weights' and 'coeffs'")
    poly = _poly_from_spec(spec)
    if "dim" in spec and int(spec["dim"]) != poly.dim + 1:
        raise SpecValidationError("dim must equal len(weights) + 1")
    try:
        return PolynomialEllipsoid(poly) if kind == "ellipsoid" else SiegelDomain(poly)
    except InvalidPolynomial as exc:
        raise SpecValidationError(str(exc)) from exc
