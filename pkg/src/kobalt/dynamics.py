"""Automorphisms of model domains, Wolff-Denjoy iteration, isometry
classification, hyperbolic-element search and orbit-translation checks.

Unbounded Siegel-type models are handled through the Cayley conjugation to
the bounded polynomial ellipsoid; a light direct classifier using Euclidean
exit markers exists for cross-checking conjugation invariance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EscapeDetected, SpecValidationError
from .geometry import (
    BOUNDARY_TOL,
    BoundaryPoint,
    boundary_data,
    boundary_distance_batch,
    cnorm,
    herm,
    nearest_boundary_point,
    same_complex_tangent,
)
from .metrics import distance_interval, upper_distance, _default_hyperplanes
from .models import cayley_inverse, cayley_map

__all__ = [
    "Automorphism", "SelfMap", "OrbitRecord", "WolffReport", "Classification",
    "ball_mobius", "ball_unitary", "siegel_translation", "siegel_dilation",
    "siegel_unitary", "ellipsoid_rotation", "cayley_conjugate", "compose",
    "check_automorphism",
    "iterate_orbit", "wolff_denjoy", "classify", "hyperbolic_search",
    "SearchResult", "translation_check", "TranslationReport",
    "limit_set_sample", "LimitSetSample", "siegel_classify_direct",
]

M_CAP_DEFAULT = 10.0
# growth of the distance-from-base trend that separates escape from bounded
_GROWTH_MARGIN = 0.15


@dataclass
class Automorphism:
    """Invertible holomorphic self-map with exact forward/inverse evaluation."""

    dom: object
    forward_fn: object
    inverse_fn: object
    kind_hint: str = "composite"
    parameters: dict = field(default_factory=dict)
    label: str = ""

    def __call__(self, z):
        return self.forward_fn(np.asarray(z, dtype=complex))

    forward = __call__

    def inverse(self, z):
        return self.inverse_fn(np.asarray(z, dtype=complex))

    def inv(self):
        return Automorphism(self.dom, self.inverse_fn, self.forward_fn,
                            kind_hint=self.kind_hint,
                            parameters={**self.parameters, "inverted": True},
                            label=f"inv({self.label})" if self.label else "inverse")


@dataclass
class SelfMap:
    """Holomorphic self-map of a domain (no inverse required)."""

    dom: object
    forward_fn: object
    label: str = ""

    def __call__(self, z):
        return self.forward_fn(np.asarray(z, dtype=complex))

    forward = __call__


def compose(*autos):
    """Composition a_1 o a_2 o ... (rightmost applied first)."""
    if not autos:
        raise SpecValidationError("empty composition")
    dom = autos[0].dom

    def fwd(z):
        for a in reversed(autos):
            z = a.forward_fn(z)
        return z

    def inv(z):
        for a in autos:
            z = a.inverse_fn(z)
        return z

    return Automorphism(dom, fwd, inv, kind_hint="composite",
                        parameters={"factors": len(autos)},
                        label="*".join(a.label or a.kind_hint for a in autos))


# ---------------------------------------------------------------------------
# constructors


def ball_mobius(dom, a):
    """Ball automorphism moving the origin to a.

    T_a(z) = (a + P_a z + s Q_a z) / (1 + <z, a>) with P_a the Hermitian
    projection onto a and s = sqrt(1 - |a|^2); inverse is T_{-a}.  In one
    variable this is the familiar (z + a)/(1 + conj(a) z).
    """
    a = np.asarray(a, dtype=complex)
    na2 = float(np.sum(np.abs(a) ** 2))
    if na2 >= 1.0:
        raise SpecValidationError("Mobius parameter must lie in the unit ball")

    def make(av):
        na2v = float(np.sum(np.abs(av) ** 2))
        if na2v < 1e-30:
            return lambda z: np.asarray(z, dtype=complex)
        s = np.sqrt(1.0 - na2v)

        def fwd(z):
            z = np.asarray(z, dtype=complex)
            ip = herm(z, av)[..., None]
            proj = (ip / na2v) * av
            ortho = z - proj
            return (av + proj + s * ortho) / (1.0 + ip)

        return fwd

    return Automorphism(dom, make(a), make(-a), kind_hint="ball_mobius",
                        parameters={"a": a}, label="mobius")


def ball_unitary(dom, U):
    """Linear automorphism z -> U z for a unitary matrix U."""
    U = np.asarray(U, dtype=complex)
    if not np.allclose(U @ U.conj().T, np.eye(len(U)), atol=1e-12):
        raise SpecValidationError("matrix is not unitary")
    Ui = U.conj().T
    return Automorphism(dom, lambda z: np.asarray(z, complex) @ U.T,
                        lambda z: np.asarray(z, complex) @ Ui.T,
                        kind_hint="ball_unitary", parameters={"U": U},
                        label="unitary")


def siegel_translation(s, b):
    """Real translation in the first variable of the Siegel model."""
    b = float(b)

    def shift(z, amount):
        z = np.array(z, dtype=complex, copy=True)
        z[..., 0] = z[..., 0] + amount
        return z

    return Automorphism(s, lambda z: shift(z, b), lambda z: shift(z, -b),
                        kind_hint="siegel_translation", parameters={"b": b},
                        label=f"shift{b:+g}")


def siegel_dilation(s, scale):
    """Anisotropic dilation (w, z_j) -> (scale * w, scale^{d_j} z_j).

    The z-exponents d_j = 1/(2 m_j) come from the weight vector, so the
    balanced polynomial scales linearly and the model is preserved.  With
    scale < 1 orbits contract toward the finite boundary fixed point.
    """
    lam = float(scale)
    if lam <= 0:
        raise SpecValidationError("dilation scale must be positive")
    deltas = np.array(s.poly.deltas)

    def dil(z, l):
        z = np.array(z, dtype=complex, copy=True)
        z[..., 0] = l * z[..., 0]
        z[..., 1:] = (l ** deltas) * z[..., 1:]
        return z

    return Automorphism(s, lambda z: dil(z, lam), lambda z: dil(z, 1.0 / lam),
                        kind_hint="siegel_dilation", parameters={"scale": lam},
                        label=f"dilate{lam:g}")


def siegel_unitary(s, phases):
    """Coordinate phase rotations z_j -> e^{i theta_j} z_j (w fixed).

    Validated against the polynomial on samples; rejected when the rotation
    fails to preserve it.
    """
    phases = np.asarray(phases, dtype=float)
    if phases.size != s.poly.dim:
        raise SpecValidationError("one phase per z coordinate required")
    rot = np.exp(1j * phases)
    rng = np.random.default_rng(5)
    z = rng.uniform(-1, 1, (64, s.poly.dim)) + 1j * rng.uniform(-1, 1, (64, s.poly.dim))
    if np.max(np.abs(s.poly.value(rot * z) - s.poly.value(z))) > 1e-10:
        raise SpecValidationError("phase rotation does not preserve the polynomial")

    def apply(z, r):
        z = np.array(z, dtype=complex, copy=True)
        z[..., 1:] = r * z[..., 1:]
        return z

    return Automorphism(s, lambda z: apply(z, rot), lambda z: apply(z, np.conj(rot)),
                        kind_hint="siegel_unitary", parameters={"phases": phases},
                        label="rotate")


def ellipsoid_rotation(ell, theta_w, z_phases=None):
    """Phase rotation (w, z_j) -> (e^{i theta_w} w, e^{i phi_j} z_j).

    Always preserves |w|^2; the z phases are validated against the balanced
    polynomial on samples.
    """
    d = ell.dim - 1
    z_phases = np.zeros(d) if z_phases is None else np.asarray(z_phases, float)
    if z_phases.size != d:
        raise SpecValidationError("one phase per z coordinate required")
    rot = np.concatenate([[np.exp(1j * theta_w)], np.exp(1j * z_phases)])
    if np.any(z_phases != 0.0):
        rng = np.random.default_rng(5)
        z = rng.uniform(-1, 1, (64, d)) + 1j * rng.uniform(-1, 1, (64, d))
        if np.max(np.abs(ell.poly.value(rot[1:] * z) - ell.poly.value(z))) > 1e-10:
            raise SpecValidationError("z phases do not preserve the polynomial")
    return Automorphism(ell, lambda z: rot * np.asarray(z, complex),
                        lambda z: np.conj(rot) * np.asarray(z, complex),
                        kind_hint="ball_unitary",
                        parameters={"theta_w": float(theta_w), "z_phases": z_phases},
                        label="ellipsoid_rotation")


def cayley_conjugate(ell, s, inner):
    """Automorphism of the bounded ellipsoid obtained by conjugating an
    automorphism of the Siegel model with the Cayley map."""

    def fwd(z):
        return cayley_map(s, inner.forward_fn(cayley_inverse(s, z)))

    def inv(z):
        return cayley_map(s, inner.inverse_fn(cayley_inverse(s, z)))

    return Automorphism(ell, fwd, inv, kind_hint="conjugated",
                        parameters={"inner": inner.kind_hint, **inner.parameters},
                        label=f"cayley({inner.label or inner.kind_hint})")


def check_automorphism(auto, n=50, seed=0, tol=1e-10):
    """Round-trip and interior-preservation probe on seeded points."""
    from .geometry import sample_interior

    rng = np.random.default_rng(seed)
    pts = sample_interior(auto.dom, n, rng) if hasattr(auto.dom, "bounding_radius") \
        else _siegel_samples(auto.dom, n, rng)
    images = auto.forward_fn(pts)
    back = auto.inverse_fn(images)
    err = float(np.max(np.abs(back - pts)))
    inside = bool(np.all(auto.dom.r(images) < BOUNDARY_TOL))
    return err <= tol and inside, err


def _siegel_samples(s, n, rng):
    z = 0.7 * (rng.uniform(-1, 1, (n, s.poly.dim))
               + 1j * rng.uniform(-1, 1, (n, s.poly.dim)))
    height = s.poly.value(z) + rng.uniform(0.05, 3.0, n)
    w = rng.uniform(-3, 3, n) + 1j * height
    return np.concatenate([w[:, None], z], axis=1)


# ---------------------------------------------------------------------------
# orbits


@dataclass
class OrbitRecord:
    base: np.ndarray
    points: np.ndarray
    kobayashi_from_base: list       # (step, DistanceInterval) samples
    deltas: np.ndarray
    stopped_early: bool


def iterate_orbit(f, p, N, interval_stride=None, budget="orbit",
                  hyperplanes=None, delta_floor=1e-9):
    """Orbit of a holomorphic self-map with certified distances from base.

    Iterates are required to stay in the domain (EscapeDetected otherwise,
    which signals a non-self-map); the orbit is truncated once the boundary
    distance falls below ``delta_floor``.  Distance brackets from the base
    are sampled on a stride to keep long orbits affordable.
    """
    from .errors import PoleProximity

    dom = f.dom
    p = dom.require_inside(np.asarray(p, dtype=complex))
    pts = [p]
    z = p
    hit_pole = False
    for _ in range(int(N)):
        try:
            z = f.forward_fn(z)
        except PoleProximity:
            # the iterate crowds the boundary point carrying a pole of the
            # conjugating map: the orbit has effectively reached the boundary
            hit_pole = True
            break
        rz = float(dom.r(z))
        if rz > BOUNDARY_TOL:
            raise EscapeDetected(f"iterate exited the domain (r = {rz:.3g})")
        if rz >= 0.0:
            hit_pole = True  # landed on the boundary within tolerance
            break
        pts.append(np.asarray(z, dtype=complex))
    pts = np.array(pts)
    deltas = boundary_distance_batch(dom, pts)
    cut = np.flatnonzero(deltas < delta_floor)
    stopped = cut.size > 0 or hit_pole
    if cut.size > 0:
        last = int(cut[0]) + 1
        pts, deltas = pts[:last], deltas[:last]
    stride = interval_stride or max(1, len(pts) // 60)
    sample_idx = sorted(set(range(0, len(pts), stride)) | {len(pts) - 1})
    planes = hyperplanes if hyperplanes is not None else _default_hyperplanes(dom)
    ivs = [(k, distance_interval(dom, p, pts[k], hyperplanes=planes, budget=budget))
           for k in sample_idx]
    return OrbitRecord(base=p, points=pts, kobayashi_from_base=ivs,
                       deltas=deltas, stopped_early=stopped)


@dataclass
class WolffReport:
    verdict: str                    # BoundedOrbit | ConvergesToFace | Undetermined
    limit_boundary_point: BoundaryPoint | None
    face_distances: np.ndarray | None
    converged_below_tol: bool
    orbit: OrbitRecord
    evidence: dict


def wolff_denjoy(f, p, N=400, tol=1e-6, m_cap=M_CAP_DEFAULT, budget="orbit",
                 hyperplanes=None):
    """Iteration dichotomy: bounded orbit versus attraction to a boundary face.

    The verdict combines the boundary-distance trend with the growth trend of
    the certified distance-from-base brackets; slow escapes that neither
    stabilize nor clearly run off within N steps stay Undetermined (a
    first-class outcome, not an error).
    """
    orbit = iterate_orbit(f, p, N, budget=budget, hyperplanes=hyperplanes)
    deltas = orbit.deltas
    lows = np.array([iv.lower for _, iv in orbit.kobayashi_from_base])
    ups = np.array([iv.upper for _, iv in orbit.kobayashi_from_base])
    half = max(1, len(lows) // 2)
    grow_low = float(np.max(lows[half:]) - np.max(lows[:half])) if len(lows) > 1 else 0.0
    grow_up = float(np.max(ups[half:]) - np.max(ups[:half])) if len(ups) > 1 else 0.0
    delta_ratio = float(deltas[-1] / max(deltas[0], 1e-300))
    escaped = orbit.stopped_early or (delta_ratio < 0.25 and grow_low > _GROWTH_MARGIN)
    bounded = (not escaped and float(np.max(ups)) <= m_cap
               and grow_up < _GROWTH_MARGIN and delta_ratio > 0.25)
    evidence = {"delta_ratio": delta_ratio, "grow_lower": grow_low,
                "grow_upper": grow_up, "max_upper": float(np.max(ups)),
                "n_steps": len(orbit.points) - 1}
    if escaped:
        _, y = nearest_boundary_point(f.dom, orbit.points[-1])
        bp = boundary_data(f.dom, y, boundary_tol=1e-5)
        face = np.asarray(bp.tangent.distance(orbit.points), dtype=float)
        return WolffReport("ConvergesToFace", bp, face,
                           bool(face[-1] < tol), orbit, evidence)
    if bounded:
        return WolffReport("BoundedOrbit", None, None, False, orbit, evidence)
    return WolffReport("Undetermined", None, None, False, orbit, evidence)


@dataclass
class Classification:
    verdict: str                    # elliptic | parabolic | hyperbolic | undetermined
    attracting: BoundaryPoint | None
    repelling: BoundaryPoint | None
    evidence: dict


def classify(phi, p, N=400, tol=1e-6, tangent_tol=0.05, budget="orbit"):
    """Elliptic / parabolic / hyperbolic classification of an automorphism.

    Runs the iteration dichotomy on phi and its inverse; with both orbits
    bounded the element is elliptic, otherwise the estimated attracting
    hyperplanes of phi and phi^{-1} are compared (equal: parabolic,
    distinct: hyperbolic).
    """
    fwd = wolff_denjoy(phi, p, N=N, tol=tol, budget=budget)
    bwd = wolff_denjoy(phi.inv(), p, N=N, tol=tol, budget=budget)
    evidence = {"forward": fwd, "backward": bwd}
    if fwd.verdict == "BoundedOrbit" and bwd.verdict == "BoundedOrbit":
        return Classification("elliptic", None, None, evidence)
    if fwd.verdict == "ConvergesToFace" and bwd.verdict == "ConvergesToFace":
        # the tail tangent is trustworthy to O(sqrt(delta)): orbits may
        # approach the limit face tangentially along a parabola, so the
        # angular error of the estimated hyperplane scales with the square
        # root of the remaining boundary distance
        resolution = 5.0 * (np.sqrt(float(fwd.orbit.deltas[-1]))
                            + np.sqrt(float(bwd.orbit.deltas[-1])))
        tol_eff = max(tangent_tol, resolution)
        equal = same_complex_tangent(fwd.limit_boundary_point,
                                     bwd.limit_boundary_point, tol=tol_eff)
        verdict = "parabolic" if equal else "hyperbolic"
        return Classification(verdict, fwd.limit_boundary_point,
                              bwd.limit_boundary_point, evidence)
    return Classification("undetermined", fwd.limit_boundary_point,
                          bwd.limit_boundary_point, evidence)


# ---------------------------------------------------------------------------
# hyperbolic-element search


@dataclass
class SearchResult:
    found: Automorphism | None
    classification: Classification | None
    tried: list


def hyperbolic_search(autos, p, budget=2, N=300, **classify_kw):
    """Search the given elements, then compositions, for a hyperbolic one.

    Compositions g_i o g_j^{-1} come first (the standard source of hyperbolic
    elements from two non-hyperbolic families attracted to different faces),
    then words up to the given length over generators and inverses.
    """
    autos = list(autos)
    if not autos:
        raise SpecValidationError("empty automorphism list")
    tried = []

    def attempt(auto, name):
        cls = classify(auto, p, N=N, **classify_kw)
        tried.append((name, cls.verdict))
        if cls.verdict == "hyperbolic":
            return SearchResult(auto, cls, tried)
        return None

    for i, a in enumerate(autos):
        hit = attempt(a, f"g{i}")
        if hit:
            return hit
    for i, a in enumerate(autos):
        for j, b in enumerate(autos):
            if i == j:
                continue
            hit = attempt(compose(a, b.inv()), f"g{i}*g{j}^-1")
            if hit:
                return hit
    if budget >= 3:
        gens = [(f"g{i}", a) for i, a in enumerate(autos)]
        gens += [(f"g{i}^-1", a.inv()) for i, a in enumerate(autos)]
        words = [(n, [g]) for n, g in gens]
        for _ in range(budget - 1):
            words = [(n + "*" + m, w + [h]) for n, w in words for m, h in gens]
        for name, w in words:
            if len(w) < 3:
                continue
            hit = attempt(compose(*w), name)
            if hit:
                return hit
    return SearchResult(None, None, tried)


# ---------------------------------------------------------------------------
# orbit translation along a two-face curve


def _safe_orbit(dom, step_fn, z0, n):
    """Strictly interior forward orbit points with pole/boundary truncation."""
    from .errors import PoleProximity

    pts, ks = [], []
    z = np.asarray(z0, dtype=complex)
    for k in range(1, n + 1):
        try:
            z = step_fn(z)
        except PoleProximity:
            break
        if not float(dom.r(z)) < 0.0:
            break
        pts.append(np.asarray(z))
        ks.append(k)
    return pts, ks


@dataclass
class TranslationReport:
    t_grid: np.ndarray
    min_upper: np.ndarray
    argmin_k: np.ndarray
    sup_min_upper: float


def translation_check(phi, sigma, o, t_grid, k_max=40, budget="orbit",
                      n_candidates=6):
    """How well the orbit of o under phi shadows the curve sigma.

    For each curve parameter the distance bracket to the nearest orbit points
    (pruned by Euclidean distance) is computed and the supremum over the grid
    of the minimal upper ends is reported; a finite stable value witnesses
    that the orbit M-shadows the curve.
    """
    dom = phi.dom
    o = dom.require_inside(np.asarray(o, dtype=complex))
    fwd_pts, fwd_ks = _safe_orbit(dom, phi.forward_fn, o, k_max)
    bwd_pts, bwd_ks = _safe_orbit(dom, phi.inverse_fn, o, k_max)
    orbit = np.array(bwd_pts[::-1] + [np.asarray(o)] + fwd_pts)
    ks = np.concatenate([-np.array(bwd_ks[::-1]), [0], np.array(fwd_ks)])
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    min_upper = np.zeros(len(t_grid))
    argmin_k = np.zeros(len(t_grid), dtype=int)
    for i, t in enumerate(t_grid):
        x = sigma(np.array([t]))[0]
        d_euc = cnorm(orbit - x)
        cand = np.argsort(d_euc)[:n_candidates]
        best, best_k = np.inf, 0
        for idx in cand:
            up, _, _ = upper_distance(dom, x, orbit[idx], budget=budget)
            if up < best:
                best, best_k = up, int(ks[idx])
        min_upper[i] = best
        argmin_k[i] = best_k
    return TranslationReport(t_grid=t_grid, min_upper=min_upper,
                             argmin_k=argmin_k,
                             sup_min_upper=float(np.max(min_upper)))


# ---------------------------------------------------------------------------
# limit sets


@dataclass
class LimitSetSample:
    points: list                    # BoundaryPoint accumulation points
    face_tags: list                 # indices grouping equal complex tangents


def limit_set_sample(autos, p, N=150, escape_delta=1e-4, dedup_tol=1e-3,
                     include_inverses=True, include_words=True):
    """Boundary accumulation points of sampled orbits.

    Runs every generator (plus inverses and length-2 words unless disabled),
    collects the nearest boundary points of escaping orbit tails,
    deduplicates by Euclidean distance and tags points by their complex
    tangent hyperplane.
    """
    autos = list(autos)
    if not autos:
        raise SpecValidationError("empty automorphism list")
    dom = autos[0].dom
    maps = list(autos)
    if include_inverses:
        maps += [a.inv() for a in autos]
    if include_words:
        maps += [compose(a, b) for a in autos for b in autos]
    raw = []
    for g in maps:
        pts, _ = _safe_orbit(dom, g.forward_fn, np.asarray(p, dtype=complex), N)
        if not pts:
            continue
        tail = pts[-1]
        if float(boundary_distance_batch(dom, tail[None, :])[0]) < escape_delta:
            _, y = nearest_boundary_point(dom, tail)
            raw.append(y)
    uniq = []
    for y in raw:
        if all(cnorm(y - u) > dedup_tol for u in uniq):
            uniq.append(y)
    bps = [boundary_data(dom, y, boundary_tol=1e-5) for y in uniq]
    tags = []
    for bp in bps:
        tag = None
        for i, other in enumerate(bps[: len(tags)]):
            if same_complex_tangent(bp, other, tol=0.05):
                tag = tags[i]
                break
        tags.append(tag if tag is not None else (max(tags) + 1 if tags else 0))
    return LimitSetSample(points=bps, face_tags=tags)


# ---------------------------------------------------------------------------
# direct classification in the unbounded model (cross-check)


def siegel_classify_direct(s, auto, p, N=200, bound_cap=1e6):
    """Classify a Siegel-model automorphism from Euclidean exit markers.

    Orbits escaping through |w| -> infinity carry the marker "infinity";
    orbits approaching a finite boundary point carry that point.  Bounded
    forward and backward orbits give "elliptic"; equal markers "parabolic";
    distinct markers "hyperbolic".  Used to cross-check the Cayley-conjugated
    classification on the bounded model.
    """

    def marker(g):
        z = np.asarray(p, dtype=complex)
        traj = [z]
        for _ in range(N):
            z = g(z)
            traj.append(z)
            if abs(z[0]) > bound_cap:
                return "infinity", None
        traj = np.array(traj)
        gap = float(s.defining_fn(traj[-1]))
        if abs(gap) < 1e-6:
            return "finite", traj[-1]
        mods = np.abs(traj[:, 0])
        if mods[-1] > 10.0 * max(mods[0], 1e-12) and mods[-1] > 1.6 * np.median(mods):
            return "infinity", None  # steady modulus drift, exit through infinity
        half = len(mods) // 2
        if np.max(mods[half:]) <= np.max(mods[:half]) * 1.5 + 1e-9:
            return "bounded", None
        return "undetermined", None

    mk_f, pt_f = marker(auto.forward_fn)
    mk_b, pt_b = marker(auto.inverse_fn)
    if mk_f == "bounded" and mk_b == "bounded":
        return "elliptic"
    if "bounded" in (mk_f, mk_b) or "undetermined" in (mk_f, mk_b):
        return "undetermined"
    if mk_f == mk_b == "infinity":
        return "parabolic"
    if mk_f == "finite" and mk_b == "finite" and cnorm(pt_f - pt_b) < 1e-6:
        return "parabolic"
    return "hyperbolic"
