"""Reproducible experiment runner.

Usage: kobalt <command> --config <file> [--seed N] [--out DIR] [--threads K]
                                        [--plot]

Commands: distance, gromov, dichotomy, delta4, wolff, classify, search,
translate, linetype, scaling.  The config is a strict JSON object

    {"domain_spec": {...}, "command": "...", "params": {...},
     "seed": 0, "out_dir": "..."}

whose domain_spec follows the model-domain schema.  Every run writes
results.csv (one timestamp comment line, a header row, then data rows that
are byte-identical across reruns with the same config and seed) and
report.json (validating against the shipped schema).  Exit codes: 0 success,
2 validation failure, 3 numerical inconsistency.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .boundary import (
    INFINITE_TYPE,
    frankel_scaling,
    line_type,
    local_hausdorff_distance,
)
from .dynamics import (
    ball_mobius,
    ball_unitary,
    cayley_conjugate,
    classify,
    compose,
    ellipsoid_rotation,
    hyperbolic_search,
    siegel_dilation,
    siegel_translation,
    siegel_unitary,
    translation_check,
    wolff_denjoy,
)
from .errors import InternalInconsistency, KobaltError, SpecValidationError
from .geometry import boundary_data, sample_interior
from .hyperbolicity import (
    four_point_delta,
    product_dichotomy_experiment,
    two_face_curve,
)
from .metrics import distance_interval, gromov_product_interval
from .models import PolynomialEllipsoid, SiegelDomain, domain_from_spec

COMMANDS = ("distance", "gromov", "dichotomy", "delta4", "wolff", "classify",
            "search", "translate", "linetype", "scaling")
SAMPLING_COMMANDS = {"distance", "gromov", "delta4", "linetype"}
_CONFIG_KEYS = {"domain_spec", "command", "params", "seed", "out_dir"}

TOLERANCES = {
    "boundary_tol": 1e-8,
    "gradient_floor": 1e-10,
    "roundtrip_tol": 1e-10,
    "wolff_face_tol": 1e-6,
    "kobayashi_ball_cap": 10.0,
}


@dataclass
class ExperimentConfig:
    domain_spec: dict
    command: str
    params: dict
    seed: int | None
    out_dir: str


def load_config(path, command=None, seed=None, out_dir=None):
    """Parse and validate a config file; CLI flags override config fields."""
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecValidationError(f"cannot read config: {exc}") from exc
    if not isinstance(raw, dict):
        raise SpecValidationError("config must be a JSON object")
    extra = set(raw) - _CONFIG_KEYS
    if extra:
        raise SpecValidationError(f"unknown config fields {sorted(extra)}")
    cfg_command = raw.get("command", command)
    if command is not None and raw.get("command") not in (None, command):
        raise SpecValidationError(
            f"config command {raw.get('command')!r} conflicts with subcommand {command!r}")
    if cfg_command not in COMMANDS:
        raise SpecValidationError(f"unknown command {cfg_command!r}")
    if "domain_spec" not in raw:
        raise SpecValidationError("config requires 'domain_spec'")
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise SpecValidationError("'params' must be an object")
    cfg_seed = seed if seed is not None else raw.get("seed")
    if cfg_seed is not None and not isinstance(cfg_seed, int):
        raise SpecValidationError("'seed' must be an integer")
    if cfg_command in SAMPLING_COMMANDS and cfg_seed is None:
        raise SpecValidationError(f"command {cfg_command!r} samples and requires a seed")
    out = out_dir or raw.get("out_dir") or "."
    return ExperimentConfig(domain_spec=raw["domain_spec"], command=cfg_command,
                            params=dict(params), seed=cfg_seed, out_dir=out)


# ---------------------------------------------------------------------------
# serialization helpers


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (complex, np.complexfloating)):
        return f"{x.real:.12g}{x.imag:+.12g}j"
    if isinstance(x, (float, np.floating)):
        if np.isinf(x):
            return "inf"
        return f"{float(x):.12g}"
    return str(x)


def _fmt_point(z):
    return ";".join(_fmt(complex(c)) for c in np.atleast_1d(z))


def _cnum(v, what="complex number"):
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    raise SpecValidationError(f"{what} must be a number or [re, im] pair")


def _cpoint(v, what="point"):
    if not isinstance(v, (list, tuple)) or not v:
        raise SpecValidationError(f"{what} must be a nonempty list")
    return np.array([_cnum(c, what) for c in v], dtype=complex)


def write_outputs(cfg, columns, rows, summary, figures=()):
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stamp = datetime.now(timezone.utc).isoformat()
    lines = [f"# generated: {stamp}", ",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    (out / "results.csv").write_text("\n".join(lines) + "\n")
    report = {
        "tool": "kobalt",
        "version": __version__,
        "command": cfg.command,
        "seed": int(cfg.seed if cfg.seed is not None else 0),
        "tolerances": TOLERANCES,
        "params": _jsonable(cfg.params),
        "summary": _jsonable(summary),
        "timestamp": stamp,
    }
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    for name, fig in figures:
        fig.savefig(out / name, format="svg")
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else repr(f)
    if isinstance(obj, (complex, np.complexfloating)):
        return [obj.real, obj.imag]
    return obj


def parallel_map(fn, items, threads):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# automorphism specifications


_MAP_KEYS = {
    "ball_mobius": {"kind", "a"},
    "ball_unitary": {"kind", "matrix"},
    "siegel_translation": {"kind", "b"},
    "siegel_dilation": {"kind", "scale"},
    "siegel_unitary": {"kind", "phases"},
    "ellipsoid_rotation": {"kind", "theta_w", "z_phases"},
    "composite": {"kind", "factors"},
}


def automorphism_from_spec(dom, spec):
    """Build an automorphism on the given domain from its JSON description.

    Siegel-model generators requested on a polynomial ellipsoid are
    conjugated onto it through the Cayley map.
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise SpecValidationError("map spec must be an object with a 'kind'")
    kind = spec["kind"]
    if kind not in _MAP_KEYS:
        raise SpecValidationError(f"unknown map kind {kind!r}")
    extra = set(spec) - _MAP_KEYS[kind]
    if extra:
        raise SpecValidationError(f"unknown fields {sorted(extra)} for map {kind!r}")
    if kind == "composite":
        return compose(*[automorphism_from_spec(dom, s) for s in spec["factors"]])
    if kind == "ball_mobius":
        return ball_mobius(dom, _cpoint(spec["a"], "mobius parameter"))
    if kind == "ball_unitary":
        U = np.array([[_cnum(v) for v in row] for row in spec["matrix"]])
        return ball_unitary(dom, U)
    if kind == "ellipsoid_rotation":
        return ellipsoid_rotation(dom, float(spec["theta_w"]),
                                  spec.get("z_phases"))
    # Siegel-model generators
    if isinstance(dom, SiegelDomain):
        siegel, target = dom, None
    elif isinstance(dom, PolynomialEllipsoid):
        siegel, target = SiegelDomain(dom.poly), dom
    else:
        raise SpecValidationError(f"map {kind!r} needs a Siegel or ellipsoid domain")
    if kind == "siegel_translation":
        inner = siegel_translation(siegel, float(spec["b"]))
    elif kind == "siegel_dilation":
        inner = siegel_dilation(siegel, float(spec["scale"]))
    else:
        inner = siegel_unitary(siegel, [float(v) for v in spec["phases"]])
    return inner if target is None else cayley_conjugate(target, siegel, inner)


def _bounded_domain(cfg):
    dom = domain_from_spec(cfg.domain_spec)
    if isinstance(dom, SiegelDomain):
        raise SpecValidationError(
            "this command needs a bounded domain; use the ellipsoid spec "
            "(Siegel generators are conjugated automatically)")
    return dom


# ---------------------------------------------------------------------------
# command runners (each returns columns, rows, summary, figures)


def _run_distance(cfg, threads, plot):
    dom = _bounded_domain(cfg)
    params = cfg.params
    n_pairs = int(params.get("n_pairs", 10))
    radius_cap = params.get("radius_cap")
    budget = params.get("budget", "tight")
    rng = np.random.default_rng(cfg.seed)
    pts = sample_interior(dom, 2 * n_pairs, rng, radius_cap=radius_cap)
    pairs = [(pts[2 * i], pts[2 * i + 1]) for i in range(n_pairs)]
    ivs = parallel_map(lambda pq: distance_interval(dom, pq[0], pq[1], budget=budget),
                       pairs, threads)
    rows = [(_fmt_point(p), _fmt_point(q), iv.lower, iv.upper,
             f"{iv.lower_witness}|{iv.upper_witness}")
            for (p, q), iv in zip(pairs, ivs)]
    widths = [iv.width for iv in ivs]
    summary = {"n_pairs": n_pairs, "median_width": float(np.median(widths)),
               "max_width": float(np.max(widths))}
    return ["p", "q", "lower", "upper", "witness_kind"], rows, summary, []


def _run_gromov(cfg, threads, plot):
    dom = _bounded_domain(cfg)
    n = int(cfg.params.get("n_triples", 10))
    budget = cfg.params.get("budget", "tight")
    rng = np.random.default_rng(cfg.seed)
    pts = sample_interior(dom, 3 * n, rng, radius_cap=cfg.params.get("radius_cap"))
    triples = [(pts[3 * i], pts[3 * i + 1], pts[3 * i + 2]) for i in range(n)]
    ivs = parallel_map(
        lambda t: gromov_product_interval(dom, t[0], t[1], t[2], budget=budget),
        triples, threads)
    rows = [(_fmt_point(o), _fmt_point(p), _fmt_point(q), iv.lower, iv.upper)
            for (o, p, q), iv in zip(triples, ivs)]
    summary = {"n_triples": n,
               "median_width": float(np.median([iv.width for iv in ivs]))}
    return ["o", "p", "q", "lower", "upper"], rows, summary, []


def _run_dichotomy(cfg, threads, plot):
    dom = _bounded_domain(cfg)
    params = cfg.params
    for key in ("x", "y", "o"):
        if key not in params:
            raise SpecValidationError(f"dichotomy params require {key!r}")
    x = boundary_data(dom, _cpoint(params["x"]), boundary_tol=1e-6)
    y = boundary_data(dom, _cpoint(params["y"]), boundary_tol=1e-6)
    o = _cpoint(params["o"])
    n_steps = int(params.get("n_steps", 12))
    rep = product_dichotomy_experiment(dom, x, y, o, n_steps,
                                       budget=params.get("budget", "fast"))
    rows = [(int(i), int(j), rep.lower[i, j], rep.upper[i, j])
            for i in range(n_steps + 1) for j in range(n_steps + 1)]
    summary = {
        "same_point": rep.same_point,
        "diag_lower": rep.diag_lower,
        "diag_upper": rep.diag_upper,
        "final_diag_lower": float(rep.diag_lower[-1]),
        "max_upper_from_level4": float(rep.upper[4:, 4:].max()) if n_steps >= 4 else None,
    }
    figs = []
    if plot:
        figs.append(("trajectory.svg", _plot_trajectory(rep)))
    return ["n", "m", "product_lower", "product_upper"], rows, summary, figs


def _run_delta4(cfg, threads, plot):
    dom = _bounded_domain(cfg)
    params = cfg.params
    if "points" in params:
        pts = np.array([_cpoint(p) for p in params["points"]])
    else:
        rng = np.random.default_rng(cfg.seed)
        pts = sample_interior(dom, int(params.get("n_points", 6)), rng,
                              radius_cap=params.get("radius_cap"))
    rep = four_point_delta(pts, dom, budget=params.get("budget", "fast"))
    rows = [(int(i), _fmt_point(p)) for i, p in enumerate(pts)]
    summary = {"delta_hat": rep.delta_hat, "interval_slack": rep.interval_slack,
               "n_points": rep.n_points}
    return ["index", "point"], rows, summary, []


def _orbit_rows(report, direction):
    rows = []
    face = report.face_distances
    for k, pt in enumerate(report.orbit.points):
        rows.append((direction, int(k), _fmt_point(pt),
                     float(report.orbit.deltas[k]),
                     float(face[k]) if face is not None else float("inf")))
    return rows


def _run_wolff(cfg, threads, plot):
    dom = _bounded_domain(cfg)
    params = cfg.params
    if "map" not in params or "start" not in params:
        raise SpecValidationError("wolff params require 'map' and 'start'")
    fmap = automorphism_from_spec(dom, params["map"])
    start = _cpoint(params["start"])
    rep = wolff_denjoy(fmap, start, N=int(params.get("n_iter", 400)),
                       tol=float(params.get("tol", 1e-6)))
    rows = _orbit_rows(rep, "forward")
    summary = {
        "verdict": rep.verdict,
        "converged_below_tol": rep.converged_below_tol,
        "limit_point": _fmt_point(rep.limit_boundary_point.point)
        if rep.limit_boundary_point else None,
        "evidence": {k: v for k, v in rep.evidence.items()},
    }
    figs = []
    if plot:
        figs.append(("orbit.svg", _plot_orbit(rep.orbit.points)))
    return ["direction", "k", "point", "delta", "face_distance"], rows, summary, figs


def _run_classify(cfg, threads, plot):
    dom = _bounded_domain(cfg)
    params = cfg.params
    if "map" not in params or "start" not in params:
        raise SpecValidationError("classify params require 'map' and 'start'")
    phi = automorphism_from_spec(dom, params["map"])
    start = _cpoint(params["start"])
    cls = classify(phi, start, N=int(params.get("n_iter", 400)))
    rows = _orbit_rows(cls.evidence["forward"], "forward")
    rows += _orbit_rows(cls.evidence["backward"], "backward")
    summary = {
        "verdict": cls.verdict,
        "attracting_point": _fmt_point(cls.attracting.point) if cls.attracting else None,
        "repelling_point": _fmt_point(cls.repelling.point) if cls.repelling else None,
        "attracting_normal": _fmt_point(cls.attracting.tangent.normal)
        if cls.attracting else None,
        "repelling_normal": _fmt_point(cls.repelling.tangent.normal)
        if cls.repelling else None,
    }
    figs = []
    if plot:
        figs.append(("orbit.svg", _plot_orbit(
            cls.evidence["forward"].orbit.points,
            cls.evidence["backward"].orbit.points)))
    return ["direction", "k", "point", "delta", "face_distance"], rows, summary, figs


def _run_search(cfg, threads, plot):
    dom = _bounded_domain(cfg)
    params = cfg.params
    if "maps" not in params or "start" not in params:
        raise SpecValidationError("search params require 'maps' and 'start'")
    autos = [automorphism_from_spec(dom, s) for s in params["maps"]]
    res = hyperbolic_search(autos, _cpoint(params["start"]),
                            budget=int(params.get("budget", 2)),
                            N=int(params.get("n_iter", 300)))
    rows = [(name, verdict) for name, verdict in res.tried]
    summary = {"found": res.found.label if res.found else None,
               "verdict": res.classification.verdict if res.classification else "NotFound",
               "n_tried": len(res.tried)}
    return ["element", "verdict"], rows, summary, []


def _run_translate(cfg, threads, plot):
    dom = _bounded_domain(cfg)
    params = cfg.params
    if "map" not in params or "start" not in params:
        raise SpecValidationError("translate params require 'map' and 'start'")
    phi = automorphism_from_spec(dom, params["map"])
    start = _cpoint(params["start"])
    cls = classify(phi, start, N=int(params.get("n_iter", 300)))
    if cls.verdict != "hyperbolic":
        raise SpecValidationError(
            f"translation check needs a hyperbolic element, got {cls.verdict}")
    sigma = two_face_curve(dom, cls.attracting, cls.repelling)
    t_min = float(params.get("t_min", -4.0))
    t_max = float(params.get("t_max", 4.0))
    n_t = int(params.get("n_t", 9))
    rep = translation_check(phi, sigma, start, np.linspace(t_min, t_max, n_t),
                            k_max=int(params.get("k_max", 40)))
    rows = [(float(t), float(mu), int(k))
            for t, mu, k in zip(rep.t_grid, rep.min_upper, rep.argmin_k)]
    summary = {"sup_min_upper": rep.sup_min_upper, "verdict": cls.verdict}
    return ["t", "min_upper", "argmin_k"], rows, summary, []


def _run_linetype(cfg, threads, plot):
    dom = _bounded_domain(cfg)
    params = cfg.params
    if "point" not in params:
        raise SpecValidationError("linetype params require 'point'")
    bp = boundary_data(dom, _cpoint(params["point"]), boundary_tol=1e-6)
    res = line_type(dom, bp, cap=int(params.get("cap", 20)),
                    seed=int(cfg.seed or 0))
    tv = "inf" if res.type_value == INFINITE_TYPE else int(res.type_value)
    rows = [(_fmt_point(res.point.point), tv, _fmt_point(res.maximizing_line[1]),
             int(res.cap))]
    summary = {"type_value": tv, "cap": res.cap,
               "maximizing_direction": _fmt_point(res.maximizing_line[1])}
    return ["point", "type_value", "maximizing_direction", "cap"], rows, summary, []


def _run_scaling(cfg, threads, plot):
    dom = domain_from_spec(cfg.domain_spec)
    params = cfg.params
    times = np.asarray(params.get("times", [1, 2, 3, 4, 5]), dtype=float)
    deltas = params.get("deltas")
    radius = float(params.get("radius", 1.0))
    n_dirs = int(params.get("n_dirs", 96))
    base_point = _cpoint(params["base_point"]) if "base_point" in params else None
    seq = frankel_scaling(dom, times, deltas=deltas, base_point=base_point)
    reference = dom if isinstance(dom, SiegelDomain) else SiegelDomain(dom.poly)
    anchor = np.array([0.5j] + [0.0] * (reference.dim - 1))
    dists = parallel_map(
        lambda d: local_hausdorff_distance(d, reference, radius, n_dirs=n_dirs,
                                           anchor_a=anchor, anchor_b=anchor),
        seq.domains, threads)
    rows = [(int(i), float(t), float(h))
            for i, (t, h) in enumerate(zip(times, dists))]
    summary = {"kind": seq.kind, "hausdorff": list(map(float, dists)),
               "monotone_decreasing": bool(np.all(np.diff(dists) <= 1e-12)),
               "final": float(dists[-1])}
    return ["n", "t_n", "hausdorff"], rows, summary, []


def _plot_orbit(*orbits):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for pts in orbits:
        axes[0].plot(pts[:, 0].real, pts[:, 0].imag, ".-", ms=3, lw=0.7)
        if pts.shape[1] > 1:
            axes[1].plot(pts[:, 0].real, pts[:, 1].real, ".-", ms=3, lw=0.7)
    axes[0].set_xlabel("Re z1")
    axes[0].set_ylabel("Im z1")
    axes[1].set_xlabel("Re z1")
    axes[1].set_ylabel("Re z2")
    fig.tight_layout()
    return fig


def _plot_trajectory(rep):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(rep.levels, rep.diag_lower, "o-", label="lower")
    ax.plot(rep.levels, rep.diag_upper, "s-", label="upper")
    ax.set_xlabel("level")
    ax.set_ylabel("product bound")
    ax.legend()
    fig.tight_layout()
    return fig


_RUNNERS = {
    "distance": _run_distance,
    "gromov": _run_gromov,
    "dichotomy": _run_dichotomy,
    "delta4": _run_delta4,
    "wolff": _run_wolff,
    "classify": _run_classify,
    "search": _run_search,
    "translate": _run_translate,
    "linetype": _run_linetype,
    "scaling": _run_scaling,
}


def run(cfg, threads=1, plot=False):
    """Execute a validated experiment config; returns the output directory."""
    columns, rows, summary, figures = _RUNNERS[cfg.command](cfg, threads, plot)
    return write_outputs(cfg, columns, rows, summary, figures)


def build_parser():
    parser = argparse.ArgumentParser(prog="kobalt",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--threads", type=int,
                       default=int(os.environ.get("KOBALT_THREADS", "1")))
        p.add_argument("--plot", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, command=args.command, seed=args.seed,
                          out_dir=args.out)
        out = run(cfg, threads=max(1, args.threads), plot=args.plot)
    except (SpecValidationError,) as exc:
        print(f"kobalt: validation error: {exc}", file=sys.stderr)
        return 2
    except InternalInconsistency as exc:
        print(f"kobalt: numerical inconsistency: {exc}", file=sys.stderr)
        return 3
    except KobaltError as exc:
        print(f"kobalt: validation error: {exc}", file=sys.stderr)
        return 2
    print(f"kobalt: wrote {out / 'results.csv'} and {out / 'report.json'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
