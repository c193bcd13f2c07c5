"""Command-line front end.

Every subcommand prints a JSON run report to stdout, or to ``--out`` when
given.  Failures print a report with an ``error`` member, a short message
on stderr and exit with status 1.  Usage errors exit with status 2.

Scene files are JSON documents validated against :data:`SCENE_SCHEMA`::

    {"version": 1,
     "domain": {"kind": "disk-interior"},
     "patches": [{"center_angle": 0.0, "half_length": 0.1,
                  "bc": {"type": "dirichlet"}}]}

Interior targets use ``"targets"`` instead of ``"patches"``::

    {"targets": [{"center": [0.5, 0.0], "size": 0.05, "bc": {"type": "dirichlet"}}]}
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
import warnings
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import capture_asymptotics as cap
from . import extensions as ext
from . import halfplane_basis as hb
from . import steklov_asymptotics as stk
from .errors import NarrowEscapeError, SceneError, UnsupportedError
from .geometry_greens import Domain

SCENE_VERSION = 1
DIGITS = 12
CSV_DIGITS = 9
UNITS = "dimensionless: unit-disk (or semi-axis) lengths, unit diffusivity"

_BC = {
    "type": "object",
    "additionalProperties": False,
    "required": ["type"],
    "properties": {
        "type": {"enum": list(cap.CONDITIONS)},
        "q": {"type": "number", "exclusiveMinimum": 0},
    },
}
_POINT = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

SCENE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "narrowescape scene",
    "type": "object",
    "additionalProperties": False,
    "required": ["domain"],
    "properties": {
        "version": {"const": SCENE_VERSION},
        "domain": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["disk-interior", "disk-exterior",
                                  "ellipse-interior", "ellipse-exterior"]},
                "a": {"type": "number", "exclusiveMinimum": 0},
                "b": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "patches": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["half_length"],
                "oneOf": [{"required": ["center_angle"]}, {"required": ["center_xy"]}],
                "properties": {
                    "center_angle": {"type": "number"},
                    "center_xy": _POINT,
                    "half_length": {"type": "number", "exclusiveMinimum": 0},
                    "bc": _BC,
                },
            },
        },
        "targets": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["center", "size"],
                "properties": {
                    "center": _POINT,
                    "size": {"type": "number", "exclusiveMinimum": 0},
                    "shape": {"enum": list(ext.SHAPES)},
                    "capacity": {"type": "number", "exclusiveMinimum": 0},
                    "bc": _BC,
                },
            },
        },
    },
    "oneOf": [{"required": ["patches"]}, {"required": ["targets"]}],
}


@dataclass(frozen=True)
class TargetScene:
    """Interior targets in a bounded domain."""

    domain: Domain
    targets: tuple


# ---------------------------------------------------------------------------
# scene files
# ---------------------------------------------------------------------------

def _json_path(error):
    return "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in error.absolute_path)


def parse_scene(doc):
    """Validate a scene document and build a Scene or TargetScene."""
    try:
        jsonschema.validate(doc, SCENE_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = _json_path(exc)
        raise SceneError(f"scene schema error at {path}: {exc.message}", path=path) from None
    dom = doc["domain"]
    kind = dom["kind"]
    if kind.startswith("disk"):
        if any(dom.get(key, 1.0) != 1.0 for key in ("a", "b")):
            raise SceneError("scene schema error at $.domain: disk domains have a = b = 1",
                             path="$.domain")
        domain = Domain(kind)
    else:
        if "a" not in dom or "b" not in dom:
            raise SceneError("scene schema error at $.domain: ellipses need a and b",
                             path="$.domain")
        try:
            domain = Domain(kind, float(dom["a"]), float(dom["b"]))
        except ValueError as exc:
            raise SceneError(f"scene schema error at $.domain: {exc}", path="$.domain") from None
    if "patches" in doc:
        specs = []
        for p in doc["patches"]:
            center = p["center_angle"] if "center_angle" in p else tuple(p["center_xy"])
            bc = p.get("bc", {"type": "dirichlet"})
            specs.append(cap.PatchSpec(center, p["half_length"], bc["type"], bc.get("q")))
        return cap.Scene(domain, tuple(specs))
    targets = []
    for t in doc["targets"]:
        bc = t.get("bc", {"type": "dirichlet"})
        targets.append(ext.InteriorTargetSpec(tuple(t["center"]), t["size"],
                                              t.get("shape", "disk"), t.get("capacity"),
                                              bc["type"], bc.get("q")))
    ext.validate_targets(domain, targets)
    return TargetScene(domain, tuple(targets))


def load_scene(path):
    """Read and validate a scene file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SceneError(f"cannot read scene file {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneError(f"scene file {path} is not valid JSON: {exc}") from None
    return parse_scene(doc)


def _bc(condition, q):
    return {"type": condition} if q is None else {"type": condition, "q": float(q)}


def serialize_scene(scene):
    """Canonical JSON document of a Scene or TargetScene."""
    dom = scene.domain
    domain = {"kind": dom.kind}
    if not dom.is_disk:
        domain.update(a=float(dom.a), b=float(dom.b))
    doc = {"version": SCENE_VERSION, "domain": domain}
    if isinstance(scene, TargetScene):
        doc["targets"] = []
        for t in scene.targets:
            item = {"center": [float(c) for c in t.center], "size": float(t.size),
                    "shape": t.shape, "bc": _bc(t.condition, t.q)}
            if t.shape == "custom":
                item["capacity"] = float(t.capacity)
            doc["targets"].append(item)
    else:
        doc["patches"] = [{"center_angle": float(pt.param), "half_length": float(p.half_length),
                           "bc": _bc(p.condition, p.q)}
                          for p, pt in zip(scene.patches, scene.points)]
    return doc


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def _round(value):
    if isinstance(value, dict):
        return {k: _round(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round(v) for v in value]
    if isinstance(value, np.ndarray):
        return _round(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return float(f"{value:.{DIGITS}g}") if np.isfinite(value) else str(value)
    return value


def _digest(payload):
    text = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()


def _patch_list(scene):
    return [{"index": i + 1, "center_angle": float(pt.param), "half_length": p.half_length,
             "condition": p.condition} for i, (p, pt) in enumerate(zip(scene.patches, scene.points))]


def _need(scene, kind):
    if kind == "patches" and isinstance(scene, TargetScene):
        raise SceneError("this command needs a scene with boundary patches")
    if kind == "targets" and not isinstance(scene, TargetScene):
        raise SceneError("this command needs a scene with interior targets")
    return scene


# ---------------------------------------------------------------------------
# field grids
# ---------------------------------------------------------------------------

def _grid_points(domain, nx, ny):
    if domain.is_interior:
        hx, hy = domain.a, domain.b
    else:
        hx = hy = 3 * domain.a
    xs, ys = np.linspace(-hx, hx, nx), np.linspace(-hy, hy, ny)
    gx, gy = np.meshgrid(xs, ys)          # row-major: y outer, x inner
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    lev = domain.level(pts)
    inside = lev < 1 - 1e-9 if domain.is_interior else lev > 1 + 1e-9
    return pts, inside


def field_grid(evaluate, domain, nx, ny, exclude=()):
    """Sample ``evaluate`` on a row-major grid over the bounding box.

    Returns ``(points, values)``; values are NaN outside the domain and inside
    any excluded ``(center, radius)`` disk.
    """
    if nx < 2 or ny < 2:
        raise SceneError("grid needs at least 2 points per direction")
    pts, inside = _grid_points(domain, nx, ny)
    for center, radius in exclude:
        inside &= np.hypot(pts[:, 0] - center[0], pts[:, 1] - center[1]) > radius
    values = np.full(len(pts), np.nan)
    if inside.any():
        values[inside] = evaluate(pts[inside])
    return pts, values


def write_csv(stream, points, values):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["x", "y", "value"])
    for (x, y), v in zip(points, values):
        writer.writerow([f"{x:.{CSV_DIGITS}g}", f"{y:.{CSV_DIGITS}g}",
                         "" if np.isnan(v) else f"{v:.{CSV_DIGITS}g}"])


def _emit_grid(args, evaluate, domain, exclude=()):
    if not args.grid:
        return None
    if not args.csv:
        raise SceneError("--grid needs --csv PATH for the field samples")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pts, vals = field_grid(evaluate, domain, args.grid[0], args.grid[1], exclude)
    with open(args.csv, "w", newline="") as fh:
        write_csv(fh, pts, vals)
    return {"csv": str(args.csv), "nx": args.grid[0], "ny": args.grid[1],
            "inside": int(np.count_nonzero(~np.isnan(vals)))}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _interior_exclusions(scene):
    return [(t.center, t.size) for t in scene.targets]


def cmd_splitting(args):
    scene = load_scene(args.scene)
    if isinstance(scene, TargetScene):
        sol = ext.interior_splitting(scene.domain, scene.targets, args.target)
        exclude = _interior_exclusions(scene)
    else:
        sol = cap.solve_splitting(scene, args.target)
        exclude = ()
    out = {"target": args.target, "chi": sol.chi, "coefficients": sol.coeffs,
           "gauges": sol.nu}
    grid = _emit_grid(args, lambda p: sol.field(p, cap=True), sol.domain, exclude)
    if grid:
        out["grid"] = dict(grid, capped_to=[0, 1])
    return scene, out, list(sol.warnings)


def cmd_mfrt(args):
    scene = load_scene(args.scene)
    if isinstance(scene, TargetScene):
        sol = ext.interior_mfrt(scene.domain, scene.targets)
        exclude = _interior_exclusions(scene)
    else:
        sol = cap.solve_mfrt(scene)
        exclude = ()
    out = {"mean_time": sol.mean_time, "coefficients": sol.coeffs, "gauges": sol.nu}
    grid = _emit_grid(args, sol.field, sol.domain, exclude)
    if grid:
        out["grid"] = grid
    return scene, out, list(sol.warnings)


def cmd_sn(args):
    scene = _need(load_scene(args.scene), "patches")
    spec = stk.sn_spectrum(scene)
    out = {"sigma": spec.sigma, "coefficients": spec.coeffs, "patches": _patch_list(scene)}
    return scene, out, list(spec.warnings)


def cmd_snd(args):
    if args.equally_spaced:
        count, eps, ratio = args.equally_spaced
        modes = stk.SND_MODES if args.mode == "all" else (args.mode,)
        out = {"count": int(count), "eps": eps, "ratio": ratio,
               "inverse_scaled": {m: stk.snd_equally_spaced(int(count), eps, ratio, m)
                                  for m in modes}}
        return {"equally_spaced": [count, eps, ratio]}, out, []
    if not args.scene:
        raise SceneError("snd needs --scene or --equally-spaced N EPS RATIO")
    scene = _need(load_scene(args.scene), "patches")
    res = stk.snd_principal(scene, roots=args.roots, higher=args.higher)
    out = {"constant": res.constant, "sigma0": res.sigma0,
           "inverse_scaled": res.inverse_scaled,
           "root_sigma": res.roots / res.half_length, "roots": res.roots,
           "higher_sigma": res.higher, "coefficients": res.coeffs}
    return scene, out, list(res.warnings)


def cmd_basis(args):
    basis = hb.build_basis(args.K, args.M)
    mu = basis.mu
    rows = []
    for k in range(1, (basis.count - 1) // 2 + 1):
        rows.append({"k": k, "mu_odd": mu[2 * k - 1], "mu_even": mu[2 * k],
                     "pi_k": np.pi * k, "psi_inf_sq": basis.coeffs[2 * k, 0] ** 2,
                     "inv_pi2_k": 1.0 / (np.pi**2 * k)})
    out = {"K": basis.count, "M": basis.truncation, "rows": rows}
    return {"K": args.K, "M": args.M}, out, []


def cmd_cfun(args):
    basis = hb.build_basis(args.K, args.M) if (args.K, args.M) != (
        hb.DEFAULT_COUNT, hb.DEFAULT_TRUNCATION) else hb.default_basis()
    cfun = hb.CFunction(basis, tail=not args.no_tail, modes=args.modes)
    values = [{"mu": m, "C": cfun(m)} for m in args.mu]
    taylor = hb.taylor_coeffs(basis, 2, modes=args.modes, tail=not args.no_tail)
    out = {"values": values, "retained_modes": cfun.retained, "tail": not args.no_tail,
           "taylor": {"series": taylor.series, "exact_c1": taylor.exact_c1,
                      "exact_c2": taylor.exact_c2}}
    return {"mu": args.mu, "modes": args.modes}, out, []


def cmd_kappa(args):
    count = args.N
    orders = cap.KAPPA_ORDERS if args.mode == "all" else (
        () if args.mode == "exact" else (args.mode,))
    notes = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rows = []
        for j in range(1, count // 2 + 1):
            row = {"j": j, "exact": cap.kappa_exact(count, j)}
            for order in orders:
                row[order] = cap.kappa_asymptotic(count, j, order, args.coefficient)
            rows.append(row)
    notes.extend(sorted({str(w.message) for w in caught}))
    return {"N": count, "mode": args.mode}, {"N": count, "rows": rows}, notes


def cmd_interior(args):
    scene = _need(load_scene(args.scene), "targets")
    if args.quantity == "splitting":
        return cmd_splitting(args)
    if args.quantity == "mfrt":
        return cmd_mfrt(args)
    if len(scene.targets) != 2:
        raise SceneError("interior snd needs exactly two targets (Steklov, then Dirichlet)")
    inv = ext.interior_snd_inverse(scene.domain, *scene.targets)
    out = {"inverse_scaled": inv, "sigma0": 1.0 / (scene.targets[0].size * inv)}
    return scene, out, []


def cmd_exterior(args):
    scene = _need(load_scene(args.scene), "patches")
    if scene.domain.is_interior:
        raise UnsupportedError("exterior needs an exterior domain "
                               "(disk-exterior or ellipse-exterior)")
    if args.quantity == "splitting":
        return cmd_splitting(args)
    if args.quantity == "mfrt":
        return cmd_mfrt(args)
    return cmd_sn(args)


def _start_point(args):
    if args.start is None:
        return "uniform"
    return tuple(args.start)


def cmd_oracle(args):
    from .oracle import collocation as col
    from .oracle import montecarlo as mc

    scene = load_scene(args.scene)
    notes = []
    if args.method == "mc":
        target = scene.targets if isinstance(scene, TargetScene) else scene
        if isinstance(scene, TargetScene) and not scene.domain.is_disk:
            raise UnsupportedError("the Monte Carlo oracle needs the unit disk")
        cfg = mc.McConfig(walkers=args.walkers, seed=args.seed, dt=args.dt)
        start = _start_point(args)
        if args.quantity == "splitting":
            est = mc.mc_splitting(target, args.target, start, cfg)
        elif args.quantity == "mfrt":
            est = mc.mc_mfpt(target, start, cfg)
        else:
            raise UnsupportedError("the Monte Carlo oracle estimates splitting or mfrt only")
        out = {"method": "mc", "quantity": args.quantity, "mean": est.mean,
               "stderr": est.stderr, "samples": est.samples, "backend": mc.BACKEND,
               "seed": cfg.seed, "start": start if isinstance(start, str) else list(start)}
        return scene, out, notes
    cfg = col.CollocationConfig(order=args.order)
    out = {"method": "collocation", "quantity": args.quantity, "order": cfg.order}
    if isinstance(scene, TargetScene):
        if args.quantity != "splitting" or not scene.domain.is_disk:
            raise UnsupportedError("collocation with interior targets covers splitting "
                                   "in the unit disk only")
        circles = [col.Circle(t.center, t.size, t.condition) for t in scene.targets]
        _, field = col.circles_splitting(circles, args.target, cfg)
        pt = _start_point(args)
        if pt == "uniform":
            out["chi"] = col.perforated_average(field, circles)
        else:
            out["value"] = float(field(np.array(pt))[0])
        return scene, out, notes
    if args.quantity == "splitting":
        chi, _ = col.collocation_splitting(scene, args.target, cfg)
        out["chi"] = chi
    elif args.quantity == "mfrt":
        mean, _ = col.collocation_mfrt(scene, cfg)
        out["mean_time"] = mean
    else:
        modes = col.collocation_steklov(scene, args.count, cfg)
        out["sigma"] = modes.sigma
        out["residuals"] = modes.residuals
    return scene, out, notes


# ---------------------------------------------------------------------------
# argument parsing and the run loop
# ---------------------------------------------------------------------------

def _grid_options(p):
    p.add_argument("--grid", nargs=2, type=int, metavar=("NX", "NY"),
                   help="sample the (capped) field on an NX x NY grid")
    p.add_argument("--csv", help="CSV output for --grid (header x,y,value)")


def build_parser():
    parser = argparse.ArgumentParser(prog="narrowescape",
                                     description="Small-target diffusion asymptotics and oracles.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--out", help="write the JSON report here instead of stdout")
    parser.add_argument("--no-timing", action="store_true",
                        help="omit wall time so reports are byte-for-byte reproducible")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("splitting", help="splitting probability chi_k and its field")
    p.add_argument("--scene", required=True)
    p.add_argument("--target", type=int, default=1, help="1-based patch or target index")
    _grid_options(p)
    p.set_defaults(func=cmd_splitting)

    p = sub.add_parser("mfrt", help="volume-averaged mean first-reaction time")
    p.add_argument("--scene", required=True)
    _grid_options(p)
    p.set_defaults(func=cmd_mfrt)

    p = sub.add_parser("sn", help="Steklov-Neumann eigenvalues for Steklov patches")
    p.add_argument("--scene", required=True)
    p.set_defaults(func=cmd_sn)

    p = sub.add_parser("snd", help="principal Steklov-Neumann-Dirichlet eigenvalue")
    p.add_argument("--scene")
    p.add_argument("--roots", type=int, default=5)
    p.add_argument("--higher", type=int, default=6)
    p.add_argument("--equally-spaced", nargs=3, type=float, metavar=("N", "EPS", "RATIO"),
                   help="N equally spaced patches, Dirichlet half-length EPS, "
                        "Steklov length ratio 2 eps_1 / EPS")
    p.add_argument("--mode", default="all", choices=("all",) + stk.SND_MODES)
    p.set_defaults(func=cmd_snd)

    p = sub.add_parser("basis", help="interval Steklov eigenvalue table")
    p.add_argument("--K", type=int, default=21, help="eigenpairs, constant mode included")
    p.add_argument("--M", type=int, default=100, help="cosine harmonics kept")
    p.set_defaults(func=cmd_basis)

    p = sub.add_parser("cfun", help="far-field constant C(mu) and its Taylor coefficients")
    p.add_argument("--mu", type=float, nargs="+", default=[1.0])
    p.add_argument("--modes", type=int, help="even modes retained (default: all)")
    p.add_argument("--no-tail", action="store_true", help="drop the large-k tail correction")
    p.add_argument("--K", type=int, default=hb.DEFAULT_COUNT)
    p.add_argument("--M", type=int, default=hb.DEFAULT_TRUNCATION)
    p.set_defaults(func=cmd_cfun)

    p = sub.add_parser("kappa", help="circulant eigenvalues kappa_j, exact and approximate")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--mode", default="all", choices=("all", "exact") + cap.KAPPA_ORDERS)
    p.add_argument("--coefficient", type=float, default=1.25,
                   help="quadratic weight of the empirical approximation")
    p.set_defaults(func=cmd_kappa)

    p = sub.add_parser("interior", help="interior targets: splitting, mfrt or snd")
    p.add_argument("--scene", required=True)
    p.add_argument("--quantity", default="splitting", choices=("splitting", "mfrt", "snd"))
    p.add_argument("--target", type=int, default=1)
    _grid_options(p)
    p.set_defaults(func=cmd_interior)

    p = sub.add_parser("exterior", help="patches on an obstacle in an unbounded domain")
    p.add_argument("--scene", required=True)
    p.add_argument("--quantity", default="splitting", choices=("splitting", "mfrt", "sn"))
    p.add_argument("--target", type=int, default=1)
    _grid_options(p)
    p.set_defaults(func=cmd_exterior)

    p = sub.add_parser("oracle", help="collocation or Monte Carlo reference values")
    p.add_argument("--scene", required=True)
    p.add_argument("--method", default="collocation", choices=("collocation", "mc"))
    p.add_argument("--quantity", default="splitting", choices=("splitting", "mfrt", "steklov"))
    p.add_argument("--target", type=int, default=1)
    p.add_argument("--count", type=int, default=4, help="Steklov eigenvalues requested")
    p.add_argument("--order", type=int, default=48, help="collocation basis order")
    p.add_argument("--walkers", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--start", nargs=2, type=float, metavar=("X", "Y"),
                   help="start point (default: uniform over the domain)")
    p.set_defaults(func=cmd_oracle)
    return parser


def _echo(argv):
    return " ".join(argv)


def run(argv=None):
    """Run one command; returns ``(exit_status, report, parsed_args)``."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    report = {"command": _echo(argv), "units": UNITS}
    status = 0
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            inputs, outputs, notes = args.func(args)
            if isinstance(inputs, (cap.Scene, TargetScene)):
                inputs = serialize_scene(inputs)
            report["inputs_digest"] = _digest({"inputs": inputs, "command": args.command,
                                               "argv": argv})
            report["outputs"] = outputs
        except NarrowEscapeError as exc:
            status = 1
            report["error"] = {"code": exc.code, "message": str(exc),
                               "details": {k: v for k, v in exc.details.items()}}
            notes = []
        except (IndexError, ValueError) as exc:
            status = 1
            report["error"] = {"code": "invalid-argument", "message": str(exc), "details": {}}
            notes = []
    report["warnings"] = list(dict.fromkeys(list(notes) + [str(w.message) for w in caught]))
    if not args.no_timing:
        report["timing"] = {"seconds": time.perf_counter() - start}
    return status, _round(report), args


def main(argv=None):
    status, report, args = run(argv)
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")
    if status:
        err = report["error"]
        sys.stderr.write(f"error [{err['code']}]: {err['message']}\n")
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
