"""Command-line entry point: fsl gen | analyze | zeta | poles | reconstruct | check."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import acceptance as acc
from . import normal_bundle as bd
from . import exponents as ex
from . import distance_field as fd
from . import plotting as pl
from . import tube_reconstruction as rc
from . import scene_model as sc
from . import spectra as sp
from . import zeta as zt
from .config import RunConfig, stamp
from .errors import BundleError, DivergenceError, GridError, PoleError, SteinerLabError

GENERATORS = ("sierpinski", "window", "dust", "square", "disk", "point", "segment")


# ------------------------------------------------------------------ helpers


def _threads():
    n = os.environ.get("FSL_THREADS")
    if n:
        import numba

        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


def build_scene(args) -> sc.SceneDescriptor:
    src = args.scene
    if src.endswith(".json") or os.path.sep in src:
        data = json.loads(Path(src).read_text())
        return sc.SceneDescriptor.from_dict(data.get("scene", data))
    if src in ("sg", "sierpinski"):
        return sc.generate_sierpinski(args.depth if args.depth is not None else 6)
    if src == "window":
        return sc.generate_fractal_window(args.r, args.depth if args.depth is not None else 3)
    if src == "dust":
        return sc.generate_dust(sc.DustParams(alpha=args.alpha, m=args.m, j_max=args.j_max,
                                              layout=args.layout))
    if src == "square":
        return sc.generate_square(args.side, filled=args.filled)
    if src == "disk":
        return sc.generate_disk(args.radius)
    if src == "point":
        return sc.generate_point()
    if src == "segment":
        return sc.generate_segment(args.length)
    raise sc.SceneError(f"unknown generator {src!r}; choose from {', '.join(GENERATORS)}")


def make_config(args) -> RunConfig:
    skip = {"command", "scene", "h", "margin", "eps_min", "eps_max", "per_octave", "depth", "seed",
            "out", "func"}
    extra = tuple(sorted((k, v if not isinstance(v, list) else tuple(v))
                         for k, v in vars(args).items() if k not in skip))
    return RunConfig(args.command, getattr(args, "scene", ""), getattr(args, "h", 0.0),
                     getattr(args, "margin", 0.0), getattr(args, "eps_min", None),
                     getattr(args, "eps_max", None), getattr(args, "per_octave", 4),
                     getattr(args, "depth", None), args.seed, extra)


def write_csv(path: Path, columns, rows, cfg: RunConfig) -> Path:
    buf = io.StringIO()
    for line in cfg.header():
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([acc._fmt(v) for v in r])
    path.write_text(buf.getvalue())
    return path


def write_text(path: Path, text: str, cfg: RunConfig) -> Path:
    path.write_text("".join(f"# {line}\n" for line in cfg.header()) + text)
    return path


def write_json(path: Path, payload: dict, cfg: RunConfig) -> Path:
    path.write_text(json.dumps(stamp(payload, cfg), indent=2, sort_keys=True, default=_jsonable) + "\n")
    return path


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return str(v)


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _eps_grid(args, scene, period):
    hi = args.eps_max if args.eps_max is not None else min(0.8 * args.margin, 0.25 * scene.diameter)
    lo = args.eps_min if args.eps_min is not None else 8 * args.h
    if not 0 < lo < hi:
        raise GridError(f"empty eps range [{lo}, {hi}]")
    if period is not None:
        return ex.periodic_samples(lo, hi, period, 2 * args.per_octave)
    return ex.geometric_samples(lo, hi, args.per_octave)


# ---------------------------------------------------------------- commands


def cmd_gen(args) -> int:
    cfg = make_config(args)
    scene = build_scene(args)
    out = _out(args)
    path = write_json(out / "scene.json", {"scene": scene.to_dict()}, cfg)
    print(f"{len(scene.elements)} elements -> {path}")
    return 0


def _estimates(beta0, beta1, tube, totals, window, period, derivative=False):
    M = acc.AUDIT_MODELS
    fits = {}
    fits["m0"] = ex.fit_basic_exponent(beta0, 0, window, models=M, period=period)
    fits["m1"] = ex.fit_basic_exponent(beta1, 1, window, models=M, period=period)
    fits["s0"] = ex.fit_support_exponent(totals, 0, models=M, period=period)
    fits["s1"] = ex.fit_support_exponent(totals, 1, models=M, period=period)
    if derivative:
        # a truncated construction shifts V by a constant; dV/deps is immune
        fits["D"] = ex.fit_scaling(tube.eps, tube.boundary_length, 1, "outer_minkowski_derivative",
                                   models=M, period=period)
    else:
        fits["D"] = ex.minkowski_dimension(tube, models=M, period=period)
    if np.any(tube.boundary_length > 0):
        fits["S_dim"] = ex.s_dimension(tube, period=period)
    return fits


def cmd_analyze(args) -> int:
    cfg = make_config(args)
    scene = build_scene(args)
    out = _out(args)
    period = ex.scale_period(scene.provenance)
    eps = _eps_grid(args, scene, period)
    report = {"scene": scene.provenance or {"elements": len(scene.elements)}}
    try:
        beta0, beta1 = bd.basic_functions(scene)
        report["beta_route"] = "bundle"
    except BundleError as err:
        beta0 = beta1 = None
        report["beta_route"] = f"grid ({err})"
    if args.route == "grid":
        fld = fd.build_field(scene, args.h, args.margin)
        tube = fd.tube_function(fld, eps)
        totals = fd.support_totals(fld, eps)
        if beta0 is None:
            beta0 = bd.beta_from_grid(totals, 0)
            beta1 = bd.beta_from_grid(totals, 1)
    else:
        if beta0 is None:
            raise BundleError("the bundle route needs a scene the bundle engine supports")
        tube = ex.bundle_tube(beta0, beta1, eps)
        totals = ex.bundle_support_totals(beta0, beta1, eps)
    window = (float(eps[0]), float(eps[-1]))
    if args.t_window:
        window = tuple(args.t_window)
    elif beta0.window and beta0.window[0] > 0:
        lo, hi = max(window[0], beta0.window[0]), min(window[1], beta0.window[1])
        window = (lo, hi) if hi > 4 * lo else beta0.window
    window = (max(window[0], 1e-300), min(window[1], scene.diameter))
    fits = _estimates(beta0, beta1, tube, totals, window, period, derivative=args.route == "bundle")
    report["estimates"] = {k: v.to_dict() for k, v in fits.items()}
    report["audit"] = ex.audit_to_dict(ex.exponent_inequality_audit(
        fits["m0"], fits["m1"], fits["s0"], fits["s1"], fits["D"]))
    stein = bd.steiner_volume(beta0, beta1, eps)
    report["steiner_residual"] = float(np.max(np.abs(stein / tube.volume - 1)))
    dim = fits["D"].exponent
    if math.isfinite(dim) and abs(dim - 2) > 1e-6:
        try:
            report["bridge"] = ex.bridge_checks(tube, totals, dim, beta0, beta1,
                                                period=period).to_dict()
        except SteinerLabError as err:
            report["bridge"] = f"skipped: {err}"
    write_csv(out / "tube.csv", ["eps", "volume", "boundary_length", "euler_char", "steiner_volume"],
              zip(tube.eps, tube.volume, tube.boundary_length, tube.euler_char.astype(float), stein),
              cfg)
    write_csv(out / "support.csv", ["eps", "mu0", "mu1"], totals, cfg)
    t = (ex.periodic_samples(*window, period, 16) if period
         else ex.geometric_samples(*window, args.per_octave))
    b0, b1 = beta0(t), beta1(t)
    write_csv(out / "beta.csv", ["t", "beta0", "beta1"], zip(t, b0, b1), cfg)
    write_json(out / "report.json", report, cfg)
    pl.write_dat(out / "tube.dat", {"eps": tube.eps, "volume": tube.volume}, cfg.header())
    pl.write_dat(out / "beta.dat", {"t": t, "beta1": np.abs(b1)}, cfg.header())
    pl.tube(out / "tube.png", tube.eps, tube.volume, stein)
    pl.basic_functions(out / "beta.png", t, np.abs(b0), np.abs(b1))
    for k, v in fits.items():
        print(f"{k:6s} {v.exponent:.6g} +/- {v.slope_stderr:.2g}")
    print(f"outputs in {out}")
    return 0


def cmd_zeta(args) -> int:
    cfg = make_config(args)
    scene = build_scene(args)
    out = _out(args)
    tag = "sg" if scene.provenance.get("generator") == "sierpinski" else None
    abscissa = args.abscissa
    if abscissa is None and tag == "sg":
        abscissa = math.log2(3.0)
    fld = fd.build_field(scene, args.h, args.margin) if args.grid else None
    exprs = sp.sg_basic_zeta_exprs(args.eps) if tag == "sg" and args.eps > acc.G else None
    rows, fe_rows = [], []
    svals = [complex(re, im) for re in args.re_s for im in zt.vertical_line(0.0, args.im_max, args.n).imag]
    for s in svals:
        try:
            zt._check_abscissa(s, abscissa, "sweep")
        except DivergenceError as err:
            rows.append((s, "all", str(err).replace(",", ";")))
            continue
        basic = []
        for i in (0, 1):
            try:
                ev = zt.basic_zeta_reach(scene, i, s, args.eps, abscissa)
            except (BundleError, PoleError) as err:
                rows.append((s, f"reach_integral_{i}", str(err).replace(",", ";")))
                ev = None
            if ev is not None:
                rows.append(ev)
                basic.append(ev)
            if exprs is not None:
                rows.append(zt.closed_form(exprs[i], s, args.eps, i))
        if fld is not None:
            za = zt.zeta_distance(fld, s, args.eps, abscissa)
            rows.append(za)
            if len(basic) == 2:
                fe = zt.functional_equation_residual(za, *basic)
                fe_rows.append((s.real, s.imag, fe.residual, fe.bound, fe.ok))
    (out / "zeta.csv").write_text(zt.sweep_to_csv(rows, cfg.header()))
    write_csv(out / "functional_equation.csv", ["re_s", "im_s", "residual", "bound", "ok"], fe_rows, cfg)
    evs = [r for r in rows if isinstance(r, zt.ZetaEvaluation)]
    if evs:
        pl.zeta_sweep(out / "zeta.png", evs)
    refused = sum(not isinstance(r, zt.ZetaEvaluation) for r in rows)
    print(f"{len(evs)} evaluations, {refused} refusals -> {out}")
    return 0


def cmd_poles(args) -> int:
    cfg = make_config(args)
    out = _out(args)
    region = (args.re_min, args.re_max, args.imcap)
    poles = sp.complex_dimensions(args.scene, region=region)
    (out / "poles.csv").write_text(sp.poles_to_csv(poles, cfg.header()))
    pl.poles(out / "poles.png", poles)
    for p in poles:
        print(f"w = {p.w.real:+.12f} {p.w.imag:+.12f}i  order {p.order}  "
              f"res {abs(p.residue):.6g}{'  removable' if p.removable else ''}")
    return 0


def cmd_reconstruct(args) -> int:
    cfg = make_config(args)
    out = _out(args)
    if args.tube:
        expr = sp.distance_zeta_expr(args.scene)
        value, ser = rc.reconstruct_tube(None, args.eps, args.K, expr)
        name, x = "tube", args.eps
    else:
        expr = sp.basic_zeta_exprs(args.scene)[args.i]
        value, ser = rc.reconstruct_beta(None, expr, args.i, args.t, args.K)
        name, x = f"beta{args.i}", args.t
    (out / f"reconstruct_{name}.csv").write_text(ser.to_csv(cfg.header()))
    write_json(out / f"reconstruct_{name}.json",
               {"quantity": name, "x": x, "K": args.K, "value": value, "tail_bound": ser.tail_bound}, cfg)
    pl.partial_sums(out / f"reconstruct_{name}.png", ser)
    print(f"{name}({x}) = {value:.12g}  (tail bound {ser.tail_bound:.2g})")
    return 0


def cmd_check(args) -> int:
    cfg = make_config(args)
    suite = acc.QUICK if args.quick else acc.SuiteConfig()
    if args.criteria:
        suite = acc.SuiteConfig(**{**suite.__dict__, "criteria": tuple(args.criteria)})
    results = acc.run_suite(suite, _out(args), cfg.header(), echo=print)
    npass = sum(r.passed for r in results)
    print(f"{npass}/{len(results)} criteria pass")
    return 0


# ------------------------------------------------------------------ parser


def _common(p, grid=True):
    p.add_argument("--out", default="fsl_out", help="output directory")
    p.add_argument("--seed", type=int, default=0)
    if grid:
        p.add_argument("--h", type=float, default=1 / 1024, help="grid spacing")
        p.add_argument("--margin", type=float, default=0.3)
        p.add_argument("--eps-min", type=float, default=None)
        p.add_argument("--eps-max", type=float, default=None)
        p.add_argument("--per-octave", type=int, default=4)


def _scene_args(p):
    p.add_argument("scene", help=f"generator ({', '.join(GENERATORS)}) or scene JSON path")
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--r", type=float, default=1 / 3, help="window ratio")
    p.add_argument("--alpha", type=float, default=2 / 3)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--j-max", type=int, default=2000)
    p.add_argument("--layout", default="ideal", choices=sc.DUST_LAYOUTS)
    p.add_argument("--side", type=float, default=1.0)
    p.add_argument("--filled", action="store_true")
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--length", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fsl", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a scene JSON")
    _scene_args(p)
    _common(p, grid=False)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("analyze", help="tube, support totals, basic functions, exponents")
    _scene_args(p)
    _common(p)
    p.add_argument("--route", choices=("grid", "bundle"), default="grid",
                   help="tube and totals from the raster or from the basic functions")
    p.add_argument("--t-window", type=float, nargs=2, default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("zeta", help="zeta sweep along vertical lines")
    _scene_args(p)
    _common(p)
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--re-s", type=float, nargs="+", default=[2.0])
    p.add_argument("--im-max", type=float, default=20.0)
    p.add_argument("--n", type=int, default=81)
    p.add_argument("--abscissa", type=float, default=None)
    p.add_argument("--no-grid", dest="grid", action="store_false")
    p.set_defaults(func=cmd_zeta)

    p = sub.add_parser("poles", help="complex dimensions of a registered scene")
    p.add_argument("scene", choices=sp.registered_scenes())
    p.add_argument("--imcap", type=float, default=30.0)
    p.add_argument("--re-min", type=float, default=-1.0)
    p.add_argument("--re-max", type=float, default=3.0)
    _common(p, grid=False)
    p.set_defaults(func=cmd_poles)

    p = sub.add_parser("reconstruct", help="residue sums for beta_i or the tube volume")
    p.add_argument("scene", choices=sp.registered_scenes())
    p.add_argument("--i", type=int, default=1)
    p.add_argument("--t", type=float, default=0.1)
    p.add_argument("--K", type=int, default=rc.DEFAULT_K)
    p.add_argument("--tube", action="store_true")
    p.add_argument("--eps", type=float, default=0.05)
    _common(p, grid=False)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("check", help="run the acceptance suite")
    p.add_argument("--quick", action="store_true", help="coarse grids, cheap criteria")
    p.add_argument("--criteria", type=int, nargs="+", default=None)
    _common(p, grid=False)
    p.set_defaults(func=cmd_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _threads()
    try:
        return args.func(args)
    except SteinerLabError as err:
        print(f"error ({type(err).__name__}): {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
