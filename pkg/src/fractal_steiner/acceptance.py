"""Acceptance criteria as library functions, shared by the CLI and the tests.

Each criterion returns a CriterionResult whose rows are written to CSV with
fixed formatting, so repeated runs of one configuration are byte-identical.
"""

from __future__ import annotations

import csv
import io
import math
import tempfile
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

import numpy as np

from . import normal_bundle as bd
from . import exponents as ex
from . import distance_field as fd
from . import scene_model as sc
from . import spectra as sp
from . import zeta as zt
from .constants import SG_INRADIUS
from .tube_reconstruction import reconstruct_beta, reconstruct_tube

G = SG_INRADIUS
LOG2_3 = math.log2(3.0)
LOG3_4 = math.log(4.0) / math.log(3.0)


@dataclass(frozen=True)
class SuiteConfig:
    h_convex: float = 1 / 1024
    h_fractal: float = 1 / 2048
    h_corpus: float = 1 / 512
    margin: float = 0.3
    sg_depth: int = 8
    fw_depth: int = 5
    per_period: int = 8
    zeta_eps: float = 0.25
    K: int = 50
    criteria: tuple = tuple(range(1, 11))


# coarse grids and the cheap criteria; used by the reproducibility check
QUICK = SuiteConfig(h_convex=1 / 256, h_fractal=1 / 512, h_corpus=1 / 256, sg_depth=6,
                    criteria=(1, 2, 5, 6))


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    summary: str
    columns: list = field(default_factory=list)
    rows: list = field(default_factory=list)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name}: {self.summary}"

    def to_csv(self, header_lines: list[str] | None = None) -> str:
        buf = io.StringIO()
        for line in header_lines or []:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(v) for v in r])
        return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.12g}"
    return str(v)


def sg_oracle(t: float, depth: int | None = None) -> float:
    """beta_1 by direct summation over removed triangles; ``depth`` caps the
    generations (None: the limit gasket)."""
    n = int(math.floor(math.log2(G / t))) + 1
    if depth is not None:
        n = min(n, depth)
    return 1.5 + sum(3.0 ** (k - 1) * 3.0 * (2.0 ** (-k - 1) - math.sqrt(3.0) * t)
                     for k in range(1, n + 1))


# ------------------------------------------------------------------ context


class Context:
    """Scenes, fields and fits built on first use and shared by the criteria."""

    def __init__(self, cfg: SuiteConfig = SuiteConfig()):
        self.cfg = cfg

    # scenes
    @cached_property
    def sg(self):
        return sc.generate_sierpinski(self.cfg.sg_depth)

    @cached_property
    def sg_beta(self):
        return bd.basic_functions(self.sg)

    def fw(self, r: float):
        return sc.generate_fractal_window(r, self.cfg.fw_depth)

    @cached_property
    def dust(self):
        return sc.generate_dust(sc.DustParams())

    # grids
    @cached_property
    def sg_field(self):
        return fd.build_field(self.sg, self.cfg.h_fractal, self.cfg.margin)

    @cached_property
    def sg_eps(self):
        h = self.cfg.h_fractal
        # half contour lengths need the level sets resolved: eps >= 8h
        return ex.periodic_samples(max(G * 2.0 ** -7, 8 * h), G, 2.0, self.cfg.per_period)

    @cached_property
    def sg_tube(self):
        return fd.tube_function(self.sg_field, self.sg_eps)

    @cached_property
    def sg_totals(self):
        return fd.support_totals(self.sg_field, self.sg_eps)

    def fw_grid(self, r: float):
        key = f"_fw_{r:.6f}"
        if key not in self.__dict__:
            scene = self.fw(r)
            h = self.cfg.h_fractal
            fld = fd.build_field(scene, h, self.cfg.margin)
            p = (1 - 2 * r) / 3
            eps = ex.periodic_samples(8 * h, p, 1 / r, self.cfg.per_period)
            self.__dict__[key] = (scene, fld, eps, fd.tube_function(fld, eps),
                                  fd.support_totals(fld, eps))
        return self.__dict__[key]

    def convex_grid(self, name: str):
        key = f"_cv_{name}"
        if key not in self.__dict__:
            scene = corpus_scene(name)
            h = self.cfg.h_corpus
            fld = fd.build_field(scene, h, self.cfg.margin)
            eps = fd.dyadic_eps(0.25, 8 * h, 4)
            self.__dict__[key] = (scene, fld, eps, fd.tube_function(fld, eps),
                                  fd.support_totals(fld, eps))
        return self.__dict__[key]


def corpus_scene(name: str):
    return {"square": lambda: sc.generate_square(1.0, filled=True),
            "disk": lambda: sc.generate_disk(0.5),
            "segment": lambda: sc.generate_segment(1.0),
            "point": sc.generate_point}[name]()


# ----------------------------------------------------------------- criteria


def criterion_1(ctx: Context) -> CriterionResult:
    h = ctx.cfg.h_convex
    eps = fd.dyadic_eps(0.5, 8 * h, 4)
    rows = []
    worst = 0.0
    for name, scene, perim in (("square", sc.generate_square(1.0, filled=True), 4.0),
                               ("disk", sc.generate_disk(0.5), math.pi)):
        fld = fd.build_field(scene, h, 0.55)
        vol = fd.tube_volume(fld, eps)
        ref = perim * eps + math.pi * eps ** 2
        rel = np.abs(vol / ref - 1)
        worst = max(worst, float(rel.max()))
        rows += [(name, e, v, r, q) for e, v, r, q in zip(eps, vol, ref, rel)]
    return CriterionResult(1, "convex Steiner exactness", worst <= 0.02,
                           f"max rel err {worst:.2e} (tol 2e-2)",
                           ["scene", "eps", "grid_volume", "steiner", "rel_err"], rows)


def criterion_2(ctx: Context) -> CriterionResult:
    # below g 2^(1-depth) the solid finest triangles of the prefractal take over
    t = np.geomspace(G * 2.0 ** (1 - ctx.cfg.sg_depth), 0.999 * G, 50)
    b1 = bd.beta_exact(ctx.sg, 1, t)
    ref = np.array([sg_oracle(x) for x in t])
    err = np.abs(b1.values - ref)
    eps = ctx.sg_eps[ctx.sg_eps >= 8 * ctx.cfg.h_fractal]
    grid = fd.tube_volume(ctx.sg_field, eps)
    stein = bd.steiner_volume(*ctx.sg_beta, eps)
    rel = np.abs(stein / grid - 1)
    ok = err.max() <= 1e-9 and rel.max() <= 0.02
    rows = [("beta1", x, v, r, e) for x, v, r, e in zip(t, b1.values, ref, err)]
    rows += [("steiner", e, s, g, r) for e, s, g, r in zip(eps, stein, grid, rel)]
    return CriterionResult(2, "SG basic function oracle", ok,
                           f"beta1 max abs err {err.max():.2e} (tol 1e-9); "
                           f"Steiner vs grid {rel.max():.2e} (tol 2e-2)",
                           ["kind", "x", "value", "reference", "error"], rows)


def criterion_3(ctx: Context) -> CriterionResult:
    b0, b1 = ctx.sg_beta
    win = (G * 2.0 ** -7, G)
    m0 = ex.fit_basic_exponent(b0, 0, win, period=2.0)
    m1 = ex.fit_basic_exponent(b1, 1, win, period=2.0)
    dim = ex.minkowski_dimension(ctx.sg_tube, period=2.0)
    ok = (m0.exponent == 0.0 and abs(m1.exponent - LOG2_3) <= 0.02
          and abs(dim.exponent - LOG2_3) <= 0.05)
    rows = [(n, e.exponent, e.slope_stderr, target, e.exponent - target)
            for n, e, target in (("m0", m0, 0.0), ("m1", m1, LOG2_3), ("D_grid", dim, LOG2_3))]
    return CriterionResult(3, "SG exponents", ok,
                           f"m0 {m0.exponent:.6g}, m1 {m1.exponent:.5f}, D {dim.exponent:.5f} "
                           f"(log2 3 = {LOG2_3:.5f})",
                           ["quantity", "estimate", "stderr", "target", "deviation"], rows)


def zeta_probes() -> list[complex]:
    return [complex(a, b) for a in (1.8, 2.0, 2.5, 3.0) for b in (0.0, 5.0, -5.0, 10.0, -10.0)]


def criterion_4(ctx: Context) -> CriterionResult:
    eps = ctx.cfg.zeta_eps
    z0, z1, _ = zt.sg_closed_forms(eps)
    depths = tuple(range(ctx.cfg.sg_depth - 3, ctx.cfg.sg_depth + 1))
    rows = []
    worst = 0.0
    fe_ok = True
    for s in zeta_probes():
        for i, expr in ((0, z0), (1, z1)):
            ref = expr(s)
            for route in ("mellin_of_beta", "reach_integral"):
                v = zt.sg_basic_zeta_extrapolated(i, s, eps, route, depths)
                rel = abs(v.value - ref) / abs(ref)
                worst = max(worst, rel)
                rows.append((s.real, s.imag, f"zeta{i}", route, v.value.real, v.value.imag,
                             ref.real, ref.imag, rel, ""))
        fe = zt.functional_equation_check(ctx.sg, ctx.sg_field, s, eps, LOG2_3)
        fe_ok &= fe.ok
        rows.append((s.real, s.imag, "zetaA", "grid_vs_reach", fe.zeta.value.real,
                     fe.zeta.value.imag, "", "", fe.residual, fe.bound))
    fe_rows = [r for r in rows if r[2] == "zetaA"]
    ok = worst <= 1e-3 and fe_ok
    return CriterionResult(4, "SG zeta closed forms", ok,
                           f"max rel dev {worst:.2e} (tol 1e-3); functional equation within bound "
                           f"at {sum(r[8] <= r[9] for r in fe_rows)}/{len(fe_rows)} probes",
                           ["re_s", "im_s", "function", "route", "re_val", "im_val", "re_ref",
                            "im_ref", "rel_dev_or_residual", "bound"], rows)


def criterion_5(ctx: Context) -> CriterionResult:
    expr = sp.distance_zeta_expr("sg")
    poles = sp.find_poles(expr)
    spacing = 2 * math.pi / math.log(2.0)
    expected = [0j] + [complex(LOG2_3, spacing * k) for k in range(-3, 4)]
    rows = []
    worst = 0.0
    for w in expected:
        got = min(poles, key=lambda p: abs(p.w - w))
        dev = abs(got.w - w)
        worst = max(worst, dev)
        rows.append(("pole", w.real, w.imag, got.w.real, got.w.imag, dev))
    lattice = sorted((p for p in poles if p.lattice_index is not None and abs(p.lattice_index) <= 3),
                     key=lambda p: p.w.imag)
    gaps = np.diff([p.w.imag for p in lattice])
    gap_dev = float(np.max(np.abs(gaps - spacing))) if len(gaps) else math.inf
    one = [p for p in poles if abs(p.w - 1) < 1e-8]
    res1 = abs(sp.residue_numeric(expr, 1.0 + 0j))
    removable = bool(one) and one[0].removable
    rows.append(("removable_at_1", 1.0, 0.0, float(removable), 0.0, res1))
    rows.append(("spacing", spacing, 0.0, float(np.mean(gaps)) if len(gaps) else math.nan, 0.0,
                 gap_dev))
    ok = worst <= 1e-10 and removable and res1 < 1e-10 and gap_dev <= 1e-10 and len(lattice) == 7
    return CriterionResult(5, "pole lattice", ok,
                           f"max pole dev {worst:.1e}; s=1 removable={removable}, |res| {res1:.1e}; "
                           f"spacing {spacing:.7f} (dev {gap_dev:.1e})",
                           ["kind", "re_expected", "im_expected", "re_found", "im_found", "deviation"],
                           rows)


def criterion_6(ctx: Context) -> CriterionResult:
    K = ctx.cfg.K
    _, z1 = sp.sg_basic_zeta_exprs()
    t = G * 2.0 ** (-np.arange(1, 13) / 2)
    t = t[t > G * 2.0 ** -(ctx.cfg.sg_depth - 1)]
    exact = ctx.sg_beta[1](t)
    rows = []
    worst_b = 0.0
    for x, e in zip(t, exact):
        v, ser = reconstruct_beta(None, z1, 1, float(x), K)
        rel = abs(v / e - 1)
        worst_b = max(worst_b, rel)
        rows.append(("beta1", x, v, e, rel, ser.tail_bound))
    za = sp.distance_zeta_expr("sg")
    eps = fd.dyadic_eps(0.1, 0.02, 4)
    grid = fd.tube_volume(ctx.sg_field, eps)
    worst_v = 0.0
    for e, g in zip(eps, grid):
        v, ser = reconstruct_tube(None, float(e), K, za)
        rel = abs(v / g - 1)
        worst_v = max(worst_v, rel)
        rows.append(("tube", e, v, g, rel, ser.tail_bound))
    ok = worst_b <= 0.01 and worst_v <= 0.03
    return CriterionResult(6, "residue reconstruction", ok,
                           f"beta1 max rel {worst_b:.2e} (tol 1e-2) at {len(t)} t; "
                           f"tube vs grid {worst_v:.2e} (tol 3e-2)",
                           ["kind", "x", "reconstructed", "reference", "rel_err", "tail_bound"], rows)


def family_fits(ctx: Context) -> dict:
    """Basic exponents of the example families on their trustworthy windows."""
    out = {}
    d0, d1 = bd.basic_functions(ctx.dust)
    win = (1e-5, 1e-3)
    out["dust"] = (ex.fit_basic_exponent(d0, 0, win), ex.fit_basic_exponent(d1, 1, win))
    for r in (1 / 3, 1 / 8):
        c0, c1 = bd.basic_functions(ctx.fw(r))
        win = (c0.window[0], (1 - 2 * r) / 3)
        out[f"fw{round(1 / r)}"] = (ex.fit_basic_exponent(c0, 0, win, period=1 / r),
                                    ex.fit_basic_exponent(c1, 1, win, period=1 / r))
    return out


def criterion_7(ctx: Context) -> CriterionResult:
    fits = family_fits(ctx)
    (dm0, dm1), (tm0, tm1), (em0, em1) = fits["dust"], fits["fw3"], fits["fw8"]
    content = em1.correction.get("content", math.nan)
    _, _, _, tube, _ = ctx.fw_grid(1 / 8)
    dim = ex.minkowski_dimension(tube, period=8.0)
    checks = [
        ("dust m0", dm0.exponent, 1.8, 0.05),
        ("dust m1", dm1.exponent, 1.2, 0.05),
        ("fw 1/3 m0", tm0.exponent, LOG3_4, 0.05),
        ("fw 1/3 m1", tm1.exponent, LOG3_4, 0.05),
        ("fw 1/8 M_1^1", content, 8.0, 0.16),
        ("fw 1/8 D", dim.exponent, 1.0, 0.02),
    ]
    rows = [(n, v, tgt, tol, abs(v - tgt) <= tol) for n, v, tgt, tol in checks]
    rows.append(("dust m1 < m0", dm1.exponent, dm0.exponent, 0.0, dm1.exponent < dm0.exponent))
    ok = all(r[4] for r in rows)
    return CriterionResult(7, "example-family table", ok,
                           "; ".join(f"{n} {v:.4g}" for n, v, _, _ in checks),
                           ["quantity", "estimate", "target", "tolerance", "ok"], rows)


AUDIT_MODELS = ("regular", "mixed")


def scene_exponents(ctx: Context, name: str) -> dict:
    """m0, m1 from the bundle and s0, s1, D from the grid (bundle totals for
    the dust, whose gaps are far below any desk-scale grid).

    For the truncated dust the tube volume misses a constant (the volume
    swept below the finest scale), which swamps the small power eps^(2-D);
    D is read from dV/deps = 2 pi eps beta_0 + 2 beta_1 instead.
    """
    per = None
    M = AUDIT_MODELS
    if name == "sg":
        scene, tube, totals = ctx.sg, ctx.sg_tube, ctx.sg_totals
        win_m, per = (G * 2.0 ** -7, G), 2.0
        coarse = ctx.sg_field.coarsened()
        keep = ctx.sg_eps[ctx.sg_eps >= 8 * coarse.h]
    elif name.startswith("fw"):
        r = 1 / int(name[2:])
        scene, fld, eps, tube, totals = ctx.fw_grid(r)
        b0 = bd.basic_functions(scene)[0]
        win_m, per = (b0.window[0], (1 - 2 * r) / 3), 1 / r
        coarse = fld.coarsened()
        keep = eps[eps >= 8 * coarse.h]
    elif name == "dust":
        scene = ctx.dust
        b0, b1 = bd.basic_functions(scene)
        win_m = (1e-5, 1e-3)
        eps = ex.geometric_samples(*win_m, 4)
        tube = ex.bundle_tube(b0, b1, eps)
        totals = ex.bundle_support_totals(b0, b1, eps)
        coarse = None
    else:
        scene, fld, eps, tube, totals = ctx.convex_grid(name)
        win_m = (8 * fld.h, 0.25)
        coarse = fld.coarsened()
        keep = eps[eps >= 8 * coarse.h]
    b0, b1 = bd.basic_functions(scene)
    fits = {"m0": ex.fit_basic_exponent(b0, 0, win_m, models=M, period=per),
            "m1": ex.fit_basic_exponent(b1, 1, win_m, models=M, period=per),
            "s0": ex.fit_support_exponent(totals, 0, models=M, period=per),
            "s1": ex.fit_support_exponent(totals, 1, models=M, period=per)}
    if name == "dust":
        fits["D"] = ex.fit_scaling(tube.eps, tube.boundary_length, 1, "outer_minkowski_derivative", M)
    else:
        fits["D"] = ex.minkowski_dimension(tube, models=M, period=per)
    if coarse is not None:
        ctube = fd.tube_function(coarse, keep)
        ctot = fd.support_totals(coarse, keep)
        cfits = {"s0": ex.fit_support_exponent(ctot, 0, models=M, period=per),
                 "s1": ex.fit_support_exponent(ctot, 1, models=M, period=per),
                 "D": ex.minkowski_dimension(ctube, models=M, period=per)}
        for k, c in cfits.items():
            fits[k] = ex.with_resolution_error(fits[k], c)
    return fits


CORPUS = ("sg", "fw3", "fw8", "dust", "square", "disk", "segment", "point")


def criterion_8(ctx: Context, corpus=CORPUS) -> CriterionResult:
    rows = []
    bad = []
    for name in corpus:
        f = scene_exponents(ctx, name)
        for line in ex.exponent_inequality_audit(f["m0"], f["m1"], f["s0"], f["s1"], f["D"]):
            rows.append((name, line.relation, line.lhs, line.rhs, line.margin, line.tolerance, line.ok))
            if not line.ok:
                bad.append(f"{name}: {line.relation}")
        rows += [(name, f"estimate {k}", e.exponent, e.slope_stderr, "", "", "") for k, e in f.items()]
    return CriterionResult(8, "exponent inequality audit", not bad,
                           f"{len(corpus)} scenes; " + ("all relations hold" if not bad
                                                        else "violations: " + ", ".join(bad)),
                           ["scene", "relation", "lhs", "rhs", "margin", "tolerance", "ok"], rows)


def criterion_9(ctx: Context) -> CriterionResult:
    rows = []
    ok = True
    for name in ("segment", "disk"):
        scene, _, _, tube, totals = ctx.convex_grid(name)
        b0, b1 = bd.basic_functions(scene)
        rep = ex.bridge_checks(tube, totals, 1.0, b0, b1)
        ok &= rep.bridge_rel <= 0.02
        rows.append((name, "M_out = 2/(d-s) S", rep.minkowski_content, rep.support_content,
                     rep.bridge_rel, 0.02))
    scene, _, _, tube, totals = ctx.fw_grid(1 / 8)
    b0, b1 = bd.basic_functions(scene)
    win = (b0.window[0], 0.25)
    est = ex.fit_basic_exponent(b1, 1, win, period=8.0)
    m11 = est.correction.get("content", math.nan)
    mout, _ = ex.content_estimate(tube.eps, tube.volume, 2, 1.0, "outer_content", period=8.0)
    rel = abs(mout - 2 * m11) / abs(mout)
    ok &= rel <= 0.04
    rows.append(("fw8", "M_out = 2 M_1^1", mout, 2 * m11, rel, 0.04))
    return CriterionResult(9, "bridge identities", ok,
                           "; ".join(f"{r[0]} {r[4]:.2e} (tol {r[5]:g})" for r in rows),
                           ["scene", "identity", "lhs", "rhs", "rel_dev", "tolerance"], rows)


def criterion_10(ctx: Context) -> CriterionResult:
    """Two runs of the quick configuration must give byte-identical CSVs."""
    with tempfile.TemporaryDirectory() as tmp:
        dirs = [Path(tmp) / "a", Path(tmp) / "b"]
        for d in dirs:
            run_suite(QUICK, d, header_lines=["reproducibility run"], fresh=True)
        names = sorted(p.name for p in dirs[0].glob("*.csv"))
        rows = []
        for n in names:
            same = (dirs[0] / n).read_bytes() == (dirs[1] / n).read_bytes()
            rows.append((n, (dirs[0] / n).stat().st_size, same))
    ok = bool(rows) and all(r[2] for r in rows)
    return CriterionResult(10, "reproducibility", ok,
                           f"{sum(r[2] for r in rows)}/{len(rows)} CSV files byte-identical",
                           ["file", "bytes", "identical"], rows)


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10}


def run_criterion(n: int, ctx: Context) -> CriterionResult:
    return CRITERIA[n](ctx)


def run_suite(cfg: SuiteConfig, out: Path | None = None, header_lines=None, fresh: bool = False,
              echo=None) -> list[CriterionResult]:
    """Run the configured criteria, writing one CSV per criterion and a summary."""
    ctx = Context(cfg)
    results = []
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
    for n in cfg.criteria:
        res = run_criterion(n, ctx)
        results.append(res)
        if echo:
            echo(res.line())
        if out is not None:
            (out / f"criterion_{n:02d}.csv").write_text(res.to_csv(header_lines))
    if out is not None:
        summary = CriterionResult(0, "summary", all(r.passed for r in results), "",
                                  ["criterion", "name", "passed", "summary"],
                                  [(r.number, r.name, r.passed, r.summary) for r in results])
        (out / "acceptance_summary.csv").write_text(summary.to_csv(header_lines))
    return results
