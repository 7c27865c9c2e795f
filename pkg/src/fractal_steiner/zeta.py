"""Distance and basic zeta functions by independent routes.

Routes: ``grid_integral`` sums dist^(s-2) over grid cells, ``mellin_of_beta``
integrates t^(s-i-1) beta_i(t), ``reach_integral`` integrates min(delta, eps)^(s-i)
over the normal bundle, ``weighted_kernel`` sums the curvature-weighted
kernel over cells sorted by footpoint class, ``closed_form`` evaluates a
registered expression.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import normal_bundle as bundle
from .normal_bundle import BasicFunction
from .constants import OMEGA_1, OMEGA_2, SG_INRADIUS
from .errors import BundleError, DivergenceError, GridError, PoleError
from .distance_field import FOOT_FLAT, FOOT_VERTEX, DistanceField
from .scene_model import SceneDescriptor, generate_sierpinski
from .spectra import MeromorphicExpr, sg_basic_zeta_exprs

GUARD_BAND = 0.05
ROUTES = ("grid_integral", "mellin_of_beta", "reach_integral", "weighted_kernel", "closed_form")


@dataclass(frozen=True)
class ZetaEvaluation:
    s: complex
    value: complex
    abs_error: float
    route: str
    eps: float
    index: int | None = None  # basic index i, None for the distance zeta

    def as_row(self) -> list[str]:
        return [f"{self.s.real:.17g}", f"{self.s.imag:.17g}", f"{self.value.real:.17g}",
                f"{self.value.imag:.17g}", f"{self.abs_error:.6g}", self.route]


def _check_abscissa(s: complex, abscissa: float | None, what: str) -> None:
    if abscissa is None:
        return
    if s.real <= abscissa + GUARD_BAND:
        raise DivergenceError(f"{what}: Re s = {s.real:.6g} is not above the abscissa "
                              f"{abscissa:.6g} + guard band {GUARD_BAND}")


# ---------------------------------------------------------------- grid


def _cell_sum(d: np.ndarray, s: complex, h: float) -> complex:
    """h^2 sum d^(s-2), with cells closer than 2h replaced by the mean of
    r^(s-2) over their distance range [d - h/2, d + h/2]."""
    q = s - 2.0
    near = d < 2.0 * h
    far = d[~near]
    total = np.sum(np.exp(q * np.log(far))) if far.size else 0j
    dn = d[near]
    if dn.size:
        lo = np.maximum(dn - 0.5 * h, 0.0)
        hi = dn + 0.5 * h
        p = s - 1.0
        if abs(p) < 1e-12:
            mean = (np.log(hi) - np.log(np.where(lo > 0, lo, np.nan))) / (hi - lo)
            if np.any(~np.isfinite(mean)):
                raise DivergenceError("logarithmic singularity at s = 1 on the near set")
        else:
            hp = np.exp(p * np.log(hi))
            lp = np.where(lo > 0, np.exp(p * np.log(np.where(lo > 0, lo, 1.0))), 0.0)
            mean = (hp - lp) / (p * (hi - lo))
        total = total + np.sum(mean)
    return complex(h * h * total)


def _grid_route(fld: DistanceField, s: complex, eps: float, select,
                abscissa: float | None = None) -> tuple[complex, float]:
    """Cell sum at h and 2h.  The cells near a set of dimension D carry an
    error of order h^(Re s - D), capped at first order, so the h-error is
    |v_h - v_2h| / (2^p - 1)."""
    if eps > fld.margin + 1e-12:
        raise GridError(f"eps = {eps} exceeds the field margin {fld.margin}")
    vals = []
    for f in (fld, fld.coarsened()):
        d = select(f, eps)
        vals.append(_cell_sum(d, s, f.h))
        if f is fld:
            # cells cut by the level set d = eps are counted all or nothing;
            # as independent roundings they add sqrt(N_cut) cells of error
            n_cut = 2 * np.count_nonzero(d > eps - 0.5 * f.h)
            edge = f.h ** 2 * math.sqrt(n_cut) * eps ** (s.real - 2.0)
    p = 1.0 if abscissa is None else min(s.real - abscissa, 1.0)
    return vals[0], math.hypot(abs(vals[0] - vals[1]) / (2.0 ** p - 1.0), edge)


def _tube_cells(f: DistanceField, eps: float) -> np.ndarray:
    d = f.sorted_positive
    return d[: np.searchsorted(d, eps, side="right")]


def zeta_distance(fld: DistanceField, s: complex, eps: float,
                  abscissa: float | None = None) -> ZetaEvaluation:
    """int over A_eps minus A of dist^(s-2), by cell summation."""
    s = complex(s)
    _check_abscissa(s, abscissa, "distance zeta")
    val, err = _grid_route(fld, s, eps, _tube_cells, abscissa)
    return ZetaEvaluation(s, val, err, "grid_integral", eps)


def _class_cells(i: int):
    cls = FOOT_FLAT if i == 1 else FOOT_VERTEX

    def select(f: DistanceField, eps: float) -> np.ndarray:
        m = (f.dist > 0) & (f.dist <= eps) & (f.foot == cls) & ~f.ambiguous
        return f.dist[m]

    return select


def basic_zeta_weighted(fld: DistanceField, i: int, s: complex, eps: float,
                        abscissa: float | None = None) -> ZetaEvaluation:
    """Kernel route: 1/omega_1 on flat footpoints for i = 1, 1/(omega_2 dist)
    on vertex footpoints for i = 0, against dist^(s-i-1).

    Cells with more than one nearest point class are a null set in the limit
    and are left out.
    """
    if i not in (0, 1):
        raise BundleError(f"index must be 0 or 1 in the plane, got {i}")
    s = complex(s)
    _check_abscissa(s, abscissa, f"basic zeta {i}")
    val, err = _grid_route(fld, s, eps, _class_cells(i), abscissa)
    w = OMEGA_1 if i == 1 else OMEGA_2
    return ZetaEvaluation(s, val / w, err / w, "weighted_kernel", eps, i)


def ambiguous_cell_count(fld: DistanceField, eps: float) -> int:
    return int(np.count_nonzero(fld.ambiguous & (fld.dist > 0) & (fld.dist <= eps)))


# -------------------------------------------------------------- bundle


def basic_zeta_mellin(beta: BasicFunction, s: complex, eps: float,
                      abscissa: float | None = None) -> ZetaEvaluation:
    """int_0^eps t^(s-i-1) beta_i(t) dt; exact per piece for piecewise beta.

    The reported error is rounding level for piecewise beta and the
    trapezoid estimate (half against full resolution) for sampled beta.
    """
    s = complex(s)
    i = beta.index
    _check_abscissa(s, abscissa, f"basic zeta {i}")
    q = s - i
    if q.real <= 0:
        raise DivergenceError(f"Mellin integral of beta_{i} diverges at Re s = {s.real}")
    val = complex(beta.mellin(q, eps))
    if beta.representation == "sampled":
        keep = np.arange(len(beta.t)) % 2 == 0
        half = BasicFunction.sampled(i, beta.t[keep], beta.values[keep])
        err = abs(val - complex(half.mellin(q, eps)))
    else:
        err = 1e-12 * max(1.0, abs(val))
    return ZetaEvaluation(s, val, err, "mellin_of_beta", eps, i)


def basic_zeta_reach(scene: SceneDescriptor, i: int, s: complex, eps: float,
                     abscissa: float | None = None) -> ZetaEvaluation:
    """(1/(s-i)) int min(delta, eps)^(s-i) d mu_i over the normal bundle."""
    s = complex(s)
    if abs(s - i) < 1e-14:
        raise PoleError(f"s = {i} is a pole of the prefactor 1/(s - {i})")
    _check_abscissa(s, abscissa, f"basic zeta {i}")
    if (s - i).real <= 0:
        raise DivergenceError(f"reach integral of index {i} diverges at Re s = {s.real}")
    beta = bundle.beta_exact(scene, i)
    val = complex(beta.reach_integral(s - i, eps))
    return ZetaEvaluation(s, val, 1e-12 * max(1.0, abs(val)), "reach_integral", eps, i)


def closed_form(expr: MeromorphicExpr, s: complex, eps: float, i: int | None = None) -> ZetaEvaluation:
    s = complex(s)
    return ZetaEvaluation(s, complex(expr(s)), 0.0, "closed_form", eps, i)


def sg_closed_forms(eps: float = 0.25) -> tuple[MeromorphicExpr, MeromorphicExpr, float]:
    if eps <= SG_INRADIUS:
        raise PoleError(f"closed forms need eps > g = {SG_INRADIUS:.12g}, got {eps}")
    z0, z1 = sg_basic_zeta_exprs(eps)
    return z0, z1, eps


# -------------------------------------------------- depth extrapolation


def aitken(v0: complex, v1: complex, v2: complex) -> complex:
    d1, d2 = v1 - v0, v2 - v1
    den = d2 - d1
    if abs(den) <= 1e-300 or abs(den) < 1e-15 * max(abs(v2), 1.0):
        return v2
    return v2 - d2 * d2 / den


def depth_extrapolate(values: list[complex]) -> tuple[complex, float]:
    """Aitken delta-squared on the last three depths; the error estimate is
    the change against the Aitken value one depth earlier (when available)."""
    if len(values) < 3:
        raise ValueError("need at least three depths")
    est = aitken(*values[-3:])
    if len(values) >= 4:
        prev = aitken(*values[-4:-1])
        err = abs(est - prev)
    else:
        err = abs(values[-1] - est)
    return est, err


SG_LADDER = (5, 6, 7, 8)


def sg_basic_zeta_extrapolated(i: int, s: complex, eps: float = 0.25, route: str = "mellin_of_beta",
                               depths=SG_LADDER) -> ZetaEvaluation:
    """Basic zeta of the limit gasket from a ladder of prefractals.

    Each extra generation adds a term proportional to (3 2^(-s))^N, so the
    depth sequence is geometric and Aitken's transform removes it.
    """
    s = complex(s)
    vals = []
    for n in depths:
        sc = generate_sierpinski(n)
        if route == "mellin_of_beta":
            vals.append(basic_zeta_mellin(bundle.beta_exact(sc, i), s, eps).value)
        elif route == "reach_integral":
            vals.append(basic_zeta_reach(sc, i, s, eps).value)
        else:
            raise ValueError(f"unknown route {route!r}")
    est, err = depth_extrapolate(vals)
    return ZetaEvaluation(s, est, err + 1e-12 * max(1.0, abs(est)), route, eps, i)


# ----------------------------------------------------- functional equation


@dataclass(frozen=True)
class FunctionalEquationCheck:
    s: complex
    residual: float
    bound: float
    zeta: ZetaEvaluation
    basic: tuple[ZetaEvaluation, ZetaEvaluation]

    @property
    def ok(self) -> bool:
        return self.residual <= self.bound


def functional_equation_residual(zeta_a: ZetaEvaluation, zeta0: ZetaEvaluation,
                                 zeta1: ZetaEvaluation) -> FunctionalEquationCheck:
    """|zeta_A - omega_2 zeta_0 - omega_1 zeta_1| against the combined bound."""
    rhs = OMEGA_2 * zeta0.value + OMEGA_1 * zeta1.value
    res = abs(zeta_a.value - rhs)
    bound = zeta_a.abs_error + OMEGA_2 * zeta0.abs_error + OMEGA_1 * zeta1.abs_error
    return FunctionalEquationCheck(zeta_a.s, res, bound, zeta_a, (zeta0, zeta1))


def functional_equation_check(scene: SceneDescriptor, fld: DistanceField, s: complex, eps: float,
                              abscissa: float | None = None) -> FunctionalEquationCheck:
    """Grid distance zeta against the basic zetas, reach route when the
    scene admits the bundle and the kernel route otherwise."""
    za = zeta_distance(fld, s, eps, abscissa)
    try:
        z0 = basic_zeta_reach(scene, 0, s, eps, abscissa)
        z1 = basic_zeta_reach(scene, 1, s, eps, abscissa)
    except BundleError:
        z0 = basic_zeta_weighted(fld, 0, s, eps, abscissa)
        z1 = basic_zeta_weighted(fld, 1, s, eps, abscissa)
    return functional_equation_residual(za, z0, z1)


def closed_form_residual(z0: MeromorphicExpr, z1: MeromorphicExpr, za: MeromorphicExpr,
                         s: complex) -> float:
    s = complex(s)
    return abs(za(s) - OMEGA_2 * z0(s) - OMEGA_1 * z1(s))


# ---------------------------------------------------------------- export


def sweep_to_csv(rows: list[ZetaEvaluation | tuple[complex, str, str]],
                 header_lines: list[str] | None = None) -> str:
    """Rows are evaluations or (s, route, reason) refusals; refusals are
    written with empty values and the reason in the route column."""
    buf = io.StringIO()
    for line in header_lines or []:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["re_s", "im_s", "re_val", "im_val", "abs_err", "route"])
    for r in rows:
        if isinstance(r, ZetaEvaluation):
            w.writerow(r.as_row())
        else:
            s, route, reason = r
            w.writerow([f"{s.real:.17g}", f"{s.imag:.17g}", "", "", "", f"{route}:refused:{reason}"])
    return buf.getvalue()


def vertical_line(re_s: float, im_max: float, n: int) -> np.ndarray:
    return re_s + 1j * np.linspace(-im_max, im_max, n)


def holomorphy_residual(fn, s0: complex, h: float = 1e-3) -> float:
    """Discrete Cauchy-Riemann defect |f_x + i f_y| / |f| at s0."""
    fx = (fn(s0 + h) - fn(s0 - h)) / (2 * h)
    fy = (fn(s0 + 1j * h) - fn(s0 - 1j * h)) / (2 * h)
    return abs(fx + 1j * fy) / max(abs(fn(s0)), 1e-300)


__all__ = [
    "ROUTES", "GUARD_BAND", "ZetaEvaluation", "zeta_distance", "basic_zeta_mellin",
    "basic_zeta_reach", "basic_zeta_weighted", "closed_form", "sg_closed_forms",
    "aitken", "depth_extrapolate", "sg_basic_zeta_extrapolated",
    "FunctionalEquationCheck", "functional_equation_residual", "functional_equation_check",
    "closed_form_residual", "sweep_to_csv", "vertical_line", "holomorphy_residual",
    "ambiguous_cell_count",
]
