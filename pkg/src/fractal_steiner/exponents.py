"""Scaling exponents and contents from sampled scale functions.

Every quantity here is y(x) ~ x^(i - m) as x -> 0 for some index i, with
m the exponent: basic functions (i = index), support totals mu_i(A_eps)
(i = index), outer volume V(A_eps) (i = d, m = D) and boundary length
L(eps) (i = d - 1, m = S-dimension).  Upper and lower contents are the max
and min of x^(m - i) y(x) over the fit window once the fitted correction
term is removed.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from .normal_bundle import BasicFunction, Calibration, calibrate_cij
from .constants import D, omega
from .errors import FitError
from .distance_field import TubeFunction

MIN_POINTS = 12
WINDOW_DECADES = 3.0
VANISHING = -math.inf
_RSS_FLOOR = 1e-24
LEAD_SHARE = 0.02
DOMINANT_SHARE = 0.1


@dataclass(frozen=True)
class ExponentEstimate:
    exponent: float
    window: tuple[float, float]
    slope_stderr: float
    upper_content: float
    lower_content: float
    method: str
    index: int = 0
    flags: tuple[str, ...] = ()
    correction: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.window[0] < self.window[1]:
            raise FitError(f"window must be increasing, got {self.window}")
        if self.lower_content > self.upper_content * (1 + 1e-12) + 1e-300:
            raise FitError("lower content exceeds upper content")

    @property
    def vanishing(self) -> bool:
        return self.exponent == VANISHING

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        d["flags"] = list(self.flags)
        d["exponent"] = "-inf" if self.vanishing else self.exponent
        d["stderr"] = d.pop("slope_stderr")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# --------------------------------------------------------------- fitting


def phase_bins(x, period: float | None, bins: int) -> np.ndarray | None:
    """Index of the position of log x within one multiplicative period."""
    if period is None:
        return None
    u = np.log(x) / math.log(period)
    return np.floor(bins * (u - np.floor(u)) + 0.5).astype(int) % bins


def _basis(x, i, m, ws, ph=None, bins=1):
    lead = x ** (i - m)
    if ph is None:
        cols = [lead]
    else:
        cols = [lead * (ph == j) for j in range(bins)]
    cols += [x ** (i - w) for w in ws]
    B = np.column_stack(cols)
    used = np.any(B != 0, axis=0)
    return B[:, used] if ph is not None else B, used


def _project(x, y, i, m, ws, ph=None, bins=1):
    """Linear coefficients and relative residual sum for a fixed exponent."""
    B, _ = _basis(x, i, m, ws, ph, bins)
    B = B / y[:, None]
    c, *_ = np.linalg.lstsq(B, np.ones(len(x)), rcond=None)
    r = B @ c - 1.0
    return c, float(r @ r)


M_RANGE = (-0.5, 3.0)


def _profile_fit(x, y, i, ws, ph=None, bins=1, m_range=M_RANGE, n_grid=351):
    """Variable projection: minimise the relative residual over the exponent
    with the linear coefficients solved exactly at each trial value."""
    def f(m):
        return _project(x, y, i, m, ws, ph, bins)[1]

    grid = np.linspace(*m_range, n_grid)
    rss = np.array([f(m) for m in grid])
    k = int(np.argmin(rss))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    m = float(minimize_scalar(f, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-10}).x)
    c, s0 = _project(x, y, i, m, ws, ph, bins)
    n, p = len(x), 1 + len(c)
    h = 1e-3
    curv = (f(m + h) - 2 * s0 + f(m - h)) / (h * h)
    sigma2 = s0 / max(n - p, 1)
    se = math.sqrt(2 * sigma2 / curv) if curv > 0 else math.inf
    B, _ = _basis(x, i, m, ws, ph, bins)
    B = B / y[:, None]
    cse = np.sqrt(np.abs(np.diag(np.linalg.pinv(B.T @ B)) * sigma2))
    return m, se, c, cse, s0


def _bic(rss, n, p):
    return n * math.log(max(rss, _RSS_FLOOR) / n) + p * math.log(n)


@dataclass(frozen=True)
class _Fit:
    m: float
    stderr: float
    model: str
    trend: np.ndarray  # terms other than the dominant one, removed before rescaling
    params: dict


def _regular_orders(i: int) -> list[int]:
    """Integer pole locations w whose terms x^(i - w) can appear."""
    return list(range(0, min(i, D - 1) + 1))


def _subsets(ws):
    out = [[]]
    for w in ws:
        out += [s + [w] for s in out]
    return sorted(out, key=len)


def _fit_models(x, y, i, models=("regular",), period=None, bins=8) -> _Fit:
    """Leading power plus a subset of integer-order terms, chosen by BIC.

    With ``period`` set, the leading amplitude is a step function of the
    phase of log x within one multiplicative period (log-periodic
    oscillation of lattice self-similar sets), one coefficient per bin.

    The reported exponent belongs to the dominant term as x -> 0: the free
    power unless an integer-order term with larger w carries a coefficient
    that is both resolved and visible at the small end of the window.
    """
    n = len(x)
    ph = phase_bins(x, period, bins)
    ws_all = _regular_orders(i) if "regular" in models else []
    best = None
    alts = []  # (bic, exponent) of every model with a free leading power
    for ws in _subsets(ws_all):
        m, se, c, cse, rss = _profile_fit(x, y, i, ws, ph, bins)
        bic = _bic(rss, n, 1 + len(c))
        if not _pinned(m) and _lead_share(x, y, i, m, ws, c, ph, bins) >= 0.5:
            alts.append((bic, m))
        if _pinned(m):
            # a power stuck at the search bound only stands in when nothing else fits
            bic = bic + 1e6
        if best is None or bic < best[0] - 1e-9:
            best = (bic, ws, m, se, c, cse)
    # integer-order terms alone (no fractal power) compete on the same footing
    for ws in _subsets(ws_all)[1:]:
        Bi = np.column_stack([x ** (i - w) for w in ws]) / y[:, None]
        ci, *_ = np.linalg.lstsq(Bi, np.ones(n), rcond=None)
        r = Bi @ ci - 1.0
        rss = float(r @ r)
        if _bic(rss, n, len(ws)) < best[0] - 1e-9:
            best = (_bic(rss, n, len(ws)), ws, None, 0.0, ci, None)
    if "mixed" in models:
        cands = [(_mixed_fit(x, y, i, ph, bins, ws), ws) for ws in _subsets(ws_all)]
        cands = [(f, ws) for f, ws in cands if f is not None and not _pinned(f[2])
                 and _lead_share(x, y, i, f[2], [f[1], *ws], f[4], ph, bins) >= 0.5]
        alts += [(f[0], f[2]) for f, _ in cands]
        if cands:
            (bic, mp, m, se, c), ws = min(cands, key=lambda t: t[0][0])
            if bic < best[0] - 1e-9:
                B, _ = _basis(x, i, m, [mp, *ws], ph, bins)
                nl = len(c) - 1 - len(ws)
                trend = B[:, nl:] @ c[nl:]
                model = ("power" if ph is None else f"log-periodic power ({bins} phases)")
                model += " + free sub-leading power" + "".join(f" + x^{i - w}" for w in ws)
                params = {"power_exponent": m, "subleading_exponent": mp, "B_sub": float(c[nl])}
                params.update({f"B_w{w}": float(c[nl + 1 + k]) for k, w in enumerate(ws)})
                return _Fit(m, _with_model_spread(se, m, bic, alts), model, trend, params)
    if best[2] is None:
        _, ws, _, _, c, _ = best
        basis = np.column_stack([x ** (i - w) for w in ws])
        share = np.abs(basis[0] * c) / abs(y[0])
        visible = [w for w, sh in zip(ws, share) if sh >= DOMINANT_SHARE]
        w_top = max(visible) if visible else ws[int(np.argmax(share))]
        k = ws.index(w_top)
        trend = basis @ c - basis[:, k] * c[k]
        params = {f"B_w{w}": float(c[j]) for j, w in enumerate(ws)}
        params["content"] = float(c[k])
        model = "integer orders " + " + ".join(f"x^{i - w}" for w in ws)
        return _Fit(float(w_top), 0.0, model, trend, params)
    _, ws, m, se, c, cse = best
    nl = len(c) - len(ws)  # leading coefficients
    B, _ = _basis(x, i, m, ws, ph, bins)
    lead = B[:, :nl] @ c[:nl]
    x0, y0 = x[0], y[0]
    lead_share = abs(lead[0]) / abs(y0)
    terms = [(float(w), c[nl + k], cse[nl + k]) for k, w in enumerate(ws)]
    sig = [t for t in terms if abs(t[1]) * x0 ** (i - t[0]) >= 1e-3 * abs(y0) and abs(t[1]) > 2 * t[2]]
    model = "power" if ph is None else f"log-periodic power ({bins} phases)"
    if ws:
        model += " + " + " + ".join(f"x^{i - w}" for w in ws)
    params = {"power_exponent": m}
    params.update({f"B_w{w}": float(c[nl + k]) for k, w in enumerate(ws)})
    if ph is None:
        params["A"] = float(c[0])
    # a higher-order term is only read as dominant when it carries a visible
    # share of the data at the small end; percent-level terms are raster noise
    above = [t for t in sig if t[0] > m and abs(t[1]) * x0 ** (i - t[0]) >= DOMINANT_SHARE * abs(y0)]
    if sig and (above or lead_share < LEAD_SHARE):
        # a leading power below LEAD_SHARE of the data at the small end is
        # read as a discretisation artefact, not as the dominant order
        dom = max(above or sig, key=lambda t: t[0])
        k = [t[0] for t in terms].index(dom[0])
        trend = B @ c - B[:, nl + k] * c[nl + k]
        params["content"] = float(dom[1])
        return _Fit(dom[0], 0.0, model + "; integer-order term dominant", trend, params)
    trend = B[:, nl:] @ c[nl:]
    return _Fit(m, _with_model_spread(se, m, best[0], alts), model, trend, params)


BIC_TIE = 6.0


def _lead_share(x, y, i, m, ws, c, ph, bins) -> float:
    """Share of the leading power in the data at the small end."""
    B, _ = _basis(x, i, m, ws, ph, bins)
    nl = len(c) - len(ws)
    return abs(B[0, :nl] @ c[:nl]) / abs(y[0])


def _pinned(m: float) -> bool:
    """An exponent stuck at the search bound is a degenerate fit."""
    return min(m - M_RANGE[0], M_RANGE[1] - m) < 1e-3


def _with_model_spread(se: float, m: float, bic: float, alts) -> float:
    """Fold in the exponents of competing models the data cannot reject
    (BIC within BIC_TIE of the chosen one)."""
    spread = max((abs(a - m) for b, a in alts if b - bic < BIC_TIE), default=0.0)
    return math.hypot(se, spread)


MIXED_GAP = 0.05


def _mixed_fit(x, y, i, ph=None, bins=1, ws=()):
    """Leading power x^(i - m) plus one free power x^(i - m') with m' < m.

    Support totals mix the basic functions, mu_i(A_eps) = sum_j c_ij
    eps^(i-j) beta_j(eps), so two different powers can both be visible.
    Integer-order terms ``ws`` ride along.  Returns
    (bic, m', m, stderr, coefficients) or None; the free power's
    coefficient is the first after the leading ones.
    """
    n = len(x)

    def inner(mp):
        lo = mp + MIXED_GAP
        if lo >= M_RANGE[1]:
            return None
        return _profile_fit(x, y, i, [mp, *ws], ph, bins, (lo, M_RANGE[1]), 81)

    grid = np.linspace(M_RANGE[0], M_RANGE[1] - 2 * MIXED_GAP, 36)
    fits = [(mp, inner(mp)) for mp in grid]
    fits = [(mp, f) for mp, f in fits if f is not None]
    if not fits:
        return None
    k = int(np.argmin([f[4] for _, f in fits]))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    mp = float(minimize_scalar(lambda v: inner(v)[4], bounds=(lo, hi), method="bounded",
                               options={"xatol": 1e-6}).x)
    m, se, c, cse, rss = inner(mp)
    nl = len(c) - 1 - len(ws)
    if not abs(c[nl]) > 2 * cse[nl] or _pinned(mp):
        return None  # the second power is not resolved
    B, _ = _basis(x, i, m, [mp, *ws], ph, bins)
    lead, sub = B[:, :nl] @ c[:nl], B[:, nl] * c[nl]
    # the leading power must carry the small end; strongly cancelling pairs
    # fit noise, not a superposition of basic functions
    if not (0.5 <= lead[0] / y[0] <= 1.5 and abs(sub[0] / y[0]) <= 0.5):
        return None
    return _bic(rss, n, 2 + len(c)), mp, m, se, c


def _nls(fun, p0, n, bounds=(-np.inf, np.inf)):
    try:
        res = least_squares(fun, p0, bounds=bounds, x_scale="jac", max_nfev=4000)
    except (ValueError, np.linalg.LinAlgError):
        return None
    if not res.success:
        return None
    rss = float(res.fun @ res.fun)
    J = res.jac
    cov = np.linalg.pinv(J.T @ J) * rss / max(n - len(p0), 1)
    return res.x, rss, np.sqrt(np.abs(np.diag(cov)))


def _window(x, y, window, method):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if window is not None:
        keep = (x >= window[0] * (1 - 1e-12)) & (x <= window[1] * (1 + 1e-12))
        x, y = x[keep], y[keep]
    if len(x) < MIN_POINTS:
        raise FitError(f"{method}: {len(x)} points in the window, need at least {MIN_POINTS}")
    order = np.argsort(x)
    x, y = x[order], y[order]
    win = (float(x[0]), float(x[-1]))
    flags = [] if math.log10(win[1] / win[0]) >= WINDOW_DECADES else ["window-limited"]
    return x, y, win, flags


def fit_scaling(x, y, i: int, method: str, models=("regular",), window=None,
                robust: bool = True, period: float | None = None, bins: int = 8) -> ExponentEstimate:
    """Exponent m with y ~ x^(i - m), contents of x^(m - i) y over the window."""
    x, y, win, flags = _window(x, y, window, method)
    scale = np.max(np.abs(y))
    if scale <= 1e-300:
        return ExponentEstimate(VANISHING, win, 0.0, 0.0, 0.0, method, i,
                                tuple(flags + ["vanishing measure"]))
    if np.any(y <= 0):
        raise FitError(f"{method}: {int(np.sum(y <= 0))} nonpositive values in a log fit")
    if np.ptp(y) <= 1e-12 * scale:
        c = float(np.mean(y))
        return ExponentEstimate(float(i), win, 0.0, c, c, method, i, tuple(flags + ["constant"]),
                                {"model": "constant"})
    fit = _fit_models(x, y, i, models, period, bins)
    stderr = fit.stderr
    if robust and len(x) >= MIN_POINTS + 2:
        # window sensitivity: drop one sample at either end (a quarter
        # octave at four samples per octave) and refit
        shifts = [_fit_models(x[sl], y[sl], i, models, period, bins).m
                  for sl in (slice(1, None), slice(None, -1))]
        stderr = max(stderr, 0.5 * max(abs(v - fit.m) for v in shifts))
    rescaled = x ** (fit.m - i) * (y - fit.trend)
    info = {"model": fit.model, **{k: float(v) for k, v in fit.params.items()}}
    return ExponentEstimate(float(fit.m), win, float(stderr), float(np.max(rescaled)),
                            float(np.min(rescaled)), method, i, tuple(flags), info)


def fit_content(x, y, i: int, q: float, method: str = "content", window=None) -> ExponentEstimate:
    """Limit of x^(q - i) y as x -> 0 with the exponent held at q.

    Model A + B x^g with g > 0 free; A is the content.  Upper and lower
    contents are max/min of the rescaled data with the fitted B x^g removed.
    """
    x, y, win, flags = _window(x, y, window, method)
    z = x ** (q - i) * y
    if np.ptp(z) <= 1e-12 * max(np.max(np.abs(z)), 1e-300):
        c = float(np.mean(z))
        return ExponentEstimate(q, win, 0.0, c, c, method, i, tuple(flags + ["constant"]),
                                {"model": "constant", "A": c})
    sc = float(np.max(np.abs(z)))
    best = None
    for g0 in (0.3, 1.0, 2.0):
        def f(p):
            return (p[0] + p[1] * x ** p[2] - z) / sc

        r = _nls(f, [z[0], 0.0, g0], len(x), bounds=([-np.inf, -np.inf, 0.02], [np.inf, np.inf, 4.0]))
        if r is not None and (best is None or r[1] < best[1]):
            best = r
    if best is None:
        raise FitError(f"{method}: content fit did not converge")
    p, _, se = best
    flat = z - p[1] * x ** p[2]
    A = float(p[0])
    lo, hi = float(np.min(flat)), float(np.max(flat))
    return ExponentEstimate(q, win, float(se[0] * sc), max(hi, A), min(lo, A), method, i, tuple(flags),
                            {"model": "A+Bx^g", "A": A, "B": float(p[1]), "gamma": float(p[2]),
                             "A_stderr": float(se[0] * sc)})


# ---------------------------------------------------------- front ends


def geometric_samples(lo: float, hi: float, per_octave: int = 4) -> np.ndarray:
    n = max(int(math.ceil(per_octave * math.log2(hi / lo))), MIN_POINTS - 1)
    return np.geomspace(lo, hi, n + 1)


def periodic_samples(lo: float, hi: float, period: float, per_period: int) -> np.ndarray:
    """hi * period^(-k/per_period) down to lo, ascending."""
    n = int(math.floor(per_period * math.log(hi / lo) / math.log(period) + 1e-9))
    return np.sort(hi * period ** (-np.arange(n + 1) / per_period))


def scale_period(provenance: dict) -> float | None:
    """Multiplicative period of the log-periodic oscillation for lattice
    self-similar constructions, None otherwise."""
    gen = provenance.get("generator")
    if gen == "sierpinski":
        return 2.0
    if gen == "window":
        return 1.0 / provenance["r"]
    return None


def fit_basic_exponent(beta: BasicFunction, i: int | None = None, window=None,
                       per_octave: int = 4, models=("regular",), period: float | None = None,
                       bins: int = 8) -> ExponentEstimate:
    """Basic exponent m_i from beta_i^var on geometric samples in the window."""
    i = beta.index if i is None else i
    if window is None:
        if beta.window is None:
            raise FitError("beta carries no valid window; pass one")
        window = beta.window
    var = beta.total_variation()
    if beta.representation == "sampled":
        t = var.t[(var.t >= window[0]) & (var.t <= window[1])]
    elif period is not None:
        t = periodic_samples(window[0], window[1], period, 2 * bins)
    else:
        t = geometric_samples(window[0], window[1], per_octave)
    return fit_scaling(t, var(t), i, f"basic_exponent_{i}", models, period=period, bins=bins)


def fit_support_exponent(totals, i: int, window=None, models=("regular",),
                         period: float | None = None, bins: int = 8) -> ExponentEstimate:
    arr = np.asarray(totals, float).reshape(-1, 3)
    return fit_scaling(arr[:, 0], np.abs(arr[:, 1 + i]), i, f"support_exponent_{i}", models, window,
                       period=period, bins=bins)


def minkowski_dimension(tube: TubeFunction, window=None, models=("regular",),
                        period: float | None = None, bins: int = 8) -> ExponentEstimate:
    """Outer Minkowski dimension D from V(A_eps minus A) ~ eps^(d - D)."""
    return fit_scaling(tube.eps, tube.volume, D, "outer_minkowski", models, window,
                       period=period, bins=bins)


def s_dimension(tube: TubeFunction, window=None, models=("regular",),
                period: float | None = None, bins: int = 8) -> ExponentEstimate:
    """S-dimension from L(eps) ~ eps^(d - 1 - s); contents normalised by
    omega_(d-s) eps^(d-1-s)."""
    if tube.boundary_length is None or not np.any(tube.boundary_length > 0):
        raise FitError("tube samples carry no boundary lengths")
    est = fit_scaling(tube.eps, tube.boundary_length, D - 1, "s_dimension", models, window,
                      period=period, bins=bins)
    if est.vanishing:
        return est
    w = omega(D - est.exponent)
    return ExponentEstimate(est.exponent, est.window, est.slope_stderr, est.upper_content / w,
                            est.lower_content / w, est.method, est.index, est.flags, est.correction)


def bundle_support_totals(beta0: BasicFunction, beta1: BasicFunction, eps,
                          calibration: Calibration | None = None) -> list[tuple[float, float, float]]:
    """(eps, mu0(A_eps), mu1(A_eps)) from the basic functions through the
    triangular relation, for scenes without a usable grid."""
    c = (calibration or calibrate_cij()).c
    eps = np.asarray(eps, float)
    b0, b1 = beta0(eps), beta1(eps)
    mu0 = c[0, 0] * b0
    mu1 = c[1, 0] * eps * b0 + c[1, 1] * b1
    return [(float(e), float(a), float(b)) for e, a, b in zip(eps, mu0, mu1)]


def bundle_tube(beta0: BasicFunction, beta1: BasicFunction, eps,
                calibration: Calibration | None = None) -> TubeFunction:
    """Tube samples from the Steiner volume of the basic functions; the
    boundary length is 2 mu1(A_eps) and the Euler characteristic mu0(A_eps)."""
    from .normal_bundle import steiner_volume

    eps = np.asarray(eps, float)
    tot = np.asarray(bundle_support_totals(beta0, beta1, eps, calibration))
    return TubeFunction(eps, steiner_volume(beta0, beta1, eps), 2.0 * tot[:, 2],
                        np.rint(tot[:, 1]).astype(np.int64), 0.0, (0.0, 0.0, 0.0, 0.0))


def with_resolution_error(fine: ExponentEstimate, coarse: ExponentEstimate) -> ExponentEstimate:
    """Fold the change between grid spacings h and 2h into the standard error."""
    if fine.vanishing or coarse.vanishing:
        return fine
    se = math.hypot(fine.slope_stderr, fine.exponent - coarse.exponent)
    return ExponentEstimate(fine.exponent, fine.window, se, fine.upper_content, fine.lower_content,
                            fine.method, fine.index, fine.flags + ("resolution",), fine.correction)


# --------------------------------------------------------------- bridges


@dataclass(frozen=True)
class BridgeReport:
    s: float
    minkowski_content: float
    support_content: float
    bridge_rel: float  # |M_out - 2/(d-s) S_(d-1)| / M_out
    decomposition_rel: float | None  # max over the window of the triangular relation
    half_outer_vs_basic: float | None  # |M_out/2 - M_1| / M_1 when s = d - 1

    def to_dict(self) -> dict:
        return asdict(self)


def content_estimate(x, y, i: int, s: float, method: str, window=None,
                     period: float | None = None) -> tuple[float, ExponentEstimate]:
    """Content of y ~ C x^(i - s): the coefficient of the dominant term when
    the fitted exponent is s, else the free-correction limit of x^(s - i) y."""
    est = fit_scaling(x, y, i, method, window=window, period=period, robust=False)
    if abs(est.exponent - s) < 1e-9 and "content" in est.correction:
        return est.correction["content"], est
    if est.correction.get("model") == "constant":
        return est.upper_content, est
    alt = fit_content(x, y, i, s, method, window)
    return alt.correction.get("A", alt.upper_content), alt


def bridge_checks(tube: TubeFunction, totals, s: float, beta0: BasicFunction | None = None,
                  beta1: BasicFunction | None = None, window=None,
                  calibration: Calibration | None = None,
                  period: float | None = None) -> BridgeReport:
    """Content identities between the volume, the support totals and the
    basic functions at dimension s."""
    if tube is None or totals is None:
        raise FitError("bridge checks need both tube samples and support totals")
    if abs(D - s) < 1e-12:
        raise FitError("bridge identity is singular at s = d")
    M, _ = content_estimate(tube.eps, tube.volume, D, s, "outer_content", window, period)
    arr = np.asarray(totals, float).reshape(-1, 3)
    S1, _ = content_estimate(arr[:, 0], arr[:, 2], D - 1, s, "support_content", window, period)
    bridge = abs(M - 2.0 / (D - s) * S1) / abs(M)
    decomp = None
    half = None
    if beta0 is not None and beta1 is not None:
        c = (calibration or calibrate_cij()).c
        eps, mu1 = arr[:, 0], arr[:, 2]
        if window is not None:
            keep = (eps >= window[0]) & (eps <= window[1])
            eps, mu1 = eps[keep], mu1[keep]
        pred = c[1, 0] * eps * beta0(eps) + c[1, 1] * beta1(eps)
        decomp = float(np.max(np.abs(pred - mu1) / np.abs(mu1)))
        if abs(s - (D - 1)) < 1e-12:
            lo, hi = window or (float(eps[0]), float(eps[-1]))
            t = periodic_samples(lo, hi, period, 16) if period else geometric_samples(lo, hi)
            M1, _ = content_estimate(t, beta1(t), 1, s, "basic_content_1", period=period)
            half = abs(0.5 * M - M1) / abs(M1)
    return BridgeReport(float(s), float(M), float(S1), float(bridge), decomp, half)


# ----------------------------------------------------------------- audit


@dataclass(frozen=True)
class AuditLine:
    relation: str
    lhs: float
    rhs: float
    margin: float  # signed slack; negative means violated beyond tolerance
    tolerance: float
    ok: bool


def _tol(*ests: ExponentEstimate, floor: float = 0.0) -> float:
    return max(2.0 * math.sqrt(sum(e.slope_stderr ** 2 for e in ests)), floor)


def exponent_inequality_audit(m0: ExponentEstimate, m1: ExponentEstimate, s0: ExponentEstimate,
                              s1: ExponentEstimate, dim: ExponentEstimate,
                              floor: float = 0.0) -> list[AuditLine]:
    """Check the exponent relations; violations are reported, never raised."""
    lines: list[AuditLine] = []

    def val(e):
        return e.exponent

    def eq(name, a, b, ests):
        tol = _tol(*ests, floor=floor)
        gap = abs(a - b) if math.isfinite(a) and math.isfinite(b) else (0.0 if a == b else math.inf)
        lines.append(AuditLine(name, a, b, tol - gap, tol, gap <= tol))

    def le(name, a, b, ests):
        tol = _tol(*ests, floor=floor)
        slack = (b - a) if (math.isfinite(a) or math.isfinite(b)) else 0.0
        if a == VANISHING:
            slack = math.inf
        lines.append(AuditLine(name, a, b, slack + tol, tol, slack + tol >= 0))

    top = m0 if val(m0) >= val(m1) else m1
    eq("max(m0, m1) = D", val(top), val(dim), (top, dim))
    for i, m in enumerate((m0, m1)):
        if not m.vanishing:
            le(f"{i} <= m{i}", float(i), val(m), (m,))
    eq("s1 = D", val(s1), val(dim), (s1, dim))
    le("s0 <= s1", val(s0), val(s1), (s0, s1))
    le("s0 <= m0", val(s0), val(m0), (s0, m0))
    le("s1 <= max(m0, m1)", val(s1), val(top), (s1, top))
    le("m0 <= s0", val(m0), val(s0), (m0, s0))
    stop = s0 if val(s0) >= val(s1) else s1
    le("m1 <= max(s0, s1)", val(m1), val(stop), (m1, stop))
    return lines


def audit_to_dict(lines: list[AuditLine]) -> list[dict]:
    def clean(v):
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")

    return [{"relation": a.relation, "lhs": clean(a.lhs), "rhs": clean(a.rhs),
             "margin": clean(a.margin), "tolerance": a.tolerance, "ok": a.ok} for a in lines]
