"""Residue sums over complex dimensions: basic functions and tube volumes.

beta_i(t) = sum_w t^(i-w) res(zeta_i, w) and
V(A_eps minus A) = sum_w eps^(2-w)/(2-w) res(zeta_A, w),
summed over poles with lattice index |k| <= K in +/- k pairs.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .constants import D, SG_INRADIUS
from .errors import PoleError
from .spectra import ExpMinus, MeromorphicExpr, PoleRecord, find_poles

DEFAULT_K = 50
IMAG_TOL = 1e-9


@dataclass(frozen=True)
class TruncatedSeries:
    t: float
    K: int
    terms: list = field(repr=False)  # (k, w, term) in summation order
    partial_sums: np.ndarray = field(repr=False)
    tail_bound: float
    value: float

    def to_csv(self, header_lines: list[str] | None = None) -> str:
        buf = io.StringIO()
        for line in header_lines or []:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "re_w", "im_w", "re_term", "im_term", "partial_sum"])
        for (k, pole, term), ps in zip(self.terms, self.partial_sums):
            w.writerow(["" if k is None else k, f"{pole.real:.17g}", f"{pole.imag:.17g}",
                        f"{term.real:.17g}", f"{term.imag:.17g}", f"{ps:.17g}"])
        return buf.getvalue()


def _lattice_region(expr: MeromorphicExpr, K: int) -> tuple:
    bases = [f.base for t in expr.terms for f in t.den if isinstance(f, ExpMinus)]
    re_lo, re_hi, cap = expr.region
    if bases:
        cap = (K + 0.5) * 2.0 * math.pi / math.log(min(bases))
    return (re_lo, re_hi, cap)


def _select(poles: list[PoleRecord], K: int) -> list[PoleRecord]:
    out = []
    for p in poles:
        if p.removable:
            continue
        if p.lattice_index is not None and abs(p.lattice_index) > K:
            continue
        if p.order != 1:
            raise PoleError(f"pole of order {p.order} at {p.w}; only simple poles are summed")
        out.append(p)
    # fixed order: non-lattice poles by real part, then k = 0, then +/- k pairs
    def key(p):
        k = p.lattice_index
        if k is None:
            return (0, p.w.real, 0, 0.0)
        return (1, abs(k), 0 if k >= 0 else 1, p.w.real)

    return sorted(out, key=key)


def _sum(poles: list[PoleRecord], weight, t: float, K: int, tail_power) -> TruncatedSeries:
    terms, partial = [], []
    acc = 0j
    for p in poles:
        term = complex(p.residue * weight(p.w))
        acc += term
        terms.append((p.lattice_index, p.w, term))
        partial.append(acc.real)
    if abs(acc.imag) > IMAG_TOL * max(abs(acc), 1e-300):
        raise PoleError(f"imaginary part {acc.imag:.3g} survives conjugate pairing")
    # residues decay like 1/|k|^2, so the tail beyond K is about
    # 2 K |res_K| x |weight| for the outermost kept pair
    tail = 0.0
    edge = [p for p in poles if p.lattice_index is not None and abs(p.lattice_index) == K and K > 0]
    if edge:
        tail = 2.0 * K * max(abs(p.residue) * tail_power(p.w) for p in edge)
    return TruncatedSeries(t, K, terms, np.array(partial), tail, acc.real)


def reconstruct_beta(poles: list[PoleRecord] | None, expr: MeromorphicExpr, i: int, t: float,
                     K: int = DEFAULT_K) -> tuple[float, TruncatedSeries]:
    """beta_i(t) from the poles of the basic zeta expression ``expr``."""
    if not (0 < t < expr.valid_below):
        raise PoleError(f"t = {t} outside the validity range (0, {expr.valid_below})")
    if poles is None:
        poles = find_poles(expr, _lattice_region(expr, K))
    sel = _select(poles, K)
    ser = _sum(sel, lambda w: t ** (i - w), t, K, lambda w: t ** (i - w.real))
    return ser.value, ser


def reconstruct_tube(poles: list[PoleRecord] | None, eps: float, K: int = DEFAULT_K,
                     expr: MeromorphicExpr | None = None) -> tuple[float, TruncatedSeries]:
    """V(A_eps minus A) from the poles of the distance zeta expression."""
    if poles is None:
        if expr is None:
            raise PoleError("need poles or an expression")
        poles = find_poles(expr, _lattice_region(expr, K))
    if expr is not None and not (0 < eps < expr.valid_below):
        raise PoleError(f"eps = {eps} outside the validity range (0, {expr.valid_below})")
    sel = _select(poles, K)
    for p in sel:
        if abs(p.w - D) < 1e-12:
            raise PoleError(f"pole at w = {D}: the term eps^(d-w)/(d-w) is undefined")
    ser = _sum(sel, lambda w: eps ** (D - w) / (D - w), eps, K,
               lambda w: eps ** (D - w.real) / abs(D - w))
    return ser.value, ser


def sg_beta1_series(t: float, K: int = DEFAULT_K) -> float:
    """Fourier series of beta_1 for the Sierpinski gasket, 0 < t < g."""
    g = SG_INRADIUS
    if not (0 < t < g):
        raise PoleError(f"t = {t} outside (0, g = {g:.12g})")
    ln2 = math.log(2.0)
    d = math.log2(3.0)
    r = 4.0 * math.sqrt(3.0)
    acc = 0j
    for k in [0] + [j for m in range(1, K + 1) for j in (m, -m)]:
        nu = complex(d, 2 * math.pi * k / ln2)
        acc += r ** (-nu) * np.exp(-2j * math.pi * k * math.log2(t)) / (nu * (nu - 1))
    val = t ** (1 - d) * 3 * math.sqrt(3.0) / ln2 * acc + 1.5 * math.sqrt(3.0) * t
    return float(val.real)
