"""Meromorphic expression trees, pole enumeration and residues.

Expressions are built from constants, the variable s, exponentials a^s,
linear factors (s - c) and factors (a^s - m).  Every expression is
normalised to a sum of terms N(s) / prod F_j(s) where N is entire and each
F_j is a linear or exponential factor; poles are then read off the factors.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .constants import OMEGA_1, OMEGA_2, SG_INRADIUS
from .errors import PoleError

TAU_RES = 1e-10
NEWTON_TOL = 1e-12
NEWTON_MAXIT = 50
MERGE_TOL = 1e-9
RICHARDSON_RADII = (1e-3, 5e-4, 2.5e-4)
MAX_TREE_DEPTH = 64
LATTICE_SPACING_2 = 2.0 * math.pi / math.log(2.0)


# ----------------------------------------------------------------- nodes


class Node:
    def __call__(self, s):
        return self.eval(np.asarray(s, dtype=complex))

    def eval(self, s):
        raise NotImplementedError

    def depth(self) -> int:
        return 1

    # arithmetic sugar
    def __add__(self, other):
        return Add((self, _wrap(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return Add((self, Mul((Const(-1.0), _wrap(other)))))

    def __rsub__(self, other):
        return _wrap(other) - self

    def __neg__(self):
        return Mul((Const(-1.0), self))

    def __mul__(self, other):
        return Mul((self, _wrap(other)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return Div(self, _wrap(other))

    def __rtruediv__(self, other):
        return Div(_wrap(other), self)


def _wrap(x) -> Node:
    if isinstance(x, Node):
        return x
    return Const(complex(x))


@dataclass(frozen=True, eq=False)
class Const(Node):
    value: complex

    def eval(self, s):
        return np.full(np.shape(s), complex(self.value))


@dataclass(frozen=True, eq=False)
class S(Node):
    def eval(self, s):
        return s.astype(complex)


@dataclass(frozen=True, eq=False)
class ExpS(Node):
    """a^s for a real base a > 0."""

    base: float

    def __post_init__(self):
        if not self.base > 0:
            raise PoleError(f"exponential base must be positive, got {self.base}")

    def eval(self, s):
        return np.exp(s * math.log(self.base))


@dataclass(frozen=True, eq=False)
class Linear(Node):
    """s - c."""

    c: complex

    def eval(self, s):
        return s - complex(self.c)

    def roots(self, region) -> list[tuple[complex, int | None]]:
        c = complex(self.c)
        return [(c, None)] if _in_region(c, region) else []

    def deriv(self, s):
        return np.ones_like(s, dtype=complex)


@dataclass(frozen=True, eq=False)
class ExpMinus(Node):
    """a^s - m with a > 1, m > 0."""

    base: float
    m: float

    def __post_init__(self):
        if not (self.base > 1 and self.m > 0):
            raise PoleError(f"factor a^s - m needs a > 1 and m > 0, got a={self.base}, m={self.m}")

    def eval(self, s):
        return np.exp(s * math.log(self.base)) - self.m

    def deriv(self, s):
        la = math.log(self.base)
        return la * np.exp(s * la)

    def roots(self, region) -> list[tuple[complex, int | None]]:
        la = math.log(self.base)
        x0 = math.log(self.m) / la
        step = 2.0 * math.pi / la
        re_lo, re_hi, im_cap = region
        if not (re_lo <= x0 <= re_hi):
            return []
        kmax = int(math.floor(im_cap / step + 1e-12))
        return [(complex(x0, k * step), k) for k in range(-kmax, kmax + 1)]


@dataclass(frozen=True, eq=False)
class Add(Node):
    children: tuple

    def eval(self, s):
        out = np.zeros(np.shape(s), dtype=complex)
        for c in self.children:
            out = out + c.eval(s)
        return out

    def depth(self):
        return 1 + max(c.depth() for c in self.children)


@dataclass(frozen=True, eq=False)
class Mul(Node):
    children: tuple

    def eval(self, s):
        out = np.ones(np.shape(s), dtype=complex)
        for c in self.children:
            out = out * c.eval(s)
        return out

    def depth(self):
        return 1 + max(c.depth() for c in self.children)


@dataclass(frozen=True, eq=False)
class Div(Node):
    num: Node
    den: Node

    def eval(self, s):
        return self.num.eval(s) / self.den.eval(s)

    def depth(self):
        return 1 + max(self.num.depth(), self.den.depth())


def _in_region(w: complex, region) -> bool:
    re_lo, re_hi, im_cap = region
    return re_lo - 1e-12 <= w.real <= re_hi + 1e-12 and abs(w.imag) <= im_cap + 1e-12


# ----------------------------------------------------------- normal form


@dataclass(frozen=True)
class _Term:
    num: Node
    den: tuple  # Linear / ExpMinus factors

    def eval(self, s):
        out = self.num.eval(s)
        for f in self.den:
            out = out / f.eval(s)
        return out

    def eval_without(self, s, skip: int):
        out = self.num.eval(s)
        for j, f in enumerate(self.den):
            if j != skip:
                out = out / f.eval(s)
        return out


def _factors(node: Node) -> tuple[list[Node], list[Node]]:
    """Split a denominator into (reciprocals of nonvanishing parts, vanishing factors)."""
    if isinstance(node, Mul):
        recip, van = [], []
        for c in node.children:
            r, v = _factors(c)
            recip += r
            van += v
        return recip, van
    if isinstance(node, Const):
        if node.value == 0:
            raise PoleError("division by the zero constant")
        return [Const(1.0 / complex(node.value))], []
    if isinstance(node, ExpS):
        return [ExpS(1.0 / node.base)], []
    if isinstance(node, S):
        return [], [Linear(0.0)]
    if isinstance(node, (Linear, ExpMinus)):
        return [], [node]
    raise PoleError(f"unsupported denominator factor {type(node).__name__}; "
                    "denominators must be products of (s - c) and (a^s - m)")


def _terms(node: Node) -> list[_Term]:
    if isinstance(node, Add):
        out = []
        for c in node.children:
            out += _terms(c)
        return out
    if isinstance(node, Mul):
        acc = [_Term(Const(1.0), ())]
        for c in node.children:
            acc = [_Term(Mul((a.num, b.num)), a.den + b.den) for a in acc for b in _terms(c)]
        return acc
    if isinstance(node, Div):
        recip, van = _factors(node.den)
        extra = tuple(van)
        return [_Term(Mul((t.num, *recip)) if recip else t.num, t.den + extra) for t in _terms(node.num)]
    return [_Term(node, ())]


# ---------------------------------------------------------- expressions


DEFAULT_REGION = (-1.0, 3.0, 3.0 * LATTICE_SPACING_2)


@dataclass(frozen=True, eq=False)
class MeromorphicExpr:
    root: Node
    region: tuple = DEFAULT_REGION
    label: str = ""
    valid_below: float = math.inf  # validity radius of derived series in t

    def __post_init__(self):
        if self.root.depth() > MAX_TREE_DEPTH:
            raise PoleError(f"expression tree deeper than {MAX_TREE_DEPTH}")
        _ = self.terms  # validates denominators

    def __call__(self, s):
        out = self.root(s)
        return out if np.ndim(out) else complex(out)

    @cached_property
    def terms(self) -> list[_Term]:
        return _terms(self.root)

    def with_region(self, region) -> MeromorphicExpr:
        return MeromorphicExpr(self.root, tuple(region), self.label, self.valid_below)

    def __add__(self, other: MeromorphicExpr) -> MeromorphicExpr:
        return MeromorphicExpr(Add((self.root, other.root)), self.region, self.label,
                               min(self.valid_below, other.valid_below))

    def scaled(self, c: complex) -> MeromorphicExpr:
        return MeromorphicExpr(Mul((Const(c), self.root)), self.region, self.label, self.valid_below)


@dataclass(frozen=True)
class PoleRecord:
    w: complex
    order: int
    residue: complex
    removable: bool
    lattice_index: int | None = None

    def as_row(self) -> list[str]:
        return [f"{self.w.real:.17g}", f"{self.w.imag:.17g}", str(self.order),
                f"{self.residue.real:.17g}", f"{self.residue.imag:.17g}", str(int(self.removable))]


def _newton(f: Node, w0: complex) -> complex:
    w = complex(w0)
    for _ in range(NEWTON_MAXIT):
        val = complex(f.eval(np.asarray(w)))
        if abs(val) <= NEWTON_TOL:
            return w
        step = val / complex(f.deriv(np.asarray(w)))
        w -= step
        if abs(step) <= NEWTON_TOL * max(1.0, abs(w)):
            return w
    raise PoleError(f"Newton refinement did not converge from candidate {w0}")


def _vanishes(f: Node, w: complex) -> bool:
    scale = max(1.0, abs(complex(f.deriv(np.asarray(w)))))
    return abs(complex(f.eval(np.asarray(w)))) <= 1e-9 * scale


def _term_order(term: _Term, w: complex) -> tuple[int, list[int]]:
    hits = [j for j, f in enumerate(term.den) if _vanishes(f, w)]
    return len(hits), hits


def pole_order(expr: MeromorphicExpr, w: complex) -> int:
    return max((_term_order(t, w)[0] for t in expr.terms), default=0)


def _term_residues(expr: MeromorphicExpr, w: complex) -> list[complex]:
    out = []
    wa = np.asarray(complex(w))
    for t in expr.terms:
        n, hits = _term_order(t, w)
        if n == 0:
            out.append(0j)
        elif n == 1:
            j = hits[0]
            out.append(complex(t.eval_without(wa, j)) / complex(t.den[j].deriv(wa)))
        else:
            raise PoleError(f"pole of order {n} at {w}; only simple poles have a residue rule")
    return out


def residue_numeric(expr: MeromorphicExpr, w: complex) -> complex:
    """Symmetric limit of (s - w) f(s), Richardson-extrapolated in r^2."""
    w = complex(w)
    vals = []
    for r in RICHARDSON_RADII:
        fp = complex(expr.root(np.asarray(w + r)))
        fm = complex(expr.root(np.asarray(w - r)))
        vals.append(0.5 * r * (fp - fm))
    # radii halve, error ~ r^2: two Richardson levels
    a = [(4 * vals[k + 1] - vals[k]) / 3 for k in range(2)]
    return (16 * a[1] - a[0]) / 15


def residue_at(expr: MeromorphicExpr, w: complex, check: bool = True) -> complex:
    w = complex(w)
    order = pole_order(expr, w)
    if order > 1:
        raise PoleError(f"pole of order {order} at {w}; only simple poles have a residue rule")
    res = complex(sum(_term_residues(expr, w)))
    if check and order == 1:
        num = residue_numeric(expr, w)
        scale = max(1.0, max(abs(r) for r in _term_residues(expr, w)))
        if abs(num - res) > 1e-9 * scale:
            raise PoleError(f"analytic and numeric residues disagree at {w}: {res} vs {num}")
    return res


def find_poles(expr: MeromorphicExpr, region=None) -> list[PoleRecord]:
    region = tuple(region) if region is not None else expr.region
    if not math.isfinite(region[2]):
        raise PoleError("search region must be bounded in Im s")
    cands: list[tuple[complex, int | None, Node]] = []
    for t in expr.terms:
        for f in t.den:
            for w0, k in f.roots(region):
                cands.append((_newton(f, w0), k, f))
    merged: list[tuple[complex, int | None]] = []
    for w, k, _ in cands:
        for j, (u, ku) in enumerate(merged):
            if abs(u - w) <= MERGE_TOL * max(1.0, abs(w)):
                if ku is None and k is not None:
                    merged[j] = (u, k)
                break
        else:
            merged.append((w, k))
    out = []
    for w, k in merged:
        order = pole_order(expr, w)
        if order == 1:
            parts = _term_residues(expr, w)
            res = complex(sum(parts))
            scale = max(1.0, max(abs(p) for p in parts))
            removable = abs(res) < TAU_RES * scale
            if removable:
                res = 0j
            else:
                num = residue_numeric(expr, w)
                if abs(num - res) > 1e-9 * scale:
                    raise PoleError(f"analytic and numeric residues disagree at {w}: {res} vs {num}")
        else:
            res, removable = complex("nan"), False
        out.append(PoleRecord(w, order, res, removable, k))
    out.sort(key=lambda p: (round(p.w.real, 12), round(p.w.imag, 12)))
    return out


def merge_poles(*groups: list[PoleRecord]) -> list[PoleRecord]:
    """Union of pole lists with residues summed at coincident locations."""
    acc: list[PoleRecord] = []
    for g in groups:
        for p in g:
            for j, q in enumerate(acc):
                if abs(q.w - p.w) <= MERGE_TOL * max(1.0, abs(p.w)):
                    res = q.residue + p.residue
                    acc[j] = PoleRecord(q.w, max(q.order, p.order), res,
                                        abs(res) < TAU_RES * max(1.0, abs(q.residue), abs(p.residue)),
                                        q.lattice_index if q.lattice_index is not None else p.lattice_index)
                    break
            else:
                acc.append(p)
    acc.sort(key=lambda p: (round(p.w.real, 12), round(p.w.imag, 12)))
    return acc


def poles_to_csv(poles: list[PoleRecord], header_lines: list[str] | None = None) -> str:
    buf = io.StringIO()
    for line in header_lines or []:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["re_w", "im_w", "order", "re_res", "im_res", "removable"])
    for p in poles:
        w.writerow(p.as_row())
    return buf.getvalue()


# --------------------------------------------------------- closed forms


def sg_basic_zeta_exprs(eps: float = 0.25, region=None) -> tuple[MeromorphicExpr, MeromorphicExpr]:
    """Basic zeta functions of the Sierpinski gasket for eps >= the inradius g.

    zeta_0 = eps^s / s
    zeta_1 = 3 eps^(s-1) / (w1 (s-1)) + 6 sqrt3^(1-s) 2^(-s) / (w1 s (s-1) (2^s - 3))
    """
    region = tuple(region) if region is not None else DEFAULT_REGION
    r3 = math.sqrt(3.0)
    z0 = Div(ExpS(eps), S())
    t1 = Div(Mul((Const(3.0 / (OMEGA_1 * eps)), ExpS(eps))), Linear(1.0))
    t2 = Div(Mul((Const(6.0 * r3 / OMEGA_1), ExpS(1.0 / (2.0 * r3)))),
             Mul((S(), Linear(1.0), ExpMinus(2.0, 3.0))))
    g = SG_INRADIUS
    return (MeromorphicExpr(z0, region, "sierpinski:zeta0", g),
            MeromorphicExpr(Add((t1, t2)), region, "sierpinski:zeta1", g))


def point_basic_zeta_exprs(eps: float = 1.0, region=None) -> tuple[MeromorphicExpr, MeromorphicExpr]:
    region = tuple(region) if region is not None else DEFAULT_REGION
    return (MeromorphicExpr(Div(ExpS(eps), S()), region, "point:zeta0"),
            MeromorphicExpr(Const(0.0), region, "point:zeta1"))


def segment_basic_zeta_exprs(length: float = 1.0, eps: float = 1.0, region=None):
    """zeta_0 = eps^s/s (two half-circle ends), zeta_1 = 2 L eps^(s-1) / (2 (s-1))."""
    region = tuple(region) if region is not None else DEFAULT_REGION
    z1 = Div(Mul((Const(length / eps), ExpS(eps))), Linear(1.0))
    return (MeromorphicExpr(Div(ExpS(eps), S()), region, "segment:zeta0"),
            MeromorphicExpr(z1, region, "segment:zeta1"))


_REGISTRY = {
    "sierpinski": sg_basic_zeta_exprs,
    "sg": sg_basic_zeta_exprs,
    "point": point_basic_zeta_exprs,
    "segment": segment_basic_zeta_exprs,
}


def registered_scenes() -> list[str]:
    return sorted(_REGISTRY)


def basic_zeta_exprs(tag: str, eps: float | None = None, region=None):
    try:
        fn = _REGISTRY[tag]
    except KeyError:
        raise PoleError(f"no closed-form zeta functions registered for scene {tag!r}") from None
    kw = {"region": region}
    if eps is not None:
        kw["eps"] = eps
    return fn(**kw)


def distance_zeta_expr(tag: str, eps: float | None = None, region=None) -> MeromorphicExpr:
    """omega_2 * zeta_0 + omega_1 * zeta_1."""
    z0, z1 = basic_zeta_exprs(tag, eps, region)
    return MeromorphicExpr(Add((Mul((Const(OMEGA_2), z0.root)), Mul((Const(OMEGA_1), z1.root)))),
                           z0.region, f"{tag}:zetaA", min(z0.valid_below, z1.valid_below))


def complex_dimensions(tag: str, eps: float | None = None, region=None) -> list[PoleRecord]:
    return find_poles(distance_zeta_expr(tag, eps, region))
