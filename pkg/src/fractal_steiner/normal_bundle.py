"""Normal bundle strata, local reach and exact basic functions.

For a union of points and segments the bundle splits into vertex arcs
(carrying mu_0 with weight angle/2pi) and segment sides (carrying mu_1 with
density 1/2 per unit length).  Reach along a stratum is resolved by adaptive
subdivision into pieces on which it is affine; a basic function is then a sum
of clipped ramps, which integrates in closed form.

Local reach against a convex neighbour is the first contact time of the ball
B(x + t u, t) with it: for a point p this is |x - p|^2 / (2 u.(p - x)); for a
segment it is the smaller of the line-contact root (foot inside the segment)
and the two endpoint roots.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path

import numba
import numpy as np
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .constants import OMEGA_1, OMEGA_2
from .errors import BundleError
from .scene_model import (Disk, Frame, LatticeFrame, Point, SceneDescriptor, Segment,
                    exact_distance)

TAU_DELTA = 1e-10
MAX_DEPTH = 40
SENTINEL_FACTOR = 10.0
# accepted when the quarter points deviate from the chord by at most this
TOL_ABS = 1e-13
TOL_REL = 1e-5
# reach is never evaluated exactly at stratum ends (limits are taken instead)
_END_GUARD = 1e-12
_INITIAL_PIECES = 16


@dataclass(frozen=True)
class BundleStratum:
    kind: str  # "vertex_arc", "segment_side" or "circle"
    index: int
    weight: float
    footpoint: tuple  # vertex (x, y), or segment ((x, y), (x, y))
    normal: tuple | None = None  # side normal
    angles: tuple | None = None  # (theta_lo, theta_hi) of a vertex arc
    excluded_segments: tuple = ()
    reach: float | None = None  # constant reach when known in closed form

    @property
    def angle(self) -> float:
        return self.angles[1] - self.angles[0] if self.angles else 0.0


# -- planar preprocessing -----------------------------------------------------

def _merge_vertices(xy: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Representative index for each row; rows within tol share one vertex."""
    tree = cKDTree(xy)
    rep = np.arange(len(xy))
    for i, j in sorted(tree.query_pairs(tol)):
        ri, rj = rep[i], rep[j]
        while rep[ri] != ri:
            ri = rep[ri]
        while rep[rj] != rj:
            rj = rep[rj]
        if ri != rj:
            rep[max(ri, rj)] = min(ri, rj)
    for i in range(len(rep)):
        r = i
        while rep[r] != r:
            r = rep[r]
        rep[i] = r
    uniq, inv = np.unique(rep, return_inverse=True)
    return xy[uniq], inv


def _split_at_vertices(segs: np.ndarray, tol: float) -> np.ndarray:
    """Split every segment at endpoints of other segments lying in its interior."""
    if len(segs) == 0:
        return segs
    ends = segs.reshape(-1, 2)
    verts, _ = _merge_vertices(ends, tol)
    tree = cKDTree(verts)
    mids = segs.mean(axis=1)
    d = segs[:, 1] - segs[:, 0]
    lens = np.hypot(d[:, 0], d[:, 1])
    hits = tree.query_ball_point(mids, lens / 2 + tol)
    out = []
    for k, cand in enumerate(hits):
        a, b = segs[k]
        if len(cand) <= 2:
            out.append(segs[k])
            continue
        v = verts[cand]
        lam = (v - a) @ d[k] / lens[k] ** 2
        off = np.abs((v - a) @ np.array([-d[k, 1], d[k, 0]])) / lens[k]
        inner = np.sort(lam[(off < tol) & (lam * lens[k] > tol) & ((1 - lam) * lens[k] > tol)])
        cuts = np.concatenate([[0.0], inner, [1.0]])
        for l0, l1 in zip(cuts[:-1], cuts[1:]):
            out.append(np.array([a + l0 * d[k], a + l1 * d[k]]))
    return np.asarray(out).reshape(-1, 2, 2)


def _inside_any(z: np.ndarray, polys: list[np.ndarray]) -> np.ndarray:
    """Boolean per row of z: strictly inside one of the filled polygons."""
    res = np.zeros(len(z), dtype=bool)
    for v in polys:
        x1, y1 = v[:, 0], v[:, 1]
        x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
        px, py = z[:, :1], z[:, 1:]
        cross = (y1 > py) != (y2 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
        res |= (np.sum(cross & (xc > px), axis=1) % 2) == 1
    return res


@dataclass
class _Geometry:
    """Blockers and strata of a point/segment scene in array form."""

    segs: np.ndarray  # (M, 2, 2) blockers after splitting
    points: np.ndarray  # (P, 2)
    strata: list[BundleStratum]
    diameter: float
    tol: float


def _build_geometry(scene: SceneDescriptor, extra_points: np.ndarray | None = None,
                    lattice_as_filled: bool = True) -> _Geometry:
    tol = scene.uniqueness_tol
    raw = []
    polys = []
    for e in scene.elements:
        if isinstance(e, Segment):
            raw.append((e.p, e.q))
        elif isinstance(e, Frame):
            raw.extend(e.edges())
            if e.filled:
                polys.append(np.asarray(e.vertices, dtype=float))
        elif isinstance(e, LatticeFrame):
            c = e.corners()
            raw.extend((c[i], c[(i + 1) % 4]) for i in range(4))
            if lattice_as_filled:
                polys.append(np.asarray(c, dtype=float))
        elif isinstance(e, Disk):
            raise BundleError("disks are only supported as a single isolated body")
    segs = np.asarray(raw, dtype=float).reshape(-1, 2, 2)
    segs = _split_at_vertices(segs, tol)
    pts = scene.points
    if extra_points is not None and len(extra_points):
        pts = np.concatenate([pts, extra_points])
    eta = 1e-7 * scene.diameter

    strata: list[BundleStratum] = []
    # segment sides
    if len(segs):
        d = segs[:, 1] - segs[:, 0]
        lens = np.hypot(d[:, 0], d[:, 1])
        nrm = np.column_stack([-d[:, 1], d[:, 0]]) / lens[:, None]
        mids = segs.mean(axis=1)
        for sign in (1.0, -1.0):
            blocked = _inside_any(mids + sign * eta * nrm, polys) if polys else np.zeros(len(segs), bool)
            for k in np.flatnonzero(~blocked):
                strata.append(BundleStratum(
                    "segment_side", 1, float(lens[k]) / OMEGA_1,
                    (tuple(segs[k, 0]), tuple(segs[k, 1])),
                    normal=(float(sign * nrm[k, 0]), float(sign * nrm[k, 1])),
                    excluded_segments=(int(k),)))

    # vertex cones of the segment graph
    if len(segs):
        verts, inv = _merge_vertices(segs.reshape(-1, 2), tol)
        inv = inv.reshape(-1, 2)
        incident: list[list[tuple[float, int]]] = [[] for _ in range(len(verts))]
        for k, (i0, i1) in enumerate(inv):
            for here, there in ((i0, i1), (i1, i0)):
                v = verts[there] - verts[here]
                incident[here].append((math.atan2(v[1], v[0]), k))
        for vi, inc in enumerate(incident):
            inc.sort()
            angs = [a for a, _ in inc]
            ids = tuple(sorted({k for _, k in inc}))
            x = verts[vi]
            for a0, a1 in zip(angs, angs[1:] + [angs[0] + 2 * math.pi]):
                gap = a1 - a0
                if gap <= math.pi + 1e-12:
                    continue
                mid = 0.5 * (a0 + a1)
                probe = x + eta * np.array([[math.cos(mid), math.sin(mid)]])
                if polys and _inside_any(probe, polys)[0]:
                    continue
                lo, hi = a0 + math.pi / 2, a1 - math.pi / 2
                strata.append(BundleStratum("vertex_arc", 0, (hi - lo) / OMEGA_2,
                                            (float(x[0]), float(x[1])),
                                            angles=(lo, hi), excluded_segments=ids))
    # isolated points
    for p in pts:
        strata.append(BundleStratum("vertex_arc", 0, 1.0, (float(p[0]), float(p[1])),
                                    angles=(0.0, 2 * math.pi)))
    return _Geometry(segs, np.asarray(pts, dtype=float).reshape(-1, 2), strata,
                     scene.diameter, tol)


def enumerate_bundle(scene: SceneDescriptor) -> list[BundleStratum]:
    """Strata of the generalized normal bundle in deterministic order.

    Lattice frames contribute their outer sides and corners here; their
    interior (inner sides and lattice points) is accounted for in closed
    form by ``beta_exact``.
    """
    disks = scene.disks
    if disks:
        if len(scene.elements) != 1:
            raise BundleError("disks are only supported as a single isolated body")
        r = disks[0].radius
        c = disks[0].center
        return [BundleStratum("circle", 0, 1.0, c, reach=math.inf),
                BundleStratum("circle", 1, math.pi * r, c, reach=math.inf)]
    return _build_geometry(scene).strata


# -- reach kernels ------------------------------------------------------------

@numba.njit(cache=True)
def _reach_kernel(X, U, qk, segptr, segidx, S, ptptr, ptidx, P, t_cap, tiny):
    out = np.empty(len(qk))
    for q in range(len(qk)):
        k = qk[q]
        x0, x1 = X[q, 0], X[q, 1]
        u0, u1 = U[q, 0], U[q, 1]
        best = t_cap
        for e in range(segptr[k], segptr[k + 1]):
            m = segidx[e]
            cx, cy = S[m, 0, 0], S[m, 0, 1]
            dx, dy = S[m, 1, 0] - cx, S[m, 1, 1] - cy
            l2 = dx * dx + dy * dy
            ln = math.sqrt(l2)
            nx, ny = -dy / ln, dx / ln
            sig = nx * (x0 - cx) + ny * (x1 - cy)
            nu = nx * u0 + ny * u1
            for r in range(2):
                if r == 0:
                    den = 1.0 - nu
                    t = sig / den if den > 1e-15 else -1.0
                else:
                    den = 1.0 + nu
                    t = -sig / den if den > 1e-15 else -1.0
                if t > 0.0 and t < best:
                    fx = x0 + t * u0 - (sig + t * nu) * nx
                    fy = x1 + t * u1 - (sig + t * nu) * ny
                    lam = ((fx - cx) * dx + (fy - cy) * dy) / l2
                    if lam >= 0.0 and lam <= 1.0:
                        best = t
            for w in range(2):
                px, py = S[m, w, 0], S[m, w, 1]
                a = u0 * (px - x0) + u1 * (py - x1)
                r2 = (px - x0) ** 2 + (py - x1) ** 2
                if a > 0.0 and r2 > tiny * tiny:
                    t = r2 / (2.0 * a)
                    if t < best:
                        best = t
        for e in range(ptptr[k], ptptr[k + 1]):
            m = ptidx[e]
            px, py = P[m, 0], P[m, 1]
            a = u0 * (px - x0) + u1 * (py - x1)
            r2 = (px - x0) ** 2 + (py - x1) ** 2
            if a > 0.0 and r2 > tiny * tiny:
                t = r2 / (2.0 * a)
                if t < best:
                    best = t
        out[q] = best
    return out


def _seg_seg_distance(a, b, c, d):
    """Vectorized distance between segments [a,b] and [c,d] (rows)."""
    def pseg(p, s0, s1):
        v = s1 - s0
        ll = np.einsum("ij,ij->i", v, v)
        lam = np.where(ll > 0, np.einsum("ij,ij->i", p - s0, v) / np.where(ll > 0, ll, 1), 0)
        lam = np.clip(lam, 0, 1)
        q = s0 + lam[:, None] * v
        return np.hypot(*(p - q).T)

    def orient(p, q, r):
        return (q[:, 0] - p[:, 0]) * (r[:, 1] - p[:, 1]) - (q[:, 1] - p[:, 1]) * (r[:, 0] - p[:, 0])

    cross = ((orient(a, b, c) * orient(a, b, d) < 0) & (orient(c, d, a) * orient(c, d, b) < 0))
    dist = np.minimum.reduce([pseg(a, c, d), pseg(b, c, d), pseg(c, a, b), pseg(d, a, b)])
    return np.where(cross, 0.0, dist)


class _NeighborIndex:
    """Radius queries of blockers around segment-shaped footprints."""

    def __init__(self, segs: np.ndarray, points: np.ndarray):
        self.segs = segs
        self.points = points
        self.classes = []
        if len(segs):
            d = segs[:, 1] - segs[:, 0]
            lens = np.hypot(d[:, 0], d[:, 1])
            cls = np.ceil(np.log2(lens / lens.min() + 1e-300)).astype(int)
            mids = segs.mean(axis=1)
            for c in np.unique(cls):
                ids = np.flatnonzero(cls == c)
                self.classes.append((ids, cKDTree(mids[ids]), 0.5 * lens[ids].max()))
        self.ptree = cKDTree(points) if len(points) else None

    def query(self, A: np.ndarray, B: np.ndarray, rho: np.ndarray):
        """CSR (ptr, idx) of blocker segments and of points within rho of each [A, B]."""
        mid = 0.5 * (A + B)
        half = 0.5 * np.hypot(*(B - A).T)
        n = len(A)
        seg_rows, seg_cols = [], []
        for ids, tree, hmax in self.classes:
            hits = tree.query_ball_point(mid, rho + half + hmax)
            cnt = np.fromiter((len(h) for h in hits), dtype=np.int64, count=n)
            if cnt.sum() == 0:
                continue
            rows = np.repeat(np.arange(n), cnt)
            cols = ids[np.concatenate([np.asarray(h, dtype=np.int64) for h in hits])]
            dd = _seg_seg_distance(A[rows], B[rows], self.segs[cols, 0], self.segs[cols, 1])
            keep = dd <= rho[rows]
            seg_rows.append(rows[keep])
            seg_cols.append(cols[keep])
        pt_rows, pt_cols = [], []
        if self.ptree is not None:
            hits = self.ptree.query_ball_point(mid, rho + half)
            cnt = np.fromiter((len(h) for h in hits), dtype=np.int64, count=n)
            if cnt.sum():
                rows = np.repeat(np.arange(n), cnt)
                cols = np.concatenate([np.asarray(h, dtype=np.int64) for h in hits])
                p = self.points[cols]
                dd = _seg_seg_distance(A[rows], B[rows], p, p)
                keep = dd <= rho[rows]
                pt_rows.append(rows[keep])
                pt_cols.append(cols[keep])
        return _csr(n, seg_rows, seg_cols), _csr(n, pt_rows, pt_cols)


def _csr(n, rows, cols):
    if rows:
        r = np.concatenate(rows)
        c = np.concatenate(cols)
    else:
        r = np.zeros(0, np.int64)
        c = np.zeros(0, np.int64)
    order = np.lexsort((c, r))
    r, c = r[order], c[order]
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(ptr, r + 1, 1)
    return np.cumsum(ptr), c


# -- profile engine -----------------------------------------------------------

@dataclass(frozen=True)
class ReachProfile:
    """Affine reach pieces over all strata.

    Piece p covers the fraction [s0, s1] of stratum ``stratum[p]`` and carries
    mu-weight ``weight[p]``; reach runs affinely from ``d0`` to ``d1``.  Reach
    values equal to ``t_cap`` stand for +infinity.
    """

    stratum: np.ndarray
    s0: np.ndarray
    s1: np.ndarray
    d0: np.ndarray
    d1: np.ndarray
    weight: np.ndarray
    index: np.ndarray
    t_cap: float
    capped: int = 0  # pieces accepted at the depth cap


class _Engine:
    def __init__(self, geo: _Geometry, strata: list[BundleStratum], t_cap: float):
        self.geo = geo
        self.strata = strata
        self.t_cap = t_cap
        n = len(strata)
        self.kind = np.array([0 if s.kind == "vertex_arc" else 1 for s in strata])
        self.A = np.zeros((n, 2))
        self.B = np.zeros((n, 2))
        self.N = np.zeros((n, 2))
        self.th = np.zeros((n, 2))
        for k, s in enumerate(strata):
            if self.kind[k] == 0:
                self.A[k] = self.B[k] = s.footpoint
                self.th[k] = s.angles
            else:
                self.A[k], self.B[k] = s.footpoint
                self.N[k] = s.normal
        self.index = _NeighborIndex(geo.segs, geo.points)
        lens = np.hypot(*(self.B - self.A).T)
        self.rho = 0.75 * lens
        # arcs start from the distance to the nearest other blocker
        if np.any(self.kind == 0):
            self.rho[self.kind == 0] = self._arc_start_radius(np.flatnonzero(self.kind == 0))
        self.rho = np.maximum(self.rho, 1e-6 * geo.diameter)
        self.full = 2.0 * geo.diameter
        # sides on a supporting line of the whole scene see nothing ahead
        self.rho[self._hull_sides()] = self.full
        self._rebuild(np.arange(n))

    def _hull_sides(self) -> np.ndarray:
        pts = [self.geo.points]
        if len(self.geo.segs):
            pts.append(self.geo.segs.reshape(-1, 2))
        pts = np.concatenate(pts)
        if len(pts) >= 3:
            try:
                pts = pts[ConvexHull(pts).vertices]
            except QhullError:
                pass
        side = np.flatnonzero(self.kind == 1)
        ahead = np.einsum("kj,kpj->kp", self.N[side], pts[None, :, :] - self.A[side][:, None, :])
        return side[ahead.max(axis=1) <= self.geo.tol]

    def _arc_start_radius(self, ks):
        lens = []
        segs = self.geo.segs
        seglen = np.hypot(*(segs[:, 1] - segs[:, 0]).T) if len(segs) else np.zeros(0)
        for k in ks:
            exc = self.strata[k].excluded_segments
            lens.append(3.0 * min(seglen[list(exc)]) if exc else 0.0)
        out = np.array(lens)
        if len(self.geo.points) > 1:
            tree = cKDTree(self.geo.points)
            d, _ = tree.query(self.A[ks], k=2)
            iso = out == 0
            out[iso] = 3.0 * d[iso, 1]
        out[out == 0] = self.geo.diameter
        return out

    def _rebuild(self, ks):
        (sp, si), (pp, pi) = self.index.query(self.A[ks], self.B[ks], self.rho[ks])
        if not hasattr(self, "segs_nb"):
            self.segs_nb = [None] * len(self.strata)
            self.pts_nb = [None] * len(self.strata)
        tol = self.geo.tol
        for j, k in enumerate(ks):
            segs = si[sp[j]:sp[j + 1]]
            exc = self.strata[k].excluded_segments
            if exc:
                segs = segs[~np.isin(segs, exc)]
            pts = pi[pp[j]:pp[j + 1]]
            if self.kind[k] == 0 and len(pts):
                near = np.hypot(*(self.geo.points[pts] - self.A[k]).T) <= tol
                pts = pts[~near]
            if self.kind[k] == 1:
                # only blockers reaching into the open half-plane ahead can block
                n = self.N[k]
                if len(segs):
                    ends = self.geo.segs[segs] - self.A[k]
                    segs = segs[np.maximum(ends[:, 0] @ n, ends[:, 1] @ n) > tol]
                if len(pts):
                    pts = pts[(self.geo.points[pts] - self.A[k]) @ n > tol]
            self.segs_nb[k] = segs
            self.pts_nb[k] = pts
        self._pack()

    def _pack(self):
        cs = np.array([len(s) for s in self.segs_nb])
        cp = np.array([len(p) for p in self.pts_nb])
        self.segptr = np.concatenate([[0], np.cumsum(cs)]).astype(np.int64)
        self.ptptr = np.concatenate([[0], np.cumsum(cp)]).astype(np.int64)
        self.segidx = (np.concatenate(self.segs_nb) if cs.sum() else np.zeros(0)).astype(np.int64)
        self.ptidx = (np.concatenate(self.pts_nb) if cp.sum() else np.zeros(0)).astype(np.int64)

    def xu(self, qk, s):
        s = np.clip(s, _END_GUARD, 1 - _END_GUARD)
        arc = self.kind[qk] == 0
        X = self.A[qk] + s[:, None] * (self.B[qk] - self.A[qk])
        th = self.th[qk, 0] + s * (self.th[qk, 1] - self.th[qk, 0])
        U = np.where(arc[:, None], np.column_stack([np.cos(th), np.sin(th)]), self.N[qk])
        return X, U

    def reach(self, qk, s):
        qk = np.asarray(qk, dtype=np.int64)
        X, U = self.xu(qk, s)
        segs = self.geo.segs if len(self.geo.segs) else np.zeros((1, 2, 2))
        pts = self.geo.points if len(self.geo.points) else np.zeros((1, 2))
        tiny = self.geo.tol
        while True:
            out = _reach_kernel(X, U, qk, self.segptr, self.segidx, segs,
                                self.ptptr, self.ptidx, pts, self.t_cap, tiny)
            # a blocker farther than rho makes first contact after rho/2
            bad = (out > 0.5 * self.rho[qk]) & (self.rho[qk] < self.full)
            if not bad.any():
                return out
            ks = np.unique(qk[bad])
            self.rho[ks] = np.minimum(2.0 * self.rho[ks], self.full)
            self._rebuild(ks)

    def profile(self, tol_abs: float, tol_rel: float, max_depth: int = MAX_DEPTH) -> ReachProfile:
        n = len(self.strata)
        m = _INITIAL_PIECES
        grid = np.linspace(0.0, 1.0, m + 1)
        k0 = np.repeat(np.arange(n), m + 1)
        dg = self.reach(k0, np.tile(grid, n)).reshape(n, m + 1)
        k = np.repeat(np.arange(n), m)
        sa = np.tile(grid[:-1], n)
        sb = np.tile(grid[1:], n)
        da = dg[:, :-1].ravel()
        db = dg[:, 1:].ravel()
        depth = np.zeros(len(k), dtype=np.int64)
        done = []
        capped = 0
        while len(k):
            f = np.array([0.25, 0.5, 0.75])
            sq = sa[:, None] + (sb - sa)[:, None] * f
            dq = self.reach(np.repeat(k, 3), sq.ravel()).reshape(-1, 3)
            lin = da[:, None] + (db - da)[:, None] * f
            # both ends and all quarter points at the sentinel: infinite reach
            err = np.abs(np.minimum(dq, self.t_cap) - lin).max(axis=1)
            scale = np.maximum(np.abs(dq).max(axis=1), np.maximum(np.abs(da), np.abs(db)))
            ok = err <= tol_abs + tol_rel * scale
            at_cap = ~ok & (depth >= max_depth)
            capped += int(at_cap.sum())
            acc = ok | at_cap
            done.append((k[acc], sa[acc], sb[acc], da[acc], db[acc]))
            r = ~acc
            sm = 0.5 * (sa[r] + sb[r])
            dm = dq[r, 1]
            k = np.concatenate([k[r], k[r]])
            sa, sb = np.concatenate([sa[r], sm]), np.concatenate([sm, sb[r]])
            da, db = np.concatenate([da[r], dm]), np.concatenate([dm, db[r]])
            depth = np.concatenate([depth[r], depth[r]]) + 1
        ks, s0, s1, d0, d1 = (np.concatenate(c) for c in zip(*done)) if done else [np.zeros(0)] * 5
        order = np.lexsort((s0, ks))
        ks, s0, s1, d0, d1 = ks[order], s0[order], s1[order], d0[order], d1[order]
        W = np.array([s.weight for s in self.strata])
        I = np.array([s.index for s in self.strata])
        return ReachProfile(ks.astype(np.int64), s0, s1, d0, d1, W[ks] * (s1 - s0), I[ks],
                            self.t_cap, capped)


def reach_profile(scene: SceneDescriptor, tol_abs: float | None = None,
                  tol_rel: float = TOL_REL, strata: list[BundleStratum] | None = None,
                  geometry: _Geometry | None = None) -> ReachProfile:
    """Affine reach pieces for every stratum of a point/segment scene."""
    geo = geometry if geometry is not None else _build_geometry(scene)
    strata = geo.strata if strata is None else strata
    t_cap = SENTINEL_FACTOR * scene.diameter
    if tol_abs is None:
        tol_abs = TOL_ABS * scene.diameter
    if not strata:
        z = np.zeros(0)
        return ReachProfile(z.astype(np.int64), z, z, z, z, z, z.astype(np.int64), t_cap)
    return _Engine(geo, strata, t_cap).profile(tol_abs, tol_rel)


# -- basic functions ----------------------------------------------------------

def _cpow(x: np.ndarray, q: complex) -> np.ndarray:
    """x^q for x >= 0 with 0^q = 0 (callers ensure Re q > 0)."""
    x = np.asarray(x, dtype=float)
    pos = x > 0
    out = np.zeros(x.shape, dtype=complex)
    out[pos] = np.exp(q * np.log(x[pos]))
    return out


_GL_X = np.array([-math.sqrt(0.6), 0.0, math.sqrt(0.6)])
_GL_W = np.array([5 / 9, 8 / 9, 5 / 9])
# ramps narrower than this (relative to their top) are integrated by
# Gauss-Legendre instead of the closed form, which cancels badly there
_NARROW = 1e-3


def _gl(fn, lo, hi):
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = mid[:, None] + half[:, None] * _GL_X
    return half * (fn(x) @ _GL_W)


def _ramp_mellin(w, a, b, q: complex, eps: float) -> complex:
    """sum_p w_p int_0^eps t^(q-1) clip((b_p - t)/(b_p - a_p), 0, 1) dt."""
    span = b - a
    narrow = span <= _NARROW * b
    c = np.minimum(a, eps)
    e = np.minimum(b, eps)
    head = _cpow(c, q) / q
    sp = np.where(span > 0, span, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        wide = (b * (_cpow(e, q) - _cpow(c, q)) / q
                - (_cpow(e, q + 1) - _cpow(c, q + 1)) / (q + 1)) / sp
    body = np.where(narrow, 0.0, wide)
    nz = narrow & (e > c)
    if nz.any():
        bb, ss = b[nz], sp[nz]
        body[nz] = _gl(lambda x: _cpow(x, q - 1) * (bb[:, None] - x) / ss[:, None], c[nz], e[nz])
    return complex(np.sum(w * (head + np.where(e > c, body, 0.0))))


def _ramp_reach(w, a, b, q: complex, eps: float) -> complex:
    """(1/q) sum_p w_p * mean over the piece of min(delta, eps)^q."""
    span = b - a
    narrow = span <= _NARROW * b
    sp = np.where(span > 0, span, 1.0)
    e = np.minimum(b, eps)
    c = np.minimum(a, eps)
    above = np.where(span > 0, np.clip((b - eps) / sp, 0.0, 1.0), (a >= eps).astype(float))
    with np.errstate(divide="ignore", invalid="ignore"):
        below = (_cpow(e, q + 1) - _cpow(c, q + 1)) / ((q + 1) * sp)
    below = np.where(narrow, 0.0, below)
    nz = narrow & (e > c)
    if nz.any():
        ss = sp[nz]
        below[nz] = _gl(lambda x: _cpow(x, q) / ss[:, None], c[nz], e[nz])
    flat = span == 0
    ramp = np.where(flat, _cpow(c, q), eps ** q * above + below)
    return complex(np.sum(w * ramp) / q)


class _Table:
    """A sum of ramps as knots of a piecewise-linear function plus steps.

    Ramps narrower than 1e-9 of their upper end are folded into steps at
    their midpoint; this keeps the running slope sums well conditioned.
    """

    def __init__(self, w, a, b):
        span = b - a
        step = span <= 1e-9 * np.maximum(b, 1e-300)
        sa = 0.5 * (a[step] + b[step])
        order = np.argsort(sa)
        self.step_a = sa[order]
        # total step weight strictly above each position
        self.step_tail = np.concatenate([np.cumsum(w[step][order][::-1])[::-1], [0.0]])
        wr, ar, br = w[~step], a[~step], b[~step]
        knots = np.unique(np.concatenate([[0.0], ar, br]))
        slope = wr / (br - ar)
        # value at a knot: sum_{a >= t} w + sum_{a < t < b} w (b - t)/(b - a)
        ia = np.searchsorted(knots, ar)
        ib = np.searchsorted(knots, br)
        d_const = np.zeros(len(knots) + 1)
        d_off = np.zeros(len(knots) + 1)
        d_slope = np.zeros(len(knots) + 1)
        # for knots k <= ia: + w ; for ia < k < ib: + w b/(b-a) - t w/(b-a)
        np.add.at(d_const, 0, wr.sum())
        np.add.at(d_const, ia + 1, -wr)
        np.add.at(d_off, ia + 1, wr * br / (br - ar))
        np.add.at(d_off, ib, -wr * br / (br - ar))
        np.add.at(d_slope, ia + 1, slope)
        np.add.at(d_slope, ib, -slope)
        const = np.cumsum(d_const)[:-1]
        off = np.cumsum(d_off)[:-1]
        sl = np.cumsum(d_slope)[:-1]
        self.knots = knots
        self.vals = np.maximum(const + off - sl * knots, 0.0)
        # int_0^knot t^k G(t) dt for k = 0, 1 (G linear between knots)
        x0, x1 = knots[:-1], knots[1:]
        v0, v1 = self.vals[:-1], self.vals[1:]
        g = (v1 - v0) / np.where(x1 > x0, x1 - x0, 1.0)
        seg0 = 0.5 * (v0 + v1) * (x1 - x0)
        seg1 = (v0 - g * x0) * (x1 ** 2 - x0 ** 2) / 2 + g * (x1 ** 3 - x0 ** 3) / 3
        self.cum = {0: np.concatenate([[0.0], np.cumsum(seg0)]),
                    1: np.concatenate([[0.0], np.cumsum(seg1)])}
        self.step_w = w[step][order]

    def __call__(self, t):
        t = np.asarray(t, float)
        lin = np.interp(t, self.knots, self.vals, right=0.0)
        return lin + self.step_tail[np.searchsorted(self.step_a, t, side="right")]

    def cumint(self, x, k: int):
        """int_0^x t^k G(t) dt for arrays x, k in {0, 1}."""
        x = np.asarray(x, float)
        xc = np.minimum(x, self.knots[-1])
        j = np.clip(np.searchsorted(self.knots, xc, side="right") - 1, 0, len(self.knots) - 2)
        x0 = self.knots[j]
        v0 = self.vals[j]
        x1 = self.knots[j + 1]
        g = (self.vals[j + 1] - v0) / np.where(x1 > x0, x1 - x0, 1.0)
        if k == 0:
            part = v0 * (xc - x0) + 0.5 * g * (xc - x0) ** 2
        else:
            part = (v0 - g * x0) * (xc ** 2 - x0 ** 2) / 2 + g * (xc ** 3 - x0 ** 3) / 3
        out = self.cum[k][j] + part
        # steps: sum_w w * min(a, x)^(k+1) / (k+1)
        if len(self.step_a):
            pw = np.concatenate([[0.0], np.cumsum(self.step_w * self.step_a ** (k + 1))])
            i = np.searchsorted(self.step_a, x, side="right")
            out = out + (pw[i] + x ** (k + 1) * self.step_tail[i]) / (k + 1)
        return out


@dataclass(frozen=True, eq=False)
class BasicFunction:
    """beta_i(t) = mu_i-mass of the bundle where the local reach exceeds t.

    ``piecewise``: a sum of clipped ramps w * clip((b - t)/(b - a), 0, 1)
    (a step at a when a == b), plus optional scaled families
    sum_j coef_j * template(t / scale_j).  ``sampled``: values at sorted t,
    linearly interpolated.  Reach values at ``t_cap`` stand for +infinity.
    """

    index: int
    representation: str
    variant: str = "signed"
    w: np.ndarray = field(default=None, repr=False)
    a: np.ndarray = field(default=None, repr=False)
    b: np.ndarray = field(default=None, repr=False)
    t: np.ndarray = field(default=None, repr=False)
    values: np.ndarray = field(default=None, repr=False)
    t_cap: float = math.inf
    window: tuple[float, float] | None = None  # trustworthy t-range
    families: tuple = field(default=(), repr=False)

    @classmethod
    def piecewise(cls, index, w, d0, d1, t_cap, window=None):
        w = np.asarray(w, float)
        lo = np.minimum(d0, d1)
        hi = np.maximum(d0, d1)
        keep = w != 0
        order = np.lexsort((hi[keep], lo[keep]))
        return cls(index, "piecewise", "signed", w[keep][order], lo[keep][order],
                   hi[keep][order], t_cap=t_cap, window=window)

    @classmethod
    def sampled(cls, index, t, values, variant="signed", window=None):
        t = np.asarray(t, float)
        order = np.argsort(t)
        return cls(index, "sampled", variant, t=t[order],
                   values=np.asarray(values, float)[order], window=window)

    @property
    def total_mass(self) -> float:
        if self.representation == "sampled":
            return float(self.values[0])
        tot = float(self.w.sum())
        for tmpl, coef, _ in self.families:
            tot += float(coef.sum()) * tmpl.total_mass
        return tot

    @property
    def piece_count(self) -> int:
        n = len(self.w) if self.w is not None else 0
        return n + sum(len(f[0].w) * len(f[1]) for f in self.families)

    @cached_property
    def _table(self) -> _Table:
        return _Table(self.w, self.a, self.b)

    def __call__(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.representation == "sampled":
            return np.interp(t, self.t, self.values)
        out = np.zeros(len(t))
        if len(self.w):
            chunk = max(1, 4_000_000 // len(self.w))
            for i in range(0, len(t), chunk):
                out[i:i + chunk] = self._ramp(t[i:i + chunk, None]) @ self.w
        for tmpl, coef, scale in self.families:
            out += tmpl._table(t[:, None] / scale[None, :]) @ coef
        return out

    def _ramp(self, tt):
        span = self.b - self.a
        flat = span <= 1e-14 * np.maximum(self.b, 1e-300)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.clip((self.b - tt) / np.where(flat, 1.0, span), 0.0, 1.0)
        return np.where(flat, (self.a > tt).astype(float), r)

    def breakpoints(self) -> np.ndarray:
        if self.representation == "sampled":
            return self.t.copy()
        parts = [self.a, self.b]
        for tmpl, _, scale in self.families:
            parts.append(np.outer(scale, tmpl.breakpoints()).ravel())
        return np.unique(np.concatenate(parts))

    def mellin(self, q: complex, eps: float) -> complex:
        """int_0^eps t^(q-1) beta(t) dt, piece by piece in closed form."""
        q = complex(q)
        if q.real <= 0:
            raise BundleError("Mellin integral needs Re q > 0")
        if self.representation == "sampled":
            return _sampled_mellin(self.t, self.values, q, eps)
        val = _ramp_mellin(self.w, self.a, self.b, q, eps)
        for tmpl, coef, scale in self.families:
            if q.imag == 0 and q.real in (1.0, 2.0):
                k = int(q.real) - 1
                val += float(np.sum(coef * scale ** (k + 1) * tmpl._table.cumint(eps / scale, k)))
                continue
            for c, sc in zip(coef, scale):
                val += c * sc ** q * _ramp_mellin(tmpl.w, tmpl.a, tmpl.b, q, eps / sc)
        return val

    def reach_integral(self, q: complex, eps: float) -> complex:
        """(1/q) * sum over pieces of w * mean of min(delta, eps)^q."""
        q = complex(q)
        if q.real <= 0:
            raise BundleError("reach integral needs Re q > 0")
        if self.representation == "sampled":
            raise BundleError("reach integral needs a piecewise basic function")
        val = _ramp_reach(self.w, self.a, self.b, q, eps)
        for tmpl, coef, scale in self.families:
            for c, sc in zip(coef, scale):
                val += c * sc ** q * _ramp_reach(tmpl.w, tmpl.a, tmpl.b, q, eps / sc)
        return val

    def integral(self, eps: float, power: int = 0) -> float:
        """int_0^eps t^power beta(t) dt."""
        return self.mellin(power + 1, eps).real

    def to_csv(self, path: str | Path, t) -> None:
        t = np.asarray(t, float)
        vals = self(t)
        with open(path, "w") as fh:
            fh.write("t,beta,variant,index\n")
            for ti, bi in zip(t, vals):
                fh.write(f"{ti:.17g},{bi:.17g},{self.variant},{self.index}\n")

    def to_json(self) -> str:
        data = {"index": self.index, "representation": self.representation,
                "variant": self.variant, "t_cap": self.t_cap, "window": self.window}
        if self.representation == "piecewise":
            data["breakpoints"] = self.breakpoints().tolist()
            data["pieces"] = np.column_stack([self.w, self.a, self.b]).tolist()
            data["families"] = [{"template": np.column_stack([f[0].w, f[0].a, f[0].b]).tolist(),
                                 "coef": f[1].tolist(), "scale": f[2].tolist()}
                                for f in self.families]
        else:
            data["t"] = self.t.tolist()
            data["values"] = self.values.tolist()
        return json.dumps(data)

    def total_variation(self) -> "BasicFunction":
        """beta^var: equal to beta when every weight is nonnegative."""
        if self.representation == "piecewise":
            return dataclasses.replace(self, variant="var", w=np.abs(self.w))
        # running sup from the right keeps it nonincreasing and >= |beta|
        v = np.maximum.accumulate(np.abs(self.values)[::-1])[::-1]
        return BasicFunction.sampled(self.index, self.t, v, variant="var", window=self.window)


def _sampled_mellin(t, v, q, eps):
    """Trapezoid on log t of t^q beta(t), plus the constant head below t[0]."""
    keep = t <= eps
    tt = np.append(t[keep], eps) if t[keep][-1:].size == 0 or t[keep][-1] < eps else t[keep]
    vv = np.interp(tt, t, v)
    lt = np.log(tt)
    f = np.exp(q * lt) * vv
    body = np.sum(0.5 * (f[1:] + f[:-1]) * np.diff(lt))
    head = vv[0] * tt[0] ** q / q
    return complex(body + head)


# -- lattice interiors --------------------------------------------------------

_TEMPLATE_MAX = 5


@lru_cache(maxsize=None)
def _lattice_template(n: int):
    """Reach pieces of one lattice frame with spacing 1 (side n + 1).

    Returns ``(side, points)``: ``side`` maps a gap index g (the stretch
    [g, g+1] of the bottom inner side) to (w, d0, d1) arrays; ``points`` maps
    (i, j) to the pieces of that lattice point's full arc.
    """
    L = float(n + 1)
    sq = ((0.0, 0.0), (L, 0.0), (L, L), (0.0, L))
    pts = [(float(i), float(j)) for j in range(1, n + 1) for i in range(1, n + 1)]
    scene = SceneDescriptor((Frame(sq),) + tuple(Point(p) for p in pts))
    geo = _build_geometry(scene)
    bottom = next(k for k, s in enumerate(geo.segs) if abs(s[0, 1]) + abs(s[1, 1]) == 0)
    strata = []
    labels = []
    for g in range(n + 1):
        strata.append(BundleStratum("segment_side", 1, 1.0 / OMEGA_1,
                                    ((float(g), 0.0), (float(g + 1), 0.0)), normal=(0.0, 1.0),
                                    excluded_segments=(bottom,)))
        labels.append(("gap", g))
    for p in pts:
        strata.append(BundleStratum("vertex_arc", 0, 1.0, p, angles=(0.0, 2 * math.pi)))
        labels.append(("pt", (int(p[0]), int(p[1]))))
    prof = _Engine(geo, strata, SENTINEL_FACTOR * scene.diameter).profile(
        TOL_ABS * scene.diameter, TOL_REL)
    side, points = {}, {}
    for k, (kind, key) in enumerate(labels):
        m = prof.stratum == k
        rec = (prof.weight[m], prof.d0[m], prof.d1[m])
        (side if kind == "gap" else points)[key] = rec
    return side, points


def _axis_classes(n: int) -> list[tuple[int, int]]:
    """(template index, multiplicity) covering lattice indices 1..n."""
    if n <= _TEMPLATE_MAX:
        return [(i, 1) for i in range(1, n + 1)]
    return [(1, 1), (2, 1), (3, n - 4), (4, 1), (5, 1)]


def _gap_classes(n: int) -> list[tuple[int, int]]:
    if n <= _TEMPLATE_MAX:
        return [(g, 1) for g in range(n + 1)]
    return [(0, 1), (1, 1), (2, n - 3), (4, 1), (5, 1)]


def lattice_families(frames: list[LatticeFrame], index: int, t_cap: float):
    """Inner sides (index 1) or lattice points (index 0) of many lattice frames.

    Every frame is a scaled copy of a spacing-1 template, so the sum over
    frames is kept as families (template, coef_j, scale_j) meaning
    sum_j coef_j * template(t / scale_j).
    """
    by_nt: dict[int, list[LatticeFrame]] = {}
    for f in frames:
        by_nt.setdefault(min(f.n, _TEMPLATE_MAX), []).append(f)
    result = []
    for nt, group in sorted(by_nt.items()):
        side, points = _lattice_template(nt)
        r = np.array([f.spacing for f in group])
        ns = [f.n for f in group]
        if index == 1:
            recs = [(side[g], 4.0 * r * np.array([dict(_gap_classes(n)).get(g, 0) for n in ns]))
                    for g in range(nt + 1)]
        else:
            axis = [dict(_axis_classes(n)) for n in ns]
            recs = [(points[(i, j)], np.array([a.get(i, 0) * a.get(j, 0) for a in axis], float))
                    for (i, j) in sorted(points)]
        for rec, coef in recs:
            keep = coef != 0
            if keep.any() and len(rec[0]):
                tmpl = BasicFunction.piecewise(index, rec[0], rec[1], rec[2], t_cap)
                result.append((tmpl, coef[keep], r[keep]))
    return result


# -- exact basic functions ----------------------------------------------------

def _scene_key(scene: SceneDescriptor) -> str:
    return scene.to_json()


@lru_cache(maxsize=16)
def _basic_pair(key: str) -> tuple[BasicFunction, BasicFunction]:
    scene = SceneDescriptor.from_json(key)
    t_cap = SENTINEL_FACTOR * scene.diameter
    if scene.disks:
        strata = enumerate_bundle(scene)
        out = []
        for i in (0, 1):
            w = np.array([s.weight for s in strata if s.index == i])
            out.append(BasicFunction.piecewise(i, w, np.full(len(w), t_cap),
                                               np.full(len(w), t_cap), t_cap))
        return tuple(out)

    lattices = scene.lattices
    layout = scene.provenance.get("layout", "shelf") if lattices else None
    parts = {0: [], 1: []}
    if lattices and layout == "ideal":
        others = tuple(e for e in scene.elements if not isinstance(e, LatticeFrame))
        # perfect packing: the frames tile a square K of the same total area
        side_k = math.sqrt(sum(f.side ** 2 for f in lattices))
        parts[1].append((np.full(4, side_k / OMEGA_1), np.full(4, t_cap), np.full(4, t_cap)))
        parts[0].append((np.full(4, 0.25), np.full(4, t_cap), np.full(4, t_cap)))
        if others:
            raise BundleError("the ideal dust layout cannot be mixed with other primitives")
    else:
        prof = reach_profile(scene)
        for i in (0, 1):
            m = prof.index == i
            parts[i].append((prof.weight[m], prof.d0[m], prof.d1[m]))
    out = []
    for i in (0, 1):
        w, d0, d1 = (np.concatenate(c) for c in zip(*parts[i]))
        fams = tuple(lattice_families(lattices, i, t_cap)) if lattices else ()
        beta = BasicFunction.piecewise(i, w, d0, d1, t_cap, window=_valid_window(scene))
        out.append(dataclasses.replace(beta, families=fams))
    return tuple(out)


def _valid_window(scene: SceneDescriptor) -> tuple[float, float]:
    """Scales on which a truncated construction stands in for its limit."""
    prov = scene.provenance
    gen = prov.get("generator")
    if gen == "sierpinski":
        g = 1.0 / (4.0 * math.sqrt(3.0))
        return (g * 2.0 ** (-prov["depth"] + 1), scene.diameter)
    if gen == "window":
        r = prov["r"]
        p = (1 - 2 * r) / 3
        n = prov["depth"]
        # finest gaps, and the inradius of the finest frames, whose children are missing
        return (max(p * r ** max(n - 1, 0), 0.5 * r ** n), scene.diameter)
    if gen == "dust":
        jm = prov["j_max"]
        return (jm ** -(prov["alpha"] + prov["m"]), scene.diameter)
    return (0.0, scene.diameter)


def basic_functions(scene: SceneDescriptor) -> tuple[BasicFunction, BasicFunction]:
    """(beta_0, beta_1) of a symbolic scene, computed once per scene."""
    return _basic_pair(_scene_key(scene))


def beta_exact(scene: SceneDescriptor, i: int, t_grid=None) -> BasicFunction:
    """The i-th basic function; ``t_grid`` (optional) attaches samples for export."""
    if i not in (0, 1):
        raise BundleError(f"index must be 0 or 1 in the plane, got {i}")
    beta = basic_functions(scene)[i]
    if t_grid is None:
        return beta
    t = np.asarray(t_grid, float)
    if np.any(np.diff(t) < 0) or np.any(t <= 0):
        raise BundleError("t_grid must be positive and sorted")
    return dataclasses.replace(beta, t=t, values=beta(t))


def steiner_volume(beta0: BasicFunction, beta1: BasicFunction, eps) -> np.ndarray:
    """omega_2 int_0^eps t beta_0 + omega_1 int_0^eps beta_1."""
    eps = np.atleast_1d(np.asarray(eps, float))
    return np.array([OMEGA_2 * beta0.integral(e, 1) + OMEGA_1 * beta1.integral(e, 0)
                     for e in eps])


# -- local reach by bisection -------------------------------------------------

def local_reach(scene: SceneDescriptor, x, u, t_max: float | None = None,
                tol: float = TAU_DELTA) -> float:
    """sup{t : x stays the unique nearest point of x + t u}, by bisection.

    Returns ``math.inf`` when the predicate still holds at ``t_max``
    (default 10 * diameter).
    """
    x = np.asarray(x, float)
    u = np.asarray(u, float)
    u = u / np.hypot(*u)
    if t_max is None:
        t_max = SENTINEL_FACTOR * scene.diameter
    tau = scene.uniqueness_tol

    def holds(t):
        d, near = exact_distance(scene, x + t * u)
        return (abs(d - t) <= tau and len(near) == 1
                and math.hypot(near[0][0] - x[0], near[0][1] - x[1]) <= tau)

    t0 = 1e3 * tau
    if not holds(t0):
        raise BundleError(f"({tuple(x)}, {tuple(u)}) is not on the normal bundle")
    if holds(t_max):
        return math.inf
    lo, hi = t0, t_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if holds(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- grid route ---------------------------------------------------------------

@dataclass(frozen=True)
class Calibration:
    c: np.ndarray
    transcript: tuple[str, ...]


@lru_cache(maxsize=None)
def calibrate_cij(d: int = 2, eps: float = 0.1) -> Calibration:
    """Constants of mu_i(A_eps) = sum_j c_ij eps^(i-j) beta_j(eps) from reference scenes."""
    if d != 2:
        raise BundleError("only the plane is supported")
    from .scene_model import generate_point, generate_segment
    b0p, b1p = basic_functions(generate_point())
    b0s, b1s = basic_functions(generate_segment(1.0))
    lines = []
    # point: A_eps is a disk; total curvature mass 1, half perimeter pi eps
    mu0_pt, mu1_pt = 1.0, math.pi * eps
    c00 = mu0_pt / b0p(eps)[0]
    lines.append(f"point: mu0(A_eps)=1, beta0={b0p(eps)[0]:.12g} -> c00={c00:.12g}")
    c10 = (mu1_pt - 0.0) / (eps * b0p(eps)[0])
    lines.append(f"point: mu1(A_eps)=pi*eps, beta1={b1p(eps)[0]:.3g} -> c10={c10:.12g}")
    # unit segment: A_eps is a stadium with half perimeter 1 + pi eps
    mu1_seg = 1.0 + math.pi * eps
    c11 = (mu1_seg - c10 * eps * b0s(eps)[0]) / b1s(eps)[0]
    lines.append(f"segment: mu1(A_eps)=1+pi*eps, beta1={b1s(eps)[0]:.12g} -> c11={c11:.12g}")
    c = np.array([[c00, 0.0], [c10, c11]])
    return Calibration(c, tuple(lines))


def beta_from_grid(totals, i: int, calibration: Calibration | None = None) -> BasicFunction:
    """Invert the triangular relation per eps from (eps, mu0, mu1) rows."""
    cal = calibration or calibrate_cij()
    c = cal.c
    if abs(c[0, 0]) < 1e-12 or abs(c[1, 1]) < 1e-12:
        raise BundleError("calibration is not invertible")
    arr = np.asarray(totals, float).reshape(-1, 3)
    eps, mu0, mu1 = arr.T
    b0 = mu0 / c[0, 0]
    if i == 0:
        return BasicFunction.sampled(0, eps, b0)
    b1 = (mu1 - c[1, 0] * eps * b0) / c[1, 1]
    return BasicFunction.sampled(1, eps, b1)
