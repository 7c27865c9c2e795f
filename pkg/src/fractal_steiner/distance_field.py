"""Raster distance fields, parallel-set volumes and boundary measures.

The rasterized set (every cell whose center lies within half a cell diagonal
of a primitive) seeds a two-pass squared Euclidean distance transform
(lower envelope of parabolas, one pass per axis).  The transform also yields
the nearest seed cell, whose primitive is then used to replace the raster
distance by the exact distance from the cell center to the scene.  This keeps
volumes and contours free of the half-cell rasterization bias.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numba
import numpy as np
from scipy import ndimage
from skimage import measure

from .errors import ContourError, GridError
from .scene_model import SceneDescriptor

MAX_CELLS = 16384 * 16384

# footpoint classes stored per cell
FOOT_INSIDE = 0
FOOT_FLAT = 1
FOOT_VERTEX = 2

# feature kinds
_SEG = 0
_DISK = 1
_POLY = 2

_INF = 1e300


@dataclass(frozen=True, eq=False)
class DistanceField:
    origin: tuple[float, float]
    h: float
    nx: int
    ny: int
    dist: np.ndarray = field(repr=False)
    foot: np.ndarray = field(repr=False)
    ambiguous: np.ndarray = field(repr=False)
    seed: np.ndarray = field(repr=False)
    margin: float = 0.0

    @property
    def mask(self) -> np.ndarray:
        return self.dist == 0.0

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        xs = self.origin[0] + (np.arange(self.nx) + 0.5) * self.h
        ys = self.origin[1] + (np.arange(self.ny) + 0.5) * self.h
        return xs, ys

    @cached_property
    def sorted_positive(self) -> np.ndarray:
        d = self.dist[self.dist > 0]
        return np.sort(d, kind="stable")

    @cached_property
    def laplacian(self) -> np.ndarray:
        return ndimage.laplace(self.dist, mode="nearest") / (self.h * self.h)

    def coarsened(self) -> "DistanceField":
        """Every other cell: the same exact distances sampled on a 2h grid.

        Fine cell 2i is centred at x0 + (2i + 1/2) h, coarse cell i at
        x0' + (2i + 1) h, hence x0' = x0 - h/2."""
        sl = (slice(0, None, 2), slice(0, None, 2))
        return DistanceField((self.origin[0] - 0.5 * self.h, self.origin[1] - 0.5 * self.h),
                             2 * self.h, (self.nx + 1) // 2, (self.ny + 1) // 2,
                             self.dist[sl], self.foot[sl], self.ambiguous[sl],
                             self.seed[sl], self.margin)

    def save(self, path: str | Path) -> None:
        """Binary little-endian f64 distances plus a JSON sidecar."""
        path = Path(path)
        self.dist.astype("<f8").tofile(path.with_suffix(".f64"))
        meta = {"origin": list(self.origin), "h": self.h, "nx": self.nx, "ny": self.ny,
                "margin": self.margin, "dtype": "<f8", "order": "row-major (y, x)"}
        path.with_suffix(".json").write_text(json.dumps(meta, indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "DistanceField":
        path = Path(path)
        meta = json.loads(path.with_suffix(".json").read_text())
        dist = np.fromfile(path.with_suffix(".f64"), dtype="<f8").reshape(meta["ny"], meta["nx"])
        zeros = np.zeros(dist.shape, dtype=np.int8)
        return cls(tuple(meta["origin"]), meta["h"], meta["nx"], meta["ny"], dist, zeros,
                   np.zeros(dist.shape, bool), dist == 0, meta.get("margin", 0.0))


@dataclass(frozen=True)
class TubeFunction:
    eps: np.ndarray
    volume: np.ndarray
    boundary_length: np.ndarray
    euler_char: np.ndarray
    h: float
    bbox: tuple[float, float, float, float]

    def to_csv(self, path: str | Path, header_comment: str | None = None) -> None:
        rows = np.column_stack([self.eps, self.volume, self.boundary_length, self.euler_char])
        with open(path, "w") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            fh.write("eps,volume,boundary_length,euler_char\n")
            for e, v, l, c in rows:
                fh.write(f"{e:.17g},{v:.17g},{l:.17g},{int(c)}\n")


# -- feature table ------------------------------------------------------------

def _feature_table(scene: SceneDescriptor, point_limit: int):
    feats = []
    segs = scene.segments
    for s in segs:
        feats.append((_SEG, s[0, 0], s[0, 1], s[1, 0], s[1, 1]))
    for p in scene.expanded_points(limit=point_limit):
        feats.append((_SEG, p[0], p[1], p[0], p[1]))
    for d in scene.disks:
        feats.append((_DISK, d.center[0], d.center[1], d.radius, 0.0))
    poly_off = [0]
    poly_xy = []
    for k, f in enumerate(scene.filled_frames):
        feats.append((_POLY, float(k), 0.0, 0.0, 0.0))
        poly_xy += list(f.vertices)
        poly_off.append(len(poly_xy))
    table = np.array(feats, dtype=np.float64).reshape(-1, 5)
    return (table[:, 0].astype(np.int64), np.ascontiguousarray(table[:, 1:]),
            np.asarray(poly_xy, dtype=np.float64).reshape(-1, 2),
            np.asarray(poly_off, dtype=np.int64))


@numba.njit(cache=True)
def _inside(px, py, poly_xy, lo, hi):
    inside = False
    n = hi - lo
    for i in range(n):
        x1, y1 = poly_xy[lo + i, 0], poly_xy[lo + i, 1]
        x2, y2 = poly_xy[lo + (i + 1) % n, 0], poly_xy[lo + (i + 1) % n, 1]
        if (y1 > py) != (y2 > py):
            xc = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            if xc > px:
                inside = not inside
    return inside


@numba.njit(cache=True)
def _seg_dist(ax, ay, bx, by, px, py):
    abx, aby = bx - ax, by - ay
    ll = abx * abx + aby * aby
    lam = 0.0
    if ll > 0:
        lam = ((px - ax) * abx + (py - ay) * aby) / ll
    cls = 1
    if lam <= 0.0:
        lam = 0.0
        cls = 2
    elif lam >= 1.0:
        lam = 1.0
        cls = 2
    qx, qy = ax + lam * abx, ay + lam * aby
    return math.hypot(px - qx, py - qy), cls, qx, qy


@numba.njit(cache=True)
def _feature_dist(kind, par, px, py, poly_xy, poly_off):
    """Exact distance to one feature and its footpoint class (flat/vertex/inside)."""
    if kind == 0:
        return _seg_dist(par[0], par[1], par[2], par[3], px, py)
    elif kind == 1:
        cx, cy, r = par[0], par[1], par[2]
        rho = math.hypot(px - cx, py - cy)
        if rho <= r:
            return 0.0, 0, px, py
        return rho - r, 1, cx + (px - cx) * r / rho, cy + (py - cy) * r / rho
    k = int(par[0])
    lo, hi = poly_off[k], poly_off[k + 1]
    if _inside(px, py, poly_xy, lo, hi):
        return 0.0, 0, px, py
    best, bcls, bqx, bqy = 1e300, 1, px, py
    n = hi - lo
    for i in range(n):
        a = lo + i
        b = lo + (i + 1) % n
        d, c, qx, qy = _seg_dist(poly_xy[a, 0], poly_xy[a, 1], poly_xy[b, 0], poly_xy[b, 1], px, py)
        if d < best:
            best, bcls, bqx, bqy = d, c, qx, qy
    return best, bcls, bqx, bqy


@numba.njit(cache=True)
def _rasterize(kinds, params, poly_xy, poly_off, x0, y0, h, nx, ny):
    feat = np.full((ny, nx), -1, dtype=np.int64)
    inside = np.zeros((ny, nx), dtype=np.bool_)
    best = np.full((ny, nx), 1e300)
    band = h * math.sqrt(2.0) / 2.0
    for f in range(len(kinds)):
        k = kinds[f]
        par = params[f]
        if k == 0:
            xmin = min(par[0], par[2]) - band
            xmax = max(par[0], par[2]) + band
            ymin = min(par[1], par[3]) - band
            ymax = max(par[1], par[3]) + band
        elif k == 1:
            xmin, xmax = par[0] - par[2] - band, par[0] + par[2] + band
            ymin, ymax = par[1] - par[2] - band, par[1] + par[2] + band
        else:
            lo, hi = poly_off[int(par[0])], poly_off[int(par[0]) + 1]
            xmin, xmax, ymin, ymax = 1e300, -1e300, 1e300, -1e300
            for i in range(lo, hi):
                xmin = min(xmin, poly_xy[i, 0])
                xmax = max(xmax, poly_xy[i, 0])
                ymin = min(ymin, poly_xy[i, 1])
                ymax = max(ymax, poly_xy[i, 1])
        i0 = max(int(math.floor((xmin - x0) / h - 0.5)), 0)
        i1 = min(int(math.ceil((xmax - x0) / h - 0.5)), nx - 1)
        j0 = max(int(math.floor((ymin - y0) / h - 0.5)), 0)
        j1 = min(int(math.ceil((ymax - y0) / h - 0.5)), ny - 1)
        for j in range(j0, j1 + 1):
            py = y0 + (j + 0.5) * h
            for i in range(i0, i1 + 1):
                px = x0 + (i + 0.5) * h
                if k == 2:
                    lo, hi = poly_off[int(par[0])], poly_off[int(par[0]) + 1]
                    if _inside(px, py, poly_xy, lo, hi):
                        inside[j, i] = True
                        if best[j, i] > h:
                            # interior cells lose to boundary-band cells as seeds
                            best[j, i] = h
                            feat[j, i] = f
                    continue
                d, c, qx, qy = _feature_dist(k, par, px, py, poly_xy, poly_off)
                if d <= band and d < best[j, i]:
                    best[j, i] = d
                    feat[j, i] = f
    return feat, inside


@numba.njit(cache=True)
def _edt_1d(f, n, out, arg, v, z):
    """Lower envelope of parabolas rooted at the finite entries of f."""
    k = -1
    for q in range(n):
        if f[q] >= _INF:
            continue
        if k < 0:
            k = 0
            v[0] = q
            z[0] = -_INF
            z[1] = _INF
            continue
        while True:
            p = v[k]
            s = ((f[q] + q * q) - (f[p] + p * p)) / (2.0 * q - 2.0 * p)
            if s <= z[k]:
                k -= 1
            else:
                break
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = _INF
    if k < 0:
        for q in range(n):
            out[q] = _INF
            arg[q] = -1
        return
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        p = v[k]
        out[q] = (q - p) * (q - p) + f[p]
        arg[q] = p


@numba.njit(cache=True)
def _edt_2d(seed):
    ny, nx = seed.shape
    g = np.empty((ny, nx))
    argy = np.empty((ny, nx), dtype=np.int64)
    m = max(nx, ny)
    f = np.empty(m)
    out = np.empty(m)
    arg = np.empty(m, dtype=np.int64)
    v = np.empty(m + 1, dtype=np.int64)
    z = np.empty(m + 2)
    for i in range(nx):
        for j in range(ny):
            f[j] = 0.0 if seed[j, i] else _INF
        _edt_1d(f, ny, out, arg, v, z)
        for j in range(ny):
            g[j, i] = out[j]
            argy[j, i] = arg[j]
    d2 = np.empty((ny, nx))
    nearest = np.empty((ny, nx, 2), dtype=np.int64)
    for j in range(ny):
        for i in range(nx):
            f[i] = g[j, i]
        _edt_1d(f, nx, out, arg, v, z)
        for i in range(nx):
            d2[j, i] = out[i]
            a = arg[i]
            nearest[j, i, 1] = a
            nearest[j, i, 0] = argy[j, a] if a >= 0 else -1
    return d2, nearest


@numba.njit(cache=True)
def _refine(feat, inside, nearest, kinds, params, poly_xy, poly_off, x0, y0, h, tol):
    ny, nx = feat.shape
    dist = np.empty((ny, nx))
    foot = np.empty((ny, nx), dtype=np.int8)
    amb = np.zeros((ny, nx), dtype=np.bool_)
    cand = np.empty(9, dtype=np.int64)
    for j in range(ny):
        py = y0 + (j + 0.5) * h
        for i in range(nx):
            px = x0 + (i + 0.5) * h
            if inside[j, i]:
                dist[j, i] = 0.0
                foot[j, i] = 0
                continue
            nc = 0
            for dj in range(-1, 2):
                for di in range(-1, 2):
                    jj, ii = j + dj, i + di
                    if jj < 0 or jj >= ny or ii < 0 or ii >= nx:
                        continue
                    sj, si = nearest[jj, ii, 0], nearest[jj, ii, 1]
                    if sj < 0:
                        continue
                    fid = feat[sj, si]
                    dup = False
                    for c in range(nc):
                        if cand[c] == fid:
                            dup = True
                    if not dup:
                        cand[nc] = fid
                        nc += 1
            best = 1e300
            bcls = 1
            bqx, bqy = 0.0, 0.0
            second_far = False
            for c in range(nc):
                d, cls, qx, qy = _feature_dist(kinds[cand[c]], params[cand[c]], px, py,
                                               poly_xy, poly_off)
                if d < best - tol:
                    best, bcls, bqx, bqy = d, cls, qx, qy
                    second_far = False
                elif d <= best + tol:
                    if math.hypot(qx - bqx, qy - bqy) > tol:
                        second_far = True
                    # flat footpoints win ties against shared vertices
                    if cls == 1 and bcls == 2:
                        bcls = 1
                    if d < best:
                        best = d
            dist[j, i] = best
            foot[j, i] = bcls if best > 0 else 0
            amb[j, i] = second_far and best > 0
    return dist, foot, amb


def build_field(scene: SceneDescriptor, h: float, margin: float,
                point_limit: int = 2_000_000) -> DistanceField:
    """Exact-distance raster of ``scene`` on cells of size ``h`` around its bounding box."""
    if not h > 0:
        raise GridError("grid spacing must be positive")
    if not margin > 0:
        raise GridError("margin must be positive")
    x0, y0, x1, y1 = scene.bbox
    ox, oy = x0 - margin, y0 - margin
    nx = int(math.ceil((x1 - x0 + 2 * margin) / h))
    ny = int(math.ceil((y1 - y0 + 2 * margin) / h))
    if nx * ny > MAX_CELLS:
        raise GridError(f"grid {nx}x{ny} exceeds the 16384^2 cell limit")
    kinds, params, poly_xy, poly_off = _feature_table(scene, point_limit)
    feat, inside = _rasterize(kinds, params, poly_xy, poly_off, ox, oy, h, nx, ny)
    seed = feat >= 0
    if not seed.any():
        raise GridError("rasterized mask is empty")
    _, nearest = _edt_2d(seed)
    dist, foot, amb = _refine(feat, inside, nearest, kinds, params, poly_xy, poly_off,
                              ox, oy, h, scene.uniqueness_tol)
    return DistanceField((ox, oy), h, nx, ny, dist, foot, amb, seed, margin)


def _check_eps(fld: DistanceField, eps: np.ndarray) -> None:
    if np.any(eps <= 0):
        raise GridError("eps must be positive")
    if np.any(eps > fld.margin):
        raise GridError(f"eps {eps.max():.4g} exceeds the field margin {fld.margin:.4g}")


def tube_volume(fld: DistanceField, eps) -> np.ndarray:
    """h^2 * #{cells with 0 < dist <= eps}."""
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    _check_eps(fld, eps)
    return fld.h ** 2 * np.searchsorted(fld.sorted_positive, eps, side="right")


def level_contours(fld: DistanceField, eps: float) -> list[np.ndarray]:
    """Closed marching-squares contours of {dist = eps} in (row, col) cell units."""
    contours = measure.find_contours(fld.dist, eps)
    for c in contours:
        if np.hypot(*(c[0] - c[-1])) > 1e-9:
            raise ContourError(f"open level set at eps={eps:.4g}; enlarge the margin")
    return contours


def _contour_measures(fld: DistanceField, eps: float):
    length = 0.0
    turning = 0.0
    lap = fld.laplacian
    for c in level_contours(fld, eps):
        seg = np.diff(c, axis=0)
        ds = np.hypot(seg[:, 0], seg[:, 1]) * fld.h
        mid = 0.5 * (c[1:] + c[:-1])
        curv = ndimage.map_coordinates(lap, mid.T, order=1, mode="nearest")
        length += ds.sum()
        turning += np.sum(np.maximum(curv, 0.0) * ds)
    return length, turning / (2 * math.pi)


def tube_function(fld: DistanceField, eps_list) -> TubeFunction:
    eps = np.asarray(eps_list, dtype=float)
    if np.any(np.diff(eps) < 0):
        raise GridError("eps_list must be sorted ascending")
    vol = tube_volume(fld, eps)
    lengths = np.empty(len(eps))
    chis = np.empty(len(eps), dtype=np.int64)
    for k, e in enumerate(eps):
        lengths[k], _ = _contour_measures(fld, e)
        chis[k] = measure.euler_number(fld.dist <= e, connectivity=2)
    x0, y0 = fld.origin
    bbox = (x0, y0, x0 + fld.nx * fld.h, y0 + fld.ny * fld.h)
    return TubeFunction(eps, vol, lengths, chis, fld.h, bbox)


def support_totals(fld: DistanceField, eps_list) -> list[tuple[float, float, float]]:
    """(eps, mu0(A_eps), mu1(A_eps)) from oriented level-set contours.

    mu1 is half the boundary length.  mu0 integrates the positive level-set
    curvature (discrete Laplacian of the distance) along the contours: the
    boundary of a parallel set consists of convex arcs and straight pieces
    joined at reflex corners, and reflex corners carry no normals.
    """
    eps = np.asarray(eps_list, dtype=float)
    _check_eps(fld, eps)
    out = []
    for e in eps:
        length, mu0 = _contour_measures(fld, e)
        out.append((float(e), float(mu0), 0.5 * float(length)))
    return out


def dyadic_eps(eps_max: float, eps_min: float, per_octave: int = 4) -> np.ndarray:
    """eps_k = eps_max * 2^(-k/per_octave), ascending, down to eps_min."""
    n = int(math.floor(per_octave * math.log2(eps_max / eps_min) + 1e-9))
    return np.sort(eps_max * 2.0 ** (-np.arange(n + 1) / per_octave))
