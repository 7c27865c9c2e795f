"""Exact symbolic descriptions of compact planar sets.

A scene is an immutable union of primitives: points, segments, closed
polygonal frames (optionally filled), disks and *lattice frames*.  A lattice
frame is the boundary of an axis-aligned square together with an ``n x n``
grid of interior points at spacing ``side/(n+1)``; it lets the enclosed dust
carry billions of points without enumerating them.

Generators build the prefractals used throughout the package:
Sierpinski gasket, fractal window and enclosed fractal dust.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import PackingError, SceneError

Vec = tuple[float, float]

SQRT3 = math.sqrt(3.0)

# relative uniqueness tolerance for nearest points (times scene diameter)
UNIQUENESS_TOL = 1e-9


@dataclass(frozen=True)
class Point:
    xy: Vec


@dataclass(frozen=True)
class Segment:
    p: Vec
    q: Vec


@dataclass(frozen=True)
class Frame:
    """Closed simple polyline; ``filled`` makes it the polygon it bounds."""

    vertices: tuple[Vec, ...]
    filled: bool = False
    level: int | None = None

    @property
    def ccw(self) -> bool:
        return _signed_area(self.vertices) > 0

    def edges(self) -> list[tuple[Vec, Vec]]:
        v = self.vertices
        return [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]


@dataclass(frozen=True)
class Disk:
    center: Vec
    radius: float


@dataclass(frozen=True)
class LatticeFrame:
    """Square frame ``[x0, x0+side] x [y0, y0+side]`` with an n x n point grid."""

    origin: Vec
    side: float
    n: int
    level: int | None = None

    @property
    def spacing(self) -> float:
        return self.side / (self.n + 1)

    def corners(self) -> tuple[Vec, Vec, Vec, Vec]:
        x0, y0 = self.origin
        s = self.side
        return ((x0, y0), (x0 + s, y0), (x0 + s, y0 + s), (x0, y0 + s))

    def lattice_points(self) -> np.ndarray:
        r = self.spacing
        k = np.arange(1, self.n + 1) * r
        gx, gy = np.meshgrid(self.origin[0] + k, self.origin[1] + k, indexing="xy")
        return np.column_stack([gx.ravel(), gy.ravel()])


Primitive = Union[Point, Segment, Frame, Disk, LatticeFrame]


def _signed_area(v: Sequence[Vec]) -> float:
    a = 0.0
    for i in range(len(v)):
        x1, y1 = v[i]
        x2, y2 = v[(i + 1) % len(v)]
        a += x1 * y2 - x2 * y1
    return 0.5 * a


def _segments_intersect_properly(a, b, c, d) -> bool:
    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    return o1 * o2 < 0 and o3 * o4 < 0


def _check_simple(vertices: Sequence[Vec]) -> None:
    n = len(vertices)
    if n < 3:
        raise SceneError("frame needs at least 3 vertices")
    edges = [(vertices[i], vertices[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_intersect_properly(*edges[i], *edges[j]):
                raise SceneError("frame is self-intersecting")


@dataclass(frozen=True)
class SceneDescriptor:
    elements: tuple[Primitive, ...]
    provenance: dict = field(default_factory=dict, compare=False, hash=False)
    d: int = 2

    def __post_init__(self):
        if not self.elements:
            raise SceneError("scene has no elements")
        if self.d != 2:
            raise SceneError("only planar scenes (d=2) are supported")
        for e in self.elements:
            if isinstance(e, Frame) and len(e.vertices) < 3:
                raise SceneError("frame needs at least 3 vertices")
            if isinstance(e, Disk) and not e.radius > 0:
                raise SceneError("disk radius must be positive")
            if isinstance(e, LatticeFrame) and (e.n < 0 or not e.side > 0):
                raise SceneError("invalid lattice frame")

    def validate(self) -> None:
        """Full invariant check, including frame simplicity (quadratic per frame)."""
        for e in self.elements:
            if isinstance(e, Frame):
                _check_simple(e.vertices)

    # -- derived geometry -------------------------------------------------

    @cached_property
    def bbox(self) -> tuple[float, float, float, float]:
        xs: list[float] = []
        ys: list[float] = []
        for e in self.elements:
            if isinstance(e, Point):
                xs.append(e.xy[0])
                ys.append(e.xy[1])
            elif isinstance(e, Segment):
                xs += [e.p[0], e.q[0]]
                ys += [e.p[1], e.q[1]]
            elif isinstance(e, Frame):
                xs += [v[0] for v in e.vertices]
                ys += [v[1] for v in e.vertices]
            elif isinstance(e, Disk):
                xs += [e.center[0] - e.radius, e.center[0] + e.radius]
                ys += [e.center[1] - e.radius, e.center[1] + e.radius]
            elif isinstance(e, LatticeFrame):
                xs += [e.origin[0], e.origin[0] + e.side]
                ys += [e.origin[1], e.origin[1] + e.side]
        return (min(xs), min(ys), max(xs), max(ys))

    @property
    def diameter(self) -> float:
        x0, y0, x1, y1 = self.bbox
        return math.hypot(x1 - x0, y1 - y0) or 1.0

    @property
    def uniqueness_tol(self) -> float:
        return UNIQUENESS_TOL * self.diameter

    @cached_property
    def segments(self) -> np.ndarray:
        """All straight boundary pieces as an (M, 2, 2) array, duplicates removed."""
        segs: list[tuple[Vec, Vec]] = []
        for e in self.elements:
            if isinstance(e, Segment):
                segs.append((e.p, e.q))
            elif isinstance(e, Frame):
                segs.extend(e.edges())
            elif isinstance(e, LatticeFrame):
                c = e.corners()
                segs.extend((c[i], c[(i + 1) % 4]) for i in range(4))
        if not segs:
            return np.zeros((0, 2, 2))
        arr = np.asarray(segs, dtype=float)
        # canonical endpoint order for deduplication
        swap = (arr[:, 0, 0] > arr[:, 1, 0]) | (
            (arr[:, 0, 0] == arr[:, 1, 0]) & (arr[:, 0, 1] > arr[:, 1, 1])
        )
        canon = arr.copy()
        canon[swap] = arr[swap][:, ::-1]
        _, idx = np.unique(canon.reshape(len(arr), 4), axis=0, return_index=True)
        return arr[np.sort(idx)]

    @cached_property
    def points(self) -> np.ndarray:
        """Isolated points (explicit points only; lattice points are implicit)."""
        pts = [e.xy for e in self.elements if isinstance(e, Point)]
        return np.asarray(pts, dtype=float).reshape(-1, 2)

    @property
    def disks(self) -> list[Disk]:
        return [e for e in self.elements if isinstance(e, Disk)]

    @property
    def lattices(self) -> list[LatticeFrame]:
        return [e for e in self.elements if isinstance(e, LatticeFrame)]

    @property
    def filled_frames(self) -> list[Frame]:
        return [e for e in self.elements if isinstance(e, Frame) and e.filled]

    def lattice_point_count(self) -> int:
        return sum(e.n * e.n for e in self.lattices)

    def expanded_points(self, limit: int = 5_000_000) -> np.ndarray:
        """Explicit points plus every lattice point (bounded by ``limit``)."""
        count = len(self.points) + self.lattice_point_count()
        if count > limit:
            raise SceneError(f"{count} points exceed the expansion limit {limit}")
        parts = [self.points] + [e.lattice_points() for e in self.lattices if e.n]
        return np.concatenate(parts) if parts else np.zeros((0, 2))

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        out = []
        for e in self.elements:
            if isinstance(e, Point):
                out.append({"type": "point", "xy": list(e.xy)})
            elif isinstance(e, Segment):
                out.append({"type": "segment", "p": list(e.p), "q": list(e.q)})
            elif isinstance(e, Frame):
                item = {"type": "frame", "vertices": [list(v) for v in e.vertices]}
                if e.filled:
                    item["filled"] = True
                if e.level is not None:
                    item["level"] = e.level
                out.append(item)
            elif isinstance(e, Disk):
                out.append({"type": "disk", "center": list(e.center), "radius": e.radius})
            elif isinstance(e, LatticeFrame):
                item = {"type": "lattice_frame", "origin": list(e.origin),
                        "side": e.side, "n": e.n}
                if e.level is not None:
                    item["level"] = e.level
                out.append(item)
        return {"d": self.d, "elements": out, "provenance": self.provenance,
                "bbox": list(self.bbox)}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "SceneDescriptor":
        if data.get("d", 2) != 2:
            raise SceneError("only d=2 scenes are supported")
        elems: list[Primitive] = []
        for item in data["elements"]:
            kind = item["type"]
            if kind == "point":
                elems.append(Point(tuple(item["xy"])))
            elif kind == "segment":
                elems.append(Segment(tuple(item["p"]), tuple(item["q"])))
            elif kind == "frame":
                elems.append(Frame(tuple(tuple(v) for v in item["vertices"]),
                                   filled=item.get("filled", False),
                                   level=item.get("level")))
            elif kind == "disk":
                elems.append(Disk(tuple(item["center"]), float(item["radius"])))
            elif kind == "lattice_frame":
                elems.append(LatticeFrame(tuple(item["origin"]), float(item["side"]),
                                          int(item["n"]), level=item.get("level")))
            else:
                raise SceneError(f"unknown element type {kind!r}")
        return cls(tuple(elems), provenance=data.get("provenance", {}))

    @classmethod
    def from_json(cls, text: str) -> "SceneDescriptor":
        return cls.from_dict(json.loads(text))


# -- generators -------------------------------------------------------------

SG_VERTICES: tuple[Vec, Vec, Vec] = ((0.0, 0.0), (1.0, 0.0), (0.5, SQRT3 / 2))


def generate_sierpinski(depth: int) -> SceneDescriptor:
    """Unit triangle frame plus the boundaries of all triangles removed in steps 1..depth.

    Removed triangles of step k are tagged ``level=k`` and have side 2^-k.
    """
    if not (isinstance(depth, (int, np.integer)) and 0 <= depth <= 12):
        raise SceneError(f"sierpinski depth must be an integer in [0, 12], got {depth!r}")
    frames = [Frame(SG_VERTICES, level=0)]
    remaining = [SG_VERTICES]
    for k in range(1, depth + 1):
        nxt = []
        for a, b, c in remaining:
            ab = ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)
            bc = ((b[0] + c[0]) / 2, (b[1] + c[1]) / 2)
            ca = ((c[0] + a[0]) / 2, (c[1] + a[1]) / 2)
            frames.append(Frame((ab, bc, ca), level=k))
            nxt += [(a, ab, ca), (ab, b, bc), (ca, bc, c)]
        remaining = nxt
    return SceneDescriptor(tuple(frames),
                           provenance={"generator": "sierpinski", "depth": int(depth)})


@dataclass(frozen=True)
class IfsParams:
    """Similarities x -> ratio * R(angle) x + translation applied to an initial pattern."""

    maps: tuple[tuple[float, float, Vec], ...]
    depth: int
    initial: SceneDescriptor

    def __post_init__(self):
        if not all(0 < r < 1 for r, _, _ in self.maps):
            raise SceneError("IFS ratios must lie in (0, 1)")
        if self.depth < 0:
            raise SceneError("IFS depth must be nonnegative")


def window_maps(r: float) -> tuple[tuple[float, float, Vec], ...]:
    p = (1 - 2 * r) / 3
    shifts = [(p, p), (p, 2 * p + r), (2 * p + r, p), (2 * p + r, 2 * p + r)]
    return tuple((r, 0.0, s) for s in shifts)


def _apply_map(m, v: Vec) -> Vec:
    r, ang, (tx, ty) = m
    c, s = math.cos(ang), math.sin(ang)
    return (r * (c * v[0] - s * v[1]) + tx, r * (s * v[0] + c * v[1]) + ty)


def iterate_frames(params: IfsParams) -> list[Frame]:
    """Inhomogeneous iteration: the pattern plus all images under words of length <= depth."""
    level = [e for e in params.initial.elements if isinstance(e, Frame)]
    out = list(level)
    for k in range(1, params.depth + 1):
        nxt = []
        for f in level:
            for m in params.maps:
                nxt.append(Frame(tuple(_apply_map(m, v) for v in f.vertices), level=k))
        out += nxt
        level = nxt
    return out


def generate_fractal_window(r: float, depth: int) -> SceneDescriptor:
    """Unit-square frame and its images under the four window similarities, 4^k frames at level k."""
    if not 0 < r < 0.5:
        raise SceneError(f"window ratio must lie in (0, 1/2), got {r}")
    if not 0 <= depth <= 8:
        raise SceneError(f"window depth must lie in [0, 8], got {depth}")
    square = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))
    init = SceneDescriptor((Frame(square, level=0),))
    frames = iterate_frames(IfsParams(window_maps(r), depth, init))
    return SceneDescriptor(tuple(frames),
                           provenance={"generator": "window", "r": r, "depth": int(depth)})


@dataclass(frozen=True)
class DustParams:
    alpha: float = 2 / 3
    m: int = 1
    j_max: int = 2000
    layout: str = "ideal"
    box_side: float | None = None

    def __post_init__(self):
        if not 0.5 < self.alpha <= 2 / 3 + 1e-12:
            raise SceneError(f"alpha must lie in (1/2, 2/3], got {self.alpha}")
        if self.m < 1 or self.j_max < 1 or self.j_max > 10_000:
            raise SceneError("need m >= 1 and 1 <= j_max <= 10^4")
        if self.layout not in DUST_LAYOUTS:
            raise SceneError(f"unknown layout {self.layout!r}")

    def side(self, j) -> np.ndarray:
        return np.asarray(j, dtype=float) ** -self.alpha

    def count(self, j) -> np.ndarray:
        return np.asarray(j) ** self.m - 1

    def spacing(self, j) -> np.ndarray:
        return np.asarray(j, dtype=float) ** -(self.alpha + self.m)


# "ideal": frames are placed by the shelf layout but the bundle treats them as
# a perfect packing (shared sides, only the enclosing square is exposed).
# "shelf": the literal shelf geometry, exposed outer sides included.
DUST_LAYOUTS = ("ideal", "shelf")


def shelf_pack(sides: np.ndarray, gaps: np.ndarray, box: float) -> np.ndarray:
    """Rows of decreasing squares, left to right; returns lower-left corners."""
    origins = np.zeros((len(sides), 2))
    x = y = 0.0
    row_h = 0.0
    for j, (s, gap) in enumerate(zip(sides, gaps)):
        if x + s > box:
            y += row_h
            x = 0.0
            row_h = 0.0
        if x + s > box or y + s > box:
            raise PackingError(j + 1, f"square of side {s:.3g} does not fit in box {box:.4g}")
        origins[j] = (x, y)
        x += s + gap
        row_h = max(row_h, s + gap)
    return origins


def generate_dust(params: DustParams) -> SceneDescriptor:
    j = np.arange(1, params.j_max + 1)
    sides = params.side(j)
    counts = params.count(j)
    gaps = params.spacing(j)
    if params.box_side is not None:
        box = params.box_side
    else:
        box = 1.3 * math.sqrt(float(np.sum((sides + gaps) ** 2))) + sides[0]
    origins = shelf_pack(sides, gaps, box)
    elems = tuple(
        LatticeFrame((float(o[0]), float(o[1])), float(s), int(n), level=int(jj))
        for o, s, n, jj in zip(origins, sides, counts, j)
    )
    prov = {"generator": "dust", "alpha": params.alpha, "m": params.m,
            "j_max": params.j_max, "layout": params.layout, "box_side": box}
    return SceneDescriptor(elems, provenance=prov)


def generate_square(side: float = 1.0, filled: bool = False) -> SceneDescriptor:
    sq = ((0.0, 0.0), (side, 0.0), (side, side), (0.0, side))
    return SceneDescriptor((Frame(sq, filled=filled),),
                           provenance={"generator": "square", "side": side, "filled": filled})


def generate_disk(radius: float = 1.0) -> SceneDescriptor:
    return SceneDescriptor((Disk((0.0, 0.0), radius),),
                           provenance={"generator": "disk", "radius": radius})


def generate_point() -> SceneDescriptor:
    return SceneDescriptor((Point((0.0, 0.0)),), provenance={"generator": "point"})


def generate_segment(length: float = 1.0) -> SceneDescriptor:
    return SceneDescriptor((Segment((0.0, 0.0), (length, 0.0)),),
                           provenance={"generator": "segment", "length": length})


def generate_points(points: Iterable[Vec]) -> SceneDescriptor:
    return SceneDescriptor(tuple(Point(tuple(map(float, p))) for p in points),
                           provenance={"generator": "points"})


# -- exact distance ---------------------------------------------------------

def _point_segment(z: np.ndarray, a: np.ndarray, b: np.ndarray):
    """Distances and nearest points from one point z to many segments."""
    ab = b - a
    ll = np.einsum("ij,ij->i", ab, ab)
    lam = np.where(ll > 0, np.einsum("ij,ij->i", z - a, ab) / np.where(ll > 0, ll, 1), 0.0)
    lam = np.clip(lam, 0.0, 1.0)
    near = a + lam[:, None] * ab
    return np.hypot(*(z - near).T), near


def _inside_polygon(z, vertices) -> bool:
    x, y = z
    inside = False
    n = len(vertices)
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if xc > x:
                inside = not inside
    return inside


def exact_distance(scene: SceneDescriptor, z) -> tuple[float, list[Vec]]:
    """Distance from z to the scene and every nearest point, up to the uniqueness tolerance."""
    z = np.asarray(z, dtype=float)
    cands: list[tuple[float, np.ndarray]] = []
    segs = scene.segments
    if len(segs):
        d, near = _point_segment(z, segs[:, 0], segs[:, 1])
        cands += list(zip(d, near))
    if len(scene.points):
        d = np.hypot(*(scene.points - z).T)
        cands += list(zip(d, scene.points))
    for disk in scene.disks:
        c = np.asarray(disk.center)
        rho = float(np.hypot(*(z - c)))
        if rho <= disk.radius:
            cands.append((0.0, z.copy()))
        elif rho > 0:
            cands.append((rho - disk.radius, c + (z - c) * disk.radius / rho))
    for f in scene.filled_frames:
        if _inside_polygon(z, f.vertices):
            cands.append((0.0, z.copy()))
    for lf in scene.lattices:
        if lf.n == 0:
            continue
        r = lf.spacing
        base = (z - np.asarray(lf.origin)) / r
        ks = []
        for ax in range(2):
            k0 = int(np.clip(np.floor(base[ax]), 1, lf.n))
            ks.append(sorted({min(max(k0 + o, 1), lf.n) for o in (-1, 0, 1, 2)}))
        for kx in ks[0]:
            for ky in ks[1]:
                p = np.asarray(lf.origin) + r * np.array([kx, ky])
                cands.append((float(np.hypot(*(z - p))), p))
    dmin = min(c[0] for c in cands)
    tol = scene.uniqueness_tol
    nearest: list[np.ndarray] = []
    for d, p in cands:
        if d <= dmin + tol and not any(np.hypot(*(p - q)) <= tol for q in nearest):
            nearest.append(np.asarray(p, dtype=float))
    return float(dmin), [tuple(map(float, p)) for p in nearest]


def distance_many(scene: SceneDescriptor, z: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """Vectorized scene distance for an (N, 2) array (no multiplicity information)."""
    z = np.asarray(z, dtype=float).reshape(-1, 2)
    out = np.full(len(z), np.inf)
    segs = scene.segments
    pts = scene.points
    for lo in range(0, len(z), chunk):
        zz = z[lo:lo + chunk]
        best = np.full(len(zz), np.inf)
        if len(segs):
            a = segs[None, :, 0]
            ab = segs[None, :, 1] - a
            ll = np.einsum("ijk,ijk->ij", ab, ab)
            w = zz[:, None, :] - a
            lam = np.clip(np.einsum("ijk,ijk->ij", w, ab) / np.where(ll > 0, ll, 1), 0, 1)
            diff = w - lam[..., None] * ab
            best = np.minimum(best, np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)).min(axis=1))
        if len(pts):
            diff = zz[:, None, :] - pts[None]
            best = np.minimum(best, np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)).min(axis=1))
        for disk in scene.disks:
            rho = np.hypot(*(zz - np.asarray(disk.center)).T)
            best = np.minimum(best, np.maximum(rho - disk.radius, 0.0))
        for f in scene.filled_frames:
            inside = np.array([_inside_polygon(p, f.vertices) for p in zz])
            best = np.where(inside, 0.0, best)
        for lf in scene.lattices:
            if lf.n == 0:
                continue
            r = lf.spacing
            k = np.clip(np.rint((zz - np.asarray(lf.origin)) / r), 1, lf.n)
            p = np.asarray(lf.origin) + r * k
            best = np.minimum(best, np.hypot(*(zz - p).T))
        out[lo:lo + chunk] = best
    return out
