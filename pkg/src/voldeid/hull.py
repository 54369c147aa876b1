"""3D convex hulls of voxel point clouds, and their rasterization.

Points are (n, 3) integer arrays (voxel indices; integer-valued floats are
accepted and cast).  All orientation predicates are evaluated in exact int64
arithmetic, which is overflow-safe for coordinates up to ~1e5; inputs beyond
that are rejected.

``convex_hull`` follows Chan's output-sensitive structure: the point set is
split into groups of m, each group is reduced to its hull vertices with an
incremental 3D hull, and the global hull is recovered by gift-wrapping facet
by facet over the union of group-hull vertices.  If the wrap discovers more
than m hull vertices it aborts and the whole computation restarts with m
squared (m = 2^(2^t), t = 2, 3, ...).

Coplanar clusters of input points are the painful part: an incremental hull
happily keeps points that sit on a face or an edge of the final hull as
vertices of its triangulation.  The wrap therefore works in facet *patches*:
each supporting plane found while wrapping collects every point lying on it,
and the strict 2D hull of that patch yields exactly the extreme corners.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInput, InvalidCount, TooFewPoints
from .volume import MASK, Volume, rng_from

_COORD_BOUND = 100_000  # keeps every int64 determinant below 2^62
_PLANE_TOL_FACTOR = 1e-6

# cyclic axis pairs: dropping axis a, the 2D cross product on _PROJ[a]
# equals component a of the 3D cross product (sign included)
_PROJ = ((1, 2), (2, 0), (0, 1))


def _as_int_points(points) -> np.ndarray:
    pts = np.asarray(points)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected an (n, 3) point array, got shape {pts.shape}")
    if pts.dtype.kind == "f":
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        r = np.rint(pts)
        if not np.array_equal(r, pts):
            raise ValueError("points must have integer coordinates")
        pts = r
    elif pts.dtype.kind not in "iu":
        raise ValueError(f"unsupported point dtype {pts.dtype}")
    pts = pts.astype(np.int64)
    if np.any(np.abs(pts) > _COORD_BOUND):
        raise ValueError(f"coordinates must lie within +-{_COORD_BOUND}")
    return pts


def _first_tetra(pts: np.ndarray):
    """Indices of an affinely independent quadruple, or None."""
    d = pts - pts[0]
    nz = np.nonzero(np.any(d != 0, axis=1))[0]
    if len(nz) == 0:
        return None
    i1 = int(nz[0])
    cr = np.cross(d[i1], d)
    nz = np.nonzero(np.any(cr != 0, axis=1))[0]
    if len(nz) == 0:
        return None
    i2 = int(nz[0])
    n = np.cross(d[i1], d[i2])
    vol = d @ n
    nz = np.nonzero(vol != 0)[0]
    if len(nz) == 0:
        return None
    return 0, i1, i2, int(nz[0])


def _chain_idx(p2: np.ndarray) -> np.ndarray:
    """Strict 2D convex hull (monotone chain) of distinct int points.

    Returns indices into p2 in counter-clockwise cycle order; collinear
    boundary points are dropped, so the result is exactly the extreme set.
    """
    n = len(p2)
    order = np.lexsort((p2[:, 1], p2[:, 0]))
    if n <= 2:
        return order

    def cross(o, a, b):
        return int((p2[a, 0] - p2[o, 0]) * (p2[b, 1] - p2[o, 1])
                   - (p2[a, 1] - p2[o, 1]) * (p2[b, 0] - p2[o, 0]))

    lower: list[int] = []
    for i in order:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], i) <= 0:
            lower.pop()
        lower.append(int(i))
    upper: list[int] = []
    for i in order[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], i) <= 0:
            upper.pop()
        upper.append(int(i))
    cycle = lower[:-1] + upper[:-1]
    if len(cycle) < 2:  # all points collinear reduce to the two endpoints
        cycle = [lower[0], upper[0]]
    return np.asarray(cycle, dtype=np.int64)


def hull_2d(points) -> np.ndarray:
    """Strict convex hull of 2D integer points, CCW corner coordinates.

    Collinear inputs degrade gracefully to the two extreme endpoints
    (or a single point)."""
    p = np.asarray(points)
    if p.ndim != 2 or p.shape[1] != 2 or len(p) == 0:
        raise ValueError(f"expected a nonempty (n, 2) array, got {p.shape}")
    p = np.unique(p.astype(np.int64), axis=0)
    return p[_chain_idx(p)]


def _patch_cycle(pts: np.ndarray, on_idx: np.ndarray, normal: np.ndarray) -> np.ndarray:
    """Corner indices of one hull facet, as a cycle that is CCW seen from
    outside (i.e. whose area vector points along the outward normal)."""
    ax = int(np.argmax(np.abs(normal)))
    u, v = _PROJ[ax]
    # on-plane points project injectively: two points differing only along
    # ax cannot both satisfy the plane equation since normal[ax] != 0
    chain = _chain_idx(pts[on_idx][:, (u, v)])
    if normal[ax] < 0:
        chain = chain[::-1]
    return on_idx[chain]


def _pivot(pts: np.ndarray, a: np.ndarray, b: np.ndarray):
    """Wrap around directed edge a->b: find the supporting plane through it.

    Returns (normal, plane_values) with no point strictly above, i.e.
    plane_values <= 0 everywhere; points on the plane have value 0.
    """
    rel = pts - a
    cand = np.nonzero(np.any(np.cross(b - a, rel) != 0, axis=1))[0]
    if len(cand) == 0:
        raise DegenerateInput("all points collinear with a wrap edge")
    c = pts[cand[0]]
    while True:
        n = np.cross(b - a, c - a)
        vals = rel @ n
        hi = int(np.argmax(vals))
        if vals[hi] <= 0:
            return n, vals
        c = pts[hi]


def _giftwrap(pts: np.ndarray, budget: int):
    """Wrap the hull of pts facet patch by facet patch.

    Returns (corner_ids, triangles) with triangles indexing into pts, or
    None once more than ``budget`` hull vertices have been discovered.
    """
    n = len(pts)
    lex = np.lexsort((pts[:, 2], pts[:, 1], pts[:, 0]))
    p0 = int(lex[0])

    corners: set[int] = set()
    tris: list[tuple[int, int, int]] = []
    done: set[tuple[int, int]] = set()
    queue: deque[tuple[int, int]] = deque()
    pending: set[tuple[int, int]] = set()

    def register(cycle: np.ndarray) -> bool:
        corners.update(int(i) for i in cycle)
        for t in range(1, len(cycle) - 1):
            tris.append((int(cycle[0]), int(cycle[t]), int(cycle[t + 1])))
        for t in range(len(cycle)):
            e = (int(cycle[t]), int(cycle[(t + 1) % len(cycle)]))
            done.add(e)
            rev = (e[1], e[0])
            if rev not in done and rev not in pending:
                pending.add(rev)
                queue.append(rev)
        return len(corners) <= budget

    # seed facet: wrap around a virtual vertical edge through the
    # lexicographic minimum, which is extreme by construction
    virtual = pts[p0] + np.array([0, 0, 1], dtype=np.int64)
    normal, vals = _pivot(pts, pts[p0], virtual)
    on_idx = np.nonzero(vals == 0)[0]
    rel = pts[on_idx] - pts[p0]
    ref = rel[np.argmax(np.sum(rel * rel, axis=1))]
    if not np.any(np.cross(ref, rel)):
        # the supporting plane touches the hull in a single edge
        p1 = int(on_idx[np.argmax(np.sum(rel * rel, axis=1))])
        corners.update((p0, p1))
        queue.extend([(p0, p1), (p1, p0)])
        pending.update([(p0, p1), (p1, p0)])
    else:
        if not register(_patch_cycle(pts, on_idx, normal)):
            return None

    guard = 6 * budget + 64
    while queue:
        edge = queue.popleft()
        pending.discard(edge)
        if edge in done:
            continue
        guard -= 1
        if guard < 0:
            return None
        a, b = edge
        normal, vals = _pivot(pts, pts[a], pts[b])
        cycle = _patch_cycle(pts, np.nonzero(vals == 0)[0], normal)
        # the awaited edge must be part of this patch's boundary cycle
        pos = int(np.nonzero(cycle == a)[0][0])
        assert int(cycle[(pos + 1) % len(cycle)]) == b, "wrap lost its edge"
        if not register(cycle):
            return None

    order = np.asarray(sorted(corners), dtype=np.int64)
    remap = {int(v): i for i, v in enumerate(order)}
    tri = np.asarray([[remap[i], remap[j], remap[k]] for i, j, k in tris],
                     dtype=np.int32)
    return order, tri


def _subhull_vertices(pts: np.ndarray) -> np.ndarray:
    """Vertex indices of one group's hull; degenerate groups keep every point."""
    if len(pts) < 4 or _first_tetra(pts) is None:
        return np.arange(len(pts), dtype=np.int64)
    faces = _incremental_hull(pts)
    return np.unique(np.asarray(faces, dtype=np.int64))


def _incremental_hull(pts: np.ndarray) -> list[tuple[int, int, int]]:
    """Plain incremental 3D hull; assumes a non-coplanar, deduplicated set.

    The triangulation it returns is convex but may keep points that lie on
    faces or edges of earlier partial hulls as vertices; callers only ever
    use its vertex set as a superset of the extreme points.
    """
    i0, i1, i2, i3 = _first_tetra(pts)
    if (pts[i3] - pts[i0]) @ np.cross(pts[i1] - pts[i0], pts[i2] - pts[i0]) > 0:
        i1, i2 = i2, i1
    faces = [(i0, i1, i2), (i0, i3, i1), (i1, i3, i2), (i2, i3, i0)]
    normals = np.empty((4, 3), dtype=np.int64)
    offs = np.empty(4, dtype=np.int64)
    for f, (a, b, c) in enumerate(faces):
        normals[f] = np.cross(pts[b] - pts[a], pts[c] - pts[a])
        offs[f] = normals[f] @ pts[a]

    first = {i0, i1, i2, i3}
    for ip in range(len(pts)):
        if ip in first:
            continue
        p = pts[ip]
        vis = normals @ p > offs
        if not np.any(vis):
            continue
        horizon: list[tuple[int, int]] = []
        vis_edges = set()
        for f in np.nonzero(vis)[0]:
            a, b, c = faces[f]
            vis_edges.update(((a, b), (b, c), (c, a)))
        for e in vis_edges:
            if (e[1], e[0]) not in vis_edges:
                horizon.append(e)
        keep = ~vis
        faces = [faces[f] for f in np.nonzero(keep)[0]]
        new_n = np.empty((len(horizon), 3), dtype=np.int64)
        new_o = np.empty(len(horizon), dtype=np.int64)
        for t, (a, b) in enumerate(horizon):
            faces.append((a, b, ip))
            new_n[t] = np.cross(pts[b] - pts[a], p - pts[a])
            new_o[t] = new_n[t] @ pts[a]
        normals = np.concatenate([normals[keep], new_n])
        offs = np.concatenate([offs[keep], new_o])
    return faces


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Closed convex triangulated surface: vertex array plus outward triangles.

    Validates on construction: triangle indices in range, no zero-area
    triangles, every triangle oriented away from the vertex centroid, and
    global convexity within a relative tolerance of the mesh extent.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    centroid: np.ndarray = field(init=False)

    def __post_init__(self):
        v = np.array(self.vertices, dtype=np.float64)
        t = np.array(self.triangles, dtype=np.int32)
        if v.ndim != 2 or v.shape[1] != 3 or len(v) < 4:
            raise ValueError(f"bad vertex array shape {v.shape}")
        if t.ndim != 2 or t.shape[1] != 3 or len(t) < 4:
            raise ValueError(f"bad triangle array shape {t.shape}")
        if t.min() < 0 or t.max() >= len(v):
            raise ValueError("triangle index out of range")
        v.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        object.__setattr__(self, "centroid", v.mean(axis=0))

        a, b, c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
        normals = np.cross(b - a, c - a)
        area2 = np.linalg.norm(normals, axis=1)
        if np.any(area2 == 0):
            raise DegenerateInput("mesh contains a zero-area triangle")
        if np.any(np.einsum("ij,ij->i", normals, a - self.centroid) <= 0):
            raise ValueError("triangle oriented toward the centroid")
        extent = float(np.ptp(v, axis=0).max())
        tol = _PLANE_TOL_FACTOR * max(extent, 1.0)
        unit = normals / area2[:, None]
        dist = v @ unit.T - np.einsum("ij,ij->i", unit, a)
        if dist.max() > tol:
            raise ValueError("mesh is not convex")

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)


def convex_hull(points) -> TriMesh:
    """Exact convex hull of integer points via Chan's doubling scheme.

    The returned mesh's vertex set is exactly the extreme points of the
    input: points interior to the hull, on a face, or along an edge never
    appear.  Input order does not affect the result.
    """
    pts = np.unique(_as_int_points(points), axis=0)
    if len(pts) < 4:
        raise TooFewPoints(f"hull needs at least 4 distinct points, got {len(pts)}")
    if _first_tetra(pts) is None:
        raise DegenerateInput("points are coplanar")

    n = len(pts)
    t = 2
    while True:
        m = n if 2 ** t >= 64 else 2 ** (2 ** t)
        m = min(m, n)
        groups = [np.arange(lo, min(lo + m, n)) for lo in range(0, n, m)]
        union: list[np.ndarray] = []
        for g in groups:
            union.append(g[0] + _subhull_vertices(pts[g]))
        uidx = np.unique(np.concatenate(union))
        res = _giftwrap(pts[uidx], budget=m)
        if res is None:
            t += 1
            continue
        corner_ids, tri = res
        return TriMesh(vertices=pts[uidx[corner_ids]].astype(np.float64),
                       triangles=tri)


def brute_force_hull(points) -> np.ndarray:
    """Exhaustive hull vertex set, the oracle for ``convex_hull``.

    Every point triple is tested as a supporting plane (all other points on
    one side); the strict 2D hull of each supporting plane's point set marks
    the corners.  O(n^4)-ish, so n is capped at 60.  Returns the extreme
    points sorted lexicographically.
    """
    pts = np.unique(_as_int_points(points), axis=0)
    n = len(pts)
    if n < 4:
        raise TooFewPoints(f"need at least 4 distinct points, got {n}")
    if n > 60:
        raise ValueError(f"brute force is capped at 60 points, got {n}")
    if _first_tetra(pts) is None:
        raise DegenerateInput("points are coplanar")

    ii, jj, kk = np.array(
        [(i, j, k) for i in range(n) for j in range(i + 1, n) for k in range(j + 1, n)]
    ).T
    normals = np.cross(pts[jj] - pts[ii], pts[kk] - pts[ii])
    ok = np.any(normals != 0, axis=1)
    ii, normals = ii[ok], normals[ok]
    vals = pts @ normals.T - np.einsum("ij,ij->i", normals, pts[ii])
    support = np.nonzero(np.all(vals <= 0, axis=0) | np.all(vals >= 0, axis=0))[0]

    seen_planes: set[tuple[int, ...]] = set()
    extreme = np.zeros(n, dtype=bool)
    for s in support:
        nrm = normals[s]
        g = np.gcd.reduce(np.abs(nrm))
        key_n = nrm // g
        if tuple(key_n) < tuple(-key_n):
            key_n = -key_n
        key = (*key_n, int(key_n @ pts[ii[s]]))
        if key in seen_planes:
            continue
        seen_planes.add(key)
        on_idx = np.nonzero(vals[:, s] == 0)[0]
        ax = int(np.argmax(np.abs(nrm)))
        u, v = _PROJ[ax]
        extreme[on_idx[_chain_idx(pts[on_idx][:, (u, v)])]] = True
    return pts[extreme]


def voxelize_hull(mesh: TriMesh, side: int, n_triangles: int | None = 100,
                  seed: int = 0) -> Volume:
    """Rasterize a hull mesh into a binary volume by half-space clipping.

    Starts from an all-ones cube and, for each selected triangle, zeroes
    every voxel strictly outside its supporting plane (outward = away from
    the mesh centroid).  ``n_triangles`` picks a uniform without-replacement
    sample of triangles (None means all); the sample is the prefix of one
    seeded permutation, so growing the count only ever removes voxels.
    On-plane voxels are kept (tolerance 1e-6 * side).
    """
    if side < 1:
        raise ValueError(f"side must be positive, got {side}")
    if n_triangles is not None and n_triangles <= 0:
        raise InvalidCount(f"n_triangles must be positive or None, got {n_triangles}")
    v = mesh.vertices
    if v.min() < 0 or v.max() > side - 1:
        raise ValueError("mesh does not fit in the requested volume")

    total = mesh.num_triangles
    count = total if n_triangles is None else min(n_triangles, total)
    chosen = rng_from(seed).permutation(total)[:count]

    a = v[mesh.triangles[chosen, 0]]
    b = v[mesh.triangles[chosen, 1]]
    c = v[mesh.triangles[chosen, 2]]
    normals = np.cross(b - a, c - a)
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    flip = np.einsum("ij,ij->i", normals, a - mesh.centroid) < 0
    normals[flip] *= -1.0

    ax = np.arange(side, dtype=np.float64)
    g0 = ax[:, None, None]
    g1 = ax[None, :, None]
    g2 = ax[None, None, :]
    tol = _PLANE_TOL_FACTOR * side
    keep = np.ones((side, side, side), dtype=bool)
    for t in range(count):
        n = normals[t]
        d = g0 * n[0] + g1 * n[1] + g2 * n[2] - float(normals[t] @ a[t])
        keep &= d <= tol
    return Volume(keep.astype(np.float32), kind=MASK)
