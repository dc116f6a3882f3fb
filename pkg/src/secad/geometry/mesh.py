"""Triangle meshes for prisms: caps via ear clipping, holes via bridging.

The mesh is a per-primitive approximation for previews and export; cut
primitives are tagged so viewers can draw them as translucent
subtractions instead of true CSG results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..cad_seq import CadModel
from .profile import Profile2D, signed_area
from .solid import SolidAssembly, assemble

_EPS = 1e-12


@dataclass(frozen=True)
class TriangleMesh:
    vertices: np.ndarray  # (V, 3)
    triangles: np.ndarray  # (T, 3) int
    tri_tags: np.ndarray  # (T,) primitive index per triangle
    prim_ops: tuple[str, ...]  # bool_op per primitive index

    @property
    def n_triangles(self):
        return len(self.triangles)


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _inside_tri(p, a, b, c):
    if (abs(p[0] - a[0]) < _EPS and abs(p[1] - a[1]) < _EPS) or \
       (abs(p[0] - b[0]) < _EPS and abs(p[1] - b[1]) < _EPS) or \
       (abs(p[0] - c[0]) < _EPS and abs(p[1] - c[1]) < _EPS):
        return False  # coincident with a corner (bridge duplicates)
    return _cross(a, b, p) >= -_EPS and _cross(b, c, p) >= -_EPS and _cross(c, a, p) >= -_EPS


def ear_clip(points, order):
    """Triangulate a simple CCW polygon given as indices into ``points``.

    Returns triangles as index triples.  Bridge duplicates (the same index
    appearing twice) are tolerated.
    """
    idx = list(order)
    pts = points
    tris = []

    def corner_cross(k, active):
        m = len(active)
        return _cross(pts[active[(k - 1) % m]], pts[active[k]], pts[active[(k + 1) % m]])

    while len(idx) > 3:
        m = len(idx)
        reflex = [j for j in range(m) if corner_cross(j, idx) < _EPS]
        clipped = False
        for k in range(m):
            if k in reflex:
                continue
            i0, i1, i2 = idx[(k - 1) % m], idx[k], idx[(k + 1) % m]
            a, b, c = pts[i0], pts[i1], pts[i2]
            blocked = False
            for j in reflex:
                jj = idx[j]
                if jj in (i0, i1, i2):
                    continue
                if _inside_tri(pts[jj], a, b, c):
                    blocked = True
                    break
            if not blocked:
                tris.append((i0, i1, i2))
                idx.pop(k)
                clipped = True
                break
        if not clipped:
            # numerical fallback: clip the most convex corner
            k = max(range(m), key=lambda j: corner_cross(j, idx))
            tris.append((idx[(k - 1) % m], idx[k], idx[(k + 1) % m]))
            idx.pop(k)
    tris.append(tuple(idx))
    return [t for t in tris if abs(_cross(pts[t[0]], pts[t[1]], pts[t[2]])) > _EPS]


def _bridge_holes(points, outer_order, hole_orders):
    """Merge holes into the outer ring with mutually visible bridges."""
    merged = list(outer_order)
    holes = sorted(hole_orders, key=lambda h: -max(points[i][0] for i in h))
    for hole in holes:
        im = max(range(len(hole)), key=lambda k: points[hole[k]][0])
        mx, my = points[hole[im]]
        # closest intersection of the +x ray with the merged boundary
        best_t = None
        best_edge = None
        n = len(merged)
        for e in range(n):
            a = points[merged[e]]
            b = points[merged[(e + 1) % n]]
            if (a[1] > my) == (b[1] > my):
                continue
            xi = a[0] + (b[0] - a[0]) * (my - a[1]) / (b[1] - a[1])
            if xi >= mx - _EPS and (best_t is None or xi < best_t):
                best_t = xi
                best_edge = e
        if best_edge is None:
            # hole outside the outer ring; attach to the nearest vertex
            ip = min(range(n), key=lambda k: (points[merged[k]][0] - mx) ** 2 + (points[merged[k]][1] - my) ** 2)
        else:
            a_i = best_edge
            b_i = (best_edge + 1) % n
            pa, pb = points[merged[a_i]], points[merged[b_i]]
            cand = a_i if pa[0] > pb[0] else b_i
            ip = cand
            # a reflex vertex inside triangle (M, I, P) would occlude P
            tri = ((mx, my), (best_t, my), points[merged[cand]])
            best_angle = None
            for k in range(n):
                p = points[merged[k]]
                if k == cand or not _inside_tri(p, *tri):
                    continue
                dx, dy = p[0] - mx, p[1] - my
                ang = abs(dy) / max(np.hypot(dx, dy), _EPS)
                if best_angle is None or ang < best_angle:
                    best_angle = ang
                    ip = k
        hole_rot = hole[im:] + hole[:im]
        merged = merged[: ip + 1] + hole_rot + [hole_rot[0], merged[ip]] + merged[ip + 1:]
    return merged


def triangulate_face(profile: Profile2D):
    """Triangulate one face region; returns (verts2d, triangle index array)."""
    rings = [profile.outer, *profile.holes]
    points = np.concatenate(rings, axis=0)
    offsets = np.cumsum([0] + [len(r) for r in rings])
    outer_order = list(range(offsets[0], offsets[1]))
    hole_orders = [list(range(offsets[k], offsets[k + 1])) for k in range(1, len(rings))]
    pts_list = [tuple(p) for p in points]
    if hole_orders:
        order = _bridge_holes(pts_list, outer_order, hole_orders)
    else:
        order = outer_order
    tris = ear_clip(pts_list, order)
    return points, np.asarray(tris, dtype=np.int64)


def _prism_mesh(prim):
    verts2 = []
    cap_tris = []
    ring_ranges = []
    v2 = 0
    for profile in prim.profiles:
        pts, tris = triangulate_face(profile)
        cap_tris.append(tris + v2)
        for r in (profile.outer, *profile.holes):
            ring_ranges.append((v2, len(r)))
            v2 += len(r)
        verts2.append(pts)
    pts2 = np.concatenate(verts2, axis=0)
    n2 = len(pts2)

    local = np.zeros((2 * n2, 3))
    local[:n2, :2] = pts2
    local[:n2, 2] = prim.z0
    local[n2:, :2] = pts2
    local[n2:, 2] = prim.z1
    world = prim.to_world(local)

    tris = []
    for ct in cap_tris:
        for (a, b, c) in ct:
            tris.append((a, c, b))  # bottom cap, flipped to face -z
            tris.append((a + n2, b + n2, c + n2))  # top cap, +z
    for (start, length) in ring_ranges:
        for i in range(length):
            b0 = start + i
            b1 = start + (i + 1) % length
            tris.append((b0, b1, b1 + n2))
            tris.append((b0, b1 + n2, b0 + n2))
    return world, np.asarray(tris, dtype=np.int64)


def mesh(source) -> TriangleMesh:
    """Mesh an assembly (or a model, assembled on the fly)."""
    assembly = source if isinstance(source, SolidAssembly) else assemble(source)
    all_verts = []
    all_tris = []
    all_tags = []
    ops = []
    v0 = 0
    for prim in assembly.primitives:
        w, t = _prism_mesh(prim)
        all_verts.append(w)
        all_tris.append(t + v0)
        all_tags.append(np.full(len(t), prim.index, dtype=np.int64))
        ops.append(prim.bool_op)
        v0 += len(w)
    return TriangleMesh(
        vertices=np.concatenate(all_verts, axis=0),
        triangles=np.concatenate(all_tris, axis=0),
        tri_tags=np.concatenate(all_tags, axis=0),
        prim_ops=tuple(ops),
    )


def export_obj(m: TriangleMesh) -> str:
    """ASCII OBJ grouped per primitive; cut primitives carry a _cut suffix."""
    lines = []
    for v in m.vertices:
        lines.append("v %.6f %.6f %.6f" % (v[0], v[1], v[2]))
    for pi, op in enumerate(m.prim_ops):
        lines.append(f"o prim{pi}_{op}")
        sel = np.nonzero(m.tri_tags == pi)[0]
        for ti in sel:
            a, b, c = m.triangles[ti] + 1
            lines.append(f"f {a} {b} {c}")
    return "\n".join(lines) + "\n"
