"""Extruded solids evaluated by point membership.

Booleans are folded left-to-right over the primitive list: ``new`` starts
another body (union at membership level), ``join`` is OR, ``cut`` is
AND NOT, ``intersect`` is AND.  Mesh-level CSG is deliberately avoided;
the metrics only ever need membership queries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..cad_seq import CadModel, SePair, dequantize_coord, dequantize_dist, dequantize_scale, plane_rotation
from ..errors import DegenerateExtrusion
from .profile import Profile2D, build_profile

_MIN_SWEEP = 1e-9


def rotation_matrix(extrusion) -> np.ndarray:
    """World orientation of the sketch frame (ZYZ Euler angles)."""
    theta, phi, gamma = plane_rotation(extrusion)
    cz, sz = math.cos(phi), math.sin(phi)
    cy, sy = math.cos(theta), math.sin(theta)
    cg, sg = math.cos(gamma), math.sin(gamma)
    rz1 = np.array([[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]])
    rz2 = np.array([[cg, -sg, 0.0], [sg, cg, 0.0], [0.0, 0.0, 1.0]])
    return rz1 @ ry @ rz2


def sweep_interval(extrusion) -> tuple[float, float]:
    """Local z-range of the prism in dequantized (unscaled) units."""
    d_pos = dequantize_dist(extrusion.dist_pos)
    d_neg = dequantize_dist(extrusion.dist_neg)
    if extrusion.extent == "one":
        z0, z1 = 0.0, d_pos
    elif extrusion.extent == "sym":
        z0, z1 = -d_pos / 2.0, d_pos / 2.0
    else:  # two
        z0, z1 = -d_neg, d_pos
    lo, hi = min(z0, z1), max(z0, z1)
    if hi - lo < _MIN_SWEEP:
        raise DegenerateExtrusion(f"zero extrude distance ({extrusion.extent})")
    return lo, hi


@dataclass(frozen=True)
class Primitive:
    """One extruded prism with its placement and boolean role."""

    profiles: tuple[Profile2D, ...]
    z0: float
    z1: float
    rotation: np.ndarray
    origin: np.ndarray
    scale: float
    bool_op: str
    index: int

    def to_local(self, points: np.ndarray) -> np.ndarray:
        """World points -> unscaled sketch-frame coordinates."""
        q = (points - self.origin) @ self.rotation  # R^T via right-multiplication
        if self.scale > 0:
            q = q / self.scale
        return q

    def to_world(self, local: np.ndarray) -> np.ndarray:
        return (local * self.scale) @ self.rotation.T + self.origin

    def contains(self, points: np.ndarray) -> np.ndarray:
        if self.scale <= 0:  # zero-scale prism occupies no volume
            return np.zeros(len(points), dtype=bool)
        q = self.to_local(points)
        inside = (q[:, 2] >= self.z0) & (q[:, 2] <= self.z1)
        if not inside.any():
            return inside
        in_plane = np.zeros(len(points), dtype=bool)
        idx = np.nonzero(inside)[0]
        pts2 = q[idx, :2]
        hit = np.zeros(len(idx), dtype=bool)
        for profile in self.profiles:
            hit |= profile.contains(pts2)
        in_plane[idx] = hit
        return inside & in_plane

    def corner_points(self) -> np.ndarray:
        """World positions of every ring vertex at both caps (bbox support)."""
        rings = [self.profiles[0].outer, *self.profiles[0].holes]
        for p in self.profiles[1:]:
            rings.append(p.outer)
            rings.extend(p.holes)
        pts2 = np.concatenate(rings, axis=0)
        n = len(pts2)
        local = np.zeros((2 * n, 3))
        local[:n, :2] = pts2
        local[:n, 2] = self.z0
        local[n:, :2] = pts2
        local[n:, 2] = self.z1
        return self.to_world(local)


@dataclass(frozen=True)
class SolidAssembly:
    primitives: tuple[Primitive, ...]

    def membership(self, points: np.ndarray) -> np.ndarray:
        """Boolean membership for (N, 3) world points."""
        points = np.asarray(points, dtype=float)
        out = np.zeros(len(points), dtype=bool)
        for prim in self.primitives:
            inside = prim.contains(points)
            op = prim.bool_op
            if op in ("new", "join"):
                out |= inside
            elif op == "cut":
                out &= ~inside
            else:  # intersect
                out &= inside
        return out

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        pts = np.concatenate([p.corner_points() for p in self.primitives], axis=0)
        return pts.min(axis=0), pts.max(axis=0)


def assemble(model: CadModel) -> SolidAssembly:
    """Turn a parsed model into an evaluable solid."""
    prims = []
    for i, se in enumerate(model.ses):
        prims.append(_primitive(se, i))
    return SolidAssembly(tuple(prims))


def _primitive(se: SePair, index: int) -> Primitive:
    e = se.extrusion
    profiles = build_profile(se.sketch)
    z0, z1 = sweep_interval(e)
    origin = np.array(
        [dequantize_coord(e.origin_x), dequantize_coord(e.origin_y), dequantize_coord(e.origin_z)]
    )
    return Primitive(
        profiles=profiles,
        z0=z0,
        z1=z1,
        rotation=rotation_matrix(e),
        origin=origin,
        scale=dequantize_scale(e.scale),
        bool_op=e.bool_op,
        index=index,
    )
