"""Surface point-cloud sampling over membership solids.

Candidates are jittered grid points; a candidate is kept when membership
flips between the two probes one band-width apart along some axis, i.e.
the point sits within the surface band.  The kept pool is thinned to the
requested size by farthest-point subsampling, then normalized so the
longest bounding-box axis spans exactly [-0.5, 0.5].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptySolid
from .solid import SolidAssembly

DEFAULT_POINTS = 2000
DEFAULT_GRID = 32
SURFACE_BAND = 0.01  # fraction of the longest bbox extent


@dataclass(frozen=True)
class PointCloud:
    """Normalized surface samples plus the transform back to world units."""

    points: np.ndarray  # (n, 3), longest axis spans [-0.5, 0.5]
    seed: int
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    extent: float = 1.0

    def __len__(self):
        return len(self.points)

    def to_world(self) -> np.ndarray:
        return self.points * self.extent + self.center


def _occupancy_grid(assembly: SolidAssembly, lo, hi, grid):
    axes = [np.linspace(lo[k], hi[k], grid + 1) for k in range(3)]
    centers = [0.5 * (ax[:-1] + ax[1:]) for ax in axes]
    gx, gy, gz = np.meshgrid(*centers, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
    occ = assembly.membership(pts).reshape(grid, grid, grid)
    return occ, centers


def _surface_cells(occ):
    """Cells adjacent to a membership flip, including against the outside."""
    padded = np.pad(occ, 1, constant_values=False)
    surf = np.zeros_like(occ)
    for axis in range(3):
        diff = np.diff(padded, axis=axis).astype(bool)
        lo = [slice(1, -1)] * 3
        hi = [slice(1, -1)] * 3
        lo[axis] = slice(0, -1)
        hi[axis] = slice(1, None)
        surf |= diff[tuple(lo)] | diff[tuple(hi)]
    return np.argwhere(surf)


def _band_points(assembly, cells, cell_lo, cell_size, tau, per_cell, rng):
    n_cells = len(cells)
    base = cell_lo + cells * cell_size
    pts = base[:, None, :] + rng.random((n_cells, per_cell, 3)) * cell_size
    pts = pts.reshape(-1, 3)
    keep = np.zeros(len(pts), dtype=bool)
    for axis in range(3):
        offset = np.zeros(3)
        offset[axis] = tau
        hi = assembly.membership(pts + offset)
        lo = assembly.membership(pts - offset)
        keep |= hi != lo
    return pts[keep]


def has_material(assembly: SolidAssembly, grid: int = 16) -> bool:
    """Coarse occupancy probe: any membership hit on a bbox grid."""
    lo, hi = assembly.bbox()
    if float((hi - lo).max()) <= 0:
        return False
    occ, _ = _occupancy_grid(assembly, lo, hi, grid)
    return bool(occ.any())


def farthest_point_subsample(points: np.ndarray, n: int, start: int = 0) -> np.ndarray:
    chosen = np.empty(n, dtype=np.int64)
    chosen[0] = start
    dist = np.sum((points - points[start]) ** 2, axis=1)
    for i in range(1, n):
        idx = int(np.argmax(dist))
        chosen[i] = idx
        d = np.sum((points - points[idx]) ** 2, axis=1)
        np.minimum(dist, d, out=dist)
    return points[chosen]


def sample_point_cloud(
    assembly: SolidAssembly,
    n: int = DEFAULT_POINTS,
    seed: int = 0,
    grid: int = DEFAULT_GRID,
    band: float = SURFACE_BAND,
    max_rounds: int = 6,
) -> PointCloud:
    """Deterministic surface sampling; same (assembly, seed) -> same cloud."""
    lo, hi = assembly.bbox()
    span = hi - lo
    longest = float(span.max())
    if longest <= 0:
        raise EmptySolid("assembly bounding box has no extent")
    tau = band * longest
    # pad so boundary probes stay representable
    lo = lo - 2 * tau
    hi = hi + 2 * tau

    occ, _ = _occupancy_grid(assembly, lo, hi, grid)
    if not occ.any():
        raise EmptySolid("all membership probes are false")
    cells = _surface_cells(occ)
    cell_size = (hi - lo) / grid

    rng = np.random.default_rng(seed)
    target_pool = max(4 * n, n + 1000)
    pool = []
    got = 0
    per_cell = max(2, int(np.ceil(target_pool / max(1, len(cells)) )))
    for _ in range(max_rounds):
        pts = _band_points(assembly, cells, lo, cell_size, tau, per_cell, rng)
        if len(pts):
            pool.append(pts)
            got += len(pts)
        if got >= target_pool:
            break
        per_cell *= 2
    if not pool:
        raise EmptySolid("surface band produced no samples")
    pts = np.concatenate(pool, axis=0)
    if len(pts) > target_pool:
        sel = rng.choice(len(pts), size=target_pool, replace=False)
        pts = pts[np.sort(sel)]
    if len(pts) >= n:
        pts = farthest_point_subsample(pts, n)
    else:
        sel = rng.choice(len(pts), size=n, replace=True)
        pts = pts[sel]

    # normalize: exact [-0.5, 0.5] span on the longest axis
    pmin = pts.min(axis=0)
    pmax = pts.max(axis=0)
    ext = float((pmax - pmin).max())
    if ext <= 0:
        raise EmptySolid("degenerate point cloud")
    unit = (pts - pmin) / ext
    offsets = (pmax - pmin) / ext / 2.0
    normalized = unit - offsets
    center = pmin + (pmax - pmin) / 2.0
    return PointCloud(points=normalized, seed=seed, center=center, extent=ext)


def export_xyz(cloud: PointCloud) -> str:
    lines = ["%.6f %.6f %.6f" % (p[0], p[1], p[2]) for p in cloud.points]
    return "\n".join(lines) + "\n"
