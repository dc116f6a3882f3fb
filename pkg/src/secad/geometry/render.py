"""Deterministic flat-shaded software rasterizer for mesh previews."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInput, ZeroAreaViewport
from .mesh import TriangleMesh

SOLID_COLOR = (86, 118, 196)
CUT_COLOR = (204, 94, 86)
CUT_ALPHA = 0.45


@dataclass(frozen=True)
class CameraConfig:
    """Orthographic camera; defaults give the fixed isometric view."""

    width: int = 256
    height: int = 256
    azimuth_deg: float = 45.0
    elevation_deg: float = 35.2643896828  # atan(1/sqrt(2))
    clear_color: tuple[int, int, int] = (242, 242, 242)
    margin: float = 0.1


@dataclass(frozen=True)
class Image:
    pixels: np.ndarray  # (H, W, 3) uint8

    def to_png(self) -> bytes:
        from PIL import Image as PILImage

        buf = io.BytesIO()
        PILImage.fromarray(self.pixels, mode="RGB").save(buf, format="PNG")
        return buf.getvalue()

    def foreground_count(self, clear_color) -> int:
        bg = np.asarray(clear_color, dtype=np.uint8)
        return int(np.any(self.pixels != bg, axis=2).sum())


def _view_basis(camera: CameraConfig):
    az = math.radians(camera.azimuth_deg)
    el = math.radians(camera.elevation_deg)
    forward = np.array([-math.cos(el) * math.cos(az), -math.cos(el) * math.sin(az), -math.sin(el)])
    right = np.array([-math.sin(az), math.cos(az), 0.0])
    up = np.cross(right, forward)
    return right, up, forward


def render_preview(mesh: TriangleMesh, camera: CameraConfig | None = None) -> Image:
    """Raster the mesh with the fixed light; same input, same pixels.

    Solid primitives are z-buffered; cut primitives are alpha-blended on
    top so subtractions stay readable without real CSG.
    """
    camera = camera or CameraConfig()
    if camera.width <= 0 or camera.height <= 0:
        raise ZeroAreaViewport(f"viewport {camera.width}x{camera.height}")
    if len(mesh.triangles) == 0:
        raise InvalidInput("cannot render an empty mesh")

    right, up, forward = _view_basis(camera)
    basis = np.stack([right, up, forward], axis=1)
    view = mesh.vertices @ basis  # columns: screen-x, screen-y, depth

    # fit bbox into the viewport (translation/scale invariant framing)
    lo = view[:, :2].min(axis=0)
    hi = view[:, :2].max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-12))
    usable = (1.0 - 2.0 * camera.margin) * min(camera.width, camera.height)
    scale = usable / span
    center = (lo + hi) / 2.0
    sx = (view[:, 0] - center[0]) * scale + camera.width / 2.0
    sy = camera.height / 2.0 - (view[:, 1] - center[1]) * scale
    depth = view[:, 2]

    img = np.empty((camera.height, camera.width, 3), dtype=np.float64)
    img[:, :] = camera.clear_color
    zbuf = np.full((camera.height, camera.width), -np.inf)

    light = np.array([0.5, 0.35, 0.79])
    light = light / np.linalg.norm(light)

    order = [ti for ti in range(len(mesh.triangles)) if mesh.prim_ops[mesh.tri_tags[ti]] != "cut"]
    cut_order = [ti for ti in range(len(mesh.triangles)) if mesh.prim_ops[mesh.tri_tags[ti]] == "cut"]

    def shade(ti, base):
        a, b, c = mesh.triangles[ti]
        n = np.cross(mesh.vertices[b] - mesh.vertices[a], mesh.vertices[c] - mesh.vertices[a])
        nn = np.linalg.norm(n)
        if nn < 1e-15:
            return None
        lam = abs(float(n @ light)) / nn
        return np.asarray(base, dtype=float) * (0.35 + 0.65 * lam)

    def raster(ti, color, blend):
        a, b, c = mesh.triangles[ti]
        xs = np.array([sx[a], sx[b], sx[c]])
        ys = np.array([sy[a], sy[b], sy[c]])
        zs = np.array([depth[a], depth[b], depth[c]])
        x0 = max(int(math.floor(xs.min())), 0)
        x1 = min(int(math.ceil(xs.max())), camera.width - 1)
        y0 = max(int(math.floor(ys.min())), 0)
        y1 = min(int(math.ceil(ys.max())), camera.height - 1)
        if x1 < x0 or y1 < y0:
            return
        px, py = np.meshgrid(np.arange(x0, x1 + 1) + 0.5, np.arange(y0, y1 + 1) + 0.5)
        d = (ys[1] - ys[2]) * (xs[0] - xs[2]) + (xs[2] - xs[1]) * (ys[0] - ys[2])
        if abs(d) < 1e-12:
            return
        w0 = ((ys[1] - ys[2]) * (px - xs[2]) + (xs[2] - xs[1]) * (py - ys[2])) / d
        w1 = ((ys[2] - ys[0]) * (px - xs[2]) + (xs[0] - xs[2]) * (py - ys[2])) / d
        w2 = 1.0 - w0 - w1
        inside = (w0 >= 0) & (w1 >= 0) & (w2 >= 0)
        if not inside.any():
            return
        z = w0 * zs[0] + w1 * zs[1] + w2 * zs[2]
        zslice = zbuf[y0:y1 + 1, x0:x1 + 1]
        win = inside & (z > zslice)
        if not win.any():
            return
        if blend:
            tile = img[y0:y1 + 1, x0:x1 + 1]
            tile[win] = tile[win] * (1.0 - CUT_ALPHA) + color * CUT_ALPHA
        else:
            img[y0:y1 + 1, x0:x1 + 1][win] = color
            zslice[win] = z[win]

    for ti in order:
        color = shade(ti, SOLID_COLOR)
        if color is not None:
            raster(ti, color, blend=False)
    for ti in cut_order:
        color = shade(ti, CUT_COLOR)
        if color is not None:
            raster(ti, color, blend=True)

    return Image(pixels=np.clip(np.rint(img), 0, 255).astype(np.uint8))
