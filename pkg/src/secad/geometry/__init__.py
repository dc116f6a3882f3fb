"""Geometry kernel: profiles, solids, point clouds, meshes, raster previews."""

from .mesh import TriangleMesh, export_obj, mesh
from .profile import Profile2D, build_profile
from .render import CameraConfig, Image, render_preview
from .sampling import PointCloud, export_xyz, sample_point_cloud
from .solid import SolidAssembly, assemble

__all__ = [
    "Profile2D",
    "build_profile",
    "SolidAssembly",
    "assemble",
    "PointCloud",
    "sample_point_cloud",
    "export_xyz",
    "TriangleMesh",
    "mesh",
    "export_obj",
    "CameraConfig",
    "Image",
    "render_preview",
]
