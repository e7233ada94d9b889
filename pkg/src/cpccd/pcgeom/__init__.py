"""Point cloud types and geometric kernels."""
from cpccd.pcgeom.cloud import ADDED, OBJECT, Aabb, PointCloud, aabb, require_nonempty
from cpccd.pcgeom.io import read_cloud, read_ply, read_xyz, write_cloud, write_ply, write_xyz
from cpccd.pcgeom.nn import NnIndex, mean_nn_spacing, nn_query
from cpccd.pcgeom.ops import farthest_point_sample, project_to_plane, rotate, rotation_matrix, scale
from cpccd.pcgeom.primitives import PRIMITIVES, PrimitiveKind, sample_primitive
from cpccd.pcgeom.rng import RngStream

__all__ = [
    "ADDED", "OBJECT", "Aabb", "PointCloud", "aabb", "require_nonempty",
    "read_cloud", "read_ply", "read_xyz", "write_cloud", "write_ply", "write_xyz",
    "NnIndex", "mean_nn_spacing", "nn_query",
    "farthest_point_sample", "project_to_plane", "rotate", "rotation_matrix", "scale",
    "PRIMITIVES", "PrimitiveKind", "sample_primitive", "RngStream",
]
