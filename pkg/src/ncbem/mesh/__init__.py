"""Surface meshes, skeleton topology, interface detection and order elevation."""
from .elements import (DensitySpace, MeshElement, SurfaceMesh, corner_indices, element_geometry,
                       edge_reference_point, reference_nodes, shape_function_derivatives, shape_functions)
from .elevation import elevate_order
from .generators import cube_sphere, rectangle
from .interfaces import (EdgeContact, HangingVertex, InterfaceList, InterfaceRecord, contact_map,
                         detect_interfaces, naked_edges)
from .skeleton import ChargeSide, DomainSpec, RegionSpec, Skeleton, build_skeleton

__all__ = [
    "DensitySpace", "MeshElement", "SurfaceMesh", "corner_indices", "element_geometry",
    "edge_reference_point", "reference_nodes", "shape_function_derivatives", "shape_functions",
    "elevate_order", "cube_sphere", "rectangle", "EdgeContact", "HangingVertex", "InterfaceList",
    "InterfaceRecord", "contact_map", "detect_interfaces", "naked_edges", "ChargeSide", "DomainSpec",
    "RegionSpec", "Skeleton", "build_skeleton",
]
