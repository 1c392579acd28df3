"""Configuration, orchestration, export and the command line interface."""
from .config import ProblemConfig, load_config
from .meshio import dumps_mesh, mesh_from_dict, mesh_to_dict, read_mesh, write_mesh
from .runner import RunReport, build_meshes, run, write_traces_csv
from .vtk import ExportError, write_grid_vtk, write_surface_vtk

__all__ = ["ProblemConfig", "load_config", "dumps_mesh", "mesh_from_dict", "mesh_to_dict", "read_mesh",
           "write_mesh", "RunReport", "build_meshes", "run", "write_traces_csv", "ExportError", "write_grid_vtk",
           "write_surface_vtk"]
