"""Legacy ASCII VTK writer for triangulated fields."""

import numpy as np


def write_vtk(path, mesh, point_data=None, cell_data=None, title="dualhom"):
    """Write an unstructured-grid VTK file with optional scalar data blocks.

    point_data / cell_data map field names to 1D arrays over nodes/elements;
    the mesh phase tag is always included as cell data.
    """
    point_data = dict(point_data or {})
    cell_data = dict(cell_data or {})
    cell_data.setdefault("phase", mesh.elem_tag.astype(float))
    nn, ne = mesh.num_nodes, mesh.num_elements
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 2.0\n")
        fh.write(f"{title}\n")
        fh.write("ASCII\n")
        fh.write("DATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {nn} double\n")
        for x, y in mesh.nodes:
            fh.write(f"{x:.17g} {y:.17g} 0\n")
        fh.write(f"CELLS {ne} {4 * ne}\n")
        for tri in mesh.elements:
            fh.write(f"3 {tri[0]} {tri[1]} {tri[2]}\n")
        fh.write(f"CELL_TYPES {ne}\n")
        fh.write("\n".join(["5"] * ne) + "\n")
        if point_data:
            fh.write(f"POINT_DATA {nn}\n")
            for name, values in point_data.items():
                _scalar_block(fh, name, values, nn)
        fh.write(f"CELL_DATA {ne}\n")
        for name, values in cell_data.items():
            _scalar_block(fh, name, values, ne)


def _scalar_block(fh, name, values, count):
    values = np.asarray(values, dtype=float)
    if values.shape != (count,):
        raise ValueError(f"field {name!r} has shape {values.shape}, expected ({count},)")
    fh.write(f"SCALARS {name} double\n")
    fh.write("LOOKUP_TABLE default\n")
    fh.write("\n".join(f"{v:.17g}" for v in values) + "\n")
