"""Legacy ASCII VTK output for meshes and solution snapshots."""

import numpy as np

_HEADER = "# vtk DataFile Version 3.0"


def _write_grid(f, mesh, title):
    f.write(f"{_HEADER}\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
    f.write(f"POINTS {mesh.num_nodes} double\n")
    for x, y in mesh.nodes:
        f.write(f"{x:.17g} {y:.17g} 0\n")
    m = mesh.num_elements
    f.write(f"CELLS {m} {4 * m}\n")
    for a, b, c in mesh.elements:
        f.write(f"3 {a} {b} {c}\n")
    f.write(f"CELL_TYPES {m}\n")
    f.write("5\n" * m)


def write_vtk_mesh(mesh, path, title="mesh"):
    """Write a mesh as a legacy ASCII unstructured grid (triangle cells)."""
    with open(path, "w", encoding="ascii", newline="\n") as f:
        _write_grid(f, mesh, title)


def write_vtk_snapshot(state, mesh, path, title="snapshot"):
    """Write a solution snapshot with point scalars p, n and phi."""
    for name in ("p", "n", "phi"):
        field = getattr(state, name)
        if len(field) != mesh.num_nodes:
            raise ValueError(f"field {name} does not match the mesh")
    with open(path, "w", encoding="ascii", newline="\n") as f:
        _write_grid(f, mesh, f"{title} t={state.t:.17g}")
        f.write(f"POINT_DATA {mesh.num_nodes}\n")
        for name in ("p", "n", "phi"):
            f.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for v in getattr(state, name):
                f.write(f"{v:.17g}\n")


def read_vtk_point_data(path):
    """Parse points and point scalars back from a legacy ASCII file.

    Returns (points, cells, {name: values}); intended for round-trip checks.
    """
    with open(path, "r", encoding="ascii") as f:
        tokens = f.read().split()
    idx = tokens.index("POINTS")
    npts = int(tokens[idx + 1])
    coords = np.array(tokens[idx + 3: idx + 3 + 3 * npts], dtype=float)
    points = coords.reshape(npts, 3)[:, :2]
    idx = tokens.index("CELLS")
    ncells = int(tokens[idx + 1])
    raw = np.array(tokens[idx + 3: idx + 3 + 4 * ncells], dtype=int)
    cells = raw.reshape(ncells, 4)[:, 1:]
    scalars = {}
    pos = 0
    while True:
        try:
            pos = tokens.index("SCALARS", pos) + 1
        except ValueError:
            break
        name = tokens[pos]
        start = tokens.index("default", pos) + 1
        scalars[name] = np.array(tokens[start: start + npts], dtype=float)
        pos = start
    return points, cells, scalars
