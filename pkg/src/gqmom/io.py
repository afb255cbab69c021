"""Analysis-ready output files: headered CSV and VTK legacy grids.

CSV files carry '#'-prefixed header lines (the full run configuration as
one JSON object, then the column list), followed by comma-separated rows
printed with 17 significant digits so reruns diff exactly.  The bundled
reader inverts the writer without loss.
"""

import json

import numpy as np

FLOAT_FMT = "%.17g"


def write_csv(path, columns, config=None):
    """Write named columns (equal-length 1-D arrays) with a config header."""
    names = list(columns.keys())
    arrays = [np.asarray(columns[k], dtype=float) for k in names]
    n = len(arrays[0])
    for name, arr in zip(names, arrays):
        if len(arr) != n:
            raise ValueError(f"column {name!r} has length {len(arr)} != {n}")
    with open(path, "w") as fp:
        if config is not None:
            fp.write("# config " + json.dumps(config, sort_keys=True) + "\n")
        fp.write("# columns " + ",".join(names) + "\n")
        for i in range(n):
            fp.write(",".join(FLOAT_FMT % arr[i] for arr in arrays) + "\n")


def read_csv(path):
    """Read a file written by write_csv: (columns dict, config dict|None)."""
    config = None
    names = None
    rows = []
    with open(path) as fp:
        for line in fp:
            line = line.rstrip("\n")
            if line.startswith("# config "):
                config = json.loads(line[len("# config "):])
            elif line.startswith("# columns "):
                names = line[len("# columns "):].split(",")
            elif line and not line.startswith("#"):
                rows.append([float(tok) for tok in line.split(",")])
    if names is None:
        raise ValueError(f"{path}: missing '# columns' header")
    data = np.array(rows) if rows else np.zeros((0, len(names)))
    return {name: data[:, k] for k, name in enumerate(names)}, config


def write_vtk_structured_points(path, fields, origin, spacing, title="gqmom"):
    """VTK legacy ASCII STRUCTURED_POINTS file with 2-D scalar fields.

    Layout (one point per cell center, z collapsed):
        # vtk DataFile Version 3.0 / title / ASCII
        DATASET STRUCTURED_POINTS
        DIMENSIONS nx ny 1
        ORIGIN x0 y0 0 / SPACING dx dy 1
        POINT_DATA nx*ny
        then per field: SCALARS <name> double 1 + LOOKUP_TABLE default
        and nx*ny ascii values in x-fastest order.
    """
    names = list(fields.keys())
    first = np.asarray(fields[names[0]])
    nx, ny = first.shape
    with open(path, "w") as fp:
        fp.write("# vtk DataFile Version 3.0\n")
        fp.write(title + "\n")
        fp.write("ASCII\n")
        fp.write("DATASET STRUCTURED_POINTS\n")
        fp.write(f"DIMENSIONS {nx} {ny} 1\n")
        fp.write(f"ORIGIN {FLOAT_FMT % origin[0]} {FLOAT_FMT % origin[1]} 0\n")
        fp.write(f"SPACING {FLOAT_FMT % spacing[0]} {FLOAT_FMT % spacing[1]} 1\n")
        fp.write(f"POINT_DATA {nx * ny}\n")
        for name in names:
            arr = np.asarray(fields[name], dtype=float)
            if arr.shape != (nx, ny):
                raise ValueError(f"field {name!r} shape {arr.shape} != {(nx, ny)}")
            fp.write(f"SCALARS {name} double 1\n")
            fp.write("LOOKUP_TABLE default\n")
            # VTK expects x varying fastest.
            flat = arr.T.ravel()
            for k in range(0, len(flat), 6):
                fp.write(" ".join(FLOAT_FMT % v for v in flat[k:k + 6]) + "\n")


def read_vtk_structured_points(path):
    """Invert write_vtk_structured_points: (fields dict, origin, spacing)."""
    fields = {}
    origin = spacing = None
    nx = ny = None
    name = None
    values = []
    with open(path) as fp:
        for line in fp:
            tok = line.split()
            if not tok:
                continue
            if tok[0] == "DIMENSIONS":
                nx, ny = int(tok[1]), int(tok[2])
            elif tok[0] == "ORIGIN":
                origin = (float(tok[1]), float(tok[2]))
            elif tok[0] == "SPACING":
                spacing = (float(tok[1]), float(tok[2]))
            elif tok[0] == "SCALARS":
                if name is not None:
                    fields[name] = np.array(values).reshape(ny, nx).T
                name = tok[1]
                values = []
            elif tok[0] in ("LOOKUP_TABLE", "POINT_DATA", "DATASET", "ASCII",
                            "BINARY") or tok[0].startswith("#"):
                continue
            elif name is not None:
                values.extend(float(v) for v in tok)
    if name is not None:
        fields[name] = np.array(values).reshape(ny, nx).T
    return fields, origin, spacing
