"""Readers and writers: XYZ / PLY point clouds, OBJ / PLY triangle meshes.

XYZ is whitespace-separated ``x y z`` or ``x y z nx ny nz`` per line with
``#`` comments. PLY supports ascii and binary_little_endian with float or
double vertex properties; unknown properties are skipped.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .cloud import PointCloud
from .errors import InputError

_PLY_TYPES = {
    "char": ("b", 1), "int8": ("b", 1),
    "uchar": ("B", 1), "uint8": ("B", 1),
    "short": ("h", 2), "int16": ("h", 2),
    "ushort": ("H", 2), "uint16": ("H", 2),
    "int": ("i", 4), "int32": ("i", 4),
    "uint": ("I", 4), "uint32": ("I", 4),
    "float": ("f", 4), "float32": ("f", 4),
    "double": ("d", 8), "float64": ("d", 8),
}


def _normalize_rows(v):
    n = np.linalg.norm(v, axis=1, keepdims=True)
    n[n == 0] = 1.0
    return v / n


# ---------------------------------------------------------------------------
# point clouds

def read_xyz(path) -> PointCloud:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) not in (3, 6):
                raise InputError(
                    f"{path}:{lineno}: expected 3 or 6 values, got {len(parts)}"
                )
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise InputError(f"{path}: no points")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise InputError(f"{path}: inconsistent column count")
    arr = np.asarray(rows, dtype=np.float64)
    if width == 6:
        return PointCloud(arr[:, :3], _normalize_rows(arr[:, 3:]))
    return PointCloud(arr)


def write_xyz(path, cloud: PointCloud) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if cloud.has_normals:
            for p, n in zip(cloud.points, cloud.normals):
                fh.write(f"{p[0]!r} {p[1]!r} {p[2]!r} {n[0]!r} {n[1]!r} {n[2]!r}\n")
        else:
            for p in cloud.points:
                fh.write(f"{p[0]!r} {p[1]!r} {p[2]!r}\n")


def _parse_ply_header(fh):
    magic = fh.readline().strip()
    if magic != b"ply":
        raise InputError("not a PLY file")
    fmt = None
    elements = []  # (name, count, [(prop_name, type_str)])
    while True:
        line = fh.readline()
        if not line:
            raise InputError("PLY header truncated")
        tokens = line.decode("ascii", "replace").strip().split()
        if not tokens or tokens[0] == "comment":
            continue
        if tokens[0] == "format":
            fmt = tokens[1]
        elif tokens[0] == "element":
            elements.append((tokens[1], int(tokens[2]), []))
        elif tokens[0] == "property":
            if not elements:
                raise InputError("PLY property before element")
            if tokens[1] == "list":
                elements[-1][2].append((tokens[4], ("list", tokens[2], tokens[3])))
            else:
                elements[-1][2].append((tokens[2], tokens[1]))
        elif tokens[0] == "end_header":
            break
    if fmt not in ("ascii", "binary_little_endian"):
        raise InputError(f"unsupported PLY format {fmt!r}")
    return fmt, elements


def _read_ply_elements(path):
    with open(path, "rb") as fh:
        fmt, elements = _parse_ply_header(fh)
        data = {}
        for name, count, props in elements:
            if fmt == "ascii":
                rows = []
                for _ in range(count):
                    rows.append(fh.readline().split())
                data[name] = (props, rows)
            else:
                rows = []
                for _ in range(count):
                    row = []
                    for _, ptype in props:
                        if isinstance(ptype, tuple):
                            _, count_t, item_t = ptype
                            cfmt, csz = _PLY_TYPES[count_t]
                            ifmt, isz = _PLY_TYPES[item_t]
                            (m,) = struct.unpack("<" + cfmt, fh.read(csz))
                            row.append(
                                list(struct.unpack("<" + ifmt * m, fh.read(isz * m)))
                            )
                        else:
                            pfmt, psz = _PLY_TYPES[ptype]
                            (v,) = struct.unpack("<" + pfmt, fh.read(psz))
                            row.append(v)
                    rows.append(row)
                data[name] = (props, rows)
        return fmt, data


def _ply_vertex_columns(props, rows, fmt):
    names = [p[0] for p in props]
    for needed in ("x", "y", "z"):
        if needed not in names:
            raise InputError(f"PLY vertex element lacks property {needed!r}")
    cols = {}
    for want in ("x", "y", "z", "nx", "ny", "nz"):
        if want not in names:
            continue
        j = names.index(want)
        if fmt == "ascii":
            cols[want] = np.array([float(r[j]) for r in rows], dtype=np.float64)
        else:
            cols[want] = np.array([r[j] for r in rows], dtype=np.float64)
    return cols


def read_ply_cloud(path) -> PointCloud:
    fmt, data = _read_ply_elements(path)
    if "vertex" not in data:
        raise InputError(f"{path}: PLY has no vertex element")
    props, rows = data["vertex"]
    cols = _ply_vertex_columns(props, rows, fmt)
    pts = np.column_stack([cols["x"], cols["y"], cols["z"]])
    if all(k in cols for k in ("nx", "ny", "nz")):
        normals = np.column_stack([cols["nx"], cols["ny"], cols["nz"]])
        return PointCloud(pts, _normalize_rows(normals))
    return PointCloud(pts)


def write_ply_cloud(path, cloud: PointCloud, binary: bool = False,
                    scalars=None, scalar_name: str = "quality") -> None:
    """Write a point cloud, optionally with one per-vertex scalar column."""
    n = len(cloud)
    header = ["ply"]
    header.append(
        "format binary_little_endian 1.0" if binary else "format ascii 1.0"
    )
    header.append(f"element vertex {n}")
    header += ["property double x", "property double y", "property double z"]
    if cloud.has_normals:
        header += ["property double nx", "property double ny", "property double nz"]
    if scalars is not None:
        header.append(f"property double {scalar_name}")
    header.append("end_header")

    columns = [cloud.points]
    if cloud.has_normals:
        columns.append(cloud.normals)
    if scalars is not None:
        columns.append(np.asarray(scalars, dtype=np.float64).reshape(n, 1))
    table = np.hstack(columns)

    if binary:
        with open(path, "wb") as fh:
            fh.write(("\n".join(header) + "\n").encode("ascii"))
            fh.write(np.ascontiguousarray(table, dtype="<f8").tobytes())
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(header) + "\n")
            for row in table:
                fh.write(" ".join(repr(v) for v in row) + "\n")


def read_cloud(path) -> PointCloud:
    """Dispatch on extension: .xyz / .txt are text, .ply is PLY."""
    suffix = Path(path).suffix.lower()
    if suffix == ".ply":
        return read_ply_cloud(path)
    return read_xyz(path)


def write_cloud(path, cloud: PointCloud, binary: bool = False) -> None:
    suffix = Path(path).suffix.lower()
    if suffix == ".ply":
        write_ply_cloud(path, cloud, binary=binary)
    else:
        write_xyz(path, cloud)


# ---------------------------------------------------------------------------
# triangle meshes

def write_obj(path, vertices, faces) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in vertices:
            fh.write(f"v {v[0]!r} {v[1]!r} {v[2]!r}\n")
        for f in faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


def read_obj(path):
    verts, faces = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(tok.split("/")[0]) - 1 for tok in parts[1:]]
                for j in range(1, len(idx) - 1):
                    faces.append([idx[0], idx[j], idx[j + 1]])
    if not verts:
        raise InputError(f"{path}: no vertices")
    return (
        np.asarray(verts, dtype=np.float64),
        np.asarray(faces, dtype=np.int64).reshape(-1, 3),
    )


def write_ply_mesh(path, vertices, faces, binary: bool = False) -> None:
    nv, nf = len(vertices), len(faces)
    header = ["ply"]
    header.append(
        "format binary_little_endian 1.0" if binary else "format ascii 1.0"
    )
    header += [
        f"element vertex {nv}",
        "property double x", "property double y", "property double z",
        f"element face {nf}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    if binary:
        with open(path, "wb") as fh:
            fh.write(("\n".join(header) + "\n").encode("ascii"))
            fh.write(np.ascontiguousarray(vertices, dtype="<f8").tobytes())
            body = bytearray()
            for f in faces:
                body += struct.pack("<Biii", 3, int(f[0]), int(f[1]), int(f[2]))
            fh.write(bytes(body))
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(header) + "\n")
            for v in vertices:
                fh.write(f"{v[0]!r} {v[1]!r} {v[2]!r}\n")
            for f in faces:
                fh.write(f"3 {f[0]} {f[1]} {f[2]}\n")


def read_ply_mesh(path):
    fmt, data = _read_ply_elements(path)
    if "vertex" not in data:
        raise InputError(f"{path}: PLY has no vertex element")
    props, rows = data["vertex"]
    cols = _ply_vertex_columns(props, rows, fmt)
    verts = np.column_stack([cols["x"], cols["y"], cols["z"]])
    faces = []
    if "face" in data:
        fprops, frows = data["face"]
        names = [p[0] for p in fprops]
        j = None
        for cand in ("vertex_indices", "vertex_index"):
            if cand in names:
                j = names.index(cand)
        if j is None:
            raise InputError(f"{path}: face element lacks vertex index list")
        for r in frows:
            if fmt == "ascii":
                m = int(r[0])
                idx = [int(t) for t in r[1 : 1 + m]]
            else:
                idx = [int(t) for t in r[j]]
            for t in range(1, len(idx) - 1):
                faces.append([idx[0], idx[t], idx[t + 1]])
    return verts, np.asarray(faces, dtype=np.int64).reshape(-1, 3)


def read_mesh(path):
    suffix = Path(path).suffix.lower()
    if suffix == ".ply":
        return read_ply_mesh(path)
    if suffix == ".obj":
        return read_obj(path)
    raise InputError(f"unsupported mesh format {suffix!r}")


def write_mesh(path, vertices, faces, binary: bool = False) -> None:
    suffix = Path(path).suffix.lower()
    if suffix == ".ply":
        write_ply_mesh(path, vertices, faces, binary=binary)
    elif suffix == ".obj":
        write_obj(path, vertices, faces)
    else:
        raise InputError(f"unsupported mesh format {suffix!r}")
