"""Unstructured mesh data model and ASCII mesh file I/O.

The native format is a plain-text block format (NDIME/NELEM/NPOIN/NMARK
sections with integer element type codes); the export format is the legacy
ASCII VTK unstructured-grid format.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Element type codes used by the native mesh format. The numbering happens to
# coincide with the legacy VTK cell type ids, which keeps the writer trivial.
TYPE_CODES = {
    3: "line",
    5: "triangle",
    9: "quadrilateral",
    10: "tetrahedron",
    12: "hexahedron",
    13: "prism",
    14: "pyramid",
}
KIND_TO_CODE = {kind: code for code, kind in TYPE_CODES.items()}

VERTEX_COUNT = {
    "line": 2,
    "triangle": 3,
    "quadrilateral": 4,
    "tetrahedron": 4,
    "hexahedron": 8,
    "prism": 6,
    "pyramid": 5,
}

SURFACE_KINDS_3D = ("triangle", "quadrilateral")
VOLUME_KINDS = ("tetrahedron", "hexahedron", "prism", "pyramid")


class MeshFormatError(ValueError):
    """Raised for malformed mesh files; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Mesh:
    """Immutable unstructured mesh.

    points are stored as an (n, 3) float array (z = 0 for 2D meshes),
    elements as (kind, vertex tuple) pairs in file order, and markers as a
    mapping from marker name to a tuple of boundary faces (vertex tuples).
    """

    dim: int
    points: np.ndarray
    elements: tuple[tuple[str, tuple[int, ...]], ...]
    markers: dict[str, tuple[tuple[int, ...], ...]] = field(default_factory=dict)

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=float))
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError("points must have shape (n, 3)")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        n = len(pts)
        for kind, verts in self.elements:
            if kind not in VERTEX_COUNT:
                raise ValueError(f"unknown element kind {kind!r}")
            if len(verts) != VERTEX_COUNT[kind]:
                raise ValueError(
                    f"{kind} element has {len(verts)} vertices, "
                    f"expected {VERTEX_COUNT[kind]}"
                )
            if any(v < 0 or v >= n for v in verts):
                raise ValueError(f"element vertex index out of range (n={n})")
        for name, faces in self.markers.items():
            for verts in faces:
                if any(v < 0 or v >= n for v in verts):
                    raise ValueError(
                        f"marker {name!r} face index out of range (n={n})"
                    )

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    def with_points(self, new_points: np.ndarray) -> "Mesh":
        """New mesh with moved points; connectivity and markers are shared."""
        new_points = np.asarray(new_points, dtype=float)
        if new_points.shape != self.points.shape:
            raise ValueError("replacement point array has wrong shape")
        return Mesh(self.dim, new_points, self.elements, self.markers)

    def elements_by_kind(self) -> dict[str, np.ndarray]:
        """Group element connectivity into one (n, nv) index array per kind."""
        grouped: dict[str, list[tuple[int, ...]]] = {}
        for kind, verts in self.elements:
            grouped.setdefault(kind, []).append(verts)
        return {k: np.asarray(v, dtype=np.intp) for k, v in grouped.items()}


def extract_marker_points(mesh: Mesh, marker: str) -> tuple[np.ndarray, np.ndarray]:
    """Sorted unique point indices of a marker and their coordinates."""
    if marker not in mesh.markers:
        raise KeyError(f"unknown marker {marker!r}"
                       f" (available: {sorted(mesh.markers)})")
    idx = sorted({v for face in mesh.markers[marker] for v in face})
    indices = np.asarray(idx, dtype=np.intp)
    return indices, mesh.points[indices]


# ---------------------------------------------------------------------------
# Native format parser / writer
# ---------------------------------------------------------------------------

def _significant_lines(text: str):
    """Yield (line_number, content) pairs, skipping blanks and % comments."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("%", 1)[0].strip()
        if content:
            yield lineno, content


class _LineStream:
    def __init__(self, text: str):
        self._lines = list(_significant_lines(text))
        self._pos = 0
        self.lineno = 0

    def next(self, context: str) -> str:
        if self._pos >= len(self._lines):
            raise MeshFormatError(f"truncated file while reading {context}",
                                  self.lineno or None)
        self.lineno, content = self._lines[self._pos]
        self._pos += 1
        return content

    def exhausted(self) -> bool:
        return self._pos >= len(self._lines)


def _header_value(line: str, key: str, lineno: int) -> str:
    prefix, _, rest = line.partition("=")
    if prefix.strip() != key:
        raise MeshFormatError(f"expected '{key}=' header, got {line!r}", lineno)
    return rest.strip()


def _int_header(stream: _LineStream, key: str) -> int:
    line = stream.next(f"{key} header")
    value = _header_value(line, key, stream.lineno)
    try:
        return int(value)
    except ValueError:
        raise MeshFormatError(f"{key} value {value!r} is not an integer",
                              stream.lineno) from None


def _parse_connectivity(line: str, lineno: int, n_points: int | None):
    fields = line.split()
    try:
        code = int(fields[0])
    except (ValueError, IndexError):
        raise MeshFormatError(f"bad element line {line!r}", lineno) from None
    if code not in TYPE_CODES:
        raise MeshFormatError(f"unknown element type code {code}", lineno)
    kind = TYPE_CODES[code]
    nv = VERTEX_COUNT[kind]
    if len(fields) < 1 + nv:
        raise MeshFormatError(
            f"{kind} element needs {nv} vertex indices, got {len(fields) - 1}",
            lineno)
    try:
        verts = tuple(int(f) for f in fields[1:1 + nv])
    except ValueError:
        raise MeshFormatError(f"non-integer vertex index in {line!r}",
                              lineno) from None
    if n_points is not None:
        for v in verts:
            if v < 0 or v >= n_points:
                raise MeshFormatError(
                    f"vertex index {v} out of range (NPOIN={n_points})", lineno)
    return kind, verts


def parse_mesh(text: str) -> Mesh:
    """Parse native ASCII mesh text into a Mesh.

    Sections may appear in any order; NPOIN may come before or after NELEM
    (vertex range checks are deferred until the point count is known).
    Raises MeshFormatError with a line number on malformed input.
    """
    stream = _LineStream(text)
    dim: int | None = None
    raw_elements: list[tuple[str, tuple[int, ...], int]] = []
    points: np.ndarray | None = None
    markers: dict[str, tuple[tuple[int, ...], ...]] = {}

    def _int_value(line: str, key: str) -> int:
        value = _header_value(line, key, stream.lineno)
        try:
            return int(value)
        except ValueError:
            raise MeshFormatError(f"{key} value {value!r} is not an integer",
                                  stream.lineno) from None

    while not stream.exhausted():
        line = stream.next("section header")
        key = line.partition("=")[0].strip()
        if key == "NDIME":
            dim = _int_value(line, "NDIME")
            if dim not in (2, 3):
                raise MeshFormatError(f"NDIME must be 2 or 3, got {dim}",
                                      stream.lineno)
        elif key == "NELEM":
            n_elem = _int_value(line, "NELEM")
            for _ in range(n_elem):
                elem_line = stream.next("element connectivity")
                kind, verts = _parse_connectivity(elem_line, stream.lineno, None)
                raw_elements.append((kind, verts, stream.lineno))
        elif key == "NPOIN":
            if dim is None:
                raise MeshFormatError("NPOIN section before NDIME",
                                      stream.lineno)
            n_poin = _int_value(line, "NPOIN")
            coords = np.zeros((n_poin, 3))
            for i in range(n_poin):
                pt_line = stream.next("point coordinates")
                fields = pt_line.split()
                if len(fields) < dim:
                    raise MeshFormatError(
                        f"point line has {len(fields)} fields, expected at "
                        f"least {dim}", stream.lineno)
                try:
                    coords[i, :dim] = [float(f) for f in fields[:dim]]
                except ValueError:
                    raise MeshFormatError(
                        f"non-numeric coordinate in {pt_line!r}",
                        stream.lineno) from None
            points = coords
        elif key == "NMARK":
            n_mark = _int_value(line, "NMARK")
            for _ in range(n_mark):
                tag_line = stream.next("MARKER_TAG header")
                name = _header_value(tag_line, "MARKER_TAG", stream.lineno)
                if name in markers:
                    raise MeshFormatError(f"duplicate marker name {name!r}",
                                          stream.lineno)
                n_faces = _int_header(stream, "MARKER_ELEMS")
                faces = []
                for _ in range(n_faces):
                    face_line = stream.next(f"marker {name!r} face")
                    kind, verts = _parse_connectivity(face_line, stream.lineno,
                                                      None)
                    faces.append((kind, verts, stream.lineno))
                markers[name] = faces  # type: ignore[assignment]
        else:
            raise MeshFormatError(f"unrecognized header {line!r}",
                                  stream.lineno)

    if dim is None:
        raise MeshFormatError("missing NDIME header")
    if points is None:
        raise MeshFormatError("missing NPOIN section")

    n_points = len(points)
    elements = []
    for kind, verts, lineno in raw_elements:
        for v in verts:
            if v >= n_points:
                raise MeshFormatError(
                    f"vertex index {v} out of range (NPOIN={n_points})", lineno)
        elements.append((kind, verts))
    checked_markers: dict[str, tuple[tuple[int, ...], ...]] = {}
    for name, faces in markers.items():
        face_tuples = []
        for kind, verts, lineno in faces:  # type: ignore[misc]
            for v in verts:
                if v >= n_points:
                    raise MeshFormatError(
                        f"vertex index {v} out of range (NPOIN={n_points})",
                        lineno)
            face_tuples.append(verts)
        checked_markers[name] = tuple(face_tuples)

    return Mesh(dim, points, tuple(elements), checked_markers)


def write_mesh(mesh: Mesh) -> str:
    """Serialize a Mesh back to the native ASCII format.

    Coordinates are written with 17 significant digits so that a
    parse -> write -> parse round trip is exact.
    """
    out = [f"NDIME= {mesh.dim}"]
    out.append(f"NELEM= {mesh.n_elements}")
    for i, (kind, verts) in enumerate(mesh.elements):
        out.append(f"{KIND_TO_CODE[kind]} " + " ".join(map(str, verts)) +
                   f" {i}")
    out.append(f"NPOIN= {mesh.n_points}")
    for i, p in enumerate(mesh.points):
        coords = " ".join(f"{c:.17g}" for c in p[:mesh.dim])
        out.append(f"{coords} {i}")
    out.append(f"NMARK= {len(mesh.markers)}")
    for name, faces in mesh.markers.items():
        out.append(f"MARKER_TAG= {name}")
        out.append(f"MARKER_ELEMS= {len(faces)}")
        for verts in faces:
            kind = _face_kind(len(verts))
            out.append(f"{KIND_TO_CODE[kind]} " + " ".join(map(str, verts)))
    return "\n".join(out) + "\n"


def _face_kind(n_vertices: int) -> str:
    if n_vertices == 2:
        return "line"
    if n_vertices == 3:
        return "triangle"
    if n_vertices == 4:
        return "quadrilateral"
    raise ValueError(f"boundary face with {n_vertices} vertices not supported")


# ---------------------------------------------------------------------------
# Legacy VTK writer
# ---------------------------------------------------------------------------

def write_vtk(mesh: Mesh, point_fields: dict[str, np.ndarray] | None = None,
              title: str = "rotormesh export") -> str:
    """Write the mesh (and optional per-point fields) as legacy ASCII VTK.

    Scalar fields are (n,) arrays, vector fields (n, 3). Every field must
    have one entry per mesh point.
    """
    point_fields = point_fields or {}
    n = mesh.n_points
    for name, values in point_fields.items():
        values = np.asarray(values)
        if values.shape[0] != n:
            raise ValueError(
                f"field {name!r} has {values.shape[0]} values for {n} points")
        if values.ndim not in (1, 2) or (values.ndim == 2 and
                                         values.shape[1] != 3):
            raise ValueError(f"field {name!r} must be (n,) or (n, 3)")

    out = ["# vtk DataFile Version 3.0", title, "ASCII",
           "DATASET UNSTRUCTURED_GRID", f"POINTS {n} double"]
    for p in mesh.points:
        out.append(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}")

    total = sum(1 + VERTEX_COUNT[kind] for kind, _ in mesh.elements)
    out.append(f"CELLS {mesh.n_elements} {total}")
    for kind, verts in mesh.elements:
        out.append(f"{len(verts)} " + " ".join(map(str, verts)))
    out.append(f"CELL_TYPES {mesh.n_elements}")
    for kind, _ in mesh.elements:
        out.append(str(KIND_TO_CODE[kind]))

    if point_fields:
        out.append(f"POINT_DATA {n}")
        for name, values in point_fields.items():
            values = np.asarray(values, dtype=float)
            if values.ndim == 1:
                out.append(f"SCALARS {name} double 1")
                out.append("LOOKUP_TABLE default")
                out.extend(f"{v:.17g}" for v in values)
            else:
                out.append(f"VECTORS {name} double")
                out.extend(f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}"
                           for v in values)
    return "\n".join(out) + "\n"
