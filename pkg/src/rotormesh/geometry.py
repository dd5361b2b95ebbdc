"""Cell and face geometry plus mesh quality metrics.

Volumes and centroids of general polyhedra come from a tetrahedral fan
decomposition about the cell vertex mean; tetrahedra use the direct
determinant formula. Possibly non-planar quad faces are split along the
diagonal through their lowest-numbered vertex, which makes the split (and
hence areas and normals) identical when a face is visited from either of
its two cells.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh

# Outward-oriented local faces for positively ordered cells.
CELL_FACES_3D = {
    "tetrahedron": ((0, 2, 1), (0, 1, 3), (1, 2, 3), (0, 3, 2)),
    "hexahedron": ((0, 3, 2, 1), (4, 5, 6, 7), (0, 1, 5, 4),
                   (1, 2, 6, 5), (2, 3, 7, 6), (3, 0, 4, 7)),
    "prism": ((0, 2, 1), (3, 4, 5), (0, 1, 4, 3), (1, 2, 5, 4), (2, 0, 3, 5)),
    "pyramid": ((0, 3, 2, 1), (0, 1, 4), (1, 2, 4), (2, 3, 4), (3, 0, 4)),
}
CELL_EDGES_2D = {
    "triangle": ((0, 1), (1, 2), (2, 0)),
    "quadrilateral": ((0, 1), (1, 2), (2, 3), (3, 0)),
}


@dataclass(frozen=True)
class MeshGeometry:
    """Per-cell and per-unique-face geometric data.

    Face normals are unit vectors oriented out of the owner cell; neighbor
    is -1 for boundary faces. Cell volumes are signed (negative = inverted
    cell), face areas are non-negative.
    """

    volumes: np.ndarray        # (ncell,)
    centroids: np.ndarray      # (ncell, 3)
    face_vertices: list[tuple[int, ...]]
    face_owner: np.ndarray     # (nface,)
    face_neighbor: np.ndarray  # (nface,), -1 on the boundary
    face_areas: np.ndarray     # (nface,)
    face_normals: np.ndarray   # (nface, 3)
    face_centroids: np.ndarray  # (nface, 3)

    @property
    def n_cells(self) -> int:
        return len(self.volumes)

    @property
    def interior(self) -> np.ndarray:
        return self.face_neighbor >= 0


@dataclass(frozen=True)
class QualityReport:
    """Orthogonality and volume quality summary of a mesh."""

    min_orthogonality_deg: float
    per_cell_deg: np.ndarray
    negative_volume_count: int
    min_volume: float


def _roll_to_min(idx: np.ndarray) -> np.ndarray:
    """Cyclically roll each row of a (n, 4) index array so the smallest
    global vertex index comes first."""
    shift = np.argmin(idx, axis=1)
    offsets = (shift[:, None] + np.arange(idx.shape[1])[None, :]) % idx.shape[1]
    return np.take_along_axis(idx, offsets, axis=1)


def _face_triangles(points: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Triangle vertex coordinates for a batch of equal-size faces.

    Returns (nface, ntri, 3, 3). Quads are split along the diagonal through
    their lowest-numbered vertex; triangles pass through unchanged.
    """
    nv = idx.shape[1]
    if nv == 3:
        return points[idx][:, None, :, :]
    if nv == 4:
        rolled = _roll_to_min(idx)
        coords = points[rolled]
        return np.stack([coords[:, (0, 1, 2)], coords[:, (0, 2, 3)]], axis=1)
    raise ValueError(f"unsupported face size {nv}")


def faces_area_normal_centroid(points: np.ndarray, idx: np.ndarray):
    """Area, unit normal, and centroid for a batch of 3-or-4 vertex faces.

    The unit normal of a quad is the normalized average of its two triangle
    unit normals; the area is the sum of the triangle areas.
    """
    tris = _face_triangles(points, idx)
    a, b, c = tris[:, :, 0], tris[:, :, 1], tris[:, :, 2]
    cross = np.cross(b - a, c - a)
    tri_area = 0.5 * np.linalg.norm(cross, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        tri_unit = np.where(tri_area[..., None] > 0.0,
                            0.5 * cross / tri_area[..., None], 0.0)
    area = tri_area.sum(axis=1)
    normal_sum = tri_unit.sum(axis=1)
    nn = np.linalg.norm(normal_sum, axis=-1, keepdims=True)
    normal = np.where(nn > 0.0, normal_sum / np.where(nn > 0.0, nn, 1.0), 0.0)
    tri_centroid = tris.mean(axis=2)
    denom = np.where(area > 0.0, area, 1.0)[:, None]
    centroid = np.where(area[:, None] > 0.0,
                        (tri_centroid * tri_area[..., None]).sum(axis=1) / denom,
                        tris.reshape(len(idx), -1, 3).mean(axis=1))
    return area, normal, centroid


def face_area_normal_centroid(points: np.ndarray, vertices):
    """Scalar convenience wrapper around faces_area_normal_centroid."""
    idx = np.asarray([vertices], dtype=np.intp)
    area, normal, centroid = faces_area_normal_centroid(points, idx)
    return area[0], normal[0], centroid[0]


def _tet_volumes_centroids(points: np.ndarray, conn: np.ndarray):
    a, b, c, d = (points[conn[:, i]] for i in range(4))
    vol = np.einsum("ij,ij->i", b - a, np.cross(c - a, d - a)) / 6.0
    cent = (a + b + c + d) / 4.0
    return vol, cent


def _fan_volumes_centroids(points: np.ndarray, conn: np.ndarray, kind: str):
    """Signed volume and centroid via tet fans about the cell vertex mean."""
    apex = points[conn].mean(axis=1)
    vol = np.zeros(len(conn))
    moment = np.zeros((len(conn), 3))
    for local in CELL_FACES_3D[kind]:
        tris = _face_triangles(points, conn[:, local])
        a, b, c = tris[:, :, 0], tris[:, :, 1], tris[:, :, 2]
        ap = apex[:, None, :]
        tv = np.einsum("nij,nij->ni", a - ap,
                       np.cross(b - ap, c - ap)) / 6.0
        tc = (a + b + c + ap) / 4.0
        vol += tv.sum(axis=1)
        moment += (tv[..., None] * tc).sum(axis=1)
    denom = np.where(vol != 0.0, vol, 1.0)
    cent = np.where(vol[:, None] != 0.0, moment / denom[:, None], apex)
    return vol, cent


def _poly_areas_centroids_2d(points: np.ndarray, conn: np.ndarray):
    """Signed area and centroid of planar (z = 0) polygons."""
    x = points[conn][:, :, 0]
    y = points[conn][:, :, 1]
    xn = np.roll(x, -1, axis=1)
    yn = np.roll(y, -1, axis=1)
    w = x * yn - xn * y
    area = 0.5 * w.sum(axis=1)
    denom = np.where(area != 0.0, area, 1.0)
    cx = ((x + xn) * w).sum(axis=1) / (6.0 * denom)
    cy = ((y + yn) * w).sum(axis=1) / (6.0 * denom)
    mean = points[conn].mean(axis=1)
    cent = np.where(area[:, None] != 0.0,
                    np.stack([cx, cy, np.zeros_like(cx)], axis=1), mean)
    return area, cent


def cell_geometry(mesh: Mesh) -> MeshGeometry:
    """Volumes, centroids, and a unique-face table for the whole mesh.

    Negative volumes (inverted cells) are reported, never raised. Faces of
    2D meshes are edges: area = length, normal = in-plane outward normal of
    the owner cell.
    """
    if mesh.n_elements == 0:
        raise ValueError("mesh has no cells")
    points = mesh.points
    ncell = mesh.n_elements
    volumes = np.zeros(ncell)
    centroids = np.zeros((ncell, 3))

    cell_ids_by_kind: dict[str, np.ndarray] = {}
    conn_by_kind: dict[str, np.ndarray] = {}
    order: dict[str, list[int]] = {}
    for i, (kind, _) in enumerate(mesh.elements):
        order.setdefault(kind, []).append(i)
    grouped = mesh.elements_by_kind()
    for kind, conn in grouped.items():
        ids = np.asarray(order[kind], dtype=np.intp)
        cell_ids_by_kind[kind] = ids
        conn_by_kind[kind] = conn
        if mesh.dim == 2:
            vol, cent = _poly_areas_centroids_2d(points, conn)
        elif kind == "tetrahedron":
            vol, cent = _tet_volumes_centroids(points, conn)
        else:
            vol, cent = _fan_volumes_centroids(points, conn, kind)
        volumes[ids] = vol
        centroids[ids] = cent

    # Unique-face table: stack every cell-side face, identify duplicates by
    # their sorted vertex set (lexsort), first visitor owns the face and its
    # stored winding (outward from the owner).
    local_faces = CELL_EDGES_2D if mesh.dim == 2 else CELL_FACES_3D
    max_nv = 2 if mesh.dim == 2 else 4
    row_blocks, cell_blocks = [], []
    for kind, conn in conn_by_kind.items():
        ids = cell_ids_by_kind[kind]
        for local in local_faces[kind]:
            fv = conn[:, local]
            if fv.shape[1] < max_nv:
                pad = np.full((len(fv), max_nv - fv.shape[1]), -1,
                              dtype=np.intp)
                fv = np.hstack([pad, fv])
            row_blocks.append(fv)
            cell_blocks.append(ids)
    rows = np.vstack(row_blocks)
    cells = np.concatenate(cell_blocks)
    keys = np.sort(rows, axis=1)
    order = np.lexsort(keys.T[::-1])
    keys_sorted = keys[order]
    new_group = np.ones(len(keys_sorted), dtype=bool)
    new_group[1:] = np.any(keys_sorted[1:] != keys_sorted[:-1], axis=1)
    first = np.flatnonzero(new_group)
    group_sizes = np.diff(np.append(first, len(keys_sorted)))

    owner_arr = cells[order[first]]
    neighbor_arr = np.full(len(first), -1, dtype=np.intp)
    has_pair = group_sizes >= 2
    neighbor_arr[has_pair] = cells[order[first[has_pair] + 1]]
    windings = rows[order[first]]
    face_vertices = [tuple(int(v) for v in row if v >= 0) for row in windings]
    nface = len(face_vertices)
    areas = np.zeros(nface)
    normals = np.zeros((nface, 3))
    fcentroids = np.zeros((nface, 3))
    if mesh.dim == 2:
        a = points[windings[:, 0]]
        b = points[windings[:, 1]]
        t = b - a
        length = np.linalg.norm(t, axis=1)
        areas[:] = length
        safe = np.where(length > 0.0, length, 1.0)
        normals[:, 0] = t[:, 1] / safe
        normals[:, 1] = -t[:, 0] / safe
        fcentroids[:] = 0.5 * (a + b)
    else:
        sizes = (windings >= 0).sum(axis=1)
        for nv in (3, 4):
            sel = np.nonzero(sizes == nv)[0]
            if len(sel) == 0:
                continue
            idx = windings[sel][:, max_nv - nv:]
            area, normal, centroid = faces_area_normal_centroid(points, idx)
            areas[sel] = area
            normals[sel] = normal
            fcentroids[sel] = centroid

    return MeshGeometry(volumes, centroids, face_vertices, owner_arr,
                        neighbor_arr, areas, normals, fcentroids)


def orthogonality_metrics(mesh: Mesh,
                          geometry: MeshGeometry | None = None) -> QualityReport:
    """Orthogonality-angle quality report.

    Per face, the angle is 90 degrees minus the angle between the face
    normal and the line joining the adjacent cell centroids (the line from
    cell centroid to face centroid on the boundary). A cell's value is the
    minimum over its faces; 90 is ideal.
    """
    geo = geometry if geometry is not None else cell_geometry(mesh)
    d = np.where((geo.face_neighbor >= 0)[:, None],
                 geo.centroids[geo.face_neighbor] - geo.centroids[geo.face_owner],
                 geo.face_centroids - geo.centroids[geo.face_owner])
    dn = np.linalg.norm(d, axis=1)
    dn = np.where(dn > 0.0, dn, 1.0)
    cosang = np.abs(np.einsum("ij,ij->i", geo.face_normals, d) / dn)
    theta = 90.0 - np.degrees(np.arccos(np.clip(cosang, 0.0, 1.0)))

    per_cell = np.full(geo.n_cells, 90.0)
    np.minimum.at(per_cell, geo.face_owner, theta)
    interior = geo.interior
    np.minimum.at(per_cell, geo.face_neighbor[interior], theta[interior])

    return QualityReport(
        min_orthogonality_deg=float(per_cell.min()),
        per_cell_deg=per_cell,
        negative_volume_count=int(np.count_nonzero(geo.volumes < 0.0)),
        min_volume=float(geo.volumes.min()),
    )
