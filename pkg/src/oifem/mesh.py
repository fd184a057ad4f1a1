"""Two-region triangulations with a conforming interface.

File format (``oimesh 1``)::

    oimesh 1
    vertices <n>
    x y                     (n lines)
    triangles <m>
    i j k region            (m lines, region 1 or 2)
    bedges <k>
    i j marker              (k lines, marker dirA | dirB | neu)
    iedges <l>
    i j tri1 tri2           (l lines, tri1 in region 1, tri2 in region 2)

Indices are 0-based. The interface normal points from region 1 into
region 2.
"""
from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

__all__ = ["MARKERS", "MeshError", "InterfaceMesh", "generate_slab",
           "read_mesh", "write_mesh", "validate_mesh"]

MARKERS = ("dirA", "dirB", "neu")


class MeshError(ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(eq=False)
class InterfaceMesh:
    vertices: np.ndarray          # (n, 2) float
    triangles: np.ndarray         # (m, 3) int, counterclockwise
    regions: np.ndarray           # (m,) int in {1, 2}
    boundary_edges: np.ndarray    # (k, 2) int
    boundary_markers: tuple       # (k,) str
    interface_edges: np.ndarray   # (l, 2) int
    interface_tris: np.ndarray    # (l, 2) int: (region-1 tri, region-2 tri)
    slab: Optional[dict] = None   # generator parameters, if any

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        self.regions = np.asarray(self.regions, dtype=np.int64).reshape(-1)
        self.boundary_edges = np.asarray(self.boundary_edges, dtype=np.int64).reshape(-1, 2)
        self.boundary_markers = tuple(self.boundary_markers)
        self.interface_edges = np.asarray(self.interface_edges, dtype=np.int64).reshape(-1, 2)
        self.interface_tris = np.asarray(self.interface_tris, dtype=np.int64).reshape(-1, 2)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def interface_lengths(self) -> np.ndarray:
        p = self.vertices[self.interface_edges]
        return np.linalg.norm(p[:, 1] - p[:, 0], axis=1)

    def interface_normals(self) -> np.ndarray:
        """Unit normals of the interface edges, pointing out of region 1."""
        p = self.vertices[self.interface_edges]
        d = p[:, 1] - p[:, 0]
        n = np.stack([d[:, 1], -d[:, 0]], axis=1)
        n /= np.linalg.norm(n, axis=1)[:, None]
        centroid1 = self.vertices[self.triangles[self.interface_tris[:, 0]]].mean(axis=1)
        mid = p.mean(axis=1)
        flip = np.sum(n * (mid - centroid1), axis=1) < 0
        n[flip] *= -1.0
        return n

    def interface_vertices(self) -> np.ndarray:
        return np.unique(self.interface_edges)

    def marked_vertices(self, marker: str) -> np.ndarray:
        sel = [k for k, m in enumerate(self.boundary_markers) if m == marker]
        if not sel:
            return np.zeros(0, dtype=np.int64)
        return np.unique(self.boundary_edges[sel])

    def edges(self) -> np.ndarray:
        """All distinct edges as sorted vertex pairs."""
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def structurally_equal(self, other: "InterfaceMesh") -> bool:
        return (np.array_equal(self.vertices, other.vertices)
                and np.array_equal(self.triangles, other.triangles)
                and np.array_equal(self.regions, other.regions)
                and np.array_equal(self.boundary_edges, other.boundary_edges)
                and self.boundary_markers == other.boundary_markers
                and np.array_equal(self.interface_edges, other.interface_edges)
                and np.array_equal(self.interface_tris, other.interface_tris))


def validate_mesh(mesh: InterfaceMesh, lines: Optional[Dict[str, List[int]]] = None) -> None:
    """Check the structural invariants of ``mesh``; raise :class:`MeshError`.

    ``lines`` maps ``"triangles"``, ``"bedges"``, ``"iedges"`` to source
    line numbers so file errors can point at the offending line.
    """
    lines = lines or {}

    def at(kind, idx):
        src = lines.get(kind)
        return src[idx] if src is not None and idx is not None else None

    nv = mesh.n_vertices
    for kind, arr in (("triangles", mesh.triangles), ("bedges", mesh.boundary_edges),
                      ("iedges", mesh.interface_edges)):
        bad = np.nonzero(np.any((arr < 0) | (arr >= nv), axis=1))[0]
        if bad.size:
            raise MeshError(f"{kind} entry {bad[0]} references a missing vertex",
                            at(kind, int(bad[0])))
    if not np.all(np.isfinite(mesh.vertices)):
        raise MeshError("non-finite vertex coordinates")

    bad = np.nonzero(~np.isin(mesh.regions, (1, 2)))[0]
    if bad.size:
        raise MeshError(f"triangle {bad[0]} has region {mesh.regions[bad[0]]}, expected 1 or 2",
                        at("triangles", int(bad[0])))
    areas = mesh.signed_areas()
    bad = np.nonzero(areas <= 0)[0]
    if bad.size:
        raise MeshError(f"triangle {bad[0]} has non-positive signed area",
                        at("triangles", int(bad[0])))

    edge_tris = defaultdict(list)
    for k, tri in enumerate(mesh.triangles):
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            edge_tris[(min(a, b), max(a, b))].append(k)
    for e, ts in edge_tris.items():
        if len(ts) > 2:
            raise MeshError(f"edge {e} is shared by more than two triangles",
                            at("triangles", ts[2]))

    marked = set()
    for k, ((a, b), marker) in enumerate(zip(mesh.boundary_edges, mesh.boundary_markers)):
        if marker not in MARKERS:
            raise MeshError(f"unknown marker {marker!r}", at("bedges", k))
        key = (min(a, b), max(a, b))
        ts = edge_tris.get(key, [])
        if len(ts) != 1:
            raise MeshError(f"boundary edge {key} is not on the mesh boundary",
                            at("bedges", k))
        region = mesh.regions[ts[0]]
        if marker == "dirA" and region != 1:
            raise MeshError("dirA edge does not touch region 1", at("bedges", k))
        if marker == "dirB" and region != 2:
            raise MeshError("dirB edge does not touch region 2", at("bedges", k))
        marked.add(key)
    for e, ts in edge_tris.items():
        if len(ts) == 1 and e not in marked:
            raise MeshError(f"boundary edge {e} carries no marker")

    listed = set()
    for k, ((a, b), (t1, t2)) in enumerate(zip(mesh.interface_edges, mesh.interface_tris)):
        key = (min(a, b), max(a, b))
        ts = edge_tris.get(key, [])
        if len(ts) != 2 or sorted(ts) != sorted((t1, t2)):
            raise MeshError(f"interface edge {key} is not shared by triangles {t1} and {t2}",
                            at("iedges", k))
        if mesh.regions[t1] != 1 or mesh.regions[t2] != 2:
            raise MeshError(f"interface orientation: edge {key} must separate a region-1 "
                            f"triangle (tri1) from a region-2 triangle (tri2)",
                            at("iedges", k))
        listed.add(key)
    for e, ts in edge_tris.items():
        if len(ts) == 2 and mesh.regions[ts[0]] != mesh.regions[ts[1]] and e not in listed:
            raise MeshError(f"edge {e} separates the regions but is not an interface edge")
    if not listed:
        raise MeshError("mesh has no interface edges")

    dir_a = set(mesh.marked_vertices("dirA").tolist())
    dir_b = set(mesh.marked_vertices("dirB").tolist())
    if not dir_a or not dir_b:
        raise MeshError("missing Dirichlet component: both dirA and dirB must be nonempty")
    if dir_a & dir_b:
        raise MeshError("Dirichlet components dirA and dirB touch each other")
    verts1 = set(mesh.triangles[mesh.regions == 1].ravel().tolist())
    verts2 = set(mesh.triangles[mesh.regions == 2].ravel().tolist())
    if dir_b & verts1 or dir_a & verts2:
        raise MeshError("interface does not separate the Dirichlet components")

    for region in (1, 2):
        tris = np.nonzero(mesh.regions == region)[0]
        if tris.size == 0:
            raise MeshError(f"region {region} is empty")
        adj = defaultdict(list)
        for ts in edge_tris.values():
            if len(ts) == 2 and mesh.regions[ts[0]] == region == mesh.regions[ts[1]]:
                adj[ts[0]].append(ts[1])
                adj[ts[1]].append(ts[0])
        if len(_reach(adj, int(tris[0]))) != tris.size:
            raise MeshError(f"region {region} is not edge-connected")

    adj = defaultdict(list)
    for a, b in mesh.interface_edges:
        adj[int(a)].append(int(b))
        adj[int(b)].append(int(a))
    iverts = mesh.interface_vertices()
    if len(_reach(adj, int(iverts[0]))) != iverts.size:
        raise MeshError("interface is not connected")


def _reach(adj, start):
    seen = {start}
    queue = deque([start])
    while queue:
        k = queue.popleft()
        for nb in adj[k]:
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    return seen


def generate_slab(nx: int, ny: int, length_1: float, length_2: float,
                  height: float) -> InterfaceMesh:
    """Rectangle ``(0, length_1 + length_2) x (0, height)`` cut by the
    vertical interface ``x = length_1``.

    Each region gets ``nx`` columns and ``ny`` rows of cells, and every
    cell is crossed by both diagonals into four triangles around a centre
    vertex. That gives ``8 nx ny`` triangles and ``ny`` interface edges.
    The left side is ``dirA``, the right side ``dirB``, top and bottom
    ``neu``.
    """
    nx, ny = int(nx), int(ny)
    if nx < 1 or ny < 1:
        raise ValueError("generate_slab needs nx, ny >= 1")
    if not (length_1 > 0 and length_2 > 0 and height > 0):
        raise ValueError("generate_slab needs positive dimensions")
    xs = np.concatenate([np.linspace(0.0, length_1, nx + 1),
                         length_1 + np.linspace(0.0, length_2, nx + 1)[1:]])
    ys = np.linspace(0.0, height, ny + 1)
    ncol = 2 * nx
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    corners = np.stack([X.ravel(), Y.ravel()], axis=1)

    def corner(i, j):
        return i * (ny + 1) + j

    n_corner = len(corners)
    centers = []
    triangles, regions = [], []
    right_tri, left_tri = {}, {}
    for i in range(ncol):
        for j in range(ny):
            m = n_corner + len(centers)
            centers.append(((xs[i] + xs[i + 1]) / 2, (ys[j] + ys[j + 1]) / 2))
            a, b = corner(i, j), corner(i + 1, j)
            c, d = corner(i + 1, j + 1), corner(i, j + 1)
            region = 1 if i < nx else 2
            base = len(triangles)
            triangles += [(a, b, m), (b, c, m), (c, d, m), (d, a, m)]
            regions += [region] * 4
            right_tri[(i, j)] = base + 1
            left_tri[(i, j)] = base + 3
    vertices = np.concatenate([corners, np.asarray(centers)])

    bedges, markers = [], []
    for j in range(ny):
        bedges.append((corner(0, j + 1), corner(0, j)))
        markers.append("dirA")
    for j in range(ny):
        bedges.append((corner(ncol, j), corner(ncol, j + 1)))
        markers.append("dirB")
    for i in range(ncol):
        bedges.append((corner(i, 0), corner(i + 1, 0)))
        markers.append("neu")
        bedges.append((corner(i + 1, ny), corner(i, ny)))
        markers.append("neu")

    iedges, itris = [], []
    for j in range(ny):
        iedges.append((corner(nx, j), corner(nx, j + 1)))
        itris.append((right_tri[(nx - 1, j)], left_tri[(nx, j)]))

    mesh = InterfaceMesh(vertices, triangles, regions, bedges, markers, iedges, itris,
                         slab=dict(nx=nx, ny=ny, length_1=float(length_1),
                                   length_2=float(length_2), height=float(height)))
    validate_mesh(mesh)
    return mesh


def write_mesh(mesh: InterfaceMesh, path) -> None:
    out = ["oimesh 1", f"vertices {mesh.n_vertices}"]
    out += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    out.append(f"triangles {mesh.n_triangles}")
    out += [f"{i} {j} {k} {r}" for (i, j, k), r in zip(mesh.triangles, mesh.regions)]
    out.append(f"bedges {len(mesh.boundary_edges)}")
    out += [f"{i} {j} {m}" for (i, j), m in zip(mesh.boundary_edges, mesh.boundary_markers)]
    out.append(f"iedges {len(mesh.interface_edges)}")
    out += [f"{i} {j} {a} {b}" for (i, j), (a, b) in
            zip(mesh.interface_edges, mesh.interface_tris)]
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def read_mesh(path) -> InterfaceMesh:
    raw = Path(path).read_text(encoding="utf-8").splitlines()
    rows = [(n + 1, ln.split()) for n, ln in enumerate(raw) if ln.strip()]
    pos = 0

    def take():
        nonlocal pos
        if pos >= len(rows):
            raise MeshError("unexpected end of file", len(raw) + 1)
        item = rows[pos]
        pos += 1
        return item

    lineno, tok = take()
    if tok != ["oimesh", "1"]:
        raise MeshError("expected header 'oimesh 1'", lineno)

    def section(name, width, parse):
        lineno, tok = take()
        if len(tok) != 2 or tok[0] != name:
            raise MeshError(f"expected '{name} <count>'", lineno)
        try:
            count = int(tok[1])
        except ValueError:
            raise MeshError(f"bad count {tok[1]!r}", lineno) from None
        items, where = [], []
        for _ in range(count):
            lineno, tok = take()
            if len(tok) != width:
                raise MeshError(f"{name}: expected {width} fields, got {len(tok)}", lineno)
            try:
                items.append(parse(tok))
            except ValueError as exc:
                raise MeshError(f"{name}: {exc}", lineno) from None
            where.append(lineno)
        return items, where

    def parse_bedge(tok):
        if tok[2] not in MARKERS:
            raise ValueError(f"unknown marker {tok[2]!r}")
        return int(tok[0]), int(tok[1]), tok[2]

    verts, _ = section("vertices", 2, lambda t: (float(t[0]), float(t[1])))
    tris, tri_lines = section("triangles", 4, lambda t: tuple(int(x) for x in t))
    bedges, b_lines = section("bedges", 3, parse_bedge)
    iedges, i_lines = section("iedges", 4, lambda t: tuple(int(x) for x in t))
    if pos != len(rows):
        raise MeshError("trailing content after iedges section", rows[pos][0])

    mesh = InterfaceMesh(
        vertices=np.asarray(verts, dtype=float).reshape(-1, 2),
        triangles=[t[:3] for t in tris],
        regions=[t[3] for t in tris],
        boundary_edges=[b[:2] for b in bedges],
        boundary_markers=[b[2] for b in bedges],
        interface_edges=[e[:2] for e in iedges],
        interface_tris=[e[2:] for e in iedges],
    )
    validate_mesh(mesh, {"triangles": tri_lines, "bedges": b_lines, "iedges": i_lines})
    return mesh
