"""Broken P1 space: continuous inside each region, two independent degrees
of freedom at every interface vertex."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Tuple

import numpy as np

from .mesh import InterfaceMesh

__all__ = ["BrokenSpace", "BrokenField", "element_gradient", "edge_jump",
           "lift_dirichlet", "write_field_csv"]


class BrokenSpace:
    """DOF layout over an :class:`InterfaceMesh`.

    Vertices are numbered in mesh order; an interface vertex gets its
    region-1 DOF first, then its region-2 DOF.
    """

    def __init__(self, mesh: InterfaceMesh):
        self.mesh = mesh
        iverts = set(mesh.interface_vertices().tolist())
        dof_of: Dict[Tuple[int, int], int] = {}
        owner = []
        n = 0
        for v in range(mesh.n_vertices):
            if v in iverts:
                for region in (1, 2):
                    dof_of[(v, region)] = n
                    owner.append((v, region))
                    n += 1
            else:
                # region of a non-interface vertex is whatever touches it
                dof_of[(v, 0)] = n
                owner.append((v, 0))
                n += 1
        self.n_dofs = n
        self._dof_of = dof_of
        touching = {}
        for tri, region in zip(mesh.triangles, mesh.regions):
            for v in tri:
                touching.setdefault(int(v), int(region))
        self.dof_vertex = np.array([v for v, _ in owner], dtype=np.int64)
        self.dof_region = np.array([r if r else touching.get(v, 1) for v, r in owner],
                                   dtype=np.int64)

        self.dof_map = np.array([[self.dof_of(v, r) for v in tri]
                                 for tri, r in zip(mesh.triangles, mesh.regions)],
                                dtype=np.int64).reshape(-1, 3)
        self.areas = mesh.signed_areas()
        p = mesh.vertices[mesh.triangles]
        # gradients of the barycentric coordinates, constant per triangle
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        jac = np.stack([d1, d2], axis=2)            # columns are edge vectors
        inv_t = np.linalg.inv(jac).transpose(0, 2, 1)
        ref = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
        self.basis_grads = np.einsum("ab,mcb->mac", ref, inv_t)  # (m, 3, 2)

        ie = mesh.interface_edges
        self.edge_dofs1 = np.array([[self.dof_of(v, 1) for v in e] for e in ie],
                                   dtype=np.int64).reshape(-1, 2)
        self.edge_dofs2 = np.array([[self.dof_of(v, 2) for v in e] for e in ie],
                                   dtype=np.int64).reshape(-1, 2)
        self.edge_lengths = mesh.interface_lengths()
        self.edge_normals = mesh.interface_normals()

        self.dirichlet_a = np.unique([self.dof_of(v, 1) for v in mesh.marked_vertices("dirA")]
                                     ).astype(np.int64)
        self.dirichlet_b = np.unique([self.dof_of(v, 2) for v in mesh.marked_vertices("dirB")]
                                     ).astype(np.int64)
        fixed = np.zeros(n, dtype=bool)
        fixed[self.dirichlet_a] = True
        fixed[self.dirichlet_b] = True
        self.dirichlet_dofs = np.nonzero(fixed)[0]
        self.free_dofs = np.nonzero(~fixed)[0]

    def dof_of(self, vertex: int, region: int) -> int:
        """DOF carrying ``vertex`` on the ``region`` side."""
        vertex, region = int(vertex), int(region)
        if (vertex, 0) in self._dof_of:
            return self._dof_of[(vertex, 0)]
        return self._dof_of[(vertex, region)]

    def interpolate(self, fn) -> "BrokenField":
        """Nodal interpolant of ``fn(x, y, region)``."""
        xy = self.mesh.vertices[self.dof_vertex]
        values = np.array([fn(x, y, r) for (x, y), r in zip(xy, self.dof_region)], dtype=float)
        return BrokenField(self, values)

    def zero(self) -> "BrokenField":
        return BrokenField(self, np.zeros(self.n_dofs))

    def from_free(self, free_values) -> "BrokenField":
        values = np.zeros(self.n_dofs)
        values[self.free_dofs] = free_values
        return BrokenField(self, values)


@dataclass
class BrokenField:
    space: BrokenSpace
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.space.n_dofs,):
            raise ValueError(f"expected {self.space.n_dofs} coefficients, "
                             f"got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field coefficients must be finite")

    def __add__(self, other):
        return BrokenField(self.space, self.values + _vals(other))

    def __sub__(self, other):
        return BrokenField(self.space, self.values - _vals(other))

    def __mul__(self, scalar):
        return BrokenField(self.space, self.values * float(scalar))

    __rmul__ = __mul__

    @property
    def free(self) -> np.ndarray:
        return self.values[self.space.free_dofs]

    def gradients(self) -> np.ndarray:
        """Elementwise gradients, shape ``(n_triangles, 2)``."""
        sp = self.space
        return np.einsum("ma,mac->mc", self.values[sp.dof_map], sp.basis_grads)

    def vertex_jumps(self) -> np.ndarray:
        """Region-2 minus region-1 values at the endpoints of each interface
        edge, shape ``(n_edges, 2)``."""
        sp = self.space
        return self.values[sp.edge_dofs2] - self.values[sp.edge_dofs1]


def _vals(other):
    return other.values if isinstance(other, BrokenField) else np.asarray(other, dtype=float)


def element_gradient(field: BrokenField, triangle: int) -> np.ndarray:
    sp = field.space
    return field.values[sp.dof_map[triangle]] @ sp.basis_grads[triangle]


def edge_jump(field: BrokenField, edge: int, s: float) -> float:
    """Jump (region-2 trace minus region-1 trace) at barycentric position
    ``s`` along interface edge ``edge``."""
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    j0, j1 = field.vertex_jumps()[edge]
    return float((1.0 - s) * j0 + s * j1)


def lift_dirichlet(space: BrokenSpace, phi_a: float, phi_b: float) -> BrokenField:
    """Field taking ``phi_a`` on dirA and ``phi_b`` on dirB with no jump on
    the interface.

    When both Dirichlet sides are vertical lines (the slab) the lift is the
    linear blend in x between them, identical on both sides of the
    interface. Otherwise only the Dirichlet DOFs are set.
    """
    mesh = space.mesh
    xa = mesh.vertices[mesh.marked_vertices("dirA"), 0]
    xb = mesh.vertices[mesh.marked_vertices("dirB"), 0]
    values = np.zeros(space.n_dofs)
    if np.ptp(xa) == 0.0 and np.ptp(xb) == 0.0 and xa[0] != xb[0]:
        x = mesh.vertices[space.dof_vertex, 0]
        w = (x - xa[0]) / (xb[0] - xa[0])
        values = (1.0 - w) * phi_a + w * phi_b
    values[space.dirichlet_a] = phi_a
    values[space.dirichlet_b] = phi_b
    return BrokenField(space, values)


def write_field_csv(field: BrokenField, path) -> None:
    """``vertex_index,region,x,y,value``; interface vertices appear once per
    region."""
    sp = field.space
    xy = sp.mesh.vertices[sp.dof_vertex]
    out = ["vertex_index,region,x,y,value"]
    for d in range(sp.n_dofs):
        out.append(f"{sp.dof_vertex[d]},{sp.dof_region[d]},{xy[d, 0]:.17g},"
                   f"{xy[d, 1]:.17g},{field.values[d]:.17g}")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
