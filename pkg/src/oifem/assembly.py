"""Discrete energy, its gradient (the weak-form residual) and its Hessian
on the broken P1 space.

The energy of ``phi = lift + p`` is

    sum_T |T| F_h(|grad phi|_T|) - j0_T . grad phi|_T
      + sum_E |E| sum_q w_q F_b(|[phi](s_q)|)

with one-point element quadrature (exact, the integrand is constant per
triangle) and Gauss-Legendre quadrature along interface edges.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sps

from .constitutive import LawSet
from .nfunction import LawOverflowError
from .space import BrokenField, BrokenSpace

__all__ = ["DiscreteProblem", "energy", "residual", "hessian",
           "energy_terms", "full_residual"]


def gauss_rule(order: int):
    """Gauss-Legendre points and weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


@dataclass
class DiscreteProblem:
    space: BrokenSpace
    laws: LawSet
    lift: BrokenField
    # optional elementwise constant Neumann flux field, shape (n_triangles, 2)
    j0: Optional[np.ndarray] = None
    edge_order: int = 2
    _rule: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.lift.space is not self.space:
            raise ValueError("lift lives on a different space")
        if np.max(np.abs(self.lift.vertex_jumps()), initial=0.0) != 0.0:
            raise ValueError("the Dirichlet lift must have zero jump on the interface")
        self._rule = gauss_rule(self.edge_order)
        regions = self.space.mesh.regions
        self._tris = {r: np.nonzero(regions == r)[0] for r in (1, 2)}

    @property
    def n_free(self) -> int:
        return len(self.space.free_dofs)

    def phi(self, p) -> np.ndarray:
        """Full coefficient vector of ``lift + p``; ``p`` may be a field or
        a vector over the free DOFs."""
        if isinstance(p, BrokenField):
            vals = p.values
            if np.any(vals[self.space.dirichlet_dofs] != 0.0):
                raise ValueError("p must vanish on the Dirichlet DOFs")
            return self.lift.values + vals
        out = self.lift.values.copy()
        out[self.space.free_dofs] += np.asarray(p, dtype=float)
        return out

    def field(self, p) -> BrokenField:
        return BrokenField(self.space, self.phi(p))

    def quad_jumps(self, phi: np.ndarray) -> np.ndarray:
        """Jumps at the edge quadrature points, shape ``(n_edges, n_q)``."""
        sp = self.space
        vj = phi[sp.edge_dofs2] - phi[sp.edge_dofs1]
        s, _ = self._rule
        return vj[:, :1] * (1.0 - s)[None, :] + vj[:, 1:] * s[None, :]


def _volume(problem, phi, what):
    """Apply a per-region law evaluation with element ids on overflow."""
    sp = problem.space
    grads = np.einsum("ma,mac->mc", phi[sp.dof_map], sp.basis_grads)
    out = {}
    for region, tris in problem._tris.items():
        law = problem.laws.volume(region)
        try:
            out[region] = what(law, grads[tris])
        except LawOverflowError as exc:
            elem = tris[exc.index] if exc.index is not None else None
            raise LawOverflowError(f"element {elem} (region {region}): {exc}",
                                   index=elem) from None
    return grads, out


def _interface(problem, jumps, what):
    try:
        return what(problem.laws.interface, jumps)
    except LawOverflowError as exc:
        edge = None if exc.index is None else int(np.unravel_index(exc.index, jumps.shape)[0])
        raise LawOverflowError(f"interface edge {edge}: {exc}", index=edge) from None


def energy_terms(problem: DiscreteProblem, phi: np.ndarray):
    """Per-element and per-edge energy contributions of the full field ``phi``."""
    sp = problem.space
    grads, dens = _volume(problem, phi, lambda law, g: law.energy_density(g))
    elem = np.zeros(len(sp.areas))
    for region, tris in problem._tris.items():
        elem[tris] = sp.areas[tris] * dens[region]
    if problem.j0 is not None:
        elem -= sp.areas * np.sum(problem.j0 * grads, axis=1)
    jumps = problem.quad_jumps(phi)
    _, w = problem._rule
    edge = sp.edge_lengths * (_interface(problem, jumps, lambda law, z: law.energy_density(z)) @ w)
    return elem, edge


def energy(problem: DiscreteProblem, p) -> float:
    elem, edge = energy_terms(problem, problem.phi(p))
    return float(np.sum(elem) + np.sum(edge))


def full_residual(problem: DiscreteProblem, phi: np.ndarray) -> np.ndarray:
    """Gradient of the energy with respect to every DOF (Dirichlet ones included)."""
    sp = problem.space
    grads, fluxes = _volume(problem, phi, lambda law, g: law.h(g))
    flux = np.zeros_like(grads)
    for region, tris in problem._tris.items():
        flux[tris] = fluxes[region]
    if problem.j0 is not None:
        flux = flux - problem.j0
    local = sp.areas[:, None] * np.einsum("mc,mac->ma", flux, sp.basis_grads)
    out = np.bincount(sp.dof_map.ravel(), weights=local.ravel(), minlength=sp.n_dofs)

    s, w = problem._rule
    jumps = problem.quad_jumps(phi)
    bq = _interface(problem, jumps, lambda law, z: law.b(z))
    scaled = sp.edge_lengths[:, None] * bq * w[None, :]
    # weights of the two endpoint hat functions along the edge
    at0 = scaled @ (1.0 - s)
    at1 = scaled @ s
    edge_local = np.stack([at0, at1], axis=1)
    out += np.bincount(sp.edge_dofs2.ravel(), weights=edge_local.ravel(), minlength=sp.n_dofs)
    out -= np.bincount(sp.edge_dofs1.ravel(), weights=edge_local.ravel(), minlength=sp.n_dofs)
    return out


def residual(problem: DiscreteProblem, p) -> np.ndarray:
    """Weak-form residual over the free DOFs: gradient of :func:`energy`."""
    return full_residual(problem, problem.phi(p))[problem.space.free_dofs]


def hessian(problem: DiscreteProblem, p) -> sps.csr_matrix:
    """Second derivative of :func:`energy` over the free DOFs (sparse, symmetric)."""
    sp = problem.space
    phi = problem.phi(p)
    _, tangents = _volume(problem, phi, lambda law, g: law.tangent(g))
    rows, cols, vals = [], [], []
    for region, tris in problem._tris.items():
        B = sp.basis_grads[tris]
        local = sp.areas[tris, None, None] * np.einsum(
            "mac,mcd,mbd->mab", B, tangents[region], B)
        dofs = sp.dof_map[tris]
        rows.append(np.repeat(dofs, 3, axis=1).ravel())
        cols.append(np.tile(dofs, (1, 3)).ravel())
        vals.append(local.ravel())

    s, w = problem._rule
    jumps = problem.quad_jumps(phi)
    dbq = _interface(problem, jumps, lambda law, z: law.db(z))
    scaled = sp.edge_lengths[:, None] * dbq * w[None, :]
    shape = np.stack([1.0 - s, s])                       # (2, n_q)
    edge_mass = np.einsum("eq,aq,bq->eab", scaled, shape, shape)
    # the jump basis: +1 on region-2 DOFs, -1 on region-1 DOFs
    edofs = np.concatenate([sp.edge_dofs1, sp.edge_dofs2], axis=1)
    sign = np.array([-1.0, -1.0, 1.0, 1.0])
    local = np.tile(edge_mass, (1, 2, 2)) * np.outer(sign, sign)[None]
    rows.append(np.repeat(edofs, 4, axis=1).ravel())
    cols.append(np.tile(edofs, (1, 4)).ravel())
    vals.append(local.ravel())

    H = sps.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                       shape=(sp.n_dofs, sp.n_dofs)).tocsr()
    free = sp.free_dofs
    return H[free][:, free].tocsr()
