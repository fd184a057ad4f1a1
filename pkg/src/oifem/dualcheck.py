"""Post-solve diagnostics: recovered fluxes, conservation and interface
residuals, the transposed (flux-side) residual and the Fenchel energy
identity."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .assembly import DiscreteProblem, full_residual
from .nfunction import conjugate
from .space import BrokenField

__all__ = ["FluxRecovery", "DiagnosticsReport", "recover_flux",
           "conservation_residual", "interface_residual", "dual_membership_residual",
           "energy_identity", "variational_gap", "flux_two_sidedness", "diagnose"]


@dataclass
class FluxRecovery:
    element_flux: np.ndarray    # (n_triangles, 2)
    normal_flux_1: np.ndarray   # (n_edges,) h(grad phi).n from the region-1 side
    normal_flux_2: np.ndarray   # (n_edges,) same from the region-2 side
    interface_flux: np.ndarray  # (n_edges, n_q) b([phi]) at edge quadrature points


@dataclass
class DiagnosticsReport:
    fenchel_gap_volume: float
    fenchel_gap_interface: float
    conservation_residual: float
    interface_residual: float
    dual_membership_residual: float
    energy_phi: float
    energy_phi_star: float
    energy_psi: float
    energy_psi_star: float
    energy_gap: float

    def to_dict(self) -> dict:
        return {k: float(v) for k, v in asdict(self).items()}


def _phi(field) -> np.ndarray:
    return field.values if isinstance(field, BrokenField) else np.asarray(field, dtype=float)


def recover_flux(problem: DiscreteProblem, phi) -> FluxRecovery:
    sp = problem.space
    phi = _phi(phi)
    grads = np.einsum("ma,mac->mc", phi[sp.dof_map], sp.basis_grads)
    flux = np.zeros_like(grads)
    for region in (1, 2):
        tris = np.nonzero(sp.mesh.regions == region)[0]
        flux[tris] = problem.laws.volume(region).h(grads[tris])
    n = sp.edge_normals
    t1, t2 = sp.mesh.interface_tris[:, 0], sp.mesh.interface_tris[:, 1]
    return FluxRecovery(
        element_flux=flux,
        normal_flux_1=np.sum(flux[t1] * n, axis=1),
        normal_flux_2=np.sum(flux[t2] * n, axis=1),
        interface_flux=problem.laws.interface.b(problem.quad_jumps(phi)),
    )


def conservation_residual(problem: DiscreteProblem, phi) -> float:
    """Max-norm of ``sum_T |T| j_T . grad psi_v`` over continuous hat
    functions ``psi_v`` of vertices off the Dirichlet boundary.

    Continuous test functions have no jump, so the interface law drops out
    and only the recovered volume flux is tested.
    """
    sp = problem.space
    mesh = sp.mesh
    flux = recover_flux(problem, phi).element_flux
    if problem.j0 is not None:
        flux = flux - problem.j0
    local = sp.areas[:, None] * np.einsum("mc,mac->ma", flux, sp.basis_grads)
    per_vertex = np.bincount(mesh.triangles.ravel(), weights=local.ravel(),
                             minlength=mesh.n_vertices)
    fixed = np.zeros(mesh.n_vertices, dtype=bool)
    fixed[mesh.marked_vertices("dirA")] = True
    fixed[mesh.marked_vertices("dirB")] = True
    free = per_vertex[~fixed]
    return float(np.max(np.abs(free), initial=0.0))


def interface_residual(problem: DiscreteProblem, phi) -> float:
    """``max |h(grad phi)|_1 . n - b([phi])| / (1 + |b([phi])|)`` over the
    interface quadrature points."""
    rec = recover_flux(problem, phi)
    b = rec.interface_flux
    gap = np.abs(rec.normal_flux_1[:, None] - b) / (1.0 + np.abs(b))
    return float(np.max(gap, initial=0.0))


def flux_two_sidedness(problem: DiscreteProblem, phi) -> float:
    """Largest difference between the normal fluxes seen from the two sides."""
    rec = recover_flux(problem, phi)
    return float(np.max(np.abs(rec.normal_flux_1 - rec.normal_flux_2), initial=0.0))


def _dual_pairing(problem: DiscreteProblem, phi) -> np.ndarray:
    """``int j . grad q_i + int_Gamma w [q_i]`` for every broken basis
    function ``q_i`` with ``j`` the recovered flux and ``w = b([phi])``.

    Assembled DOF by DOF from the flux data, independently of the energy
    gradient code in :mod:`oifem.assembly`.
    """
    sp = problem.space
    rec = recover_flux(problem, phi)
    flux = rec.element_flux if problem.j0 is None else rec.element_flux - problem.j0
    out = np.zeros(sp.n_dofs)
    for m in range(len(sp.areas)):
        for a in range(3):
            out[sp.dof_map[m, a]] += sp.areas[m] * float(flux[m] @ sp.basis_grads[m, a])
    s, w = problem._rule
    for e in range(len(sp.edge_lengths)):
        for q in range(len(s)):
            shape = (1.0 - s[q], s[q])
            wq = sp.edge_lengths[e] * w[q] * rec.interface_flux[e, q]
            for a in range(2):
                out[sp.edge_dofs2[e, a]] += wq * shape[a]
                out[sp.edge_dofs1[e, a]] -= wq * shape[a]
    return out[sp.free_dofs]


def dual_membership_residual(problem: DiscreteProblem, phi) -> float:
    """Max-norm of the flux-side pairing over the free broken test basis;
    equal to the primal residual max-norm up to rounding."""
    return float(np.max(np.abs(_dual_pairing(problem, _phi(phi))), initial=0.0))


def energy_identity(problem: DiscreteProblem, phi) -> dict:
    """The four Young integrals and the relative gap of their sum against
    the flux/gradient pairings."""
    sp = problem.space
    phi = _phi(phi)
    grads = np.einsum("ma,mac->mc", phi[sp.dof_map], sp.basis_grads)
    e_phi = e_phi_star = pair_vol = 0.0
    gap_vol = 0.0
    for region in (1, 2):
        tris = np.nonzero(sp.mesh.regions == region)[0]
        law = problem.laws.volume(region)
        g = grads[tris]
        flux = law.h(g)
        a = sp.areas[tris]
        val = law.potential.value(np.linalg.norm(g, axis=1))
        conj = conjugate(law.potential, np.linalg.norm(flux, axis=1))
        pair = np.sum(flux * g, axis=1)
        e_phi += float(a @ val)
        e_phi_star += float(a @ conj)
        pair_vol += float(a @ pair)
        if tris.size:
            gap_vol = max(gap_vol, float(np.max((val + conj - pair) / (1.0 + np.abs(pair)))))

    law = problem.laws.interface
    z = problem.quad_jumps(phi)
    bz = law.b(z)
    _, w = problem._rule
    lw = sp.edge_lengths[:, None] * w[None, :]
    val = law.potential.value(np.abs(z))
    conj = conjugate(law.potential, np.abs(bz))
    pair = bz * z
    e_psi = float(np.sum(lw * val))
    e_psi_star = float(np.sum(lw * conj))
    pair_int = float(np.sum(lw * pair))
    gap_int = float(np.max((val + conj - pair) / (1.0 + np.abs(pair)), initial=0.0))

    total = e_phi + e_phi_star + e_psi + e_psi_star
    gap = abs(total - pair_vol - pair_int) / (1.0 + total)
    return {
        "energy_phi": e_phi,
        "energy_phi_star": e_phi_star,
        "energy_psi": e_psi,
        "energy_psi_star": e_psi_star,
        "energy_gap": gap,
        "fenchel_gap_volume": gap_vol,
        "fenchel_gap_interface": gap_int,
    }


def variational_gap(problem: DiscreteProblem, phi, q: BrokenField) -> float:
    """Left side of the variational inequality tested with ``q``:
    ``int h(grad phi).grad(phi - lift - q) + int_Gamma b([phi]) [phi - q]``
    (minus the ``j0`` pairing). ``q`` must vanish on the Dirichlet DOFs."""
    phi = _phi(phi)
    if np.any(q.values[problem.space.dirichlet_dofs] != 0.0):
        raise ValueError("test field must vanish on the Dirichlet DOFs")
    r = full_residual(problem, phi)
    # the lift has no jump, so [phi - q] = [phi - lift - q]
    return float(r @ (phi - problem.lift.values - q.values))


def diagnose(problem: DiscreteProblem, phi) -> DiagnosticsReport:
    ident = energy_identity(problem, phi)
    return DiagnosticsReport(
        fenchel_gap_volume=ident["fenchel_gap_volume"],
        fenchel_gap_interface=ident["fenchel_gap_interface"],
        conservation_residual=conservation_residual(problem, phi),
        interface_residual=interface_residual(problem, phi),
        dual_membership_residual=dual_membership_residual(problem, phi),
        energy_phi=ident["energy_phi"],
        energy_phi_star=ident["energy_phi_star"],
        energy_psi=ident["energy_psi"],
        energy_psi_star=ident["energy_psi_star"],
        energy_gap=ident["energy_gap"],
    )
