"""Damped Newton minimisation of the discrete energy, and the 1D slab
reduction used as ground truth."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .assembly import DiscreteProblem, energy, hessian, residual
from .constitutive import LawSet
from .nfunction import LawOverflowError
from .space import BrokenField

__all__ = ["SolveReport", "minimize", "SlabProfile", "slab_oracle"]

log = logging.getLogger(__name__)

ARMIJO_C1 = 1e-4
GRADIENT_CAP = 650.0
MAX_BACKTRACK = 60


@dataclass
class SolveReport:
    iterations: int
    energy_history: List[float]
    residual_norm_history: List[float]
    converged: bool
    final_field: BrokenField
    line_search_counts: List[int] = field(default_factory=list)
    fallback_steps: int = 0

    @property
    def final_residual(self) -> float:
        return self.residual_norm_history[-1]

    def summary(self) -> dict:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "final_energy": self.energy_history[-1],
            "final_residual_norm": self.final_residual,
            "energy_history": list(self.energy_history),
            "residual_norm_history": list(self.residual_norm_history),
            "line_search_counts": list(self.line_search_counts),
            "fallback_steps": self.fallback_steps,
        }


def _newton_direction(H, g):
    """Solve ``H d = -g``; ``None`` if the factorisation breaks down.

    The system is scaled symmetrically by the inverse square root of the
    diagonal first: the exponential laws produce curvatures spanning
    hundreds of orders of magnitude across elements. If the scaled matrix
    is still numerically singular its diagonal is shifted by ``mu`` (a
    Levenberg-type damping), raising ``mu`` until the factorisation works.
    """
    diag = H.diagonal()
    if not np.all(diag > 0) or not np.all(np.isfinite(diag)):
        return None
    scale = 1.0 / np.sqrt(diag)
    Hs = H.multiply(scale[:, None]).multiply(scale[None, :]).tocsr()
    gs = g * scale
    eye = sps.identity(H.shape[0], format="csr")
    for mu in (0.0, 1e-12, 1e-9, 1e-6, 1e-3, 1.0):
        A = Hs + mu * eye if mu else Hs
        try:
            if H.shape[0] <= 2000:
                c, low = scipy.linalg.cho_factor(A.toarray(), check_finite=True)
                y = scipy.linalg.cho_solve((c, low), -gs)
            else:
                y = spla.spsolve(A.tocsc(), -gs)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError, RuntimeError):
            continue
        d = scale * y
        if np.all(np.isfinite(d)) and float(d @ g) < 0.0:
            return d
    return None


def _max_field_size(problem: DiscreteProblem, x) -> float:
    """Largest elementwise gradient norm and interface jump of ``lift + x``."""
    phi = problem.phi(x)
    sp = problem.space
    grads = np.einsum("ma,mac->mc", phi[sp.dof_map], sp.basis_grads)
    jumps = phi[sp.edge_dofs2] - phi[sp.edge_dofs1]
    return max(float(np.max(np.linalg.norm(grads, axis=1), initial=0.0)),
               float(np.max(np.abs(jumps), initial=0.0)))


def minimize(problem: DiscreteProblem, initial: Optional[BrokenField] = None,
             tol: float = 1e-10, max_iter: int = 100) -> SolveReport:
    """Minimise the energy over ``lift + p``, ``p`` vanishing on Gamma_D.

    Newton steps with Armijo backtracking (halving) on the energy. When the
    Cholesky solve fails or does not give a descent direction, the step
    falls back to steepest descent scaled by the Hessian diagonal. Steps are also halved until every
    elementwise gradient and interface jump stays below 650 (or below its
    current size, if larger) so that the exponential laws never overflow. Stops once the free-DOF residual
    max-norm is at most ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    x = np.zeros(problem.n_free) if initial is None else np.array(initial.free, dtype=float)
    if initial is not None and np.any(initial.values[problem.space.dirichlet_dofs] != 0.0):
        raise ValueError("initial guess must vanish on the Dirichlet DOFs")

    E = energy(problem, x)
    g = residual(problem, x)
    energies = [E]
    norms = [float(np.max(np.abs(g), initial=0.0))]
    counts = []
    fallbacks = 0
    it = 0
    while norms[-1] > tol and it < max_iter:
        H = hessian(problem, x)
        d = _newton_direction(H, g)
        slope = float(d @ g) if d is not None else 0.0
        if d is None or not slope < 0.0:
            # Jacobi-scaled steepest descent: always a descent direction and
            # sized by the local curvature rather than by |g|
            diag = np.maximum(H.diagonal(), np.finfo(float).tiny)
            d = -g / diag
            slope = float(d @ g)
            fallbacks += 1
        cap = max(GRADIENT_CAP, _max_field_size(problem, x))
        alpha = 1.0
        tries = 0
        accepted = False
        while tries < MAX_BACKTRACK:
            trial = x + alpha * d
            if _max_field_size(problem, trial) <= cap:
                try:
                    E_trial = energy(problem, trial)
                except LawOverflowError:
                    E_trial = np.inf
                if E_trial <= E + ARMIJO_C1 * alpha * slope:
                    accepted = True
                    break
                # the predicted decrease is below the rounding level of E:
                # accept a step that does not increase the energy
                if abs(alpha * slope) <= 1e-13 * (1.0 + abs(E)) and E_trial <= E:
                    accepted = True
                    break
            alpha *= 0.5
            tries += 1
        counts.append(tries)
        it += 1
        if not accepted:
            log.warning("line search failed at iteration %d", it)
            break
        x = trial
        E = E_trial
        g = residual(problem, x)
        energies.append(E)
        norms.append(float(np.max(np.abs(g), initial=0.0)))
        log.debug("iter %3d  E=%.16e  |r|=%.3e  alpha=%g", it, E, norms[-1], alpha)

    return SolveReport(
        iterations=it,
        energy_history=energies,
        residual_norm_history=norms,
        converged=norms[-1] <= tol,
        final_field=problem.field(x),
        line_search_counts=counts,
        fallback_steps=fallbacks,
    )


# --------------------------------------------------------------------------
# slab oracle
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SlabProfile:
    """Exact y-independent solution on the slab: constant flux, one slope
    per region and a jump at ``x = length_1``."""

    flux: float
    slope_1: float
    slope_2: float
    jump: float
    length_1: float
    length_2: float
    phi_a: float
    phi_b: float

    def __call__(self, x, region):
        x = np.asarray(x, dtype=float)
        left = self.phi_a + self.slope_1 * x
        right = self.phi_a + self.slope_1 * self.length_1 + self.jump \
            + self.slope_2 * (x - self.length_1)
        return np.where(np.asarray(region) == 1, left, right)

    def interpolate(self, space) -> BrokenField:
        x = space.mesh.vertices[space.dof_vertex, 0]
        return BrokenField(space, self(x, space.dof_region))


def _slab_drop(laws: LawSet, L1, L2, j):
    """Potential drop across the slab carried by flux ``j``."""
    s = abs(j)
    sign = np.sign(j)
    return sign * (L1 * float(laws.omega1.inverse_slope(s))
                   + float(laws.interface.inverse_slope(s))
                   + L2 * float(laws.omega2.inverse_slope(s)))


def slab_oracle(laws: LawSet, length_1: float, length_2: float,
                phi_a: float, phi_b: float) -> SlabProfile:
    """Solve ``L1 f1(j) + g(j) + L2 f2(j) = phi_b - phi_a`` by bisection.

    The left side is increasing in ``j``, so the root is unique; the
    bisection runs until the bracket cannot shrink any further in binary64.
    """
    target = float(phi_b) - float(phi_a)
    if target == 0.0:
        j = 0.0
    else:
        lo, hi = 0.0, 1.0
        while abs(_slab_drop(laws, length_1, length_2, hi)) < abs(target):
            lo, hi = hi, 2.0 * hi
            if hi > 1e300:
                raise ValueError("slab_oracle: could not bracket the flux")
        for _ in range(2000):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if abs(_slab_drop(laws, length_1, length_2, mid)) < abs(target):
                lo = mid
            else:
                hi = mid
        # pick the endpoint with the smaller defect
        j = min((lo, hi), key=lambda c: abs(_slab_drop(laws, length_1, length_2, c)
                                             - abs(target)))
        j = float(np.sign(target) * j)
    w = np.array([j, 0.0])
    slope_1 = float(laws.omega1.f(w)[0])
    slope_2 = float(laws.omega2.f(w)[0])
    jump = float(laws.interface.g(j))
    return SlabProfile(j, slope_1, slope_2, jump, float(length_1), float(length_2),
                       float(phi_a), float(phi_b))
