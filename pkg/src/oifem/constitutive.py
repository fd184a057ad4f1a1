"""Constitutive laws: volume flux laws h (with inverses f) and interface
jump laws b (with inverses g), all derived from radial potentials.

Law names understood by :func:`laws_by_name`: ``"sinh-bv"`` for the
high-field / Ohm / Butler-Volmer prototype and ``"power:<p>"`` for the
polynomial family.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from .nfunction import (
    NFunction,
    conjugate,
    cosh_nfunction,
    exp_nfunction,
    power_nfunction,
)

__all__ = [
    "VolumeLaw",
    "InterfaceLaw",
    "LawSet",
    "make_prototype_laws",
    "make_power_laws",
    "laws_by_name",
    "check_coercivity",
    "check_monotonicity",
    "check_potential",
]


def _identity(s):
    return np.asarray(s, dtype=float)


@dataclass(frozen=True)
class VolumeLaw:
    """Radial flux law ``h(v) = F'(|v|) v / |v|`` on one region.

    ``inverse_slope`` is the scalar inverse of ``potential.deriv``; it
    defines ``f = h^-1`` by the same radial rule.
    """

    region: int
    potential: NFunction
    inverse_slope: Callable
    alpha_h: float = 0.5
    C: float = 1.0
    name: str = ""

    def h(self, v):
        v = np.asarray(v, dtype=float)
        t = np.linalg.norm(v, axis=-1)
        self.potential.check_range(t)
        pos = t > 0
        ts = np.where(pos, t, 1.0)
        scale = np.where(pos, self.potential.deriv(ts) / ts, 0.0)
        return scale[..., None] * v

    def f(self, j):
        j = np.asarray(j, dtype=float)
        s = np.linalg.norm(j, axis=-1)
        pos = s > 0
        ss = np.where(pos, s, 1.0)
        scale = np.where(pos, self.inverse_slope(ss) / ss, 0.0)
        return scale[..., None] * j

    def energy_density(self, v):
        v = np.asarray(v, dtype=float)
        t = np.linalg.norm(v, axis=-1)
        return self.potential.value(t)

    def tangent(self, v):
        """Second derivative of the potential at ``v``, shape ``(..., 2, 2)``.

        ``F''(t) n n^T + F'(t)/t (I - n n^T)`` with ``n = v/|v|``; the limit
        at ``v = 0`` is ``F''(0) I``.
        """
        v = np.asarray(v, dtype=float)
        t = np.linalg.norm(v, axis=-1)
        self.potential.check_range(t)
        ratio = np.asarray(self.potential.deriv_ratio(t), dtype=float)
        second = np.asarray(self.potential.second_deriv(t), dtype=float)
        pos = t > 0
        ts = np.where(pos, t, 1.0)
        n = np.where(pos[..., None], v / ts[..., None], 0.0)
        nn = n[..., :, None] * n[..., None, :]
        eye = np.broadcast_to(np.eye(v.shape[-1]), nn.shape)
        return (ratio[..., None, None] * (eye - nn)
                + second[..., None, None] * nn
                + np.where(pos, 0.0, second - ratio)[..., None, None] * eye)


@dataclass(frozen=True)
class InterfaceLaw:
    """Odd scalar jump law ``b(z) = F'(|z|) sign(z)`` and its inverse ``g``."""

    potential: NFunction
    inverse_slope: Callable
    alpha_b: float = 0.5
    name: str = ""

    def b(self, z):
        z = np.asarray(z, dtype=float)
        a = np.abs(z)
        self.potential.check_range(a)
        return np.sign(z) * self.potential.deriv(a)

    def g(self, w):
        w = np.asarray(w, dtype=float)
        return np.sign(w) * self.inverse_slope(np.abs(w))

    def db(self, z):
        z = np.asarray(z, dtype=float)
        a = np.abs(z)
        self.potential.check_range(a)
        return np.asarray(self.potential.second_deriv(a), dtype=float)

    def energy_density(self, z):
        return self.potential.value(np.abs(np.asarray(z, dtype=float)))


@dataclass(frozen=True)
class LawSet:
    omega1: VolumeLaw
    omega2: VolumeLaw
    interface: InterfaceLaw
    name: str = ""

    def volume(self, region: int) -> VolumeLaw:
        return {1: self.omega1, 2: self.omega2}[region]

    def __iter__(self):
        return iter((self.omega1, self.omega2, self.interface))


def make_prototype_laws() -> LawSet:
    """sinh conduction in region 1, Ohm's law in region 2, Butler-Volmer jump."""
    quad = power_nfunction(2.0)
    omega1 = VolumeLaw(1, cosh_nfunction(), np.arcsinh, name="sinh")
    omega2 = VolumeLaw(2, quad, _identity, name="linear")
    interface = InterfaceLaw(exp_nfunction(), np.log1p, name="butler-volmer")
    return LawSet(omega1, omega2, interface, name="sinh-bv")


def make_power_laws(p: float) -> LawSet:
    """``h(v) = |v|^(p-2) v`` in both regions and a linear interface law."""
    p = float(p)
    if not p > 1.0:
        raise ValueError(f"power law needs p > 1, got {p!r}")
    q = p / (p - 1.0)
    pot = power_nfunction(p)

    def inv(s):
        return np.asarray(s, dtype=float) ** (q - 1.0)

    laws = [VolumeLaw(r, pot, inv, name=f"power:{p:g}") for r in (1, 2)]
    interface = InterfaceLaw(power_nfunction(2.0), _identity, name="linear")
    return LawSet(laws[0], laws[1], interface, name=f"power:{p:g}")


def laws_by_name(name: str) -> LawSet:
    name = name.strip()
    if name == "sinh-bv":
        return make_prototype_laws()
    if name.startswith("power:"):
        try:
            p = float(name.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad power law exponent in {name!r}") from None
        return make_power_laws(p)
    raise ValueError(f"unknown law {name!r} (expected 'sinh-bv' or 'power:<p>')")


# --------------------------------------------------------------------------
# assumption checks
# --------------------------------------------------------------------------

def check_coercivity(law, probe_set: Iterable, reference: Optional[NFunction] = None,
                     alpha: Optional[float] = None, C: Optional[float] = None) -> float:
    """Worst-case coercivity defect of ``law`` on ``probe_set``.

    Without ``reference`` the law's own potential is used and the return
    value is the largest Fenchel residual
    ``|h(v).v - F(v) - F*(h(v))|``, which vanishes for potential-derived
    laws. With a ``reference`` N-function the growth inequality
    ``h(v).v >= alpha (Phi(v) + Phi*(h(v))) - C`` is tested instead and the
    largest violation (positive means the inequality fails) is returned.
    """
    probes = np.asarray(list(probe_set), dtype=float)
    if isinstance(law, InterfaceLaw):
        z = probes.reshape(-1)
        flux = law.b(z)
        pairing = flux * z
        t, s = np.abs(z), np.abs(flux)
        default_alpha = law.alpha_b
    else:
        v = probes.reshape(-1, 2)
        flux = law.h(v)
        pairing = np.sum(flux * v, axis=-1)
        t, s = np.linalg.norm(v, axis=-1), np.linalg.norm(flux, axis=-1)
        default_alpha = law.alpha_h
    if np.any(t > 30.0):
        raise ValueError("coercivity probes must satisfy |v| <= 30")
    if reference is None:
        pot = law.potential
        resid = np.abs(pairing - pot.value(t) - conjugate(pot, s))
        return float(np.max(resid)) if resid.size else 0.0
    a = default_alpha if alpha is None else alpha
    c = getattr(law, "C", 1.0) if C is None else C
    slack = a * (reference.value(t) + conjugate(reference, s)) - c - pairing
    return float(np.max(slack)) if slack.size else 0.0


def check_monotonicity(law, pairs: Iterable) -> float:
    """Smallest value of ``(h(v1) - h(v2)).(v1 - v2)`` over the probe pairs."""
    pairs = np.asarray(list(pairs), dtype=float)
    if isinstance(law, InterfaceLaw):
        z1, z2 = pairs[:, 0], pairs[:, 1]
        return float(np.min((law.b(z1) - law.b(z2)) * (z1 - z2)))
    v1, v2 = pairs[:, 0, :], pairs[:, 1, :]
    return float(np.min(np.sum((law.h(v1) - law.h(v2)) * (v1 - v2), axis=-1)))


def check_potential(law, v, u, step: float = 1e-7) -> float:
    """Difference between a one-sided difference quotient of the potential
    in direction ``u`` and the pairing ``h(v).u``."""
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    if isinstance(law, InterfaceLaw):
        quotient = (law.energy_density(v + step * u) - law.energy_density(v)) / step
        return float(abs(quotient - law.b(v) * u))
    quotient = (law.energy_density(v + step * u) - law.energy_density(v)) / step
    return float(abs(quotient - np.dot(law.h(v), u)))
