"""Scalar N-functions: evaluation, convex conjugation, Young gap, Delta_2
probing and the Luxemburg norm of sampled fields.

Every N-function here is a radial profile ``t -> value(t)`` on ``t >= 0``;
vector arguments are handled by the callers through ``value(|v|)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "T_LIMIT",
    "LawOverflowError",
    "ConjugateDivergenceError",
    "NFunction",
    "Delta2Report",
    "GrowthReport",
    "conjugate",
    "conjugate_nfunction",
    "young_gap",
    "delta2_probe",
    "superquadratic_growth_check",
    "luxemburg_norm",
    "cosh_nfunction",
    "exp_nfunction",
    "power_nfunction",
    "quadratic_nfunction",
]

#: exponential profiles overflow binary64 near 709
T_LIMIT = 700.0

BISECT_TOL = 1e-12
BISECT_MAXITER = 200

_SERIES_CUT = 1e-4


class LawOverflowError(FloatingPointError):
    """Raised when a profile is evaluated beyond its safe argument range."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ConjugateDivergenceError(ValueError):
    pass


ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class NFunction:
    """Radial profile of an N-function.

    ``value`` and ``deriv`` must accept numpy arrays. The optional fields
    are used when present: ``second_deriv`` and ``deriv_ratio`` (the
    quotient ``deriv(t)/t``, finite at 0) by the Hessian assembly,
    ``analytic_conjugate`` by :func:`conjugate`.
    """

    value: ArrayFn
    deriv: ArrayFn
    label: str
    analytic_conjugate: Optional[ArrayFn] = None
    second_deriv: Optional[ArrayFn] = None
    deriv_ratio: Optional[ArrayFn] = None
    t_limit: float = np.inf
    # sup of deriv over [0, inf); finite values make the conjugate blow up
    slope_sup: float = np.inf
    meta: dict = field(default_factory=dict, compare=False)

    def __call__(self, t):
        return self.value(t)

    def check_range(self, t):
        t = np.asarray(t, dtype=float)
        if t.size and np.max(t) > self.t_limit:
            idx = int(np.argmax(t)) if t.ndim else None
            raise LawOverflowError(
                f"{self.label}: argument {float(np.max(t)):.6g} exceeds safe "
                f"range t <= {self.t_limit:g}",
                index=idx,
            )


@dataclass(frozen=True)
class Delta2Report:
    satisfied: str  # "yes" | "no" | "inconclusive"
    witness_c: float
    witness_K: float
    max_ratio_seen: float


@dataclass(frozen=True)
class GrowthReport:
    satisfied: bool
    witness_K: float
    equality: bool


# --------------------------------------------------------------------------
# conjugation
# --------------------------------------------------------------------------

def _scalar_conjugate(nf: NFunction, s: float) -> float:
    if s < 0 or not np.isfinite(s):
        raise ValueError(f"conjugate needs a finite s >= 0, got {s!r}")
    if s == 0.0:
        return 0.0
    if s >= nf.slope_sup:
        raise ConjugateDivergenceError(
            f"conjugate diverges: slope {s:g} outside the range of {nf.label}'")
    # bracket the slope-matching point deriv(t) = s
    lo, hi = 0.0, 1.0
    while float(nf.deriv(hi)) < s:
        lo, hi = hi, 2.0 * hi
        if hi > nf.t_limit:
            hi = nf.t_limit
            if float(nf.deriv(hi)) < s:
                raise LawOverflowError(
                    f"{nf.label}: slope {s:g} not reached below t={nf.t_limit:g}")
            break
        if hi > 1e300:
            raise ConjugateDivergenceError(
                f"conjugate diverges: slope {s:g} never reached by {nf.label}'")
    for _ in range(BISECT_MAXITER):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= BISECT_TOL * max(1.0, hi):
            break
        if float(nf.deriv(mid)) < s:
            lo = mid
        else:
            hi = mid
    t = 0.5 * (lo + hi)
    return max(s * t - float(nf.value(t)), 0.0)


def conjugate(nf: NFunction, s, numeric: bool = False):
    """Convex conjugate ``sup_t (s t - value(t))`` for ``s >= 0``.

    Uses ``nf.analytic_conjugate`` unless it is missing or ``numeric`` is
    set, in which case the supremum is located by bisection on
    ``deriv(t) = s``. Scalars in, float out; arrays in, array out.
    """
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0) or not np.all(np.isfinite(s_arr)):
        raise ValueError("conjugate needs finite s >= 0")
    if nf.analytic_conjugate is not None and not numeric:
        if np.any(s_arr >= nf.slope_sup):
            raise ConjugateDivergenceError(
                f"conjugate diverges: slope outside the range of {nf.label}'")
        out = np.asarray(nf.analytic_conjugate(s_arr), dtype=float)
    else:
        flat = [_scalar_conjugate(nf, float(x)) for x in s_arr.ravel()]
        out = np.array(flat, dtype=float).reshape(s_arr.shape)
    return float(out) if out.ndim == 0 else out


def _argmax_slope(nf: NFunction, s: float) -> float:
    """The t attaining the conjugate supremum, i.e. (deriv)^-1(s)."""
    if s <= 0.0:
        return 0.0
    lo, hi = 0.0, 1.0
    while float(nf.deriv(hi)) < s:
        lo, hi = hi, 2.0 * hi
        if hi > min(nf.t_limit, 1e300):
            raise ConjugateDivergenceError(
                f"conjugate diverges: slope {s:g} never reached by {nf.label}'")
    for _ in range(BISECT_MAXITER):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if float(nf.deriv(mid)) < s:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def conjugate_nfunction(nf: NFunction, numeric: bool = False) -> NFunction:
    """The conjugate as an :class:`NFunction` of its own.

    Its derivative is the inverse of ``nf.deriv``; its own conjugate is
    left unset so that conjugating twice runs the numeric path.
    """

    def value(s):
        return conjugate(nf, s, numeric=numeric)

    def deriv(s):
        s_arr = np.asarray(s, dtype=float)
        out = np.array([_argmax_slope(nf, float(x)) for x in s_arr.ravel()])
        out = out.reshape(s_arr.shape)
        return float(out) if out.ndim == 0 else out

    return NFunction(value=value, deriv=deriv, label=f"({nf.label})*")


def young_gap(nf: NFunction, t, s, numeric: bool = False):
    """``value(t) + conjugate(s) - s t``; nonnegative by Young's inequality."""
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(t < 0) or np.any(s < 0):
        raise ValueError("young_gap needs t, s >= 0")
    out = nf.value(t) + conjugate(nf, s, numeric=numeric) - s * t
    return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# growth probes
# --------------------------------------------------------------------------

def _safe_ratios(nf: NFunction, grid: np.ndarray) -> np.ndarray:
    """value(2t)/value(t) on ``grid``, truncated at the first overflow."""
    ratios = []
    for t in grid:
        try:
            with np.errstate(over="raise", invalid="raise"):
                num = float(nf.value(2.0 * t))
                den = float(nf.value(t))
        except (LawOverflowError, FloatingPointError, OverflowError):
            break
        if not (np.isfinite(num) and np.isfinite(den)) or den <= 0.0:
            break
        ratios.append(num / den)
    return np.asarray(ratios)


def delta2_probe(nf: NFunction, t_max: float, ratio_bound: float = 1e3,
                 threshold: float = 1.0, n_grid: int = 400) -> Delta2Report:
    """Finite-grid evidence for the Delta_2 condition value(2t) <= c value(t).

    The ratio is sampled on a geometric grid over ``[threshold, t_max]``
    (``threshold=0`` probes from 1e-6, i.e. the global variant). A ratio
    that stays below ``ratio_bound`` gives ``"yes"`` with ``witness_c`` the
    largest ratio seen. A ratio past the bound that is still increasing at
    the end of the grid gives ``"no"``. This is a heuristic, not a proof:
    the condition is asymptotic and no finite grid settles it.
    """
    if t_max <= 1.0 or ratio_bound <= 2.0:
        raise ValueError("delta2_probe needs t_max > 1 and ratio_bound > 2")
    K = threshold if threshold > 0 else 1e-6
    grid = np.geomspace(K, t_max, n_grid)
    ratios = _safe_ratios(nf, grid)
    if ratios.size < 8:
        return Delta2Report("inconclusive", np.nan, K, np.nan)
    max_ratio = float(np.max(ratios))
    if max_ratio <= ratio_bound:
        return Delta2Report("yes", max_ratio, K, max_ratio)
    tail = ratios[-max(4, ratios.size // 10):]
    growing = bool(np.all(np.diff(tail) >= 0.0))
    verdict = "no" if growing and tail[-1] > ratio_bound else "inconclusive"
    return Delta2Report(verdict, np.nan, K, max_ratio)


def superquadratic_growth_check(nf: NFunction, t_max: float,
                                n_grid: int = 400) -> GrowthReport:
    """Search for K > 1 with ``2 K value(t) <= value(2 t)`` for probed t >= 1.

    The best witness is half the smallest ratio ``value(2t)/value(t)`` on
    the grid. ``equality`` flags that the bound is attained at every probe
    (pure powers), where K cannot be enlarged at all.
    """
    if t_max <= 1.0:
        raise ValueError("superquadratic_growth_check needs t_max > 1")
    grid = np.geomspace(1.0, t_max, n_grid)
    ratios = _safe_ratios(nf, grid)
    if ratios.size == 0:
        return GrowthReport(False, np.nan, False)
    K = 0.5 * float(np.min(ratios))
    equality = bool(np.allclose(ratios, ratios[0], rtol=1e-12, atol=0.0))
    return GrowthReport(K > 1.0, K, equality)


# --------------------------------------------------------------------------
# Luxemburg norm
# --------------------------------------------------------------------------

def luxemburg_norm(nf: NFunction, field_values: Sequence[Tuple[float, float]],
                   measure_total: float) -> float:
    """``inf{lam > 0 : sum_i w_i value(|v_i| / lam) <= 1}`` by bisection.

    ``field_values`` holds ``(sample, weight)`` pairs whose weights must add
    up to ``measure_total``.
    """
    data = np.asarray(field_values, dtype=float).reshape(-1, 2)
    v = np.abs(data[:, 0])
    w = data[:, 1]
    if not np.all(np.isfinite(data)):
        raise ValueError("luxemburg_norm: non-finite samples")
    if np.any(w <= 0):
        raise ValueError("luxemburg_norm: weights must be positive")
    if abs(w.sum() - measure_total) > 1e-12 * max(abs(measure_total), 1.0):
        raise ValueError("luxemburg_norm: weights do not sum to measure_total")
    vmax = float(v.max()) if v.size else 0.0
    if vmax == 0.0:
        return 0.0

    def modular(lam):
        try:
            with np.errstate(over="raise"):
                return float(np.sum(w * nf.value(v / lam)))
        except (LawOverflowError, FloatingPointError):
            return np.inf

    # bisect on a scaled variable so the tolerance is relative to the field size
    lo, hi = 0.0, 1.0
    while modular(hi * vmax) > 1.0:
        lo, hi = hi, 2.0 * hi
    while lo == 0.0 and modular(0.5 * hi * vmax) <= 1.0:
        hi *= 0.5
    lo = 0.5 * hi if lo == 0.0 else lo
    for _ in range(BISECT_MAXITER):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= BISECT_TOL * hi * 1e-3:
            break
        if modular(mid * vmax) > 1.0:
            lo = mid
        else:
            hi = mid
    return hi * vmax


# --------------------------------------------------------------------------
# shipped profiles
# --------------------------------------------------------------------------

def _guarded(limit, label):
    def check(t):
        t = np.asarray(t, dtype=float)
        if t.size and np.max(t) > limit:
            raise LawOverflowError(
                f"{label}: argument {float(np.max(t)):.6g} exceeds safe range "
                f"t <= {limit:g}",
                index=int(np.argmax(t)) if t.ndim else None)
        return t
    return check


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def cosh_nfunction() -> NFunction:
    """``cosh(t) - 1``, the high-field conduction potential."""
    check = _guarded(T_LIMIT, "cosh-1")

    def value(t):
        t = check(t)
        return _out(2.0 * np.sinh(0.5 * t) ** 2)

    def deriv(t):
        return _out(np.sinh(check(t)))

    def second(t):
        return _out(np.cosh(check(t)))

    def ratio(t):
        t = check(t)
        small = t < _SERIES_CUT
        ts = np.where(small, 1.0, t)
        t2 = t * t
        return _out(np.where(small, 1.0 + t2 / 6.0 + t2 * t2 / 120.0, np.sinh(ts) / ts))

    def conj(s):
        s = np.asarray(s, dtype=float)
        r = np.sqrt(1.0 + s * s)
        # sqrt(1+s^2) - 1 written without cancellation
        return _out(s * np.arcsinh(s) - s * s / (1.0 + r))

    return NFunction(value, deriv, "cosh(t)-1", analytic_conjugate=conj,
                     second_deriv=second, deriv_ratio=ratio, t_limit=T_LIMIT)


def exp_nfunction() -> NFunction:
    """``exp(t) - t - 1``, the Butler-Volmer interface potential."""
    check = _guarded(T_LIMIT, "exp-t-1")

    def value(t):
        t = check(t)
        small = t < _SERIES_CUT
        series = t * t * (0.5 + t * (1.0 / 6.0 + t / 24.0))
        return _out(np.where(small, series, np.expm1(np.where(small, 0.0, t)) - t))

    def deriv(t):
        return _out(np.expm1(check(t)))

    def second(t):
        return _out(np.exp(check(t)))

    def ratio(t):
        t = check(t)
        small = t < _SERIES_CUT
        ts = np.where(small, 1.0, t)
        return _out(np.where(small, 1.0 + t / 2.0 + t * t / 6.0, np.expm1(ts) / ts))

    def conj(s):
        s = np.asarray(s, dtype=float)
        small = s < _SERIES_CUT
        series = s * s * (0.5 - s * (1.0 / 6.0 - s / 12.0))
        ss = np.where(small, 1.0, s)
        return _out(np.where(small, series, (1.0 + ss) * np.log1p(ss) - ss))

    return NFunction(value, deriv, "exp(t)-t-1", analytic_conjugate=conj,
                     second_deriv=second, deriv_ratio=ratio, t_limit=T_LIMIT)


def power_nfunction(p: float) -> NFunction:
    """``t**p / p`` for ``p > 1``; its conjugate is ``s**q / q`` with
    ``1/p + 1/q = 1``."""
    if not p > 1.0:
        raise ValueError(f"power N-function needs p > 1, got {p!r}")
    q = p / (p - 1.0)

    def value(t):
        return _out(np.asarray(t, dtype=float) ** p / p)

    def deriv(t):
        return _out(np.asarray(t, dtype=float) ** (p - 1.0))

    def second(t):
        t = np.asarray(t, dtype=float)
        if p == 2.0:
            return _out(np.ones_like(t))
        # t**(p-2) is unbounded at 0 for p < 2; keep it finite
        return _out((p - 1.0) * np.maximum(t, 1e-8) ** (p - 2.0))

    def ratio(t):
        t = np.asarray(t, dtype=float)
        if p == 2.0:
            return _out(np.ones_like(t))
        return _out(np.maximum(t, 1e-8) ** (p - 2.0))

    def conj(s):
        return _out(np.asarray(s, dtype=float) ** q / q)

    label = "t^2/2" if p == 2.0 else f"t^{p:g}/{p:g}"
    return NFunction(value, deriv, label, analytic_conjugate=conj,
                     second_deriv=second, deriv_ratio=ratio,
                     meta={"p": p, "conjugate_exponent": q})


def quadratic_nfunction() -> NFunction:
    return power_nfunction(2.0)
