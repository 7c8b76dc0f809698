"""Extended FGM copulas ``C(u,v) = uv + theta(max(u,v)) phi(u) phi(v)``.

Construction, validity checking, evaluation, the absolutely continuous /
singular split, the conditional distribution ``F(v|u) = dC/du`` and the
endpoint ``v* = sup{v : theta(v) != 0}``.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .funcspace import (DEFAULT_QUAD, Func1D, FuncDomainError, QuadratureConfig,
                        integrate, left_limit)

__all__ = [
    "CopulaSpec", "ConditionResult", "ValidityReport", "ContractError", "InvalidSpecError",
    "NumericError", "ConsistencyError", "validate", "certify", "cdf", "rectangle_mass",
    "density_ac", "decompose", "singular_mass", "conditional_cdf", "conditional_jump",
    "conditional_left_limit", "endpoint_vstar",
]

# Below this value of max(u, v) the copula is evaluated as uv.
ORIGIN_CUTOFF = 1e-12


class ContractError(ValueError):
    """Operation called outside its preconditions."""


class InvalidSpecError(ContractError):
    def __init__(self, message: str, report: Any = None):
        self.report = report
        super().__init__(message)


class NumericError(ArithmeticError):
    """Non-finite intermediate while evaluating a copula."""


class ConsistencyError(ArithmeticError):
    """An internal identity failed, which points at an invalid spec."""


@dataclass(frozen=True, eq=False)
class CopulaSpec:
    """Generator pair ``(theta, phi)`` plus metadata.

    ``status`` is ``"unchecked"``, ``"valid"`` or ``"invalid"``; evaluation
    requires ``"valid"``.  Use :func:`certify` (or the family constructors)
    to obtain a validated spec.
    """

    theta: Func1D
    phi: Func1D
    label: str = ""
    status: str = "unchecked"
    report: Any = None
    family: Optional[dict] = None
    _memo: dict = field(default_factory=dict, repr=False)

    @property
    def is_valid(self) -> bool:
        return self.status == "valid"

    def with_report(self, report) -> "CopulaSpec":
        status = "valid" if report.verdict else "invalid"
        return dataclasses.replace(self, status=status, report=report, _memo={})

    def tp(self, t):
        """``(theta*phi)(t)``."""
        return self.theta(t) * self.phi(t)

    def tp_d(self, t):
        """``(theta*phi)'(t) = theta'(t) phi(t) + theta(t) phi'(t)``."""
        if self.theta.is_constant:
            return self.theta.const * self.phi.d(t)
        return self.theta.d(t) * self.phi(t) + self.theta(t) * self.phi.d(t)

    def theta_at_one(self) -> float:
        v = self._memo.get("theta1")
        if v is None:
            v = self._memo["theta1"] = left_limit(self.theta, 1.0)
        return v


def _require_valid(spec: CopulaSpec) -> None:
    if not spec.is_valid:
        raise ContractError(
            f"copula spec {spec.label!r} is {spec.status}; validate it first (see certify())")


# ---------------------------------------------------------------- validity


@dataclass(frozen=True)
class ConditionResult:
    passed: bool
    value: float
    witness: Optional[tuple] = None
    note: str = ""

    def to_dict(self) -> dict:
        return {"pass": self.passed, "value": _jsonable(self.value),
                "witness": None if self.witness is None else [_jsonable(w) for w in self.witness],
                "note": self.note}


@dataclass(frozen=True)
class ValidityReport:
    """Per-condition outcome of the copula check.

    ``cond_a``: phi(0) = 0 (plus the decay of theta*phi^2 at the origin and
    the isolated-zeros requirement on phi); ``cond_b``: phi(1) theta(1) = 0;
    ``cond_c``: min of phi'(u) (theta phi)'(v) over u <= v is >= -1;
    ``cond_d``: max of theta' is <= 0.
    """

    cond_a: ConditionResult
    cond_b: ConditionResult
    cond_c: ConditionResult
    cond_d: ConditionResult
    n_grid: int
    eps: float
    tol: float
    method: str = "grid"

    @property
    def verdict(self) -> bool:
        return all(c.passed for c in (self.cond_a, self.cond_b, self.cond_c, self.cond_d))

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "cond_a": self.cond_a.to_dict(),
            "cond_b": self.cond_b.to_dict(),
            "cond_c": self.cond_c.to_dict(),
            "cond_d": self.cond_d.to_dict(),
            "grid": {"n_points": self.n_grid, "eps": self.eps, "tol": self.tol,
                     "method": self.method},
        }


def _jsonable(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


def _safe_eval(fn, x):
    try:
        with np.errstate(all="ignore"):
            return np.asarray(fn(x), dtype=float)
    except (FuncDomainError, ArithmeticError, ValueError):
        return np.full(np.shape(x), np.nan)


def _check_cond_a(spec: CopulaSpec, grid: np.ndarray, tol: float) -> ConditionResult:
    phi0 = float(_safe_eval(spec.phi, 0.0))
    if not (abs(phi0) <= tol):
        return ConditionResult(False, abs(phi0), (0.0,), "phi(0) != 0")
    probes = np.array([1e-3, 1e-6, 1e-9])
    decay = np.abs(_safe_eval(spec.theta, probes) * _safe_eval(spec.phi, probes) ** 2)
    if not np.all(np.isfinite(decay)) or np.any(np.diff(decay) > 1e-15) or decay[-1] >= 1e-6:
        i = int(np.argmax(~np.isfinite(decay))) if not np.all(np.isfinite(decay)) else 2
        return ConditionResult(False, abs(phi0), (float(probes[i]),),
                               f"theta*phi^2 does not vanish at 0+: {decay.tolist()}")
    zero = np.abs(_safe_eval(spec.phi, grid)) <= 1e-14
    run = zero[:-1] & zero[1:]
    if run.any():
        i = int(np.argmax(run))
        return ConditionResult(False, abs(phi0), (float(grid[i]),),
                               "phi vanishes on an interval")
    return ConditionResult(True, abs(phi0))


def _check_cond_b(spec: CopulaSpec, tol: float) -> ConditionResult:
    try:
        th1 = left_limit(spec.theta, 1.0)
        phi1 = float(spec.phi(1.0))
    except (ArithmeticError, ValueError):
        return ConditionResult(False, math.nan, (1.0,), "cannot evaluate at 1")
    val = abs(phi1 * th1) if phi1 != 0.0 else 0.0
    return ConditionResult(bool(val <= tol), val, (1.0,))


def _refine_box(center, step, eps, n=17):
    lo = max(eps, center - 2 * step)
    hi = min(1 - eps, center + 2 * step)
    return np.linspace(lo, hi, n)


def _check_cond_c(spec, grid, eps, tol, refine) -> ConditionResult:
    p = _safe_eval(spec.phi.d, grid)
    q = _safe_eval(spec.tp_d, grid)
    bad_p, bad_q = ~np.isfinite(p), ~np.isfinite(q)
    if bad_p.any() or bad_q.any():
        x = float(grid[np.argmax(bad_p | bad_q)])
        return ConditionResult(False, math.nan, (x, x), "derivative not finite on grid")
    prod = np.outer(p, q)
    prod[np.tril_indices(len(grid), -1)] = np.inf  # keep u <= v
    k = int(np.argmin(prod))  # first index on ties
    i, j = divmod(k, len(grid))
    best, bu, bv = float(prod[i, j]), float(grid[i]), float(grid[j])
    step = float(grid[1] - grid[0])
    for _ in range(refine):
        us, vs = _refine_box(bu, step, eps), _refine_box(bv, step, eps)
        local = np.outer(_safe_eval(spec.phi.d, us), _safe_eval(spec.tp_d, vs))
        local = np.where(us[:, None] <= vs[None, :], local, np.inf)
        local = np.where(np.isfinite(local) | (local == np.inf), local, -np.inf)
        k = int(np.argmin(local))
        i, j = divmod(k, len(vs))
        if local[i, j] < best:
            best, bu, bv = float(local[i, j]), float(us[i]), float(vs[j])
        step /= 4
    return ConditionResult(bool(best >= -1 - tol), best, (bu, bv))


def _check_cond_d(spec, grid, eps, tol, refine) -> ConditionResult:
    if spec.theta.is_constant:
        return ConditionResult(True, 0.0, (float(grid[0]),))
    d = _safe_eval(spec.theta.d, grid)
    if not np.all(np.isfinite(d)):
        x = float(grid[np.argmax(~np.isfinite(d))])
        return ConditionResult(False, math.nan, (x,), "theta' not finite on grid")
    i = int(np.argmax(d))
    best, bx = float(d[i]), float(grid[i])
    step = float(grid[1] - grid[0])
    for _ in range(refine):
        xs = _refine_box(bx, step, eps)
        local = _safe_eval(spec.theta.d, xs)
        local = np.where(np.isfinite(local), local, np.inf)
        i = int(np.argmax(local))
        if local[i] > best:
            best, bx = float(local[i]), float(xs[i])
        step /= 4
    return ConditionResult(bool(best <= tol), best, (bx,))


def validate(spec: CopulaSpec, n_grid: int = 512, eps: float = 1e-4, tol: float = 1e-9,
             refine: int = 10) -> ValidityReport:
    """Check the four copula conditions on ``spec``.

    Condition (c) is checked on an ``n_grid x n_grid`` lattice over
    ``eps <= u <= v <= 1 - eps`` followed by ``refine`` zoom passes around
    the running minimum; (d) on the same 1-D grid.  This is a numerical
    check, not a proof, and the grid parameters are recorded in the report.
    Evaluation failures become condition failures with a witness.
    """
    if n_grid < 64:
        raise ValueError("n_grid must be >= 64")
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 0.5)")
    grid = np.linspace(eps, 1 - eps, n_grid)
    return ValidityReport(
        cond_a=_check_cond_a(spec, grid, tol),
        cond_b=_check_cond_b(spec, tol),
        cond_c=_check_cond_c(spec, grid, eps, tol, refine),
        cond_d=_check_cond_d(spec, grid, eps, tol, refine),
        n_grid=n_grid, eps=eps, tol=tol,
    )


def certify(spec: CopulaSpec, **kwargs) -> CopulaSpec:
    """Validate and return the spec marked valid; raise
    :class:`InvalidSpecError` (carrying the report) otherwise."""
    report = validate(spec, **kwargs)
    out = spec.with_report(report)
    if not report.verdict:
        failed = [n for n in ("cond_a", "cond_b", "cond_c", "cond_d")
                  if not getattr(report, n).passed]
        raise InvalidSpecError(f"{spec.label or 'spec'} is not a copula: {', '.join(failed)} failed",
                               report)
    return out


# -------------------------------------------------------------- evaluation


def _unit_arrays(*xs):
    arrs = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in xs))
    for a in arrs:
        if np.any((a < 0) | (a > 1)) or np.any(np.isnan(a)):
            raise ValueError("arguments must lie in [0, 1]")
    return arrs


def _finish(val: np.ndarray, what: str, *coords):
    if not np.all(np.isfinite(val)):
        k = int(np.argmax(~np.isfinite(val.ravel())))
        loc = tuple(float(np.ravel(c)[k]) for c in coords)
        raise NumericError(f"non-finite {what} at {loc}")
    return val if val.ndim else float(val)


def cdf(spec: CopulaSpec, u, v):
    """``C(u, v)``; vectorised over numpy arrays.

    On the boundary the limit values are used (0 when u or v is 0, the
    other argument when one of them is 1), and ``max(u, v) < 1e-12`` is
    evaluated as ``uv`` so generators with ``theta`` unbounded at 0 are safe.
    Exactly symmetric in its arguments.
    """
    _require_valid(spec)
    u, v = _unit_arrays(u, v)
    m = np.maximum(u, v)
    with np.errstate(all="ignore"):
        val = u * v + spec.theta(m) * (spec.phi(u) * spec.phi(v))
    val = np.where(m < ORIGIN_CUTOFF, u * v, val)
    val = np.where((u == 0) | (v == 0), 0.0, val)
    val = np.where(u == 1, v, val)
    val = np.where(v == 1, u, val)
    return _finish(val, "copula value", u, v)


def rectangle_mass(spec: CopulaSpec, u1, u2, v1, v2):
    """C-volume of ``[u1,u2] x [v1,v2]``."""
    u1, u2, v1, v2 = _unit_arrays(u1, u2, v1, v2)
    if np.any(u1 > u2) or np.any(v1 > v2):
        raise ContractError("rectangle needs u1 <= u2 and v1 <= v2")
    return cdf(spec, u2, v2) - cdf(spec, u2, v1) - cdf(spec, u1, v2) + cdf(spec, u1, v1)


def density_ac(spec: CopulaSpec, u, v):
    """Density of the absolutely continuous part off the diagonal,
    ``1 + (theta phi)'(max) phi'(min)``."""
    _require_valid(spec)
    u, v = _unit_arrays(u, v)
    if np.any(u == v):
        raise ContractError("density_ac is undefined on the diagonal; use singular_mass/diagonal_mass")
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    with np.errstate(all="ignore"):
        val = 1.0 + spec.tp_d(hi) * spec.phi.d(lo)
    val = np.asarray(val, dtype=float)
    if np.any(val < -1e-9):
        k = int(np.argmin(val))
        raise ConsistencyError(f"negative density {val.ravel()[k]!r}: spec is not a copula")
    return _finish(np.maximum(val, 0.0), "density", u, v)


def _theta_singular_at_zero(spec: CopulaSpec) -> bool:
    if not spec.theta.has_analytic_derivative:
        return True
    d = float(_safe_eval(spec.theta.d, 1e-8))
    return not math.isfinite(d) or abs(d) > 1e6


def singular_mass(spec: CopulaSpec, x: float = 1.0, cfg: QuadratureConfig | None = None) -> float:
    """``-int_0^x theta'(t) phi(t)^2 dt``, the singular mass on ``{U=V<=x}``.

    When ``theta'`` is only available numerically or blows up at 0 the
    integral is taken by parts, ``-theta(x)phi(x)^2 + int_0^x 2 theta phi phi'``,
    using that ``theta phi^2`` vanishes at 0.
    """
    _require_valid(spec)
    cfg = cfg or DEFAULT_QUAD
    if spec.theta.is_constant or x <= 0:
        return 0.0
    th, ph = spec.theta, spec.phi
    if _theta_singular_at_zero(spec):
        th_x = spec.theta_at_one() if x >= 1 else float(th(x))
        boundary = -th_x * float(ph(x)) ** 2
        body = integrate(lambda t: 2 * th(t) * ph(t) * ph.d(t), 0.0, x, cfg)
        return boundary + body
    return -integrate(lambda t: th.d(t) * ph(t) ** 2, 0.0, x, cfg)


def decompose(spec: CopulaSpec, u: float, v: float,
              cfg: QuadratureConfig | None = None) -> tuple[float, float]:
    """Split ``C(u,v)`` into absolutely continuous and singular parts."""
    _require_valid(spec)
    total = cdf(spec, u, v)
    m = min(u, v)
    if m <= 0:
        return 0.0, 0.0
    sing = max(singular_mass(spec, m, cfg), 0.0)
    return total - sing, sing


def conditional_left_limit(spec: CopulaSpec, u):
    """``F(u-|u) = u + phi(u) (theta phi)'(u)``."""
    with np.errstate(all="ignore"):
        return u + spec.phi(u) * spec.tp_d(u)


def conditional_jump(spec: CopulaSpec, u):
    """Size of the atom of ``F(.|u)`` at ``v = u``: ``-theta'(u) phi(u)^2``."""
    _require_valid(spec)
    if spec.theta.is_constant:
        return np.zeros_like(np.asarray(u, dtype=float)) if np.ndim(u) else 0.0
    with np.errstate(all="ignore"):
        return -spec.theta.d(u) * spec.phi(u) ** 2


def conditional_cdf(spec: CopulaSpec, u, v):
    """``F(v|u) = dC/du(u, v)``, right-continuous at ``v = u``.

    For ``v > u`` this is ``v + theta(v) phi(v) phi'(u)``; for ``v < u`` it is
    ``v + phi(v) (theta phi)'(u)``.  When ``v`` is a sorted 1-D array for a
    scalar ``u``, monotonicity is verified and a violation beyond 1e-9 raises
    :class:`ConsistencyError`.
    """
    _require_valid(spec)
    u_arr, v_arr = _unit_arrays(u, v)
    if np.any((u_arr <= 0) | (u_arr >= 1)):
        raise ContractError("conditional_cdf needs u in (0, 1)")
    with np.errstate(all="ignore"):
        upper = v_arr + spec.tp(v_arr) * spec.phi.d(u_arr)
        lower = v_arr + spec.phi(v_arr) * spec.tp_d(u_arr)
    val = np.where(v_arr >= u_arr, upper, lower)
    val = np.where(v_arr == 0, 0.0, val)
    val = np.where(v_arr == 1, 1.0, val)
    if np.ndim(u) == 0 and np.ndim(v) == 1 and np.all(np.diff(v_arr) >= 0):
        drops = np.diff(val)
        if np.any(drops < -1e-9):
            k = int(np.argmin(drops))
            raise ConsistencyError(
                f"F(.|u={float(u)}) decreases by {-drops[k]:.3g} near v={v_arr[k]:.6g}")
    return _finish(val, "conditional cdf", u_arr, v_arr)


def endpoint_vstar(spec: CopulaSpec, tol: float = 1e-12) -> float:
    """``v* = sup{v : theta(v) != 0}`` by bisection on ``|theta| > tol``.

    A crossing within 1e-9 of 1 is reported as exactly 1: ``theta`` that only
    reaches 0 at the right endpoint gives ``v* = 1``.
    """
    _require_valid(spec)
    th = spec.theta
    if abs(spec.theta_at_one()) > tol:
        return 1.0
    start = float(_safe_eval(th, 1e-12))
    if not (abs(start) > tol) and not math.isnan(start):
        raise ContractError("theta vanishes identically; v* is undefined")
    lo, hi = 1e-12, 1.0
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        if abs(float(th(mid))) > tol:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    return 1.0 if 1.0 - hi < 1e-9 else hi
