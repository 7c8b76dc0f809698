"""Univariate functions with derivative/antiderivative access, plus the
quadrature and monotone root-finding kernels shared by the other modules."""
from __future__ import annotations

import math
import os
import threading
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate as _si
from scipy.interpolate import CubicHermiteSpline

from . import exprlang

__all__ = [
    "Func1D", "QuadratureConfig", "QuadratureError", "BracketError", "FuncDomainError",
    "deriv", "one_sided_deriv", "left_limit", "integrate", "find_root_monotone",
    "find_root_monotone_vec", "from_expr", "constant", "identity",
]

ArrayFunc = Callable[[np.ndarray], np.ndarray]

# Cells of the cached antiderivative grid (1025 nodes).
_GRID_CELLS = 1024
_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


class FuncDomainError(ValueError):
    """A point outside the domain, or too close to an endpoint for a
    numeric derivative."""


class QuadratureError(ArithmeticError):
    def __init__(self, message: str, estimate: float, error_bound: float):
        self.estimate = estimate
        self.error_bound = error_bound
        super().__init__(f"{message} (estimate={estimate!r}, error bound={error_bound!r})")


class BracketError(ValueError):
    """Target value not bracketed by g(lo), g(hi)."""


def _as_float_fn(fn: ArrayFunc) -> ArrayFunc:
    def wrapped(t):
        arr = np.asarray(t, dtype=float)
        with np.errstate(all="ignore"):
            out = np.asarray(fn(arr), dtype=float)
        if out.shape != arr.shape:
            out = np.broadcast_to(out, arr.shape).copy()
        return out if arr.ndim else float(out)

    return wrapped


@dataclass(frozen=True, eq=False)
class Func1D:
    """A real function on ``domain`` with optional analytic derivative and
    antiderivative.

    ``value``, ``derivative`` and ``antiderivative`` must accept numpy arrays.
    The antiderivative is normalised to vanish at the left endpoint.  When it
    is missing, a numeric one is built once on a 1025-node grid (bounded
    domains only) and interpolated with cubic Hermite splines.
    """

    value: ArrayFunc
    derivative: Optional[ArrayFunc] = None
    antiderivative: Optional[ArrayFunc] = None
    domain: tuple[float, float] = (0.0, 1.0)
    provenance: str = "named-closed-form"  # | "expression" | "tabulated"
    label: str = ""
    const: Optional[float] = None
    expr: Optional[exprlang.Expr] = None
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "value", _as_float_fn(self.value))
        if self.derivative is not None:
            object.__setattr__(self, "derivative", _as_float_fn(self.derivative))
        if self.antiderivative is not None:
            object.__setattr__(self, "antiderivative", _as_float_fn(self.antiderivative))

    def __call__(self, t):
        return self.value(t)

    def __repr__(self):
        return f"Func1D({self.label or self.value.__name__!s}, {self.provenance})"

    @property
    def has_analytic_derivative(self) -> bool:
        return self.derivative is not None

    @property
    def is_constant(self) -> bool:
        return self.const is not None

    def d(self, t):
        """Derivative at ``t`` (array-friendly); see :func:`deriv`."""
        if self.derivative is not None:
            return self.derivative(t)
        return _central_diff(self, t)

    def integral(self, t):
        """Antiderivative at ``t``, normalised to 0 at the left endpoint."""
        if self.antiderivative is not None:
            return self.antiderivative(t)
        return self._numeric_antiderivative()(t)

    def _numeric_antiderivative(self) -> ArrayFunc:
        spline = self._cache.get("anti")
        if spline is not None:
            return spline
        with self._lock:
            spline = self._cache.get("anti")
            if spline is None:
                spline = _build_antiderivative(self)
                self._cache["anti"] = spline
        return spline


def _build_antiderivative(f: Func1D) -> ArrayFunc:
    a, b = f.domain
    if not (math.isfinite(a) and math.isfinite(b)):
        raise FuncDomainError("numeric antiderivative needs a bounded domain")
    nodes = np.linspace(a, b, _GRID_CELLS + 1)
    lo, hi = nodes[:-1], nodes[1:]
    half = 0.5 * (hi - lo)
    pts = (lo + half)[:, None] + half[:, None] * _GL_X[None, :]
    cells = (f.value(pts) * _GL_W[None, :]).sum(axis=1) * half
    values = np.concatenate([[0.0], np.cumsum(cells)])
    slopes = f.value(nodes)
    # endpoints may be singular; fall back to one-sided secants there
    bad = ~np.isfinite(slopes)
    if bad.any():
        secant = np.gradient(values, nodes)
        slopes = np.where(bad, secant, slopes)
    spline = CubicHermiteSpline(nodes, values, slopes)

    def anti(t):
        return spline(np.clip(t, a, b))

    return anti


def _central_diff(f: Func1D, t):
    t = np.asarray(t, dtype=float)
    h = np.maximum(1e-6, 1e-6 * np.abs(t))
    a, b = f.domain
    if np.any(t - 2 * h < a) or np.any(t + 2 * h > b):
        raise FuncDomainError(
            f"numeric derivative of {f!r} needs interior points; use one_sided_deriv at endpoints")
    fv = f.value
    out = (fv(t - 2 * h) - 8 * fv(t - h) + 8 * fv(t + h) - fv(t + 2 * h)) / (12 * h)
    return out if out.ndim else float(out)


def deriv(f: Func1D, t):
    """Derivative of ``f`` at ``t``.

    Analytic when available, otherwise a fourth-order central difference
    with ``h = max(1e-6, 1e-6*|t|)``.  The numeric path raises
    :class:`FuncDomainError` near endpoints.
    """
    return f.d(t)


def left_limit(f: Func1D, x: float = 1.0, offset: float = 1e-9) -> float:
    """``f(x)`` if finite, otherwise ``f(x - offset)``."""
    try:
        v = float(f(x))
    except (ArithmeticError, ValueError):
        v = math.nan
    if math.isfinite(v):
        return v
    return float(f(x - offset))


def one_sided_deriv(f: Func1D, x: float = 1.0, side: str = "left",
                    steps=(1e-4, 1e-5, 1e-6), rtol: float = 1e-4) -> float:
    """One-sided derivative at an endpoint by second-order differences and
    Richardson extrapolation over ``steps`` (each a tenth of the previous).

    Raises ``ArithmeticError`` when successive extrapolants disagree by more
    than ``rtol`` (relative), which signals an oscillating or singular
    derivative.
    """
    sgn = -1.0 if side == "left" else 1.0
    f0 = left_limit(f, x) if side == "left" else float(f(x))

    def d(h):
        return sgn * (-3 * f0 + 4 * float(f(x + sgn * h)) - float(f(x + 2 * sgn * h))) / (2 * h)

    ds = [d(h) for h in steps]
    ratios = [(steps[i] / steps[i + 1]) ** 2 for i in range(len(steps) - 1)]
    rich = [(r * ds[i + 1] - ds[i]) / (r - 1) for i, r in enumerate(ratios)]
    if not all(math.isfinite(v) for v in rich):
        raise ArithmeticError(f"one-sided derivative of {f!r} at {x} is not finite")
    est = rich[-1]
    if len(rich) > 1 and abs(rich[-1] - rich[-2]) > rtol * max(1.0, abs(est)):
        raise ArithmeticError(
            f"one-sided derivative of {f!r} at {x} did not stabilise: {rich}")
    return est


# --------------------------------------------------------------- quadrature


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances for :func:`integrate`.

    ``improper_cutoff_strategy`` selects how ``[lo, inf)`` is handled:
    ``"transform"`` maps the half line onto a finite interval, ``"cutoff"``
    truncates at ``cutoff`` and relies on the caller's tail bound.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_depth: int = 50
    improper_cutoff_strategy: str = "transform"
    cutoff: float = 1e4

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if self.improper_cutoff_strategy not in ("transform", "cutoff"):
            raise ValueError(f"unknown improper_cutoff_strategy {self.improper_cutoff_strategy!r}")

    @classmethod
    def from_env(cls, var: str = "FGMX_QUAD_TOL") -> "QuadratureConfig":
        tol = os.environ.get(var)
        if not tol:
            return cls()
        tol = float(tol)
        return cls(abs_tol=tol, rel_tol=tol)


DEFAULT_QUAD = QuadratureConfig()


def integrate(f, lo: float, hi: float, cfg: QuadratureConfig | None = None,
              points=None) -> float:
    """Adaptive Gauss-Kronrod quadrature of ``f`` over ``[lo, hi]``.

    Integrable endpoint singularities are handled by the extrapolating
    QUADPACK drivers; ``hi = inf`` is supported.  Raises
    :class:`QuadratureError` with the best estimate when the requested
    tolerance is not met within the subdivision budget.
    """
    cfg = cfg or DEFAULT_QUAD
    if hi < lo:
        raise ValueError(f"integrate: lo={lo} > hi={hi}")
    if hi == lo:
        return 0.0
    fn = f.value if isinstance(f, Func1D) else f

    def scalar(x):
        return float(fn(x))

    if math.isinf(hi) and cfg.improper_cutoff_strategy == "cutoff":
        hi = lo + cfg.cutoff
    limit = 4 * cfg.max_depth
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", _si.IntegrationWarning)
        kw = dict(epsabs=cfg.abs_tol, epsrel=cfg.rel_tol, limit=limit, full_output=1)
        if points is not None and math.isfinite(hi):
            kw["points"] = [p for p in points if lo < p < hi]
        res = _si.quad(scalar, lo, hi, **kw)
    val, err = res[0], res[1]
    if not math.isfinite(val):
        raise QuadratureError("integral is not finite", val, err)
    if len(res) > 3:  # ier != 0
        target = max(cfg.abs_tol, cfg.rel_tol * abs(val))
        if err > 1e3 * target:
            raise QuadratureError(f"quadrature did not converge: {res[3]}", val, err)
    return float(val)


# ------------------------------------------------------------ root finding


def find_root_monotone(g: Callable[[float], float], lo: float, hi: float,
                       target: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Bisection for ``g(t) = target`` with ``g`` non-decreasing on ``[lo, hi]``.

    Works across flat stretches and jumps: when ``target`` falls inside a
    jump the location of the jump is returned.
    """
    glo, ghi = g(lo), g(hi)
    if glo > target + tol or ghi < target - tol:
        raise BracketError(
            f"target {target!r} not bracketed: g({lo})={glo!r}, g({hi})={ghi!r}")
    if abs(glo - target) <= tol:
        return lo
    if abs(ghi - target) <= tol:
        return hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if abs(gm - target) <= tol or hi - lo <= tol:
            return mid
        if gm < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_root_monotone_vec(g: Callable[[np.ndarray], np.ndarray], lo, hi, target,
                           tol: float = 1e-12) -> np.ndarray:
    """Elementwise bisection; ``lo``, ``hi``, ``target`` broadcast together.

    Runs until every bracket is narrower than ``tol`` and returns the
    midpoints.  Brackets are assumed valid (callers guarantee them).
    """
    lo, hi, target = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (lo, hi, target)))
    lo, hi = lo.copy(), hi.copy()
    width = float(np.max(hi - lo)) if lo.size else 0.0
    n_iter = int(math.ceil(math.log2(max(width, tol) / tol))) + 1
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        below = g(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


# ------------------------------------------------------------ constructors


def from_expr(src, domain=(0.0, 1.0), label: str | None = None) -> Func1D:
    """Build a :class:`Func1D` from expression text (or a parsed tree) with a
    symbolic derivative attached."""
    e = exprlang.parse(src) if isinstance(src, str) else src
    text = exprlang.to_string(e)
    const = e.value if isinstance(e, exprlang.Num) else None
    anti = None
    if const is not None:
        a = domain[0]
        anti = lambda t, c=const: c * (np.asarray(t) - a)  # noqa: E731
    return Func1D(
        value=exprlang.compile_expr(e),
        derivative=exprlang.compile_expr(exprlang.differentiate(e)),
        antiderivative=anti,
        domain=domain,
        provenance="expression",
        label=label or text,
        const=const,
        expr=e,
    )


def constant(c: float, label: str | None = None) -> Func1D:
    c = float(c)
    return Func1D(
        value=lambda t: np.full_like(np.asarray(t, dtype=float), c),
        derivative=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        antiderivative=lambda t: c * np.asarray(t, dtype=float),
        label=label or f"{c:g}",
        const=c,
    )


def identity() -> Func1D:
    return Func1D(
        value=lambda t: np.asarray(t, dtype=float),
        derivative=lambda t: np.ones_like(np.asarray(t, dtype=float)),
        antiderivative=lambda t: 0.5 * np.asarray(t, dtype=float) ** 2,
        label="t",
    )
