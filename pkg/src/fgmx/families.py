"""Named generator pairs and the survival-function subfamily.

The subfamily ``C(u,v) = uv [1 + Kbar^{-1}(max(u,v))]`` is driven by a
distribution ``K`` on ``[0, inf)``: ``theta`` is the inverse survival
function and ``phi`` the identity.  It is a copula exactly when the hazard
``k / Kbar`` dominates ``1 / (1 + t)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from . import exprlang
from .copula import CopulaSpec, certify
from .funcspace import (DEFAULT_QUAD, Func1D, QuadratureConfig, constant, find_root_monotone,
                        from_expr, identity, integrate)

__all__ = [
    "FAMILY_TAGS", "FamilyParams", "KGenerator", "HazardReport", "FamilyDomainError",
    "gpd_k", "uniform_k", "exponential_k", "make_k_copula", "check_hazard", "is_admissible",
    "rho_k", "lambda_k", "gpd_from_rho_lambda", "make_named", "parabola",
    "constant_theta_range", "fit_rho_inversion", "invert_rho", "FitResult", "family_info",
    "named_function",
]

FAMILY_TAGS = ("fgm", "constant-theta", "ca", "b11", "gpd", "uniform-k",
               "exponential-k", "durante-f")


class FamilyDomainError(ValueError):
    """Parameters outside a family's domain."""


# ------------------------------------------------------------ generators


def parabola() -> Func1D:
    """``t(1-t)``, the classical FGM generator."""
    return Func1D(
        value=lambda t: t * (1.0 - t),
        derivative=lambda t: 1.0 - 2.0 * t,
        antiderivative=lambda t: t ** 2 / 2.0 - t ** 3 / 3.0,
        label="t*(1-t)",
    )


def _gpd_inverse_survival(alpha: float, sigma: float) -> Func1D:
    return Func1D(
        value=lambda u: sigma * (u ** (-alpha) - 1.0),
        derivative=lambda u: -alpha * sigma * u ** (-alpha - 1.0),
        label=f"{sigma:g}*(t^-{alpha:g} - 1)",
    )


def _truncated_power(c: float, s: float, p: float) -> Func1D:
    return Func1D(
        value=lambda t: c * np.maximum(s - t, 0.0) ** p,
        derivative=lambda t: -c * p * np.maximum(s - t, 0.0) ** (p - 1.0),
        label=f"{c:g}*max({s:g}-t,0)^{p:g}",
    )


def named_function(name: str, params: Optional[dict] = None) -> Func1D:
    """Closed-form generators addressable by name from spec files."""
    p = dict(params or {})
    if name == "identity":
        return identity()
    if name == "parabola":
        return parabola()
    if name == "constant":
        return constant(p["value"])
    if name == "neg_log":
        return Func1D(value=lambda t: -np.log(t), derivative=lambda t: -1.0 / t, label="-ln(t)")
    if name == "linear":
        a = float(p.get("alpha", 1.0))
        return Func1D(value=lambda t: a * (1.0 - t), derivative=lambda t: np.full_like(t, -a),
                      antiderivative=lambda t: a * (t - t ** 2 / 2.0), label=f"{a:g}*(1-t)")
    if name == "gpd_inverse_survival":
        return _gpd_inverse_survival(float(p["alpha"]), float(p["sigma"]))
    if name == "truncated_power":
        return _truncated_power(float(p["c"]), float(p["s"]), float(p.get("p", 2.0)))
    raise KeyError(f"unknown named function {name!r}")


# ------------------------------------------------------------ K generators


@dataclass(frozen=True, eq=False)
class KGenerator:
    """Distribution ``K`` on ``[0, inf)`` given by survival, density and
    inverse survival functions."""

    survival: Func1D
    density: Func1D
    inverse_survival: Func1D
    support_end: float = math.inf
    label: str = ""

    def __post_init__(self):
        s0 = float(self.survival(0.0))
        if abs(s0 - 1.0) > 1e-12:
            raise FamilyDomainError(f"{self.label}: Kbar(0) = {s0!r}, must be 1")
        t = self.probes()
        sv = self.survival(t)
        if np.any(np.diff(sv) > 1e-15):
            raise FamilyDomainError(f"{self.label}: Kbar is not non-increasing")
        x = np.linspace(0.01, 1.0, 100)
        back = self.survival(self.inverse_survival(x))
        if np.max(np.abs(back - x)) > 1e-9:
            raise FamilyDomainError(f"{self.label}: Kbar(Kbar^-1(x)) != x")

    def probes(self, n: int = 400) -> np.ndarray:
        end = self.support_end if math.isfinite(self.support_end) else 1e6
        t = np.concatenate([[0.0], np.logspace(-8, math.log10(end), n)])
        return t[t < self.support_end] if math.isfinite(self.support_end) else t

    def median(self) -> float:
        return float(self.inverse_survival(0.5))


def gpd_k(alpha: float, sigma: float = 1.0) -> KGenerator:
    """``Kbar(x) = (1 + x/sigma)^(-1/alpha)``; ``sigma = 1`` gives
    Cuadras-Auge, ``alpha = 1`` gives B11."""
    a, s = float(alpha), float(sigma)
    return KGenerator(
        survival=Func1D(lambda x: (1.0 + x / s) ** (-1.0 / a), domain=(0.0, math.inf)),
        density=Func1D(lambda x: (1.0 / (a * s)) * (1.0 + x / s) ** (-1.0 / a - 1.0),
                       domain=(0.0, math.inf)),
        inverse_survival=_gpd_inverse_survival(a, s),
        label=f"gpd(alpha={a:g}, sigma={s:g})",
    )


def uniform_k(alpha: float) -> KGenerator:
    a = float(alpha)
    return KGenerator(
        survival=Func1D(lambda x: np.clip(1.0 - x / a, 0.0, 1.0), domain=(0.0, math.inf)),
        density=Func1D(lambda x: np.where(x < a, 1.0 / a, 0.0), domain=(0.0, math.inf)),
        inverse_survival=named_function("linear", {"alpha": a}),
        support_end=a,
        label=f"uniform(0, {a:g})",
    )


def exponential_k() -> KGenerator:
    return KGenerator(
        survival=Func1D(lambda x: np.exp(-x), domain=(0.0, math.inf)),
        density=Func1D(lambda x: np.exp(-x), domain=(0.0, math.inf)),
        inverse_survival=named_function("neg_log"),
        label="exponential(1)",
    )


@dataclass(frozen=True)
class HazardReport:
    passed: bool
    min_margin: float
    witness: Optional[float]
    n_probes: int
    method: str = "hazard"

    @property
    def verdict(self) -> bool:
        return self.passed

    def to_dict(self) -> dict:
        return {"verdict": self.passed, "method": self.method,
                "min_margin": self.min_margin, "witness_t": self.witness,
                "n_probes": self.n_probes}


def check_hazard(K: KGenerator, probes=None, tol: float = 1e-9) -> HazardReport:
    """Check ``k(t)/Kbar(t) >= 1/(1+t)`` wherever ``0 < K(t) < 1``."""
    t = K.probes() if probes is None else np.asarray(probes, dtype=float)
    sv = K.survival(t)
    keep = (sv > 0) & (sv < 1 + 1e-15)
    keep &= t < K.support_end
    t, sv = t[keep], sv[keep]
    with np.errstate(all="ignore"):
        margin = K.density(t) / sv - 1.0 / (1.0 + t)
    margin = np.where(np.isfinite(margin), margin, -np.inf)
    i = int(np.argmin(margin))
    ok = bool(margin[i] >= -tol)
    return HazardReport(ok, float(margin[i]), None if ok else float(t[i]), int(t.size))


def is_admissible(K: KGenerator, tol: float = 1e-12) -> tuple[bool, Optional[float]]:
    """Necessary condition ``Kbar(x) <= 1/(1+x)`` on the probe grid."""
    t = K.probes()
    gap = K.survival(t) - 1.0 / (1.0 + t)
    i = int(np.argmax(gap))
    return (bool(gap[i] <= tol), None if gap[i] <= tol else float(t[i]))


def make_k_copula(K: KGenerator, label: Optional[str] = None) -> CopulaSpec:
    """``theta = Kbar^{-1}``, ``phi = id``, validated through the hazard
    condition.  A failing hazard check yields a spec marked invalid."""
    inv = K.inverse_survival
    if inv.derivative is None:
        theta = Func1D(value=inv.value,
                       derivative=lambda u: -1.0 / K.density(inv(u)),
                       label=inv.label)
    else:
        theta = inv
    spec = CopulaSpec(theta=theta, phi=identity(), label=label or f"K-copula[{K.label}]")
    return spec.with_report(check_hazard(K))


def rho_k(K: KGenerator, cfg: QuadratureConfig | None = None) -> float:
    """``3 int_0^inf Kbar(t)^4 dt``.

    The half line is cut where the bound ``int_T^inf (1+x)^-4 dx`` (valid for
    admissible ``K``) drops below a tenth of the absolute tolerance, and the
    range is split geometrically around the median of ``K``.
    """
    cfg = cfg or DEFAULT_QUAD
    if math.isfinite(K.support_end):
        end = K.support_end
    else:
        end = (30.0 / cfg.abs_tol) ** (1.0 / 3.0) - 1.0
    scale = K.median()
    cuts = [scale * 2.0 ** j for j in range(-30, 200) if scale * 2.0 ** j < end]
    edges = [0.0] + cuts + [end]
    f4 = lambda t: K.survival(t) ** 4  # noqa: E731
    total = sum(integrate(f4, a, b, cfg) for a, b in zip(edges[:-1], edges[1:]))
    return 3.0 * total


def lambda_k(K: KGenerator) -> float:
    """``1 / k(0)`` clipped to ``[0, 1]``; falls back to the generic
    tail formula when ``k(0)`` is not positive."""
    k0 = float(K.density(0.0))
    if k0 > 0 and math.isfinite(k0):
        return min(max(1.0 / k0, 0.0), 1.0)
    from .measures import upper_tail_dep
    return upper_tail_dep(make_k_copula(K))


def gpd_from_rho_lambda(rho: float, lam: float) -> tuple[float, float]:
    """GPD parameters reaching a target ``(rho, lambda)`` with
    ``rho <= lambda < 4 rho / 3``."""
    if not 0 < rho < 1:
        raise FamilyDomainError(f"rho={rho!r} must lie in (0, 1)")
    if not 0 < lam < 1:
        raise FamilyDomainError(f"lambda={lam!r} must lie in (0, 1)")
    if not rho <= lam:
        raise FamilyDomainError(f"need rho <= lambda, got rho={rho!r} > lambda={lam!r}")
    if not lam < 4 * rho / 3:
        raise FamilyDomainError(
            f"need lambda < 4*rho/3, got lambda={lam!r} >= {4 * rho / 3!r}")
    alpha = 4.0 - 3.0 * lam / rho
    sigma = rho * lam / (4.0 * rho - 3.0 * lam)
    return alpha, sigma


# --------------------------------------------------------- named families


@dataclass(frozen=True)
class FamilyParams:
    tag: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.tag not in FAMILY_TAGS + ("custom",):
            raise FamilyDomainError(f"unknown family {self.tag!r}; known: {', '.join(FAMILY_TAGS)}")

    def get(self, name: str, default=None) -> float:
        if name not in self.params and default is None:
            raise FamilyDomainError(f"family {self.tag!r} needs parameter {name!r}")
        return float(self.params.get(name, default))


_FAMILY_INFO = {
    "fgm": {"params": {"theta": "[-1, 1]"}, "theta": "theta (constant)", "phi": "t*(1-t)"},
    "constant-theta": {"params": {"theta": "admissible for phi", "phi": "expression"},
                       "theta": "theta (constant)", "phi": "user expression"},
    "ca": {"params": {"alpha": "[0, 1]"}, "theta": "t^-alpha - 1", "phi": "t",
           "rho": "3*alpha/(4-alpha)", "lambda": "alpha"},
    "b11": {"params": {"sigma": "(0, 1]"}, "theta": "sigma*(1/t - 1)", "phi": "t",
            "rho": "sigma", "lambda": "sigma"},
    "gpd": {"params": {"alpha": "(0, 1]", "sigma": "alpha*sigma in (0, 1]"},
            "theta": "sigma*(t^-alpha - 1)", "phi": "t",
            "rho": "3*alpha*sigma/(4-alpha)", "lambda": "alpha*sigma"},
    "uniform-k": {"params": {"alpha": "(0, 1]"}, "theta": "alpha*(1-t)", "phi": "t",
                  "rho": "3*alpha/5", "lambda": "alpha"},
    "exponential-k": {"params": {}, "theta": "-ln(t)", "phi": "t", "rho": "3/4", "lambda": "1"},
    "durante-f": {"params": {"f": "expression, f(1)=1, f non-decreasing, f(t)/t non-increasing"},
                  "theta": "f(t)/t - 1", "phi": "t"},
}

# scalar parameter driving each fit-able family and its admissible interval
_FIT_PARAM = {"fgm": ("theta", -1.0, 1.0), "ca": ("alpha", 0.0, 1.0),
              "b11": ("sigma", 1e-12, 1.0), "uniform-k": ("alpha", 1e-12, 1.0)}


def family_info(tag: str) -> dict:
    if tag not in _FAMILY_INFO:
        raise FamilyDomainError(f"unknown family {tag!r}")
    return {"family": tag, **_FAMILY_INFO[tag]}


def _in(x: float, lo: float, hi: float, lo_open=False, name="parameter", tag="") -> None:
    ok = (x > lo if lo_open else x >= lo) and x <= hi
    if not ok or math.isnan(x):
        bracket = "(" if lo_open else "["
        raise FamilyDomainError(f"{tag}: {name}={x!r} outside {bracket}{lo:g}, {hi:g}]")


def _expr_func(src) -> Func1D:
    if isinstance(src, Func1D):
        return src
    return from_expr(src)


def constant_theta_range(phi: Func1D, n: int = 1024) -> tuple[float, float]:
    """Interval of constants ``theta`` admissible with ``phi`` (grid
    estimate of ``theta phi'(u) phi'(v) >= -1`` over ``u <= v``)."""
    x = np.linspace(1e-4, 1 - 1e-4, n)
    d = phi.d(x)
    prod = np.outer(d, d)[np.triu_indices(n)]
    lo = -1.0 / prod.max() if prod.max() > 0 else -math.inf
    hi = -1.0 / prod.min() if prod.min() < 0 else math.inf
    return lo, hi


def make_named(params: FamilyParams) -> CopulaSpec:
    """Validated spec for a named family; raises :class:`FamilyDomainError`
    for out-of-domain parameters and :class:`InvalidSpecError` when an
    expression-based member fails validation."""
    tag, p = params.tag, params
    meta = {"family": tag, **params.params}
    if tag == "fgm":
        th = p.get("theta")
        _in(th, -1.0, 1.0, name="theta", tag=tag)
        spec = CopulaSpec(constant(th), parabola(), label=f"fgm(theta={th:g})")
        return _with_meta(certify(spec), meta)
    if tag == "constant-theta":
        th = p.get("theta")
        phi = _expr_func(params.params.get("phi", "t*(1-t)"))
        spec = CopulaSpec(constant(th), phi, label=f"constant-theta({th:g}, {phi.label})")
        return _with_meta(certify(spec), meta)
    if tag == "ca":
        a = p.get("alpha")
        _in(a, 0.0, 1.0, name="alpha", tag=tag)
        if a == 0.0:
            return _with_meta(certify(CopulaSpec(constant(0.0), identity(), label="ca(alpha=0)")),
                              meta)
        return _with_meta(make_k_copula(gpd_k(a, 1.0), label=f"ca(alpha={a:g})"), meta)
    if tag == "b11":
        s = p.get("sigma")
        _in(s, 0.0, 1.0, lo_open=True, name="sigma", tag=tag)
        return _with_meta(make_k_copula(gpd_k(1.0, s), label=f"b11(sigma={s:g})"), meta)
    if tag == "gpd":
        a, s = p.get("alpha"), p.get("sigma")
        _in(a, 0.0, 1.0, lo_open=True, name="alpha", tag=tag)
        _in(a * s, 0.0, 1.0, lo_open=True, name="alpha*sigma", tag=tag)
        return _with_meta(make_k_copula(gpd_k(a, s), label=f"gpd(alpha={a:g}, sigma={s:g})"), meta)
    if tag == "uniform-k":
        a = p.get("alpha")
        _in(a, 0.0, 1.0, lo_open=True, name="alpha", tag=tag)
        return _with_meta(make_k_copula(uniform_k(a), label=f"uniform-k(alpha={a:g})"), meta)
    if tag == "exponential-k":
        return _with_meta(make_k_copula(exponential_k(), label="exponential-k"), meta)
    if tag == "durante-f":
        f = params.params.get("f")
        if f is None:
            raise FamilyDomainError("durante-f needs an expression parameter 'f'")
        f_expr = exprlang.parse(f) if isinstance(f, str) else f
        theta_expr = exprlang.Sub(exprlang.Div(f_expr, exprlang.Var()), exprlang.Num(1.0))
        spec = CopulaSpec(from_expr(theta_expr), identity(),
                          label=f"durante(f={exprlang.to_string(f_expr)})")
        return _with_meta(certify(spec), meta)
    # custom
    theta = _expr_func(params.params["theta"])
    phi = _expr_func(params.params["phi"])
    spec = CopulaSpec(theta, phi, label=params.params.get("label") or f"custom({theta.label}, {phi.label})")
    return _with_meta(certify(spec), {"family": "custom"})


def _fields(spec: CopulaSpec) -> dict:
    return {"theta": spec.theta, "phi": spec.phi, "label": spec.label,
            "status": spec.status, "report": spec.report}


def _with_meta(spec: CopulaSpec, meta: dict) -> CopulaSpec:
    return CopulaSpec(**_fields(spec), family=meta)


# ----------------------------------------------------------------- fitting


@dataclass
class FitResult:
    family: str
    param: str
    value: float
    rho_hat: float
    n: int
    rho_range: tuple[float, float]

    def to_dict(self) -> dict:
        return {"family": self.family, self.param: self.value, "rho_hat": self.rho_hat,
                "n": self.n, "rho_range": list(self.rho_range)}


def _fit_setup(template: FamilyParams):
    from .measures import spearman_rho

    tag = template.tag
    if tag == "constant-theta":
        phi = _expr_func(template.params.get("phi", "t*(1-t)"))
        lo, hi = constant_theta_range(phi)
        lo, hi = lo * (1 - 1e-6), hi * (1 - 1e-6)

        def build(x):
            return make_named(FamilyParams(tag, {**template.params, "theta": x, "phi": phi}))

        return "theta", lo, hi, lambda x: spearman_rho(build(x))
    if tag not in _FIT_PARAM:
        raise FamilyDomainError(
            f"family {tag!r} has no scalar parameter monotone in rho; "
            f"fit-able: {', '.join(list(_FIT_PARAM) + ['constant-theta'])}")
    name, lo, hi = _FIT_PARAM[tag]

    def rho_of(x):
        return spearman_rho(make_named(FamilyParams(tag, {**template.params, name: x})))

    return name, lo, hi, rho_of


def invert_rho(rho: float, template: FamilyParams, tol: float = 1e-10) -> tuple[str, float, tuple]:
    """Parameter of ``template``'s family whose Spearman's rho equals ``rho``."""
    name, lo, hi, rho_of = _fit_setup(template)
    r_lo, r_hi = rho_of(lo), rho_of(hi)
    if not r_lo - 1e-12 <= rho <= r_hi + 1e-12:
        raise FamilyDomainError(
            f"rho={rho:.6g} is outside the attainable range [{r_lo:.6g}, {r_hi:.6g}] "
            f"of family {template.tag!r}")
    x = find_root_monotone(rho_of, lo, hi, rho, tol=tol)
    return name, x, (r_lo, r_hi)


def fit_rho_inversion(data, template: FamilyParams) -> FitResult:
    """Method-of-moments fit: invert the family's rho map at the sample
    Spearman correlation of ``data`` (an ``(n, 2)`` array-like)."""
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("data must be a sequence of (x, y) pairs")
    if arr.shape[0] < 30:
        raise ValueError(f"need at least 30 pairs, got {arr.shape[0]}")
    rho_hat = float(stats.spearmanr(arr[:, 0], arr[:, 1])[0])
    name, x, rng = invert_rho(rho_hat, template)
    return FitResult(template.tag, name, x, rho_hat, int(arr.shape[0]), rng)
