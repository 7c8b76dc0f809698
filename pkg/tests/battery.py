"""Shared spec battery: named members with known closed forms plus
randomised admissible specs."""
from __future__ import annotations

import numpy as np

from fgmx.copula import CopulaSpec, certify
from fgmx.families import (FamilyParams, constant_theta_range, make_named, named_function,
                           parabola)
from fgmx.funcspace import Func1D, from_expr, identity

INV_T = FamilyParams("custom", {"theta": "1/t", "phi": "t*(1-t)", "label": "inv-t"})

NAMED = {
    "fgm(0.5)": FamilyParams("fgm", {"theta": 0.5}),
    "fgm(-0.5)": FamilyParams("fgm", {"theta": -0.5}),
    "fgm(1)": FamilyParams("fgm", {"theta": 1.0}),
    "fgm(-1)": FamilyParams("fgm", {"theta": -1.0}),
    "ca(0.3)": FamilyParams("ca", {"alpha": 0.3}),
    "ca(0.5)": FamilyParams("ca", {"alpha": 0.5}),
    "ca(0.9)": FamilyParams("ca", {"alpha": 0.9}),
    "b11(0.3)": FamilyParams("b11", {"sigma": 0.3}),
    "b11(0.5)": FamilyParams("b11", {"sigma": 0.5}),
    "b11(1)": FamilyParams("b11", {"sigma": 1.0}),
    "gpd(0.5,1)": FamilyParams("gpd", {"alpha": 0.5, "sigma": 1.0}),
    "gpd(0.3,2)": FamilyParams("gpd", {"alpha": 0.3, "sigma": 2.0}),
    "gpd(1,0.7)": FamilyParams("gpd", {"alpha": 1.0, "sigma": 0.7}),
    "uniform(0.5)": FamilyParams("uniform-k", {"alpha": 0.5}),
    "uniform(0.8)": FamilyParams("uniform-k", {"alpha": 0.8}),
    "exponential": FamilyParams("exponential-k", {}),
    "durante(2t/(1+t))": FamilyParams("durante-f", {"f": "2*t/(1+t)"}),
    "constant(t(1-t)^2)": FamilyParams("constant-theta", {"theta": 1.0, "phi": "t*(1-t)^2"}),
    "inv-t": INV_T,
}

# K-generated members: every dependence property holds
K_FAMILY_KEYS = ("ca(0.3)", "ca(0.5)", "ca(0.9)", "b11(0.3)", "b11(0.5)", "b11(1)",
                 "gpd(0.5,1)", "gpd(0.3,2)", "gpd(1,0.7)", "uniform(0.5)", "uniform(0.8)")

PHI_POOL = ("t*(1-t)", "t*(1-t)^2", "t^2*(1-t)", "t*(1-t)*(1+t)", "t*(1-t)*exp(t)",
            "ln(1+t)*(1-t)", "t - t^3")


def named(key: str) -> CopulaSpec:
    return make_named(NAMED[key])


def _negated(f: Func1D) -> Func1D:
    return Func1D(value=lambda t: -f(t), derivative=lambda t: -f.d(t), label=f"-({f.label})")


def random_named(rng: np.random.Generator) -> CopulaSpec:
    kind = rng.integers(5)
    if kind == 0:
        return make_named(FamilyParams("fgm", {"theta": rng.uniform(-1, 1)}))
    if kind == 1:
        return make_named(FamilyParams("ca", {"alpha": rng.uniform(0.01, 1)}))
    if kind == 2:
        return make_named(FamilyParams("b11", {"sigma": rng.uniform(0.01, 1)}))
    if kind == 3:
        a = rng.uniform(0.05, 1)
        return make_named(FamilyParams("gpd", {"alpha": a, "sigma": rng.uniform(0.01, 1) / a}))
    return make_named(FamilyParams("uniform-k", {"alpha": rng.uniform(0.01, 1)}))


def random_constant_theta(rng: np.random.Generator, sign=None) -> CopulaSpec:
    phi = from_expr(PHI_POOL[rng.integers(len(PHI_POOL))])
    lo, hi = constant_theta_range(phi)
    lo, hi = max(lo, -50.0) * 0.95, min(hi, 50.0) * 0.95
    if sign == "+":
        lo = 0.0
    theta = rng.uniform(lo, hi)
    if rng.random() < 0.5:
        phi = _negated(phi)
    return certify(CopulaSpec(named_function("constant", {"value": theta}), phi,
                              label=f"constant({theta:.4g}, {phi.label})"))


def random_c_over_t(rng: np.random.Generator) -> CopulaSpec:
    c = rng.uniform(0.01, 1.0)
    phi = parabola() if rng.random() < 0.5 else _negated(parabola())
    return certify(CopulaSpec(from_expr(f"{c!r}/t"), phi, label=f"{c:.4g}/t"))


def random_durante(rng: np.random.Generator) -> CopulaSpec:
    c = rng.uniform(0.01, 3.0)
    return make_named(FamilyParams("durante-f", {"f": f"(1+{c!r})*t/(1+{c!r}*t)"}))


def random_truncated(rng: np.random.Generator) -> CopulaSpec:
    """theta = c max(s - t, 0)^2 with phi = t; v* = s < 1."""
    s = rng.uniform(0.3, 0.9)
    c = rng.uniform(0.05, 0.95) * 3.0 / s ** 2
    theta = named_function("truncated_power", {"c": c, "s": s, "p": 2.0})
    return certify(CopulaSpec(theta, identity(), label=f"truncated({c:.3g}, {s:.3g})"))


_MAKERS = (random_named, random_constant_theta, random_c_over_t, random_durante, random_truncated)


def random_specs(n: int, seed: int) -> list[CopulaSpec]:
    rng = np.random.default_rng(seed)
    return [_MAKERS[i % len(_MAKERS)](rng) for i in range(n)]
