"""Positive-dependence certification (PQD, LTD, RTI, LCSD, RCSI).

Each property is decided twice: through the generator characterisation
(sign of theta, sign of phi on [0, v*], monotonicity of phi/u, theta phi/u
or their (1-u) analogues) and through the copula-level definition on a
grid.  Disagreement is reported as ``"inconclusive"`` with a witness.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .copula import ContractError, CopulaSpec, _require_valid, cdf, endpoint_vstar

__all__ = [
    "DependenceGrid", "Verdict", "DependenceReport", "check_pqd", "check_ltd", "check_rti",
    "check_lcsd", "check_rcsi", "dependence_report", "monotone_direction", "ratio_functions",
    "corner_product", "phi_sign",
]

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


@dataclass(frozen=True)
class DependenceGrid:
    n_1d: int = 1024
    n_2d: int = 129
    n_rect: int = 2000
    tol: float = 1e-9
    delta: float = 1e-6
    seed: int = 20240601

    def to_dict(self) -> dict:
        return {"n_1d": self.n_1d, "n_2d": self.n_2d, "n_rect": self.n_rect,
                "tol": self.tol, "delta": self.delta, "seed": self.seed}


DEFAULT_GRID = DependenceGrid()


@dataclass(frozen=True)
class Verdict:
    status: str
    witness: Optional[tuple] = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_dict(self) -> dict:
        w = None if self.witness is None else [float(x) for x in self.witness]
        return {"verdict": self.status, "witness": w, "detail": self.detail}


# ------------------------------------------------------------------ helpers


def _vstar(spec: CopulaSpec) -> Optional[float]:
    try:
        return endpoint_vstar(spec)
    except ContractError:
        return None  # theta == 0: independence copula


def _grid_1d(hi: float, g: DependenceGrid) -> np.ndarray:
    hi = min(hi, 1.0)
    lin = np.linspace(g.delta, hi, g.n_1d)
    logs = np.logspace(np.log10(g.delta), np.log10(hi), g.n_1d // 4)
    return np.unique(np.concatenate([lin, logs]))


def _grid_2d(g: DependenceGrid) -> np.ndarray:
    return np.linspace(1e-3, 1 - 1e-3, g.n_2d)


def monotone_direction(y, tol: float = 1e-9) -> set:
    """Subset of ``{"nonincreasing", "nondecreasing"}`` that ``y`` satisfies
    up to a relative tolerance on successive differences."""
    y = np.asarray(y, dtype=float)
    if y.size < 2:
        return {"nonincreasing", "nondecreasing"}
    d = np.diff(y)
    scale = tol * np.maximum(1.0, np.maximum(np.abs(y[:-1]), np.abs(y[1:])))
    out = set()
    if np.all(d <= scale):
        out.add("nonincreasing")
    if np.all(d >= -scale):
        out.add("nondecreasing")
    return out


def _first_violation(y, direction: str, tol: float) -> int:
    d = np.diff(np.asarray(y, dtype=float))
    scale = tol * np.maximum(1.0, np.maximum(np.abs(y[:-1]), np.abs(y[1:])))
    bad = d > scale if direction == "nonincreasing" else d < -scale
    return int(np.argmax(bad))


def phi_sign(spec: CopulaSpec, hi: float, g: DependenceGrid = DEFAULT_GRID) -> int:
    """+1 or -1 when phi keeps one sign on ``(0, hi]`` (isolated zeros
    allowed), 0 for mixed signs."""
    x = _grid_1d(hi, g)
    ph = np.asarray(spec.phi(x))
    nz = np.abs(ph) > 1e-14
    if not nz.any():
        return 1
    signs = np.sign(ph[nz])
    if np.all(signs > 0):
        return 1
    if np.all(signs < 0):
        return -1
    return 0


def ratio_functions(spec: CopulaSpec, kind: str, x):
    """``(phi/u, theta phi/u)`` for ``kind="ltd"``, ``(phi/(1-u), theta phi/(1-u))``
    for ``kind="rti"``."""
    x = np.asarray(x, dtype=float)
    den = x if kind == "ltd" else 1.0 - x
    with np.errstate(all="ignore"):
        ph = spec.phi(x)
        return ph / den, spec.theta(x) * ph / den


def _theta_nonneg(spec: CopulaSpec, g: DependenceGrid):
    x = _grid_1d(1.0 - g.delta, g)
    th = np.asarray(spec.theta(x))
    if np.all(th >= -g.tol):
        return True, None
    i = int(np.argmin(th))
    return False, (float(x[i]),)


def corner_product(spec: CopulaSpec, u1, u2, v1, v2):
    """``[theta phi/u](v1) - [theta phi/u](v2)`` times ``[phi/u](u1) - [phi/u](u2)``."""
    r1u1, _ = ratio_functions(spec, "ltd", u1)
    r1u2, _ = ratio_functions(spec, "ltd", u2)
    _, r2v1 = ratio_functions(spec, "ltd", v1)
    _, r2v2 = ratio_functions(spec, "ltd", v2)
    return (r2v1 - r2v2) * (r1u1 - r1u2)


def _combine(char_ok: bool, def_ok: bool, char_w, def_w, what: str) -> Verdict:
    if char_ok and def_ok:
        return Verdict(PASS)
    if not char_ok and not def_ok:
        return Verdict(FAIL, def_w or char_w, f"{what}: characterisation and definition both fail")
    if char_ok:
        return Verdict(INCONCLUSIVE, def_w,
                       f"{what}: characterisation holds but definitional check fails")
    return Verdict(INCONCLUSIVE, char_w,
                   f"{what}: characterisation fails but definitional check holds")


# ------------------------------------------------------------------- checks


def check_pqd(spec: CopulaSpec, grid: DependenceGrid = DEFAULT_GRID) -> Verdict:
    """PQD: theta >= 0 with phi of constant sign on [0, v*], cross-checked
    against ``C(u,v) >= uv`` on a grid."""
    _require_valid(spec)
    vs = _vstar(spec)
    if vs is None:
        return Verdict(PASS, detail="independence copula")
    th_ok, th_w = _theta_nonneg(spec, grid)
    sign = phi_sign(spec, vs, grid)
    char_ok = th_ok and sign != 0
    char_w = th_w if not th_ok else (None if sign else (vs,))
    x = _grid_2d(grid)
    U, V = np.meshgrid(x, x, indexing="ij")
    gap = cdf(spec, U, V) - U * V
    k = int(np.argmin(gap))
    def_ok = bool(gap.ravel()[k] >= -1e-12)
    def_w = (float(U.ravel()[k]), float(V.ravel()[k]))
    return _combine(char_ok, def_ok, char_w, def_w, "PQD")


def _ratio_char(spec: CopulaSpec, kind: str, grid: DependenceGrid):
    vs = _vstar(spec)
    th_ok, th_w = _theta_nonneg(spec, grid)
    if not th_ok:
        return False, th_w
    hi = vs if kind == "ltd" else min(vs, 1.0 - 1e-4)
    x = _grid_1d(hi, grid)
    r1, r2 = ratio_functions(spec, kind, x)
    d1 = monotone_direction(r1, grid.tol)
    d2 = monotone_direction(r2, grid.tol)
    d1 |= _refined_direction(spec, kind, x, r1, 0, d1, grid)
    d2 |= _refined_direction(spec, kind, x, r2, 1, d2, grid)
    if d1 & d2:
        return True, None
    # witness: first point where the second ratio breaks the first ratio's direction
    want = next(iter(d1)) if d1 else "nonincreasing"
    r = r2 if d1 else r1
    i = _first_violation(r, want, grid.tol)
    return False, (float(x[i]),)


def _refined_direction(spec, kind, x, r, which, found, grid) -> set:
    """Re-examine near-miss monotonicity on a finer local grid; returns the
    directions confirmed after refinement."""
    out = set()
    for direction in ("nonincreasing", "nondecreasing"):
        if direction in found:
            continue
        d = np.diff(r)
        bad = d > 0 if direction == "nonincreasing" else d < 0
        scale = np.maximum(1.0, np.abs(r[:-1]))
        if not np.all(np.abs(d[bad]) <= 1e3 * grid.tol * scale[bad]):
            continue
        ok = True
        for i in np.flatnonzero(bad)[:32]:
            lo, hi = x[max(i - 1, 0)], x[min(i + 2, len(x) - 1)]
            fine = np.linspace(lo, hi, 33)
            rf = ratio_functions(spec, kind, fine)[which]
            if direction not in monotone_direction(rf, grid.tol):
                ok = False
                break
        if ok:
            out.add(direction)
    return out


def _definitional_tail(spec: CopulaSpec, kind: str, grid: DependenceGrid):
    x = _grid_2d(grid)
    u = np.concatenate([[0.0], x]) if kind == "rti" else x
    U, V = np.meshgrid(u, x, indexing="ij")
    C = cdf(spec, U, V)
    if kind == "ltd":
        ratio = C / U
    else:
        ratio = (V - C) / (1.0 - U)
    d = np.diff(ratio, axis=0)
    scale = 1e-10 * np.maximum(1.0, np.abs(ratio[:-1]))
    k = int(np.argmax(d - scale))
    i, j = divmod(k, d.shape[1])
    ok = bool(d[i, j] <= scale[i, j])
    return ok, (float(U[i + 1, j]), float(V[i + 1, j]))


def check_ltd(spec: CopulaSpec, grid: DependenceGrid = DEFAULT_GRID) -> Verdict:
    """LTD: theta >= 0 and ``phi/u``, ``theta phi/u`` monotone in the same
    direction on [0, v*]; cross-checked with ``C(u,v)/u`` non-increasing."""
    _require_valid(spec)
    if _vstar(spec) is None:
        return Verdict(PASS, detail="independence copula")
    char_ok, char_w = _ratio_char(spec, "ltd", grid)
    def_ok, def_w = _definitional_tail(spec, "ltd", grid)
    return _combine(char_ok, def_ok, char_w, def_w, "LTD")


def check_rti(spec: CopulaSpec, grid: DependenceGrid = DEFAULT_GRID) -> Verdict:
    """RTI: as LTD with ``1 - u`` denominators; cross-checked with
    ``(v - C(u,v))/(1-u)`` non-increasing."""
    _require_valid(spec)
    if _vstar(spec) is None:
        return Verdict(PASS, detail="independence copula")
    char_ok, char_w = _ratio_char(spec, "rti", grid)
    def_ok, def_w = _definitional_tail(spec, "rti", grid)
    return _combine(char_ok, def_ok, char_w, def_w, "RTI")


def _tp2_min(fn, grid: DependenceGrid):
    rng = np.random.default_rng(grid.seed)
    a = np.sort(rng.random((grid.n_rect, 2)), axis=1)
    b = np.sort(rng.random((grid.n_rect, 2)), axis=1)
    u1, u2, v1, v2 = a[:, 0], a[:, 1], b[:, 0], b[:, 1]
    val = fn(u1, v1) * fn(u2, v2) - fn(u1, v2) * fn(u2, v1)
    k = int(np.argmin(val))
    return float(val[k]), (float(u1[k]), float(u2[k]), float(v1[k]), float(v2[k]))


def _with_tp2(base: Verdict, fn, grid: DependenceGrid, what: str) -> Verdict:
    worst, w = _tp2_min(fn, grid)
    tp2_ok = worst >= -1e-12
    if base.status == PASS and not tp2_ok:
        return Verdict(INCONCLUSIVE, w, f"{what}: total positivity violated ({worst:.3g})")
    if base.status == FAIL and not tp2_ok:
        return Verdict(FAIL, w, f"{what}: total positivity violated ({worst:.3g})")
    return base


def check_lcsd(spec: CopulaSpec, grid: DependenceGrid = DEFAULT_GRID,
               ltd: Optional[Verdict] = None) -> Verdict:
    """LCSD coincides with LTD in this family; random-rectangle TP2 check of
    ``C`` guards the equivalence."""
    base = ltd or check_ltd(spec, grid)
    return _with_tp2(base, lambda u, v: cdf(spec, u, v), grid, "LCSD")


def check_rcsi(spec: CopulaSpec, grid: DependenceGrid = DEFAULT_GRID,
               rti: Optional[Verdict] = None) -> Verdict:
    """RCSI coincides with RTI; cross-checked by TP2 of the survival copula
    ``u + v - 1 + C(1-u, 1-v)``."""
    base = rti or check_rti(spec, grid)

    def surv(u, v):
        return u + v - 1.0 + cdf(spec, 1.0 - u, 1.0 - v)

    return _with_tp2(base, surv, grid, "RCSI")


@dataclass
class DependenceReport:
    pqd: Verdict
    ltd: Verdict
    rti: Verdict
    lcsd: Verdict
    rcsi: Verdict
    vstar: Optional[float]
    phi_sign_on_support: str
    grid: DependenceGrid = field(default_factory=DependenceGrid)

    @property
    def hierarchy_consistent(self) -> bool:
        """lcsd => ltd => pqd and rcsi => rti => pqd among decided verdicts."""
        def implies(a: Verdict, b: Verdict) -> bool:
            return not (a.status == PASS and b.status == FAIL)
        return (implies(self.lcsd, self.ltd) and implies(self.ltd, self.pqd)
                and implies(self.rcsi, self.rti) and implies(self.rti, self.pqd))

    def verdicts(self) -> dict:
        return {k: getattr(self, k).status for k in ("pqd", "ltd", "rti", "lcsd", "rcsi")}

    def to_dict(self) -> dict:
        return {
            **{k: getattr(self, k).to_dict() for k in ("pqd", "ltd", "rti", "lcsd", "rcsi")},
            "vstar": self.vstar,
            "phi_sign_on_support": self.phi_sign_on_support,
            "hierarchy_consistent": self.hierarchy_consistent,
            "grid": self.grid.to_dict(),
        }


def dependence_report(spec: CopulaSpec, grid: DependenceGrid = DEFAULT_GRID) -> DependenceReport:
    _require_valid(spec)
    vs = _vstar(spec)
    ltd = check_ltd(spec, grid)
    rti = check_rti(spec, grid)
    sign = phi_sign(spec, vs if vs is not None else 1.0, grid)
    return DependenceReport(
        pqd=check_pqd(spec, grid),
        ltd=ltd,
        rti=rti,
        lcsd=check_lcsd(spec, grid, ltd=ltd),
        rcsi=check_rcsi(spec, grid, rti=rti),
        vstar=vs,
        phi_sign_on_support={1: "+1", -1: "-1", 0: "mixed"}[sign],
        grid=grid,
    )
