import math
import threading

import numpy as np
import pytest

from fgmx.families import parabola
from fgmx.funcspace import (BracketError, Func1D, FuncDomainError, QuadratureConfig,
                            QuadratureError, deriv, find_root_monotone, find_root_monotone_vec,
                            from_expr, identity, integrate, left_limit, one_sided_deriv)


def test_deriv_examples():
    assert deriv(parabola(), 0.5) == 0.0
    theta = from_expr("t^-0.5 - 1")
    assert left_limit(theta.d, 1.0) == pytest.approx(-0.5, abs=1e-12)
    assert one_sided_deriv(Func1D(value=theta.value), 1.0) == pytest.approx(-0.5, abs=1e-8)
    assert all(deriv(identity(), t) == 1.0 for t in (0.0, 0.3, 1.0))


def test_numeric_derivative_is_fourth_order():
    f = Func1D(value=lambda t: np.sin(3 * t))
    for t in (0.2, 0.5, 0.8):
        assert deriv(f, t) == pytest.approx(3 * math.cos(3 * t), abs=1e-9)


def test_numeric_derivative_refuses_endpoints():
    f = Func1D(value=lambda t: t ** 2)
    with pytest.raises(FuncDomainError):
        deriv(f, 1.0)
    with pytest.raises(FuncDomainError):
        deriv(f, 0.0)


def test_integrate_examples():
    assert integrate(lambda t: t, 0.0, 1.0) == pytest.approx(0.5, abs=1e-10)
    assert integrate(lambda t: (1 + t) ** -4, 0.0, math.inf) == pytest.approx(1 / 3, abs=1e-9)
    assert integrate(lambda t: t ** -0.5, 0.0, 1.0) == pytest.approx(2.0, abs=1e-8)


def test_integrate_reports_failure_with_estimate():
    cfg = QuadratureConfig(abs_tol=1e-14, rel_tol=1e-14, max_depth=1)
    with pytest.raises(QuadratureError) as info:
        integrate(lambda t: math.sin(1.0 / t) / t, 1e-6, 1.0, cfg)
    assert math.isfinite(info.value.estimate)
    assert info.value.error_bound > 0


def test_quadrature_config_from_env(monkeypatch):
    monkeypatch.setenv("FGMX_QUAD_TOL", "1e-7")
    cfg = QuadratureConfig.from_env()
    assert cfg.abs_tol == cfg.rel_tol == 1e-7
    monkeypatch.delenv("FGMX_QUAD_TOL")
    assert QuadratureConfig.from_env().abs_tol == 1e-10
    with pytest.raises(ValueError):
        QuadratureConfig(abs_tol=0.0)


def test_root_examples():
    assert find_root_monotone(lambda t: t, 0, 1, 0.3) == pytest.approx(0.3, abs=1e-12)
    assert find_root_monotone(lambda t: t * t, 0, 1, 0.25) == pytest.approx(0.5, abs=1e-12)
    jump = lambda t: 0.4 * t / 0.5 if t < 0.5 else 0.7 + 0.3 * (t - 0.5) / 0.5  # noqa: E731
    assert find_root_monotone(jump, 0, 1, 0.6) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(BracketError):
        find_root_monotone(lambda t: t, 0, 1, 1.5)


def test_vector_root():
    target = np.linspace(0.01, 0.99, 50)
    out = find_root_monotone_vec(lambda t: t ** 3, 0.0, 1.0, target)
    assert np.allclose(out, np.cbrt(target), atol=1e-11)


def test_analytic_derivatives_match_central_difference():
    probes = np.linspace(0.01, 0.99, 100)
    for src in ("t*(1-t)", "t^-0.5 - 1", "ln(1+t)*(1-t)", "exp(-t)*t"):
        f = from_expr(src)
        numeric = Func1D(value=f.value)
        assert np.allclose(f.d(probes), numeric.d(probes), rtol=1e-6, atol=1e-9), src


def test_numeric_antiderivative():
    f = from_expr("t*(1-t)*exp(t)")
    assert f.antiderivative is None
    exact = lambda t: np.exp(t) * (-t * t + 3 * t - 3) + 3  # noqa: E731
    x = np.linspace(0, 1, 37)
    assert np.allclose(f.integral(x), exact(x), atol=1e-12)
    # derivative of the numeric antiderivative returns the function
    h = 1e-5
    mid = np.linspace(0.05, 0.95, 100)
    slope = (f.integral(mid + h) - f.integral(mid - h)) / (2 * h)
    assert np.allclose(slope, f(mid), rtol=1e-6)


def test_antiderivative_built_once_under_threads():
    calls = []

    def value(t):
        calls.append(1)
        return np.asarray(t, dtype=float) ** 2

    f = Func1D(value=value)
    threads = [threading.Thread(target=f.integral, args=(0.5,)) for _ in range(8)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    n_after = len(calls)
    assert f.integral(1.0) == pytest.approx(1 / 3, abs=1e-12)
    # one build (two vector evaluations) plus the final lookup does not evaluate f
    assert n_after == 2 and len(calls) == 2


def test_quadrature_linearity():
    rng = np.random.default_rng(5)
    for _ in range(20):
        a, b, c1, c2 = rng.normal(size=4)
        f = lambda t: np.exp(c1 * t)  # noqa: E731
        g = lambda t: np.cos(c2 * t)  # noqa: E731
        lhs = integrate(lambda t: a * f(t) + b * g(t), 0.0, 1.0)
        rhs = a * integrate(f, 0.0, 1.0) + b * integrate(g, 0.0, 1.0)
        assert abs(lhs - rhs) <= 10 * 1e-10 * max(1.0, abs(lhs))


def test_fundamental_theorem():
    for src in ("t*(1-t)^2", "exp(t)*ln(2+t)", "sqrt(1+t)"):
        f = from_expr(src)
        assert integrate(f.d, 0.0, 1.0) == pytest.approx(float(f(1.0) - f(0.0)), abs=1e-6)
