import math

import numpy as np
import pytest

from battery import NAMED
from fgmx.copula import CopulaSpec, InvalidSpecError, cdf, validate
from fgmx.families import (FAMILY_TAGS, FamilyDomainError, FamilyParams, KGenerator,
                           check_hazard, constant_theta_range, exponential_k, family_info,
                           fit_rho_inversion, gpd_from_rho_lambda, gpd_k, invert_rho,
                           is_admissible, lambda_k, make_k_copula, make_named, rho_k, uniform_k)
from fgmx.funcspace import Func1D, from_expr
from fgmx.measures import blomqvist_beta, spearman_rho, upper_tail_dep
from fgmx.sampler import sample


def fam(tag, **p):
    return make_named(FamilyParams(tag, p))


def test_tags():
    assert FAMILY_TAGS == ("fgm", "constant-theta", "ca", "b11", "gpd", "uniform-k",
                           "exponential-k", "durante-f")
    assert family_info("ca")["lambda"] == "alpha"
    with pytest.raises(FamilyDomainError):
        family_info("clayton")
    with pytest.raises(FamilyDomainError):
        FamilyParams("clayton", {})


def test_make_k_copula_examples():
    u = np.linspace(0.05, 0.95, 19)
    ca = make_k_copula(gpd_k(0.5, 1.0))
    assert np.allclose(ca.theta(u), u ** -0.5 - 1, rtol=1e-14)
    b11 = make_k_copula(gpd_k(1.0, 0.5))
    assert np.allclose(b11.theta(u), 0.5 * (1 / u - 1), rtol=1e-14)
    ex = make_k_copula(exponential_k())
    assert np.allclose(ex.theta(u), -np.log(u)) and ex.is_valid


def test_hazard_examples():
    for a, s in [(0.5, 1.0), (1.0, 1.0), (0.4, 2.5), (1.0, 0.3)]:
        assert check_hazard(gpd_k(a, s)).verdict, (a, s)
    bad = check_hazard(gpd_k(0.5, 2.5))
    assert not bad.verdict and bad.witness == 0.0
    assert check_hazard(uniform_k(0.6)).verdict
    with pytest.raises(FamilyDomainError):
        KGenerator(survival=Func1D(lambda x: 0.9 * (1 + x) ** -0.5),
                   density=Func1D(lambda x: 0.45 * (1 + x) ** -1.5),
                   inverse_survival=Func1D(lambda u: (u / 0.9) ** -2 - 1))


def test_failing_hazard_gives_invalid_spec():
    spec = make_k_copula(gpd_k(0.5, 2.5))
    assert not spec.is_valid
    with pytest.raises(Exception):
        cdf(spec, 0.3, 0.3)
    assert not validate(CopulaSpec(spec.theta, spec.phi)).verdict


def test_admissibility_bound():
    assert is_admissible(gpd_k(0.5, 1.0))[0]
    ok, witness = is_admissible(gpd_k(1.0, 1.5))
    assert not ok and witness > 0


def test_rho_k_examples():
    assert rho_k(gpd_k(0.5, 1.0)) == pytest.approx(3 / 7, abs=1e-9)
    assert rho_k(gpd_k(1.0, 0.3)) == pytest.approx(0.3, abs=1e-9)
    assert rho_k(exponential_k()) == pytest.approx(0.75, abs=1e-9)


def test_lambda_k_examples():
    assert lambda_k(gpd_k(0.3, 1.0)) == pytest.approx(0.3)
    assert lambda_k(uniform_k(0.6)) == pytest.approx(0.6)
    assert lambda_k(exponential_k()) == 1.0


@pytest.mark.parametrize("make", [
    lambda x: gpd_k(x, 1.0), lambda x: gpd_k(1.0, x), lambda x: gpd_k(x, 0.9 / x),
    uniform_k,
])
def test_closed_forms_match_machinery(make):
    for x in (0.1, 0.3, 0.5, 0.7, 0.95):
        K = make(x)
        spec = make_k_copula(K)
        assert rho_k(K) == pytest.approx(spearman_rho(spec), abs=1e-6)
        assert lambda_k(K) == pytest.approx(upper_tail_dep(spec), abs=1e-6)


def test_blomqvist_is_median_of_k():
    for K in (gpd_k(0.5, 1.0), gpd_k(0.8, 0.6), uniform_k(0.7), exponential_k()):
        assert blomqvist_beta(make_k_copula(K)) == pytest.approx(K.median(), abs=1e-12)


def test_gpd_from_rho_lambda_examples():
    assert gpd_from_rho_lambda(0.3, 0.3) == pytest.approx((1.0, 0.3), abs=1e-12)
    assert gpd_from_rho_lambda(3 / 7, 0.5) == pytest.approx((0.5, 1.0), abs=1e-12)
    with pytest.raises(FamilyDomainError, match="4\\*rho/3"):
        gpd_from_rho_lambda(0.3, 0.5)
    with pytest.raises(FamilyDomainError, match="rho <= lambda"):
        gpd_from_rho_lambda(0.5, 0.4)


def test_ca_is_weighted_geometric_mean():
    rng = np.random.default_rng(3)
    for a in (0.2, 0.5, 0.9):
        spec = fam("ca", alpha=a)
        u, v = rng.random(500), rng.random(500)
        assert np.allclose(cdf(spec, u, v), np.minimum(u, v) ** a * (u * v) ** (1 - a),
                           atol=1e-12, rtol=0)


def test_b11_is_mixture():
    rng = np.random.default_rng(4)
    for s in (0.1, 0.5, 1.0):
        u, v = rng.random(500), rng.random(500)
        want = s * np.minimum(u, v) + (1 - s) * u * v
        assert np.allclose(cdf(fam("b11", sigma=s), u, v), want, atol=1e-12, rtol=0)


def test_uniform_closed_form():
    u, v = np.meshgrid(np.linspace(0, 1, 21), np.linspace(0, 1, 21))
    want = u * v * (1 + 0.6 * np.minimum(1 - u, 1 - v))
    assert np.allclose(cdf(fam("uniform-k", alpha=0.6), u, v), want, atol=1e-14)


def test_b11_dominates_ca():
    for a in np.linspace(0.05, 1.0, 20):
        assert spearman_rho(fam("b11", sigma=a)) >= spearman_rho(fam("ca", alpha=a)) - 1e-12


def test_theta_one_zero_subfamily_reaches_upper_bounds():
    assert spearman_rho(fam("ca", alpha=0.999)) > 0.99
    assert upper_tail_dep(fam("ca", alpha=0.999)) > 0.99
    assert upper_tail_dep(fam("exponential-k")) == pytest.approx(1.0)


def test_domains():
    for tag, p in [("fgm", {"theta": 1.2}), ("ca", {"alpha": 1.5}), ("b11", {"sigma": 0.0}),
                   ("gpd", {"alpha": 0.5, "sigma": 3.0}), ("uniform-k", {"alpha": 1.2})]:
        with pytest.raises(FamilyDomainError):
            make_named(FamilyParams(tag, p))
    with pytest.raises(FamilyDomainError):
        make_named(FamilyParams("ca", {}))


def test_ca_zero_is_independence():
    spec = fam("ca", alpha=0.0)
    assert cdf(spec, 0.3, 0.6) == pytest.approx(0.18, abs=1e-15)


def test_constant_theta_example():
    spec = fam("constant-theta", theta=1.0, phi="t*(1-t)^2")
    assert upper_tail_dep(spec) == 0.0
    lo, hi = constant_theta_range(from_expr("t*(1-t)"))
    assert lo == pytest.approx(-1.0, abs=1e-3) and hi == pytest.approx(1.0, abs=1e-3)
    with pytest.raises(InvalidSpecError):
        fam("constant-theta", theta=3.0, phi="t*(1-t)")


def test_inv_t_family():
    spec = make_named(NAMED["inv-t"])
    assert spearman_rho(spec) == pytest.approx(0.6, abs=1e-8)
    rng = np.random.default_rng(8)
    u, v = rng.random(300), rng.random(300)
    want = u * v + (1 - u) * (1 - v) * np.minimum(u, v)
    assert np.allclose(cdf(spec, u, v), want, atol=1e-12)


def test_durante_mapping():
    spec = fam("durante-f", f="2*t/(1+t)")
    rng = np.random.default_rng(9)
    u, v = rng.random(300), rng.random(300)
    m = np.maximum(u, v)
    assert np.allclose(cdf(spec, u, v), np.minimum(u, v) * 2 * m / (1 + m), atol=1e-12)
    with pytest.raises(InvalidSpecError):
        fam("durante-f", f="t^2")  # f(t)/t increasing


def test_invert_rho_exact():
    name, x, rng = invert_rho(3 / 7, FamilyParams("ca"))
    assert name == "alpha" and x == pytest.approx(0.5, abs=1e-9)
    assert rng == pytest.approx((0.0, 1.0), abs=1e-9)


def test_fit_recovers_b11():
    batch = sample(fam("b11", sigma=0.5), 5000, seed=17)
    res = fit_rho_inversion(batch.pairs, FamilyParams("b11"))
    assert 0.45 <= res.value <= 0.55
    assert res.n == 5000 and res.to_dict()["sigma"] == res.value


def test_fit_range_error():
    x = np.linspace(0, 1, 100)
    data = np.column_stack([x, x + 0.05 * np.sin(40 * x)])
    with pytest.raises(FamilyDomainError, match=r"-0\.333333, 0\.333333"):
        fit_rho_inversion(data, FamilyParams("fgm"))
    with pytest.raises(ValueError):
        fit_rho_inversion(data[:10], FamilyParams("fgm"))


def test_fit_constant_theta_scale():
    spec = fam("constant-theta", theta=0.8, phi="t*(1-t)^2")
    batch = sample(spec, 20000, seed=5)
    res = fit_rho_inversion(batch.pairs, FamilyParams("constant-theta", {"phi": "t*(1-t)^2"}))
    assert math.isfinite(res.value) and abs(res.value - 0.8) < 0.35
