import math

import numpy as np
import pytest

from lsc import (
    DomainError,
    ExpExpCost,
    ExpQuadraticCost,
    LevyModel,
    MonomialLinearCost,
    ProcessKind,
    Side,
    expect,
    extremum_law,
    growth_scan,
    q_function,
    solve_phi_equals_delta,
)
from lsc.cost_model import discounted_power_integrals
from lsc.threshold_solver import apply_generator


def mc_discounted_integral(model, func, x0, delta, horizon, dt, n_paths, seed):
    """Vectorized oracle for E_x int_0^T func(X_s) e^{-delta s} ds.

    Grid increments are exact in distribution: normal diffusion part plus
    Gamma(Poisson) jump sums per step; trapezoid in time."""
    rng = np.random.default_rng(seed)
    n_steps = int(round(horizon / dt))
    ts = np.linspace(0.0, horizon, n_steps + 1)
    x = np.full(n_paths, float(x0))
    disc = np.exp(-delta * ts)
    acc = 0.5 * disc[0] * func(x)
    for k in range(1, n_steps + 1):
        incr = model.drift * dt
        if model.sigma > 0:
            incr = incr + model.sigma * math.sqrt(dt) * rng.standard_normal(n_paths)
        if model.lambda_up > 0:
            incr = incr + rng.standard_gamma(rng.poisson(model.lambda_up * dt, n_paths)) / model.eta_up
        if model.lambda_down > 0:
            incr = incr - rng.standard_gamma(rng.poisson(model.lambda_down * dt, n_paths)) / model.eta_down
        x = x + incr
        w = 1.0 if k < n_steps else 0.5
        acc = acc + w * disc[k] * func(x)
    vals = acc * dt
    return vals.mean(), vals.std(ddof=1) / math.sqrt(n_paths)


def test_family_point_values():
    ee = ExpExpCost(A=1.0, alpha=1.0, B=1.0, beta=1.0)
    assert ee.f(0.0) == 1.0 and ee.f_prime(0.0) == 1.0
    ml = MonomialLinearCost(A=1.0, n=1, B=0.0)
    assert ml.f(2.0) == 4.0 and ml.c(2.0) == -2.0
    eq = ExpQuadraticCost(A=1.0, B=1.0)
    assert eq.f(0.0) == 1.0 and eq.c(0.0) == 1.0


def test_family_parameter_validation():
    with pytest.raises(ValueError):
        ExpExpCost(A=1.0, alpha=-1.0, B=1.0, beta=1.0)
    with pytest.raises(ValueError):
        MonomialLinearCost(A=0.0, n=1, B=0.0)
    with pytest.raises(ValueError):
        MonomialLinearCost(A=1.0, n=0, B=0.0)
    with pytest.raises(ValueError):
        ExpQuadraticCost(A=-2.0, B=0.0)


def test_r_closed_forms(cpp_model):
    brown = LevyModel(ProcessKind.JUMP_DIFFUSION, sigma=math.sqrt(2.0))
    r = ExpExpCost(A=1.0, alpha=1.0, B=1.0, beta=1.0).r_ep(brown, 2.0)
    for x in (-1.0, 0.0, 2.0):
        assert r(x) == pytest.approx(0.5 * math.exp(-x), rel=1e-14)

    r2 = MonomialLinearCost(A=1.0, n=1, B=0.0).r_ep(cpp_model, 1.0)
    for x in (-1.0, 0.3):
        assert r2(x) == pytest.approx(1.0 / 12.0 - x, rel=1e-13)


@pytest.mark.parametrize("family", ["exp_exp", "monomial_linear", "exp_quadratic"])
def test_r_satisfies_resolvent_equation(family, jd_model):
    # delta r - delta c + L c = 0, with L applied numerically
    delta = 0.8
    cm = {
        "exp_exp": ExpExpCost(A=1.0, alpha=1.0, B=2.0, beta=1.2),
        "monomial_linear": MonomialLinearCost(A=0.7, n=1, B=0.3),
        "exp_quadratic": ExpQuadraticCost(A=0.4, B=1.0),
    }[family]
    r = cm.r_ep(jd_model, delta)
    c = cm.c_ep()
    rng = np.random.default_rng(3)
    for x in rng.uniform(-2, 2, size=6):
        lc = apply_generator(c, jd_model, float(x))
        resid = delta * r(x) - delta * c(x) + lc
        assert abs(resid) <= 1e-6 * (1.0 + abs(c(x)))


def test_H_closed_forms(cpp_model):
    brown = LevyModel(ProcessKind.JUMP_DIFFUSION, sigma=math.sqrt(2.0))
    h = ExpExpCost(A=1.0, alpha=1.0, B=1.0, beta=1.0).H_ep(brown, 2.0)
    assert h(0.7) == pytest.approx(math.exp(0.7), rel=1e-13)   # phi(1)=1, gap=1

    h2 = MonomialLinearCost(A=1.0, n=1, B=5.0).H_ep(cpp_model, 1.0)
    for x in (-0.4, 1.2):
        assert h2(x) == pytest.approx(2 * x + 1.0 / 6.0, rel=1e-12)

    h3 = ExpQuadraticCost(A=1.0, B=1.0).H_ep(cpp_model, 1.0)
    assert h3(0.3) == pytest.approx(math.exp(0.3) / 0.8, rel=1e-12)  # phi(1)=0.2


def test_H_domain_errors(cpp_model):
    with pytest.raises(DomainError):
        ExpExpCost(A=1.0, alpha=3.5, B=1.0, beta=1.0).H_ep(cpp_model, 1.0)
    with pytest.raises(DomainError):
        # phi(-beta) >= delta: beta close to the lower pole blows the resolvent
        ExpExpCost(A=1.0, alpha=1.0, B=1.0, beta=3.999).r_ep(cpp_model, 0.01)


def test_discounted_power_integrals_low_orders(jd_model):
    delta = 0.8
    ints = discounted_power_integrals(jd_model, delta, 3)
    assert ints[0] == pytest.approx(1.0 / delta, rel=1e-14)
    assert ints[1] == pytest.approx(jd_model.mean() / delta**2, rel=1e-13)
    # k = 2: E X_s^2 = s^2 mean^2 + s var, integral = 2 mean^2/delta^3 + var/delta^2
    want = 2 * jd_model.mean() ** 2 / delta**3 + jd_model.variance_rate() / delta**2
    assert ints[2] == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("n", [1, 2])
def test_H_monomial_against_monte_carlo(n, jd_model):
    delta = 1.2
    cm = MonomialLinearCost(A=0.5, n=n, B=0.0)
    h = cm.H_ep(jd_model, delta)
    x0 = 0.4
    got, se = mc_discounted_integral(jd_model, lambda x: cm.f_prime(x), x0, delta,
                                     horizon=30.0 / delta, dt=0.01, n_paths=40_000, seed=99)
    assert abs(got - h(x0)) <= 3.0 * se + 0.01 * abs(h(x0))


def test_H_exp_quadratic_against_monte_carlo(cpp_model):
    cm = ExpQuadraticCost(A=1.0, B=1.0)
    h = cm.H_ep(cpp_model, 1.0)
    got, se = mc_discounted_integral(cpp_model, lambda x: cm.f_prime(x), 0.0, 1.0,
                                     horizon=30.0, dt=0.01, n_paths=40_000, seed=5)
    assert abs(got - h(0.0)) <= 3.0 * se + 0.01 * abs(h(0.0))


def test_q_matches_cpp_reference_expansion(cpp_model, cpp_cost):
    lam1, lam2, a1, a2 = 4 / 7, 3 / 7, 3.0, 4.0
    g2 = 3.0  # magnitude of the negative root
    A = B = 1.0
    coef_exp = g2 * (a2 + 1) / (a2 * (1 + g2))
    lin = 2 * (lam1 / a1 - lam2 / a2 - (g2 - a2) / (a2 * g2))
    const = (-2 * (lam1 / a1 - lam2 / a2) * (a2 - g2) / (a2 * g2)
             - 2 * (a2 - g2) / (a2 * g2**2) + 2 * lam2 / a2**2 + 2 * lam1 / a1**2)
    roots = solve_phi_equals_delta(cpp_model, 1.0)
    q = q_function(cpp_cost, cpp_model, 1.0, roots)
    for x in np.linspace(-2, 2, 9):
        display = coef_exp * math.exp(x) - B + A * (-x * x + lin * x + const)
        assert q(x) == pytest.approx(display, rel=1e-12, abs=1e-12)


def test_q_small_at_reported_threshold(cpp_model, cpp_cost):
    roots = solve_phi_equals_delta(cpp_model, 1.0)
    q = q_function(cpp_cost, cpp_model, 1.0, roots)
    assert abs(q(-0.0377)) < 5e-3


def test_q_exp_exp_strictly_increasing(jd_model):
    roots = solve_phi_equals_delta(jd_model, 0.8)
    q = q_function(ExpExpCost(A=1.0, alpha=1.0, B=2.0, beta=1.2), jd_model, 0.8, roots)
    xs = np.linspace(-6, 6, 200)
    assert np.all(np.diff(q(xs)) > 0)


@pytest.mark.parametrize("family", ["exp_exp", "monomial_linear", "monomial_n2", "exp_quadratic"])
def test_q_quadrature_agrees_with_closed_form(family, jd_model):
    delta = 0.8
    cm = {
        "exp_exp": ExpExpCost(A=1.0, alpha=1.0, B=2.0, beta=1.2),
        "monomial_linear": MonomialLinearCost(A=0.7, n=1, B=0.3),
        "monomial_n2": MonomialLinearCost(A=0.2, n=2, B=0.0),
        "exp_quadratic": ExpQuadraticCost(A=0.4, B=1.0),
    }[family]
    roots = solve_phi_equals_delta(jd_model, delta)
    inf_law = extremum_law(roots, jd_model, Side.INF)
    q = q_function(cm, jd_model, delta, roots)
    r = cm.r_ep(jd_model, delta)
    integrand = lambda y: cm.f_prime(y) - delta * r(y)
    for x in np.linspace(-2.5, 2.5, 30):
        numeric = expect(inf_law, integrand, shift=float(x))
        assert q(x) == pytest.approx(numeric, rel=1e-9, abs=1e-9)


def test_growth_scan_flags_undominated_exponent():
    cm = ExpExpCost(A=1.0, alpha=2.0, B=1.0, beta=1.0)
    ok = growth_scan(cm, theta=2.0)
    assert ok["bounded"]
    bad = growth_scan(cm, theta=1.0)
    assert not bad["bounded"] and bad["edge_climbing"]


def test_exp_quadratic_precondition_warnings(cpp_model):
    good = ExpQuadraticCost(A=1.0, B=1.0).precondition_report(cpp_model, 1.0)
    assert good.ok and not good.warnings
    big_a = ExpQuadraticCost(A=2.0, B=1.0).precondition_report(cpp_model, 1.0)
    assert not big_a.ok and "2A" in big_a.warnings[0]
    neg_mean = LevyModel(ProcessKind.COMPOUND_POISSON, lambda_up=0.3, lambda_down=0.6,
                         eta_up=3.0, eta_down=4.0)
    rep = ExpQuadraticCost(A=1.0, B=1.0).precondition_report(neg_mean, 1.0)
    assert not rep.ok and "E X_1" in rep.warnings[0]


def test_control_cost_integral_matches_quadrature():
    from scipy.integrate import quad
    cases = [
        (ExpExpCost(A=1.0, alpha=1.0, B=2.0, beta=1.2), 0.7, 1.3),
        (MonomialLinearCost(A=1.0, n=1, B=0.0), -0.5, 0.8),
        (ExpQuadraticCost(A=0.4, B=1.0), 1.1, 2.0),
    ]
    for cm, a, d in cases:
        want, _ = quad(lambda lam: cm.c(a - lam * d), 0.0, 1.0)
        assert float(cm.control_cost_integral(a, d)) == pytest.approx(want, rel=1e-10)
