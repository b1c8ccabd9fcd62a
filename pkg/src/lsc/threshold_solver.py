"""Optimal barrier solver and HJB certification.

Pipeline: root the averaging function Q to get the barrier x*, rebuild the
stopping value

    v(x) = H(x) - delta^{-1} E[Q(S + x) 1{S + x >= x*}],

integrate it into the control value function

    u(x) = W(x) + (f(x*) + L W(x*)) / delta,   W(x) = int_{x*}^x v(y) dy,

and certify the variational system  L u - delta u + f >= 0 (equality left of
x*),  u' <= c (equality right of x*)  on a grid with an independent numeric
generator: finite differences (or carried derivatives) for the local part and
Gauss-Legendre panels against each exponential jump density for the nonlocal
part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .cost_model import CostModel, ExpExpCost, MonomialLinearCost, q_function
from .errors import Assumption4Violation, IntegrabilityError, NoRootError
from .exppoly import ExpPolynomial, PiecewiseExpPolynomial, upper_tail_sum
from .fluctuation import (
    ExtremumLaw,
    RootSet,
    Side,
    extremum_law,
    mgf_inf,
    mgf_sup,
    moments,
    solve_phi_equals_delta,
)
from .levy_model import LevyModel

# Finite-difference step bases balance truncation against float64 roundoff
# (eps/h for first differences, eps/h^2 for second ones); both stencils are
# Richardson-extrapolated to fourth order.
_FD_FIRST = 1e-4
_FD_SECOND = 5e-3
_TRUNCATION = 60.0
_PANEL_EDGES = np.array([0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 60.0])
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _richardson_d1(w, x: float, h: float) -> float:
    def d(step):
        return (w(x + step) - w(x - step)) / (2.0 * step)
    return (4.0 * d(0.5 * h) - d(h)) / 3.0


def _richardson_d2(w, x: float, h: float) -> float:
    wx = w(x)
    def d(step):
        return (w(x + step) - 2.0 * wx + w(x - step)) / step**2
    return (4.0 * d(0.5 * h) - d(h)) / 3.0


def _jump_integral(w, x: float, wx: float, lam: float, eta: float, sgn: float,
                   breakpoints) -> float:
    """lam * int_0^{60/eta} (w(x + sgn*y) - w(x)) eta e^{-eta y} dy by GL panels.

    Panels follow a geometric layout refined near zero and split additionally
    at any breakpoint of w falling inside the truncated range, so piecewise
    integrands stay smooth panel by panel.
    """
    horizon = _TRUNCATION / eta
    edges = list(_PANEL_EDGES / eta)
    for b in breakpoints:
        y = sgn * (b - x)
        if 1e-300 < y < horizon:
            edges.append(y)
    edges = sorted(set(edges))
    nodes = []
    weights = []
    for a, b in zip(edges, edges[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        nodes.append(mid + half * _GL_NODES)
        weights.append(half * _GL_WEIGHTS)
    y = np.concatenate(nodes)
    wt = np.concatenate(weights)
    vals = np.asarray(w(x + sgn * y), dtype=float)
    return lam * float(np.dot(wt, (vals - wx) * eta * np.exp(-eta * y)))


def apply_generator(w, model: LevyModel, x):
    """Numeric infinitesimal generator in natural-drift form:

        L w(x) = drift w'(x) + sigma^2/2 w''(x)
                 + sum_k lambda_k int (w(x + y) - w(x)) (jump density_k)(y) dy.

    Derivatives come from w.deriv1/w.deriv2 when the callable carries them,
    otherwise from Richardson-extrapolated central differences.  Exponentials
    are eigenfunctions: L e^{zx} = phi(z) e^{zx}.
    """
    xs = np.asarray(x, dtype=float)
    if xs.ndim:
        return np.array([apply_generator(w, model, float(xi)) for xi in xs])
    x = float(xs)

    wx = float(w(x))
    scale = max(1.0, abs(x))
    if hasattr(w, "deriv1"):
        d1 = float(w.deriv1(x))
    else:
        d1 = _richardson_d1(w, x, _FD_FIRST * scale)
    out = model.drift * d1
    if model.sigma > 0:
        if hasattr(w, "deriv2"):
            d2 = float(w.deriv2(x))
        else:
            d2 = _richardson_d2(w, x, _FD_SECOND * scale)
        out += 0.5 * model.sigma**2 * d2

    bps = tuple(getattr(w, "breakpoints", ()))
    if model.lambda_up > 0:
        out += _jump_integral(w, x, wx, model.lambda_up, model.eta_up, +1.0, bps)
    if model.lambda_down > 0:
        out += _jump_integral(w, x, wx, model.lambda_down, model.eta_down, -1.0, bps)
    return out


# -- threshold ---------------------------------------------------------------

@dataclass(frozen=True)
class Assumption4Report:
    x_star: float
    left_grid_max_q: float
    right_grid_monotone: bool
    min_right_increment: float
    grid: str
    flat_zero: bool = False

    def as_dict(self) -> dict:
        return {
            "x_star": self.x_star,
            "left_grid_max_q": self.left_grid_max_q,
            "right_grid_monotone": self.right_grid_monotone,
            "min_right_increment": self.min_right_increment,
            "grid": self.grid,
            "flat_zero": self.flat_zero,
        }


def _bracket_root(q) -> tuple[float, float]:
    q0 = float(q(0.0))
    if q0 == 0.0:
        return 0.0, 0.0
    step, prev = 1.0, 0.0
    if q0 > 0:
        while step <= 1e6:
            if float(q(-step)) <= 0:
                return -step, -prev
            prev, step = step, 2.0 * step
    else:
        while step <= 1e6:
            if float(q(step)) >= 0:
                return prev, step
            prev, step = step, 2.0 * step
    raise NoRootError("Q has constant sign on [-1e6, 1e6]")


def _validate_assumption4(q, x_star: float, flat: bool) -> Assumption4Report:
    left = np.linspace(x_star - 20.0, x_star, 200, endpoint=False)
    qleft = np.asarray(q(left), dtype=float)
    tol_left = 1e-10 * (1.0 + float(np.abs(qleft).max()))
    right = np.linspace(x_star, x_star + 20.0, 200)
    qright = np.asarray(q(right), dtype=float)
    increments = np.diff(qright)
    tol_right = 1e-12 * (1.0 + float(np.abs(qright).max()))
    report = Assumption4Report(
        x_star=x_star,
        left_grid_max_q=float(qleft.max()),
        right_grid_monotone=bool(np.all(increments >= -tol_right)),
        min_right_increment=float(increments.min()),
        grid="200 points on [x*-20, x*] and 200 points on [x*, x*+20]",
        flat_zero=flat,
    )
    if report.left_grid_max_q > tol_left:
        raise Assumption4Violation(
            f"Q reaches {report.left_grid_max_q} > {tol_left} left of x* = {x_star}"
        )
    if not report.right_grid_monotone:
        raise Assumption4Violation(
            f"Q decreases by {-report.min_right_increment} right of x* = {x_star}"
        )
    return report


def _threshold_with_report(q: ExpPolynomial) -> tuple[float, Assumption4Report]:
    lo, hi = _bracket_root(q)
    if lo == hi:
        x_star = lo
    else:
        x_star = brentq(lambda x: float(q(x)), lo, hi, xtol=1e-13, rtol=8.9e-16)
    # tie-break flat zero segments toward their infimum
    flat = abs(float(q(x_star - 1e-6))) <= 1e-13 * (1.0 + abs(float(q(x_star - 1.0))))
    if flat:
        a, b = x_star - 20.0, x_star
        qtol = 1e-13 * (1.0 + abs(float(q(a))))
        if abs(float(q(a))) > qtol:
            for _ in range(200):
                mid = 0.5 * (a + b)
                if abs(float(q(mid))) <= qtol:
                    b = mid
                else:
                    a = mid
            x_star = b
    return x_star, _validate_assumption4(q, x_star, flat)


def find_threshold(cm: CostModel, model: LevyModel, delta: float,
                   roots: RootSet | None = None) -> float:
    """Smallest root of Q via geometric bracket expansion from 0 plus Brent,
    with the sign/monotonicity structure validated on surrounding grids."""
    if roots is None:
        roots = solve_phi_equals_delta(model, delta)
    x_star, _ = _threshold_with_report(q_function(cm, model, delta, roots))
    return x_star


def closed_form_threshold(cm: CostModel, model: LevyModel, delta: float,
                          roots: RootSet) -> float | None:
    """Explicit x* for the families that admit one; None otherwise.

    ExpExp:      x* = log(delta B / (A alpha E e^{alpha I} E e^{-beta S})) / (alpha+beta)
    Monomial,n=1:  x* = (delta E S - 2A E I) / (2A + delta)

    Both reduce to their delta = 1 forms; the delta factors carry the
    resolvent scaling of the averaging integrand f' - (delta - L)c
    (see q_function).
    """
    if isinstance(cm, ExpExpCost):
        ei = mgf_inf(roots, model, cm.alpha)
        es = mgf_sup(roots, model, -cm.beta)
        return math.log(delta * cm.B / (cm.A * cm.alpha * ei * es)) / (cm.alpha + cm.beta)
    if isinstance(cm, MonomialLinearCost) and cm.n == 1:
        es, _ = moments(extremum_law(roots, model, Side.SUP))
        ei, _ = moments(extremum_law(roots, model, Side.INF))
        return (delta * es - 2.0 * cm.A * ei) / (2.0 * cm.A + delta)
    return None


# -- value functions -----------------------------------------------------------

def stopping_value(cm: CostModel, model: LevyModel, delta: float, roots: RootSet,
                   x_star: float, sup_law: ExtremumLaw | None = None,
                   q: ExpPolynomial | None = None) -> PiecewiseExpPolynomial:
    """The stopping-problem value v as a two-piece exp-polynomial.

    Right of the barrier v = c exactly.  Left of it the indicator trims the
    supremum mixture to constants J_k = int_{x*}^inf Q(u) e^{-r_k u} du:

        v(x) = H(x) - delta^{-1} sum_k w_k r_k J_k e^{r_k x},  x < x*.
    """
    if sup_law is None:
        sup_law = extremum_law(roots, model, Side.SUP)
    if q is None:
        q = q_function(cm, model, delta, roots)

    left = cm.H_ep(model, delta)
    for w, r in sup_law.mixture:
        j_k = 0.0
        for coef, p, a in q.terms:
            c_eff = r - a
            if c_eff <= 0:
                raise IntegrabilityError(f"Q rate {a} >= supremum mixture rate {r}")
            j_k += coef * math.exp(-c_eff * x_star) * float(upper_tail_sum(c_eff, p, x_star))
        left = left + ExpPolynomial.exponential(-w * r * j_k / delta, r)
    return PiecewiseExpPolynomial((x_star,), (left, cm.c_ep()))


class _Smooth:
    """Callable with carried first/second derivatives and breakpoints."""

    def __init__(self, value, deriv1, deriv2, breakpoints=()):
        self._value = value
        self.deriv1 = deriv1
        self.deriv2 = deriv2
        self.breakpoints = tuple(breakpoints)

    def __call__(self, x):
        return self._value(x)


class ValueFunction:
    """u(x) = W(x) + const with u' = v and u'' = v' carried analytically."""

    def __init__(self, primitive, v, v_prime, const: float, breakpoints=()):
        self._primitive = primitive
        self._v = v
        self._v_prime = v_prime
        self.const = float(const)
        self.breakpoints = tuple(breakpoints)

    def __call__(self, x):
        return self._primitive(x) + self.const

    def deriv1(self, x):
        return self._v(x)

    def deriv2(self, x):
        return self._v_prime(x)


class CachedSimpsonPrimitive:
    """W(x) = int_anchor^x v for a generic callable v.

    Cumulative values are cached on a uniform grid (adaptive Simpson per cell,
    1e-10 tolerance); interior points use 4-node cubic interpolation except
    near a breakpoint, where the partial cell is integrated directly.
    """

    def __init__(self, func, anchor: float, tol: float = 1e-10, spacing: float = 0.02,
                 breakpoints=()):
        self.func = func
        self.anchor = float(anchor)
        self.tol = tol
        self.spacing = spacing
        self.breakpoints = tuple(breakpoints)
        self._nodes: dict[int, float] = {0: 0.0}
        self._lo = 0
        self._hi = 0

    def _adaptive_simpson(self, a: float, b: float, tol: float) -> float:
        f = self.func
        def simp(a, b, fa, fm, fb):
            return (b - a) / 6.0 * (fa + 4.0 * fm + fb)
        def rec(a, b, fa, fm, fb, whole, tol, depth):
            m = 0.5 * (a + b)
            lm, rm = 0.5 * (a + m), 0.5 * (m + b)
            flm, frm = float(f(lm)), float(f(rm))
            lft = simp(a, m, fa, flm, fm)
            rgt = simp(m, b, fm, frm, fb)
            if depth > 40 or abs(lft + rgt - whole) <= 15.0 * tol:
                return lft + rgt + (lft + rgt - whole) / 15.0
            return rec(a, m, fa, flm, fm, lft, 0.5 * tol, depth + 1) + \
                   rec(m, b, fm, frm, fb, rgt, 0.5 * tol, depth + 1)
        if a == b:
            return 0.0
        fa, fb = float(f(a)), float(f(b))
        m = 0.5 * (a + b)
        fm = float(f(m))
        return rec(a, b, fa, fm, fb, simp(a, b, fa, fm, fb), self.tol if tol is None else tol, 0)

    def _node_x(self, i: int) -> float:
        return self.anchor + i * self.spacing

    def _ensure(self, i: int) -> None:
        while self._hi < i:
            val = self._nodes[self._hi] + self._adaptive_simpson(
                self._node_x(self._hi), self._node_x(self._hi + 1), self.tol)
            self._hi += 1
            self._nodes[self._hi] = val
        while self._lo > i:
            val = self._nodes[self._lo] - self._adaptive_simpson(
                self._node_x(self._lo - 1), self._node_x(self._lo), self.tol)
            self._lo -= 1
            self._nodes[self._lo] = val

    def _value(self, x: float) -> float:
        i = math.floor((x - self.anchor) / self.spacing)
        self._ensure(i - 1)
        self._ensure(i + 2)
        xs = [self._node_x(j) for j in range(i - 1, i + 3)]
        if any(xs[0] < b < xs[-1] for b in self.breakpoints):
            return self._nodes[i] + self._adaptive_simpson(self._node_x(i), x, self.tol)
        ys = [self._nodes[j] for j in range(i - 1, i + 3)]
        out = 0.0
        for k in range(4):
            lk = 1.0
            for j in range(4):
                if j != k:
                    lk *= (x - xs[j]) / (xs[k] - xs[j])
            out += ys[k] * lk
        return out

    def __call__(self, x):
        xs = np.asarray(x, dtype=float)
        if xs.ndim:
            return np.array([self._value(float(v)) for v in xs])
        return self._value(float(xs))


def value_function(v, cm: CostModel, model: LevyModel, delta: float,
                   x_star: float) -> ValueFunction:
    """Integrate v into u = W + (f(x*) + L W(x*)) / delta.

    Exp-polynomial v gets its exact primitive; a plain callable goes through
    the cached adaptive-Simpson primitive.  L W(x*) is evaluated by the same
    numeric generator used for certification.
    """
    if isinstance(v, PiecewiseExpPolynomial):
        primitive = v.antiderivative(x_star)
        v_prime = v.derivative()
        bps = v.breakpoints
    else:
        bps = tuple(getattr(v, "breakpoints", (x_star,)))
        primitive = CachedSimpsonPrimitive(v, x_star, breakpoints=bps)
        v_prime = lambda x, _v=v: _richardson_d1(_v, float(x), _FD_FIRST)
    w_smooth = _Smooth(primitive, v, v_prime, bps)
    lw_star = apply_generator(w_smooth, model, x_star)
    const = (cm.f(x_star) + lw_star) / delta
    return ValueFunction(primitive, v, v_prime, const, bps)


# -- certification --------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    lo_offset: float = -8.0
    hi_offset: float = 8.0
    points: int = 400


@dataclass(frozen=True)
class HjbReport:
    x_star: float
    tol: float
    grid_lo: float
    grid_hi: float
    points: int
    max_abs_residual_left: float
    min_residual_right: float
    min_residual_everywhere: float
    max_gradient_excess: float        # max (u' - c) everywhere
    max_abs_gradient_gap_right: float  # max |u' - c| on x >= x*
    residual_nonnegative: bool
    residual_zero_left: bool
    gradient_below_cost: bool
    gradient_matches_right: bool
    passed: bool

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def hjb_residual_check(u, cm: CostModel, model: LevyModel, delta: float,
                       x_star: float, grid_spec: GridSpec | None = None) -> HjbReport:
    """Evaluate the variational system on a grid and report the worst slacks.

    PASS requires, with tol = 1e-4 (1 + |f(x*)|):
      residual >= -tol everywhere, |residual| <= tol left of x*,
      u' <= c + tol everywhere, |u' - c| <= tol right of x*.
    """
    spec = grid_spec or GridSpec()
    xs = np.linspace(x_star + spec.lo_offset, x_star + spec.hi_offset, spec.points)
    tol = 1e-4 * (1.0 + abs(cm.f(x_star)))

    gen = apply_generator(u, model, xs)
    residual = gen - delta * np.asarray(u(xs), dtype=float) + np.asarray(cm.f(xs), dtype=float)
    if hasattr(u, "deriv1"):
        grad = np.asarray(u.deriv1(xs), dtype=float)
    else:
        grad = np.array([_richardson_d1(u, float(x), _FD_FIRST) for x in xs])
    gap = grad - np.asarray(cm.c(xs), dtype=float)

    left = xs < x_star
    right = ~left
    max_abs_left = float(np.abs(residual[left]).max()) if left.any() else 0.0
    min_right = float(residual[right].min()) if right.any() else 0.0
    conds = {
        "residual_nonnegative": bool(residual.min() >= -tol),
        "residual_zero_left": bool(max_abs_left <= tol),
        "gradient_below_cost": bool(gap.max() <= tol),
        "gradient_matches_right": bool(np.abs(gap[right]).max() <= tol) if right.any() else True,
    }
    return HjbReport(
        x_star=x_star,
        tol=tol,
        grid_lo=float(xs[0]),
        grid_hi=float(xs[-1]),
        points=spec.points,
        max_abs_residual_left=max_abs_left,
        min_residual_right=min_right,
        min_residual_everywhere=float(residual.min()),
        max_gradient_excess=float(gap.max()),
        max_abs_gradient_gap_right=float(np.abs(gap[right]).max()) if right.any() else 0.0,
        **conds,
        passed=all(conds.values()),
    )


def residual_profile(u, cm: CostModel, model: LevyModel, delta: float, xs):
    """L u - delta u + f pointwise (used by the value-table CLI output)."""
    xs = np.asarray(xs, dtype=float)
    gen = apply_generator(u, model, xs)
    return gen - delta * np.asarray(u(xs), dtype=float) + np.asarray(cm.f(xs), dtype=float)


# -- orchestration ----------------------------------------------------------------

@dataclass
class ThresholdSolution:
    x_star: float
    closed_form_x_star: float | None
    assumption4_report: Assumption4Report
    roots: RootSet
    sup_law: ExtremumLaw
    inf_law: ExtremumLaw
    q: ExpPolynomial
    v: PiecewiseExpPolynomial
    u: ValueFunction
    hjb_report: HjbReport | None = None


def solve(cm: CostModel, model: LevyModel, delta: float,
          certify: bool = True, grid_spec: GridSpec | None = None,
          barrier: float | None = None) -> ThresholdSolution:
    """Full pipeline: roots -> laws -> Q -> x* -> v -> u (-> HJB report).

    `barrier` overrides the solved x* (used to certify that perturbed barriers
    fail); the averaging root and assumption grid still use the true Q.
    """
    roots = solve_phi_equals_delta(model, delta)
    sup_law = extremum_law(roots, model, Side.SUP)
    inf_law = extremum_law(roots, model, Side.INF)
    q = q_function(cm, model, delta, roots, inf_law)
    x_star, report = _threshold_with_report(q)
    barrier_used = x_star if barrier is None else barrier
    v = stopping_value(cm, model, delta, roots, barrier_used, sup_law, q)
    u = value_function(v, cm, model, delta, barrier_used)
    hjb = None
    if certify:
        hjb = hjb_residual_check(u, cm, model, delta, barrier_used, grid_spec)
    return ThresholdSolution(
        x_star=x_star,
        closed_form_x_star=closed_form_threshold(cm, model, delta, roots),
        assumption4_report=report,
        roots=roots,
        sup_law=sup_law,
        inf_law=inf_law,
        q=q,
        v=v,
        u=u,
        hjb_report=hjb,
    )
