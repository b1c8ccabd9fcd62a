"""Fluctuation theory for the killed process: roots of phi(z) = delta,
Wiener-Hopf factors, and the laws of the all-time supremum S and infimum I
up to an independent Exp(delta) time.

For these jump families the factors are rational,

    E e^{zS} = prod_i rho_i/(rho_i - z) * (eta_up - z)/eta_up   (if up jumps)
    E e^{zI} = prod_i gam_i/(gam_i + z) * (eta_down + z)/eta_down  (if down jumps)

with rho_i the positive roots and -gam_i the negative roots of phi = delta.
Partial fractions turn each factor into an atom at zero plus a finite
exponential mixture, against which expectations of exponential-polynomial
functions are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from .errors import ConvergenceError, DegenerateError, DomainError, IntegrabilityError
from .exppoly import ExpPolynomial, lower_tail_sum, upper_tail_sum
from .levy_model import LevyModel

_RESIDUAL_TOL = 1e-12
_TRUNCATION = 60.0  # quadrature horizon: 60 / min rate leaves tail mass < e^-60


class Side(Enum):
    SUP = "sup"
    INF = "inf"


@dataclass(frozen=True)
class RootSet:
    """Real roots of phi(z) = delta, stored as positive magnitudes per side.

    Jump diffusion with two-sided jumps: two roots per side interleaved with
    the poles, -gam2 < -eta_down < -gam1 < 0 < rho1 < eta_up < rho2.
    Compound Poisson: a single root per side inside the poles.
    """

    positive_roots: tuple[float, ...]
    negative_roots: tuple[float, ...]  # magnitudes of the negative roots, ascending
    delta: float


def _phi_raw(model: LevyModel, z: float) -> float:
    """The rational formula for phi, valid off the poles (used beyond the strip
    when locating outer roots)."""
    out = 0.5 * model.sigma**2 * z * z + model.drift * z
    if model.lambda_up > 0:
        out += model.lambda_up * z / (model.eta_up - z)
    if model.lambda_down > 0:
        out -= model.lambda_down * z / (model.eta_down + z)
    return out


def _phi_raw_prime(model: LevyModel, z: float) -> float:
    out = model.sigma**2 * z + model.drift
    if model.lambda_up > 0:
        out += model.lambda_up * model.eta_up / (model.eta_up - z) ** 2
    if model.lambda_down > 0:
        out -= model.lambda_down * model.eta_down / (model.eta_down + z) ** 2
    return out


def _bracket_inner(f, pole: float) -> tuple[float, float]:
    """Bracket a sign change of f on (0, pole): f(0+) < 0 and f -> +inf at the pole."""
    lo = pole * 1e-12
    if f(lo) >= 0:
        return lo * 1e-3, lo
    hi = pole * 0.5
    for _ in range(200):
        if f(hi) > 0:
            return lo, hi
        lo = hi
        hi = pole - (pole - hi) * 0.5
    raise ConvergenceError("no sign change found approaching the pole")


def _bracket_outer(f, pole: float) -> tuple[float, float]:
    """Bracket on (pole, inf): f -> -inf at the pole and f -> +inf at infinity."""
    lo = None
    z = pole + max(pole, 1.0)
    for _ in range(200):
        if f(z) < 0:
            lo = z
            break
        z = pole + (z - pole) * 0.5
    if lo is None:
        raise ConvergenceError("could not find a point below delta right of the pole")
    hi = lo
    for _ in range(200):
        hi = pole + (hi - pole) * 2.0
        if f(hi) > 0:
            return lo, hi
    raise ConvergenceError("geometric expansion failed to cross delta (missing outer root)")


def _bracket_ray(f) -> tuple[float, float]:
    """Bracket on (0, inf) with no pole: f(0+) < 0, f -> +inf."""
    lo, hi = 1e-12, 1.0
    for _ in range(200):
        if f(hi) > 0:
            return lo, hi
        lo = hi
        hi *= 2.0
    raise ConvergenceError("geometric expansion failed to cross delta")


def _side_roots(model: LevyModel, delta: float, up: bool) -> list[float]:
    """Roots on one side as positive magnitudes, ascending."""
    lam = model.lambda_up if up else model.lambda_down
    eta = model.eta_up if up else model.eta_down
    sign = 1.0 if up else -1.0
    f = lambda m: _phi_raw(model, sign * m) - delta

    brackets: list[tuple[float, float]] = []
    if lam > 0:
        brackets.append(_bracket_inner(f, eta))
        if model.sigma > 0:
            brackets.append(_bracket_outer(f, eta))
    elif model.sigma > 0:
        brackets.append(_bracket_ray(f))
    else:
        raise ConvergenceError("no root on this side: sigma = 0 and no jump activity")

    out = []
    for lo, hi in brackets:
        m = brentq(f, lo, hi, xtol=1e-15, rtol=8.9e-16)
        for _ in range(3):  # Newton polish toward machine-level residual
            dg = sign * _phi_raw_prime(model, sign * m)
            if dg == 0 or not math.isfinite(dg):
                break
            step = f(m) / dg
            if not math.isfinite(step) or not (lo < m - step < hi):
                break
            m -= step
        residual = abs(f(m))
        if residual > _RESIDUAL_TOL * max(1.0, delta):
            raise ConvergenceError(f"root residual {residual} exceeds tolerance")
        out.append(m)
    return sorted(out)


def solve_phi_equals_delta(model: LevyModel, delta: float) -> RootSet:
    """All real roots of phi(z) = delta by pole-bracketed bisection/Brent.

    The interval structure (phi(0) = 0 < delta, sign blow-ups at the poles,
    quadratic growth when sigma > 0) makes bracketing unconditional; roots are
    polished by Newton so residuals sit at machine level.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    pos = _side_roots(model, delta, up=True)
    neg = _side_roots(model, delta, up=False)
    rs = RootSet(tuple(pos), tuple(neg), delta)
    _check_interleaving(rs, model)
    return rs


def _check_interleaving(roots: RootSet, model: LevyModel) -> None:
    if model.lambda_up > 0:
        if not roots.positive_roots[0] < model.eta_up:
            raise ConvergenceError("positive root ordering violated: rho1 >= eta_up")
        if len(roots.positive_roots) == 2 and not model.eta_up < roots.positive_roots[1]:
            raise ConvergenceError("positive root ordering violated: rho2 <= eta_up")
    if model.lambda_down > 0:
        if not roots.negative_roots[0] < model.eta_down:
            raise ConvergenceError("negative root ordering violated: gam1 >= eta_down")
        if len(roots.negative_roots) == 2 and not model.eta_down < roots.negative_roots[1]:
            raise ConvergenceError("negative root ordering violated: gam2 <= eta_down")


# -- Wiener-Hopf factors ------------------------------------------------------

def mgf_sup(roots: RootSet, model: LevyModel, z):
    """E e^{zS} for z < min positive root."""
    zs = np.asarray(z, dtype=float)
    rmin = roots.positive_roots[0]
    if np.any(zs >= rmin):
        raise DomainError(f"mgf_sup defined for z < {rmin}")
    out = np.ones_like(zs)
    for r in roots.positive_roots:
        out = out * (r / (r - zs))
    if model.lambda_up > 0:
        out = out * (model.eta_up - zs) / model.eta_up
    return out if out.ndim else float(out)


def mgf_inf(roots: RootSet, model: LevyModel, z):
    """E e^{zI} for z > -min negative-root magnitude."""
    zs = np.asarray(z, dtype=float)
    rmin = roots.negative_roots[0]
    if np.any(zs <= -rmin):
        raise DomainError(f"mgf_inf defined for z > {-rmin}")
    out = np.ones_like(zs)
    for r in roots.negative_roots:
        out = out * (r / (r + zs))
    if model.lambda_down > 0:
        out = out * (model.eta_down + zs) / model.eta_down
    return out if out.ndim else float(out)


# -- extremum laws -------------------------------------------------------------

@dataclass(frozen=True)
class ExtremumLaw:
    """Atom at zero plus exponential mixture for S (side=SUP, support [0, inf))
    or I (side=INF, support (-inf, 0]).

    The density on the open half-line is sum_k w_k r_k e^{-r_k x} for S and
    sum_k w_k r_k e^{r_k x} for I; atom + sum of weights = 1.
    """

    side: Side
    atom_at_zero: float
    mixture: tuple[tuple[float, float], ...]  # (weight, rate)

    @property
    def min_rate(self) -> float:
        return min(r for _, r in self.mixture)

    def _orient(self) -> float:
        return 1.0 if self.side is Side.SUP else -1.0

    def mgf(self, z):
        zs = np.asarray(z, dtype=float)
        s = self._orient()
        out = np.full_like(zs, self.atom_at_zero)
        for w, r in self.mixture:
            denom = r - s * zs
            if np.any(denom <= 0):
                raise DomainError("z outside the mgf strip of the mixture")
            out = out + w * r / denom
        return out if out.ndim else float(out)

    def exp_moment(self, power: int, rate: float = 0.0) -> float:
        """E[E^power * e^{rate*E}] for the extremum variable E."""
        s = self._orient()
        out = self.atom_at_zero if power == 0 else 0.0
        for w, r in self.mixture:
            c = r - s * rate
            if c <= 0:
                raise IntegrabilityError(
                    f"exponential rate {rate} at or beyond mixture rate {s * r}"
                )
            out += w * (s**power) * math.factorial(power) * (r / c) / c**power
        return out

    def mean(self) -> float:
        return self.exp_moment(1)

    def second_moment(self) -> float:
        return self.exp_moment(2)


def extremum_law(roots: RootSet, model: LevyModel, which: Side) -> ExtremumLaw:
    """Partial-fraction decomposition of the Wiener-Hopf factor.

    Weights come from the residue formula w_k = lim_{z->r_k} (1 - z/r_k) mgf(z);
    the atom is the mgf limit at -/+ infinity (nonzero only when sigma = 0).
    """
    rates = roots.positive_roots if which is Side.SUP else roots.negative_roots
    lam = model.lambda_up if which is Side.SUP else model.lambda_down
    eta = model.eta_up if which is Side.SUP else model.eta_down

    for i, a in enumerate(rates):
        for b in rates[i + 1:]:
            if abs(a - b) < 1e-10 * max(1.0, abs(a), abs(b)):
                raise DegenerateError(f"near-coincident roots {a}, {b}: confluent partial fractions")

    has_pole = lam > 0
    weights = []
    for k, rk in enumerate(rates):
        w = 1.0
        for j, rj in enumerate(rates):
            if j != k:
                w *= rj / (rj - rk)
        if has_pole:
            w *= (eta - rk) / eta
        weights.append(w)
    atom = math.prod(rates) / eta if has_pole and len(rates) == 1 else 0.0

    total = atom + sum(weights)
    if abs(total - 1.0) > 1e-12:
        raise ConvergenceError(f"extremum law mass {total} deviates from 1")
    return ExtremumLaw(which, atom, tuple((w, r) for w, r in zip(weights, rates)))


def moments(law: ExtremumLaw) -> tuple[float, float]:
    """(first, second) moments from the atom-plus-mixture representation."""
    return law.mean(), law.second_moment()


# -- expectations ---------------------------------------------------------------

def compose_expectation(law: ExtremumLaw, g: ExpPolynomial) -> ExpPolynomial:
    """The map x -> E[g(x + E)] as an exp-polynomial in x.

    Expands (x+E)^p e^{a(x+E)} binomially; the scalar factors E[E^j e^{aE}]
    are exact mixture moments.
    """
    out: list[tuple[float, int, float]] = []
    for coef, p, a in g.terms:
        for j in range(p + 1):
            out.append((coef * math.comb(p, j) * law.exp_moment(j, a), p - j, a))
    return ExpPolynomial(tuple(out))


def _expect_closed(law: ExtremumLaw, g: ExpPolynomial, shift, lower):
    shift = np.asarray(shift, dtype=float)
    if lower is None:
        ind = np.ones_like(shift, dtype=bool)
    else:
        ind = shift >= lower
    total = np.zeros_like(shift)

    if law.side is Side.SUP:
        m = shift if lower is None else np.maximum(shift, lower)
        for coef, p, a in g.terms:
            if law.atom_at_zero:
                total = total + np.where(ind, law.atom_at_zero * coef * shift**p * np.exp(a * shift), 0.0)
            for w, r in law.mixture:
                c = r - a
                if c <= 0:
                    raise IntegrabilityError(f"rate {a} >= mixture rate {r}")
                # w r e^{r shift} ∫_m^∞ u^p e^{-(r-a)u} du, exponents combined
                total = total + coef * w * r * np.exp(r * (shift - m) + a * m) * upper_tail_sum(c, p, m)
    else:
        for coef, p, a in g.terms:
            if law.atom_at_zero:
                total = total + np.where(ind, law.atom_at_zero * coef * shift**p * np.exp(a * shift), 0.0)
            for w, r in law.mixture:
                c = a + r
                if c <= 0:
                    raise IntegrabilityError(f"rate {a} <= mixture rate {-r}")
                # w r e^{-r shift} ∫_lo^shift u^p e^{(a+r)u} du
                val = np.exp(a * shift) * lower_tail_sum(c, p, shift)
                if lower is not None:
                    tail = np.exp(c * lower - r * shift) * lower_tail_sum(c, p, lower)
                    val = np.where(shift >= lower, val - tail, 0.0)
                total = total + coef * w * r * val
    return total if total.ndim else float(total)


def _gauss_panel(f, a: float, b: float, n: int) -> float:
    x, w = np.polynomial.legendre.leggauss(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * float(np.dot(w, f(mid + half * x)))


def _adaptive_gl(f, a: float, b: float, tol: float, depth: int = 0) -> float:
    whole = _gauss_panel(f, a, b, 12)
    mid = 0.5 * (a + b)
    split = _gauss_panel(f, a, mid, 12) + _gauss_panel(f, mid, b, 12)
    if abs(split - whole) <= tol or depth >= 40:
        return split
    return _adaptive_gl(f, a, mid, 0.5 * tol, depth + 1) + _adaptive_gl(f, mid, b, 0.5 * tol, depth + 1)


def _expect_numeric(law: ExtremumLaw, g, shift: float, lower) -> float:
    s = law._orient()
    total = 0.0
    if law.atom_at_zero and (lower is None or shift >= lower):
        total += law.atom_at_zero * float(g(shift))
    horizon = _TRUNCATION / law.min_rate
    # restrict the range so the indicator never cuts inside a panel
    lo, hi = 0.0, horizon
    capped = False
    if lower is not None:
        if s > 0:
            lo = min(max(lower - shift, 0.0), horizon)
        else:
            cut = max(shift - lower, 0.0)
            if cut < horizon:
                hi, capped = cut, True
    if hi <= lo:
        return total
    for w, r in law.mixture:
        def integrand(t, _r=r):
            # density first: where it underflows the contribution is zero and
            # g (which may overflow there) must not be evaluated
            t = np.asarray(t, dtype=float)
            dens = _r * np.exp(-_r * t)
            out = np.zeros_like(t)
            mask = dens > 0.0
            if np.any(mask):
                out[mask] = np.asarray(g(shift + s * t[mask]), dtype=float) * dens[mask]
            return out
        val = _adaptive_gl(integrand, lo, hi, tol=1e-12)
        if not capped:
            # integrands decaying barely faster than the slowest mixture rate
            # need more room than the base horizon; extend geometrically until
            # blocks stop contributing (integrability is caller-guaranteed)
            a, b = hi, 2.0 * hi
            for _ in range(24):
                block = _adaptive_gl(integrand, a, b, tol=1e-12)
                val += block
                if abs(block) <= 1e-12 * (1.0 + abs(val)):
                    break
                a, b = b, 2.0 * b
        total += w * val
    return total


def expect(law: ExtremumLaw, g, shift=0.0, indicator_from=None):
    """E[g(E + shift) 1{E + shift >= indicator_from}] for the extremum E.

    Exact when g is an ExpPolynomial (exponentials, polynomials and their
    products); otherwise adaptive Gauss-Legendre on each mixture component,
    truncated at 60 / min-rate.
    """
    if isinstance(g, ExpPolynomial):
        return _expect_closed(law, g, shift, indicator_from)
    shift_arr = np.asarray(shift, dtype=float)
    if shift_arr.ndim == 0:
        return _expect_numeric(law, g, float(shift_arr), indicator_from)
    return np.array([_expect_numeric(law, g, float(x), indicator_from) for x in shift_arr])
