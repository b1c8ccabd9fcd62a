"""Exponential-polynomial functions: finite sums of  coef * x^p * exp(rate*x).

Every cost family in the library (exponential, monomial, exp + quadratic) and
every derived object (r, H, Q, the stopping value v, its primitive W) lives in
this class, which is closed under differentiation, integration and the
expectation operators used by the fluctuation module.  Keeping the structure
explicit is what makes expectations against atom-plus-exponential-mixture laws
exact instead of quadrature-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

Term = tuple[float, int, float]  # (coef, power, rate)


def _canonical(terms) -> tuple[Term, ...]:
    acc: dict[tuple[int, float], float] = {}
    for coef, power, rate in terms:
        if power < 0:
            raise ValueError("powers must be non-negative integers")
        key = (int(power), float(rate))
        acc[key] = acc.get(key, 0.0) + float(coef)
    out = [(c, p, r) for (p, r), c in acc.items() if c != 0.0]
    out.sort(key=lambda t: (t[2], t[1]))
    return tuple(out)


@dataclass(frozen=True)
class ExpPolynomial:
    """Immutable sum of terms coef * x^power * exp(rate * x)."""

    terms: tuple[Term, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", _canonical(self.terms))

    # -- constructors -------------------------------------------------------

    @staticmethod
    def zero() -> "ExpPolynomial":
        return ExpPolynomial(())

    @staticmethod
    def constant(c: float) -> "ExpPolynomial":
        return ExpPolynomial(((float(c), 0, 0.0),))

    @staticmethod
    def exponential(coef: float, rate: float) -> "ExpPolynomial":
        return ExpPolynomial(((float(coef), 0, float(rate)),))

    @staticmethod
    def polynomial(coeffs) -> "ExpPolynomial":
        """coeffs[k] multiplies x^k."""
        return ExpPolynomial(tuple((float(c), k, 0.0) for k, c in enumerate(coeffs)))

    # -- evaluation ---------------------------------------------------------

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for coef, power, rate in self.terms:
            t = np.full_like(x, coef)
            if power:
                t = t * x**power
            if rate != 0.0:
                t = t * np.exp(rate * x)
            out = out + t
        return out if out.ndim else float(out)

    # -- algebra ------------------------------------------------------------

    def __add__(self, other: "ExpPolynomial") -> "ExpPolynomial":
        return ExpPolynomial(self.terms + other.terms)

    def __sub__(self, other: "ExpPolynomial") -> "ExpPolynomial":
        return self + (-other)

    def __neg__(self) -> "ExpPolynomial":
        return self.scale(-1.0)

    def scale(self, s: float) -> "ExpPolynomial":
        return ExpPolynomial(tuple((c * s, p, r) for c, p, r in self.terms))

    # -- calculus -----------------------------------------------------------

    def derivative(self) -> "ExpPolynomial":
        out: list[Term] = []
        for c, p, r in self.terms:
            if r != 0.0:
                out.append((c * r, p, r))
            if p > 0:
                out.append((c * p, p - 1, r))
        return ExpPolynomial(tuple(out))

    def antiderivative(self) -> "ExpPolynomial":
        """A primitive with no constant of integration.

        Uses  ∫ x^p e^{rx} dx = e^{rx} Σ_{j=0..p} (-1)^j p!/(p-j)! x^{p-j}/r^{j+1}.
        """
        out: list[Term] = []
        for c, p, r in self.terms:
            if r == 0.0:
                out.append((c / (p + 1), p + 1, 0.0))
            else:
                for j in range(p + 1):
                    coef = c * ((-1.0) ** j) * math.factorial(p) / math.factorial(p - j) / r ** (j + 1)
                    out.append((coef, p - j, r))
        return ExpPolynomial(tuple(out))

    # -- structure queries ---------------------------------------------------

    @property
    def max_rate(self) -> float:
        return max((r for _, _, r in self.terms), default=0.0)

    @property
    def min_rate(self) -> float:
        return min((r for _, _, r in self.terms), default=0.0)

    @property
    def degree(self) -> int:
        return max((p for _, p, _ in self.terms), default=0)


def upper_tail_sum(c: float, p: int, m):
    """S with  ∫_m^∞ u^p e^{-cu} du = e^{-cm} * S(m),  c > 0.

    S(m) = Σ_{j=0..p} p!/(p-j)! * m^{p-j} / c^{j+1}.  Array-safe in m.
    """
    m = np.asarray(m, dtype=float)
    s = np.zeros_like(m)
    fact = 1.0
    for j in range(p + 1):
        if j > 0:
            fact *= p - j + 1
        s = s + fact * m ** (p - j) / c ** (j + 1)
    return s


def lower_tail_sum(c: float, p: int, t):
    """S with  ∫_{-∞}^t u^p e^{cu} du = e^{ct} * S(t),  c > 0."""
    t = np.asarray(t, dtype=float)
    s = np.zeros_like(t)
    fact = 1.0
    for j in range(p + 1):
        if j > 0:
            fact *= p - j + 1
        s = s + ((-1.0) ** j) * fact * t ** (p - j) / c ** (j + 1)
    return s


@dataclass(frozen=True)
class PiecewiseExpPolynomial:
    """Exp-polynomial pieces on intervals split by sorted breakpoints.

    pieces[i] applies on [breakpoints[i-1], breakpoints[i]); the value at a
    breakpoint itself comes from the right piece.
    """

    breakpoints: tuple[float, ...]
    pieces: tuple[ExpPolynomial, ...]

    def __post_init__(self):
        if len(self.pieces) != len(self.breakpoints) + 1:
            raise ValueError("need exactly len(breakpoints)+1 pieces")
        if any(b1 >= b2 for b1, b2 in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValueError("breakpoints must be strictly increasing")

    def _piece_index(self, x):
        return np.searchsorted(np.asarray(self.breakpoints), x, side="right")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = self._piece_index(x)
        out = np.zeros_like(x)
        for i, piece in enumerate(self.pieces):
            mask = idx == i
            if np.any(mask):
                out = np.where(mask, piece(x), out)
        return out if out.ndim else float(out)

    def derivative(self) -> "PiecewiseExpPolynomial":
        return PiecewiseExpPolynomial(self.breakpoints, tuple(p.derivative() for p in self.pieces))

    def antiderivative(self, anchor: float) -> "PiecewiseExpPolynomial":
        """The continuous primitive vanishing at `anchor`."""
        prims = [p.antiderivative() for p in self.pieces]
        # constants chain left and right from the piece containing the anchor
        consts = [0.0] * len(prims)
        i0 = int(self._piece_index(anchor))
        consts[i0] = -float(prims[i0](anchor))
        for i in range(i0 + 1, len(prims)):
            b = self.breakpoints[i - 1]
            consts[i] = consts[i - 1] + float(prims[i - 1](b)) - float(prims[i](b))
        for i in range(i0 - 1, -1, -1):
            b = self.breakpoints[i]
            consts[i] = consts[i + 1] + float(prims[i + 1](b)) - float(prims[i](b))
        pieces = tuple(p + ExpPolynomial.constant(c) for p, c in zip(prims, consts))
        return PiecewiseExpPolynomial(self.breakpoints, pieces)
