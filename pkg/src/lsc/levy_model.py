"""Levy process families: jump diffusions and compound Poisson processes with
two-sided exponential jumps.

The process is parametrized in natural-drift form

    X_t = drift * t + sigma * B_t + sum_i Y^(1)_i - sum_j Y^(2)_j,

with Y^(k) ~ Exp(eta_k) arriving at Poisson rates lambda_k, so the Laplace
exponent is

    phi(z) = sigma^2 z^2 / 2 + drift * z
             + lambda_up * z / (eta_up - z) - lambda_down * z / (eta_down + z),

analytic between the jump poles.  `drift` is the deterministic slope, not the
compensated mean; the mean rate E X_1 = drift + lambda_up/eta_up -
lambda_down/eta_down is exposed separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError


class ProcessKind(Enum):
    JUMP_DIFFUSION = "jump_diffusion"
    COMPOUND_POISSON = "compound_poisson"


@dataclass(frozen=True)
class LevyModel:
    kind: ProcessKind
    drift: float = 0.0
    sigma: float = 0.0
    lambda_up: float = 0.0
    lambda_down: float = 0.0
    eta_up: float = 1.0
    eta_down: float = 1.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.lambda_up < 0 or self.lambda_down < 0:
            raise ValueError("jump intensities must be non-negative")
        if self.eta_up <= 0 or self.eta_down <= 0:
            raise ValueError("jump rate parameters must be positive")
        if self.kind is ProcessKind.COMPOUND_POISSON:
            if self.sigma != 0.0 or self.drift != 0.0:
                raise ValueError("compound Poisson kind requires sigma = 0 and drift = 0")
            if self.lambda_up <= 0 or self.lambda_down <= 0:
                raise ValueError("compound Poisson kind requires two-sided jump activity")
        if self.sigma == 0.0 and self.lambda_up + self.lambda_down == 0.0 and self.drift == 0.0:
            raise ValueError("process is trivial: no diffusion, no jumps, no drift")

    # -- analytic strip ------------------------------------------------------

    @property
    def pole_up(self) -> float:
        """Upper boundary of phi's domain: eta_up if there are up jumps, else +inf."""
        return self.eta_up if self.lambda_up > 0 else math.inf

    @property
    def pole_down(self) -> float:
        """Magnitude of the lower boundary: eta_down if there are down jumps, else +inf."""
        return self.eta_down if self.lambda_down > 0 else math.inf

    def in_domain(self, z: float) -> bool:
        return -self.pole_down < z < self.pole_up

    # -- characteristic exponent ----------------------------------------------

    def phi(self, z):
        """Laplace exponent phi(z) = log E e^{z X_1} on (-pole_down, pole_up)."""
        zs = np.asarray(z, dtype=float)
        if np.any(zs >= self.pole_up) or np.any(zs <= -self.pole_down):
            raise DomainError(
                f"z={z} outside the analytic strip ({-self.pole_down}, {self.pole_up})"
            )
        out = 0.5 * self.sigma**2 * zs**2 + self.drift * zs
        if self.lambda_up > 0:
            out = out + self.lambda_up * zs / (self.eta_up - zs)
        if self.lambda_down > 0:
            out = out - self.lambda_down * zs / (self.eta_down + zs)
        return out if out.ndim else float(out)

    def phi_prime(self, z):
        zs = np.asarray(z, dtype=float)
        if np.any(zs >= self.pole_up) or np.any(zs <= -self.pole_down):
            raise DomainError(f"z={z} outside the analytic strip")
        out = self.sigma**2 * zs + self.drift
        if self.lambda_up > 0:
            out = out + self.lambda_up * self.eta_up / (self.eta_up - zs) ** 2
        if self.lambda_down > 0:
            out = out - self.lambda_down * self.eta_down / (self.eta_down + zs) ** 2
        return out if out.ndim else float(out)

    # -- moments --------------------------------------------------------------

    def cumulant(self, j: int) -> float:
        """j-th cumulant of X_1 (phi's j-th Taylor coefficient times j!)."""
        if j < 1:
            raise ValueError("cumulant order must be >= 1")
        if j == 1:
            return self.drift + self.lambda_up / self.eta_up - self.lambda_down / self.eta_down
        out = math.factorial(j) * (
            self.lambda_up / self.eta_up**j + (-1.0) ** j * self.lambda_down / self.eta_down**j
        )
        if j == 2:
            out += self.sigma**2
        return out

    def mean(self) -> float:
        """E X_1."""
        return self.cumulant(1)

    def variance_rate(self) -> float:
        """Var X_1."""
        return self.cumulant(2)


@dataclass(frozen=True)
class Assumption1Report:
    """Exponential-moment check: theta in the strip and max(phi(theta), phi(-theta)) < delta."""

    theta: float
    delta: float
    theta_in_domain: bool
    phi_at_theta: float | None
    phi_at_minus_theta: float | None
    passed: bool
    reason: str

    def as_dict(self) -> dict:
        return {
            "theta": self.theta,
            "delta": self.delta,
            "theta_in_domain": self.theta_in_domain,
            "phi_at_theta": self.phi_at_theta,
            "phi_at_minus_theta": self.phi_at_minus_theta,
            "passed": self.passed,
            "reason": self.reason,
        }


def check_assumption1(model: LevyModel, delta: float, theta: float) -> Assumption1Report:
    """Report whether discounted exponential moments of order theta exist.

    Failures are reported, never raised.
    """
    if delta <= 0 or theta <= 0:
        raise ValueError("delta and theta must be positive")
    if not (model.in_domain(theta) and model.in_domain(-theta)):
        return Assumption1Report(
            theta=theta, delta=delta, theta_in_domain=False,
            phi_at_theta=None, phi_at_minus_theta=None,
            passed=False, reason="theta outside domain of phi",
        )
    up, down = model.phi(theta), model.phi(-theta)
    ok = max(up, down) < delta
    return Assumption1Report(
        theta=theta, delta=delta, theta_in_domain=True,
        phi_at_theta=up, phi_at_minus_theta=down,
        passed=ok,
        reason="" if ok else f"max(phi(theta), phi(-theta)) = {max(up, down)} >= delta = {delta}",
    )


# Convenience aliases matching the solver's public vocabulary.

def characteristic_exponent(model: LevyModel, z):
    return model.phi(z)


def mean(model: LevyModel) -> float:
    return model.mean()


def variance_rate(model: LevyModel) -> float:
    return model.variance_rate()
