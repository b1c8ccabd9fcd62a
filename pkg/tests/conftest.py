import math

import numpy as np
import pytest

from lsc import ExpExpCost, ExpQuadraticCost, LevyModel, ProcessKind


@pytest.fixture(scope="session")
def cpp_model():
    """Compound Poisson with lambda_1 = 4/7, lambda_2 = 3/7, rates 3 and 4.

    phi(z) = 1 has the exact roots z = 2 and z = -3, E X_1 = 1/12."""
    return LevyModel(ProcessKind.COMPOUND_POISSON, lambda_up=4 / 7, lambda_down=3 / 7,
                     eta_up=3.0, eta_down=4.0)


@pytest.fixture(scope="session")
def cpp_cost():
    return ExpQuadraticCost(A=1.0, B=1.0)


@pytest.fixture(scope="session")
def jd_model():
    """Two-sided jump diffusion used across tests (valid at delta = 0.8, theta = 1.2)."""
    return LevyModel(ProcessKind.JUMP_DIFFUSION, drift=0.05, sigma=0.5,
                     lambda_up=0.6, lambda_down=0.8, eta_up=3.0, eta_down=2.5)


@pytest.fixture(scope="session")
def brownian_sqrt2():
    """phi(z) = z^2; at delta = 2 the ExpExp(1,1,1,1) barrier is log(1+sqrt 2)."""
    return LevyModel(ProcessKind.JUMP_DIFFUSION, sigma=math.sqrt(2.0))


def random_jump_diffusion(rng: np.random.Generator) -> LevyModel:
    return LevyModel(
        ProcessKind.JUMP_DIFFUSION,
        drift=float(rng.uniform(-0.4, 0.4)),
        sigma=float(rng.uniform(0.3, 1.5)),
        lambda_up=float(rng.uniform(0.1, 2.0)),
        lambda_down=float(rng.uniform(0.1, 2.0)),
        eta_up=float(rng.uniform(1.5, 5.0)),
        eta_down=float(rng.uniform(1.5, 5.0)),
    )


def random_compound_poisson(rng: np.random.Generator) -> LevyModel:
    return LevyModel(
        ProcessKind.COMPOUND_POISSON,
        lambda_up=float(rng.uniform(0.2, 2.0)),
        lambda_down=float(rng.uniform(0.2, 2.0)),
        eta_up=float(rng.uniform(1.5, 5.0)),
        eta_down=float(rng.uniform(1.5, 5.0)),
    )


def random_exp_exp_scenario(rng: np.random.Generator):
    """A jump diffusion with an ExpExp cost valid at theta = max(alpha, beta).

    Resamples until the exponential-moment condition holds, which also keeps
    the resolvent gaps delta - phi(alpha) and delta - phi(-beta) positive."""
    from lsc import ExpExpCost, check_assumption1

    while True:
        m = random_jump_diffusion(rng)
        delta = float(rng.uniform(1.0, 2.2))
        cm = ExpExpCost(A=float(rng.uniform(0.3, 2.0)), alpha=float(rng.uniform(0.4, 1.0)),
                        B=float(rng.uniform(0.3, 3.0)), beta=float(rng.uniform(0.4, 1.0)))
        if check_assumption1(m, delta, max(cm.alpha, cm.beta)).passed:
            return m, cm, delta
