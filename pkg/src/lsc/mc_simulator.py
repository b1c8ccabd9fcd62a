"""Monte Carlo estimation of the discounted control cost J_delta(x, D^b).

Paths are simulated exactly at event resolution: jump times from exponential
interarrivals, jump sizes from the exponential laws, Brownian increments on
the merged grid of uniform dt-points and jump times.  The reflecting control
is the running-maximum Skorokhod recursion applied at every epoch.

Per-path randomness comes from numpy Generators seeded with the entropy pair
(seed, path_index) through SeedSequence, whose stream independence for
distinct entropy is documented; identical inputs reproduce bit-identical
estimates, and accumulation is index-ordered so threading cannot reorder it.

Piecewise-constant paths (compound Poisson) use the exact per-segment
discount integral instead of the trapezoid that approximates it, so the
estimator is exact conditional on the jump skeleton and independent of dt.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cost_model import CostModel
from .errors import ConfigError
from .levy_model import LevyModel

_CHUNK = 10_000


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("LSC_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class SimConfig:
    horizon: float
    dt: float
    paths: int
    seed: int
    start_x: float
    barrier: float

    def __post_init__(self):
        if self.horizon <= 0 or self.dt <= 0:
            raise ConfigError("horizon and dt must be positive")
        if self.dt > self.horizon:
            raise ConfigError("dt must not exceed the horizon")
        if self.paths < 1:
            raise ConfigError("paths must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")


@dataclass(frozen=True)
class CostEstimate:
    mean: float
    stderr: float
    components: dict
    tail_bound: float
    paths: int

    def as_dict(self) -> dict:
        return {
            "mean": self.mean,
            "stderr": self.stderr,
            "components": dict(self.components),
            "tail_bound": self.tail_bound,
            "paths": self.paths,
        }


@dataclass(frozen=True)
class PathEvents:
    """Epoch skeleton of one simulated path.

    times[0] = 0 and times[-1] = horizon; x_pre holds X at each epoch before
    the jump landing there (equal to x_post at non-jump epochs).
    """

    times: np.ndarray
    x_pre: np.ndarray
    x_post: np.ndarray
    jump: np.ndarray
    is_jump: np.ndarray


@dataclass(frozen=True)
class ReflectedPath:
    d0: float
    xb_pre: np.ndarray
    xb_post: np.ndarray
    d_pre: np.ndarray
    d_post: np.ndarray
    dd_cont: np.ndarray   # continuous control accrued on the segment ending at epoch i
    dd_jump: np.ndarray   # control applied against the jump at epoch i


def _path_rng(seed: int, path_index: int) -> np.random.Generator:
    return np.random.default_rng([seed, path_index])


def _draw_arrivals(rng: np.random.Generator, lam: float, horizon: float) -> np.ndarray:
    if lam <= 0:
        return np.empty(0)
    block = int(lam * horizon + 10.0 * math.sqrt(lam * horizon) + 10.0)
    times: list[np.ndarray] = []
    t = 0.0
    while True:
        cum = t + np.cumsum(rng.exponential(1.0 / lam, size=block))
        times.append(cum[cum < horizon])
        if cum[-1] >= horizon:
            break
        t = cum[-1]
    return np.concatenate(times)


def _draw_jumps(rng: np.random.Generator, model: LevyModel, horizon: float):
    """Jump times and signed sizes in a fixed draw order (up times, up sizes,
    down times, down sizes) so event sequences are reproducible per stream."""
    t_up = _draw_arrivals(rng, model.lambda_up, horizon)
    s_up = rng.exponential(1.0 / model.eta_up, size=t_up.size)
    t_dn = _draw_arrivals(rng, model.lambda_down, horizon)
    s_dn = -rng.exponential(1.0 / model.eta_down, size=t_dn.size)
    times = np.concatenate([t_up, t_dn])
    sizes = np.concatenate([s_up, s_dn])
    order = np.argsort(times, kind="stable")
    return times[order], sizes[order]


def _piecewise_constant(model: LevyModel) -> bool:
    return model.sigma == 0.0 and model.drift == 0.0


def simulate_path(model: LevyModel, config: SimConfig, path_index: int) -> PathEvents:
    """One uncontrolled path on the merged grid of dt-points and jump times.

    Piecewise-constant models (sigma = 0, drift = 0) carry only jump epochs:
    uniform grid points would hold zero increments.
    """
    rng = _path_rng(config.seed, path_index)
    jt, js = _draw_jumps(rng, model, config.horizon)

    if _piecewise_constant(model):
        times = np.concatenate([[0.0], jt, [config.horizon]])
        jump = np.concatenate([[0.0], js, [0.0]])
    else:
        grid = np.arange(0.0, config.horizon, config.dt)
        times = np.unique(np.concatenate([grid, jt, [config.horizon]]))
        jump = np.zeros_like(times)
        np.add.at(jump, np.searchsorted(times, jt), js)

    n = times.size
    incr = model.drift * np.diff(times)
    if model.sigma > 0:
        incr = incr + model.sigma * np.sqrt(np.diff(times)) * rng.standard_normal(n - 1)
    x_pre = np.empty(n)
    x_pre[0] = config.start_x
    x_pre[1:] = config.start_x + np.cumsum(incr) + np.cumsum(jump)[:-1]
    return PathEvents(times, x_pre, x_pre + jump, jump, jump != 0.0)


def reflect_at_barrier(events: PathEvents, barrier: float,
                       start_x: float | None = None) -> ReflectedPath:
    """Skorokhod running-max recursion D_t = max(sup_{s<=t} X_s - b, 0) at epochs."""
    x = events.x_post[0] if start_x is None else start_x
    n = events.times.size
    interleaved = np.empty(2 * n - 1)
    interleaved[0] = x
    interleaved[1::2] = events.x_pre[1:]
    interleaved[2::2] = events.x_post[1:]
    acc = np.maximum.accumulate(interleaved)
    m_pre = np.empty(n)
    m_pre[0] = x
    m_pre[1:] = acc[1::2]
    m_post = np.empty(n)
    m_post[0] = x
    m_post[1:] = acc[2::2]

    d_pre = np.maximum(m_pre - barrier, 0.0)
    d_post = np.maximum(m_post - barrier, 0.0)
    dd_cont = np.zeros(n)
    dd_cont[1:] = d_pre[1:] - d_post[:-1]
    return ReflectedPath(
        d0=float(d_post[0]),
        xb_pre=events.x_pre - d_pre,
        xb_post=events.x_post - d_post,
        d_pre=d_pre,
        d_post=d_post,
        dd_cont=dd_cont,
        dd_jump=d_post - d_pre,
    )


def _inner_control_cost(cm: CostModel, a, d):
    """Average of c along the controlled jump segment, safe where d = 0."""
    a = np.asarray(a, dtype=float)
    d = np.asarray(d, dtype=float)
    safe = np.where(d > 0, d, 1.0)
    return np.where(d > 0, cm.control_cost_integral(a, safe), 0.0)


def path_cost_components(events: PathEvents, refl: ReflectedPath, cm: CostModel,
                         delta: float, barrier: float,
                         exact_segments: bool) -> tuple[float, float, float, float]:
    """(running, continuous_control, jump_control, initial_control) for one path.

    Running cost: trapezoid of e^{-delta s} f(X^b) on the epoch grid, or the
    exact segment integral when X^b is constant between epochs.  Continuous
    control: c(barrier) times discounted increments of the running maximum.
    Jump control: the inner lambda-average of c in closed form per family.
    """
    t = events.times
    disc = np.exp(-delta * t)

    if exact_segments:
        fv = np.asarray(cm.f(refl.xb_post[:-1]), dtype=float)
        running = float(np.dot(fv, (disc[:-1] - disc[1:]) / delta))
    else:
        fl = np.asarray(cm.f(refl.xb_post[:-1]), dtype=float)
        fr = np.asarray(cm.f(refl.xb_pre[1:]), dtype=float)
        running = float(np.dot(np.diff(t), 0.5 * (disc[:-1] * fl + disc[1:] * fr)))

    cont = float(cm.c(barrier)) * float(np.dot(refl.dd_cont[1:], 0.5 * (disc[:-1] + disc[1:])))

    mask = refl.dd_jump > 0
    mask[0] = False
    jump_cost = 0.0
    if mask.any():
        a = refl.xb_pre[mask] + events.jump[mask]
        d = refl.dd_jump[mask]
        jump_cost = float(np.dot(disc[mask] * d, _inner_control_cost(cm, a, d)))

    initial = 0.0
    if refl.d0 > 0:
        x0 = refl.xb_post[0] + refl.d0
        initial = refl.d0 * float(np.asarray(_inner_control_cost(cm, x0, refl.d0)))
    return running, cont, jump_cost, initial


def tail_bound(cm: CostModel, delta: float, horizon: float, barrier: float,
               theta: float = 1.0) -> float:
    """e^{-delta T} K_f (1 + cosh(theta b)) / delta with K_f fitted by scanning
    |f| / (1 + cosh(theta x)) on [-30, 30]."""
    xs = np.linspace(-30.0, 30.0, 601)
    k_f = float(np.max(np.abs(np.asarray(cm.f(xs), dtype=float)) / (1.0 + np.cosh(theta * xs))))
    with np.errstate(over="ignore"):
        envelope = 1.0 + float(np.cosh(theta * barrier))  # inf for absurd barriers, not an error
    return math.exp(-delta * horizon) * k_f * envelope / delta


# -- batched kernel for piecewise-constant paths --------------------------------

def _cpp_chunk_components(model: LevyModel, cm: CostModel, delta: float,
                          config: SimConfig, indices: np.ndarray,
                          barriers: np.ndarray) -> np.ndarray:
    """Components for a chunk of compound-Poisson paths, all barriers at once.

    Returns an array of shape (n_barriers, 4, n_paths); common random numbers
    across barriers come from reusing the drawn jump skeletons.
    """
    horizon, x = config.horizon, config.start_x
    jumps = []
    times = []
    for idx in indices:
        jt, js = _draw_jumps(_path_rng(config.seed, int(idx)), model, horizon)
        times.append(jt)
        jumps.append(js)
    kmax = max((t.size for t in times), default=0)
    m = len(indices)
    # padded epochs: column 0 is time zero, padded tail events sit at the horizon
    t_pad = np.full((m, kmax + 1), horizon)
    s_pad = np.zeros((m, kmax + 1))
    t_pad[:, 0] = 0.0
    for i, (jt, js) in enumerate(zip(times, jumps)):
        t_pad[i, 1:1 + jt.size] = jt
        s_pad[i, 1:1 + js.size] = js

    x_post = x + np.cumsum(s_pad, axis=1)          # X after each epoch
    x_pre = x_post - s_pad                          # X before the jump
    m_post = np.maximum.accumulate(x_post, axis=1)  # running max includes X_0 = x
    disc = np.exp(-delta * t_pad)
    disc_next = np.empty_like(disc)
    disc_next[:, :-1] = disc[:, 1:]
    disc_next[:, -1] = math.exp(-delta * horizon)

    out = np.empty((barriers.size, 4, m))
    for bi, b in enumerate(barriers):
        d_post = np.maximum(m_post - b, 0.0)
        d_pre = np.empty_like(d_post)
        d_pre[:, 0] = 0.0
        d_pre[:, 1:] = d_post[:, :-1]
        dd = d_post - d_pre
        xb_post = x_post - d_post

        running = np.einsum("ij,ij->i", cm.f(xb_post), disc - disc_next) / delta

        dd_j = dd[:, 1:]
        a = (x_pre - d_pre)[:, 1:] + s_pad[:, 1:]
        inner = _inner_control_cost(cm, a, dd_j)
        jump_cost = np.einsum("ij,ij->i", disc[:, 1:] * dd_j, inner)

        d0 = d_post[:, 0]
        initial = d0 * np.asarray(_inner_control_cost(cm, np.full(m, x), d0))

        out[bi, 0] = running
        out[bi, 1] = 0.0                  # no continuous control without diffusion
        out[bi, 2] = jump_cost
        out[bi, 3] = initial
    return out


def _generic_chunk_components(model: LevyModel, cm: CostModel, delta: float,
                              config: SimConfig, indices: np.ndarray,
                              barriers: np.ndarray) -> np.ndarray:
    out = np.empty((barriers.size, 4, indices.size))
    for i, idx in enumerate(indices):
        events = simulate_path(model, config, int(idx))
        for bi, b in enumerate(barriers):
            refl = reflect_at_barrier(events, b)
            out[bi, :, i] = path_cost_components(events, refl, cm, delta, b,
                                                 exact_segments=False)
    return out


def _all_components(model: LevyModel, cm: CostModel, delta: float,
                    config: SimConfig, barriers: np.ndarray) -> np.ndarray:
    """(n_barriers, 4, paths) component matrix, chunked and optionally threaded."""
    kernel = _cpp_chunk_components if _piecewise_constant(model) else _generic_chunk_components
    chunks = [np.arange(lo, min(lo + _CHUNK, config.paths))
              for lo in range(0, config.paths, _CHUNK)]
    out = np.empty((barriers.size, 4, config.paths))

    def work(chunk):
        return chunk, kernel(model, cm, delta, config, chunk, barriers)

    n_threads = _thread_count()
    if n_threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            for chunk, vals in pool.map(work, chunks):
                out[:, :, chunk[0]:chunk[-1] + 1] = vals
    else:
        for chunk in chunks:
            _, vals = work(chunk)
            out[:, :, chunk[0]:chunk[-1] + 1] = vals
    return out


_COMPONENT_NAMES = ("running", "continuous_control", "jump_control", "initial_control")


def _estimate_from_components(comp: np.ndarray, cm: CostModel, delta: float,
                              config: SimConfig, barrier: float, theta: float,
                              tail_tol: float | None) -> CostEstimate:
    totals = comp.sum(axis=0)
    mean = float(totals.mean())
    stderr = float(totals.std(ddof=1) / math.sqrt(totals.size)) if totals.size > 1 else 0.0
    bound = tail_bound(cm, delta, config.horizon, barrier, theta)
    if tail_tol is not None and bound > tail_tol:
        raise ConfigError(f"horizon truncation bound {bound} exceeds tolerance {tail_tol}")
    components = {name: float(comp[k].mean()) for k, name in enumerate(_COMPONENT_NAMES)}
    return CostEstimate(mean=mean, stderr=stderr, components=components,
                        tail_bound=bound, paths=totals.size)


def estimate_cost(model: LevyModel, cm: CostModel, delta: float, config: SimConfig,
                  theta: float = 1.0, tail_tol: float | None = None) -> CostEstimate:
    """Estimate J_delta(start_x, D^barrier) with component breakdown."""
    comp = _all_components(model, cm, delta, config, np.array([config.barrier]))
    return _estimate_from_components(comp[0], cm, delta, config, config.barrier,
                                     theta, tail_tol)


@dataclass(frozen=True)
class SweepReport:
    argmin_barrier: float
    argmin_index: int
    decreasing_before: bool
    increasing_after: bool

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class SweepResult:
    entries: tuple[tuple[float, CostEstimate], ...]
    report: SweepReport


def barrier_sweep(model: LevyModel, cm: CostModel, delta: float, config: SimConfig,
                  barriers, theta: float = 1.0) -> SweepResult:
    """Estimates across barriers under common random numbers, with a monotone
    structure report based on paired (per-path difference) standard errors."""
    barriers = np.asarray(barriers, dtype=float)
    comp = _all_components(model, cm, delta, config, barriers)
    entries = tuple(
        (float(b), _estimate_from_components(comp[i], cm, delta, config, float(b),
                                             theta, None))
        for i, b in enumerate(barriers)
    )
    totals = comp.sum(axis=1)  # (n_barriers, paths)
    means = totals.mean(axis=1)
    k = int(np.argmin(means))

    def paired_ok(i, j, want_greater):
        diff = totals[i] - totals[j]
        se = diff.std(ddof=1) / math.sqrt(diff.size) if diff.size > 1 else 0.0
        margin = 2.0 * se
        d = float(diff.mean())
        return d >= -margin if want_greater else d <= margin

    decreasing = all(paired_ok(i, i + 1, True) for i in range(k))
    increasing = all(paired_ok(i + 1, i, True) for i in range(k, barriers.size - 1))
    return SweepResult(
        entries=entries,
        report=SweepReport(
            argmin_barrier=float(barriers[k]),
            argmin_index=k,
            decreasing_before=decreasing,
            increasing_after=increasing,
        ),
    )
