"""Scenario documents: a single JSON object describing model, cost family,
discounting and simulation defaults (schema version 1).

Example:

    {
      "schema": 1,
      "model": {"kind": "compound_poisson", "lambda_up": 0.571...,
                "lambda_down": 0.428..., "eta_up": 3.0, "eta_down": 4.0},
      "cost": {"family": "exp_quadratic", "A": 1.0, "B": 1.0},
      "delta": 1.0,
      "theta": 1.0,
      "sim": {"horizon": 40.0, "dt": 0.001, "paths": 200000, "seed": 42}
    }

`sim.start_x` and `sim.barrier` may be omitted; callers fill them with the
solved threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from .cost_model import CostModel, ExpExpCost, ExpQuadraticCost, MonomialLinearCost
from .errors import ScenarioError
from .levy_model import LevyModel, ProcessKind
from .mc_simulator import SimConfig

SCHEMA_VERSION = 1

_MODEL_FIELDS = {"kind", "drift", "sigma", "lambda_up", "lambda_down", "eta_up", "eta_down"}
_COST_FIELDS = {
    "exp_exp": {"A", "alpha", "B", "beta"},
    "monomial_linear": {"A", "n", "B"},
    "exp_quadratic": {"A", "B"},
}


@dataclass(frozen=True)
class Scenario:
    model: LevyModel
    cost: CostModel
    delta: float
    theta: float
    sim: dict = field(default_factory=dict)
    outputs: tuple[str, ...] = ()
    name: str = ""

    def sim_config(self, x_star: float | None = None, **overrides) -> SimConfig:
        """SimConfig from defaults <- scenario sim block <- keyword overrides."""
        merged = {
            "horizon": 40.0 / self.delta,
            "dt": 1e-3,
            "paths": 20_000,
            "seed": 0,
            "start_x": x_star,
            "barrier": x_star,
        }
        merged.update({k: v for k, v in self.sim.items() if v is not None})
        merged.update({k: v for k, v in overrides.items() if v is not None})
        if merged["start_x"] is None or merged["barrier"] is None:
            raise ScenarioError("sim.start_x / sim.barrier missing and no threshold provided")
        return SimConfig(
            horizon=float(merged["horizon"]),
            dt=float(merged["dt"]),
            paths=int(merged["paths"]),
            seed=int(merged["seed"]),
            start_x=float(merged["start_x"]),
            barrier=float(merged["barrier"]),
        )


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ScenarioError(msg)


def _number(obj: dict, key: str, where: str) -> float:
    _require(key in obj, f"{where}: missing field '{key}'")
    val = obj[key]
    _require(isinstance(val, (int, float)) and not isinstance(val, bool),
             f"{where}: field '{key}' must be a number")
    return float(val)


def parse_scenario(doc: dict, name: str = "") -> Scenario:
    _require(isinstance(doc, dict), "scenario must be a JSON object")
    _require(doc.get("schema") == SCHEMA_VERSION,
             f"unsupported schema version {doc.get('schema')!r} (expected {SCHEMA_VERSION})")

    mdoc = doc.get("model")
    _require(isinstance(mdoc, dict), "missing 'model' object")
    unknown = set(mdoc) - _MODEL_FIELDS
    _require(not unknown, f"model: unknown fields {sorted(unknown)}")
    kind_raw = mdoc.get("kind")
    try:
        kind = ProcessKind(kind_raw)
    except ValueError:
        raise ScenarioError(f"model: unknown kind {kind_raw!r}") from None
    try:
        model = LevyModel(
            kind=kind,
            drift=float(mdoc.get("drift", 0.0)),
            sigma=float(mdoc.get("sigma", 0.0)),
            lambda_up=float(mdoc.get("lambda_up", 0.0)),
            lambda_down=float(mdoc.get("lambda_down", 0.0)),
            eta_up=float(mdoc.get("eta_up", 1.0)),
            eta_down=float(mdoc.get("eta_down", 1.0)),
        )
    except ValueError as exc:
        raise ScenarioError(f"model: {exc}") from None

    cdoc = doc.get("cost")
    _require(isinstance(cdoc, dict), "missing 'cost' object")
    family = cdoc.get("family")
    _require(family in _COST_FIELDS, f"cost: unknown family {family!r}")
    unknown = set(cdoc) - _COST_FIELDS[family] - {"family"}
    _require(not unknown, f"cost: unknown fields {sorted(unknown)}")
    try:
        if family == "exp_exp":
            cost = ExpExpCost(A=_number(cdoc, "A", "cost"), alpha=_number(cdoc, "alpha", "cost"),
                              B=_number(cdoc, "B", "cost"), beta=_number(cdoc, "beta", "cost"))
        elif family == "monomial_linear":
            n = cdoc.get("n")
            _require(isinstance(n, int) and not isinstance(n, bool), "cost: 'n' must be an integer")
            cost = MonomialLinearCost(A=_number(cdoc, "A", "cost"), n=n, B=_number(cdoc, "B", "cost"))
        else:
            cost = ExpQuadraticCost(A=_number(cdoc, "A", "cost"), B=_number(cdoc, "B", "cost"))
    except ValueError as exc:
        raise ScenarioError(f"cost: {exc}") from None

    delta = _number(doc, "delta", "scenario")
    theta = _number(doc, "theta", "scenario")
    _require(delta > 0, "scenario: delta must be positive")
    _require(theta > 0, "scenario: theta must be positive")

    sim = doc.get("sim", {})
    _require(isinstance(sim, dict), "'sim' must be an object")
    known_sim = {"horizon", "dt", "paths", "seed", "start_x", "barrier"}
    unknown = set(sim) - known_sim
    _require(not unknown, f"sim: unknown fields {sorted(unknown)}")

    outputs = doc.get("outputs", [])
    _require(isinstance(outputs, list) and all(isinstance(o, str) for o in outputs),
             "'outputs' must be a list of strings")

    return Scenario(model=model, cost=cost, delta=delta, theta=theta,
                    sim=dict(sim), outputs=tuple(outputs),
                    name=doc.get("name", name))


def load_scenario(path: str) -> Scenario:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from None
    return parse_scenario(doc, name=path)


def bundled_scenario(name: str) -> Scenario:
    """Load one of the shipped golden scenarios by file name."""
    ref = resources.files("lsc.scenarios").joinpath(name)
    with resources.as_file(ref) as path:
        return load_scenario(str(path))
