"""Scenario files: a YAML schema covering model, simulation, and optimization.

Parsing walks the composed YAML node tree rather than a plain safe_load so
every complaint (unknown key, wrong type, missing field, duplicate key) can
point at the file, line, and column it came from, with a dotted key path.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .config import ModelConfig, from_tenor_maps
from .errors import ConfigError, ScenarioError
from .frontier import Objective, OptimizationSpec
from .montecarlo import DEFAULT_PERCENTILES, SimulationSpec

_MODEL_KEYS = {"max_maturity", "growth_factor", "correlation", "correlation_mode",
               "deficit", "tenors"}
_DEFICIT_KEYS = {"mean", "vol", "persistence"}
_TENOR_KEYS = {"tenor", "allocation", "mean_rate", "vol", "persistence"}
_SIMULATION_KEYS = {"horizon", "paths", "seed", "burn_in", "warm_start", "threads",
                    "percentiles"}
_OPTIMIZATION_KEYS = {"objective", "rollover_cap", "cap_grid", "lower_bounds",
                      "upper_bounds", "rho_override"}
_TOP_KEYS = {"model", "simulation", "optimization", "reference"}


@dataclass(frozen=True)
class Scenario:
    config: ModelConfig
    simulation: SimulationSpec
    optimization: OptimizationSpec
    cap_grid: tuple[float, ...] | None
    percentiles: tuple[float, ...]
    reference: dict[str, float]
    source: str = "scenario"


def _err(message: str, node, path: str, source: str) -> ScenarioError:
    mark = getattr(node, "start_mark", None)
    line = mark.line + 1 if mark is not None else None
    column = mark.column + 1 if mark is not None else None
    return ScenarioError(message, path=path, line=line, column=column, source=source)


class _Walker:
    def __init__(self, text: str, source: str):
        self.source = source
        loader = yaml.SafeLoader(io.StringIO(text))
        try:
            self.root = loader.get_single_node()
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise ScenarioError(
                f"invalid YAML: {getattr(exc, 'problem', exc)}",
                line=mark.line + 1 if mark else None,
                column=mark.column + 1 if mark else None,
                source=source) from exc
        finally:
            self._loader = loader
        if self.root is None:
            raise ScenarioError("scenario file is empty", source=source)

    def construct(self, node):
        return self._loader.construct_object(node, deep=True)

    def mapping(self, node, path: str, allowed: set[str] | None) -> dict[str, object]:
        if not isinstance(node, yaml.MappingNode):
            raise _err("expected a mapping", node, path, self.source)
        out: dict[str, object] = {}
        for key_node, value_node in node.value:
            key = self.construct(key_node)
            key = str(key)
            child = f"{path}.{key}" if path else key
            if key in out:
                raise _err(f"duplicate key '{key}'", key_node, child, self.source)
            if allowed is not None and key not in allowed:
                raise _err(f"unknown key '{key}' (allowed: {', '.join(sorted(allowed))})",
                           key_node, child, self.source)
            out[key] = value_node
        return out

    def scalar(self, node, path: str, kind, kind_name: str):
        value = self.construct(node)
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if kind is bool and not isinstance(value, bool):
            raise _err(f"expected a boolean, got {value!r}", node, path, self.source)
        if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
            raise _err(f"expected {kind_name}, got {value!r}", node, path, self.source)
        return value

    def sequence(self, node, path: str) -> list:
        if not isinstance(node, yaml.SequenceNode):
            raise _err("expected a list", node, path, self.source)
        return list(node.value)


def _require(mapping: dict, key: str, parent_node, path: str, source: str):
    if key not in mapping:
        raise _err(f"missing required key '{key}'", parent_node,
                   f"{path}.{key}" if path else key, source)
    return mapping[key]


def parse_scenario(text: str, source: str = "scenario") -> Scenario:
    w = _Walker(text, source)
    top = w.mapping(w.root, "", _TOP_KEYS)

    model_node = _require(top, "model", w.root, "", source)
    model = w.mapping(model_node, "model", _MODEL_KEYS)

    max_maturity = w.scalar(_require(model, "max_maturity", model_node, "model", source),
                            "model.max_maturity", int, "an integer")
    growth = w.scalar(_require(model, "growth_factor", model_node, "model", source),
                      "model.growth_factor", float, "a number")
    correlation = 0.0
    if "correlation" in model:
        correlation = w.scalar(model["correlation"], "model.correlation", float, "a number")
    mode = "independent"
    if "correlation_mode" in model:
        mode = w.scalar(model["correlation_mode"], "model.correlation_mode", str, "a string")

    deficit_mean, deficit_vol, deficit_persistence = 1.0, 0.0, 0.0
    if "deficit" in model:
        deficit = w.mapping(model["deficit"], "model.deficit", _DEFICIT_KEYS)
        if "mean" in deficit:
            deficit_mean = w.scalar(deficit["mean"], "model.deficit.mean", float, "a number")
        if "vol" in deficit:
            deficit_vol = w.scalar(deficit["vol"], "model.deficit.vol", float, "a number")
        if "persistence" in deficit:
            deficit_persistence = w.scalar(deficit["persistence"],
                                           "model.deficit.persistence", float, "a number")

    rows = w.sequence(_require(model, "tenors", model_node, "model", source), "model.tenors")
    if not rows:
        raise _err("model.tenors must list at least one issued tenor",
                   model["tenors"], "model.tenors", source)
    allocation: dict[int, float] = {}
    rates: dict[int, float] = {}
    vols: dict[int, float] = {}
    persists: dict[int, float] = {}
    for i, row_node in enumerate(rows):
        rpath = f"model.tenors[{i}]"
        row = w.mapping(row_node, rpath, _TENOR_KEYS)
        tenor = w.scalar(_require(row, "tenor", row_node, rpath, source),
                         f"{rpath}.tenor", int, "an integer")
        if tenor in allocation:
            raise _err(f"tenor {tenor} listed twice", row["tenor"], f"{rpath}.tenor", source)
        allocation[tenor] = w.scalar(_require(row, "allocation", row_node, rpath, source),
                                     f"{rpath}.allocation", float, "a number")
        rates[tenor] = w.scalar(_require(row, "mean_rate", row_node, rpath, source),
                                f"{rpath}.mean_rate", float, "a number")
        if "vol" in row:
            vols[tenor] = w.scalar(row["vol"], f"{rpath}.vol", float, "a number")
        if "persistence" in row:
            persists[tenor] = w.scalar(row["persistence"], f"{rpath}.persistence",
                                       float, "a number")

    try:
        config = from_tenor_maps(
            max_maturity=max_maturity, allocation=allocation, mean_rates=rates,
            rate_vol=vols or 0.0, rate_persistence=persists or 0.0,
            growth_factor=growth, deficit_mean=deficit_mean, deficit_vol=deficit_vol,
            deficit_persistence=deficit_persistence, correlation=correlation,
            correlation_mode=mode)
    except ConfigError as exc:
        raise _err(str(exc), model_node, "model", source) from exc

    percentiles = DEFAULT_PERCENTILES
    # schema defaults; horizon/paths are required by SimulationSpec itself
    sim_kwargs = {"horizon": 100, "paths": 500}
    if "simulation" in top:
        sim_node = top["simulation"]
        sim = w.mapping(sim_node, "simulation", _SIMULATION_KEYS)
        for key, kind, name in (("horizon", int, "an integer"), ("paths", int, "an integer"),
                                ("seed", int, "an integer"), ("burn_in", int, "an integer"),
                                ("threads", int, "an integer"),
                                ("warm_start", bool, "a boolean")):
            if key in sim:
                target = "master_seed" if key == "seed" else key
                sim_kwargs[target] = w.scalar(sim[key], f"simulation.{key}", kind, name)
        if "percentiles" in sim:
            nodes = w.sequence(sim["percentiles"], "simulation.percentiles")
            percentiles = tuple(
                w.scalar(n, f"simulation.percentiles[{i}]", float, "a number")
                for i, n in enumerate(nodes))
            for i, p in enumerate(percentiles):
                if not 0.0 < p < 100.0:
                    raise _err(f"percentile must lie in (0, 100), got {p}",
                               nodes[i], f"simulation.percentiles[{i}]", source)
        try:
            simulation = SimulationSpec(**sim_kwargs)
        except ConfigError as exc:
            raise _err(str(exc), sim_node, "simulation", source) from exc
    else:
        simulation = SimulationSpec(**sim_kwargs)

    optimization = OptimizationSpec()
    cap_grid = None
    if "optimization" in top:
        opt_node = top["optimization"]
        opt = w.mapping(opt_node, "optimization", _OPTIMIZATION_KEYS)
        opt_kwargs: dict[str, object] = {}
        if "objective" in opt:
            label = w.scalar(opt["objective"], "optimization.objective", str, "a string")
            try:
                opt_kwargs["objective"] = Objective(label)
            except ValueError:
                raise _err(
                    f"unknown objective '{label}' "
                    f"(allowed: {', '.join(o.value for o in Objective)})",
                    opt["objective"], "optimization.objective", source) from None
        if "rollover_cap" in opt:
            opt_kwargs["rollover_cap"] = w.scalar(opt["rollover_cap"],
                                                  "optimization.rollover_cap",
                                                  float, "a number")
        if "rho_override" in opt:
            opt_kwargs["rho_override"] = w.scalar(opt["rho_override"],
                                                  "optimization.rho_override",
                                                  float, "a number")
        for side in ("lower_bounds", "upper_bounds"):
            if side in opt:
                bmap = w.mapping(opt[side], f"optimization.{side}", None)
                out = {}
                for k, vnode in bmap.items():
                    try:
                        tenor = int(k)
                    except ValueError:
                        raise _err(f"bound keys must be integer tenors, got '{k}'",
                                   vnode, f"optimization.{side}.{k}", source) from None
                    out[tenor] = w.scalar(vnode, f"optimization.{side}.{k}",
                                          float, "a number")
                opt_kwargs[side] = out
        if "cap_grid" in opt:
            nodes = w.sequence(opt["cap_grid"], "optimization.cap_grid")
            cap_grid = tuple(w.scalar(n, f"optimization.cap_grid[{i}]", float, "a number")
                             for i, n in enumerate(nodes))
        try:
            optimization = OptimizationSpec(**opt_kwargs)
        except ConfigError as exc:
            raise _err(str(exc), opt_node, "optimization", source) from exc

    reference: dict[str, float] = {}
    if "reference" in top:
        ref = w.mapping(top["reference"], "reference", None)
        for key, vnode in ref.items():
            reference[key] = w.scalar(vnode, f"reference.{key}", float, "a number")

    return Scenario(config=config, simulation=simulation, optimization=optimization,
                    cap_grid=cap_grid, percentiles=percentiles, reference=reference,
                    source=source)


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}", source=str(path)) from exc
    return parse_scenario(text, source=str(path))


def scenario_to_yaml(scenario: Scenario) -> str:
    """Serialize back to the schema parse_scenario accepts (round-trippable)."""
    cfg = scenario.config
    tenors = []
    for t in cfg.issued_tenors:
        i = t - 1
        tenors.append({"tenor": int(t), "allocation": float(cfg.allocation[i]),
                       "mean_rate": float(cfg.mean_rates[i]),
                       "vol": float(cfg.rate_vol[i]),
                       "persistence": float(cfg.rate_persistence[i])})
    doc: dict[str, object] = {
        "model": {
            "max_maturity": int(cfg.max_maturity),
            "growth_factor": float(cfg.growth_factor),
            "correlation": float(cfg.correlation),
            "correlation_mode": cfg.correlation_mode,
            "deficit": {"mean": float(cfg.deficit_mean), "vol": float(cfg.deficit_vol),
                        "persistence": float(cfg.deficit_persistence)},
            "tenors": tenors,
        },
        "simulation": {
            "horizon": scenario.simulation.horizon,
            "paths": scenario.simulation.paths,
            "seed": scenario.simulation.master_seed,
            "burn_in": scenario.simulation.burn_in,
            "warm_start": scenario.simulation.warm_start,
            "threads": scenario.simulation.threads,
            "percentiles": [float(p) for p in scenario.percentiles],
        },
        "optimization": {
            "objective": scenario.optimization.objective.value,
            "rollover_cap": float(scenario.optimization.rollover_cap),
            "lower_bounds": {int(k): float(v)
                             for k, v in scenario.optimization.lower_bounds.items()},
            "upper_bounds": {int(k): float(v)
                             for k, v in scenario.optimization.upper_bounds.items()},
        },
    }
    opt = doc["optimization"]
    if scenario.optimization.rho_override is not None:
        opt["rho_override"] = float(scenario.optimization.rho_override)
    if scenario.cap_grid is not None:
        opt["cap_grid"] = [float(c) for c in scenario.cap_grid]
    if not opt["lower_bounds"]:
        del opt["lower_bounds"]
    if not opt["upper_bounds"]:
        del opt["upper_bounds"]
    if scenario.reference:
        doc["reference"] = {k: float(v) for k, v in scenario.reference.items()}
    return yaml.safe_dump(doc, sort_keys=False)


def baseline_scenario() -> Scenario:
    """The bundled three-tenor reference scenario."""
    ref = resources.files("debtladder").joinpath("data/baseline.yaml")
    return parse_scenario(ref.read_text(), source="baseline.yaml")
