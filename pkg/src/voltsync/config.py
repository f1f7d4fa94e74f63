"""Scenario configuration files (TOML, ``schema_version = 1``).

A config describes one base scenario plus an optional ``[sweep]`` table
whose keys are expanded as a cartesian product.  See README.md for the
full key reference.  Node numbers in ``[[perturbations]]`` are 1-based and
count generators/consumers only (the bus of a star network is not
numbered).
"""

from __future__ import annotations

import copy
import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .dynamics import IntegratorSettings, Perturbation
from .errors import ConfigError, ConfigParseError, InvalidPerturbation, InvalidTopology
from .model import GridModel, NodeParams, SimState, validate_model
from .scenario import ANALYSES, ReturnTimeSettings, Scenario
from .topology import TopologySpec, all_to_all_susceptance, star_bus_susceptance

SCHEMA_VERSION = 1
NODE_FIELDS = ("P", "alpha", "gamma", "T_d", "E_f", "X", "tau_g", "beta")
NODE_DEFAULTS = {"alpha": 0.2, "gamma": 0.0, "T_d": 1.0, "E_f": 1.0, "X": 1.0, "tau_g": 0.0, "beta": 0.0}
TOP_KEYS = {"schema_version", "name", "description", "analyses", "network", "nodes", "bus",
            "initial", "perturbations", "integrator", "return_time", "sweep", "sweep_labels", "constant_voltage"}
SWEEP_KEYS = set(NODE_FIELDS) | {"N", "P_dist", "constant_voltage"}


@dataclass
class RunPlan:
    name: str
    analyses: tuple
    scenarios: list  # of (label, swept-values dict, Scenario)
    sweep_keys: tuple = ()
    source: str = ""
    raw: dict = field(default_factory=dict, repr=False)


def _ctx(path, key):
    return f"{path}: [{key}]" if key else str(path)


def parse_config_text(text: str, source="<config>") -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigParseError(f"{source}: {exc}") from exc


def load_config(path, *, dt=None, t_final=None, analyses=None) -> RunPlan:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    raw = parse_config_text(text, str(path))
    return build_plan(raw, source=str(path), dt=dt, t_final=t_final, analyses=analyses)


def build_plan(raw: dict, *, source="<config>", dt=None, t_final=None, analyses=None) -> RunPlan:
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise ConfigParseError(
            f"{source}: key 'schema_version' must be {SCHEMA_VERSION}, got {raw.get('schema_version')!r}"
        )
    unknown = set(raw) - TOP_KEYS
    if unknown:
        raise ConfigParseError(f"{source}: unknown top-level key(s) {sorted(unknown)}")
    name = str(raw.get("name", Path(source).stem))
    if analyses is None:
        analyses = raw.get("analyses", ("simulate",))
    analyses = tuple(analyses)
    if not analyses:
        raise ConfigParseError(f"{source}: key 'analyses' must not be empty")
    for a in analyses:
        if a not in ANALYSES:
            raise ConfigParseError(f"{source}: key 'analyses' has unknown entry {a!r}")
    raw = copy.deepcopy(raw)
    if dt is not None:
        raw.setdefault("integrator", {})["dt"] = float(dt)
    if t_final is not None:
        raw.setdefault("integrator", {})["t_final"] = float(t_final)

    sweep = raw.get("sweep", {})
    if not isinstance(sweep, dict):
        raise ConfigParseError(f"{source}: [sweep] must be a table")
    for key, values in sweep.items():
        if key not in SWEEP_KEYS:
            raise ConfigParseError(f"{source}: [sweep] key {key!r} is not sweepable")
        if not isinstance(values, list) or not values:
            raise ConfigParseError(f"{source}: [sweep] {key} must be a non-empty array")
    keys = tuple(sweep)
    labels = raw.get("sweep_labels", {})
    for key, names in labels.items():
        if key not in sweep or not isinstance(names, list) or len(names) != len(sweep[key]):
            raise ConfigParseError(f"{source}: [sweep_labels] {key} must list one name per [sweep] value")
    scenarios = []
    for combo in itertools.product(*(sweep[k] for k in keys)) if keys else [()]:
        values = dict(zip(keys, combo))
        variant = copy.deepcopy(raw)
        for k, v in values.items():
            if k == "N":
                variant.setdefault("network", {})["N"] = v
            elif k == "P_dist":
                for p in variant.get("perturbations", []):
                    p["P_dist"] = v
            elif k == "constant_voltage":
                variant["constant_voltage"] = v
            else:
                variant.setdefault("nodes", {})[k] = v
        parts = []
        for k, v in values.items():
            if k in labels:
                parts.append(str(labels[k][sweep[k].index(v)]))
            else:
                parts.append(f"{k}{_label_value(v)}")
        label = "_".join([name] + parts)
        scen = build_scenario(variant, name=label, analyses=analyses, source=source)
        scenarios.append((label, {k: _json_value(v) for k, v in values.items()}, scen))
    return RunPlan(name=name, analyses=analyses, scenarios=scenarios, sweep_keys=keys, source=source, raw=raw)


def _label_value(v):
    if isinstance(v, dict):
        return "-".join(f"{k}{_label_value(x)}" for k, x in v.items())
    if isinstance(v, list):
        return "list"
    if isinstance(v, bool):
        return str(v).lower()
    return f"{v:g}" if isinstance(v, float) else str(v)


def _json_value(v):
    return v if not isinstance(v, np.generic) else v.item()


def _resolve_column(spec, n, key, P=None, source=""):
    """Scalar, list, or rule table -> length-n float array."""
    if isinstance(spec, dict):
        if "pattern" in spec:
            if spec["pattern"] != "alternating":
                raise ConfigParseError(f"{_ctx(source, 'nodes')} {key}: unknown pattern {spec['pattern']!r}")
            mag = float(spec.get("magnitude", 1.0))
            return np.array([mag if i % 2 == 0 else -mag for i in range(n)])
        if "scale_abs_P" in spec:
            if P is None:
                raise ConfigParseError(f"{_ctx(source, 'nodes')} {key}: scale_abs_P needs P")
            return float(spec["scale_abs_P"]) * np.abs(P)
        raise ConfigParseError(f"{_ctx(source, 'nodes')} {key}: unknown rule {sorted(spec)}")
    if isinstance(spec, list):
        if len(spec) != n:
            raise ConfigParseError(f"{_ctx(source, 'nodes')} {key}: expected {n} values, got {len(spec)}")
        return np.array(spec, dtype=float)
    if isinstance(spec, bool) or not isinstance(spec, (int, float)):
        raise ConfigParseError(f"{_ctx(source, 'nodes')} {key}: expected number, array or rule table")
    return np.full(n, float(spec))


def _initial_column(spec, n, key, source):
    if isinstance(spec, dict) and "uniform" in spec:
        lo, hi = spec["uniform"]
        rng = np.random.default_rng(int(spec.get("seed", 0)))
        return rng.uniform(float(lo), float(hi), n)
    try:
        return _resolve_column(spec, n, key, source=source)
    except ConfigParseError as exc:
        raise ConfigParseError(str(exc).replace("[nodes]", "[initial]")) from None


def build_scenario(raw: dict, *, name: str, analyses, source="<config>") -> Scenario:
    net = raw.get("network", {})
    kind = net.get("kind", "all_to_all")
    nodes_cfg = dict(raw.get("nodes", {}))
    unknown = set(nodes_cfg) - set(NODE_FIELDS)
    if unknown:
        raise ConfigParseError(f"{_ctx(source, 'nodes')} unknown key(s) {sorted(unknown)}")
    leaf_offset = 0
    bus_mode = None
    try:
        if kind == "matrix":
            B = np.array(net["matrix"], dtype=float)
            n_leaves = B.shape[0]
        else:
            if "N" not in net:
                raise ConfigParseError(f"{_ctx(source, 'network')} key 'N' is required")
            spec = TopologySpec(kind, int(net["N"]), float(net.get("B0", -0.8)), float(net.get("B1", 1.0)))
            n_leaves = spec.N
            if kind == "all_to_all":
                B = all_to_all_susceptance(spec)
            else:
                explicit, reduced = star_bus_susceptance(spec)
                bus_mode = net.get("bus_mode", "explicit")
                if bus_mode == "explicit":
                    B, leaf_offset = explicit, 1
                elif bus_mode == "kron":
                    B = reduced
                else:
                    raise ConfigParseError(f"{_ctx(source, 'network')} bus_mode must be 'explicit' or 'kron'")
    except (InvalidTopology, KeyError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigParseError(f"{_ctx(source, 'network')} {exc}") from exc

    if "P" not in nodes_cfg:
        raise ConfigParseError(f"{_ctx(source, 'nodes')} key 'P' is required")
    P = _resolve_column(nodes_cfg["P"], n_leaves, "P", source=source)
    cols = {"P": P}
    for key in NODE_FIELDS[1:]:
        cols[key] = _resolve_column(nodes_cfg.get(key, NODE_DEFAULTS[key]), n_leaves, key, P=P, source=source)

    node_list = [
        NodeParams(P_star=float(cols["P"][i]), alpha=float(cols["alpha"][i]), gamma=float(cols["gamma"][i]),
                   T_d=float(cols["T_d"][i]), E_f=float(cols["E_f"][i]), X=float(cols["X"][i]),
                   tau_g=float(cols["tau_g"][i]), beta=float(cols["beta"][i]))
        for i in range(n_leaves)
    ]
    if leaf_offset:
        bus_cfg = raw.get("bus", {})
        bus_vals = {}
        for key in NODE_FIELDS[1:]:
            v = bus_cfg.get(key, "median")
            bus_vals[key] = float(np.median(cols[key])) if v == "median" else float(v)
        node_list = [NodeParams(P_star=float(bus_cfg.get("P", 0.0)), **bus_vals)] + node_list
    n = len(node_list)
    model = GridModel(nodes=tuple(node_list), B=B,
                      metadata={"topology": kind, "bus_mode": bus_mode, "leaf_offset": leaf_offset})
    validate_model(model)

    init = raw.get("initial", {})
    theta = _initial_column(init.get("theta", 0.0), n, "theta", source)
    omega = _initial_column(init.get("omega", 0.0), n, "omega", source)
    E = _initial_column(init.get("E", 1.0), n, "E", source)
    u = None
    if np.any(model.tau_g > 0):
        u = _initial_column(init.get("u", 0.0), n, "u", source)
    state = SimState(theta, omega, E, u)

    perts = []
    for k, p in enumerate(raw.get("perturbations", [])):
        try:
            node = int(p["node"])
            if not 1 <= node <= n_leaves:
                raise InvalidPerturbation(
                    f"{_ctx(source, 'perturbations')} entry {k}: node {node} outside 1..{n_leaves}"
                )
            perts.append(Perturbation(node=node - 1 + leaf_offset, t_start=float(p["t_start"]),
                                      t_end=float(p["t_end"]), P_dist=float(p["P_dist"])))
        except KeyError as exc:
            raise ConfigParseError(f"{_ctx(source, 'perturbations')} entry {k}: missing key {exc}") from exc
        except InvalidPerturbation as exc:
            raise InvalidPerturbation(f"{_ctx(source, 'perturbations')} entry {k}: {exc}") from exc

    integ = raw.get("integrator", {})
    try:
        settings = IntegratorSettings(
            dt=float(integ.get("dt", 0.01)),
            t_final=float(integ.get("t_final", 200.0)),
            sample_stride=int(integ.get("sample_stride", 10)),
            blowup_bound=float(integ.get("blowup_bound", 1e6)),
        )
        rt = raw.get("return_time", {})
        rts = ReturnTimeSettings(T=float(rt.get("T", 5.0)), xi=float(rt.get("xi", 1e-4)))
    except (TypeError, ValueError) as exc:
        raise ConfigParseError(f"{_ctx(source, 'integrator')} {exc}") from exc

    return Scenario(
        name=name,
        model=model,
        initial_state=state,
        perturbations=tuple(perts),
        integrator=settings,
        analyses=tuple(analyses),
        constant_voltage=bool(raw.get("constant_voltage", False)),
        return_time=rts,
        metadata={"bus_mode": bus_mode, "leaf_offset": leaf_offset},
    )
