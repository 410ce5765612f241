"""JSON run configurations, validated against ``run_config.schema.json``."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .params import NumericsConfig, PhysicalParams, Tolerances, TransportSpec
from .perturbation import BeamParams
from .trajectories import TrajectoryKind, build_trajectory, compensated_trajectory


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending line when known."""


def load_schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("run_config.schema.json").read_text())


def _nth_item(text: str, pos: int, k: int) -> int | None:
    """Offset of item ``k`` of the first JSON array starting at or after ``pos``."""
    start = text.find("[", pos)
    if start < 0:
        return None
    depth, count, in_str = 0, 0, False
    i = start + 1
    if k == 0:
        return i
    while i < len(text):
        c = text[i]
        if in_str:
            if c == "\\":
                i += 1
            elif c == '"':
                in_str = False
        elif c == '"':
            in_str = True
        elif c in "[{":
            depth += 1
        elif c in "]}":
            if depth == 0:
                return None
            depth -= 1
        elif c == "," and depth == 0:
            count += 1
            if count == k:
                return i + 1
        i += 1
    return None


def _locate(text: str, path) -> int:
    """Line of the value at ``path`` (keys and list indices) in JSON ``text``.

    Follows the path through the text as far as it can; the line of the
    deepest element found is returned.
    """
    pos = 0
    for part in path:
        if isinstance(part, str):
            m = re.compile(r'"%s"\s*:' % re.escape(part)).search(text, pos)
            nxt = m.end() if m else None
        else:
            nxt = _nth_item(text, pos, part)
        if nxt is None:
            break
        pos = nxt
    while pos < len(text) and text[pos].isspace():
        pos += 1
    return text.count("\n", 0, pos) + 1


def _where(text: str | None, path) -> str:
    loc = "/".join(str(p) for p in path) or "<root>"
    if text is None:
        return loc
    return f"line {_locate(text, list(path))} ({loc})"


@dataclass
class RunConfig:
    params: PhysicalParams = field(default_factory=PhysicalParams)
    spec: TransportSpec | None = None
    cases: list = field(default_factory=list)  # (label, TransportSpec)
    kind: str = "inverse_polynomial"
    options: dict = field(default_factory=dict)
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    beam: BeamParams | None = None
    sweep: dict | None = None
    outputs: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return int(self.options.get("n", 0))

    def trajectory(self, spec: TransportSpec | None = None):
        spec = spec or self.spec
        if spec is None:
            raise ConfigError("config has no 'spec' block")
        if self.kind == "compensated":
            return compensated_trajectory(spec, self.params, self.options.get("smooth", True))
        return build_trajectory(TrajectoryKind(self.kind), spec, self.params)

    def all_specs(self):
        """(label, spec) for every case; the main spec when there are none."""
        if self.cases:
            return list(self.cases)
        if self.spec is None:
            raise ConfigError("config has neither 'spec' nor 'cases'")
        return [("run", self.spec)]

    def require_beam(self) -> BeamParams:
        if self.beam is None:
            raise ConfigError("this command needs a 'beam' block")
        return self.beam

    def output_path(self, observable: str, out_dir, default: str) -> Path:
        for o in self.outputs:
            if o["observable"] == observable:
                p = Path(o["path"])
                return p if p.is_absolute() else Path(out_dir) / p
        return Path(out_dir) / default

    def durations(self) -> np.ndarray:
        spec = (self.sweep or {}).get("durations")
        if spec is None:
            raise ConfigError("sweep needs 'durations'")
        if isinstance(spec, list):
            return np.array(spec, float)
        scale = self.params.period if spec.get("in_periods") else 1.0
        if spec.get("spacing", "linear") == "log":
            vals = np.geomspace(spec["start"], spec["stop"], spec["num"])
        else:
            vals = np.linspace(spec["start"], spec["stop"], spec["num"])
        return vals * scale


def _spec_from(block: dict, params: PhysicalParams, path, text) -> TransportSpec:
    def one_of(*keys):
        present = [k for k in keys if k in block]
        if len(present) > 1:
            raise ConfigError(f"{_where(text, path + [present[1]])}: give only one of {', '.join(keys)}")
        return present[0] if present else None

    key = one_of("distance", "distance_over_sigma0")
    if key is None:
        raise ConfigError(f"{_where(text, path)}: missing 'distance'")
    d = block[key] * (params.ground_width if key == "distance_over_sigma0" else 1.0)
    key = one_of("duration", "duration_over_period", "b")
    if key is None:
        raise ConfigError(f"{_where(text, path)}: missing 'duration'")
    tf = {"duration": 1.0, "duration_over_period": params.period, "b": 1 / params.omega0}[key] * block[key]
    key = one_of("v_initial", "a")
    v0 = 0.0
    if key == "v_initial":
        v0 = block[key]
    elif key == "a":
        v0 = block["a"] * d / tf
    try:
        return TransportSpec(d, tf, v0, block.get("v_final", 0.0))
    except ValueError as exc:
        raise ConfigError(f"{_where(text, path)}: {exc}") from None


def _beam_from(block: dict, params: PhysicalParams, text) -> BeamParams:
    if "waist" in block or "wavelength" in block:
        if not ("waist" in block and "wavelength" in block):
            raise ConfigError(f"{_where(text, ['beam'])}: waist and wavelength go together")
        beam = BeamParams.from_waist(params, block["waist"], block["wavelength"])
    else:
        if ("x_R" in block) == ("x_R_over_sigma0" in block):
            raise ConfigError(f"{_where(text, ['beam'])}: give exactly one of x_R, x_R_over_sigma0")
        x_R = block.get("x_R") or block["x_R_over_sigma0"] * params.ground_width
        beam = BeamParams.from_frequency(params, x_R)
    if "V0" in block:
        beam = BeamParams(block["V0"], beam.x_R, beam.waist, beam.wavelength)
    return beam


def parse_config(data: dict, text: str | None = None) -> RunConfig:
    """Validate ``data`` and build a :class:`RunConfig`."""
    validator = jsonschema.Draft202012Validator(load_schema())
    e = jsonschema.exceptions.best_match(validator.iter_errors(data))
    if e is not None:
        raise ConfigError(f"{_where(text, e.absolute_path)}: {e.message}")

    try:
        params = PhysicalParams(**data.get("params", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{_where(text, ['params'])}: {exc}") from None

    spec = _spec_from(data["spec"], params, ["spec"], text) if "spec" in data else None
    cases = []
    for i, block in enumerate(data.get("cases", [])):
        label = block.get("label", f"case{i}")
        cases.append((label, _spec_from({k: v for k, v in block.items() if k != "label"},
                                        params, ["cases", i], text)))
    labels = [c[0] for c in cases]
    if len(set(labels)) != len(labels):
        raise ConfigError(f"{_where(text, ['cases'])}: case labels must be distinct")

    protocol = data.get("protocol", {"kind": "inverse_polynomial"})
    num = data.get("numerics", {})
    if "dt_per_period" in num and "time_step" in num:
        raise ConfigError(f"{_where(text, ['numerics', 'time_step'])}: give only one of dt_per_period, time_step")
    dt = num.get("time_step")
    if "dt_per_period" in num:
        dt = num["dt_per_period"] * params.period
    try:
        numerics = NumericsConfig(
            grid_points=num.get("grid_points", 2048),
            grid_padding=num.get("padding", 10.0),
            time_step=dt,
            tolerances=Tolerances(**num.get("tolerances", {})),
            n_max=num.get("n_max", 16),
            samples=num.get("samples", 101),
        )
    except ValueError as exc:
        raise ConfigError(f"{_where(text, ['numerics'])}: {exc}") from None

    beam = _beam_from(data["beam"], params, text) if "beam" in data else None

    if "outputs" in data and "observables" in data:
        raise ConfigError(f"{_where(text, ['observables'])}: give only one of outputs, observables")
    key = "observables" if "observables" in data else "outputs"
    outputs = data.get(key, [])
    paths = [o["path"] for o in outputs]
    if len(set(paths)) != len(paths):
        dup = next(p for i, p in enumerate(paths) if p in paths[:i])
        idx = paths.index(dup, paths.index(dup) + 1)
        raise ConfigError(f"{_where(text, [key, idx, 'path'])}: duplicate output path {dup!r}")

    sweep = data.get("sweep")
    if sweep and sweep["kind"] == "energy" and "durations" not in sweep:
        raise ConfigError(f"{_where(text, ['sweep'])}: energy sweep needs 'durations'")

    return RunConfig(params, spec, cases, protocol["kind"], dict(protocol.get("options", {})),
                     numerics, beam, sweep, outputs)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    try:
        return parse_config(data, text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def finite_or_none(x):
    """JSON-safe float: NaN and infinities become null."""
    x = float(x)
    return x if math.isfinite(x) else None
