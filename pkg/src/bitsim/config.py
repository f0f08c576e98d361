"""Experiment configuration: JSON schema, validation, grid expansion.

The schema (documented in the README) is deliberately flat:

    {
      "seed": 1,
      "width": 16,
      "out_shift": 0,
      "trace": {"kind": "synthetic", "sigma": 100.0, "relu": true},
      "synapse_sigma": 20.0,
      "layers": [
        {"name": "conv1", "nx": 16, "ny": 16, "i": 16, "n": 16,
         "fx": 3, "fy": 3, "s": 1, "pad": 0, "act": "relu",
         "precision": {"width": 9, "lsb": 0},
         "quant": {"vmin": 0.0, "vmax": 800.0},
         "first_layer": true}
      ],
      "engines": [
        {"engine": "dadn"},
        {"engine": "stripes"},
        {"engine": "pragmatic", "l_bits": [0, 2, 4], "sync": "pallet",
         "ssrs": 1, "pallet_buffer": null, "trim": "profile"}
      ],
      "output": {"csv": "results.csv"}
    }

List-valued pragmatic fields expand into a deterministic grid (product
in field order l_bits, sync, ssrs, trim). ``ssrs`` accepts an integer or
"inf"; ``pallet_buffer`` an integer, "inf", or null for the automatic
ssrs+1 sizing.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

from .geometry import LayerSpec
from .numerics import Precision, QuantParams
from .pragmatic import PragConfig


class ConfigError(ValueError):
    """Configuration file missing, malformed, or inconsistent."""


@dataclass(frozen=True)
class LayerConfig:
    spec: LayerSpec
    precision: Precision
    quant: QuantParams | None = None
    first_layer: bool = False


@dataclass(frozen=True)
class EngineSelector:
    """One fully expanded engine variant to run."""

    engine: str  # dadn | stripes | pragmatic
    prag: PragConfig | None = None

    def label(self) -> str:
        if self.engine == "pragmatic":
            return f"pragmatic:{self.prag.variant_name()}"
        return self.engine


@dataclass
class ExperimentConfig:
    layers: list[LayerConfig]
    engines: list[EngineSelector]
    seed: int
    width: int
    out_shift: int
    trace_kind: str  # synthetic | file
    trace_sigma: float
    trace_relu: bool
    trace_paths: list[str]
    synapse_sigma: float
    csv_path: str | None


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ConfigError(f"missing required field '{key}' in {where}")
    return mapping[key]


def _parse_precision(obj, where: str) -> Precision:
    if not isinstance(obj, dict):
        raise ConfigError(f"'precision' must be an object in {where}")
    lsb = int(obj.get("lsb", 0))
    try:
        if "msb" in obj:
            return Precision(int(obj["msb"]), lsb)
        if "width" in obj:
            return Precision.from_width(int(obj["width"]), lsb)
    except ValueError as e:
        raise ConfigError(f"bad precision in {where}: {e}") from e
    raise ConfigError(f"'precision' needs 'msb' or 'width' in {where}")


def _parse_layer(obj: dict, index: int, width: int) -> LayerConfig:
    where = f"layers[{index}]"
    try:
        spec = LayerSpec.normalized(
            nx=int(_require(obj, "nx", where)),
            ny=int(_require(obj, "ny", where)),
            i=int(_require(obj, "i", where)),
            n=int(_require(obj, "n", where)),
            fx=int(_require(obj, "fx", where)),
            fy=int(_require(obj, "fy", where)),
            s=int(obj.get("s", 1)),
            pad=int(obj.get("pad", 0)),
            act=obj.get("act", "identity"),
            name=str(obj.get("name", f"layer{index}")),
        )
    except ValueError as e:
        raise ConfigError(f"bad geometry in {where}: {e}") from e
    precision = _parse_precision(_require(obj, "precision", where), where)
    if width == 8 and precision.msb > 7:
        raise ConfigError(f"{where}: precision window exceeds the 8-bit container")
    quant = None
    if "quant" in obj:
        q = obj["quant"]
        try:
            quant = QuantParams(float(_require(q, "vmin", where)),
                                float(_require(q, "vmax", where)))
        except ValueError as e:
            raise ConfigError(f"bad quant params in {where}: {e}") from e
    if width == 8 and quant is None:
        raise ConfigError(f"{where}: width-8 runs need per-layer 'quant' limits")
    return LayerConfig(
        spec=spec,
        precision=precision,
        quant=quant,
        first_layer=bool(obj.get("first_layer", index == 0)),
    )


def _listify(value) -> list:
    return value if isinstance(value, list) else [value]


def _parse_ssrs(value, where: str):
    if value is None or value == "inf":
        return None
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad ssrs value {value!r} in {where}") from None


def _parse_engines(objs, where="engines") -> list[EngineSelector]:
    selectors: list[EngineSelector] = []
    for idx, obj in enumerate(objs):
        kind = _require(obj, "engine", f"{where}[{idx}]")
        if kind in ("dadn", "stripes"):
            selectors.append(EngineSelector(engine=kind))
        elif kind == "pragmatic":
            grid = itertools.product(
                _listify(obj.get("l_bits", 2)),
                _listify(obj.get("sync", "pallet")),
                _listify(obj.get("ssrs", 1)),
                _listify(obj.get("trim", "profile")),
            )
            for l_bits, sync, ssrs, trim in grid:
                try:
                    cfg = PragConfig(
                        l_bits=int(l_bits),
                        sync=str(sync),
                        ssr_count=_parse_ssrs(ssrs, f"{where}[{idx}]"),
                        pallet_buffer=_parse_ssrs(
                            obj.get("pallet_buffer"), f"{where}[{idx}]"
                        ),
                        trim=str(trim),
                    )
                except ValueError as e:
                    raise ConfigError(f"bad pragmatic config in {where}[{idx}]: {e}") from e
                selectors.append(EngineSelector(engine="pragmatic", prag=cfg))
        else:
            raise ConfigError(f"unknown engine {kind!r} in {where}[{idx}]")
    if not selectors:
        raise ConfigError("at least one engine is required")
    return selectors


def parse_config(text: str) -> ExperimentConfig:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from e
    if not isinstance(obj, dict):
        raise ConfigError("config root must be a JSON object")

    width = int(obj.get("width", 16))
    if width not in (8, 16):
        raise ConfigError(f"'width' must be 8 or 16, got {width}")

    layer_objs = _require(obj, "layers", "config")
    if not isinstance(layer_objs, list) or not layer_objs:
        raise ConfigError("'layers' must be a nonempty list")
    layers = [_parse_layer(lo, i, width) for i, lo in enumerate(layer_objs)]

    engines = _parse_engines(_listify(_require(obj, "engines", "config")))

    trace = obj.get("trace", {"kind": "synthetic", "sigma": 100.0, "relu": True})
    kind = trace.get("kind", "synthetic")
    paths: list[str] = []
    sigma, relu = 100.0, True
    if kind == "synthetic":
        sigma = float(trace.get("sigma", 100.0))
        if sigma <= 0:
            raise ConfigError("'trace.sigma' must be positive")
        relu = bool(trace.get("relu", True))
    elif kind == "file":
        if "paths" in trace:
            paths = [str(p) for p in trace["paths"]]
        elif "path" in trace:
            paths = [str(trace["path"])]
        if len(paths) != len(layers):
            raise ConfigError(
                f"'trace.paths' needs one path per layer ({len(layers)}), got {len(paths)}"
            )
    else:
        raise ConfigError(f"unknown trace kind {kind!r}")

    output = obj.get("output", {})
    return ExperimentConfig(
        layers=layers,
        engines=engines,
        seed=int(obj.get("seed", 0)),
        width=width,
        out_shift=int(obj.get("out_shift", 0)),
        trace_kind=kind,
        trace_sigma=sigma,
        trace_relu=relu,
        trace_paths=paths,
        synapse_sigma=float(obj.get("synapse_sigma", 20.0)),
        csv_path=output.get("csv"),
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return parse_config(text)
