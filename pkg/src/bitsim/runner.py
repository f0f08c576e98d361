"""Experiment orchestration: build inputs, run engines, verify, report.

Every engine variant in a run consumes the same generated or loaded
tensors, so the designs see identical synapse reuse and comparisons are
fair. Each serial engine's output is checked against the brute-force
oracle on its own input view (raw or profile-trimmed); a mismatch is an
engine bug and aborts the run.
"""

from __future__ import annotations

import numpy as np

from .analysis import ReportDocument, TermCounts, count_terms, report
from .config import EngineSelector, ExperimentConfig, LayerConfig
from .encoding import stats
from .geometry import FilterSet, Tensor3
from .numerics import trim_tensor
from .pragmatic import pragmatic_layer
from .reference import EngineResult, conv_oracle, dadn_cycles, dadn_layer
from .stripes import stripes_layer
from .traces import (
    generate_quantized_synapses,
    generate_quantized_trace,
    generate_synapses,
    generate_trace,
    read_trace,
)


class OracleMismatch(RuntimeError):
    """A serial engine's output differs from the brute-force oracle."""


def build_layer_inputs(
    cfg: ExperimentConfig, layer: LayerConfig, index: int
) -> tuple[Tensor3, FilterSet]:
    spec = layer.spec
    if cfg.trace_kind == "file":
        tensor, _ = read_trace(cfg.trace_paths[index])
        if (tensor.x, tensor.y) != (spec.nx, spec.ny) or tensor.i > spec.i:
            raise ValueError(
                f"trace dims {tensor.dims} do not fit layer {spec.name!r} "
                f"({spec.nx},{spec.ny},{spec.i})"
            )
        if tensor.i < spec.i:
            padded = np.zeros((spec.ny, spec.nx, spec.i), dtype=np.int64)
            padded[:, :, : tensor.i] = tensor.data
            tensor = Tensor3(padded)
    elif cfg.width == 8:
        tensor = generate_quantized_trace(
            spec, cfg.trace_sigma, cfg.trace_relu, layer.quant, cfg.seed, index
        )
    else:
        tensor = generate_trace(spec, cfg.trace_sigma, cfg.trace_relu, cfg.seed, index)

    if cfg.width == 8:
        syn = generate_quantized_synapses(
            spec, cfg.synapse_sigma, layer.quant, cfg.seed, index
        )
    else:
        syn = generate_synapses(spec, cfg.synapse_sigma, cfg.seed, index)
    return tensor, FilterSet(syn)


def run_engine(
    sel: EngineSelector,
    input: Tensor3,
    filters: FilterSet,
    layer: LayerConfig,
    width: int,
    out_shift: int,
) -> EngineResult:
    if sel.engine == "dadn":
        return dadn_layer(input, filters, layer.spec, width, out_shift)
    if sel.engine == "stripes":
        return stripes_layer(input, filters, layer.spec, layer.precision, width, out_shift)
    if sel.engine == "pragmatic":
        return pragmatic_layer(
            input, filters, layer.spec, layer.precision, sel.prag, width, out_shift
        )
    raise ValueError(f"unknown engine {sel.engine!r}")


def _oracle_view(sel: EngineSelector, input: Tensor3, layer: LayerConfig) -> Tensor3:
    """The input the oracle must see to match this engine: raw for the
    bit-parallel baseline and untrimmed runs, window-trimmed otherwise."""
    if sel.engine == "stripes" or (
        sel.engine == "pragmatic" and sel.prag.trim == "profile"
    ):
        return Tensor3(trim_tensor(input.data, layer.precision))
    return input


def simulate(cfg: ExperimentConfig) -> ReportDocument:
    """Run the full layer x engine grid, verifying every serial output.

    Raises :class:`OracleMismatch` if any engine disagrees with the
    brute-force convolution on its input view.
    """
    rows = []
    terms: dict[str, TermCounts] = {}
    bits = {}
    for index, layer in enumerate(cfg.layers):
        input, filters = build_layer_inputs(cfg, layer, index)
        baseline = dadn_cycles(layer.spec)
        oracles: dict[bool, Tensor3] = {}
        for sel in cfg.engines:
            result = run_engine(sel, input, filters, layer, cfg.width, cfg.out_shift)
            view = _oracle_view(sel, input, layer)
            trimmed = view is not input
            if trimmed not in oracles:
                oracles[trimmed] = conv_oracle(view, filters, layer.spec, cfg.out_shift)
            if result.output != oracles[trimmed]:
                raise OracleMismatch(
                    f"{sel.label()} output differs from the oracle on layer "
                    f"{layer.spec.name!r}"
                )
            rows.append((layer.spec.name, result, baseline))
        terms[layer.spec.name] = count_terms(
            input, layer.spec, layer.precision, cfg.width, layer.first_layer
        )
        bits[layer.spec.name] = stats(input.data, cfg.width)
    return report(rows, terms, bits, cfg.width)


def analyze(cfg: ExperimentConfig) -> tuple[dict[str, TermCounts], dict]:
    """Term counts and essential-bit statistics only, no timing."""
    terms: dict[str, TermCounts] = {}
    bits = {}
    for index, layer in enumerate(cfg.layers):
        input, _ = build_layer_inputs(cfg, layer, index)
        terms[layer.spec.name] = count_terms(
            input, layer.spec, layer.precision, cfg.width, layer.first_layer
        )
        bits[layer.spec.name] = stats(input.data, cfg.width)
    return terms, bits


ANALYZE_CSV_COLUMNS = (
    "layer",
    "width",
    "pairs",
    "terms_dadn",
    "terms_zn",
    "terms_cvn",
    "terms_str",
    "terms_pra_fp16",
    "terms_pra_red",
    "norm_str",
    "norm_pra_fp16",
    "norm_pra_red",
    "essential_frac_all",
    "essential_frac_nz",
    "zero_fraction",
)


def analyze_csv_lines(cfg: ExperimentConfig, terms, bits) -> list[str]:
    lines = [",".join(ANALYZE_CSV_COLUMNS)]
    for layer in cfg.layers:
        name = layer.spec.name
        tc, bs = terms[name], bits[name]
        norm = tc.normalized()
        nz = "" if bs.mean_essential_frac_nonzero is None else (
            f"{bs.mean_essential_frac_nonzero:.6g}"
        )
        lines.append(
            ",".join(
                [
                    name,
                    str(cfg.width),
                    str(tc.pairs),
                    str(tc.totals["dadn"]),
                    str(tc.totals["zn"]),
                    str(tc.totals["cvn"]),
                    str(tc.totals["str"]),
                    str(tc.totals["pra_fp16"]),
                    str(tc.totals["pra_red"]),
                    f"{norm['str']:.6g}",
                    f"{norm['pra_fp16']:.6g}",
                    f"{norm['pra_red']:.6g}",
                    f"{bs.mean_essential_frac_all:.6g}",
                    nz,
                    f"{bs.zero_fraction:.6g}",
                ]
            )
        )
    return lines
