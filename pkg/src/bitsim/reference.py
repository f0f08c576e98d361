"""Brute-force convolution oracle and the bit-parallel baseline model.

The oracle walks windows one at a time and reduces each with a plain
multiply-accumulate over the filter volume — no bricks, no pallets, no
bit decomposition — so it shares nothing with the serial datapaths it is
used to check.

The baseline ("dadn") models a chip of 16 tiles x 16 filters that
broadcasts one 16-neuron brick per cycle: its cycle count is a pure
function of geometry, blind to the values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .encoding import essential_counts
from .geometry import FilterSet, LayerSpec, Tensor3, output_dims
from .numerics import activate


class ShapeMismatch(ValueError):
    """Input/filter shapes inconsistent with the layer spec."""


@dataclass
class CycleReport:
    """Counters of one engine run.

    ``compute_cycles`` includes fetch-induced waiting per the engine's
    model; ``stall_cycles`` is the waiting alone. ``sb_reads`` counts
    synapse-set fetches on the shared schedule (all engines see the same
    synapse reuse). Term counters follow the per-multiplication
    convention: ``total_terms`` charges the full container width per
    neuron/synapse pair, ``effectual_terms`` only the essential bits the
    engine actually processed.
    """

    compute_cycles: int = 0
    nm_fetch_cycles: int = 0
    stall_cycles: int = 0
    sb_reads: int = 0
    total_terms: int = 0
    effectual_terms: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in (
            "compute_cycles",
            "nm_fetch_cycles",
            "stall_cycles",
            "sb_reads",
            "total_terms",
            "effectual_terms",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.stall_cycles > self.compute_cycles:
            raise ValueError("stall_cycles cannot exceed compute_cycles")
        if self.effectual_terms > self.total_terms:
            raise ValueError("effectual_terms cannot exceed total_terms")


@dataclass
class EngineResult:
    """Output tensor plus cycle/term counters for one engine run."""

    output: Tensor3
    report: CycleReport
    engine: str = ""
    variant: str = ""


def check_shapes(input: Tensor3, filters: FilterSet, spec: LayerSpec):
    if (input.x, input.y, input.i) != (spec.nx, spec.ny, spec.i):
        raise ShapeMismatch(
            f"input dims {(input.x, input.y, input.i)} != spec {(spec.nx, spec.ny, spec.i)}"
        )
    if not filters.matches(spec):
        raise ShapeMismatch(
            f"filter dims {(filters.n, filters.fy, filters.fx, filters.i)} "
            f"!= spec {(spec.n, spec.fy, spec.fx, spec.i)}"
        )


def conv_oracle(
    input: Tensor3,
    filters: FilterSet,
    spec: LayerSpec,
    out_shift: int = 0,
) -> Tensor3:
    """Ground-truth convolution: direct window loop, wide accumulators.

    o(k,l,f) = act( sum_{y,x,i} s_f(y,x,i) * n(y + l*s - pad, x + k*s - pad, i) )
    """
    check_shapes(input, filters, spec)
    ox, oy, _ = output_dims(spec)
    data = input.data.astype(np.int64)
    w = filters.data.astype(np.int64)
    acc = np.zeros((oy, ox, spec.n), dtype=np.int64)
    for l in range(oy):
        for k in range(ox):
            x0 = k * spec.s - spec.pad
            y0 = l * spec.s - spec.pad
            # Clip the window against the virtual zero border.
            ylo, yhi = max(0, y0), min(spec.ny, y0 + spec.fy)
            xlo, xhi = max(0, x0), min(spec.nx, x0 + spec.fx)
            if ylo >= yhi or xlo >= xhi:
                continue
            window = data[ylo:yhi, xlo:xhi, :]
            wslice = w[:, ylo - y0 : yhi - y0, xlo - x0 : xhi - x0, :]
            for f in range(spec.n):
                acc[l, k, f] = int((window * wslice[f]).sum())
    return Tensor3(activate(acc, spec.act, out_shift))


def dadn_cycles(spec: LayerSpec) -> int:
    """Baseline cycles: one (filter-group, window, brick) triple per cycle."""
    ox, oy, _ = output_dims(spec)
    return geo.filter_groups(spec) * ox * oy * spec.fy * spec.fx * (spec.i // geo.BRICK)


def dadn_terms(spec: LayerSpec, width: int = 16) -> int:
    """Terms the bit-parallel units grind through: width per multiplication."""
    ox, oy, _ = output_dims(spec)
    return width * spec.n * ox * oy * spec.fy * spec.fx * spec.i


def sb_read_count(spec: LayerSpec) -> int:
    """Synapse-set fetches under the shared schedule, for every engine.

    All designs are scheduled to see the same synapse reuse: one set of
    16 synapse bricks is fetched per (filter-group, pallet, brick-step)
    and serves the 16 windows of the pallet.
    """
    return geo.filter_groups(spec) * geo.num_pallets(spec) * geo.num_brick_steps(spec)


def dadn_layer(
    input: Tensor3,
    filters: FilterSet,
    spec: LayerSpec,
    width: int = 16,
    out_shift: int = 0,
) -> EngineResult:
    """Run the bit-parallel baseline: exact output, value-blind timing."""
    check_shapes(input, filters, spec)
    output = _matmul_conv(input, filters, spec, out_shift)
    cycles = dadn_cycles(spec)
    ox, oy, _ = output_dims(spec)
    pairs = spec.n * ox * oy * spec.fy * spec.fx * spec.i
    effectual = int(_window_essentials(input, spec, width).sum()) * spec.n
    report = CycleReport(
        compute_cycles=cycles,
        nm_fetch_cycles=cycles,  # one brick broadcast per cycle
        stall_cycles=0,
        sb_reads=sb_read_count(spec),
        total_terms=width * pairs,
        effectual_terms=effectual,
    )
    return EngineResult(output=output, report=report, engine="dadn")


# --- shared lowering helpers (used by the engine models, not the oracle) ---


def im2col(input: Tensor3, spec: LayerSpec) -> np.ndarray:
    """Window matrix ``(oy*ox, fy*fx*i)`` with virtual zero padding."""
    ox, oy, _ = output_dims(spec)
    data = input.data.astype(np.int64)
    cols = np.zeros((oy, ox, spec.fy, spec.fx, spec.i), dtype=np.int64)
    for by in range(spec.fy):
        for bx in range(spec.fx):
            for l in range(oy):
                y = l * spec.s + by - spec.pad
                if not 0 <= y < spec.ny:
                    continue
                xs = np.arange(ox) * spec.s + bx - spec.pad
                ok = (xs >= 0) & (xs < spec.nx)
                cols[l, ok, by, bx, :] = data[y, xs[ok], :]
    return cols.reshape(oy * ox, spec.fy * spec.fx * spec.i)


def filter_matrix(filters: FilterSet) -> np.ndarray:
    """Filters as ``(n, fy*fx*i)`` rows matching :func:`im2col` columns."""
    return filters.data.astype(np.int64).reshape(filters.n, -1)


def plane_matmul(planes: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Exact batched ``planes @ w.T`` for bit-plane stacks.

    Plane entries are in {-1, 0, 1} and synapses fit 16 bits, so every
    partial sum stays far below 2^53 and the float64 BLAS path is exact;
    it is an order of magnitude faster than integer matmul here.
    """
    b, r, c = planes.shape
    flat = planes.reshape(b * r, c).astype(np.float64)
    out = flat @ w.T.astype(np.float64)
    return np.rint(out).astype(np.int64).reshape(b, r, w.shape[0])


def _matmul_conv(input, filters, spec, out_shift):
    x = im2col(input, spec)
    w = filter_matrix(filters)
    ox, oy, _ = output_dims(spec)
    acc = x @ w.T
    return Tensor3(activate(acc.reshape(oy, ox, spec.n), spec.act, out_shift))


def _window_essentials(input: Tensor3, spec: LayerSpec, width: int) -> np.ndarray:
    """Essential-bit count of every neuron use (window element)."""
    return essential_counts(im2col(input, spec), width)
