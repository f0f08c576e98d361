"""Precision-serial engine: bit-serial neurons, bit-parallel synapses.

Each serial inner-product unit consumes one neuron bit per lane per
cycle, reduces the 16 AND terms through an adder tree and accumulates
the plane sum shifted by the bit position:

    sum_i s_i * n_i  =  sum_b 2^b * sum_i bit_b(n_i) * s_i

For two's-complement neurons the sign plane's contribution is
subtracted. 16 windows are processed in parallel so a phase of p cycles
retires one pallet against one latched synapse set; with p = 16 the
schedule degenerates to the bit-parallel baseline's.
"""

from __future__ import annotations

import numpy as np

from . import geometry as geo
from .encoding import essential_counts
from .geometry import FilterSet, LayerSpec, Tensor3, output_dims
from .numerics import MissingProfile, Precision, activate, full_precision, trim_tensor
from .reference import (
    CycleReport,
    EngineResult,
    check_shapes,
    filter_matrix,
    im2col,
    plane_matmul,
    sb_read_count,
)
from .pragmatic import dispatcher_fetch_cycles


def _check_window(n: int, p: Precision, signed: bool):
    if signed:
        lo, hi = -(1 << p.msb), (1 << p.msb) - (1 << p.lsb)
        ok = lo <= n <= hi and n % (1 << p.lsb) == 0
    else:
        ok = n >= 0 and (n & ~p.mask) == 0
    if not ok:
        raise ValueError(f"neuron {n} not representable in window {p} (signed={signed})")


def sip_inner(neurons, synapses, p: Precision, signed: bool | None = None) -> int:
    """Serial inner product of up to 16 lane pairs over the window ``p``.

    Streams bit planes ``p.lsb .. p.msb``; the MSB plane is negated when
    the neurons are signed two's complement. Exactly equals the direct
    dot product for every input representable in the window.
    """
    neurons = [int(v) for v in neurons]
    synapses = [int(v) for v in synapses]
    if len(neurons) != len(synapses) or len(neurons) > 16:
        raise ValueError("need matching neuron/synapse lanes, at most 16")
    if signed is None:
        signed = any(v < 0 for v in neurons)
    for v in neurons:
        _check_window(v, p, signed)
    acc = 0
    for b in range(p.lsb, p.msb + 1):
        plane = sum(((v >> b) & 1) * s for v, s in zip(neurons, synapses))
        if signed and b == p.msb:
            plane = -plane
        acc += plane << b
    return acc


def stripes_layer(
    input: Tensor3,
    filters: FilterSet,
    spec: LayerSpec,
    profile: Precision | None,
    width: int = 16,
    out_shift: int = 0,
) -> EngineResult:
    """Run the precision-serial engine on one layer.

    The input is trimmed to the profile window first (the previous
    layer's output stage would have done this in hardware). Layers that
    contain negative values are streamed as full-range two's complement
    above the suffix trim (planes ``lsb..15`` with the top plane
    negated), since a magnitude window narrower than the container has
    no exact two's-complement transmission.

    Cycles per phase are ``max(NM_C, p)``: the dispatcher fetch model is
    shared with the essential-bit engine, and equals the pure ``p``
    closed form whenever the fetch keeps up (``NM_C <= p``).
    """
    if profile is None:
        raise MissingProfile("the precision-serial engine needs a per-layer window")
    check_shapes(input, filters, spec)
    container = full_precision(width)
    if profile.msb > container.msb:
        raise ValueError(f"profile {profile} exceeds container width {width}")

    trimmed = trim_tensor(input.data, profile)
    x = im2col(Tensor3(trimmed), spec)
    w = filter_matrix(filters)

    signed = bool((trimmed < 0).any())
    hi = 15 if signed else profile.msb
    bits = np.arange(profile.lsb, hi + 1)
    planes = (x[None, :, :] >> bits[:, None, None]) & 1
    sums = plane_matmul(planes, w)  # (planes, windows, n)
    weights = (np.int64(1) << bits).astype(np.int64)
    if signed:
        weights[-1] = -weights[-1]
    acc = np.tensordot(weights, sums, axes=(0, 0))

    ox, oy, _ = output_dims(spec)
    output = Tensor3(activate(acc.reshape(oy, ox, spec.n), spec.act, out_shift))

    p_eff = hi - profile.lsb + 1
    groups = geo.filter_groups(spec)
    phases = geo.num_pallets(spec) * geo.num_brick_steps(spec)
    nm_c = dispatcher_fetch_cycles(spec)
    pairs = spec.n * ox * oy * spec.fy * spec.fx * spec.i
    effectual = int(essential_counts(x, width).sum()) * spec.n
    report = CycleReport(
        compute_cycles=groups * phases * max(nm_c, p_eff),
        nm_fetch_cycles=groups * phases * nm_c,
        stall_cycles=groups * phases * max(0, nm_c - p_eff),
        sb_reads=sb_read_count(spec),
        total_terms=p_eff * pairs,
        effectual_terms=effectual,
    )
    return EngineResult(output=output, report=report, engine="stripes",
                        variant=f"p{profile.width}")


def stripes_cycles(spec: LayerSpec, p: int) -> int:
    """Closed-form cycles at precision ``p`` when the fetch keeps up."""
    return geo.filter_groups(spec) * geo.num_pallets(spec) * geo.num_brick_steps(spec) * p
