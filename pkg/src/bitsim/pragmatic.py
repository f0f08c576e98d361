"""Essential-bit-serial engine: PIP units, two-stage shift scheduling,
pallet- and per-column synchronization, and the dispatcher fetch model.

A PIP column holds 16 neuron lanes that share one brick. Every cycle the
column's control picks the minimum live oneffset ``c`` (the second-stage
shift), and every lane whose head is within ``2^L`` of it emits the term
``synapse << (head - c)``; the adder-tree sum is then shifted by ``c``
and accumulated. Lanes further ahead stall that cycle. ``L = 4`` spans
the whole offset range, i.e. single-stage shifting.

Synchronization:

* pallet: all 16 columns advance together; a phase costs the slowest
  column's cycles, overlapped with the next pallet fetch.
* column: each column walks its own brick sequence; synapse sets are
  buffered in SSRs with a 16-way down-counter, the single SB port grants
  one read per cycle (lowest column index first), and the dispatcher's
  pallet buffer bounds how far columns may drift apart.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .encoding import OneffsetStream, essential_counts
from .geometry import BRICK, PALLET, FilterSet, LayerSpec, Tensor3, output_dims
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


class AllDone(RuntimeError):
    """Scheduler stepped with every lane already exhausted."""


class DeadlockDetected(RuntimeError):
    """Column-sync arbitration stopped making progress (must never fire)."""


@dataclass(frozen=True)
class PragConfig:
    """Design-space knobs of the essential-bit engine.

    ``l_bits`` is the first-stage shifter width (4 means single-stage);
    ``ssr_count``/``pallet_buffer`` apply to column sync only, ``None``
    meaning unbounded. ``pallet_buffer=None`` with a bounded ``ssr_count``
    sizes the dispatcher buffer to ``ssr_count + 1``, the smallest depth
    the SSR skew can use (two pallets for one SSR).
    """

    l_bits: int = 2
    sync: str = "pallet"
    ssr_count: int | None = 1
    pallet_buffer: int | None = None
    trim: str = "profile"  # "profile" (software-guided window) or "none" (raw)

    def __post_init__(self):
        if self.l_bits not in (0, 1, 2, 3, 4):
            raise ValueError(f"l_bits must be in 0..4, got {self.l_bits}")
        if self.sync not in ("pallet", "column"):
            raise ValueError(f"sync must be 'pallet' or 'column', got {self.sync!r}")
        if self.ssr_count is not None and self.ssr_count < 1:
            raise ValueError("ssr_count must be >= 1 (or None for unbounded)")
        if self.pallet_buffer is not None and self.pallet_buffer < 1:
            raise ValueError("pallet_buffer must be >= 1 (or None)")
        if self.trim not in ("profile", "none"):
            raise ValueError(f"trim must be 'profile' or 'none', got {self.trim!r}")

    @property
    def effective_buffer(self) -> int | None:
        if self.pallet_buffer is not None:
            return self.pallet_buffer
        if self.ssr_count is None:
            return None
        return self.ssr_count + 1

    def variant_name(self) -> str:
        tag = f"{self.l_bits}b-{self.sync}"
        if self.sync == "column":
            tag += f"-{'inf' if self.ssr_count is None else self.ssr_count}R"
        tag += "-raw" if self.trim == "none" else "-red"
        return tag


@dataclass
class LaneState:
    """One neuron lane: remaining ascending offsets plus sign."""

    offsets: tuple[int, ...]
    neg: bool = False
    pos: int = 0

    @classmethod
    def from_stream(cls, stream: OneffsetStream) -> "LaneState":
        return cls(offsets=stream.offsets, neg=stream.neg)

    @property
    def done(self) -> bool:
        return self.pos >= len(self.offsets)

    @property
    def head(self) -> int | None:
        return None if self.done else self.offsets[self.pos]

    def advance(self) -> int:
        f = self.offsets[self.pos]
        self.pos += 1
        return f


def two_stage_step(heads, l_bits: int):
    """One scheduling decision over the current lane heads.

    ``heads`` holds one optional offset per lane (None = exhausted).
    Returns ``(c, advance, done)``: the shared second-stage shift, the
    per-lane advance mask, and whether every live head was consumed
    (no lane left stalled). Raises :class:`AllDone` with no live lane.
    """
    heads = list(heads)
    live = [h for h in heads if h is not None]
    if not live:
        raise AllDone("no live lanes to schedule")
    c = 0 if l_bits >= 4 else min(live)
    span = 1 << l_bits
    advance = tuple(h is not None and h - c < span for h in heads)
    done = all(h is None or adv for h, adv in zip(heads, advance))
    return c, advance, done


@dataclass(frozen=True)
class ScheduleStep:
    common_shift: int
    advanced: tuple[int, ...]  # lane indices that consumed their head


def pip_schedule(streams, l_bits: int) -> list[ScheduleStep]:
    """Cycle-by-cycle schedule of one PIP column (16 lanes max).

    All-empty lanes still take one cycle: the end-of-neuron marker has to
    be consumed.
    """
    lanes = [LaneState.from_stream(s) for s in streams]
    if len(lanes) > BRICK:
        raise ValueError(f"a PIP column has at most {BRICK} lanes")
    steps: list[ScheduleStep] = []
    while not all(l.done for l in lanes):
        c, advance, _ = two_stage_step([l.head for l in lanes], l_bits)
        advanced = []
        for idx, (lane, adv) in enumerate(zip(lanes, advance)):
            if adv:
                lane.advance()
                advanced.append(idx)
        steps.append(ScheduleStep(common_shift=c, advanced=tuple(advanced)))
    if not steps:
        steps.append(ScheduleStep(common_shift=0, advanced=()))
    return steps


def pip_inner(neuron_streams, synapses, l_bits: int = 4) -> tuple[int, int]:
    """Inner product of one PIP: shift-accumulate over essential bits.

    Returns ``(value, cycles)``. The value is accumulated exactly as the
    datapath does: per cycle, first-stage shifts of ``head - c``, adder
    tree, then the common shift by ``c``.
    """
    streams = list(neuron_streams)
    synapses = [int(s) for s in synapses]
    if len(streams) != len(synapses):
        raise ValueError("need one synapse per neuron stream")
    lanes = [LaneState.from_stream(s) for s in streams]
    signs = [-1 if s.neg else 1 for s in streams]
    acc = 0
    cycles = 0
    while not all(l.done for l in lanes):
        c, advance, _ = two_stage_step([l.head for l in lanes], l_bits)
        first_stage = 0
        for lane, adv, syn, sgn in zip(lanes, advance, synapses, signs):
            if adv:
                f = lane.advance()
                first_stage += sgn * (syn << (f - c))
        acc += first_stage << c
        cycles += 1
    return acc, max(cycles, 1)


def pallet_phase_cycles(pallet_streams, l_bits: int = 4) -> int:
    """Cycles one pallet phase takes under pallet synchronization.

    ``pallet_streams`` is 16 windows x 16 lanes of oneffset streams (a
    flat list of 256 works too). All columns wait for the slowest.
    """
    streams = list(pallet_streams)
    if len(streams) == PALLET * BRICK:
        streams = [streams[w * BRICK : (w + 1) * BRICK] for w in range(PALLET)]
    worst = 1
    for column in streams:
        worst = max(worst, len(pip_schedule(column, l_bits)))
    return worst


# --- vectorized column costs (the same scheduler on magnitude bitmasks) ---

_LOWBIT = np.full(1 << 16, 64, dtype=np.int64)
for _k in range(16):
    _LOWBIT[1 << _k] = _k


def column_costs(masks: np.ndarray, l_bits: int) -> np.ndarray:
    """Scheduler cycle counts for batches of 16-lane magnitude masks.

    ``masks[..., lane]`` holds the essential-bit set of each lane as a
    bitmask; the returned array drops the lane axis. Exactly matches
    :func:`pip_schedule` length, vectorized: each iteration consumes the
    head (lowest set bit) of every lane within first-stage reach of the
    batch minimum.
    """
    m = np.asarray(masks, dtype=np.int64).copy()
    cycles = np.zeros(m.shape[:-1], dtype=np.int64)
    span = 1 << l_bits
    while True:
        live = m != 0
        active = live.any(axis=-1)
        if not active.any():
            break
        heads = _LOWBIT[m & -m]
        c = heads.min(axis=-1)
        adv = live & ((heads - c[..., None]) < span)
        m = np.where(adv, m & (m - 1), m)
        cycles += active
    return np.maximum(cycles, 1)


# --- dispatcher: neuron memory mapping and fetch cost ---


def _nm_row(spec: LayerSpec, x: int, y: int, i0: int) -> int:
    """NM row of a brick, one row holding 256 neurons (16 bricks).

    Bricks are laid out (y, i0, x) with x fastest, so a pallet's 16
    stride-adjacent bricks are s bricks apart regardless of the layer
    depth: unit-stride pallets land on one row (two when straddling a
    boundary) and stride-s pallets spread over at most min(s+1, 16)
    rows. Bricks never span a row.
    """
    depth_slices = spec.i // BRICK
    addr = (y * depth_slices + i0 // BRICK) * spec.nx + x
    return addr // PALLET


def pallet_fetch_rows(
    spec: LayerSpec, base_wx: int, wy: int, bx: int, by: int, i0: int
) -> int:
    """Distinct NM rows one pallet fetch touches (0 if all-padding)."""
    ox, _, _ = output_dims(spec)
    y = wy * spec.s + by - spec.pad
    if not 0 <= y < spec.ny:
        return 0
    rows = set()
    for w in range(PALLET):
        wx = base_wx + w
        if wx >= ox:
            continue
        x = wx * spec.s + bx - spec.pad
        if 0 <= x < spec.nx:
            rows.add(_nm_row(spec, x, y, i0))
    return len(rows)


def dispatcher_fetch_cycles(spec: LayerSpec) -> int:
    """Per-layer pallet fetch cost ``NM_C`` (one row read per cycle).

    Derived from the actual memory mapping: the worst pallet of the
    layer. With unit stride this is 1 when the 16 bricks share a row and
    2 when they straddle a boundary; with stride S the bricks spread over
    up to min(S+1, 16) rows.
    """
    worst = 1
    for base_wx, wy in geo.pallet_bases(spec):
        for by, bx, i0 in geo.brick_steps(spec):
            worst = max(worst, pallet_fetch_rows(spec, base_wx, wy, bx, by, i0))
            if worst >= min(spec.s + 1, PALLET):
                return worst  # already at the mapping's ceiling
    return worst


# --- layer lowering shared by both sync modes ---


def _layer_masks(x: np.ndarray, spec: LayerSpec) -> np.ndarray:
    """Magnitude bitmasks arranged (pallet, brick-step, window, lane).

    ``x`` is the im2col matrix of the (possibly trimmed) input. Windows
    beyond the output row edge appear as zero masks: idle lanes.
    """
    ox, oy, _ = output_dims(spec)
    k = geo.num_brick_steps(spec)
    mags = np.abs(x).reshape(oy, ox, k, BRICK)
    nb = -(-ox // PALLET)
    padded = np.zeros((oy, nb * PALLET, k, BRICK), dtype=np.int64)
    padded[:, :ox] = mags
    # (oy, nb, PALLET, k, BRICK) -> (pallet, step, window, lane)
    arr = padded.reshape(oy, nb, PALLET, k, BRICK).transpose(0, 1, 3, 2, 4)
    return arr.reshape(oy * nb, k, PALLET, BRICK)


def _functional_output(
    x: np.ndarray, filters: FilterSet, spec: LayerSpec, width: int, out_shift: int
) -> Tensor3:
    """Shift-accumulate evaluation over essential bits, batched.

    Every set magnitude bit contributes ``sign * (synapse << bit)``; this
    is the PIP arithmetic applied to all windows and filters at once.
    """
    w = filter_matrix(filters)
    mags = np.abs(x)
    signs = np.sign(x)
    top = max(1, int(mags.max()).bit_length()) if mags.size else 1
    bits = np.arange(min(top, width))
    planes = ((mags[None, :, :] >> bits[:, None, None]) & 1) * signs[None, :, :]
    sums = plane_matmul(planes, w)
    weights = (np.int64(1) << bits).astype(np.int64)
    acc = np.tensordot(weights, sums, axes=(0, 0))
    ox, oy, _ = output_dims(spec)
    return Tensor3(activate(acc.reshape(oy, ox, spec.n), spec.act, out_shift))


def _term_counters(x: np.ndarray, spec: LayerSpec, width: int) -> tuple[int, int]:
    ox, oy, _ = output_dims(spec)
    pairs = spec.n * ox * oy * spec.fy * spec.fx * spec.i
    effectual = int(essential_counts(x, width).sum()) * spec.n
    return width * pairs, effectual


def _prepare(input, filters, spec, profile, cfg, width):
    check_shapes(input, filters, spec)
    if cfg.trim == "profile":
        if profile is None:
            raise MissingProfile("trim='profile' needs a per-layer window")
        if profile.msb > full_precision(width).msb:
            raise ValueError(f"profile {profile} exceeds container width {width}")
        values = trim_tensor(input.data, profile)
    else:
        values = input.data.astype(np.int64)
    x = im2col(Tensor3(values), spec)
    return x


def prag_layer_pallet(
    input: Tensor3,
    filters: FilterSet,
    spec: LayerSpec,
    profile: Precision | None,
    cfg: PragConfig,
    width: int = 16,
    out_shift: int = 0,
) -> EngineResult:
    """Essential-bit engine under pallet-level synchronization.

    A phase retires when its slowest column does; the next pallet fetch
    overlaps processing, so each phase occupies ``max(NM_C, P_C)`` cycles
    and ``(NM_C - P_C)+`` of that is fetch stall.
    """
    if cfg.sync != "pallet":
        raise ValueError("prag_layer_pallet needs cfg.sync == 'pallet'")
    x = _prepare(input, filters, spec, profile, cfg, width)
    masks = _layer_masks(x, spec)
    costs = column_costs(masks, cfg.l_bits)  # (pallet, step, window)
    phase_cycles = costs.max(axis=2)  # slowest column per phase

    nm_c = dispatcher_fetch_cycles(spec)
    groups = geo.filter_groups(spec)
    slots = np.maximum(phase_cycles, nm_c)
    total, effectual = _term_counters(x, spec, width)
    report = CycleReport(
        compute_cycles=groups * int(slots.sum()),
        nm_fetch_cycles=groups * phase_cycles.size * nm_c,
        stall_cycles=groups * int((slots - phase_cycles).sum()),
        sb_reads=sb_read_count(spec),
        total_terms=total,
        effectual_terms=effectual,
    )
    output = _functional_output(x, filters, spec, width, out_shift)
    return EngineResult(output=output, report=report, engine="pragmatic",
                        variant=cfg.variant_name())


# --- per-column synchronization simulator ---


@dataclass
class ColumnSchedule:
    """Outcome of one column-sync pass over a filter group."""

    total_cycles: int
    sb_reads: int
    column_busy: list[int]
    start_cycles: np.ndarray | None = None  # (steps, columns) when recorded
    grants: list[tuple[int, int, int]] = field(default_factory=list)  # (t, step, col)


def simulate_column_sync(
    costs: np.ndarray,
    nm_cycles: int,
    ssr_count: int | None,
    pallet_buffer: int | None,
    record: bool = False,
) -> ColumnSchedule:
    """Cycle-accurate arbitration of independently advancing PIP columns.

    ``costs[g, w]`` is column ``w``'s compute cycles for global
    brick-step ``g``. Rules: a column starts step ``g`` once (1) the
    dispatcher has fetched pallet ``g`` (sequential prefetch, ``nm_cycles``
    per pallet), (2) the in-use pallet span fits the dispatcher buffer,
    and (3) step ``g``'s synapse set is in an SSR, or the single SB port
    grants it a read (lowest column index wins, one grant per cycle, a
    free SSR slot required). A set frees once all columns copied it;
    reads and copies may land in the same cycle a slot frees.
    """
    costs = np.asarray(costs)
    n_steps, n_cols = costs.shape
    buffer = pallet_buffer

    frontier = [0] * n_cols          # next step each column will start
    busy_until = [0] * n_cols
    resident: dict[int, int] = {}    # step -> copies remaining
    slots_used = 0
    sb_reads = 0
    grants: list[tuple[int, int, int]] = []
    starts = np.full((n_steps, n_cols), -1, dtype=np.int64) if record else None

    def avail(g: int) -> int:
        return g * nm_cycles  # pallet 0 overlaps startup, as in pallet sync

    def current_pallet(w: int, t: int) -> int | None:
        if frontier[w] >= n_steps and busy_until[w] <= t:
            return None  # done column holds nothing
        return frontier[w] - 1 if busy_until[w] > t else frontier[w]

    t = 0
    guard = 0
    limit = int(costs.sum()) + (n_steps + 1) * (nm_cycles + n_cols + 2) + 64
    while True:
        progressed = True
        granted_this_cycle = False
        while progressed:
            progressed = False
            in_use = [p for w in range(n_cols) if (p := current_pallet(w, t)) is not None]
            oldest = min(in_use) if in_use else None
            for w in range(n_cols):
                g = frontier[w]
                if g >= n_steps or busy_until[w] > t:
                    continue
                if avail(g) > t:
                    continue
                if buffer is not None and oldest is not None and g - oldest + 1 > buffer:
                    continue
                if g in resident:
                    resident[g] -= 1
                    if resident[g] == 0:
                        del resident[g]
                        slots_used -= 1
                elif not granted_this_cycle and (
                    ssr_count is None or slots_used < ssr_count
                ):
                    granted_this_cycle = True
                    sb_reads += 1
                    grants.append((t, g, w))
                    if n_cols > 1:
                        resident[g] = n_cols - 1
                        slots_used += 1
                else:
                    continue  # blocked on SB port or SSR slots this cycle
                busy_until[w] = t + int(costs[g, w])
                frontier[w] = g + 1
                if record:
                    starts[g, w] = t
                progressed = True
                in_use = [
                    p for w2 in range(n_cols) if (p := current_pallet(w2, t)) is not None
                ]
                oldest = min(in_use) if in_use else None

        if all(f >= n_steps for f in frontier) and all(b <= t for b in busy_until):
            break

        candidates = [b for b in busy_until if b > t]
        for w in range(n_cols):
            if frontier[w] < n_steps and busy_until[w] <= t:
                candidates.append(max(t + 1, avail(frontier[w])))
        if not candidates:
            raise DeadlockDetected("no runnable column and no pending event")
        t = min(candidates)
        guard += 1
        if guard > limit:
            raise DeadlockDetected(f"no completion within {limit} events")

    return ColumnSchedule(
        total_cycles=max(busy_until) if busy_until else 0,
        sb_reads=sb_reads,
        column_busy=[int(costs[:, w].sum()) for w in range(n_cols)],
        start_cycles=starts,
        grants=grants,
    )


def prag_layer_column(
    input: Tensor3,
    filters: FilterSet,
    spec: LayerSpec,
    profile: Precision | None,
    cfg: PragConfig,
    width: int = 16,
    out_shift: int = 0,
) -> EngineResult:
    """Essential-bit engine under per-column synchronization.

    Timing comes from :func:`simulate_column_sync` on the per-step column
    costs; the filter groups repeat the identical schedule. The SSR
    policy reads each synapse set exactly once per phase, which the
    simulation cross-checks against the shared SB-read count.
    """
    if cfg.sync != "column":
        raise ValueError("prag_layer_column needs cfg.sync == 'column'")
    x = _prepare(input, filters, spec, profile, cfg, width)
    masks = _layer_masks(x, spec)
    costs = column_costs(masks, cfg.l_bits)  # (pallet, step, window)
    n_steps = costs.shape[0] * costs.shape[1]
    flat = costs.reshape(n_steps, PALLET)

    nm_c = dispatcher_fetch_cycles(spec)
    sched = simulate_column_sync(flat, nm_c, cfg.ssr_count, cfg.effective_buffer)
    if sched.sb_reads != n_steps:
        raise AssertionError(
            f"SSR policy must read each set once: {sched.sb_reads} != {n_steps}"
        )

    groups = geo.filter_groups(spec)
    total, effectual = _term_counters(x, spec, width)
    critical = max(sched.column_busy)
    report = CycleReport(
        compute_cycles=groups * sched.total_cycles,
        nm_fetch_cycles=groups * n_steps * nm_c,
        stall_cycles=groups * (sched.total_cycles - critical),
        sb_reads=groups * sched.sb_reads,
        total_terms=total,
        effectual_terms=effectual,
    )
    output = _functional_output(x, filters, spec, width, out_shift)
    return EngineResult(output=output, report=report, engine="pragmatic",
                        variant=cfg.variant_name())


def pragmatic_layer(
    input: Tensor3,
    filters: FilterSet,
    spec: LayerSpec,
    profile: Precision | None,
    cfg: PragConfig,
    width: int = 16,
    out_shift: int = 0,
) -> EngineResult:
    """Run the essential-bit engine with either synchronization mode."""
    runner = prag_layer_pallet if cfg.sync == "pallet" else prag_layer_column
    return runner(input, filters, spec, profile, cfg, width, out_shift)
