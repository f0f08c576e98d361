"""Layer geometry, 3D tensors and window/brick/pallet addressing.

Conventions shared by every engine model:

* neuron/synapse arrays are stored with the depth (``i``) dimension
  innermost, i.e. an input tensor is a ``(y, x, i)`` C-order array;
* a *brick* is a run of ``BRICK`` (16) values along ``i``;
* a *pallet* is one brick from each of ``PALLET`` (16) windows that are
  adjacent along ``x`` with the layer stride.

Padding is never materialized: reads that fall into the zero border
return zeros, so traces and memory mapping stay aligned with the
unpadded storage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BRICK = 16          # values per brick (depth-direction SIMD width)
PALLET = 16         # windows per pallet (x-direction SIMD width)
FILTERS_PER_TILE = 16
TILES = 16
FILTERS_PER_GROUP = FILTERS_PER_TILE * TILES  # filters processed per pass

INT16_MIN = -(1 << 15)
INT16_MAX = (1 << 15) - 1
# Neuron containers are 16-bit patterns; post-activation streams may use
# the unsigned view, so tensors accept the union of both interpretations.
CONTAINER_MIN = INT16_MIN
CONTAINER_MAX = (1 << 16) - 1


class NonIntegralDims(ValueError):
    """Window placement does not divide evenly by the stride."""


class OutOfRange(IndexError):
    """Window or brick index outside the layer's valid range."""


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def pad_depth(depth: int) -> int:
    """Depth after zero-extension to a whole number of bricks."""
    return max(BRICK, _ceil_div(depth, BRICK) * BRICK)


@dataclass(frozen=True)
class LayerSpec:
    """Geometry and metadata of one convolutional layer.

    ``i`` must already be a multiple of 16; loaders zero-extend shallower
    data (see :meth:`normalized`).
    """

    nx: int
    ny: int
    i: int
    n: int
    fx: int
    fy: int
    s: int = 1
    pad: int = 0
    act: str = "identity"
    name: str = ""

    def __post_init__(self):
        if min(self.nx, self.ny, self.i, self.n, self.fx, self.fy) < 1:
            raise ValueError("layer dimensions must be positive")
        if self.s < 1:
            raise ValueError(f"stride must be >= 1, got {self.s}")
        if self.pad < 0:
            raise ValueError(f"padding must be >= 0, got {self.pad}")
        if self.i % BRICK != 0:
            raise ValueError(
                f"depth {self.i} is not a multiple of {BRICK}; zero-extend at load"
            )
        if self.act not in ("identity", "relu"):
            raise ValueError(f"unknown activation {self.act!r}")
        # Validate output dims eagerly; raises NonIntegralDims on bad geometry.
        output_dims(self)

    @classmethod
    def normalized(cls, nx, ny, i, n, fx, fy, s=1, pad=0, act="identity", name=""):
        """Build a spec, zero-extending the depth to a brick multiple."""
        return cls(nx, ny, pad_depth(i), n, fx, fy, s, pad, act, name)


def output_dims(spec: LayerSpec) -> tuple[int, int, int]:
    """Exact output array dimensions ``(ox, oy, oi)``.

    Raises :class:`NonIntegralDims` when the padded input is not an
    integer number of stride steps wider than the filter.
    """
    span_x = spec.nx + 2 * spec.pad - spec.fx
    span_y = spec.ny + 2 * spec.pad - spec.fy
    if span_x < 0 or span_y < 0:
        raise NonIntegralDims(f"filter larger than padded input: {spec}")
    if span_x % spec.s or span_y % spec.s:
        raise NonIntegralDims(
            f"(input + 2*pad - filter) not divisible by stride {spec.s}"
        )
    return span_x // spec.s + 1, span_y // spec.s + 1, spec.n


@dataclass(frozen=True)
class Tensor3:
    """3D array of signed 16-bit values, ``(y, x, i)`` C-order, ``i`` fastest."""

    data: np.ndarray  # shape (y, x, i), integer dtype

    def __post_init__(self):
        a = np.asarray(self.data)
        if a.ndim != 3:
            raise ValueError(f"expected 3 dims, got shape {a.shape}")
        if not np.issubdtype(a.dtype, np.integer):
            raise ValueError("values must be integers")
        if a.size and (a.min() < CONTAINER_MIN or a.max() > CONTAINER_MAX):
            raise ValueError("values exceed the 16-bit container")
        object.__setattr__(self, "data", np.ascontiguousarray(a, dtype=np.int32))

    @property
    def x(self) -> int:
        return self.data.shape[1]

    @property
    def y(self) -> int:
        return self.data.shape[0]

    @property
    def i(self) -> int:
        return self.data.shape[2]

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.x, self.y, self.i)

    @classmethod
    def from_values(cls, values, x: int, y: int, i: int) -> "Tensor3":
        """Build from a flat ``(y, x, i)``-ordered value sequence."""
        a = np.asarray(values, dtype=np.int64).reshape(y, x, i)
        return cls(a)

    def zero_extended(self) -> "Tensor3":
        """Same tensor with depth padded to a whole number of bricks."""
        want = pad_depth(self.i)
        if want == self.i:
            return self
        padded = np.zeros((self.y, self.x, want), dtype=np.int32)
        padded[:, :, : self.i] = self.data
        return Tensor3(padded)

    def __eq__(self, other):
        if not isinstance(other, Tensor3):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(
            np.array_equal(self.data, other.data)
        )


@dataclass(frozen=True)
class FilterSet:
    """``n`` filters of identical ``(fy, fx, i)`` shape, signed 16-bit."""

    data: np.ndarray  # shape (n, fy, fx, i)

    def __post_init__(self):
        a = np.asarray(self.data)
        if a.ndim != 4:
            raise ValueError(f"expected 4 dims (n, fy, fx, i), got {a.shape}")
        if a.size and (a.min() < INT16_MIN or a.max() > INT16_MAX):
            raise ValueError("synapses exceed the signed 16-bit container")
        object.__setattr__(self, "data", np.ascontiguousarray(a, dtype=np.int32))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def fy(self) -> int:
        return self.data.shape[1]

    @property
    def fx(self) -> int:
        return self.data.shape[2]

    @property
    def i(self) -> int:
        return self.data.shape[3]

    def zero_extended(self) -> "FilterSet":
        want = pad_depth(self.i)
        if want == self.i:
            return self
        padded = np.zeros((self.n, self.fy, self.fx, want), dtype=np.int32)
        padded[:, :, :, : self.i] = self.data
        return FilterSet(padded)

    def matches(self, spec: LayerSpec) -> bool:
        return (self.n, self.fy, self.fx, self.i) == (spec.n, spec.fy, spec.fx, spec.i)


@dataclass(frozen=True)
class Brick:
    """16 neurons contiguous along ``i`` at one (x, y) position.

    ``present`` is False for bricks of windows beyond the right edge of
    the output (idle pallet lanes); their values read as zero.
    """

    origin: tuple[int, int, int]  # (x, y, i0) in window-relative input coords
    values: np.ndarray
    present: bool = True

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.int64)
        if v.shape != (BRICK,):
            raise ValueError(f"a brick holds exactly {BRICK} values")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class Pallet:
    """One brick from each of 16 stride-adjacent windows along x."""

    bricks: tuple[Brick, ...]

    def __post_init__(self):
        if len(self.bricks) != PALLET:
            raise ValueError(f"a pallet holds exactly {PALLET} bricks")

    @property
    def present_count(self) -> int:
        return sum(b.present for b in self.bricks)


def window_brick(
    input: Tensor3,
    spec: LayerSpec,
    wx: int,
    wy: int,
    bx: int,
    by: int,
    i0: int,
) -> Brick:
    """The 16 neurons a window reads at offsets ``(bx, by, i0..i0+15)``.

    Positions that fall inside the zero border read 0; the border is
    virtual, so no padded tensor is ever built.
    """
    ox, oy, _ = output_dims(spec)
    if not (0 <= wx < ox and 0 <= wy < oy):
        raise OutOfRange(f"window ({wx},{wy}) outside output grid {ox}x{oy}")
    if not (0 <= bx < spec.fx and 0 <= by < spec.fy):
        raise OutOfRange(f"brick offset ({bx},{by}) outside filter")
    if i0 % BRICK != 0 or not (0 <= i0 and i0 + BRICK <= spec.i):
        raise OutOfRange(f"depth offset {i0} invalid for depth {spec.i}")

    x = wx * spec.s + bx - spec.pad
    y = wy * spec.s + by - spec.pad
    if 0 <= x < spec.nx and 0 <= y < spec.ny:
        vals = input.data[y, x, i0 : i0 + BRICK]
    else:
        vals = np.zeros(BRICK, dtype=np.int64)
    return Brick(origin=(x, y, i0), values=vals)


def build_pallet(
    input: Tensor3,
    spec: LayerSpec,
    base_wx: int,
    wy: int,
    bx: int,
    by: int,
    i0: int,
) -> Pallet:
    """Bricks for windows ``base_wx .. base_wx+15`` at one brick offset.

    Windows past the last output column are marked absent: they occupy
    idle lanes and read as zeros, mirroring what fixed-width SIMD lanes
    do at the right edge.
    """
    ox, _, _ = output_dims(spec)
    if not 0 <= base_wx < ox:
        raise OutOfRange(f"pallet base {base_wx} outside output row of {ox}")
    bricks = []
    for w in range(PALLET):
        wx = base_wx + w
        if wx < ox:
            bricks.append(window_brick(input, spec, wx, wy, bx, by, i0))
        else:
            x = wx * spec.s + bx - spec.pad
            y = wy * spec.s + by - spec.pad
            bricks.append(
                Brick(origin=(x, y, i0), values=np.zeros(BRICK, dtype=np.int64),
                      present=False)
            )
    return Pallet(tuple(bricks))


def brick_steps(spec: LayerSpec):
    """Iterate the ``(by, bx, i0)`` brick offsets that tile one window."""
    for by in range(spec.fy):
        for bx in range(spec.fx):
            for i0 in range(0, spec.i, BRICK):
                yield by, bx, i0


def pallet_bases(spec: LayerSpec):
    """Iterate ``(base_wx, wy)`` pallet anchors, row by row.

    Pallets never cross an output row; a row's last pallet may have idle
    lanes.
    """
    ox, oy, _ = output_dims(spec)
    for wy in range(oy):
        for base in range(0, ox, PALLET):
            yield base, wy


def num_pallets(spec: LayerSpec) -> int:
    ox, oy, _ = output_dims(spec)
    return _ceil_div(ox, PALLET) * oy


def num_brick_steps(spec: LayerSpec) -> int:
    return spec.fy * spec.fx * (spec.i // BRICK)


def filter_groups(spec: LayerSpec) -> int:
    """Sequential 256-filter passes needed; short groups idle lanes."""
    return _ceil_div(spec.n, FILTERS_PER_GROUP)
