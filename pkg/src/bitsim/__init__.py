"""bitsim: functional and cycle-count models of convolution accelerator
datapaths — a bit-parallel baseline, a precision-serial design, and an
essential-bit-serial design — verified against a brute-force oracle.
"""

from .geometry import (
    BRICK,
    PALLET,
    Brick,
    FilterSet,
    LayerSpec,
    Pallet,
    Tensor3,
    build_pallet,
    output_dims,
    window_brick,
)
from .numerics import (
    Precision,
    QuantParams,
    activate,
    dequantize8,
    quantize8,
    trim,
    trim_tensor,
)
from .encoding import BitStats, OneffsetStream, encode, essential_count, stats
from .reference import (
    CycleReport,
    EngineResult,
    conv_oracle,
    dadn_cycles,
    dadn_layer,
    dadn_terms,
    sb_read_count,
)
from .stripes import sip_inner, stripes_cycles, stripes_layer
from .pragmatic import (
    PragConfig,
    dispatcher_fetch_cycles,
    pallet_phase_cycles,
    pip_inner,
    prag_layer_column,
    prag_layer_pallet,
    pragmatic_layer,
    two_stage_step,
)
from .analysis import TermCounts, count_terms, report
from .traces import generate_trace, read_trace, write_trace

__version__ = "0.1.0"

__all__ = [
    "BRICK",
    "PALLET",
    "Brick",
    "BitStats",
    "CycleReport",
    "EngineResult",
    "FilterSet",
    "LayerSpec",
    "OneffsetStream",
    "Pallet",
    "PragConfig",
    "Precision",
    "QuantParams",
    "Tensor3",
    "TermCounts",
    "activate",
    "build_pallet",
    "conv_oracle",
    "count_terms",
    "dadn_cycles",
    "dadn_layer",
    "dadn_terms",
    "dequantize8",
    "dispatcher_fetch_cycles",
    "encode",
    "essential_count",
    "generate_trace",
    "output_dims",
    "pallet_phase_cycles",
    "pip_inner",
    "prag_layer_column",
    "prag_layer_pallet",
    "pragmatic_layer",
    "quantize8",
    "read_trace",
    "report",
    "sb_read_count",
    "sip_inner",
    "stats",
    "stripes_cycles",
    "stripes_layer",
    "trim",
    "trim_tensor",
    "two_stage_step",
    "window_brick",
    "write_trace",
]
