"""Long-context transformer toolkit: banded attention, MLM pretraining,
legal-corpus pipeline, downstream task heads, and evaluation metrics."""

from .attention import (
    AttentionParams,
    AttentionPattern,
    attention_flop_count,
    build_band_mask,
    dense_attention_flop_count,
    dense_attention_oracle,
    sliding_window_offsets,
    sparse_attention_forward,
)
from .encoder import Encoder, EncoderConfig
from .tensor import Tensor, no_grad

__version__ = "0.1.0"

__all__ = [
    "AttentionParams",
    "AttentionPattern",
    "Encoder",
    "EncoderConfig",
    "Tensor",
    "attention_flop_count",
    "build_band_mask",
    "dense_attention_flop_count",
    "dense_attention_oracle",
    "no_grad",
    "sliding_window_offsets",
    "sparse_attention_forward",
    "__version__",
]
