"""Banded multi-head attention: sliding window, dilated windows, global tokens.

Each token attends to w/2 neighbours per side (optionally dilated by a
per-head gap d, i.e. offsets +-k*(d+1) for k=1..w/2) plus every designated
global position. Global tokens attend to the whole sequence through a second,
independent projection set, and are attended from everywhere. Cost is linear
in sequence length for fixed window and global count.

`dense_attention_oracle` materializes the full mask and computes the same
quantity quadratically; it is the testing ground truth and the quadratic
baseline for benchmarks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .tensor import Tensor, make_op

NEG_INF = -np.inf


@dataclass(frozen=True)
class AttentionPattern:
    """Window size w (total width, w/2 per side), per-head dilation gaps,
    and the set of global token positions."""

    window: int = 4
    dilation_per_head: tuple[int, ...] | None = None
    global_positions: tuple[int, ...] = ()

    def __post_init__(self):
        if self.window < 0 or self.window % 2 != 0:
            raise ValueError(f"window must be even and non-negative, got {self.window}")
        if self.dilation_per_head is not None and any(d < 0 for d in self.dilation_per_head):
            raise ValueError("dilation gaps must be non-negative")
        object.__setattr__(self, "global_positions",
                           tuple(sorted(set(int(g) for g in self.global_positions))))
        if any(g < 0 for g in self.global_positions):
            raise ValueError("global positions must be non-negative")

    def dilation_for(self, head: int, n_heads: int) -> int:
        if self.dilation_per_head is None:
            return 0
        if len(self.dilation_per_head) != n_heads:
            raise ValueError(
                f"dilation list has {len(self.dilation_per_head)} entries for {n_heads} heads")
        return self.dilation_per_head[head]

    def check_globals(self, seq_len: int) -> None:
        if self.global_positions and self.global_positions[-1] >= seq_len:
            raise ValueError("global position outside [0, sequence_length)")


def sliding_window_offsets(i: int, length: int, window: int, gap: int = 0) -> set[int]:
    """Positions row i attends to locally: {i} plus i +- k*(gap+1), k=1..w/2,
    truncated to [0, length)."""
    if window % 2 != 0:
        raise ValueError("window must be even")
    if not 0 <= i < length:
        raise ValueError("position outside sequence")
    step = gap + 1
    offs = {i}
    for k in range(1, window // 2 + 1):
        offs.add(i + k * step)
        offs.add(i - k * step)
    return {j for j in offs if 0 <= j < length}


def build_band_mask(length: int, pattern: AttentionPattern, head: int,
                    n_heads: int | None = None) -> np.ndarray:
    """Boolean [L, L] mask for one head: allowed(i, j) iff j is in i's window,
    or i is global, or j is global."""
    n_heads = n_heads if n_heads is not None else (
        len(pattern.dilation_per_head) if pattern.dilation_per_head else head + 1)
    pattern.check_globals(length)
    gap = pattern.dilation_for(head, n_heads)
    step = gap + 1
    half = pattern.window // 2
    idx = np.arange(length)
    delta = idx[None, :] - idx[:, None]
    banded = (np.abs(delta) <= half * step) & (delta % step == 0)
    mask = banded.copy()
    if pattern.global_positions:
        g = np.asarray(pattern.global_positions)
        mask[g, :] = True
        mask[:, g] = True
    return mask


# ----------------------------------------------------------------------
# parameters
# ----------------------------------------------------------------------

_LOCAL_NAMES = ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo")
_GLOBAL_NAMES = ("wq_g", "bq_g", "wk_g", "bk_g", "wv_g", "bv_g")


class AttentionParams:
    """Projection weights: local Q/K/V/O plus a distinct global Q/K/V set."""

    def __init__(self, hidden_dim: int, rng: np.random.Generator,
                 dtype=np.float32, init_scale: float = 0.02):
        self.hidden_dim = hidden_dim
        for name in _LOCAL_NAMES + _GLOBAL_NAMES:
            if name.startswith("w"):
                t = T.randn((hidden_dim, hidden_dim), rng, scale=init_scale,
                            requires_grad=True, dtype=dtype)
            else:
                t = T.zeros((hidden_dim,), requires_grad=True, dtype=dtype)
            setattr(self, name, t)

    def named(self, prefix: str = "") -> dict[str, Tensor]:
        sep = "." if prefix else ""
        return {f"{prefix}{sep}{n}": getattr(self, n) for n in _LOCAL_NAMES + _GLOBAL_NAMES}


# ----------------------------------------------------------------------
# fused gather/scatter ops for the banded kernel
# ----------------------------------------------------------------------


def _gather_band(x: Tensor, idx: np.ndarray) -> Tensor:
    """x [B,h,L,dh], idx [h,L,K] -> [B,h,L,K,dh] with scatter-add backward."""
    h = x.shape[1]
    harr = np.arange(h)[:, None, None]
    key = (slice(None), harr, idx)
    out_data = x.data[key]

    def backward(g):
        if x.requires_grad:
            gx = np.zeros_like(x.data)
            np.add.at(gx, key, g)
            x._accum(gx)

    return make_op(out_data, (x,), backward)


def _scatter_rows(src: Tensor, positions: np.ndarray, length: int) -> Tensor:
    """src [B,h,G,dh] -> [B,h,L,dh], zero except rows `positions`."""
    B, h, _, dh = src.shape
    out_data = np.zeros((B, h, length, dh), dtype=src.data.dtype)
    out_data[:, :, positions, :] = src.data

    def backward(g):
        if src.requires_grad:
            src._accum(g[:, :, positions, :])

    return make_op(out_data, (src,), backward)


def _project(x: Tensor, w: Tensor, b: Tensor, n_heads: int) -> Tensor:
    B, L, H = x.shape
    y = T.matmul(x, w) + b
    y = T.reshape(y, B, L, n_heads, H // n_heads)
    return T.transpose(y, (0, 2, 1, 3))


def _merge_heads(x: Tensor) -> Tensor:
    B, h, L, dh = x.shape
    return T.reshape(T.transpose(x, (0, 2, 1, 3)), B, L, h * dh)


def _band_index(length: int, window: int, gap: int) -> tuple[np.ndarray, np.ndarray]:
    """Banded key indices [L, K] (K = w+1, centre slot = self) plus validity."""
    half = window // 2
    ks = np.arange(-half, half + 1) * (gap + 1)
    idx = np.arange(length)[:, None] + ks[None, :]
    valid = (idx >= 0) & (idx < length)
    return np.clip(idx, 0, length - 1), valid


def _row_valid(lengths, batch: int, length: int) -> np.ndarray:
    if lengths is None:
        return np.ones((batch, length), dtype=bool)
    lengths = np.asarray(lengths)
    return np.arange(length)[None, :] < lengths[:, None]


def sparse_attention_forward(hidden: Tensor, params: AttentionParams,
                             pattern: AttentionPattern, n_heads: int,
                             lengths=None) -> Tensor:
    """Banded multi-head attention over [B, L, H] hidden states.

    Non-global rows score only their banded keys plus the global columns
    (local projections, one joint softmax); global rows attend everywhere
    through the global projections. Padding keys beyond `lengths` are
    excluded and padding rows give zero output.
    """
    B, L, H = hidden.shape
    if H % n_heads != 0:
        raise ValueError("hidden dim not divisible by head count")
    dh = H // n_heads
    pattern.check_globals(L)
    gpos = np.asarray(pattern.global_positions, dtype=np.int64)
    G = len(gpos)
    half_k = pattern.window // 2

    q = T.mul(_project(hidden, params.wq, params.bq, n_heads), 1.0 / np.sqrt(dh))
    k = _project(hidden, params.wk, params.bk, n_heads)
    v = _project(hidden, params.wv, params.bv, n_heads)

    # banded + global column index per head
    idx_h, valid_h = [], []
    for h in range(n_heads):
        idx, valid = _band_index(L, pattern.window, pattern.dilation_for(h, n_heads))
        if G:
            # global columns are appended once; drop band slots that duplicate them
            valid = valid & ~np.isin(idx, gpos)
            valid[:, half_k] = True  # self stays in its band slot
            idx = np.concatenate([idx, np.broadcast_to(gpos, (L, G))], axis=1)
            valid = np.concatenate([valid, np.ones((L, G), dtype=bool)], axis=1)
        idx_h.append(idx)
        valid_h.append(valid)
    idxc = np.stack(idx_h)        # [h, L, K]
    validc = np.stack(valid_h)    # [h, L, K]

    row_ok = _row_valid(lengths, B, L)               # [B, L]
    # key j usable iff its band slot is in range and j < length_b
    key_ok = validc[None] & row_ok[:, idxc]          # [B, h, L, K]
    key_ok[..., half_k] = True  # self slot always open (pad rows are zeroed later)
    add_mask = np.where(key_ok, 0.0, NEG_INF)

    kb = _gather_band(k, idxc)   # [B,h,L,K,dh]
    vb = _gather_band(v, idxc)
    q5 = T.reshape(q, B, n_heads, L, 1, dh)
    scores = T.reshape(T.matmul(q5, T.transpose(kb, (0, 1, 2, 4, 3))), B, n_heads, L, idxc.shape[-1])
    probs = T.softmax(T.add_const(scores, add_mask), axis=-1)
    out = T.reshape(T.matmul(T.reshape(probs, B, n_heads, L, 1, -1), vb), B, n_heads, L, dh)

    if G:
        qg = T.mul(_project(hidden, params.wq_g, params.bq_g, n_heads), 1.0 / np.sqrt(dh))
        kg = _project(hidden, params.wk_g, params.bk_g, n_heads)
        vg = _project(hidden, params.wv_g, params.bv_g, n_heads)
        qg_rows = qg[:, :, gpos, :]                                  # [B,h,G,dh]
        gscores = T.matmul(qg_rows, T.transpose(kg, (0, 1, 3, 2)))   # [B,h,G,L]
        gmask = np.where(row_ok[:, None, None, :], 0.0, NEG_INF).repeat(G, axis=2)
        gmask[:, :, np.arange(G), gpos] = 0.0
        gout = T.matmul(T.softmax(T.add_const(gscores, gmask), axis=-1), vg)
        keep = np.ones((L, 1), dtype=hidden.data.dtype)
        keep[gpos] = 0.0
        out = T.mul_const(out, keep) + _scatter_rows(gout, gpos, L)

    merged = _merge_heads(out)
    y = T.matmul(merged, params.wo) + params.bo
    return T.mul_const(y, row_ok[:, :, None].astype(hidden.data.dtype))


def dense_attention_oracle(hidden: Tensor, params: AttentionParams,
                           pattern: AttentionPattern, n_heads: int,
                           lengths=None) -> Tensor:
    """Quadratic reference: full score matrices under the materialized mask.

    Same semantics as sparse_attention_forward (local projections for banded
    rows, global projections for global rows, one softmax per row); used as
    the testing oracle and the dense baseline in benchmarks.
    """
    B, L, H = hidden.shape
    dh = H // n_heads
    pattern.check_globals(L)
    gpos = np.asarray(pattern.global_positions, dtype=np.int64)
    G = len(gpos)

    q = T.mul(_project(hidden, params.wq, params.bq, n_heads), 1.0 / np.sqrt(dh))
    k = _project(hidden, params.wk, params.bk, n_heads)
    v = _project(hidden, params.wv, params.bv, n_heads)
    scores = T.matmul(q, T.transpose(k, (0, 1, 3, 2)))  # [B,h,L,L]

    masks = np.stack([build_band_mask(L, pattern, h, n_heads) for h in range(n_heads)])
    row_ok = _row_valid(lengths, B, L)
    allowed = masks[None] & row_ok[:, None, None, :]
    allowed[:, :, np.arange(L), np.arange(L)] = True
    add_mask = np.where(allowed, 0.0, NEG_INF)

    if G:
        qg = T.mul(_project(hidden, params.wq_g, params.bq_g, n_heads), 1.0 / np.sqrt(dh))
        kg = _project(hidden, params.wk_g, params.bk_g, n_heads)
        vg = _project(hidden, params.wv_g, params.bv_g, n_heads)
        gscores = T.matmul(qg, T.transpose(kg, (0, 1, 3, 2)))
        grow = np.zeros((L, 1), dtype=hidden.data.dtype)
        grow[gpos] = 1.0
        scores = T.mul_const(scores, 1.0 - grow) + T.mul_const(gscores, grow)
        probs = T.softmax(T.add_const(scores, add_mask), axis=-1)
        out = T.mul_const(T.matmul(probs, v), 1.0 - grow) + T.mul_const(T.matmul(probs, vg), grow)
    else:
        probs = T.softmax(T.add_const(scores, add_mask), axis=-1)
        out = T.matmul(probs, v)

    y = T.matmul(_merge_heads(out), params.wo) + params.bo
    return T.mul_const(y, row_ok[:, :, None].astype(hidden.data.dtype))


# ----------------------------------------------------------------------
# work counting
# ----------------------------------------------------------------------


def attention_flop_count(length: int, window: int, n_global: int,
                         n_heads: int, dim: int, dilation: int = 0) -> int:
    """Exact multiply-add count of the banded kernel (score dot products plus
    probability-weighted value sums; projections are common to both paths and
    excluded). Global tokens are assumed at the sequence head, which is where
    every task policy puts them. Affine in L for fixed (w, d, n_global)."""
    if length == 0:
        return 0
    dh = dim // n_heads
    half = window // 2
    step = dilation + 1
    i = np.arange(n_global, length)  # non-global rows
    if len(i):
        left = np.minimum(half, i // step)
        right = np.minimum(half, (length - 1 - i) // step)
        band = left + right + 1
        # overlap between the band and the global block [0, n_global)
        overlap = np.zeros_like(i)
        for kk in range(1, half + 1):
            j = i - kk * step
            overlap += (j >= 0) & (j < n_global)
        keys = band + n_global - overlap
        nonglobal = int(keys.sum())
    else:
        nonglobal = 0
    global_rows = n_global * length
    return 2 * dh * n_heads * (nonglobal + global_rows)


def dense_attention_flop_count(length: int, n_heads: int, dim: int) -> int:
    """Multiply-adds of the quadratic kernel (scores + value sums)."""
    dh = dim // n_heads
    return 2 * dh * n_heads * length * length
