"""Encoder + task-head parameter container and the shared fine-tuning loop."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .. import tensor as T
from ..checkpoint import load_arrays, save_arrays
from ..encoder import Encoder, EncoderConfig
from ..optim import AdamState, adam_step, zero_grads
from ..tensor import Tensor


class HeadedModel:
    """An encoder with named linear heads, checkpointable as one unit."""

    def __init__(self, enc_config: EncoderConfig, head_shapes: dict[str, tuple],
                 seed: int = 0, init_scale: float = 0.02):
        rng = np.random.default_rng(seed)
        self.encoder = Encoder(enc_config, rng, init_scale=init_scale)
        self.head_shapes = dict(head_shapes)
        self.heads: dict[str, Tensor] = {}
        for name, shape in self.head_shapes.items():
            if name.endswith("_b"):
                self.heads[name] = T.zeros(shape, requires_grad=True)
            else:
                self.heads[name] = T.randn(shape, rng, init_scale, requires_grad=True)

    def params(self) -> dict[str, Tensor]:
        out = self.encoder.named_params()
        out.update({f"head.{k}": v for k, v in self.heads.items()})
        return out

    def save(self, out_dir, meta: dict) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        save_arrays(out_dir / "model.ckpt", {k: v.data for k, v in self.params().items()})
        self.encoder.config.save(out_dir / "model.cfg")
        meta = dict(meta)
        meta["head_shapes"] = {k: list(v) for k, v in self.head_shapes.items()}
        (out_dir / "meta.json").write_text(json.dumps(meta, ensure_ascii=False),
                                           encoding="utf-8")

    @classmethod
    def restore(cls, out_dir) -> tuple["HeadedModel", dict]:
        out_dir = Path(out_dir)
        meta = json.loads((out_dir / "meta.json").read_text(encoding="utf-8"))
        config = EncoderConfig.load(out_dir / "model.cfg")
        head_shapes = {k: tuple(v) for k, v in meta["head_shapes"].items()}
        model = cls(config, head_shapes, seed=0)
        arrays = load_arrays(out_dir / "model.ckpt")
        for name, p in model.params().items():
            p.data = arrays[name].reshape(p.shape).astype(p.data.dtype)
        return model, meta


def fit_adam(model: HeadedModel, loss_closure, steps: int, lr: float) -> list[float]:
    """Fixed-rate Adam over `steps` updates; loss_closure(step) must build the
    graph(s), call backward, and return the scalar loss for logging."""
    params = model.params()
    state = AdamState(params, learning_rate=lr)
    history = []
    for step in range(steps):
        zero_grads(params)
        loss = float(loss_closure(step))
        if not np.isfinite(loss):
            raise FloatingPointError(f"non-finite fine-tuning loss at step {step}")
        adam_step(params, state)
        history.append(loss)
    return history


def cls_vector(model: HeadedModel, enc_input, window: int, dilation=None) -> Tensor:
    """Encode one assembled input and return the CLS row as [1, H]."""
    hidden = model.encoder.encode(enc_input.ids[None], enc_input.type_ids[None],
                                  enc_input.pattern(window, dilation))
    return hidden[:, 0, :]


def mse(pred: Tensor, target: np.ndarray) -> Tensor:
    diff = T.add_const(pred, -np.asarray(target, dtype=pred.data.dtype))
    return T.reduce_mean(T.mul(diff, diff))
