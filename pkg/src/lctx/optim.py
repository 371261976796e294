"""Adam optimizer over named parameter collections."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


class AdamState:
    """Per-parameter first/second moments plus the shared step counter.

    Defaults follow the optimizer's original presentation: beta1=0.9,
    beta2=0.999, eps=1e-8.
    """

    def __init__(self, params: dict[str, Tensor], learning_rate: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        self.learning_rate = float(learning_rate)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.epsilon = float(epsilon)
        self.step = 0
        self.first_moment = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.second_moment = {k: np.zeros_like(p.data) for k, p in params.items()}

    def state_arrays(self) -> dict[str, np.ndarray]:
        """Flatten moments + step into named arrays for checkpointing."""
        out = {f"m.{k}": v for k, v in self.first_moment.items()}
        out.update({f"v.{k}": v for k, v in self.second_moment.items()})
        out["step"] = np.asarray([float(self.step)], dtype=np.float32)
        return out

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for k in self.first_moment:
            self.first_moment[k] = arrays[f"m.{k}"].reshape(self.first_moment[k].shape).copy()
            self.second_moment[k] = arrays[f"v.{k}"].reshape(self.second_moment[k].shape).copy()
        self.step = int(arrays["step"][0])


def adam_step(params: dict[str, Tensor], state: AdamState) -> None:
    """One bias-corrected Adam update from the parameters' .grad buffers.

    Parameters with no gradient this step keep their moments decayed-free
    (treated as zero gradient). Non-finite gradients are a checked error.
    """
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for name, p in params.items():
        g = p.grad
        if g is None:
            g = np.zeros_like(p.data)
        elif not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient for parameter {name!r}")
        m = state.first_moment[name]
        v = state.second_moment[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        mhat = m / c1
        vhat = v / c2
        p.data -= (state.learning_rate * mhat / (np.sqrt(vhat) + state.epsilon)).astype(p.data.dtype)


def zero_grads(params: dict[str, Tensor]) -> None:
    for p in params.values():
        p.zero_grad()
