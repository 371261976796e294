"""Judgment prediction: multi-label charges/laws plus penalty regression for
criminal cases; single-label cause plus multi-label laws for civil cases.
Criminal and civil models are trained separately; CLS carries global
attention; the multi-task loss is the unweighted sum of the head losses."""

from __future__ import annotations

import numpy as np

from .. import tensor as T
from ..base import ParamMixin, check_fitted
from ..encoder import EncoderConfig
from ..metrics import log_distance, micro_macro_f1
from ..vocab import CharVocab
from .inputs import GlobalPolicy, single_text_input
from .model import HeadedModel, cls_vector, fit_adam, mse

PENALTY_CAP = 180.0


def decode_label_set(logits: np.ndarray, threshold: float = 0.5) -> set[int]:
    """Sigmoid >= threshold per label; an empty set falls back to the top-1."""
    probs = 1.0 / (1.0 + np.exp(-logits.astype(np.float64)))
    chosen = set(np.flatnonzero(probs >= threshold).tolist())
    if not chosen:
        chosen = {int(probs.argmax())}
    return chosen


class JudgmentModel(ParamMixin):
    """fit(examples)/predict(examples) over the judgment JSONL rows
    ({fact, charges, laws, penalty_months} criminal; {fact, cause, laws}
    civil, label fields holding ids)."""

    def __init__(self, mode: str = "criminal", vocab: CharVocab | None = None,
                 encoder: EncoderConfig | None = None, steps: int = 200,
                 lr: float = 2e-3, seed: int = 0, threshold: float = 0.5,
                 n_label_a: int | None = None, n_laws: int | None = None):
        if mode not in ("criminal", "civil"):
            raise ValueError("mode must be criminal or civil")
        self.mode = mode
        self.vocab = vocab
        self.encoder = encoder
        self.steps = steps
        self.lr = lr
        self.seed = seed
        self.threshold = threshold
        self.n_label_a = n_label_a  # charges (criminal) or causes (civil)
        self.n_laws = n_laws

    # -- plumbing -------------------------------------------------------

    def _label_a(self, ex) -> object:
        if self.mode == "criminal":
            if "charges" not in ex:
                raise ValueError("criminal example lacks charges")
            return ex["charges"]
        if "cause" not in ex:
            raise ValueError("civil example lacks cause")
        return ex["cause"]

    def _prepare(self, examples):
        check_fitted(self, "model_")
        enc_cfg = self.model_.encoder.config
        return [single_text_input(self.vocab_.transform(ex["fact"]),
                                  enc_cfg.max_positions, GlobalPolicy("cls_only"))
                for ex in examples]

    # -- estimator surface ----------------------------------------------

    def fit(self, examples) -> "JudgmentModel":
        if not examples:
            raise ValueError("no training examples")
        for ex in examples:
            self._label_a(ex)  # rejects mode/annotation mismatches early
        self.vocab_ = self.vocab or CharVocab().fit([ex["fact"] for ex in examples])
        if self.mode == "criminal":
            n_a = self.n_label_a or 1 + max(max(ex["charges"]) for ex in examples)
        else:
            n_a = self.n_label_a or 1 + max(ex["cause"] for ex in examples)
        n_laws = self.n_laws or 1 + max(max(ex["laws"]) for ex in examples)
        self.n_label_a_, self.n_laws_ = n_a, n_laws

        enc_cfg = self.encoder or EncoderConfig(
            n_layers=1, n_heads=2, hidden_dim=64, ffn_dim=128,
            vocab_size=len(self.vocab_), max_positions=160, window=8)
        H = enc_cfg.hidden_dim
        heads = {"a_w": (H, n_a), "a_b": (n_a,),
                 "law_w": (H, n_laws), "law_b": (n_laws,)}
        if self.mode == "criminal":
            heads.update({"pen_w": (H, 1), "pen_b": (1,)})
        self.model_ = HeadedModel(enc_cfg, heads, seed=self.seed)

        inputs = self._prepare(examples)
        n = len(examples)

        def example_loss(ex, enc_in):
            cls = cls_vector(self.model_, enc_in, enc_cfg.window, enc_cfg.dilation)
            h = self.model_.heads
            a_logits = T.matmul(cls, h["a_w"]) + h["a_b"]
            law_logits = T.matmul(cls, h["law_w"]) + h["law_b"]
            law_target = np.zeros((1, self.n_laws_), dtype=np.float64)
            law_target[0, sorted(ex["laws"])] = 1.0
            loss = T.cross_entropy(law_logits, law_target)
            if self.mode == "criminal":
                a_target = np.zeros((1, self.n_label_a_), dtype=np.float64)
                a_target[0, sorted(ex["charges"])] = 1.0
                loss = loss + T.cross_entropy(a_logits, a_target)
                pen = T.matmul(cls, h["pen_w"]) + h["pen_b"]
                loss = loss + mse(pen, [[np.log1p(ex["penalty_months"])]])
            else:
                loss = loss + T.cross_entropy(a_logits, np.asarray([ex["cause"]]))
            return loss

        def closure(step):
            total = 0.0
            for ex, enc_in in zip(examples, inputs):
                loss = T.mul(example_loss(ex, enc_in), 1.0 / n)
                loss.backward()
                total += loss.item() * n
            return total / n

        self.history_ = fit_adam(self.model_, closure, self.steps, self.lr)
        return self

    def decision_scores(self, examples) -> list[dict]:
        """Raw head outputs per example (logits and penalty in log space)."""
        inputs = self._prepare(examples)
        enc_cfg = self.model_.encoder.config
        out = []
        with T.no_grad():
            for enc_in in inputs:
                cls = cls_vector(self.model_, enc_in, enc_cfg.window, enc_cfg.dilation)
                h = self.model_.heads
                row = {
                    "a_logits": T.matmul(cls, h["a_w"]).data[0] + h["a_b"].data,
                    "law_logits": T.matmul(cls, h["law_w"]).data[0] + h["law_b"].data,
                }
                if self.mode == "criminal":
                    row["penalty_log"] = float(
                        (T.matmul(cls, h["pen_w"]).data + h["pen_b"].data)[0, 0])
                out.append(row)
        return out

    def predict(self, examples) -> list[dict]:
        rows = []
        for scores in self.decision_scores(examples):
            laws = decode_label_set(scores["law_logits"], self.threshold)
            if self.mode == "criminal":
                months = float(np.clip(np.expm1(scores["penalty_log"]), 0.0, PENALTY_CAP))
                rows.append({"charges": decode_label_set(scores["a_logits"], self.threshold),
                             "laws": laws, "penalty_months": months})
            else:
                rows.append({"cause": int(scores["a_logits"].argmax()), "laws": laws})
        return rows

    def evaluate(self, examples) -> dict:
        """Mic@c/Mac@c, Mic@l/Mac@l (and Dis@t for criminal mode)."""
        preds = self.predict(examples)
        if self.mode == "criminal":
            mic_c, mac_c = micro_macro_f1([p["charges"] for p in preds],
                                          [set(ex["charges"]) for ex in examples],
                                          self.n_label_a_)
        else:
            mic_c, mac_c = micro_macro_f1([{p["cause"]} for p in preds],
                                          [{ex["cause"]} for ex in examples],
                                          self.n_label_a_)
        mic_l, mac_l = micro_macro_f1([p["laws"] for p in preds],
                                      [set(ex["laws"]) for ex in examples],
                                      self.n_laws_)
        out = {"Mic@c": mic_c, "Mac@c": mac_c, "Mic@l": mic_l, "Mac@l": mac_l}
        if self.mode == "criminal":
            out["Dis@t"] = log_distance([p["penalty_months"] for p in preds],
                                        [ex["penalty_months"] for ex in examples])
        return out
