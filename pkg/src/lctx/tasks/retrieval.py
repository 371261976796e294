"""Similar-case retrieval as binary relevance classification.

Input is [CLS] query [SEP] candidate [SEP], truncated to 509/3072 for the
long model and 100/409 for the 512-token dense baseline. The long model puts
global attention on CLS plus every query token; the dense baseline runs full
self-attention. Candidate pools rank by score, ties broken by candidate id.
"""

from __future__ import annotations

import numpy as np

from .. import tensor as T
from ..attention import AttentionPattern
from ..base import ParamMixin, check_fitted
from ..encoder import EncoderConfig
from ..metrics import RankedList, mean_average_precision, ndcg_at_k, precision_at_k
from ..vocab import CharVocab
from .inputs import (
    DENSE_CAND_LIMIT,
    DENSE_QUERY_LIMIT,
    LONG_CAND_LIMIT,
    LONG_QUERY_LIMIT,
    EncodedInput,
    GlobalPolicy,
    pair_input,
)
from .model import HeadedModel, fit_adam


def retrieval_input(query_ids, cand_ids, model_type: str = "long") -> EncodedInput:
    """Assemble the pair input under the model type's truncation limits."""
    if len(list(cand_ids)) == 0:
        raise ValueError("empty candidate")
    if model_type == "long":
        return pair_input(query_ids, cand_ids, LONG_QUERY_LIMIT, LONG_CAND_LIMIT,
                          GlobalPolicy("whole_query"))
    if model_type == "dense":
        enc = pair_input(query_ids, cand_ids, DENSE_QUERY_LIMIT, DENSE_CAND_LIMIT,
                         GlobalPolicy("whole_query"))
        # the truncating baseline is ordinary full self-attention
        enc.global_positions = ()
        return enc
    raise ValueError(f"unknown model_type {model_type!r}")


class RetrievalRanker(ParamMixin):
    """fit/predict_proba/rank over {query_id, candidate_id, query, candidate,
    relevant} rows."""

    def __init__(self, model_type: str = "long", vocab: CharVocab | None = None,
                 encoder: EncoderConfig | None = None, steps: int = 200,
                 lr: float = 2e-3, seed: int = 0):
        self.model_type = model_type
        self.vocab = vocab
        self.encoder = encoder
        self.steps = steps
        self.lr = lr
        self.seed = seed

    def _pattern(self, enc_in: EncodedInput) -> AttentionPattern:
        cfg = self.model_.encoder.config
        if self.model_type == "dense":
            return AttentionPattern(window=2 * (len(enc_in) - 1), global_positions=())
        return enc_in.pattern(cfg.window, cfg.dilation)

    def _prepare(self, examples) -> list[EncodedInput]:
        check_fitted(self, "model_")
        return [retrieval_input(self.vocab_.transform(ex["query"]),
                                self.vocab_.transform(ex["candidate"]),
                                self.model_type)
                for ex in examples]

    def _score(self, enc_in: EncodedInput) -> T.Tensor:
        hidden = self.model_.encoder.encode(enc_in.ids[None], enc_in.type_ids[None],
                                            self._pattern(enc_in))
        cls = hidden[:, 0, :]
        return T.matmul(cls, self.model_.heads["w"]) + self.model_.heads["b"]

    def fit(self, examples) -> "RetrievalRanker":
        if not examples:
            raise ValueError("no training examples")
        self.vocab_ = self.vocab or CharVocab().fit(
            [ex["query"] for ex in examples] + [ex["candidate"] for ex in examples])
        enc_cfg = self.encoder or EncoderConfig(
            n_layers=1, n_heads=2, hidden_dim=64, ffn_dim=128,
            vocab_size=len(self.vocab_),
            max_positions=512 if self.model_type == "dense" else 256, window=8)
        H = enc_cfg.hidden_dim
        self.model_ = HeadedModel(enc_cfg, {"w": (H, 1), "b": (1,)}, seed=self.seed)
        inputs = self._prepare(examples)
        n = len(examples)

        def closure(step):
            total = 0.0
            for ex, enc_in in zip(examples, inputs):
                target = np.asarray([[float(ex["relevant"])]])
                loss = T.mul(T.cross_entropy(self._score(enc_in), target), 1.0 / n)
                loss.backward()
                total += loss.item() * n
            return total / n

        self.history_ = fit_adam(self.model_, closure, self.steps, self.lr)
        return self

    def predict_proba(self, examples) -> np.ndarray:
        """Relevance probability in [0, 1] per example row."""
        inputs = self._prepare(examples)
        probs = []
        with T.no_grad():
            for enc_in in inputs:
                logit = float(self._score(enc_in).data[0, 0])
                probs.append(1.0 / (1.0 + np.exp(-logit)))
        return np.asarray(probs)

    def predict(self, examples) -> np.ndarray:
        return (self.predict_proba(examples) >= 0.5).astype(int)

    def rank(self, examples) -> list[RankedList]:
        """Per-query rankings: score descending, candidate id ascending on ties."""
        probs = self.predict_proba(examples)
        by_query: dict[str, list] = {}
        for ex, p in zip(examples, probs):
            by_query.setdefault(ex["query_id"], []).append((ex["candidate_id"], p, ex["relevant"]))
        ranked = []
        for qid in sorted(by_query):
            rows = sorted(by_query[qid], key=lambda r: (-r[1], r[0]))
            ranked.append(RankedList(
                query_id=qid,
                ranking=[cid for cid, _, _ in rows],
                judgments={cid: rel for cid, _, rel in rows}))
        return ranked

    def evaluate(self, examples, ks=(5, 10, 20, 30)) -> dict:
        ranked = self.rank(examples)
        out = {}
        for k in ks:
            out[f"P@{k}"] = float(np.mean([precision_at_k(r, k) for r in ranked]))
            out[f"NDCG@{k}"] = float(np.mean([ndcg_at_k(r, k) for r in ranked]))
        out["MAP"] = mean_average_precision(ranked)
        preds = self.predict(examples)
        out["accuracy"] = float(np.mean([p == ex["relevant"]
                                         for p, ex in zip(preds, examples)]))
        return out
