"""Judicial reading comprehension: span extraction with yes/no/unanswerable
answer types and supporting-sentence prediction.

Input is [CLS] question [SEP] sentence_1 ... sentence_S [SEP] with global
attention on the whole question. Span start/end heads score every position;
a 4-way answer-type head reads CLS; the support head reads each sentence's
first token. Non-span answers train the span heads onto the CLS position.
"""

from __future__ import annotations

import re

import numpy as np

from .. import tensor as T
from ..base import ParamMixin, check_fitted
from ..encoder import EncoderConfig
from ..metrics import em_f1
from ..vocab import CharVocab, char_tokens
from .inputs import EncodedInput, GlobalPolicy, pair_input
from .model import HeadedModel, fit_adam

ANSWER_TYPES = ("span", "yes", "no", "unanswerable")
_TYPE_TEXT = {"yes": "YES", "no": "NO", "unanswerable": ""}


def split_sentences(context) -> list[str]:
    """Contexts arrive as sentence lists; plain strings split after 。？！"""
    if isinstance(context, str):
        parts = [s for s in re.split("(?<=[。？！])", context) if s.strip()]
        return parts
    return list(context)


def _find_subsequence(haystack: list[int], needle: list[int]) -> int | None:
    if not needle or len(needle) > len(haystack):
        return None
    for i in range(len(haystack) - len(needle) + 1):
        if haystack[i:i + len(needle)] == needle:
            return i
    return None


class ReadingComprehensionModel(ParamMixin):
    """fit/predict over {question, context, answer, answer_type, support} rows."""

    def __init__(self, vocab: CharVocab | None = None,
                 encoder: EncoderConfig | None = None, steps: int = 200,
                 lr: float = 2e-3, seed: int = 0, max_span: int = 64,
                 question_limit: int = 64):
        self.vocab = vocab
        self.encoder = encoder
        self.steps = steps
        self.lr = lr
        self.seed = seed
        self.max_span = max_span
        self.question_limit = question_limit

    # -- input assembly --------------------------------------------------

    def _assemble(self, ex) -> tuple[EncodedInput, list[int]]:
        sentences = split_sentences(ex["context"])
        if not sentences:
            raise ValueError("context has no sentences")
        sent_ids = [self.vocab_.transform(s) for s in sentences]
        flat = [tok for ids in sent_ids for tok in ids]
        cand_limit = self.model_.encoder.config.max_positions - self.question_limit - 3
        enc_in = pair_input(self.vocab_.transform(ex["question"]), flat,
                            self.question_limit, cand_limit,
                            GlobalPolicy("whole_question"))
        starts, offset = [], enc_in.sections["second"].start
        pos = 0
        for ids in sent_ids:
            if pos < len(enc_in.sections["second"]):
                starts.append(offset + pos)
            pos += len(ids)
        return enc_in, starts

    def _span_target(self, ex, enc_in: EncodedInput) -> tuple[int, int]:
        if ex["answer_type"] != "span":
            return 0, 0  # CLS position, the non-span convention
        second = enc_in.sections["second"]
        context_ids = enc_in.ids[second.start:second.stop].tolist()
        answer_ids = self.vocab_.transform(ex["answer"])
        hit = _find_subsequence(context_ids, answer_ids)
        if hit is None:
            raise ValueError(f"span answer {ex['answer']!r} not found in context")
        return second.start + hit, second.start + hit + len(answer_ids) - 1

    def _forward(self, enc_in: EncodedInput, starts):
        cfg = self.model_.encoder.config
        hidden = self.model_.encoder.encode(enc_in.ids[None], enc_in.type_ids[None],
                                            enc_in.pattern(cfg.window, cfg.dilation))
        h = self.model_.heads
        L = len(enc_in)
        start_logits = T.reshape(T.matmul(hidden, h["start_w"]) + h["start_b"], 1, L)
        end_logits = T.reshape(T.matmul(hidden, h["end_w"]) + h["end_b"], 1, L)
        cls = hidden[:, 0, :]
        type_logits = T.matmul(cls, h["type_w"]) + h["type_b"]
        sent_rows = hidden[:, np.asarray(starts), :]
        support_logits = T.reshape(T.matmul(sent_rows, h["sup_w"]) + h["sup_b"],
                                   1, len(starts))
        return start_logits, end_logits, type_logits, support_logits

    # -- estimator surface ------------------------------------------------

    def fit(self, examples) -> "ReadingComprehensionModel":
        if not examples:
            raise ValueError("no training examples")
        texts = []
        for ex in examples:
            texts.append(ex["question"])
            texts.extend(split_sentences(ex["context"]))
            texts.append(ex["answer"])
        self.vocab_ = self.vocab or CharVocab().fit(texts)
        enc_cfg = self.encoder or EncoderConfig(
            n_layers=2, n_heads=2, hidden_dim=64, ffn_dim=128,
            vocab_size=len(self.vocab_), max_positions=160, window=8)
        H = enc_cfg.hidden_dim
        self.model_ = HeadedModel(enc_cfg, {
            "start_w": (H, 1), "start_b": (1,), "end_w": (H, 1), "end_b": (1,),
            "type_w": (H, 4), "type_b": (4,), "sup_w": (H, 1), "sup_b": (1,),
        }, seed=self.seed)

        prepared = []
        for ex in examples:
            enc_in, starts = self._assemble(ex)
            s_t, e_t = self._span_target(ex, enc_in)
            prepared.append((enc_in, starts, s_t, e_t,
                             ANSWER_TYPES.index(ex["answer_type"]),
                             np.asarray(ex["support"], dtype=np.float64)[None, :len(starts)]))
        n = len(prepared)

        def closure(step):
            total = 0.0
            for enc_in, starts, s_t, e_t, type_t, support_t in prepared:
                s_log, e_log, t_log, sup_log = self._forward(enc_in, starts)
                loss = (T.cross_entropy(s_log, np.asarray([s_t]))
                        + T.cross_entropy(e_log, np.asarray([e_t]))
                        + T.cross_entropy(t_log, np.asarray([type_t]))
                        + T.cross_entropy(sup_log, support_t))
                loss = T.mul(loss, 1.0 / n)
                loss.backward()
                total += loss.item() * n
            return total / n

        self.history_ = fit_adam(self.model_, closure, self.steps, self.lr)
        return self

    def _decode_span(self, enc_in, start_logits, end_logits) -> str:
        second = enc_in.sections["second"]
        s = start_logits[second.start:second.stop]
        e = end_logits[second.start:second.stop]
        best, best_pair = -np.inf, (0, 0)
        for i in range(len(s)):
            j_hi = min(len(e), i + self.max_span)
            for j in range(i, j_hi):
                if s[i] + e[j] > best:
                    best, best_pair = s[i] + e[j], (i, j)
        lo, hi = best_pair
        ids = enc_in.ids[second.start + lo: second.start + hi + 1]
        return self.vocab_.decode(ids)

    def predict(self, examples) -> list[dict]:
        """{"answer", "answer_type", "support"} per example; non-span types
        emit YES/NO/empty regardless of the span heads."""
        check_fitted(self, "model_")
        rows = []
        with T.no_grad():
            for ex in examples:
                enc_in, starts = self._assemble(ex)
                s_log, e_log, t_log, sup_log = self._forward(enc_in, starts)
                kind = ANSWER_TYPES[int(t_log.data[0].argmax())]
                if kind == "span":
                    answer = self._decode_span(enc_in, s_log.data[0], e_log.data[0])
                else:
                    answer = _TYPE_TEXT[kind]
                support = (1.0 / (1.0 + np.exp(-sup_log.data[0])) >= 0.5).astype(int)
                rows.append({"answer": answer, "answer_type": kind,
                             "support": support.tolist()})
        return rows

    def evaluate(self, examples) -> dict:
        preds = self.predict(examples)
        ems, f1s = [], []
        for p, ex in zip(preds, examples):
            em, f1 = em_f1(char_tokens(p["answer"]), char_tokens(ex["answer"]))
            ems.append(em)
            f1s.append(f1)
        return {"EM": float(np.mean(ems)), "F1": float(np.mean(f1s))}
