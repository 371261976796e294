"""Bar-exam multiple choice: each (question, choice) pair is scored by a
linear layer on CLS; the question span carries global attention and
position-type id 0, the choice span id 1. Multi-answer decoding uses the
sign of the raw score; single-answer evaluation uses the argmax choice."""

from __future__ import annotations

import numpy as np

from .. import tensor as T
from ..base import ParamMixin, check_fitted
from ..encoder import EncoderConfig
from ..metrics import mcq_accuracy
from ..vocab import CharVocab
from .inputs import EncodedInput, GlobalPolicy, pair_input
from .model import HeadedModel, fit_adam

LETTERS = "ABCD"


class MultipleChoiceModel(ParamMixin):
    """fit/predict over {question, choices, answer_set} rows."""

    def __init__(self, vocab: CharVocab | None = None,
                 encoder: EncoderConfig | None = None, steps: int = 200,
                 lr: float = 2e-3, seed: int = 0, question_limit: int = 64,
                 choice_limit: int = 64):
        self.vocab = vocab
        self.encoder = encoder
        self.steps = steps
        self.lr = lr
        self.seed = seed
        self.question_limit = question_limit
        self.choice_limit = choice_limit

    def _assemble(self, ex) -> list[EncodedInput]:
        if len(ex["choices"]) < 2:
            raise ValueError("question needs at least 2 choices")
        if "answer_set" in ex and not ex["answer_set"]:
            raise ValueError("empty answer_set")
        q_ids = self.vocab_.transform(ex["question"])
        return [pair_input(q_ids, self.vocab_.transform(choice),
                           self.question_limit, self.choice_limit,
                           GlobalPolicy("whole_question"))
                for choice in ex["choices"]]

    def _score(self, enc_in: EncodedInput) -> T.Tensor:
        cfg = self.model_.encoder.config
        hidden = self.model_.encoder.encode(enc_in.ids[None], enc_in.type_ids[None],
                                            enc_in.pattern(cfg.window, cfg.dilation))
        return T.matmul(hidden[:, 0, :], self.model_.heads["w"]) + self.model_.heads["b"]

    def fit(self, examples) -> "MultipleChoiceModel":
        if not examples:
            raise ValueError("no training examples")
        texts = [ex["question"] for ex in examples]
        for ex in examples:
            texts.extend(ex["choices"])
        self.vocab_ = self.vocab or CharVocab().fit(texts)
        # question-choice matching needs an interaction step, hence 2 layers
        enc_cfg = self.encoder or EncoderConfig(
            n_layers=2, n_heads=2, hidden_dim=64, ffn_dim=128,
            vocab_size=len(self.vocab_), max_positions=160, window=8)
        H = enc_cfg.hidden_dim
        self.model_ = HeadedModel(enc_cfg, {"w": (H, 1), "b": (1,)}, seed=self.seed)

        prepared = [(self._assemble(ex),
                     [LETTERS[i] in ex["answer_set"] for i in range(len(ex["choices"]))])
                    for ex in examples]
        n_pairs = sum(len(inputs) for inputs, _ in prepared)

        def closure(step):
            total = 0.0
            for inputs, labels in prepared:
                for enc_in, label in zip(inputs, labels):
                    target = np.asarray([[float(label)]])
                    loss = T.mul(T.cross_entropy(self._score(enc_in), target),
                                 1.0 / n_pairs)
                    loss.backward()
                    total += loss.item() * n_pairs
            return total / n_pairs

        self.history_ = fit_adam(self.model_, closure, self.steps, self.lr)
        return self

    def scores(self, examples) -> list[np.ndarray]:
        check_fitted(self, "model_")
        out = []
        with T.no_grad():
            for ex in examples:
                out.append(np.asarray([float(self._score(enc_in).data[0, 0])
                                       for enc_in in self._assemble(ex)]))
        return out

    def predict(self, examples) -> list[dict]:
        """{"answer_set": letters with positive score, "argmax": best letter}."""
        rows = []
        for score in self.scores(examples):
            chosen = {LETTERS[i] for i in np.flatnonzero(score > 0)}
            rows.append({"answer_set": sorted(chosen),
                         "argmax": LETTERS[int(score.argmax())]})
        return rows

    def evaluate(self, examples) -> dict:
        preds = self.predict(examples)
        single, all_acc = mcq_accuracy(
            [set(p["answer_set"]) for p in preds],
            [set(ex["answer_set"]) for ex in examples],
            argmax_preds=[p["argmax"] for p in preds])
        return {"single": single if single is not None else float("nan"),
                "all": all_acc}
