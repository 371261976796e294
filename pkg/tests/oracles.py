"""Brute-force metric oracles, written straight from the definitions (plain
loops, no shared code with the implementations). Used by the metric tests and
the acceptance suite."""

import itertools
import math


def bf_micro_macro(preds, golds, n_labels):
    tp = fp = fn = 0
    per_label = []
    for lab in range(n_labels):
        ltp = lfp = lfn = 0
        for p, g in zip(preds, golds):
            if lab in p and lab in g:
                ltp += 1
            if lab in p and lab not in g:
                lfp += 1
            if lab not in p and lab in g:
                lfn += 1
        prec = ltp / (ltp + lfp) if ltp + lfp else 0.0
        rec = ltp / (ltp + lfn) if ltp + lfn else 0.0
        per_label.append(2 * prec * rec / (prec + rec) if prec + rec else 0.0)
        tp, fp, fn = tp + ltp, fp + lfp, fn + lfn
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    micro = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    return micro, sum(per_label) / n_labels


def bf_precision_at_k(ranking, judgments, k):
    hits = 0
    for cand in ranking[:k]:
        if judgments.get(cand, 0) > 0:
            hits += 1
    return hits / k


def bf_dcg(order, judgments, k):
    total = 0.0
    for rank, cand in enumerate(order[:k], start=1):
        total += judgments.get(cand, 0) / math.log2(rank + 1)
    return total


def bf_ndcg_at_k(ranking, judgments, k):
    # ideal DCG by exhaustive search over permutations of the judged set
    cands = list(judgments)
    best = 0.0
    for perm in itertools.permutations(cands):
        best = max(best, bf_dcg(list(perm), judgments, k))
    if best == 0.0:
        return 0.0
    return bf_dcg(ranking, judgments, k) / best


def bf_average_precision(ranking, judgments):
    n_rel = sum(1 for g in judgments.values() if g > 0)
    if n_rel == 0:
        return None
    total = 0.0
    for rank, cand in enumerate(ranking, start=1):
        if judgments.get(cand, 0) > 0:
            hits_so_far = sum(1 for c in ranking[:rank] if judgments.get(c, 0) > 0)
            total += hits_so_far / rank
    return total / n_rel


def bf_em_f1(pred, gold):
    em = 1 if list(pred) == list(gold) else 0
    if not pred and not gold:
        return 1, 1.0
    common = 0
    gold_pool = list(gold)
    for tok in pred:
        if tok in gold_pool:
            gold_pool.remove(tok)
            common += 1
    if not pred or not gold or common == 0:
        return em, 0.0
    p = common / len(pred)
    r = common / len(gold)
    return em, 2 * p * r / (p + r)
