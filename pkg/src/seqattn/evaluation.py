"""Ranking and classification metrics: accuracy, MAP, P@R, oracle, tf-idf.

Average precision divides by the TOTAL number of gold terms, including
those outside the candidate set.  Uncovered gold terms are unreachable by
any ranking over the candidates and contribute 0, which is exactly why the
oracle's mean AP equals mean per-document coverage instead of 1.

All ties break by ascending candidate index, so every metric here is a
deterministic function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import tokenize


@dataclass
class RankedPrediction:
    """Candidate indices ordered by descending score, ties by ascending index."""

    doc_id: str
    order: list
    scores: np.ndarray


@dataclass
class RelevanceJudgment:
    """A document's full gold term set and the subset reachable via candidates."""

    doc_id: str
    gold_terms: list
    covered: frozenset

    @property
    def n_gold(self):
        return len(self.gold_terms)


def build_judgment(doc_id, gold_terms, candidates):
    gold = sorted(set(gold_terms))
    covered = frozenset(candidates.index_of(t) for t in gold if t in candidates)
    return RelevanceJudgment(doc_id, gold, covered)


def predict_ranking(scores, doc_id=""):
    """Sort candidate indices by descending score with index tie-break."""
    scores = np.asarray(scores, dtype=np.float64)
    order = sorted(range(scores.shape[0]), key=lambda i: (-scores[i], i))
    return RankedPrediction(doc_id, order, scores)


def accuracy(predictions, gold):
    """Fraction of positions where prediction equals gold."""
    predictions = list(predictions)
    gold = list(gold)
    if len(predictions) != len(gold):
        raise ValueError(f"{len(predictions)} predictions vs {len(gold)} gold labels")
    if not predictions:
        raise ValueError("accuracy of an empty prediction list")
    return sum(p == g for p, g in zip(predictions, gold)) / len(predictions)


def average_precision(ranking, judgment):
    """Precision accumulated at each covered hit, divided by the total gold count."""
    n = judgment.n_gold
    if n == 0:
        raise ValueError(f"document {judgment.doc_id!r} has no gold terms")
    hits = 0
    total = 0.0
    for rank, index in enumerate(ranking.order, start=1):
        if index in judgment.covered:
            hits += 1
            total += hits / rank
            if hits == len(judgment.covered):
                break
    return total / n


def precision_at_r(ranking, judgment):
    """Precision among the top R ranks, R being the document's gold count."""
    r = judgment.n_gold
    if r == 0:
        raise ValueError(f"document {judgment.doc_id!r} has no gold terms")
    top = ranking.order[:r]
    return sum(index in judgment.covered for index in top) / r


def mean_average_precision(rankings, judgments):
    """Arithmetic mean of per-document AP, aligned by doc_id."""
    rankings = list(rankings)
    if not rankings:
        raise ValueError("MAP over an empty document set")
    by_id = {j.doc_id: j for j in judgments}
    scores = []
    for ranking in rankings:
        if ranking.doc_id not in by_id:
            raise ValueError(f"no relevance judgment for document {ranking.doc_id!r}")
        scores.append(average_precision(ranking, by_id[ranking.doc_id]))
    return float(np.mean(scores))


def oracle_ranking(judgment, num_candidates):
    """Covered gold first (ascending index), then the rest: the best any ranking can do."""
    covered = sorted(judgment.covered)
    rest = [i for i in range(num_candidates) if i not in judgment.covered]
    order = covered + rest
    scores = np.zeros(num_candidates)
    scores[covered] = 1.0
    return RankedPrediction(judgment.doc_id, order, scores)


# ---------------------------------------------------------------------------
# tf-idf sorting baseline


@dataclass
class CorpusStatistics:
    """Training-set document frequencies for the candidate terms."""

    num_docs: int
    doc_freq: dict


def count_term(doc_tokens, term_tokens):
    """Occurrences of a (possibly multi-token) term in a token sequence."""
    k = len(term_tokens)
    if k == 0 or k > len(doc_tokens):
        return 0
    return sum(doc_tokens[i:i + k] == term_tokens
               for i in range(len(doc_tokens) - k + 1))


def document_frequencies(token_docs, candidates):
    """Count, per candidate term, the documents containing its tokenization."""
    term_tokens = {t: tokenize(t) for t in candidates.terms}
    doc_freq = {t: 0 for t in candidates.terms}
    num_docs = 0
    for tokens in token_docs:
        num_docs += 1
        for term, toks in term_tokens.items():
            if count_term(tokens, toks):
                doc_freq[term] += 1
    return CorpusStatistics(num_docs, doc_freq)


def tfidf_rank(doc_tokens, candidates, stats, doc_id=""):
    """Rank candidates by tf * ln(N / (1 + df)); absent terms score 0."""
    doc_tokens = list(doc_tokens)
    scores = np.zeros(len(candidates))
    for i, term in enumerate(candidates.terms):
        tf = count_term(doc_tokens, tokenize(term))
        if tf:
            scores[i] = tf * math.log(stats.num_docs / (1 + stats.doc_freq.get(term, 0)))
    return predict_ranking(scores, doc_id)


# ---------------------------------------------------------------------------
# report assembly (the JSON emitted by evaluation commands)


def keyterm_report(rankings, judgments):
    by_id = {j.doc_id: j for j in judgments}
    per_doc = []
    for ranking in rankings:
        j = by_id[ranking.doc_id]
        per_doc.append({
            "doc_id": ranking.doc_id,
            "ap": average_precision(ranking, j),
            "p_at_r": precision_at_r(ranking, j),
            "n_gold": j.n_gold,
            "covered": len(j.covered),
        })
    return {
        "map": mean_average_precision(rankings, judgments),
        "p_at_r": float(np.mean([d["p_at_r"] for d in per_doc])),
        "accuracy": None,
        "num_docs": len(per_doc),
        "per_doc": per_doc,
    }


def accuracy_report(doc_ids, predictions, gold):
    per_doc = [{"doc_id": d, "predicted": p, "gold": g, "correct": p == g}
               for d, p, g in zip(doc_ids, predictions, gold)]
    return {
        "map": None,
        "p_at_r": None,
        "accuracy": accuracy(predictions, gold),
        "num_docs": len(per_doc),
        "per_doc": per_doc,
    }
