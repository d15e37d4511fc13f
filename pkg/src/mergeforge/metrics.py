"""Summarization metrics: BLEU-4, chrF++, ROUGE-L.

Sentence-level scores; corpus aggregates are arithmetic means over pairs.
BLEU and ROUGE-L live in [0, 1], chrF++ in [0, 100].

Conventions (documented, oracle-tested):
  * BLEU smoothing: add-one on numerator and denominator for orders >= 2,
    applied only when the raw match count is zero.
  * chrF++: character n-grams 1..6 on whitespace-stripped text plus word
    n-grams 1..2, beta = 2; orders empty on both sides are skipped.
  * Tokenization: NFC normalization then whitespace split; lowercasing is
    off by default because code summaries are case-sensitive.
"""

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from mergeforge.errors import EmptyReference

CHRF_BETA = 2.0
METRIC_NAMES = ("bleu4", "chrfpp", "rougel")


def tokenize(text: str, lowercase: bool = False) -> list[str]:
    text = unicodedata.normalize("NFC", text)
    if lowercase:
        text = text.lower()
    return text.split()


def _ngrams(tokens: Sequence, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu4(hyp: Sequence[str], ref: Sequence[str]) -> float:
    """Smoothed sentence BLEU with n-gram orders 1..4.

    Empty hypothesis scores 0; empty reference is an error.
    """
    if not ref:
        raise EmptyReference("bleu4: empty reference")
    if not hyp:
        return 0.0
    log_sum = 0.0
    for n in range(1, 5):
        hyp_counts = _ngrams(hyp, n)
        ref_counts = _ngrams(ref, n)
        matches = sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
        total = max(len(hyp) - n + 1, 0)
        if n == 1:
            if matches == 0:
                return 0.0
            precision = matches / total
        elif matches == 0:
            precision = (matches + 1) / (total + 1)
        else:
            precision = matches / total
        log_sum += math.log(precision)
    brevity = math.exp(min(0.0, 1.0 - len(ref) / len(hyp)))
    return brevity * math.exp(log_sum / 4.0)


def _fbeta(matches: int, hyp_total: int, ref_total: int, beta: float) -> float:
    precision = matches / hyp_total if hyp_total else 0.0
    recall = matches / ref_total if ref_total else 0.0
    if precision == 0.0 and recall == 0.0:
        return 0.0
    b2 = beta * beta
    return (1 + b2) * precision * recall / (b2 * precision + recall)


def chrf_pp(hyp: str, ref: str) -> float:
    """chrF++ in [0, 100]: mean F2 over char orders 1..6 and word orders 1..2."""
    if not ref:
        raise EmptyReference("chrf_pp: empty reference")
    hyp_chars = list("".join(unicodedata.normalize("NFC", hyp).split()))
    ref_chars = list("".join(unicodedata.normalize("NFC", ref).split()))
    hyp_words = tokenize(hyp)
    ref_words = tokenize(ref)

    scores = []
    for seq_h, seq_r, orders in (
        (hyp_chars, ref_chars, range(1, 7)),
        (hyp_words, ref_words, range(1, 3)),
    ):
        for n in orders:
            h_counts = _ngrams(seq_h, n)
            r_counts = _ngrams(seq_r, n)
            h_total = sum(h_counts.values())
            r_total = sum(r_counts.values())
            if h_total == 0 and r_total == 0:
                continue  # order empty on both sides: skipped
            matches = sum(min(c, r_counts[g]) for g, c in h_counts.items())
            scores.append(_fbeta(matches, h_total, r_total, CHRF_BETA))
    if not scores:
        return 0.0
    return 100.0 * sum(scores) / len(scores)


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0]
        for j, y in enumerate(b, 1):
            if x == y:
                curr.append(prev[j - 1] + 1)
            else:
                curr.append(max(prev[j], curr[j - 1]))
        prev = curr
    return prev[-1]


def rouge_l(hyp: Sequence[str], ref: Sequence[str]) -> float:
    """LCS-based F1; 0 when nothing is shared or the hypothesis is empty."""
    if not ref:
        raise EmptyReference("rouge_l: empty reference")
    if not hyp:
        return 0.0
    lcs = _lcs_length(hyp, ref)
    if lcs == 0:
        return 0.0
    precision = lcs / len(hyp)
    recall = lcs / len(ref)
    return 2.0 * precision * recall / (precision + recall)


@dataclass
class ScoredCorpus:
    per_pair: dict[str, list[float]]
    aggregate: dict[str, float]
    pair_count: int


def score_corpus(
    pairs: Sequence[tuple[str, str]], metrics: Sequence[str] = METRIC_NAMES
) -> ScoredCorpus:
    """Score (hypothesis, reference) string pairs; aggregate = mean."""
    unknown = set(metrics) - set(METRIC_NAMES)
    if unknown:
        raise ValueError(f"unknown metrics: {sorted(unknown)}")
    per_pair: dict[str, list[float]] = {m: [] for m in metrics}
    for hyp, ref in pairs:
        if "bleu4" in per_pair:
            per_pair["bleu4"].append(bleu4(tokenize(hyp), tokenize(ref)))
        if "chrfpp" in per_pair:
            per_pair["chrfpp"].append(chrf_pp(hyp, ref))
        if "rougel" in per_pair:
            per_pair["rougel"].append(rouge_l(tokenize(hyp), tokenize(ref)))
    aggregate = {
        m: (sum(vals) / len(vals) if vals else 0.0) for m, vals in per_pair.items()
    }
    return ScoredCorpus(per_pair=per_pair, aggregate=aggregate, pair_count=len(pairs))
