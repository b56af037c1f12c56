"""Reference-based n-gram metrics: corpus BLEU-4, ROUGE-L, CIDEr, exact-match METEOR."""

from __future__ import annotations

import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import Sentence
from .errors import ConfigError

logger = logging.getLogger(__name__)

NGram = tuple[str, ...]


def ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    """Multiset of the order-``n`` n-grams of a token sequence."""
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def ngram_profile(tokens: Sequence[str], max_n: int = 4) -> dict[int, Counter]:
    """n -> n-gram multiset for every order up to ``max_n``."""
    return {n: ngram_counts(tokens, n) for n in range(1, max_n + 1)}


def bleu4_corpus(
    pairs: Sequence[tuple[Sentence, Sequence[Sentence]]], max_n: int = 4
) -> float:
    """Corpus-level BLEU-4 on a 0..100 scale.

    Clipped n-gram precisions are pooled over the whole corpus before the
    geometric mean; the brevity penalty uses the closest reference length,
    ties broken toward the shorter reference.  Any pooled precision of zero
    gives a corpus score of zero (no smoothing).
    """
    if not pairs:
        raise ConfigError("bleu4_corpus needs at least one candidate")
    matched = [0] * max_n
    total = [0] * max_n
    candidate_len = 0
    effective_ref_len = 0
    for candidate, references in pairs:
        if not references:
            raise ConfigError("every candidate needs at least one reference")
        tokens = candidate.tokens
        candidate_len += len(tokens)
        effective_ref_len += min(
            (abs(len(r) - len(tokens)), len(r)) for r in references
        )[1]
        for n in range(1, max_n + 1):
            counts = ngram_counts(tokens, n)
            if not counts:
                continue
            cap: dict[NGram, int] = {}
            for ref in references:
                for gram, c in ngram_counts(ref.tokens, n).items():
                    if c > cap.get(gram, 0):
                        cap[gram] = c
            matched[n - 1] += sum(min(c, cap.get(g, 0)) for g, c in counts.items())
            total[n - 1] += sum(counts.values())
    if min(total) == 0 or min(matched) == 0:
        return 0.0
    log_precision = math.fsum(math.log(m / t) for m, t in zip(matched, total)) / max_n
    brevity = math.exp(min(0.0, 1.0 - effective_ref_len / candidate_len))
    return 100.0 * math.exp(log_precision) * brevity


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: Sentence, references: Sequence[Sentence], beta: float = 1.2) -> float:
    """LCS F-measure of one candidate, max over references, on a 0..100 scale."""
    if not references:
        raise ConfigError("rouge_l needs at least one reference")
    best = 0.0
    for ref in references:
        lcs = _lcs_length(candidate.tokens, ref.tokens)
        if lcs == 0:
            continue
        precision = lcs / len(candidate.tokens)
        recall = lcs / len(ref.tokens)
        f = (1 + beta**2) * precision * recall / (recall + beta**2 * precision)
        best = max(best, f)
    return 100.0 * best


def rouge_l_corpus(
    pairs: Sequence[tuple[Sentence, Sequence[Sentence]]], beta: float = 1.2
) -> float:
    if not pairs:
        raise ConfigError("rouge_l_corpus needs at least one candidate")
    return math.fsum(rouge_l(c, refs, beta) for c, refs in pairs) / len(pairs)


@dataclass(frozen=True)
class IdfTable:
    """Inverse document frequencies of reference n-grams, one document per image."""

    doc_count: int
    idf: dict[NGram, float]

    def value(self, gram: NGram) -> float:
        # unseen grams count as df=1, mirroring the usual consensus-scoring setup
        got = self.idf.get(gram)
        return math.log(self.doc_count) if got is None else got


def build_idf(reference_corpus: Iterable[Sequence[Sentence]], max_n: int = 4) -> IdfTable:
    """Document-frequency table over per-image reference sets."""
    df: Counter = Counter()
    doc_count = 0
    for references in reference_corpus:
        doc_count += 1
        grams: set[NGram] = set()
        for ref in references:
            for n in range(1, max_n + 1):
                grams.update(ngram_counts(ref.tokens, n))
        df.update(grams)
    if doc_count == 0:
        raise ConfigError("IDF corpus is empty")
    if doc_count == 1:
        logger.warning(
            "IDF corpus has a single image: every idf is 0 and consensus scores degenerate to 0"
        )
    idf = {gram: math.log(doc_count / seen) for gram, seen in df.items()}
    return IdfTable(doc_count=doc_count, idf=idf)


def cider(
    candidate: Sentence,
    references: Sequence[Sentence],
    idf_table: IdfTable,
    max_n: int = 4,
) -> float:
    """Consensus TF-IDF similarity for one image, on a 0..100 scale.

    For every order the candidate's TF-IDF n-gram vector is compared to each
    reference by cosine, averaged over references, then averaged over orders.
    An order where either side has a zero-norm vector contributes 0.
    """
    if not references:
        raise ConfigError("cider needs at least one reference")
    per_order = []
    for n in range(1, max_n + 1):
        cand_vec = {
            g: c * idf_table.value(g) for g, c in ngram_counts(candidate.tokens, n).items()
        }
        cand_norm = math.sqrt(math.fsum(x * x for x in cand_vec.values()))
        acc = 0.0
        for ref in references:
            ref_vec = {
                g: c * idf_table.value(g) for g, c in ngram_counts(ref.tokens, n).items()
            }
            ref_norm = math.sqrt(math.fsum(x * x for x in ref_vec.values()))
            if cand_norm > 0 and ref_norm > 0:
                dot = math.fsum(
                    w * ref_vec[g] for g, w in cand_vec.items() if g in ref_vec
                )
                acc += dot / (cand_norm * ref_norm)
        per_order.append(acc / len(references))
    return 100.0 * math.fsum(per_order) / max_n


def cider_corpus(
    pairs: Sequence[tuple[Sentence, Sequence[Sentence]]],
    idf_table: IdfTable,
    max_n: int = 4,
) -> float:
    if not pairs:
        raise ConfigError("cider_corpus needs at least one candidate")
    return math.fsum(cider(c, refs, idf_table, max_n) for c, refs in pairs) / len(pairs)


def _min_chunks_alignment(cand: Sequence[str], ref: Sequence[str]) -> tuple[int, int]:
    """(max matches, min chunks) over exact-match unigram alignments.

    Matches are maximal by construction (per-word clipped counts); among the
    maximal alignments a branch-and-bound search minimizes chunks.  Two
    matched pairs continue one chunk when their candidate positions are
    consecutive and their reference positions are adjacent in either
    direction.
    """
    cand_counts = Counter(cand)
    ref_counts = Counter(ref)
    need = {w: min(cand_counts[w], ref_counts[w]) for w in cand_counts if w in ref_counts}
    total = sum(need.values())
    if total == 0:
        return 0, 0

    ref_pos: dict[str, list[int]] = defaultdict(list)
    for j, w in enumerate(ref):
        if w in need:
            ref_pos[w].append(j)
    length = len(cand)
    suffix: list[Counter] = [Counter() for _ in range(length + 1)]
    for i in range(length - 1, -1, -1):
        suffix[i] = suffix[i + 1].copy()
        suffix[i][cand[i]] += 1

    best = math.inf
    taken: Counter = Counter()
    used = [False] * len(ref)

    def dfs(i: int, last_i: int, last_j: int, chunks: int, remaining: int) -> None:
        nonlocal best
        if chunks >= best:
            return
        if remaining == 0:
            best = chunks
            return
        if i >= length:
            return
        w = cand[i]
        if w in need and taken[w] < need[w]:
            # chunk-continuing positions first: tight upper bounds prune early
            positions = sorted(
                ref_pos[w],
                key=lambda j: (not (last_i == i - 1 and abs(j - last_j) == 1), j),
            )
            for j in positions:
                if used[j]:
                    continue
                continues = last_i == i - 1 and abs(j - last_j) == 1
                used[j] = True
                taken[w] += 1
                dfs(i + 1, i, j, chunks if continues else chunks + 1, remaining - 1)
                used[j] = False
                taken[w] -= 1
        if w not in need or taken[w] + suffix[i + 1][w] >= need[w]:
            dfs(i + 1, last_i, last_j, chunks, remaining)

    dfs(0, -2, -2, 0, total)
    return total, int(best)


def meteor_exact(
    candidate: Sentence,
    references: Sequence[Sentence],
    alpha: float = 0.9,
    beta: float = 3.0,
    gamma: float = 0.5,
) -> float:
    """Exact-match unigram METEOR, max over references, on a 0..100 scale.

    No stemming, synonym or paraphrase stages: alignment is on surface
    tokens only, which keeps the metric language-resource-free.
    """
    if not references:
        raise ConfigError("meteor_exact needs at least one reference")
    best = 0.0
    for ref in references:
        matches, chunks = _min_chunks_alignment(candidate.tokens, ref.tokens)
        if matches == 0:
            continue
        precision = matches / len(candidate.tokens)
        recall = matches / len(ref.tokens)
        f_mean = precision * recall / (alpha * precision + (1 - alpha) * recall)
        penalty = gamma * (chunks / matches) ** beta
        best = max(best, f_mean * (1.0 - penalty))
    return 100.0 * best


def meteor_exact_corpus(
    pairs: Sequence[tuple[Sentence, Sequence[Sentence]]],
    alpha: float = 0.9,
    beta: float = 3.0,
    gamma: float = 0.5,
) -> float:
    if not pairs:
        raise ConfigError("meteor_exact_corpus needs at least one candidate")
    return math.fsum(meteor_exact(c, refs, alpha, beta, gamma) for c, refs in pairs) / len(pairs)
