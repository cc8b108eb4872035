"""Token vocabulary with frequency statistics and sampling distributions.

Ids are dense and assigned by descending corpus frequency with lexicographic
tie-breaks, which keeps every serialized artifact byte-stable regardless of
sentence order or sharding.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .corpus import Sentence
from .errors import ParseError, ValidationError


class Vocabulary:
    """Dense token->id map with per-token counts.

    ``total_tokens`` is the pre-filter corpus total, i.e. it also counts
    occurrences of tokens later dropped by ``min_count``.
    """

    def __init__(self, tokens: list[str], counts: Iterable[int], total_tokens: int):
        self.tokens = list(tokens)
        self.counts = np.asarray(list(counts), dtype=np.int64)
        self.total_tokens = int(total_tokens)
        self.index = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise ValidationError("vocabulary tokens must be unique")

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def id(self, token: str) -> int:
        return self.index[token]

    def count(self, token: str) -> int:
        return int(self.counts[self.index[token]])

    def items(self):
        """(token, id, count) triples in id order."""
        for i, tok in enumerate(self.tokens):
            yield tok, i, int(self.counts[i])


def build_vocab(sentences: Iterable[Sentence], min_count: int = 5) -> Vocabulary:
    """Count tokens over a sentence stream and keep those seen >= min_count times."""
    if min_count < 1:
        raise ValidationError("min_count must be >= 1")
    freq: Counter[str] = Counter()
    total = 0
    for sentence in sentences:
        freq.update(sentence)
        total += len(sentence)
    kept = sorted(
        ((tok, n) for tok, n in freq.items() if n >= min_count),
        key=lambda item: (-item[1], item[0]),
    )
    return Vocabulary([t for t, _ in kept], [n for _, n in kept], total)


def keep_probability(vocab: Vocabulary, token: str, t: float = 1e-3) -> float:
    """Subsampling keep-probability for a token.

    With z the token's corpus share, returns min(1, (sqrt(z/t) + 1) * (t/z)):
    frequent tokens are discarded often, rare ones always kept.
    """
    if t <= 0:
        raise ValidationError("sample threshold t must be > 0")
    if token not in vocab:
        raise ValidationError(f"token not in vocabulary: {token!r}")
    z = vocab.count(token) / vocab.total_tokens
    return min(1.0, (math.sqrt(z / t) + 1.0) * (t / z))


def keep_probability_table(vocab: Vocabulary, t: float = 1e-3) -> np.ndarray:
    """Vectorized keep_probability over all vocabulary ids."""
    if t <= 0:
        raise ValidationError("sample threshold t must be > 0")
    z = vocab.counts.astype(np.float64) / vocab.total_tokens
    return np.minimum(1.0, (np.sqrt(z / t) + 1.0) * (t / z))


@dataclass
class SamplingDistribution:
    """Normalized noise distribution: weight(w) proportional to count(w)**power."""

    weights: np.ndarray
    power: float


def build_negative_table(vocab: Vocabulary, power: float = 0.75) -> SamplingDistribution:
    """Unigram**power distribution used to draw negative samples."""
    if len(vocab) == 0:
        raise ValidationError("cannot build a sampling distribution from an empty vocabulary")
    weights = vocab.counts.astype(np.float64) ** power
    weights /= weights.sum()
    return SamplingDistribution(weights=weights, power=power)


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    """Write ``#total_tokens=N`` then one ``token<TAB>count`` line per id."""
    lines = [f"#total_tokens={vocab.total_tokens}"]
    lines.extend(f"{tok}\t{count}" for tok, _, count in vocab.items())
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_vocabulary(path: str | Path) -> Vocabulary:
    path = Path(path)
    tokens: list[str] = []
    counts: list[int] = []
    total = None
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#total_tokens="):
                total = int(line.split("=", 1)[1])
                continue
            if "\t" not in line:
                raise ParseError(path, lineno, "expected token<TAB>count")
            tok, count = line.split("\t", 1)
            tokens.append(tok)
            counts.append(int(count))
    if total is None:
        raise ParseError(path, 1, "missing #total_tokens header")
    return Vocabulary(tokens, counts, total)
