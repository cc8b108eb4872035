"""Co-occurrence counting and simple log-likelihood relatedness.

Default counting is sentence-level with presence semantics: each sentence
contributes at most one count per token and per unordered token pair. A
positional window mode is available for experiments; there the counting unit
is a token position and pairs are position pairs within the window.

The relatedness score compares observed against expected co-occurrence:
raw = 2*(O*ln(O/E) - (O-E)), negated when O < E so under-associated pairs
rank below unrelated ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .corpus import Sentence
from .errors import ModelFormatError, ValidationError
from .results import (
    STATUS_ENTITY_UNMODELED,
    STATUS_OK,
    RankedProperties,
    sort_scored,
)
from .vocab import Vocabulary

SENTENCE = "sentence"
WINDOW = "window"


@dataclass
class CoocModel:
    """Pairwise co-occurrence counts with marginals.

    pair_counts keys are (a, b) with a <= b lexicographically; n is the
    number of counting units (sentences, or token positions in window mode).
    """

    mode: str
    window: int
    pair_counts: dict[tuple[str, str], int] = field(default_factory=dict)
    marginals: dict[str, int] = field(default_factory=dict)
    n: int = 0

    def pair(self, a: str, b: str) -> int:
        key = (a, b) if a <= b else (b, a)
        return self.pair_counts.get(key, 0)

    @property
    def mode_label(self) -> str:
        return SENTENCE if self.mode == SENTENCE else f"{WINDOW}:{self.window}"


def count_cooccurrences(
    sentences: Iterable[Sentence],
    vocab: Vocabulary,
    mode: str = SENTENCE,
    window: int = 5,
) -> CoocModel:
    """Count co-occurrences over a sentence stream; out-of-vocab tokens are skipped."""
    if mode not in (SENTENCE, WINDOW):
        raise ValidationError(f"unknown co-occurrence mode: {mode!r}")
    if mode == WINDOW and window < 1:
        raise ValidationError("window must be >= 1")
    model = CoocModel(mode=mode, window=window if mode == WINDOW else 0)
    pair_counts = model.pair_counts
    marginals = model.marginals
    for sentence in sentences:
        kept = [tok for tok in sentence if tok in vocab]
        if mode == SENTENCE:
            model.n += 1
            present = sorted(set(kept))
            for tok in present:
                marginals[tok] = marginals.get(tok, 0) + 1
            for i, a in enumerate(present):
                for b in present[i + 1 :]:
                    pair_counts[(a, b)] = pair_counts.get((a, b), 0) + 1
        else:
            model.n += len(kept)
            for tok in kept:
                marginals[tok] = marginals.get(tok, 0) + 1
            for i, a in enumerate(kept):
                for j in range(i + 1, min(i + window + 1, len(kept))):
                    b = kept[j]
                    key = (a, b) if a <= b else (b, a)
                    pair_counts[key] = pair_counts.get(key, 0) + 1
    return model


def simple_log_likelihood(model: CoocModel, w1: str, w2: str) -> float:
    """Signed simple log-likelihood association between two distinct tokens.

    Positive iff observed co-occurrence exceeds expectation, zero at O == E.
    The O=0 limit takes O*ln(O/E) as 0.
    """
    if w1 == w2:
        raise ValidationError("self-relatedness is undefined")
    m1 = model.marginals.get(w1, 0)
    m2 = model.marginals.get(w2, 0)
    if m1 == 0 or m2 == 0:
        raise ValidationError(f"zero marginal for {w1 if m1 == 0 else w2!r}")
    expected = m1 * m2 / model.n
    observed = model.pair(w1, w2)
    if observed == 0:
        raw = 2.0 * expected
    else:
        raw = 2.0 * (observed * math.log(observed / expected) - (observed - expected))
    return raw if observed >= expected else -raw


def rank_properties_relatedness(
    model: CoocModel, entity: str, adjectives: Iterable[str], top_k: int
) -> RankedProperties:
    """Rank candidate adjectives by relatedness to the entity token.

    Adjectives absent from the model are omitted (they cannot be scored);
    an entity with no marginal yields an empty ranking flagged
    entity_unmodeled, mirroring generic models that never saw the entity.
    """
    if entity not in model.marginals:
        return RankedProperties(
            entity=entity, items=[], model_tag="relatedness", status=STATUS_ENTITY_UNMODELED
        )
    scored = []
    for adjective in adjectives:
        # the entity token itself is unscorable (self-relatedness undefined)
        if adjective == entity or adjective not in model.marginals:
            continue
        scored.append((adjective, simple_log_likelihood(model, entity, adjective)))
    return RankedProperties(
        entity=entity,
        items=sort_scored(scored, top_k),
        model_tag="relatedness",
        status=STATUS_OK,
    )


def save_cooc(model: CoocModel, path: str | Path, metadata: dict | None = None) -> None:
    """Text serialization: header, sorted pair lines, then a marginals section."""
    lines = [f"#mode={model.mode_label}", f"#N={model.n}"]
    for key in sorted(metadata or {}):
        lines.append(f"#{key}={metadata[key]}")
    for (a, b), count in sorted(model.pair_counts.items()):
        lines.append(f"{a}\t{b}\t{count}")
    lines.append("#marginals")
    for tok, count in sorted(model.marginals.items()):
        lines.append(f"{tok}\t{count}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_cooc(path: str | Path) -> CoocModel:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("#mode="):
        raise ModelFormatError(f"{path}: not a co-occurrence model (expected '#mode=' header)")
    mode_label = lines[0].split("=", 1)[1]
    if mode_label == SENTENCE:
        mode, window = SENTENCE, 0
    elif mode_label.startswith(f"{WINDOW}:"):
        mode, window = WINDOW, int(mode_label.split(":", 1)[1])
    else:
        raise ModelFormatError(f"{path}: unknown mode {mode_label!r}")
    model = CoocModel(mode=mode, window=window)
    in_marginals = False
    for lineno, line in enumerate(lines[1:], 2):
        if not line:
            continue
        if line == "#marginals":
            in_marginals = True
            continue
        if line.startswith("#"):
            if line.startswith("#N="):
                model.n = int(line.split("=", 1)[1])
            continue
        parts = line.split("\t")
        if in_marginals:
            if len(parts) != 2:
                raise ModelFormatError(f"{path}:{lineno}: expected token<TAB>count")
            model.marginals[parts[0]] = int(parts[1])
        else:
            if len(parts) != 3:
                raise ModelFormatError(f"{path}:{lineno}: expected tokenA<TAB>tokenB<TAB>count")
            model.pair_counts[(parts[0], parts[1])] = int(parts[2])
    return model
