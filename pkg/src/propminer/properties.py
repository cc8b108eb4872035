"""Candidate property extraction and TF-IDF ranking over entity descriptions.

Adjective identification is a lexicon lookup: a token is a candidate
property iff its lowercased form appears in the supplied adjective list.
TF-IDF treats each entity as a document and its description tokens as terms,
with the smooth-idf + L2-normalized formulation pinned so scores are
reproducible: idf(t) = ln((1+N)/(1+df(t))) + 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import ENTITY_DESCRIPTION, Document, tokenize_text
from .errors import ValidationError
from .results import STATUS_OK, RankedProperties, sort_scored


class AdjectiveLexicon:
    """Case-insensitive adjective membership set."""

    def __init__(self, adjectives):
        self.adjectives = {a.lower() for a in adjectives}
        if not self.adjectives:
            raise ValidationError("adjective lexicon is empty")

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.adjectives

    def __len__(self) -> int:
        return len(self.adjectives)

    def sorted(self) -> list[str]:
        return sorted(self.adjectives)


@dataclass
class EntityProperties:
    entity: str
    properties: set[str]


def load_adjective_lexicon(path: str | Path) -> AdjectiveLexicon:
    """One adjective per line; ``#`` comment lines ignored; error if empty."""
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"adjective lexicon not found: {path}")
    adjectives = set()
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            word = line.strip()
            if not word or word.startswith("#"):
                continue
            adjectives.add(word.lower())
    if not adjectives:
        raise ValidationError(f"adjective lexicon is empty: {path}")
    return AdjectiveLexicon(adjectives)


def description_tokens(doc: Document) -> list[str]:
    """Lowercased tokens of a description, flattened across sentences."""
    return [tok for sent in tokenize_text(doc.text, lowercase=True) for tok in sent]


def extract_properties(doc: Document, lexicon: AdjectiveLexicon) -> EntityProperties:
    """Adjectives from the lexicon that occur in the entity's description.

    May legitimately be empty: very short descriptions often contain no
    listed adjective.
    """
    if doc.kind != ENTITY_DESCRIPTION:
        raise ValidationError("extract_properties expects an entity description")
    found = {tok for tok in description_tokens(doc) if tok in lexicon}
    return EntityProperties(entity=doc.entity, properties=found)


class TfIdfModel:
    """Dense entity x term matrix of L2-normalized tf-idf weights."""

    def __init__(self, entities: list[str], terms: list[str], matrix: np.ndarray):
        self.entities = entities
        self.terms = terms
        self.matrix = matrix
        self.entity_index = {e: i for i, e in enumerate(entities)}
        self.term_index = {t: i for i, t in enumerate(terms)}

    def score(self, entity: str, term: str) -> float:
        row = self.entity_index[entity]
        col = self.term_index.get(term)
        return 0.0 if col is None else float(self.matrix[row, col])


def build_tfidf(descriptions: list[Document]) -> TfIdfModel:
    """Build the tf-idf matrix over entity descriptions.

    tf is the raw in-description count, idf the smoothed log ratio, and each
    row is L2-normalized (all-zero rows are left as zeros).
    """
    if not descriptions:
        raise ValidationError("build_tfidf needs at least one description")
    token_lists = [description_tokens(doc) for doc in descriptions]
    terms = sorted({tok for toks in token_lists for tok in toks})
    term_index = {t: i for i, t in enumerate(terms)}
    n_docs = len(descriptions)
    tf = np.zeros((n_docs, len(terms)), dtype=np.float64)
    for row, toks in enumerate(token_lists):
        for tok in toks:
            tf[row, term_index[tok]] += 1.0
    df = (tf > 0).sum(axis=0)
    idf = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0
    matrix = tf * idf[None, :]
    norms = np.linalg.norm(matrix, axis=1)
    nonzero = norms > 0
    matrix[nonzero] /= norms[nonzero, None]
    return TfIdfModel([doc.entity for doc in descriptions], terms, matrix)


def rank_properties_tfidf(
    model: TfIdfModel, props: EntityProperties, top_k: int
) -> RankedProperties:
    """Rank an entity's properties by their tf-idf cell values.

    Zero-scored properties are kept at the tail rather than dropped; ties
    break lexicographically.
    """
    if props.entity not in model.entity_index:
        raise ValidationError(f"entity not in tf-idf model: {props.entity!r}")
    scored = [(adj, model.score(props.entity, adj)) for adj in props.properties]
    return RankedProperties(
        entity=props.entity,
        items=sort_scored(scored, top_k),
        model_tag="tfidf",
        status=STATUS_OK,
    )


def save_tfidf(model: TfIdfModel, path: str | Path, metadata: dict | None = None) -> None:
    """Text serialization: header comments, entity and term lists, matrix rows."""
    lines = ["#tfidf"]
    for key in sorted(metadata or {}):
        lines.append(f"#{key}={metadata[key]}")
    lines.append(f"#entities={len(model.entities)}")
    lines.extend(model.entities)
    lines.append(f"#terms={len(model.terms)}")
    lines.extend(model.terms)
    lines.append("#matrix")
    for row in model.matrix:
        lines.append(" ".join(f"{x:.17g}" for x in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_tfidf(path: str | Path) -> TfIdfModel:
    from .errors import ModelFormatError

    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "#tfidf":
        raise ModelFormatError(f"{path}: not a tf-idf model (expected '#tfidf' header)")
    pos = 1
    while pos < len(lines) and not lines[pos].startswith("#entities="):
        pos += 1
    if pos == len(lines):
        raise ModelFormatError(f"{path}: missing #entities section")
    n_entities = int(lines[pos].split("=", 1)[1])
    entities = lines[pos + 1 : pos + 1 + n_entities]
    pos += 1 + n_entities
    if not lines[pos].startswith("#terms="):
        raise ModelFormatError(f"{path}: missing #terms section")
    n_terms = int(lines[pos].split("=", 1)[1])
    terms = lines[pos + 1 : pos + 1 + n_terms]
    pos += 1 + n_terms
    if lines[pos] != "#matrix":
        raise ModelFormatError(f"{path}: missing #matrix section")
    rows = [
        [float(x) for x in line.split(" ")] for line in lines[pos + 1 : pos + 1 + n_entities]
    ]
    matrix = np.asarray(rows, dtype=np.float64).reshape(n_entities, n_terms)
    return TfIdfModel(entities, terms, matrix)
