"""Corpus ingestion and tokenization.

Two kinds of documents flow through the pipeline: per-entity descriptions
(small TSV file, one line per entity) and story documents (a directory of
plain-text files). Both are tokenized with the same explicit rules so that
output is bit-reproducible: sentences end at ``.``, ``!`` or ``?`` followed
by whitespace (or end of text), and words are whitespace-separated with
non-alphanumeric edges stripped (hyphens are kept, so "crab-like" survives
as one token).
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .errors import ParseError, ValidationError

logger = logging.getLogger(__name__)

ENTITY_DESCRIPTION = "entity_description"
STORY = "story"

# A sentence is an ordered, nonempty list of whitespace-free tokens.
Sentence = list[str]

_SENTENCE_BOUNDARY = re.compile(r"(?<=[.!?])\s+")


@dataclass
class Document:
    """A single corpus unit: either an entity description or a story."""

    id: str
    kind: str
    text: str
    entity: str | None = field(default=None)

    def __post_init__(self):
        if not self.id:
            raise ValidationError("document id must be nonempty")
        if self.kind not in (ENTITY_DESCRIPTION, STORY):
            raise ValidationError(f"unknown document kind: {self.kind!r}")
        if (self.entity is not None) != (self.kind == ENTITY_DESCRIPTION):
            raise ValidationError(
                "entity must be set exactly when kind=entity_description"
            )


def tokenize_sentences(text: str) -> list[str]:
    """Split text into raw sentence strings.

    A sentence ends at ``.``, ``!`` or ``?`` followed by whitespace or end of
    text; the terminator stays attached to its sentence. Trailing text with
    no terminator is kept as a final sentence. Known limitation: abbreviations
    like "Mr." split ("Mr. X ran." -> ["Mr.", "X ran."]).
    """
    pieces = _SENTENCE_BOUNDARY.split(text)
    return [p for p in (piece.strip() for piece in pieces) if p]


def _strippable(ch: str) -> bool:
    return not (ch.isalnum() or ch == "-")


def tokenize_words(sentence: str, lowercase: bool = False) -> Sentence:
    """Split a raw sentence into tokens.

    Tokens are whitespace-separated; leading/trailing characters other than
    letters, digits and hyphen are stripped, and tokens left without any
    letter or digit are dropped.
    """
    tokens = []
    for raw in sentence.split():
        start, end = 0, len(raw)
        while start < end and _strippable(raw[start]):
            start += 1
        while end > start and _strippable(raw[end - 1]):
            end -= 1
        tok = raw[start:end]
        if not tok or not any(ch.isalnum() for ch in tok):
            continue
        tokens.append(tok.lower() if lowercase else tok)
    return tokens


def tokenize_text(text: str, lowercase: bool = False) -> list[Sentence]:
    """Tokenize full text into sentences of words, dropping empty sentences."""
    out = []
    for raw in tokenize_sentences(text):
        tokens = tokenize_words(raw, lowercase=lowercase)
        if tokens:
            out.append(tokens)
    return out


def load_entity_descriptions(path: str | Path) -> list[Document]:
    """Load the entity description corpus from a UTF-8 TSV file.

    Each line is ``entity<TAB>description``. Malformed lines and duplicate
    entities raise ParseError with the offending line number.
    """
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"descriptions file not found: {path}")
    docs: list[Document] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if "\t" not in line:
                raise ParseError(path, lineno, "expected entity<TAB>description")
            entity, text = line.split("\t", 1)
            if not entity:
                raise ParseError(path, lineno, "empty entity name")
            if entity in seen:
                raise ParseError(path, lineno, f"duplicate entity {entity!r}")
            seen.add(entity)
            docs.append(
                Document(id=entity, kind=ENTITY_DESCRIPTION, text=text, entity=entity)
            )
    return docs


def load_story_corpus(path: str | Path) -> Iterator[Document]:
    """Stream story documents from a directory, one file per story.

    Files are yielded in lexicographic name order; subdirectories are
    ignored. Unreadable or non-UTF-8 files are skipped with a warning and
    the total skip count is logged once the stream is exhausted.
    """
    path = Path(path)
    if not path.is_dir():
        raise ValidationError(f"story directory not found: {path}")
    skipped = 0
    for entry in sorted(path.iterdir(), key=lambda p: p.name):
        if not entry.is_file():
            continue
        try:
            text = entry.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            skipped += 1
            logger.warning("skipping unreadable story file %s: %s", entry, exc)
            continue
        yield Document(id=entry.name, kind=STORY, text=text)
    if skipped:
        logger.warning("skipped %d unreadable story file(s) in %s", skipped, path)


def filter_min_words(
    docs: Iterable[Document], min_words: int
) -> Iterator[Document]:
    """Keep only documents with at least ``min_words`` whitespace-split words."""
    if min_words < 0:
        raise ValidationError("min_words must be >= 0")
    for doc in docs:
        if len(doc.text.split()) >= min_words:
            yield doc
