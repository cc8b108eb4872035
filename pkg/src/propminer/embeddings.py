"""Skip-gram negative-sampling embeddings, word-level and subword.

Both modes share one trainer: the center token is represented either by its
own vector (word mode) or by the average of its vector and its hashed
character n-gram vectors (subword mode), and is trained to score true
context words above noise words drawn from the unigram**0.75 distribution.
Subword composition is what lets the model return vectors for words never
seen in training; word-level models simply have no vector for those.

The per-epoch inner loop lives in :mod:`propminer.kernels`.
"""

from __future__ import annotations

import hashlib
import json
import logging
import struct
import threading
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from . import kernels
from .corpus import Sentence
from .errors import ModelFormatError, PropminerError, ValidationError
from .vocab import (
    Vocabulary,
    build_negative_table,
    build_vocab,
    keep_probability_table,
)

logger = logging.getLogger(__name__)

WORD = "word"
SUBWORD = "subword"

NATIVE_MAGIC = b"PMEMBED1"

_FNV_OFFSET = 2166136261
_FNV_PRIME = 16777619
_MASK32 = 0xFFFFFFFF

# Reference-trainer defaults; the subword trainer's published default lr is
# twice the word-level one.
_DEFAULT_LR = {WORD: 0.025, SUBWORD: 0.05}


@dataclass
class TrainConfig:
    mode: str = WORD
    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    initial_lr: float | None = None
    final_lr: float = 1e-4
    min_count: int = 5
    sample_t: float = 1e-3
    minn: int = 3
    maxn: int = 6
    buckets: int = 2_000_000
    seed: int = 1
    threads: int = 1

    def __post_init__(self):
        if self.mode not in (WORD, SUBWORD):
            raise ValidationError(f"unknown embedding mode: {self.mode!r}")
        if self.initial_lr is None:
            self.initial_lr = _DEFAULT_LR[self.mode]
        if self.dim < 1:
            raise ValidationError("dim must be >= 1")
        if not (1 <= self.minn <= self.maxn):
            raise ValidationError("need 1 <= minn <= maxn")
        if self.buckets < 1:
            raise ValidationError("buckets must be >= 1")
        if self.final_lr > self.initial_lr:
            raise ValidationError("final_lr must be <= initial_lr")
        if self.window < 1 or self.negatives < 0 or self.epochs < 0:
            raise ValidationError("window >= 1, negatives >= 0, epochs >= 0 required")
        if self.threads < 1:
            raise ValidationError("threads must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


def config_hash(mapping: dict) -> str:
    """Short stable hash of a config mapping, for output attribution."""
    blob = json.dumps(mapping, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def extract_ngrams(word: str, minn: int, maxn: int) -> list[str]:
    """Character n-grams of the boundary-padded word.

    The word is wrapped as ``<word>``; all substrings with length in
    [minn, min(maxn, padded length)] are emitted shortest-first, left to
    right, so the padded full word itself appears iff it fits in maxn.
    """
    if not word:
        raise ValidationError("cannot extract n-grams of an empty word")
    if minn < 1 or minn > maxn:
        raise ValidationError("need 1 <= minn <= maxn")
    padded = f"<{word}>"
    grams = []
    for n in range(minn, min(maxn, len(padded)) + 1):
        for i in range(len(padded) - n + 1):
            grams.append(padded[i : i + n])
    return grams


def hash_ngram(ngram: str, buckets: int) -> int:
    """FNV-1a 32-bit hash of the n-gram's UTF-8 bytes, modulo buckets."""
    if buckets < 1:
        raise ValidationError("buckets must be >= 1")
    h = _FNV_OFFSET
    for byte in ngram.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK32
    return h % buckets


def ngram_bucket_ids(word: str, minn: int, maxn: int, buckets: int) -> list[int]:
    """Bucket ids of a word's n-grams; duplicates kept (they share a row)."""
    if len(word) + 2 < minn:
        return []
    return [hash_ngram(g, buckets) for g in extract_ngrams(word, minn, maxn)]


def _sigmoid(x: np.ndarray) -> np.ndarray:
    ex = np.exp(-np.abs(x))
    return np.where(x >= 0.0, 1.0 / (1.0 + ex), ex / (1.0 + ex))


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def sgns_loss_and_grads(center_vec, context_vec, negative_vecs):
    """Loss and exact gradients of one positive-plus-negatives update.

    loss = -ln sigmoid(c.u) - sum_n ln sigmoid(-c.u_n). Returns
    (loss, grad_center, grad_context, grad_negatives) as float64 arrays;
    gradients are partial derivatives of the loss (descend by subtracting).
    """
    c = np.asarray(center_vec, dtype=np.float64)
    u = np.asarray(context_vec, dtype=np.float64)
    negs = np.asarray(negative_vecs, dtype=np.float64)
    if negs.ndim == 1:
        negs = negs.reshape(0, c.size) if negs.size == 0 else negs.reshape(1, -1)
    if u.shape != c.shape or (negs.size and negs.shape[1] != c.size):
        raise ValidationError("all vectors must share one dimension")
    f_pos = float(c @ u)
    f_neg = negs @ c
    loss = float(_softplus(np.array(-f_pos))) + float(_softplus(f_neg).sum())
    s_pos = float(_sigmoid(np.array(f_pos)))
    s_neg = _sigmoid(f_neg)
    grad_center = (s_pos - 1.0) * u + (s_neg[:, None] * negs).sum(axis=0)
    grad_context = (s_pos - 1.0) * c
    grad_negatives = s_neg[:, None] * c[None, :]
    return loss, grad_center, grad_context, grad_negatives


class EmbeddingModel:
    """Trained vector tables plus the vocabulary and config that made them."""

    def __init__(
        self,
        vocab: Vocabulary,
        config: TrainConfig,
        input_vectors: np.ndarray,
        output_vectors: np.ndarray,
        ngram_vectors: np.ndarray | None = None,
        epoch_losses: list[float] | None = None,
        corpus_stats: dict | None = None,
    ):
        self.vocab = vocab
        self.config = config
        self.input_vectors = input_vectors
        self.output_vectors = output_vectors
        self.ngram_vectors = ngram_vectors
        self.epoch_losses = list(epoch_losses or [])
        self.corpus_stats = dict(corpus_stats or {})
        if config.mode == SUBWORD and ngram_vectors is None:
            raise ValidationError("subword model requires an n-gram table")

    @property
    def dim(self) -> int:
        return self.input_vectors.shape[1]

    @property
    def config_hash(self) -> str:
        return config_hash(self.config.to_dict())


def _encode_corpus(sentences: list[Sentence], vocab: Vocabulary):
    data: list[int] = []
    offsets = [0]
    for sent in sentences:
        for tok in sent:
            idx = vocab.index.get(tok)
            if idx is not None:
                data.append(idx)
        offsets.append(len(data))
    return np.asarray(data, dtype=np.int32), np.asarray(offsets, dtype=np.int64)


def _ngram_table(vocab: Vocabulary, config: TrainConfig):
    flat: list[int] = []
    offsets = np.zeros(len(vocab) + 1, dtype=np.int64)
    for i, tok in enumerate(vocab.tokens):
        flat.extend(ngram_bucket_ids(tok, config.minn, config.maxn, config.buckets))
        offsets[i + 1] = len(flat)
    return np.asarray(flat, dtype=np.int64), offsets


def _chunk_ranges(n_sentences: int, n_chunks: int) -> list[tuple[int, int]]:
    bounds = np.linspace(0, n_sentences, n_chunks + 1).astype(np.int64)
    return [(int(bounds[i]), int(bounds[i + 1])) for i in range(n_chunks)]


def train(corpus: Iterable[Sentence], config: TrainConfig) -> EmbeddingModel:
    """Train an embedding model over tokenized sentences.

    Deterministic (byte-identical tables) for threads=1 and a fixed seed;
    with more threads, workers update the shared tables hogwild-style and
    results vary run to run.
    """
    sentences = list(corpus)
    vocab = build_vocab(sentences, config.min_count)
    if len(vocab) == 0:
        raise ValidationError(
            f"no tokens left after min_count={config.min_count} filtering"
        )
    data, offsets = _encode_corpus(sentences, vocab)
    n_sentences = len(offsets) - 1

    keep_prob = keep_probability_table(vocab, config.sample_t)
    dist = build_negative_table(vocab, power=0.75)
    alias_prob, alias_idx = kernels.build_alias_table(dist.weights)

    rng = np.random.default_rng(config.seed)
    dim = config.dim
    vec_in = (rng.random((len(vocab), dim), dtype=np.float32) - 0.5) / dim
    vec_out = np.zeros((len(vocab), dim), dtype=np.float32)
    subword = config.mode == SUBWORD
    if subword:
        ngram_data, ngram_offsets = _ngram_table(vocab, config)
        vec_ng = (rng.random((config.buckets, dim), dtype=np.float32) - 0.5) / dim
    else:
        ngram_data = np.zeros(0, dtype=np.int64)
        ngram_offsets = np.zeros(len(vocab) + 1, dtype=np.int64)
        vec_ng = np.zeros((1, dim), dtype=np.float32)

    epoch_kernel = kernels.sgns_epoch
    total_positions = config.epochs * len(data)
    epoch_losses: list[float] = []
    rng_state = np.array([kernels.derive_worker_state(config.seed, 0)], dtype=np.uint64)

    for epoch in range(config.epochs):
        if total_positions == 0:
            epoch_losses.append(0.0)
            continue
        epoch_base = epoch * len(data)
        if config.threads == 1:
            loss, pairs = epoch_kernel(
                data, offsets, 0, n_sentences,
                keep_prob, alias_prob, alias_idx,
                ngram_data, ngram_offsets,
                vec_in, vec_out, vec_ng,
                subword, config.window, config.negatives,
                config.initial_lr, config.final_lr,
                total_positions, epoch_base, rng_state,
            )
            epoch_losses.append(loss / pairs if pairs else 0.0)
        else:
            ranges = _chunk_ranges(n_sentences, config.threads)
            results: list[tuple[float, int]] = [(0.0, 0)] * config.threads
            workers = []
            for w, (s0, s1) in enumerate(ranges):
                state = np.array(
                    [kernels.derive_worker_state(config.seed, epoch * config.threads + w + 1)],
                    dtype=np.uint64,
                )

                def run(w=w, s0=s0, s1=s1, state=state):
                    results[w] = epoch_kernel(
                        data, offsets, s0, s1,
                        keep_prob, alias_prob, alias_idx,
                        ngram_data, ngram_offsets,
                        vec_in, vec_out, vec_ng,
                        subword, config.window, config.negatives,
                        config.initial_lr, config.final_lr,
                        total_positions, epoch_base + int(offsets[s0]), state,
                    )

                thread = threading.Thread(target=run, name=f"sgns-{w}")
                thread.start()
                workers.append(thread)
            for thread in workers:
                thread.join()
            loss = sum(r[0] for r in results)
            pairs = sum(r[1] for r in results)
            epoch_losses.append(loss / pairs if pairs else 0.0)
        logger.debug("epoch %d mean loss %.6f", epoch + 1, epoch_losses[-1])

    for name, table in (("input", vec_in), ("output", vec_out), ("ngram", vec_ng)):
        if not np.isfinite(table).all():
            raise PropminerError(f"training produced non-finite {name} vectors")

    return EmbeddingModel(
        vocab=vocab,
        config=config,
        input_vectors=vec_in,
        output_vectors=vec_out,
        ngram_vectors=vec_ng if subword else None,
        epoch_losses=epoch_losses,
        corpus_stats={
            "sentences": n_sentences,
            "tokens_in_vocab": int(len(data)),
            "total_tokens": vocab.total_tokens,
            "vocab_size": len(vocab),
        },
    )


def vector(model: EmbeddingModel, word: str) -> np.ndarray | None:
    """Query vector for a word, or None when the model cannot provide one.

    Word mode returns the input vector for in-vocabulary words and None
    otherwise. Subword mode averages the word vector with its n-gram bucket
    vectors, and for out-of-vocabulary words composes the average of the
    n-gram vectors alone, so any nonempty word gets a vector.
    """
    if not word:
        raise ValidationError("cannot look up an empty word")
    idx = model.vocab.index.get(word)
    if model.config.mode == WORD:
        if idx is None:
            return None
        return model.input_vectors[idx].copy()
    grams = ngram_bucket_ids(word, model.config.minn, model.config.maxn, model.config.buckets)
    if idx is not None:
        if not grams:
            return model.input_vectors[idx].copy()
        total = model.input_vectors[idx] + model.ngram_vectors[grams].sum(axis=0)
        return total * np.float32(1.0 / (1.0 + len(grams)))
    if not grams:
        return np.zeros(model.dim, dtype=np.float32)
    return model.ngram_vectors[grams].mean(axis=0)


def similarity(model: EmbeddingModel, a: str, b: str, metric: str = "dot") -> float | None:
    """Dot or cosine similarity between two words; None if either has no vector."""
    if metric not in ("dot", "cosine"):
        raise ValidationError(f"unknown metric: {metric!r}")
    va = vector(model, a)
    vb = vector(model, b)
    if va is None or vb is None:
        return None
    va = va.astype(np.float64)
    vb = vb.astype(np.float64)
    dot = float(va @ vb)
    if metric == "dot":
        return dot
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (na * nb)


# ---------------------------------------------------------------------------
# Serialization: a native binary format for exact round-trips, plus the
# word2vec text format for interoperability.
# ---------------------------------------------------------------------------


def save_model(model: EmbeddingModel, path: str | Path) -> None:
    """Write the native binary format (magic, JSON header, vocab, raw tables)."""
    header = {
        "format": 1,
        "mode": model.config.mode,
        "dim": model.dim,
        "minn": model.config.minn,
        "maxn": model.config.maxn,
        "buckets": model.config.buckets,
        "seed": model.config.seed,
        "config": model.config.to_dict(),
        "config_hash": model.config_hash,
        "corpus_stats": model.corpus_stats,
        "epoch_losses": model.epoch_losses,
        "vocab_size": len(model.vocab),
        "total_tokens": model.vocab.total_tokens,
    }
    header_blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    vocab_blob = "".join(
        f"{tok}\t{count}\n" for tok, _, count in model.vocab.items()
    ).encode("utf-8")
    with Path(path).open("wb") as fh:
        fh.write(NATIVE_MAGIC)
        fh.write(struct.pack("<I", len(header_blob)))
        fh.write(header_blob)
        fh.write(struct.pack("<Q", len(vocab_blob)))
        fh.write(vocab_blob)
        fh.write(np.ascontiguousarray(model.input_vectors, dtype=np.float32).tobytes())
        fh.write(np.ascontiguousarray(model.output_vectors, dtype=np.float32).tobytes())
        if model.config.mode == SUBWORD:
            fh.write(np.ascontiguousarray(model.ngram_vectors, dtype=np.float32).tobytes())


def load_model(path: str | Path) -> EmbeddingModel:
    path = Path(path)
    with path.open("rb") as fh:
        magic = fh.read(len(NATIVE_MAGIC))
        if magic != NATIVE_MAGIC:
            raise ModelFormatError(
                f"{path}: not a native embedding model (expected magic {NATIVE_MAGIC!r})"
            )
        (header_len,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        (vocab_len,) = struct.unpack("<Q", fh.read(8))
        vocab_blob = fh.read(vocab_len).decode("utf-8")
        tokens: list[str] = []
        counts: list[int] = []
        for line in vocab_blob.splitlines():
            tok, count = line.split("\t", 1)
            tokens.append(tok)
            counts.append(int(count))
        vocab = Vocabulary(tokens, counts, header["total_tokens"])
        config = TrainConfig(**header["config"])
        v, dim = header["vocab_size"], header["dim"]
        if v != len(vocab):
            raise ModelFormatError(f"{path}: vocab size mismatch")

        def read_table(rows):
            blob = fh.read(rows * dim * 4)
            if len(blob) != rows * dim * 4:
                raise ModelFormatError(f"{path}: truncated vector table")
            return np.frombuffer(blob, dtype=np.float32).reshape(rows, dim).copy()

        vec_in = read_table(v)
        vec_out = read_table(v)
        vec_ng = read_table(header["buckets"]) if header["mode"] == SUBWORD else None
    return EmbeddingModel(
        vocab=vocab,
        config=config,
        input_vectors=vec_in,
        output_vectors=vec_out,
        ngram_vectors=vec_ng,
        epoch_losses=header.get("epoch_losses", []),
        corpus_stats=header.get("corpus_stats", {}),
    )


def write_word2vec_text(
    words: list[str],
    vectors: np.ndarray,
    path: str | Path,
    header_comments: Iterable[str] = (),
) -> None:
    """word2vec text format: ``V D`` then one ``word f1 .. fD`` line per word.

    Floats use a fixed 6-decimal rule so re-import followed by re-export
    reproduces the file byte for byte.
    """
    lines = [c if c.startswith("#") else f"#{c}" for c in header_comments]
    lines.append(f"{len(words)} {vectors.shape[1]}")
    for word, row in zip(words, vectors):
        lines.append(word + " " + " ".join(f"{float(x):.6f}" for x in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def export_word2vec_text(model: EmbeddingModel, path: str | Path) -> None:
    """Export in-vocabulary input vectors as word2vec text.

    Subword models get a comment line recording minn/maxn/buckets; the
    n-gram table itself only travels in the native format.
    """
    comments = []
    if model.config.mode == SUBWORD:
        comments.append(
            f"#subword minn={model.config.minn} maxn={model.config.maxn} "
            f"buckets={model.config.buckets}"
        )
    write_word2vec_text(model.vocab.tokens, model.input_vectors, path, comments)


def read_word2vec_text(path: str | Path):
    """Parse word2vec text; returns (words, float32 vectors, comment lines)."""
    path = Path(path)
    comments: list[str] = []
    words: list[str] = []
    rows: list[list[float]] = []
    header: tuple[int, int] | None = None
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if header is None and line.startswith("#"):
                comments.append(line)
                continue
            if header is None:
                parts = line.split()
                if len(parts) != 2:
                    raise ModelFormatError(f"{path}: expected 'V D' header line")
                header = (int(parts[0]), int(parts[1]))
                continue
            parts = line.split(" ")
            if len(parts) != header[1] + 1:
                raise ModelFormatError(
                    f"{path}: expected {header[1]} values for word {parts[0]!r}"
                )
            words.append(parts[0])
            rows.append([float(x) for x in parts[1:]])
    if header is None:
        raise ModelFormatError(f"{path}: empty word2vec text file")
    if len(words) != header[0]:
        raise ModelFormatError(f"{path}: header declares {header[0]} words, found {len(words)}")
    return words, np.asarray(rows, dtype=np.float32), comments
