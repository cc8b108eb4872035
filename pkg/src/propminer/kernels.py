"""Hot training kernels: numba-compiled with a pure-numpy fallback.

The skip-gram negative-sampling inner loop dominates pipeline runtime, so it
ships in two interchangeable implementations:

* ``sgns_epoch_numba`` — scalar loops compiled with ``@njit(cache=True,
  nogil=True)``; nogil makes hogwild-style multi-threaded training actually
  run in parallel.
* ``sgns_epoch_numpy`` — the identical update schedule (same RNG stream,
  same pair order, same redraw rule) with vectorized per-pair math.

``sgns_epoch`` points at the numba kernel when numba imports cleanly and the
``PROPMINER_DISABLE_NUMBA`` environment variable is unset/falsy, otherwise at
the numpy fallback. The two paths agree up to floating-point summation order;
each is bit-deterministic on its own for a fixed seed and threads=1.
``benchmarks/benchmark_kernels.py`` compares their throughput.

Both kernels draw from an inlined splitmix64 stream so the numba and numpy
paths consume byte-identical random sequences. Negative ids come from an
alias table (exact unigram**0.75 sampling in O(1) per draw); a draw that
collides with the positive context id is redrawn, bailing out after a bounded
number of attempts so degenerate single-token vocabularies cannot hang.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .errors import ValidationError

DISABLE_ENV = "PROPMINER_DISABLE_NUMBA"

_MASK64 = (1 << 64) - 1
_INV53 = 1.0 / 9007199254740992.0  # 2**-53
_MAX_REDRAWS = 32

# splitmix64 constants
_GOLD = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U11 = np.uint64(11)


def _numba_disabled() -> bool:
    value = os.environ.get(DISABLE_ENV, "").strip().lower()
    return value not in ("", "0", "false", "no", "off")


try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - environment without numba
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE and not _numba_disabled()


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; returns (new_state, 64-bit output)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    z = z ^ (z >> 31)
    return state, z


def derive_worker_state(seed: int, stream: int) -> int:
    """Deterministic per-worker RNG state for (seed, stream index)."""
    state = (seed & _MASK64) ^ ((stream + 1) * 0xD1B54A32D192ED03 & _MASK64)
    state, _ = splitmix64(state)
    return state


def build_alias_table(weights) -> tuple[np.ndarray, np.ndarray]:
    """Vose alias table for O(1) sampling from a finite distribution.

    Returns (prob, alias); sample by drawing a slot i uniformly and taking i
    with probability prob[i], else alias[i]. Construction is deterministic
    (index-ordered stacks) so serialized models stay byte-stable.
    """
    w = np.asarray(weights, dtype=np.float64)
    n = w.size
    if n == 0:
        raise ValidationError("cannot build an alias table from an empty distribution")
    if np.any(w < 0) or w.sum() <= 0:
        raise ValidationError("alias table weights must be nonnegative and sum > 0")
    scaled = w * (n / w.sum())
    prob = np.zeros(n, dtype=np.float64)
    alias = np.zeros(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s = small.pop()
        l = large.pop()
        prob[s] = scaled[s]
        alias[s] = l
        scaled[l] -= 1.0 - scaled[s]
        if scaled[l] < 1.0:
            small.append(l)
        else:
            large.append(l)
    while large:
        prob[large.pop()] = 1.0
    while small:  # numerical residue only
        prob[small.pop()] = 1.0
    return prob, alias


def _softplus(x: float) -> float:
    if x > 0.0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


def sgns_epoch_numpy(
    data,
    offsets,
    sent_start,
    sent_end,
    keep_prob,
    alias_prob,
    alias_idx,
    ngram_data,
    ngram_offsets,
    vec_in,
    vec_out,
    vec_ng,
    subword,
    window,
    negatives,
    lr_initial,
    lr_final,
    total_positions,
    position0,
    rng_state,
):
    """One training pass over sentences [sent_start, sent_end), numpy path.

    Mutates vec_in / vec_out / vec_ng and rng_state in place; returns
    (summed loss, number of positive pairs processed).
    """
    state = int(rng_state[0])
    n_vocab = vec_out.shape[0]
    loss_sum = 0.0
    n_pairs = 0
    position = position0
    lr_span = lr_initial - lr_final
    labels = np.zeros(negatives + 1, dtype=np.float64)
    labels[0] = 1.0
    ids = np.empty(negatives + 1, dtype=np.int64)

    for s in range(sent_start, sent_end):
        beg = int(offsets[s])
        end = int(offsets[s + 1])
        if end > beg:
            lr = lr_initial - lr_span * (position / total_positions)
            if lr < lr_final:
                lr = lr_final
            lr32 = np.float32(lr)
            kept = []
            for p in range(beg, end):
                wid = int(data[p])
                state, z = splitmix64(state)
                if (z >> 11) * _INV53 < keep_prob[wid]:
                    kept.append(wid)
            n_kept = len(kept)
            for ci in range(n_kept):
                center = kept[ci]
                state, z = splitmix64(state)
                b = 1 + int((z >> 11) * _INV53 * window)
                lo = ci - b if ci - b > 0 else 0
                hi = ci + b + 1 if ci + b + 1 < n_kept else n_kept
                for cj in range(lo, hi):
                    if cj == ci:
                        continue
                    ctx = kept[cj]
                    if subword:
                        gbeg = int(ngram_offsets[center])
                        gend = int(ngram_offsets[center + 1])
                        inv = np.float32(1.0 / (1.0 + (gend - gbeg)))
                        if gend > gbeg:
                            h = (vec_in[center] + vec_ng[ngram_data[gbeg:gend]].sum(axis=0)) * inv
                        else:
                            h = vec_in[center] * inv
                    else:
                        inv = np.float32(1.0)
                        h = vec_in[center]
                    ids[0] = ctx
                    n_ids = 1
                    for _ in range(negatives):
                        for _attempt in range(_MAX_REDRAWS):
                            state, z1 = splitmix64(state)
                            slot = int((z1 >> 11) * _INV53 * n_vocab)
                            if slot >= n_vocab:
                                slot = n_vocab - 1
                            state, z2 = splitmix64(state)
                            if (z2 >> 11) * _INV53 < alias_prob[slot]:
                                cand = slot
                            else:
                                cand = int(alias_idx[slot])
                            if cand != ctx:
                                ids[n_ids] = cand
                                n_ids += 1
                                break
                    idv = ids[:n_ids]
                    rows = vec_out[idv]  # fancy index -> pre-update snapshot
                    f = (rows @ h).astype(np.float64)
                    ex = np.exp(-np.abs(f))
                    sig = np.where(f >= 0.0, 1.0 / (1.0 + ex), ex / (1.0 + ex))
                    g = labels[:n_ids] - sig
                    loss_sum += _softplus(-f[0])
                    loss_sum += float(np.maximum(f[1:], 0.0).sum() + np.log1p(ex[1:]).sum())
                    e = (rows * g.astype(np.float32)[:, None]).sum(axis=0)
                    np.add.at(vec_out, idv, (g * lr).astype(np.float32)[:, None] * h[None, :])
                    if subword:
                        step = lr32 * inv * e
                        vec_in[center] += step
                        gbeg = int(ngram_offsets[center])
                        gend = int(ngram_offsets[center + 1])
                        if gend > gbeg:
                            np.add.at(vec_ng, ngram_data[gbeg:gend], step[None, :])
                    else:
                        vec_in[center] += lr32 * e
                    n_pairs += 1
            position += end - beg
    rng_state[0] = state
    return loss_sum, n_pairs


if NUMBA_AVAILABLE:

    @njit(cache=True)
    def _rng_next(state):
        state = state + _GOLD
        z = state
        z = (z ^ (z >> _U30)) * _MIX1
        z = (z ^ (z >> _U27)) * _MIX2
        z = z ^ (z >> _U31)
        return state, z

    @njit(cache=True, nogil=True)
    def sgns_epoch_numba(
        data,
        offsets,
        sent_start,
        sent_end,
        keep_prob,
        alias_prob,
        alias_idx,
        ngram_data,
        ngram_offsets,
        vec_in,
        vec_out,
        vec_ng,
        subword,
        window,
        negatives,
        lr_initial,
        lr_final,
        total_positions,
        position0,
        rng_state,
    ):
        state = rng_state[0]
        n_vocab = vec_out.shape[0]
        dim = vec_in.shape[1]
        loss_sum = 0.0
        n_pairs = 0
        position = position0
        lr_span = lr_initial - lr_final

        max_len = 0
        for s in range(offsets.shape[0] - 1):
            length = offsets[s + 1] - offsets[s]
            if length > max_len:
                max_len = length
        kept = np.empty(max_len, dtype=np.int64)
        ids = np.empty(negatives + 1, dtype=np.int64)
        gbuf = np.empty(negatives + 1, dtype=np.float64)
        h = np.empty(dim, dtype=np.float32)
        e = np.empty(dim, dtype=np.float32)

        for s in range(sent_start, sent_end):
            beg = offsets[s]
            end = offsets[s + 1]
            if end > beg:
                lr = lr_initial - lr_span * (position / total_positions)
                if lr < lr_final:
                    lr = lr_final
                lr32 = np.float32(lr)
                n_kept = 0
                for p in range(beg, end):
                    wid = data[p]
                    state, z = _rng_next(state)
                    if np.float64(z >> _U11) * _INV53 < keep_prob[wid]:
                        kept[n_kept] = wid
                        n_kept += 1
                for ci in range(n_kept):
                    center = kept[ci]
                    state, z = _rng_next(state)
                    b = 1 + int(np.float64(z >> _U11) * _INV53 * window)
                    lo = ci - b
                    if lo < 0:
                        lo = 0
                    hi = ci + b + 1
                    if hi > n_kept:
                        hi = n_kept
                    for cj in range(lo, hi):
                        if cj == ci:
                            continue
                        ctx = kept[cj]
                        gbeg = ngram_offsets[center]
                        gend = ngram_offsets[center + 1]
                        if subword:
                            inv = np.float32(1.0 / (1.0 + np.float64(gend - gbeg)))
                            for d in range(dim):
                                h[d] = vec_in[center, d]
                            for gi in range(gbeg, gend):
                                row = ngram_data[gi]
                                for d in range(dim):
                                    h[d] += vec_ng[row, d]
                            for d in range(dim):
                                h[d] *= inv
                        else:
                            inv = np.float32(1.0)
                            for d in range(dim):
                                h[d] = vec_in[center, d]
                        ids[0] = ctx
                        n_ids = 1
                        for _k in range(negatives):
                            for _attempt in range(_MAX_REDRAWS):
                                state, z1 = _rng_next(state)
                                slot = int(np.float64(z1 >> _U11) * _INV53 * n_vocab)
                                if slot >= n_vocab:
                                    slot = n_vocab - 1
                                state, z2 = _rng_next(state)
                                if np.float64(z2 >> _U11) * _INV53 < alias_prob[slot]:
                                    cand = slot
                                else:
                                    cand = alias_idx[slot]
                                if cand != ctx:
                                    ids[n_ids] = cand
                                    n_ids += 1
                                    break
                        for d in range(dim):
                            e[d] = np.float32(0.0)
                        for j in range(n_ids):
                            row = ids[j]
                            f32 = np.float32(0.0)
                            for d in range(dim):
                                f32 += h[d] * vec_out[row, d]
                            f = np.float64(f32)
                            if f >= 0.0:
                                efn = math.exp(-f)
                                sig = 1.0 / (1.0 + efn)
                                loss_pos = math.log1p(efn)  # softplus(-f)
                                loss_neg = f + math.log1p(efn)  # softplus(f)
                            else:
                                efp = math.exp(f)
                                sig = efp / (1.0 + efp)
                                loss_pos = -f + math.log1p(efp)
                                loss_neg = math.log1p(efp)
                            if j == 0:
                                g = 1.0 - sig
                                loss_sum += loss_pos
                            else:
                                g = -sig
                                loss_sum += loss_neg
                            gbuf[j] = g
                            g32 = np.float32(g)
                            for d in range(dim):
                                e[d] += g32 * vec_out[row, d]
                        for j in range(n_ids):
                            row = ids[j]
                            glr = np.float32(gbuf[j] * lr)
                            for d in range(dim):
                                vec_out[row, d] += glr * h[d]
                        scale = lr32 * inv
                        for d in range(dim):
                            vec_in[center, d] += scale * e[d]
                        if subword:
                            for gi in range(gbeg, gend):
                                row = ngram_data[gi]
                                for d in range(dim):
                                    vec_ng[row, d] += scale * e[d]
                        n_pairs += 1
                position += end - beg
        rng_state[0] = state
        return loss_sum, n_pairs

else:  # pragma: no cover - environment without numba
    sgns_epoch_numba = None

sgns_epoch = sgns_epoch_numba if USE_NUMBA else sgns_epoch_numpy
