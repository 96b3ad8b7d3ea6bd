"""Advantage distillation and the simplified reconciliation stage.

Distillation turns an L-digit stream into one key bit: the sender draws a
codeword whose weight is biased above or below L/2 by ``gamma`` according
to the bit, and publishes the stream XOR the codeword.  The receiver
unmasks with its own stream and decodes by weight, discarding anything
inside the ``t`` dead zone around L/2.  Blocks where the two streams
disagree heavily land in the dead zone and are thrown away, which is what
converts a partial stream advantage into a decisive bit advantage.

The reconciliation stage is a deliberately simple stand-in: shuffled
block-parity exchange with bisection repair (every published parity is
counted as leakage), an equality check via a public random hash, then
length reduction by a public random binary matrix.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ReconciliationFailedError

__all__ = [
    "DISCARD",
    "codeword_weights",
    "distill_encode",
    "distill_decode",
    "nearest_decode",
    "reconcile",
    "amplify",
    "irpa_simplified",
]

# Sentinel returned by distill_decode for dead-zone blocks.
DISCARD = "discard"


def codeword_weights(block_len: int, gamma: float):
    """Codeword weights for bits 0 and 1; raises if the rounding collapses them."""
    w0 = round(block_len * (0.5 - gamma))
    w1 = round(block_len * (0.5 + gamma))
    if not 0 <= w0 < w1 <= block_len:
        raise ValueError(
            f"biased weights {w0}, {w1} invalid for L={block_len}, gamma={gamma}"
        )
    return w0, w1


def distill_encode(stream: np.ndarray, bit: int, gamma: float,
                   rng: np.random.Generator):
    """Mask a weight-coded random codeword with the digit stream.

    Returns ``(published, codeword)``; only ``published`` goes on the wire.
    """
    stream = np.asarray(stream, dtype=np.uint8)
    block_len = stream.shape[0]
    w0, w1 = codeword_weights(block_len, gamma)
    weight = w1 if bit else w0
    codeword = np.zeros(block_len, dtype=np.uint8)
    codeword[rng.choice(block_len, weight, replace=False)] = 1
    return stream ^ codeword, codeword


def distill_decode(stream: np.ndarray, published: np.ndarray, gamma: float, t: float):
    """Unmask and decode by weight: 0 below the dead zone, 1 above, DISCARD inside."""
    stream = np.asarray(stream, dtype=np.uint8)
    published = np.asarray(published, dtype=np.uint8)
    if stream.shape != published.shape:
        raise ValueError("stream/published length mismatch")
    block_len = stream.shape[0]
    rate = float((stream ^ published).sum()) / block_len
    if rate < 0.5 - t:
        return 0
    if rate > 0.5 + t:
        return 1
    return DISCARD


def nearest_decode(stream: np.ndarray, published: np.ndarray) -> int:
    """Forced decision decode (no discard): nearest weight side of L/2."""
    stream = np.asarray(stream, dtype=np.uint8)
    published = np.asarray(published, dtype=np.uint8)
    rate = float((stream ^ published).sum()) / stream.shape[0]
    return 1 if rate > 0.5 else 0


def _parity(bits: np.ndarray) -> int:
    return int(bits.sum()) & 1


def _bisect_fix(key_a, key_b, idx):
    """Repair one mismatched block by parity bisection.

    Returns bits leaked (one per parity comparison).  Flips the located
    bit of ``key_b``.
    """
    leaked = 0
    lo, hi = 0, idx.shape[0]
    while hi - lo > 1:
        mid = (lo + hi) // 2
        leaked += 1
        if _parity(key_a[idx[lo:mid]]) != _parity(key_b[idx[lo:mid]]):
            hi = mid
        else:
            lo = mid
    key_b[idx[lo]] ^= 1
    return leaked + 1  # the final single-bit reveal


def reconcile(key_a: np.ndarray, key_b: np.ndarray, rng: np.random.Generator,
              est_error: float = 0.05, max_passes: int = 8):
    """Block-parity reconciliation; returns ``(fixed_key_b, leaked_bits)``.

    Passes shuffle the indices, compare block parities (each comparison
    leaks one bit) and bisect-repair odd blocks.  Block size starts near
    0.73/est_error and doubles each pass; passes repeat until one is clean
    or the budget runs out.
    """
    key_a = np.asarray(key_a, dtype=np.uint8)
    key_b = np.asarray(key_b, dtype=np.uint8).copy()
    if key_a.shape != key_b.shape:
        raise ValueError("key length mismatch")
    length = key_a.shape[0]
    leaked = 0
    # fixed block size with a fresh shuffle per pass: an error pair hiding
    # in one block (even parity) is split by a later shuffle; two clean
    # passes in a row are required before declaring convergence
    block = max(2, min(length, int(math.ceil(0.73 / max(est_error, 1e-6)))))
    consecutive_clean = 0
    for _ in range(max_passes):
        order = rng.permutation(length)
        clean = True
        for start in range(0, length, block):
            idx = order[start : start + block]
            leaked += 1
            if _parity(key_a[idx]) != _parity(key_b[idx]):
                clean = False
                leaked += _bisect_fix(key_a, key_b, idx)
        consecutive_clean = consecutive_clean + 1 if clean else 0
        if consecutive_clean >= 2:
            break
    return key_b, leaked


def amplify(key: np.ndarray, out_len: int, rng: np.random.Generator) -> np.ndarray:
    """Length reduction by a public random binary matrix (GF(2) product)."""
    key = np.asarray(key, dtype=np.uint8)
    if out_len < 0:
        raise ValueError("output length must be non-negative")
    matrix = rng.integers(0, 2, size=(out_len, key.shape[0]), dtype=np.uint8)
    return (matrix @ key) % 2


def irpa_simplified(key_a: np.ndarray, key_b: np.ndarray, rng: np.random.Generator,
                    est_error: float = 0.05, margin: int = 32, max_passes: int = 8):
    """Reconcile, verify equality through a public ``margin``-bit hash, then
    amplify down to ``len - leaked - margin`` bits.

    Returns ``(final_a, final_b, leaked_bits)``.  If the verification hash
    still disagrees after all passes, reconciliation failed (error rate
    beyond the stage's capability).  When the hash agrees the outputs can
    differ only on a hash collision, probability ``2^-margin``.
    """
    key_a = np.asarray(key_a, dtype=np.uint8)
    key_b = np.asarray(key_b, dtype=np.uint8)
    if key_a.shape != key_b.shape:
        raise ValueError("key length mismatch")
    fixed_b, leaked = reconcile(key_a, key_b, rng, est_error=est_error,
                                max_passes=max_passes)
    check = rng.integers(0, 2, size=(margin, key_a.shape[0]), dtype=np.uint8)
    if not np.array_equal((check @ key_a) % 2, (check @ fixed_b) % 2):
        raise ReconciliationFailedError(
            "verification hash mismatch after reconciliation"
        )
    out_len = key_a.shape[0] - leaked - margin
    if out_len <= 0:
        raise ReconciliationFailedError(
            f"no key material left after leakage ({leaked}) and margin ({margin})"
        )
    # one public coin, one matrix, both sides
    coin = np.random.default_rng(int(rng.integers(2**63)))
    matrix = coin.integers(0, 2, size=(out_len, key_a.shape[0]), dtype=np.uint8)
    return (matrix @ key_a) % 2, (matrix @ fixed_b) % 2, leaked