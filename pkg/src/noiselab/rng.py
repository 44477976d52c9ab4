"""Counter-based random streams.

Every draw is a pure function of ``(key, counter)``, so a session's random
numbers depend only on the master seed and the session index. Serial and
parallel generation therefore give bit-identical results.

The generator is Philox4x32-10 (Salmon et al., SC'11), vectorised with numpy.
"""

from __future__ import annotations

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint32(0x9E3779B9)
_W1 = np.uint32(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)

ROUNDS = 10


def philox4x32(counter, key, rounds: int = ROUNDS) -> np.ndarray:
    """Apply the Philox4x32 bijection.

    Parameters
    ----------
    counter : array_like of uint32, shape (..., 4)
    key : array_like of uint32, shape (2,) or broadcastable to (..., 2)

    Returns
    -------
    numpy.ndarray of uint32, shape (..., 4)
    """
    ctr = np.asarray(counter, dtype=np.uint32)
    k = np.asarray(key, dtype=np.uint32)
    c0, c1, c2, c3 = (ctr[..., i].astype(np.uint64) for i in range(4))
    k0 = k[..., 0].copy()
    k1 = k[..., 1].copy()
    with np.errstate(over="ignore"):
        for r in range(rounds):
            if r:
                k0 = k0 + _W0
                k1 = k1 + _W1
            p0 = _M0 * c0
            p1 = _M1 * c2
            c0, c1, c2, c3 = (
                (p1 >> _SHIFT32) ^ c1 ^ k0.astype(np.uint64),
                p1 & _MASK32,
                (p0 >> _SHIFT32) ^ c3 ^ k1.astype(np.uint64),
                p0 & _MASK32,
            )
    out = np.stack([c0, c1, c2, c3], axis=-1)
    return out.astype(np.uint32)


def seed_to_key(seed: int) -> np.ndarray:
    """Split a non-negative 64-bit seed into a two-word Philox key."""
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be in [0, 2**64), got {seed}")
    return np.array([seed & 0xFFFFFFFF, seed >> 32], dtype=np.uint32)


def uniforms(seed: int, stream, n_draws: int, tag: int = 0, attempt=0) -> np.ndarray:
    """Uniform doubles in [0, 1) with 53-bit resolution.

    Row ``i`` of the result is the stream identified by
    ``(seed, stream[i], attempt[i], tag)``; column ``j`` is its ``j``-th draw.
    Each draw consumes two 32-bit words.

    Parameters
    ----------
    seed : int
        Master seed (Philox key).
    stream : array_like of int
        Stream (session) indices, each < 2**32.
    n_draws : int
        Number of doubles per stream.
    tag : int
        Purpose tag separating unrelated uses of the same seed.
    attempt : int or array_like of int
        Retry counter, so a stream can be redrawn deterministically.
    """
    stream = np.atleast_1d(np.asarray(stream, dtype=np.uint64))
    attempt = np.broadcast_to(np.asarray(attempt, dtype=np.uint64), stream.shape)
    n_blocks = -(-n_draws // 2)
    blocks = np.arange(n_blocks, dtype=np.uint64)
    ctr = np.empty(stream.shape + (n_blocks, 4), dtype=np.uint32)
    ctr[..., 0] = blocks
    ctr[..., 1] = (stream & _MASK32)[..., None]
    ctr[..., 2] = (attempt & _MASK32)[..., None]
    ctr[..., 3] = np.uint32(tag)
    words = philox4x32(ctr, seed_to_key(seed)).reshape(stream.shape + (2 * n_blocks, 2))
    hi = (words[..., 0] >> np.uint32(5)).astype(np.float64)
    lo = (words[..., 1] >> np.uint32(6)).astype(np.float64)
    return ((hi * 67108864.0 + lo) / 9007199254740992.0)[..., :n_draws]
