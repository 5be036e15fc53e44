"""Pure-numpy Hamming kernels, the fallback when the compiled core is absent.

Same contracts as the Cython module ``_hamming``: inputs are C-contiguous
uint64 word arrays with canonical zero padding, outputs are int64 distances.
"""

import numpy as np

if hasattr(np, "bitwise_count"):

    def _popcount(words):
        return np.bitwise_count(words)

else:  # pragma: no cover - numpy < 2.0
    _BYTE_POPCOUNT = np.array(
        [bin(i).count("1") for i in range(256)], dtype=np.uint8
    )

    def _popcount(words):
        b = np.ascontiguousarray(words).view(np.uint8)
        return _BYTE_POPCOUNT[b].reshape(*words.shape, 8).sum(axis=-1)


def distances_one(db_words: np.ndarray, q_words: np.ndarray) -> np.ndarray:
    """Hamming distances from one query to every database code, (n,)."""
    x = np.bitwise_xor(db_words, q_words[None, :])
    return _popcount(x).sum(axis=1, dtype=np.int64)


def distances_many(db_words: np.ndarray, q_words: np.ndarray) -> np.ndarray:
    """Hamming distances for a query batch, (n_queries, n)."""
    out = np.empty((q_words.shape[0], db_words.shape[0]), dtype=np.int64)
    for i in range(q_words.shape[0]):
        out[i] = distances_one(db_words, q_words[i])
    return out
