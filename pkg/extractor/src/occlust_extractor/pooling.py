"""Mask-aware mean pooling of token-level hidden states."""

import numpy as np


def mean_pool(token_vectors, mask):
    """Arithmetic mean of the unmasked token vectors.

    Parameters
    ----------
    token_vectors : (t, h) array
        Final-layer hidden states, one row per token.
    mask : (t,) boolean array
        True for tokens that count (attention mask).
    """
    vectors = np.asarray(token_vectors, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if vectors.ndim != 2:
        raise ValueError(f"token_vectors must be 2-D, got ndim={vectors.ndim}")
    if mask.shape != (vectors.shape[0],):
        raise ValueError("mask length must match the token count")
    if not mask.any():
        raise ValueError("cannot pool an all-masked sequence")
    return vectors[mask].mean(axis=0)
