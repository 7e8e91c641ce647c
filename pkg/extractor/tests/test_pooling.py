import numpy as np
import pytest

from occlust_extractor.pooling import mean_pool


def test_mean_of_two_tokens():
    pooled = mean_pool([[1.0, 0.0], [0.0, 1.0]], [True, True])
    np.testing.assert_allclose(pooled, [0.5, 0.5])


def test_mask_excludes_token():
    pooled = mean_pool([[1.0, 0.0], [0.0, 1.0]], [True, False])
    np.testing.assert_allclose(pooled, [1.0, 0.0])


def test_single_token_identity():
    pooled = mean_pool([[2.0, -3.0, 0.5]], [True])
    np.testing.assert_allclose(pooled, [2.0, -3.0, 0.5])


def test_all_masked_rejected():
    with pytest.raises(ValueError):
        mean_pool([[1.0, 0.0]], [False])


def test_mask_length_checked():
    with pytest.raises(ValueError):
        mean_pool([[1.0, 0.0]], [True, False])
