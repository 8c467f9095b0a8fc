"""Orthonormal DCT-II and its inverse, zigzag ordering and block DCT features."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_images
from .dataset import CANONICAL_SIZE


@dataclass(frozen=True)
class DctFeatureConfig:
    block_size: int = 8
    coeffs_per_block: int = 6

    def __post_init__(self):
        b, c = self.block_size, self.coeffs_per_block
        if not isinstance(b, int) or b < 1 or CANONICAL_SIZE % b:
            raise ValueError(f"block_size must divide {CANONICAL_SIZE}, got {b!r}")
        if not isinstance(c, int) or not 1 <= c <= b * b:
            raise ValueError(f"coeffs_per_block must be in 1..{b * b}, got {c!r}")

    @property
    def n_features(self) -> int:
        return (CANONICAL_SIZE // self.block_size) ** 2 * self.coeffs_per_block


def alpha_coef(u: int, N: int) -> float:
    if not 0 <= u < N:
        raise ValueError(f"u must be in 0..{N - 1}, got {u}")
    return math.sqrt(1.0 / N) if u == 0 else math.sqrt(2.0 / N)


@lru_cache(maxsize=32)
def dct_matrix(N: int) -> np.ndarray:
    """``M[u, x] = alpha(u) * cos((2x + 1) u pi / 2N)``; orthogonal, so the
    inverse transform is ``M.T``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    u = np.arange(N)[:, None]
    x = np.arange(N)[None, :]
    M = np.cos((2 * x + 1) * u * np.pi / (2 * N))
    M *= np.array([alpha_coef(k, N) for k in range(N)])[:, None]
    M.setflags(write=False)
    return M


def _as_sequence(f) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 1 or f.size == 0:
        raise ValueError("expected a non-empty 1-D sequence")
    return f


def _as_square(block) -> np.ndarray:
    block = np.asarray(block, dtype=np.float64)
    if block.ndim != 2 or block.shape[0] != block.shape[1] or block.size == 0:
        raise ValueError(f"expected a non-empty square matrix, got shape {block.shape}")
    return block


def dct_1d(f) -> np.ndarray:
    f = _as_sequence(f)
    return dct_matrix(f.size) @ f


def idct_1d(C) -> np.ndarray:
    C = _as_sequence(C)
    return dct_matrix(C.size).T @ C


def dct_2d(block) -> np.ndarray:
    """Separable 2-D DCT: 1-D transforms along rows, then along columns."""
    block = _as_square(block)
    M = dct_matrix(block.shape[0])
    return M @ block @ M.T


def idct_2d(C) -> np.ndarray:
    C = _as_square(C)
    M = dct_matrix(C.shape[0])
    return M.T @ C @ M


@lru_cache(maxsize=32)
def zigzag_indices(N: int) -> tuple[tuple[int, int], ...]:
    """JPEG zigzag order over an N x N grid: (0,0), (0,1), (1,0), (2,0), (1,1), ..."""
    order = []
    for s in range(2 * N - 1):
        diag = [(i, s - i) for i in range(max(0, s - N + 1), min(s, N - 1) + 1)]
        # even anti-diagonals run bottom-left to top-right
        order.extend(reversed(diag) if s % 2 == 0 else diag)
    return tuple(order)


def _block_coefficients(images: np.ndarray, cfg: DctFeatureConfig) -> np.ndarray:
    n = images.shape[0]
    b = cfg.block_size
    nb = CANONICAL_SIZE // b
    # (n, block_row, y, block_col, x) -> (n, block_row, block_col, y, x)
    blocks = images.reshape(n, nb, b, nb, b).transpose(0, 1, 3, 2, 4)
    M = dct_matrix(b)
    coeffs = np.einsum("uy,nijyx,vx->nijuv", M, blocks, M, optimize=True)
    zz = zigzag_indices(b)[: cfg.coeffs_per_block]
    rows = [u for u, _ in zz]
    cols = [v for _, v in zz]
    return coeffs[:, :, :, rows, cols].reshape(n, nb * nb * cfg.coeffs_per_block)


def extract_dct_features(img, cfg: DctFeatureConfig | None = None) -> np.ndarray:
    """Leading zigzag coefficients of every non-overlapping block, blocks in
    row-major order."""
    cfg = cfg or DctFeatureConfig()
    batch = check_images([getattr(img, "pixels", img)])
    return _block_coefficients(batch, cfg)[0]


class DCTFeatures(TransformerMixin, BaseEstimator):
    """Block DCT features (stateless).

    Parameters
    ----------
    block_size : int, default=8
    coeffs_per_block : int, default=6
    """

    def __init__(self, block_size: int = 8, coeffs_per_block: int = 6):
        self.block_size = block_size
        self.coeffs_per_block = coeffs_per_block

    def fit(self, X=None, y=None):
        self.config_ = DctFeatureConfig(self.block_size, self.coeffs_per_block)
        return self

    def transform(self, X):
        cfg = DctFeatureConfig(self.block_size, self.coeffs_per_block)
        return _block_coefficients(check_images(X), cfg)

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.requires_fit = False
        return tags
