"""Gray-level histogram and global intensity statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_images

GRAY_LEVELS = 256


@dataclass(frozen=True)
class HistogramConfig:
    bins: int = 32

    def __post_init__(self):
        if not isinstance(self.bins, int) or not 1 <= self.bins <= GRAY_LEVELS or GRAY_LEVELS % self.bins:
            raise ValueError(f"bins must divide {GRAY_LEVELS}, got {self.bins!r}")

    @property
    def width(self) -> int:
        return GRAY_LEVELS // self.bins

    def midpoints(self) -> np.ndarray:
        """Bin centres rescaled by 1/256 into [0, 1]."""
        return (np.arange(self.bins) + 0.5) * self.width / GRAY_LEVELS


def quantize(pixels) -> np.ndarray:
    """Truncate real gray levels to integers 0..255."""
    return np.clip(np.floor(np.asarray(pixels, dtype=np.float64)), 0, GRAY_LEVELS - 1).astype(np.int64)


def _histograms(images: np.ndarray, cfg: HistogramConfig) -> np.ndarray:
    n = images.shape[0]
    q = quantize(images).reshape(n, -1) // cfg.width
    counts = np.zeros((n, cfg.bins), dtype=np.int64)
    np.add.at(counts, (np.repeat(np.arange(n), q.shape[1]), q.ravel()), 1)
    probs = counts / q.shape[1]
    return np.hstack([probs, np.broadcast_to(cfg.midpoints(), (n, cfg.bins))])


def histogram_features(img, cfg: HistogramConfig | None = None) -> np.ndarray:
    """Bin probabilities ``n_k / n`` followed by the scaled bin mid-values."""
    cfg = cfg or HistogramConfig()
    return _histograms(check_images([getattr(img, "pixels", img)]), cfg)[0]


def _intensities(images: np.ndarray) -> np.ndarray:
    n = images.shape[0]
    q = quantize(images).reshape(n, -1)
    mean = q.mean(axis=1)
    srt = np.sort(q, axis=1)
    m = q.shape[1]
    if m % 2:
        median = srt[:, m // 2].astype(np.float64)
    else:
        median = (srt[:, m // 2 - 1] + srt[:, m // 2]) / 2.0
    counts = np.zeros((n, GRAY_LEVELS), dtype=np.int64)
    np.add.at(counts, (np.repeat(np.arange(n), m), q.ravel()), 1)
    mode = np.argmax(counts, axis=1)  # first maximum == lowest level on ties
    return np.column_stack([mean, median, mode]) / 255.0


def intensity_features(img) -> np.ndarray:
    """(mean, median, mode) of the quantized gray levels, each divided by 255."""
    return _intensities(check_images([getattr(img, "pixels", img)]))[0]


class HistogramFeatures(TransformerMixin, BaseEstimator):
    def __init__(self, bins: int = 32):
        self.bins = bins

    def fit(self, X=None, y=None):
        self.config_ = HistogramConfig(self.bins)
        return self

    def transform(self, X):
        return _histograms(check_images(X), HistogramConfig(self.bins))

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.requires_fit = False
        return tags


class IntensityFeatures(TransformerMixin, BaseEstimator):
    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        return _intensities(check_images(X))

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.requires_fit = False
        return tags
