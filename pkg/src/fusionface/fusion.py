"""Per-attribute normalisation and weighted concatenation of feature blocks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

STD_FLOOR = 1e-8
N_ATTRIBUTES = 4


@dataclass(frozen=True)
class WeightSet:
    """Scalar priorities for the eigen, DCT, histogram and intensity blocks."""

    w1: float = 1.0
    w2: float = 1.0
    w3: float = 1.0
    w4: float = 1.0

    def __post_init__(self):
        for name in ("w1", "w2", "w3", "w4"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be a finite non-negative number, got {v!r}")
            object.__setattr__(self, name, float(v))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.w1, self.w2, self.w3, self.w4)

    @property
    def usable(self) -> bool:
        return any(v > 0 for v in self.as_tuple())

    @classmethod
    def parse(cls, text: str) -> "WeightSet":
        """Parse four comma-separated decimals such as ``"0.5,1,0,0"``."""
        parts = [p.strip() for p in str(text).split(",")]
        if len(parts) != N_ATTRIBUTES:
            raise ValueError(f"expected 4 comma-separated weights, got {text!r}")
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise ValueError(f"weights must be decimal numbers, got {text!r}") from None
        return cls(*values)

    def __str__(self) -> str:
        return ",".join(f"{v:g}" for v in self.as_tuple())


@dataclass(frozen=True, eq=False)
class FeatureNormalizer:
    means: tuple[np.ndarray, ...]
    stds: tuple[np.ndarray, ...]

    @property
    def block_lengths(self) -> tuple[int, ...]:
        return tuple(m.shape[0] for m in self.means)

    @property
    def n_features(self) -> int:
        return sum(self.block_lengths)


@dataclass(frozen=True, eq=False)
class FusedVector:
    values: np.ndarray  # (f1+f2+f3+f4,) or (n, f1+f2+f3+f4)
    block_lengths: tuple[int, ...]

    def block(self, i: int) -> np.ndarray:
        start = sum(self.block_lengths[:i])
        return self.values[..., start : start + self.block_lengths[i]]


def _as_blocks(blocks: Sequence) -> list[np.ndarray]:
    if len(blocks) != N_ATTRIBUTES:
        raise ValueError(f"expected {N_ATTRIBUTES} attribute blocks, got {len(blocks)}")
    out = [np.asarray(b, dtype=np.float64) for b in blocks]
    for b in out:
        if not np.all(np.isfinite(b)):
            raise ValueError("feature blocks contain NaN or infinite values")
    return out


def fit_normalizer(blocks: Sequence) -> FeatureNormalizer:
    """Per-dimension mean and population std of each block.

    ``blocks`` holds four matrices (n x f_i) for F1..F4 over the same n
    training images. Stds below 1e-8 are clamped.
    """
    mats = _as_blocks(blocks)
    n = None
    for m in mats:
        if m.ndim != 2:
            raise ValueError("each block must be an n x f matrix")
        if n is None:
            n = m.shape[0]
        elif m.shape[0] != n:
            raise ValueError("blocks disagree on the number of rows")
    if n < 2:
        raise ValueError("need at least 2 rows to fit a normalizer")
    means = tuple(m.mean(axis=0) for m in mats)
    stds = tuple(np.maximum(m.std(axis=0), STD_FLOOR) for m in mats)
    return FeatureNormalizer(means=means, stds=stds)


def fuse(f1, f2, f3, f4, norm: FeatureNormalizer | None, w: WeightSet) -> FusedVector:
    """z-score each block (skipped when ``norm`` is None), scale it by its
    weight and concatenate in order F1, F2, F3, F4.

    Works on single vectors or on matrices with one image per row.
    """
    blocks = _as_blocks((f1, f2, f3, f4))
    if norm is not None:
        for i, (b, length) in enumerate(zip(blocks, norm.block_lengths)):
            if b.shape[-1] != length:
                raise ValueError(f"block F{i + 1} has length {b.shape[-1]}, normalizer expects {length}")
    if len({b.ndim for b in blocks}) != 1:
        raise ValueError("blocks must all be vectors or all be matrices")
    weights = w.as_tuple()
    parts = []
    for i, b in enumerate(blocks):
        if norm is not None:
            b = (b - norm.means[i]) / norm.stds[i]
        parts.append(weights[i] * b)
    values = np.concatenate(parts, axis=-1)
    return FusedVector(values=values, block_lengths=tuple(b.shape[-1] for b in blocks))
