"""Input validation shared by the estimators."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils.validation import check_array

from .dataset import CANONICAL_SIZE, N_PIXELS, Dataset, as_image_batch


def check_images(X) -> np.ndarray:
    """Return ``X`` as a finite (n, 48, 48) float array.

    Accepts a Dataset, a sequence of FaceImages, an (n, 48, 48) stack or an
    (n, 2304) matrix of flattened faces.
    """
    if isinstance(X, Dataset):
        return X.images()
    if isinstance(X, np.ndarray) and X.ndim == 2:
        X = check_array(X, dtype=np.float64)
    arr = as_image_batch(X)
    if not np.all(np.isfinite(arr)):
        raise ValueError("images contain NaN or infinite values")
    return arr


def check_flat_images(X) -> np.ndarray:
    return check_images(X).reshape(-1, N_PIXELS)


def check_matrix(X, *, min_samples: int = 1, name: str = "X") -> np.ndarray:
    X = check_array(X, dtype=np.float64, ensure_min_samples=min_samples, input_name=name)
    return X


def check_vector(x, length: int | None = None, name: str = "x") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {x.shape}")
    if length is not None and x.shape[0] != length:
        raise ValueError(f"{name} has length {x.shape[0]}, expected {length}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains NaN or infinite values")
    return x


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_image_shape(img) -> np.ndarray:
    arr = np.asarray(getattr(img, "pixels", img), dtype=np.float64)
    if arr.shape != (CANONICAL_SIZE, CANONICAL_SIZE):
        raise ValueError(f"expected a 48x48 image, got shape {arr.shape}")
    return arr
