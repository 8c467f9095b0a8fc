"""Weighted attribute fusion classifier: eigen, DCT, histogram and intensity
features, z-scored per block, scaled by attribute weights and classified by
a one-vs-one SMO SVM."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_images
from .eigen import EigenModel, fit_eigen_model, project_eigen
from .fusion import FeatureNormalizer, WeightSet, fit_normalizer, fuse
from .statfeat import HistogramConfig, _histograms, _intensities
from .svm import KernelSpec, MulticlassSvmModel, predict_multiclass, train_one_vs_one
from .transform import DctFeatureConfig, _block_coefficients


@dataclass(frozen=True, eq=False)
class AttributeBlocks:
    """The four per-image attribute matrices F1..F4 (one row per image)."""

    eigen: np.ndarray
    dct: np.ndarray
    histogram: np.ndarray
    intensity: np.ndarray

    def as_tuple(self):
        return (self.eigen, self.dct, self.histogram, self.intensity)

    @property
    def lengths(self) -> tuple[int, int, int, int]:
        return tuple(b.shape[1] for b in self.as_tuple())


def weight_independent_features(images: np.ndarray, dct: DctFeatureConfig, hist: HistogramConfig):
    """F2, F3 and F4 depend on the image alone."""
    return _block_coefficients(images, dct), _histograms(images, hist), _intensities(images)


def extract_blocks(images, eigen: EigenModel, dct: DctFeatureConfig, hist: HistogramConfig) -> AttributeBlocks:
    images = check_images(images)
    f1 = project_eigen(images.reshape(images.shape[0], -1), eigen)
    f2, f3, f4 = weight_independent_features(images, dct, hist)
    return AttributeBlocks(f1, f2, f3, f4)


def fuse_blocks(blocks: AttributeBlocks, normalizer: FeatureNormalizer | None, weights: WeightSet) -> np.ndarray:
    return fuse(*blocks.as_tuple(), normalizer, weights).values


class WeightedFusionClassifier(ClassifierMixin, BaseEstimator):
    """Face recogniser over weighted, concatenated attribute blocks.

    ``fit`` takes faces as an (n, 48, 48) stack, an (n, 2304) matrix, a
    sequence of FaceImage or a Dataset (labels then come from the dataset
    when ``y`` is None).

    Parameters
    ----------
    weights : tuple of 4 floats or WeightSet, default=(1, 1, 1, 1)
        Priorities of the eigen, DCT, histogram and intensity blocks.
    n_components : int, default=40
        Eigenfaces kept; clipped to ``n_train - 1``.
    block_size, coeffs_per_block : int, default=8, 6
    bins : int, default=32
    normalize : bool, default=True
        z-score every block on the training set before weighting.
    kernel, C, gamma, degree, coef0, tol, max_passes
        Passed to the one-vs-one SMO SVM.
    """

    def __init__(
        self,
        weights=(1.0, 1.0, 1.0, 1.0),
        n_components=40,
        block_size=8,
        coeffs_per_block=6,
        bins=32,
        normalize=True,
        kernel="linear",
        C=10.0,
        gamma=None,
        degree=3,
        coef0=1.0,
        tol=1e-3,
        max_passes=None,
    ):
        self.weights = weights
        self.n_components = n_components
        self.block_size = block_size
        self.coeffs_per_block = coeffs_per_block
        self.bins = bins
        self.normalize = normalize
        self.kernel = kernel
        self.C = C
        self.gamma = gamma
        self.degree = degree
        self.coef0 = coef0
        self.tol = tol
        self.max_passes = max_passes

    def _weight_set(self) -> WeightSet:
        w = self.weights
        if isinstance(w, WeightSet):
            return w
        if isinstance(w, str):
            return WeightSet.parse(w)
        return WeightSet(*w)

    def _configs(self):
        return DctFeatureConfig(self.block_size, self.coeffs_per_block), HistogramConfig(self.bins)

    def _kernel_spec(self, n_features: int) -> KernelSpec:
        gamma = self.gamma if self.gamma is not None else 1.0 / n_features
        return KernelSpec(self.kernel, gamma=gamma, degree=self.degree, offset=self.coef0)

    def fit(self, X, y=None):
        if y is None:
            labels = getattr(X, "labels", None)
            if labels is None:
                raise ValueError("y is required unless X is a Dataset")
            y = labels
        images = check_images(X)
        y = np.asarray(y)
        if y.shape != (images.shape[0],):
            raise ValueError("y must have one label per image")
        n = images.shape[0]
        if n < 2:
            raise ValueError("need at least 2 training images")
        weights = self._weight_set()
        dct, hist = self._configs()

        k = min(int(self.n_components), n - 1)
        self.eigen_model_ = fit_eigen_model(images.reshape(n, -1), k)
        blocks = extract_blocks(images, self.eigen_model_, dct, hist)
        self.normalizer_ = fit_normalizer(blocks.as_tuple()) if self.normalize else None
        fused = fuse_blocks(blocks, self.normalizer_, weights)
        self.kernel_ = self._kernel_spec(fused.shape[1])
        self.svm_model_ = train_one_vs_one(fused, y, self.C, self.kernel_, self.tol, self.max_passes)
        self.classes_ = np.asarray(self.svm_model_.classes)
        self.block_lengths_ = blocks.lengths
        self.n_features_in_ = images.shape[1] * images.shape[2]
        return self

    def transform(self, X) -> np.ndarray:
        """Fused, weighted feature vectors as seen by the SVM."""
        check_is_fitted(self, "svm_model_")
        dct, hist = self._configs()
        blocks = extract_blocks(X, self.eigen_model_, dct, hist)
        return fuse_blocks(blocks, self.normalizer_, self._weight_set())

    def predict(self, X):
        return predict_multiclass(self.svm_model_, self.transform(X))
