"""Eigenface (PCA) features.

The covariance of ``n`` training faces in 2304-dimensional pixel space has
rank at most ``n - 1``, so the eigenvectors are obtained from the ``n x n``
Gram matrix of the centred data (the snapshot method) and mapped back to
pixel space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_flat_images, check_matrix

MAGIC = "EIGENMODEL/1"


@dataclass(frozen=True, eq=False)
class EigenModel:
    mean: np.ndarray  # (d,)
    basis: np.ndarray  # (k, d), orthonormal rows
    eigenvalues: np.ndarray  # (k,), descending

    @property
    def n_components(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def _fix_sign(v: np.ndarray) -> np.ndarray:
    return -v if v[np.argmax(np.abs(v))] < 0 else v


def _orthonormal_complement(rows: list[np.ndarray], d: int, count: int) -> list[np.ndarray]:
    """Extend ``rows`` by ``count`` unit vectors drawn from the standard basis
    e_0, e_1, ... after projecting out everything already present."""
    out = []
    j = 0
    while len(out) < count:
        if j >= d:
            raise RuntimeError("cannot complete basis")
        v = np.zeros(d)
        v[j] = 1.0
        j += 1
        for _ in range(2):
            for r in rows + out:
                v -= (r @ v) * r
        norm = np.linalg.norm(v)
        if norm > 0.5:
            out.append(v / norm)
    return out


def fit_eigen_model(train, k: int) -> EigenModel:
    """Fit the top-``k`` principal directions of ``train`` (n x d).

    Covariance is normalised by ``1/n``. Each basis row is signed so that its
    largest-magnitude component is positive. Directions with zero variance
    are completed deterministically from the standard basis.
    """
    X = check_matrix(train, name="train")
    n, d = X.shape
    if n < 2:
        raise ValueError("need at least 2 training rows")
    if isinstance(k, bool) or int(k) != k or not 1 <= k <= min(n - 1, d):
        raise ValueError(f"k must be in 1..{min(n - 1, d)}, got {k!r}")
    k = int(k)

    mean = X.mean(axis=0)
    A = X - mean
    gram = (A @ A.T) / n
    evals, evecs = np.linalg.eigh(gram)
    order = np.argsort(-evals, kind="stable")
    evals, evecs = evals[order], evecs[:, order]

    scale = max(evals[0], 0.0)
    cutoff = scale * max(n, d) * np.finfo(float).eps * 16

    rows: list[np.ndarray] = []
    values: list[float] = []
    for i in range(k):
        lam = evals[i]
        if lam <= cutoff:
            break
        v = A.T @ evecs[:, i] / np.sqrt(n * lam)
        rows.append(v)
        values.append(lam)

    if rows:
        # one QR pass removes the round-off that accumulates for small eigenvalues
        q, r = np.linalg.qr(np.array(rows).T)
        q = q * np.sign(np.diag(r))
        rows = list(q.T)
    rows.extend(_orthonormal_complement(rows, d, k - len(rows)))
    values.extend([0.0] * (k - len(values)))

    basis = np.array([_fix_sign(v) for v in rows])
    eigenvalues = np.array(values)
    eigenvalues[eigenvalues < 0] = 0.0
    for arr in (mean, basis, eigenvalues):
        arr.setflags(write=False)
    return EigenModel(mean=mean, basis=basis, eigenvalues=eigenvalues)


def project_eigen(x, model: EigenModel) -> np.ndarray:
    """Eigenfeatures ``basis @ (x - mean)``; accepts one vector or a matrix of rows."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.dim:
        raise ValueError(f"expected dimension {model.dim}, got {x.shape[-1]}")
    return (x - model.mean) @ model.basis.T


def reconstruct(f1, model: EigenModel) -> np.ndarray:
    f1 = np.asarray(f1, dtype=np.float64)
    if f1.shape[-1] != model.n_components:
        raise ValueError(f"expected {model.n_components} coefficients, got {f1.shape[-1]}")
    return model.mean + f1 @ model.basis


def save_eigen_model(model: EigenModel, fh) -> None:
    """Write ``model`` as text; floats use ``repr`` so values round-trip exactly."""
    fmt = lambda arr: " ".join(repr(float(v)) for v in arr)  # noqa: E731
    fh.write(f"{MAGIC}\n")
    fh.write(f"dim {model.dim}\nk {model.n_components}\n")
    fh.write(f"mean {fmt(model.mean)}\n")
    fh.write(f"eigenvalues {fmt(model.eigenvalues)}\n")
    for row in model.basis:
        fh.write(f"basis {fmt(row)}\n")


def load_eigen_model(fh) -> EigenModel:
    lines = fh.read().splitlines()
    if not lines or lines[0] != MAGIC:
        raise ValueError(f"not an {MAGIC} file")
    fields: dict[str, list[str]] = {}
    basis = []
    for line in lines[1:]:
        key, _, rest = line.partition(" ")
        if key == "basis":
            basis.append([float(t) for t in rest.split()])
        else:
            fields[key] = rest.split()
    d, k = int(fields["dim"][0]), int(fields["k"][0])
    mean = np.array([float(t) for t in fields["mean"]])
    eigenvalues = np.array([float(t) for t in fields.get("eigenvalues", [])])
    basis_arr = np.array(basis).reshape(k, d)
    if mean.shape != (d,) or eigenvalues.shape != (k,):
        raise ValueError("inconsistent EIGENMODEL dimensions")
    return EigenModel(mean=mean, basis=basis_arr, eigenvalues=eigenvalues)


class EigenFeatures(TransformerMixin, BaseEstimator):
    """Project faces onto the leading eigenfaces of the training set.

    Parameters
    ----------
    n_components : int, default=40
        Number of eigenfaces kept. Clipped to ``n_samples - 1`` when
        ``clip_components`` is true.
    clip_components : bool, default=True
    """

    def __init__(self, n_components: int = 40, clip_components: bool = True):
        self.n_components = n_components
        self.clip_components = clip_components

    def fit(self, X, y=None):
        X = check_flat_images(X)
        k = self.n_components
        if self.clip_components:
            k = min(k, X.shape[0] - 1)
        self.model_ = fit_eigen_model(X, k)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        return project_eigen(check_flat_images(X), self.model_)

    def inverse_transform(self, F):
        check_is_fitted(self, "model_")
        return reconstruct(F, self.model_)

    @property
    def eigenvalues_(self):
        check_is_fitted(self, "model_")
        return self.model_.eigenvalues


__all__ = [
    "EigenModel",
    "EigenFeatures",
    "fit_eigen_model",
    "project_eigen",
    "reconstruct",
    "save_eigen_model",
    "load_eigen_model",
]
