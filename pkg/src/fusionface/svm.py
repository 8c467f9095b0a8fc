"""Soft-margin kernel SVM trained by sequential minimal optimization (SMO),
with one-vs-one multiclass voting.

The binary decision function is ``f(x) = b + sum_i dual_coeff_i K(sv_i, x)``
where ``dual_coeff_i = alpha_i * y_i``. For the linear kernel this is the
hyperplane ``<w, x> + b`` with ``w = sum_i dual_coeff_i sv_i``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import ConvergenceWarning
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

MAGIC = "SVMMODEL/1"
KERNELS = ("linear", "rbf", "polynomial")
# rank-deficient linear problems can need thousands of sweeps to close the KKT gap
DEFAULT_MIN_PASSES = 5000


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "linear"
    gamma: float = 1.0
    degree: int = 3
    offset: float = 1.0

    def __post_init__(self):
        kind = "polynomial" if self.kind == "poly" else self.kind
        object.__setattr__(self, "kind", kind)
        if kind not in KERNELS:
            raise ValueError(f"unknown kernel {self.kind!r}; choose from {KERNELS}")
        if kind == "rbf" and not (np.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"rbf gamma must be positive, got {self.gamma!r}")
        if kind == "polynomial":
            if isinstance(self.degree, bool) or int(self.degree) != self.degree or self.degree < 1:
                raise ValueError(f"polynomial degree must be an integer >= 1, got {self.degree!r}")
            if not (np.isfinite(self.offset) and self.offset >= 0):
                raise ValueError(f"polynomial offset must be >= 0, got {self.offset!r}")

    def gram(self, X, Z) -> np.ndarray:
        """Kernel matrix between the rows of ``X`` and ``Z``."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
        if X.shape[1] != Z.shape[1]:
            raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Z.shape[1]}")
        if self.kind == "linear":
            return X @ Z.T
        if self.kind == "polynomial":
            return (X @ Z.T + self.offset) ** int(self.degree)
        sq = (X * X).sum(1)[:, None] + (Z * Z).sum(1)[None, :] - 2.0 * (X @ Z.T)
        return np.exp(-self.gamma * np.maximum(sq, 0.0))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "gamma": float(self.gamma), "degree": int(self.degree),
                "offset": float(self.offset)}


def kernel_eval(x, z, k: KernelSpec) -> float:
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.shape != z.shape or x.ndim != 1:
        raise ValueError(f"kernel arguments must be equal-length vectors, got {x.shape} and {z.shape}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(z))):
        raise ValueError("kernel arguments must be finite")
    if k.kind == "linear":
        return float(x @ z)
    if k.kind == "polynomial":
        return float((x @ z + k.offset) ** int(k.degree))
    d = x - z
    return float(np.exp(-k.gamma * (d @ d)))


@dataclass(frozen=True, eq=False)
class BinarySvmModel:
    support_vectors: np.ndarray  # (m, d)
    dual_coeffs: np.ndarray  # (m,), alpha_i * y_i
    bias: float
    kernel: KernelSpec
    c_param: float
    converged: bool = True
    n_passes: int = 0
    support_indices: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    @property
    def alphas(self) -> np.ndarray:
        return np.abs(self.dual_coeffs)

    def hyperplane(self) -> np.ndarray:
        """Explicit weight vector; only meaningful for the linear kernel."""
        if self.kernel.kind != "linear":
            raise ValueError("explicit hyperplane exists only for the linear kernel")
        return self.dual_coeffs @ self.support_vectors


def _bias(alpha, y, g, C) -> float:
    """Average implied bias over free multipliers; midpoint of the feasible
    interval when every multiplier sits at a bound."""
    free = (alpha > 0) & (alpha < C)
    implied = y - g
    if free.any():
        return float(implied[free].mean())
    lower_mask = ((alpha <= 0) & (y > 0)) | ((alpha >= C) & (y < 0))
    upper_mask = ((alpha <= 0) & (y < 0)) | ((alpha >= C) & (y > 0))
    lo = implied[lower_mask].max() if lower_mask.any() else None
    hi = implied[upper_mask].min() if upper_mask.any() else None
    if lo is None:
        return float(hi)
    if hi is None:
        return float(lo)
    return float((lo + hi) / 2.0)


class _Smo:
    eps = 1e-12

    def __init__(self, K, y, C, tol):
        self.K = K
        self.y = y
        self.C = C
        self.tol = tol
        n = len(y)
        self.alpha = np.zeros(n)
        self.g = np.zeros(n)  # sum_j alpha_j y_j K_ij, without the bias
        self.b = _bias(self.alpha, y, self.g, C)

    def errors(self) -> np.ndarray:
        return self.g + self.b - self.y

    def violates(self, i, E_i) -> bool:
        r = self.y[i] * E_i
        a = self.alpha[i]
        return (r < -self.tol and a < self.C) or (r > self.tol and a > 0)

    def take_step(self, i1, i2, E) -> bool:
        if i1 == i2:
            return False
        C, K, y = self.C, self.K, self.y
        a1, a2 = self.alpha[i1], self.alpha[i2]
        y1, y2 = y[i1], y[i2]
        E1, E2 = E[i1], E[i2]
        s = y1 * y2
        if y1 != y2:
            L, H = max(0.0, a2 - a1), min(C, C + a2 - a1)
        else:
            L, H = max(0.0, a1 + a2 - C), min(C, a1 + a2)
        if H - L <= self.eps * C:
            return False
        k11, k22, k12 = K[i1, i1], K[i2, i2], K[i1, i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 0:
            a2_new = min(max(a2 + y2 * (E1 - E2) / eta, L), H)
        else:
            # objective along the constraint line is linear: compare end points
            f1 = y1 * (self.g[i1] - y1) - a1 * k11 - s * a2 * k12
            f2 = y2 * (self.g[i2] - y2) - s * a1 * k12 - a2 * k22
            L1, H1 = a1 + s * (a2 - L), a1 + s * (a2 - H)
            obj_L = L1 * f1 + L * f2 + 0.5 * L1 * L1 * k11 + 0.5 * L * L * k22 + s * L * L1 * k12
            obj_H = H1 * f1 + H * f2 + 0.5 * H1 * H1 * k11 + 0.5 * H * H * k22 + s * H * H1 * k12
            if obj_L < obj_H - self.eps:
                a2_new = L
            elif obj_L > obj_H + self.eps:
                a2_new = H
            else:
                a2_new = a2
        if abs(a2_new - a2) < self.eps * (a2_new + a2 + self.eps):
            return False
        a1_new = a1 + s * (a2 - a2_new)
        a1_new, a2_new = self._snap(a1_new), self._snap(a2_new)
        self.g += (a1_new - a1) * y1 * K[i1] + (a2_new - a2) * y2 * K[i2]
        self.alpha[i1], self.alpha[i2] = a1_new, a2_new
        self.b = _bias(self.alpha, self.y, self.g, self.C)
        return True

    def _snap(self, a):
        if a < 1e-12 * self.C:
            return 0.0
        if a > self.C * (1 - 1e-12):
            return self.C
        return a

    def examine(self, i) -> bool:
        E = self.errors()
        if not self.violates(i, E[i]):
            return False
        y, a, C = self.y, self.alpha, self.C
        can_raise = ((y > 0) & (a < C)) | ((y < 0) & (a > 0))  # y_t * alpha_t may grow
        can_lower = ((y > 0) & (a > 0)) | ((y < 0) & (a < C))
        # only partners forming a violating pair with i move the dual uphill;
        # E_i < 0 means i belongs to the "raise" side of the pair
        if E[i] < 0:
            partners = can_lower & (E > E[i])
        else:
            partners = can_raise & (E < E[i])
        partners[i] = False
        idx = np.flatnonzero(partners)
        gaps = np.abs(E[i] - E[idx])
        for j in idx[np.lexsort((idx, -gaps))]:  # largest gap, then lowest index
            if self.take_step(i, int(j), E):
                return True
        return False

    def run(self, max_passes):
        n = len(self.y)
        for p in range(1, max_passes + 1):
            changed = 0
            for i in range(n):
                changed += self.examine(i)
            if changed == 0:
                E = self.errors()
                return not any(self.violates(i, E[i]) for i in range(n)), p
        E = self.errors()
        return not any(self.violates(i, E[i]) for i in range(n)), max_passes


def smo_train_binary(
    X,
    y,
    C: float = 10.0,
    kernel: KernelSpec | None = None,
    tol: float = 1e-3,
    max_passes: int | None = None,
    gram: np.ndarray | None = None,
) -> BinarySvmModel:
    """Solve the soft-margin SVM dual with SMO.

    First multipliers are scanned in ascending index order; the partner is
    the index maximising ``|E_1 - E_2|`` (lowest index on ties), then every
    partner index in turn if that makes no progress. Partners are restricted
    to multipliers that form a violating pair with the first one. A model
    that hits ``max_passes`` full sweeps (default ``max(10 * n, 5000)``) is
    returned with ``converged=False`` and a ConvergenceWarning.

    ``gram`` may carry a precomputed kernel matrix of ``X``.
    """
    kernel = kernel or KernelSpec()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be n x d and y must have n entries")
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least 2 training points")
    if not np.all(np.isfinite(X)):
        raise ValueError("training features must be finite")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("binary labels must be -1 or +1")
    if not ((y > 0).any() and (y < 0).any()):
        raise ValueError("both classes must be present (got a single-class problem)")
    if not C > 0:
        raise ValueError("C must be positive")
    if not tol > 0:
        raise ValueError("tol must be positive")
    max_passes = max(10 * n, DEFAULT_MIN_PASSES) if max_passes is None else int(max_passes)

    K = kernel.gram(X, X) if gram is None else np.asarray(gram, dtype=np.float64)
    if K.shape != (n, n):
        raise ValueError(f"gram matrix must be {n}x{n}")
    solver = _Smo(K, y, float(C), float(tol))
    converged, passes = solver.run(max_passes)
    if not converged:
        warnings.warn(
            f"SMO did not satisfy KKT within tol={tol} after {passes} passes",
            ConvergenceWarning,
            stacklevel=2,
        )
    sv = np.flatnonzero(solver.alpha > 0)
    return BinarySvmModel(
        support_vectors=X[sv].copy(),
        dual_coeffs=(solver.alpha * y)[sv],
        bias=solver.b,
        kernel=kernel,
        c_param=float(C),
        converged=converged,
        n_passes=passes,
        support_indices=sv,
    )


def dual_objective(model: BinarySvmModel) -> float:
    """Dual objective ``sum(alpha) - 1/2 sum_ij a_i a_j y_i y_j K_ij`` of a model."""
    K = model.kernel.gram(model.support_vectors, model.support_vectors)
    return float(np.abs(model.dual_coeffs).sum() - 0.5 * model.dual_coeffs @ K @ model.dual_coeffs)


def decision_value(model: BinarySvmModel, x) -> float | np.ndarray:
    """``b + sum_i dual_coeff_i K(sv_i, x)`` for one vector or each row of a matrix."""
    x = np.asarray(x, dtype=np.float64)
    d = model.support_vectors.shape[1]
    if x.shape[-1] != d:
        raise ValueError(f"expected dimension {d}, got {x.shape[-1]}")
    vals = model.kernel.gram(np.atleast_2d(x), model.support_vectors) @ model.dual_coeffs + model.bias
    return float(vals[0]) if x.ndim == 1 else vals


def predict_binary(model: BinarySvmModel, x):
    v = decision_value(model, x)
    return np.where(np.asarray(v) >= 0, 1, -1) if np.ndim(v) else (1 if v >= 0 else -1)


# --------------------------------------------------------------------------
# one-vs-one


@dataclass(frozen=True, eq=False)
class MulticlassSvmModel:
    classes: tuple[int, ...]
    machines: tuple[BinarySvmModel, ...]
    pairs: tuple[tuple[int, int], ...]

    @property
    def n_features(self) -> int:
        return self.machines[0].support_vectors.shape[1]


def train_one_vs_one(
    X,
    labels,
    C: float = 10.0,
    kernel: KernelSpec | None = None,
    tol: float = 1e-3,
    max_passes: int | None = None,
) -> MulticlassSvmModel:
    """One machine per class pair ``a < b`` (``+1`` for ``a``), trained in
    lexicographic pair order on a shared kernel matrix."""
    kernel = kernel or KernelSpec()
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    if X.ndim != 2 or labels.shape != (X.shape[0],):
        raise ValueError("X must be n x d with one label per row")
    classes = tuple(sorted(set(labels.tolist())))
    if len(classes) < 2:
        raise ValueError("need at least 2 classes")
    K = kernel.gram(X, X)
    machines, pairs = [], []
    for a, b in combinations(classes, 2):
        idx = np.flatnonzero((labels == a) | (labels == b))
        y = np.where(labels[idx] == a, 1.0, -1.0)
        try:
            m = smo_train_binary(X[idx], y, C, kernel, tol, max_passes, gram=K[np.ix_(idx, idx)])
        except ValueError as exc:
            raise ValueError(f"training pair ({a}, {b}) failed: {exc}") from exc
        machines.append(m)
        pairs.append((a, b))
    return MulticlassSvmModel(classes=classes, machines=tuple(machines), pairs=tuple(pairs))


def _decision_matrix(model: MulticlassSvmModel, X: np.ndarray) -> np.ndarray:
    return np.column_stack([decision_value(m, X) for m in model.machines])


def _vote(model: MulticlassSvmModel, dv: np.ndarray) -> np.ndarray:
    """Majority vote; ties go to the largest summed |decision value| over the
    machines each tied class won, then to the lowest class id."""
    index = {c: i for i, c in enumerate(model.classes)}
    n, n_classes = dv.shape[0], len(model.classes)
    votes = np.zeros((n, n_classes), dtype=np.int64)
    confidence = np.zeros((n, n_classes))
    for j, (a, b) in enumerate(model.pairs):
        win_a = dv[:, j] >= 0
        winner = np.where(win_a, index[a], index[b])
        votes[np.arange(n), winner] += 1
        confidence[np.arange(n), winner] += np.abs(dv[:, j])
    winners = np.empty(n, dtype=np.int64)
    for r in range(n):
        tied = np.flatnonzero(votes[r] == votes[r].max())
        if len(tied) > 1:
            best = confidence[r, tied].max()
            tied = tied[confidence[r, tied] == best]
        winners[r] = tied[0]
    return np.asarray(model.classes)[winners]


def predict_multiclass(model: MulticlassSvmModel, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.n_features:
        raise ValueError(f"expected dimension {model.n_features}, got {x.shape[-1]}")
    pred = _vote(model, _decision_matrix(model, np.atleast_2d(x)))
    return pred[0].item() if x.ndim == 1 else pred


# --------------------------------------------------------------------------
# persistence


def save_svm_model(model: MulticlassSvmModel, fh) -> None:
    """Write ``MAGIC`` then a JSON body; floats serialise via repr and round-trip exactly."""
    first = model.machines[0]
    body = {
        "kernel": first.kernel.to_dict(),
        "C": first.c_param,
        "classes": [int(c) for c in model.classes],
        "machines": [
            {
                "pair": [int(a), int(b)],
                "bias": m.bias,
                "dual_coeffs": m.dual_coeffs.tolist(),
                "support_vectors": m.support_vectors.tolist(),
                "converged": m.converged,
            }
            for (a, b), m in zip(model.pairs, model.machines)
        ],
    }
    fh.write(MAGIC + "\n")
    fh.write(json.dumps(body, sort_keys=True))
    fh.write("\n")


def load_svm_model(fh) -> MulticlassSvmModel:
    header = fh.readline().rstrip("\n")
    if header != MAGIC:
        raise ValueError(f"not an {MAGIC} file")
    body = json.loads(fh.read())
    kernel = KernelSpec(**body["kernel"])
    machines, pairs = [], []
    for m in body["machines"]:
        machines.append(
            BinarySvmModel(
                support_vectors=np.array(m["support_vectors"], dtype=np.float64),
                dual_coeffs=np.array(m["dual_coeffs"], dtype=np.float64),
                bias=float(m["bias"]),
                kernel=kernel,
                c_param=float(body["C"]),
                converged=bool(m.get("converged", True)),
            )
        )
        pairs.append(tuple(m["pair"]))
    return MulticlassSvmModel(tuple(body["classes"]), tuple(machines), tuple(pairs))


# --------------------------------------------------------------------------
# estimators


def _kernel_from_params(est, n_features: int) -> KernelSpec:
    gamma = est.gamma if est.gamma is not None else 1.0 / max(n_features, 1)
    return KernelSpec(est.kernel, gamma=gamma, degree=est.degree, offset=est.coef0)


class SMOClassifier(ClassifierMixin, BaseEstimator):
    """Binary kernel SVM. ``decision_function > 0`` means ``classes_[1]``.

    Parameters
    ----------
    C : float, default=10.0
    kernel : {"linear", "rbf", "polynomial"}, default="linear"
    gamma : float or None, default=None
        RBF width; None uses ``1 / n_features``.
    degree : int, default=3
    coef0 : float, default=1.0
        Polynomial offset.
    tol : float, default=1e-3
    max_passes : int or None, default=None
    """

    def __init__(self, C=10.0, kernel="linear", gamma=None, degree=3, coef0=1.0, tol=1e-3,
                 max_passes=None):
        self.C = C
        self.kernel = kernel
        self.gamma = gamma
        self.degree = degree
        self.coef0 = coef0
        self.tol = tol
        self.max_passes = max_passes

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_ = unique_labels(y)
        if len(self.classes_) != 2:
            raise ValueError(f"SMOClassifier is binary; got {len(self.classes_)} classes")
        signs = np.where(y == self.classes_[1], 1.0, -1.0)
        self.kernel_ = _kernel_from_params(self, X.shape[1])
        self.model_ = smo_train_binary(X, signs, self.C, self.kernel_, self.tol, self.max_passes)
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X)
        return decision_value(self.model_, X)

    def predict(self, X):
        return self.classes_[(self.decision_function(X) >= 0).astype(int)]

    @property
    def support_vectors_(self):
        check_is_fitted(self, "model_")
        return self.model_.support_vectors

    @property
    def dual_coef_(self):
        check_is_fitted(self, "model_")
        return self.model_.dual_coeffs

    @property
    def intercept_(self):
        check_is_fitted(self, "model_")
        return self.model_.bias


class OneVsOneSVC(SMOClassifier):
    """Multiclass SVM: one SMO machine per class pair, prediction by vote."""

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_ = unique_labels(y)
        self.kernel_ = _kernel_from_params(self, X.shape[1])
        self.model_ = train_one_vs_one(X, y, self.C, self.kernel_, self.tol, self.max_passes)
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        """Pairwise decision values, one column per class pair."""
        check_is_fitted(self, "model_")
        return _decision_matrix(self.model_, check_array(X))

    def predict(self, X):
        check_is_fitted(self, "model_")
        return _vote(self.model_, self.decision_function(X))


__all__: Sequence[str] = [
    "KernelSpec",
    "BinarySvmModel",
    "MulticlassSvmModel",
    "kernel_eval",
    "smo_train_binary",
    "decision_value",
    "predict_binary",
    "dual_objective",
    "train_one_vs_one",
    "predict_multiclass",
    "save_svm_model",
    "load_svm_model",
    "SMOClassifier",
    "OneVsOneSVC",
]
