"""Training/testing protocol, accuracy reports and weight grid search.

Each row of a report uses the first ``n_subjects`` subjects, trains on images
``1..train_per_subject`` of each and tests on the rest (one probe per subject
with the default 9/1 split).
"""

from __future__ import annotations

import io
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dataset import Dataset, DatasetError
from .eigen import EigenModel, fit_eigen_model, save_eigen_model
from .fusion import FeatureNormalizer, WeightSet, fit_normalizer
from .pipeline import AttributeBlocks, extract_blocks, fuse_blocks
from .statfeat import HistogramConfig
from .svm import KernelSpec, MulticlassSvmModel, predict_multiclass, save_svm_model, train_one_vs_one
from .transform import DctFeatureConfig

log = logging.getLogger(__name__)

TABLE_ROWS = (10, 20, 30, 40)
SINGLE_ATTRIBUTE_WEIGHTS = (
    WeightSet(1, 0, 0, 0),
    WeightSet(0, 1, 0, 0),
    WeightSet(0, 0, 1, 0),
    WeightSet(0, 0, 0, 1),
)
MULTI_ATTRIBUTE_WEIGHTS = (
    WeightSet(1, 1, 0, 0),
    WeightSet(0.5, 1, 0, 0),
    WeightSet(0.5, 1, 0, 1),
    WeightSet(1, 1, 1, 1),
    WeightSet(0.12, 0, 1, 0),
)
CSV_HEADER = "table,n_subjects,w1,w2,w3,w4,accuracy"
LOG_HEADER = "subject,image_index,predicted,correct"
_CENT = Decimal("0.01")


@dataclass(frozen=True)
class ExperimentConfig:
    n_subjects: int = 40
    train_per_subject: int = 9
    eigen_k: int = 40
    dct: DctFeatureConfig = field(default_factory=DctFeatureConfig)
    hist: HistogramConfig = field(default_factory=HistogramConfig)
    kernel: str = "linear"
    gamma: float | None = None  # None: 1 / fused dimension
    degree: int = 3
    offset: float = 1.0
    C: float = 10.0
    tol: float = 1e-3
    max_passes: int | None = None
    normalize: bool = True
    weights: WeightSet = field(default_factory=WeightSet)

    def __post_init__(self):
        if not 1 <= self.train_per_subject < 10:
            raise ValueError("train_per_subject must be in 1..9")
        if self.n_subjects < 2:
            raise ValueError("n_subjects must be >= 2")
        if self.eigen_k < 1:
            raise ValueError("eigen_k must be >= 1")
        if not self.C > 0 or not self.tol > 0:
            raise ValueError("C and tol must be positive")
        self.kernel_spec(1)  # validates kernel parameters

    def kernel_spec(self, n_features: int) -> KernelSpec:
        gamma = self.gamma if self.gamma is not None else 1.0 / n_features
        return KernelSpec(self.kernel, gamma=gamma, degree=self.degree, offset=self.offset)

    def echo(self) -> list[tuple[str, str]]:
        return [
            ("train_per_subject", str(self.train_per_subject)),
            ("eigen_k", str(self.eigen_k)),
            ("dct_block", str(self.dct.block_size)),
            ("dct_coeffs", str(self.dct.coeffs_per_block)),
            ("hist_bins", str(self.hist.bins)),
            ("kernel", self.kernel),
            ("gamma", "auto" if self.gamma is None else repr(float(self.gamma))),
            ("degree", str(self.degree)),
            ("offset", repr(float(self.offset))),
            ("C", repr(float(self.C))),
            ("tol", repr(float(self.tol))),
            ("max_passes", "auto" if self.max_passes is None else str(self.max_passes)),
            ("normalize", "on" if self.normalize else "off"),
        ]


@dataclass(frozen=True, eq=False)
class TrainedBundle:
    eigen: EigenModel
    normalizer: FeatureNormalizer | None
    svm: MulticlassSvmModel
    config: ExperimentConfig


@dataclass(frozen=True)
class Prediction:
    subject: int
    image_index: int
    predicted: int
    correct: bool


@dataclass(frozen=True)
class EvaluationRow:
    n_subjects: int
    correct: int
    total: int
    predictions: tuple[Prediction, ...]

    @property
    def accuracy(self) -> Decimal:
        return percent(self.correct, self.total)


@dataclass(frozen=True)
class EvaluationReport:
    weights: WeightSet
    rows: tuple[EvaluationRow, ...]
    config: ExperimentConfig

    @property
    def accuracies(self) -> dict[int, Decimal]:
        return {r.n_subjects: r.accuracy for r in self.rows}

    @property
    def average(self) -> Decimal:
        return mean_percent(r.accuracy for r in self.rows)


@dataclass(frozen=True)
class TableReport:
    name: str
    columns: tuple[EvaluationReport, ...]

    @property
    def row_keys(self) -> list[int]:
        return [r.n_subjects for r in self.columns[0].rows]

    def cell(self, n_subjects: int, column: int) -> Decimal:
        return self.columns[column].accuracies[n_subjects]

    def row_average(self, n_subjects: int) -> Decimal:
        return mean_percent(c.accuracies[n_subjects] for c in self.columns)

    def to_csv(self) -> str:
        return render_csv([(self.name, self.columns)], self.columns[0].config, row_averages=True)


def percent(correct: int, total: int) -> Decimal:
    """``100 * correct / total`` rounded half-up to 2 decimals."""
    if total <= 0:
        raise ValueError("empty test set")
    return (Decimal(100 * correct) / Decimal(total)).quantize(_CENT, rounding=ROUND_HALF_UP)


def mean_percent(values: Iterable[Decimal]) -> Decimal:
    values = list(values)
    return (sum(values, Decimal(0)) / len(values)).quantize(_CENT, rounding=ROUND_HALF_UP)


# --------------------------------------------------------------------------
# protocol


def split_dataset(ds: Dataset, n_subjects: int, train_per_subject: int = 9) -> tuple[Dataset, Dataset]:
    subjects = ds.subjects
    if n_subjects > len(subjects):
        raise DatasetError(f"requested {n_subjects} subjects but only {len(subjects)} are available")
    chosen = set(subjects[:n_subjects])
    counts = {s: 0 for s in chosen}
    for it in ds:
        if it.label in chosen:
            counts[it.label] += 1
    short = sorted(s for s, c in counts.items() if c <= train_per_subject)
    if short:
        raise DatasetError(
            f"subjects {short} have too few images for {train_per_subject} training images plus a probe"
        )
    ranks: dict[tuple[int, int], int] = {}
    seen = {s: 0 for s in chosen}
    for it in ds:
        if it.label in chosen:
            seen[it.label] += 1
            ranks[(it.label, it.index)] = seen[it.label]
    train = ds.subset(lambda it: it.label in chosen and ranks[(it.label, it.index)] <= train_per_subject)
    test = ds.subset(lambda it: it.label in chosen and ranks[(it.label, it.index)] > train_per_subject)
    return train, test


@dataclass(frozen=True, eq=False)
class _PreparedSplit:
    """Weight-independent state of one row: everything except fusion and SVM."""

    n_subjects: int
    eigen: EigenModel
    normalizer: FeatureNormalizer | None
    train_blocks: AttributeBlocks
    train_labels: np.ndarray
    test: Dataset
    test_blocks: AttributeBlocks


def _fit_features(train: Dataset, cfg: ExperimentConfig):
    if train.class_count < 2:
        raise ValueError("training set needs at least 2 classes")
    X = train.matrix()
    k = min(cfg.eigen_k, X.shape[0] - 1)
    try:
        eigen = fit_eigen_model(X, k)
    except ValueError as exc:
        raise ValueError(f"eigen stage: {exc}") from exc
    blocks = extract_blocks(train.images(), eigen, cfg.dct, cfg.hist)
    normalizer = fit_normalizer(blocks.as_tuple()) if cfg.normalize else None
    return eigen, normalizer, blocks


def _train_svm(blocks, labels, normalizer, cfg: ExperimentConfig, weights: WeightSet) -> MulticlassSvmModel:
    fused = fuse_blocks(blocks, normalizer, weights)
    try:
        return train_one_vs_one(fused, labels, cfg.C, cfg.kernel_spec(fused.shape[1]), cfg.tol, cfg.max_passes)
    except ValueError as exc:
        raise ValueError(f"svm stage: {exc}") from exc


def run_pipeline(train: Dataset, cfg: ExperimentConfig) -> TrainedBundle:
    """Fit eigenfaces, extract and normalise F1..F4, fuse with ``cfg.weights``
    and train the one-vs-one SVM, all on ``train`` only."""
    eigen, normalizer, blocks = _fit_features(train, cfg)
    svm = _train_svm(blocks, train.labels, normalizer, cfg, cfg.weights)
    return TrainedBundle(eigen=eigen, normalizer=normalizer, svm=svm, config=cfg)


def _score(svm: MulticlassSvmModel, blocks: AttributeBlocks, normalizer, weights, test: Dataset, n_subjects: int):
    fused = fuse_blocks(blocks, normalizer, weights)
    predicted = predict_multiclass(svm, fused)
    preds = tuple(
        Prediction(int(it.label), int(it.index), int(p), bool(p == it.label))
        for it, p in zip(test, predicted)
    )
    return EvaluationRow(n_subjects, sum(p.correct for p in preds), len(preds), preds)


def evaluate(bundle: TrainedBundle, test: Dataset, n_subjects: int | None = None) -> EvaluationRow:
    """Classify every test image with the trained eigenbasis, normaliser,
    weights and SVM."""
    cfg = bundle.config
    blocks = extract_blocks(test.images(), bundle.eigen, cfg.dct, cfg.hist)
    if sum(blocks.lengths) != bundle.svm.n_features:
        raise ValueError("test features do not match the trained model")
    n = n_subjects if n_subjects is not None else cfg.n_subjects
    return _score(bundle.svm, blocks, bundle.normalizer, cfg.weights, test, n)


def _prepare(ds: Dataset, n_subjects: int, cfg: ExperimentConfig) -> _PreparedSplit:
    train, test = split_dataset(ds, n_subjects, cfg.train_per_subject)
    eigen, normalizer, blocks = _fit_features(train, cfg)
    test_blocks = extract_blocks(test.images(), eigen, cfg.dct, cfg.hist)
    return _PreparedSplit(n_subjects, eigen, normalizer, blocks, train.labels, test, test_blocks)


def _score_prepared(prep: _PreparedSplit, cfg: ExperimentConfig, weights: WeightSet) -> EvaluationRow:
    svm = _train_svm(prep.train_blocks, prep.train_labels, prep.normalizer, cfg, weights)
    return _score(svm, prep.test_blocks, prep.normalizer, weights, prep.test, prep.n_subjects)


def evaluate_config(ds: Dataset, cfg: ExperimentConfig, rows: Sequence[int] | None = None) -> EvaluationReport:
    """Train and test ``cfg`` from scratch for every row (no caching)."""
    rows = tuple(rows) if rows else (cfg.n_subjects,)
    out = []
    for n in rows:
        train, test = split_dataset(ds, n, cfg.train_per_subject)
        bundle = run_pipeline(train, replace(cfg, n_subjects=n))
        out.append(evaluate(bundle, test, n))
    return EvaluationReport(cfg.weights, tuple(out), cfg)


def _evaluate_grid(ds, cfg, rows, grid, use_cache) -> list[EvaluationReport]:
    if use_cache:
        prepared = [_prepare(ds, n, cfg) for n in rows]
        reports = []
        for w in grid:
            log.info("weights %s", w)
            reports.append(
                EvaluationReport(w, tuple(_score_prepared(p, cfg, w) for p in prepared), replace(cfg, weights=w))
            )
        return reports
    return [evaluate_config(ds, replace(cfg, weights=w), rows) for w in grid]


def reproduce_tables(
    ds: Dataset, base_cfg: ExperimentConfig | None = None, rows: Sequence[int] = TABLE_ROWS
) -> tuple[TableReport, TableReport]:
    """Single-attribute (table1) and multi-attribute (table2) weight columns
    over the given subject-count rows."""
    cfg = base_cfg or ExperimentConfig()
    rows = tuple(rows)
    if not rows:
        raise ValueError("no rows requested")
    grid = SINGLE_ATTRIBUTE_WEIGHTS + MULTI_ATTRIBUTE_WEIGHTS
    reports = _evaluate_grid(ds, cfg, rows, grid, use_cache=True)
    n1 = len(SINGLE_ATTRIBUTE_WEIGHTS)
    return TableReport("table1", tuple(reports[:n1])), TableReport("table2", tuple(reports[n1:]))


def grid_search_weights(
    ds: Dataset,
    base_cfg: ExperimentConfig | None,
    grid: Sequence[WeightSet],
    rows: Sequence[int] | None = None,
    use_cache: bool = True,
) -> list[EvaluationReport]:
    """Evaluate every weight set and rank by average accuracy (descending),
    ties to the lexicographically smaller weights."""
    cfg = base_cfg or ExperimentConfig()
    grid = list(grid)
    if not grid:
        raise ValueError("weight grid is empty")
    rows = tuple(rows) if rows else (cfg.n_subjects,)
    reports = _evaluate_grid(ds, cfg, rows, grid, use_cache)
    return sorted(reports, key=lambda r: (-r.average, r.weights.as_tuple()))


# --------------------------------------------------------------------------
# output


def _fmt_weight(v: float) -> str:
    return f"{v:g}"


def render_csv(
    tables: Sequence[tuple[str, Sequence[EvaluationReport]]],
    cfg: ExperimentConfig,
    row_averages: bool = False,
    extra: Sequence[tuple[str, str]] = (),
) -> str:
    """Report CSV preceded by ``# key = value`` lines echoing the configuration."""
    buf = io.StringIO()
    for key, value in [*extra, *cfg.echo()]:
        buf.write(f"# {key} = {value}\n")
    buf.write(CSV_HEADER + "\n")
    for name, columns in tables:
        row_keys = [r.n_subjects for r in columns[0].rows]
        for n in row_keys:
            for col in columns:
                w = ",".join(_fmt_weight(v) for v in col.weights.as_tuple())
                buf.write(f"{name},{n},{w},{col.accuracies[n]}\n")
        for col in columns:
            w = ",".join(_fmt_weight(v) for v in col.weights.as_tuple())
            buf.write(f"{name},average,{w},{col.average}\n")
        if row_averages:
            for n in row_keys:
                avg = mean_percent(col.accuracies[n] for col in columns)
                buf.write(f"{name},{n},average,average,average,average,{avg}\n")
    return buf.getvalue()


def render_prediction_log(rows: Iterable[EvaluationRow]) -> str:
    buf = io.StringIO()
    buf.write(LOG_HEADER + "\n")
    for row in rows:
        for p in row.predictions:
            buf.write(f"{p.subject},{p.image_index},{p.predicted},{int(p.correct)}\n")
    return buf.getvalue()


def save_bundle(bundle: TrainedBundle, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "eigenmodel.txt", "w") as fh:
        save_eigen_model(bundle.eigen, fh)
    with open(directory / "svmmodel.txt", "w") as fh:
        save_svm_model(bundle.svm, fh)
    norm = bundle.normalizer
    payload = None if norm is None else {
        "means": [m.tolist() for m in norm.means],
        "stds": [s.tolist() for s in norm.stds],
    }
    with open(directory / "normalizer.json", "w") as fh:
        json.dump(payload, fh, sort_keys=True)
    cfg = asdict(bundle.config)
    with open(directory / "config.json", "w") as fh:
        json.dump(cfg, fh, sort_keys=True, default=str)
