"""Face recognition by weighted fusion of eigen, DCT, histogram and
intensity attributes, classified with a one-vs-one SMO SVM."""

from .dataset import (
    CANONICAL_SIZE,
    Dataset,
    DatasetError,
    FaceImage,
    LabeledImage,
    PgmParseError,
    flatten,
    load_orl_dataset,
    parse_pgm,
    resize_bilinear,
    serialize_pgm,
    synthesize_dataset,
    unflatten,
    write_dataset,
)
from .eigen import EigenFeatures, EigenModel, fit_eigen_model, project_eigen, reconstruct
from .fusion import FeatureNormalizer, FusedVector, WeightSet, fit_normalizer, fuse
from .harness import (
    ExperimentConfig,
    EvaluationReport,
    evaluate,
    evaluate_config,
    grid_search_weights,
    reproduce_tables,
    run_pipeline,
    split_dataset,
)
from .pipeline import WeightedFusionClassifier
from .statfeat import HistogramConfig, HistogramFeatures, IntensityFeatures, histogram_features, intensity_features
from .svm import (
    BinarySvmModel,
    KernelSpec,
    MulticlassSvmModel,
    OneVsOneSVC,
    SMOClassifier,
    decision_value,
    kernel_eval,
    predict_multiclass,
    smo_train_binary,
    train_one_vs_one,
)
from .transform import DCTFeatures, DctFeatureConfig, dct_1d, dct_2d, extract_dct_features, idct_1d, idct_2d, zigzag_indices

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
