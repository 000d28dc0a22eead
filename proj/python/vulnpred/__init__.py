"""Vulnerability-prediction toolkit: label, featurize, train, and score code
changes for vulnerability risk."""

from ._core import (  # noqa: F401
    ChangeRecord,
    FixtureHistory,
    HistoryState,
    IngestError,
    LabeledChange,
    TrainedModel,
    __version__,
    attach_labels,
    build_labeled_corpus,
    classify_tokens,
    compute_metrics,
    emit_changes,
    emit_labels,
    extract_features,
    feature_names,
    featurize_corpus,
    ingest_changes,
    ingest_issues_summary,
    metrics_from_confusion,
    run_ablation,
    run_nfold,
    run_online,
    strip_comments_and_strings,
    train,
)
