#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vulnpred/classifiers.hpp"
#include "vulnpred/featurize.hpp"

namespace vulnpred {

enum class WindowKind { cumulative, previous_period };

std::string window_kind_to_string(WindowKind w);
WindowKind window_kind_from_string(std::string_view s);

struct ExperimentConfig {
  ClassifierKind classifier = ClassifierKind::random_forest;
  Hyperparameters params;
  std::string feature_subset = "all";
  double threshold = 0.5;
  std::uint64_t seed = 0;

  int nfold_n = 12;

  PeriodScheme period = PeriodScheme::monthly();
  WindowKind window = WindowKind::cumulative;
  std::int64_t label_delay_seconds = 0;  // extra visibility delay on ViC labels

  FeatureConfig features;
  double history_decay = 1.0;

  json to_json() const;
};

struct InsufficientPositives : std::runtime_error {
  InsufficientPositives()
      : std::runtime_error("fewer positives than folds; stratification impossible") {}
};

struct EmptyTrainingWindow {};  // recorded per period, not thrown

struct PartReport {
  std::string label;  // "fold-3" or "2016-07"
  bool skipped = false;
  std::string skip_reason;  // "empty_training_window" | "single_class_training"
  MetricsReport metrics;
  long long total = 0;
  long long flagged_total = 0;  // classified ViC
  long long flagged_lnc = 0;    // negatives classified ViC (Fig 8 volume)
  long long train_rows = 0;
  long long train_positives = 0;
};

struct EvaluationReport {
  std::vector<PartReport> parts;
  MetricsReport pooled;  // confusion summed over scored parts
  std::optional<double> mean_vic_recall, stddev_vic_recall;
  std::optional<double> mean_vic_precision, stddev_vic_precision;
  double vic_classified_fraction = 0.0;
  long long causality_violations = 0;  // online-mode audit counter

  json to_json() const;
  std::string to_csv() const;
};

using Corpus = std::vector<LabeledChange>;

// Stratified N-fold with the protocol's deliberate leakage: per fold, the
// history state is built from the N-1 training folds regardless of time, and
// both partitions are featurized against it.
EvaluationReport run_nfold(const Corpus& corpus, const ExperimentConfig& config);

// Per-period retraining backtest: for each period P, the model trains on rows
// whose labels were visible before start(P) (cumulative or previous-period
// window), with features each row got at its own period; P's changes are
// featurized against the state frozen at start(P) and scored.
EvaluationReport run_online(const Corpus& corpus, const ExperimentConfig& config);

// One run per subset under the shared protocol and seed.
struct AblationRow {
  std::string subset;
  EvaluationReport report;
};
enum class Protocol { nfold, online };
std::vector<AblationRow> run_ablation(const Corpus& corpus,
                                      const ExperimentConfig& config,
                                      Protocol protocol,
                                      std::span<const std::string> subsets);

// The Table VI five-feature project-agnostic subset.
extern const char* const kGlobalFeatureSubset;

json ablation_to_json(std::span<const AblationRow> rows);

}  // namespace vulnpred
