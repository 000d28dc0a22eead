#include "vulnpred/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "vulnpred/util.hpp"

namespace vulnpred {

const char* const kGlobalFeatureSubset =
    "CC_add+PC_revision+PC_relative_revision+RP_time+RP_weekday";

std::string window_kind_to_string(WindowKind w) {
  return w == WindowKind::cumulative ? "cumulative" : "previous-period";
}

WindowKind window_kind_from_string(std::string_view s) {
  if (s == "cumulative") return WindowKind::cumulative;
  if (s == "previous-period" || s == "previous_period")
    return WindowKind::previous_period;
  throw std::invalid_argument("unknown window kind: " + std::string(s));
}

json ExperimentConfig::to_json() const {
  return json{{"classifier", classifier_kind_to_string(classifier)},
              {"hyperparameters", params.to_json()},
              {"feature_subset", feature_subset},
              {"threshold", threshold},
              {"seed", seed},
              {"nfold_n", nfold_n},
              {"period", period.to_string()},
              {"window", window_kind_to_string(window)},
              {"label_delay_seconds", label_delay_seconds},
              {"history_decay", history_decay}};
}

namespace {

std::int64_t effective_known_at(const LabeledChange& lc, std::int64_t delay) {
  return lc.label.known_at +
         (lc.label.kind == LabelKind::ViC ? delay : 0);
}

// Static families don't depend on history; compute them once per row and
// refresh only HH/VH/PT per state.
constexpr std::size_t kHistoryBegin = 14;  // HH_author
constexpr std::size_t kHistoryEnd = 27;    // one past PT_ViC_volume

void overwrite_history_features(std::vector<double>& full,
                                const ChangeRecord& change,
                                const HistoryState& state) {
  HhFeatures hh = state.extract_hh(change);
  VhFeatures vh = state.extract_vh(change);
  PtFeatures pt = state.extract_pt(change);
  full[14] = hh.author;
  full[15] = hh.reviewer;
  full[16] = hh.min_reviewer;
  full[17] = hh.avg_reviewer;
  full[18] = vh.temporal_max;
  full[19] = vh.temporal_min;
  full[20] = vh.temporal_avg;
  full[21] = vh.spatial_max;
  full[22] = vh.spatial_min;
  full[23] = vh.spatial_avg;
  full[24] = pt.change_volume;
  full[25] = pt.vfc_volume;
  full[26] = pt.vic_volume;
}

struct Stats {
  std::optional<double> mean, stddev;
};

Stats mean_stddev(const std::vector<double>& xs) {
  Stats s;
  if (xs.empty()) return s;
  double sum = std::accumulate(xs.begin(), xs.end(), 0.0);
  double mean = sum / static_cast<double>(xs.size());
  s.mean = mean;
  if (xs.size() >= 2) {
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

void finalize_report(EvaluationReport& report,
                     const std::vector<Prediction>& pooled_predictions) {
  report.pooled = compute_metrics(pooled_predictions);
  std::vector<double> recalls, precisions;
  long long flagged = 0, total = 0;
  for (const auto& part : report.parts) {
    if (part.skipped) continue;
    if (part.metrics.recall_vic) recalls.push_back(*part.metrics.recall_vic);
    if (part.metrics.precision_vic)
      precisions.push_back(*part.metrics.precision_vic);
    flagged += part.flagged_total;
    total += part.total;
  }
  Stats r = mean_stddev(recalls), p = mean_stddev(precisions);
  report.mean_vic_recall = r.mean;
  report.stddev_vic_recall = r.stddev;
  report.mean_vic_precision = p.mean;
  report.stddev_vic_precision = p.stddev;
  report.vic_classified_fraction =
      total > 0 ? static_cast<double>(flagged) / static_cast<double>(total) : 0.0;
}

}  // namespace

EvaluationReport run_nfold(const Corpus& corpus, const ExperimentConfig& config) {
  if (config.nfold_n < 2) throw std::invalid_argument("N must be >= 2");
  const int n_folds = config.nfold_n;
  FeatureSubset subset = resolve_subset(config.feature_subset);
  FeatureSchema schema = subset.project_schema();

  std::vector<std::size_t> positives, negatives;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    (label_target(corpus[i].label) == 1 ? positives : negatives).push_back(i);
  if (static_cast<int>(positives.size()) < n_folds)
    throw InsufficientPositives();

  SplitMix64 rng(derive_seed(config.seed, 0xF01D));
  rng.shuffle(positives);
  rng.shuffle(negatives);
  std::vector<int> fold_of(corpus.size(), 0);
  for (std::size_t i = 0; i < positives.size(); ++i)
    fold_of[positives[i]] = static_cast<int>(i % static_cast<std::size_t>(n_folds));
  for (std::size_t i = 0; i < negatives.size(); ++i)
    fold_of[negatives[i]] = static_cast<int>(i % static_cast<std::size_t>(n_folds));

  // History-free feature parts, shared across folds.
  HistoryState empty_state(config.period, config.history_decay);
  std::vector<std::vector<double>> base(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i)
    base[i] = extract_feature_vector(corpus[i].change, empty_state,
                                     config.features);

  EvaluationReport report;
  std::vector<Prediction> pooled;
  pooled.reserve(corpus.size());

  for (int fold = 0; fold < n_folds; ++fold) {
    // State over the full remaining corpus (the N-1 training folds), fed in
    // known_at order; N-fold deliberately ignores label visibility.
    std::vector<std::size_t> train_rows;
    for (std::size_t i = 0; i < corpus.size(); ++i)
      if (fold_of[i] != fold) train_rows.push_back(i);
    std::sort(train_rows.begin(), train_rows.end(),
              [&](std::size_t a, std::size_t b) {
                if (corpus[a].label.known_at != corpus[b].label.known_at)
                  return corpus[a].label.known_at < corpus[b].label.known_at;
                return corpus[a].change.change_id < corpus[b].change.change_id;
              });
    HistoryState state(config.period, config.history_decay);
    for (std::size_t i : train_rows) state.record_labeled_change(corpus[i]);

    Dataset train;
    train.schema = schema;
    train.rows.reserve(train_rows.size());
    long long train_positives = 0;
    for (std::size_t i : train_rows) {
      std::vector<double> full = base[i];
      overwrite_history_features(full, corpus[i].change, state);
      train.rows.push_back({subset.project(full), label_target(corpus[i].label),
                            1.0, corpus[i].change.change_id});
      train_positives += label_target(corpus[i].label);
    }

    PartReport part;
    part.label = "fold-" + std::to_string(fold + 1);
    part.train_rows = static_cast<long long>(train.rows.size());
    part.train_positives = train_positives;

    TrainedModel model;
    try {
      model = vulnpred::train(config.classifier, config.params, train,
                              derive_seed(config.seed, 1000 + fold));
    } catch (const SingleClassError&) {
      part.skipped = true;
      part.skip_reason = "single_class_training";
      for (std::size_t i = 0; i < corpus.size(); ++i)
        if (fold_of[i] == fold) ++part.total;
      report.parts.push_back(std::move(part));
      continue;
    }
    model.threshold = config.threshold;

    std::vector<Prediction> fold_predictions;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (fold_of[i] != fold) continue;
      std::vector<double> full = base[i];
      overwrite_history_features(full, corpus[i].change, state);
      std::vector<double> values = subset.project(full);
      Prediction pred;
      pred.target = label_target(corpus[i].label);
      pred.score = model.score(values);
      pred.predicted = pred.score >= model.threshold ? 1 : 0;
      fold_predictions.push_back(pred);
      pooled.push_back(pred);
      ++part.total;
      if (pred.predicted == 1) {
        ++part.flagged_total;
        if (pred.target == 0) ++part.flagged_lnc;
      }
    }
    part.metrics = compute_metrics(fold_predictions);
    report.parts.push_back(std::move(part));
  }

  finalize_report(report, pooled);
  return report;
}

EvaluationReport run_online(const Corpus& corpus, const ExperimentConfig& config) {
  FeatureSubset subset = resolve_subset(config.feature_subset);
  FeatureSchema schema = subset.project_schema();
  if (corpus.empty()) return {};

  std::vector<std::size_t> by_submit(corpus.size());
  std::iota(by_submit.begin(), by_submit.end(), 0u);
  std::sort(by_submit.begin(), by_submit.end(), [&](std::size_t a, std::size_t b) {
    if (corpus[a].change.submitted_at != corpus[b].change.submitted_at)
      return corpus[a].change.submitted_at < corpus[b].change.submitted_at;
    return corpus[a].change.change_id < corpus[b].change.change_id;
  });

  std::vector<std::size_t> by_known(corpus.size());
  std::iota(by_known.begin(), by_known.end(), 0u);
  std::sort(by_known.begin(), by_known.end(), [&](std::size_t a, std::size_t b) {
    std::int64_t ka = effective_known_at(corpus[a], config.label_delay_seconds);
    std::int64_t kb = effective_known_at(corpus[b], config.label_delay_seconds);
    if (ka != kb) return ka < kb;
    return corpus[a].change.change_id < corpus[b].change.change_id;
  });

  const PeriodScheme& scheme = config.period;
  std::int64_t first_period =
      scheme.period_of(corpus[by_submit.front()].change.submitted_at);
  std::int64_t last_period =
      scheme.period_of(corpus[by_submit.back()].change.submitted_at);

  HistoryState state(scheme, config.history_decay);
  std::vector<std::vector<double>> features(corpus.size());
  std::vector<char> featurized(corpus.size(), 0);

  EvaluationReport report;
  std::vector<Prediction> pooled;
  std::size_t feed_cursor = 0;
  std::size_t submit_cursor = 0;
  std::vector<std::size_t> visible;  // labels recorded so far, feed order

  HistoryState empty_state(scheme, config.history_decay);

  for (std::int64_t period = first_period; period <= last_period; ++period) {
    std::int64_t start = scheme.period_start(period);

    // Audit instrumentation: every label read (state recording or training
    // inclusion) is checked against the period boundary.
    auto audit_read = [&](std::size_t idx) {
      if (effective_known_at(corpus[idx], config.label_delay_seconds) >= start)
        ++report.causality_violations;
    };

    // Advance the label feed to everything visible strictly before start(P).
    while (feed_cursor < by_known.size()) {
      std::size_t idx = by_known[feed_cursor];
      std::int64_t known =
          effective_known_at(corpus[idx], config.label_delay_seconds);
      if (known >= start) break;
      audit_read(idx);
      state.record_labeled_change(corpus[idx], known);
      visible.push_back(idx);
      ++feed_cursor;
    }

    // This period's changes, featurized against the frozen state.
    std::vector<std::size_t> current;
    while (submit_cursor < by_submit.size()) {
      std::size_t idx = by_submit[submit_cursor];
      if (scheme.period_of(corpus[idx].change.submitted_at) != period) break;
      features[idx] =
          extract_feature_vector(corpus[idx].change, state, config.features);
      featurized[idx] = 1;
      current.push_back(idx);
      ++submit_cursor;
    }
    if (current.empty()) continue;

    PartReport part;
    part.label = scheme.label(period);
    part.total = static_cast<long long>(current.size());

    // Training pool: rows whose labels are visible, with the features they
    // were given at their own period.
    std::int64_t window_floor =
        config.window == WindowKind::previous_period
            ? scheme.period_start(period - 1)
            : std::numeric_limits<std::int64_t>::min();
    Dataset train;
    train.schema = schema;
    for (std::size_t idx : visible) {
      std::int64_t known =
          effective_known_at(corpus[idx], config.label_delay_seconds);
      if (known < window_floor) continue;
      audit_read(idx);
      if (!featurized[idx]) continue;  // label visible before its own period
      train.rows.push_back({subset.project(features[idx]),
                            label_target(corpus[idx].label), 1.0,
                            corpus[idx].change.change_id});
    }
    part.train_rows = static_cast<long long>(train.rows.size());
    for (const auto& r : train.rows) part.train_positives += r.target;

    if (train.rows.empty()) {
      part.skipped = true;
      part.skip_reason = "empty_training_window";
      report.parts.push_back(std::move(part));
      continue;
    }

    TrainedModel model;
    try {
      model = vulnpred::train(config.classifier, config.params, train,
                              derive_seed(config.seed, 2000 + static_cast<
                                                                 std::uint64_t>(
                                                                 period)));
    } catch (const SingleClassError&) {
      part.skipped = true;
      part.skip_reason = "single_class_training";
      report.parts.push_back(std::move(part));
      continue;
    }
    model.threshold = config.threshold;

    std::vector<Prediction> period_predictions;
    for (std::size_t idx : current) {
      Prediction pred;
      pred.target = label_target(corpus[idx].label);
      pred.score = model.score(subset.project(features[idx]));
      pred.predicted = pred.score >= model.threshold ? 1 : 0;
      period_predictions.push_back(pred);
      pooled.push_back(pred);
      if (pred.predicted == 1) {
        ++part.flagged_total;
        if (pred.target == 0) ++part.flagged_lnc;
      }
    }
    part.metrics = compute_metrics(period_predictions);
    report.parts.push_back(std::move(part));
  }

  finalize_report(report, pooled);
  return report;
}

std::vector<AblationRow> run_ablation(const Corpus& corpus,
                                      const ExperimentConfig& config,
                                      Protocol protocol,
                                      std::span<const std::string> subsets) {
  // Resolve everything up front so a bad subset fails before any training.
  for (const auto& s : subsets) resolve_subset(s);

  std::vector<AblationRow> rows;
  for (const auto& s : subsets) {
    ExperimentConfig c = config;
    c.feature_subset = s;
    rows.push_back(
        {s, protocol == Protocol::nfold ? run_nfold(corpus, c)
                                        : run_online(corpus, c)});
  }
  return rows;
}

json EvaluationReport::to_json() const {
  auto opt = [](const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
  };
  json parts_json = json::array();
  for (const auto& part : parts) {
    json p{{"label", part.label},
           {"skipped", part.skipped},
           {"total", part.total},
           {"flagged_total", part.flagged_total},
           {"flagged_lnc", part.flagged_lnc},
           {"train_rows", part.train_rows},
           {"train_positives", part.train_positives}};
    if (part.skipped)
      p["skip_reason"] = part.skip_reason;
    else
      p["metrics"] = part.metrics.to_json();
    parts_json.push_back(std::move(p));
  }
  return json{{"parts", parts_json},
              {"pooled", pooled.to_json()},
              {"mean_vic_recall", opt(mean_vic_recall)},
              {"stddev_vic_recall", opt(stddev_vic_recall)},
              {"mean_vic_precision", opt(mean_vic_precision)},
              {"stddev_vic_precision", opt(stddev_vic_precision)},
              {"vic_classified_fraction", vic_classified_fraction},
              {"causality_violations", causality_violations}};
}

std::string EvaluationReport::to_csv() const {
  auto num = [](const std::optional<double>& v) {
    return v ? json(*v).dump() : std::string();
  };
  std::string out =
      "period,skipped,tn,fp,fn,tp,recall_vic,precision_vic,recall_lnc,"
      "precision_lnc,roc_area,flagged_count\n";
  for (const auto& part : parts) {
    out += part.label;
    out += part.skipped ? ",1" : ",0";
    if (part.skipped) {
      out += ",,,,,,,,,,";
      out += "\n";
      continue;
    }
    const MetricsReport& m = part.metrics;
    out += "," + std::to_string(m.tn) + "," + std::to_string(m.fp) + "," +
           std::to_string(m.fn) + "," + std::to_string(m.tp);
    out += "," + num(m.recall_vic) + "," + num(m.precision_vic);
    out += "," + num(m.recall_lnc) + "," + num(m.precision_lnc);
    out += "," + num(m.roc_area);
    out += "," + std::to_string(part.flagged_total);
    out += "\n";
  }
  return out;
}

json ablation_to_json(std::span<const AblationRow> rows) {
  json out = json::array();
  for (const auto& row : rows)
    out.push_back(json{{"subset", row.subset}, {"report", row.report.to_json()}});
  return out;
}

}  // namespace vulnpred
