#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "vulnpred/featurize.hpp"

#include <json.hpp>

namespace vulnpred {

enum class ClassifierKind {
  decision_tree,
  random_forest,
  naive_bayes,
  logistic_regression,
};

std::string classifier_kind_to_string(ClassifierKind k);
ClassifierKind classifier_kind_from_string(std::string_view s);

struct DataRow {
  std::vector<double> values;  // schema order
  int target = 0;              // 1 = ViC
  double weight = 1.0;
  std::string row_id;          // change_id
};

struct Dataset {
  FeatureSchema schema;
  std::vector<DataRow> rows;
};

struct EmptyDatasetError : std::runtime_error {
  EmptyDatasetError() : std::runtime_error("empty dataset") {}
};
struct SchemaMismatchError : std::runtime_error {
  SchemaMismatchError() : std::runtime_error("feature schema hash mismatch") {}
};
struct SingleClassError : std::runtime_error {
  explicit SingleClassError(ClassifierKind kind)
      : std::runtime_error(classifier_kind_to_string(kind) +
                           " requires both classes in the training set") {}
};

// Weka-style defaults: RF 100 trees, bootstrap n, floor(log2(F))+1 candidate
// features per split, unlimited depth, min leaf 1; CART/Gini tree;
// Gaussian NB with variance floor; L2 logistic regression via full-batch
// gradient descent.
struct Hyperparameters {
  int forest_trees = 100;
  bool bootstrap = true;
  int max_features = 0;  // 0 = floor(log2(F)) + 1
  double nb_variance_floor = 1e-9;
  double lr_lambda = 1e-4;
  double lr_tolerance = 1e-6;
  int lr_max_epochs = 10000;
  double positive_class_weight = 1.0;  // optional imbalance knob, default off

  json to_json() const;
  static Hyperparameters from_json(const json& j);
};

struct TreeNode {
  int feature = -1;  // -1 = leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double leaf_value = 0.0;  // positive fraction at the leaf

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTreeModel {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::vector<double> feature_importance;  // Gini gain, by schema index

  double score(std::span<const double> values) const;
};

struct RandomForestModel {
  std::vector<DecisionTreeModel> trees;
  std::vector<double> feature_importance;
};

struct NaiveBayesModel {
  double log_prior[2] = {0.0, 0.0};
  std::vector<double> mean[2];
  std::vector<double> variance[2];  // floored
};

struct LogisticRegressionModel {
  std::vector<double> weights;  // standardized space
  double bias = 0.0;
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;
  int epochs_run = 0;
  double final_gradient_norm = 0.0;
};

struct TrainedModel {
  ClassifierKind kind = ClassifierKind::decision_tree;
  Hyperparameters params;
  FeatureSchema schema;
  std::uint64_t schema_hash = 0;
  double threshold = 0.5;  // score >= threshold classifies as 1
  std::variant<DecisionTreeModel, RandomForestModel, NaiveBayesModel,
               LogisticRegressionModel>
      structure;
  struct Meta {
    std::size_t row_count = 0;
    std::uint64_t seed = 0;
    std::int64_t trained_at = 0;  // deterministic: 0 unless supplied
  } meta;

  double score(std::span<const double> values) const;
  int classify(std::span<const double> values) const {
    return score(values) >= threshold ? 1 : 0;
  }
  void ensure_schema(const FeatureSchema& other) const {
    if (other.hash() != schema_hash) throw SchemaMismatchError();
  }
  // |contribution| ranking for verdict explanations; ties by schema order.
  std::vector<std::pair<std::string, double>> top_features(
      std::span<const double> values, std::size_t k) const;
};

TrainedModel train(ClassifierKind kind, const Hyperparameters& params,
                   const Dataset& data, std::uint64_t seed);

json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const json& j);
void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

// Regularized mean log-loss and its gradient over raw values, layout
// [w_0..w_{F-1}, bias]; the bias is not regularized. Exposed so the
// finite-difference check runs against exactly what training optimizes.
double logistic_loss_gradient(const Dataset& data,
                              std::span<const double> weights_and_bias,
                              double lambda, std::span<double> gradient_out);

// ---- metrics ----------------------------------------------------------------

struct MetricsReport {
  long long tn = 0, fp = 0, fn = 0, tp = 0;
  std::optional<double> recall_vic, precision_vic;
  std::optional<double> recall_lnc, precision_lnc;
  std::optional<double> roc_area;
  long long support_vic = 0, support_lnc = 0;

  static MetricsReport from_confusion(long long tn, long long fp, long long fn,
                                      long long tp);
  json to_json() const;
};

struct Prediction {
  int target = 0;
  int predicted = 0;
  double score = 0.0;
};

// Confusion, per-class recall/precision, and Mann-Whitney AUC (ties half).
MetricsReport compute_metrics(std::span<const Prediction> predictions);

// Nullopt when either class is absent.
std::optional<double> mann_whitney_auc(std::span<const Prediction> predictions);

}  // namespace vulnpred
