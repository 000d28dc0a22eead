#include "vulnpred/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vulnpred/util.hpp"

namespace vulnpred {

std::string classifier_kind_to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::decision_tree: return "decision_tree";
    case ClassifierKind::random_forest: return "random_forest";
    case ClassifierKind::naive_bayes: return "naive_bayes";
    case ClassifierKind::logistic_regression: return "logistic_regression";
  }
  return "decision_tree";
}

ClassifierKind classifier_kind_from_string(std::string_view s) {
  if (s == "decision_tree" || s == "decision-tree") return ClassifierKind::decision_tree;
  if (s == "random_forest" || s == "random-forest") return ClassifierKind::random_forest;
  if (s == "naive_bayes" || s == "naive-bayes") return ClassifierKind::naive_bayes;
  if (s == "logistic_regression" || s == "logistic-regression")
    return ClassifierKind::logistic_regression;
  throw std::invalid_argument("unknown classifier kind: " + std::string(s));
}

json Hyperparameters::to_json() const {
  return json{{"forest_trees", forest_trees},
              {"bootstrap", bootstrap},
              {"max_features", max_features},
              {"nb_variance_floor", nb_variance_floor},
              {"lr_lambda", lr_lambda},
              {"lr_tolerance", lr_tolerance},
              {"lr_max_epochs", lr_max_epochs},
              {"positive_class_weight", positive_class_weight}};
}

Hyperparameters Hyperparameters::from_json(const json& j) {
  Hyperparameters p;
  p.forest_trees = j.value("forest_trees", p.forest_trees);
  p.bootstrap = j.value("bootstrap", p.bootstrap);
  p.max_features = j.value("max_features", p.max_features);
  p.nb_variance_floor = j.value("nb_variance_floor", p.nb_variance_floor);
  p.lr_lambda = j.value("lr_lambda", p.lr_lambda);
  p.lr_tolerance = j.value("lr_tolerance", p.lr_tolerance);
  p.lr_max_epochs = j.value("lr_max_epochs", p.lr_max_epochs);
  p.positive_class_weight =
      j.value("positive_class_weight", p.positive_class_weight);
  return p;
}

double DecisionTreeModel::score(std::span<const double> values) const {
  int at = 0;
  while (!nodes[static_cast<std::size_t>(at)].is_leaf()) {
    const TreeNode& n = nodes[static_cast<std::size_t>(at)];
    at = values[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                    : n.right;
  }
  return nodes[static_cast<std::size_t>(at)].leaf_value;
}

// ---- CART -------------------------------------------------------------------

namespace {

double row_weight(const DataRow& r, double positive_class_weight) {
  return r.weight * (r.target == 1 ? positive_class_weight : 1.0);
}

struct CartBuilder {
  const Dataset& data;
  double positive_class_weight;
  int max_features;       // candidates per split; >= F means all
  SplitMix64* rng;        // nullptr = deterministic all-feature splits
  std::vector<TreeNode> nodes;
  std::vector<double> importance;
  double root_weight = 0.0;

  // Scratch: (value, weight, is_positive) triples sorted per candidate.
  struct Cell {
    double value;
    double weight;
    double pos_weight;
  };
  std::vector<Cell> scratch;

  int build(std::vector<std::uint32_t>& idx, std::size_t lo, std::size_t hi) {
    double w = 0.0, wp = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const DataRow& r = data.rows[idx[i]];
      double rw = row_weight(r, positive_class_weight);
      w += rw;
      if (r.target == 1) wp += rw;
    }
    if (nodes.empty()) root_weight = w;

    auto make_leaf = [&]() {
      TreeNode leaf;
      leaf.leaf_value = w > 0.0 ? wp / w : 0.0;
      nodes.push_back(leaf);
      return static_cast<int>(nodes.size()) - 1;
    };

    if (hi - lo < 2 || wp <= 0.0 || wp >= w) return make_leaf();

    const std::size_t feature_count = data.schema.size();
    std::vector<std::uint32_t> candidates;
    if (rng == nullptr ||
        max_features >= static_cast<int>(feature_count)) {
      candidates.resize(feature_count);
      std::iota(candidates.begin(), candidates.end(), 0u);
    } else {
      // Partial Fisher-Yates draw of max_features distinct features,
      // then sorted so tie-breaking matches the single-tree rule.
      std::vector<std::uint32_t> pool(feature_count);
      std::iota(pool.begin(), pool.end(), 0u);
      for (int k = 0; k < max_features; ++k) {
        std::size_t j =
            k + static_cast<std::size_t>(rng->next_below(feature_count - k));
        std::swap(pool[static_cast<std::size_t>(k)], pool[j]);
      }
      candidates.assign(pool.begin(), pool.begin() + max_features);
      std::sort(candidates.begin(), candidates.end());
    }

    double parent_gini = 2.0 * (wp / w) * (1.0 - wp / w);
    // Impure nodes split on the best structurally valid candidate even at
    // zero gain (XOR-style nodes); recursion still terminates because both
    // sides stay non-empty.
    double best_gain = -1.0;
    int best_feature = -1;
    double best_threshold = 0.0;

    for (std::uint32_t f : candidates) {
      scratch.clear();
      for (std::size_t i = lo; i < hi; ++i) {
        const DataRow& r = data.rows[idx[i]];
        double rw = row_weight(r, positive_class_weight);
        scratch.push_back({r.values[f], rw, r.target == 1 ? rw : 0.0});
      }
      std::sort(scratch.begin(), scratch.end(),
                [](const Cell& a, const Cell& b) { return a.value < b.value; });
      double wl = 0.0, wpl = 0.0;
      for (std::size_t i = 0; i + 1 < scratch.size(); ++i) {
        wl += scratch[i].weight;
        wpl += scratch[i].pos_weight;
        if (scratch[i].value == scratch[i + 1].value) continue;
        double wr = w - wl, wpr = wp - wpl;
        if (wl <= 0.0 || wr <= 0.0) continue;
        double gini_l = 2.0 * (wpl / wl) * (1.0 - wpl / wl);
        double gini_r = 2.0 * (wpr / wr) * (1.0 - wpr / wr);
        double gain = parent_gini - (wl * gini_l + wr * gini_r) / w;
        double threshold =
            scratch[i].value + (scratch[i + 1].value - scratch[i].value) / 2.0;
        // Adjacent doubles can round the midpoint up to the right value;
        // the '<=' partition then needs the left value instead.
        if (!(threshold < scratch[i + 1].value)) threshold = scratch[i].value;
        // Deterministic tie-break: higher gain, then lower feature index,
        // then lower threshold. Candidates ascend, values ascend, so strict
        // '>' yields exactly that.
        if (gain > best_gain + 1e-15) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = threshold;
        }
      }
    }

    if (best_feature < 0) return make_leaf();

    importance[static_cast<std::size_t>(best_feature)] +=
        std::max(0.0, best_gain) * (w / root_weight);

    auto mid_it = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(lo),
                                 idx.begin() + static_cast<std::ptrdiff_t>(hi),
                                 [&](std::uint32_t i) {
                                   return data.rows[i].values[static_cast<
                                              std::size_t>(best_feature)] <=
                                          best_threshold;
                                 });
    std::size_t mid = static_cast<std::size_t>(mid_it - idx.begin());
    if (mid == lo || mid == hi) return make_leaf();  // numeric degeneracy

    TreeNode node;
    node.feature = best_feature;
    node.threshold = best_threshold;
    nodes.push_back(node);
    int at = static_cast<int>(nodes.size()) - 1;
    int left = build(idx, lo, mid);
    int right = build(idx, mid, hi);
    nodes[static_cast<std::size_t>(at)].left = left;
    nodes[static_cast<std::size_t>(at)].right = right;
    return at;
  }
};

DecisionTreeModel train_tree(const Dataset& data,
                             const std::vector<std::uint32_t>& sample,
                             double positive_class_weight, int max_features,
                             SplitMix64* rng) {
  CartBuilder builder{data, positive_class_weight, max_features, rng};
  builder.importance.assign(data.schema.size(), 0.0);
  std::vector<std::uint32_t> idx = sample;
  builder.build(idx, 0, idx.size());
  DecisionTreeModel model;
  model.nodes = std::move(builder.nodes);
  model.feature_importance = std::move(builder.importance);
  return model;
}

std::vector<std::uint32_t> all_rows(std::size_t n) {
  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  return idx;
}

int default_max_features(std::size_t feature_count) {
  return static_cast<int>(
             std::floor(std::log2(static_cast<double>(feature_count)))) +
         1;
}

NaiveBayesModel train_naive_bayes(const Dataset& data,
                                  const Hyperparameters& params) {
  const std::size_t f = data.schema.size();
  NaiveBayesModel m;
  double class_weight[2] = {0.0, 0.0};
  for (int c = 0; c < 2; ++c) {
    m.mean[c].assign(f, 0.0);
    m.variance[c].assign(f, 0.0);
  }
  for (const auto& r : data.rows)
    class_weight[r.target] += row_weight(r, params.positive_class_weight);
  if (class_weight[0] <= 0.0 || class_weight[1] <= 0.0)
    throw SingleClassError(ClassifierKind::naive_bayes);

  for (const auto& r : data.rows) {
    double rw = row_weight(r, params.positive_class_weight);
    for (std::size_t j = 0; j < f; ++j)
      m.mean[r.target][j] += rw * r.values[j];
  }
  for (int c = 0; c < 2; ++c)
    for (std::size_t j = 0; j < f; ++j) m.mean[c][j] /= class_weight[c];
  for (const auto& r : data.rows) {
    double rw = row_weight(r, params.positive_class_weight);
    for (std::size_t j = 0; j < f; ++j) {
      double d = r.values[j] - m.mean[r.target][j];
      m.variance[r.target][j] += rw * d * d;
    }
  }
  double total = class_weight[0] + class_weight[1];
  for (int c = 0; c < 2; ++c) {
    for (std::size_t j = 0; j < f; ++j)
      m.variance[c][j] = std::max(m.variance[c][j] / class_weight[c],
                                  params.nb_variance_floor);
    m.log_prior[c] = std::log(class_weight[c] / total);
  }
  return m;
}

double nb_log_likelihood(const NaiveBayesModel& m, int c,
                         std::span<const double> values) {
  double ll = m.log_prior[c];
  for (std::size_t j = 0; j < values.size(); ++j) {
    double var = m.variance[c][j];
    double d = values[j] - m.mean[c][j];
    ll += -0.5 * (std::log(2.0 * M_PI * var) + d * d / var);
  }
  return ll;
}

LogisticRegressionModel train_logistic(const Dataset& data,
                                       const Hyperparameters& params) {
  const std::size_t f = data.schema.size();
  bool has[2] = {false, false};
  for (const auto& r : data.rows) has[r.target] = true;
  if (!has[0] || !has[1])
    throw SingleClassError(ClassifierKind::logistic_regression);

  LogisticRegressionModel m;
  m.feature_mean.assign(f, 0.0);
  m.feature_scale.assign(f, 1.0);

  double total_weight = 0.0;
  for (const auto& r : data.rows)
    total_weight += row_weight(r, params.positive_class_weight);
  for (const auto& r : data.rows) {
    double rw = row_weight(r, params.positive_class_weight);
    for (std::size_t j = 0; j < f; ++j) m.feature_mean[j] += rw * r.values[j];
  }
  for (std::size_t j = 0; j < f; ++j) m.feature_mean[j] /= total_weight;
  std::vector<double> var(f, 0.0);
  for (const auto& r : data.rows) {
    double rw = row_weight(r, params.positive_class_weight);
    for (std::size_t j = 0; j < f; ++j) {
      double d = r.values[j] - m.feature_mean[j];
      var[j] += rw * d * d;
    }
  }
  for (std::size_t j = 0; j < f; ++j) {
    double s = std::sqrt(var[j] / total_weight);
    m.feature_scale[j] = s > 0.0 ? s : 1.0;
  }

  Dataset standardized;
  standardized.schema = data.schema;
  standardized.rows = data.rows;
  for (auto& r : standardized.rows)
    for (std::size_t j = 0; j < f; ++j)
      r.values[j] = (r.values[j] - m.feature_mean[j]) / m.feature_scale[j];
  for (auto& r : standardized.rows)
    r.weight = row_weight(r, params.positive_class_weight);

  // Lipschitz-safe fixed step for the mean log-loss: L = mean(|x|^2)/4 + λ,
  // counting the intercept column.
  double mean_sq = 0.0;
  for (const auto& r : standardized.rows) {
    double s = 1.0;  // bias
    for (double v : r.values) s += v * v;
    mean_sq += r.weight * s;
  }
  mean_sq /= total_weight;
  double step = 1.0 / (0.25 * mean_sq + params.lr_lambda);

  std::vector<double> wb(f + 1, 0.0);
  std::vector<double> grad(f + 1, 0.0);
  int epoch = 0;
  double grad_norm = 0.0;
  for (; epoch < params.lr_max_epochs; ++epoch) {
    logistic_loss_gradient(standardized, wb, params.lr_lambda, grad);
    grad_norm = 0.0;
    for (double g : grad) grad_norm += g * g;
    grad_norm = std::sqrt(grad_norm);
    if (grad_norm < params.lr_tolerance) break;
    for (std::size_t j = 0; j <= f; ++j) wb[j] -= step * grad[j];
  }
  m.weights.assign(wb.begin(), wb.begin() + static_cast<std::ptrdiff_t>(f));
  m.bias = wb[f];
  m.epochs_run = epoch;
  m.final_gradient_norm = grad_norm;
  return m;
}

}  // namespace

double logistic_loss_gradient(const Dataset& data,
                              std::span<const double> weights_and_bias,
                              double lambda, std::span<double> gradient_out) {
  const std::size_t f = data.schema.size();
  double total_weight = 0.0;
  for (const auto& r : data.rows) total_weight += r.weight;
  std::fill(gradient_out.begin(), gradient_out.end(), 0.0);
  double loss = 0.0;
  for (const auto& r : data.rows) {
    double z = weights_and_bias[f];
    for (std::size_t j = 0; j < f; ++j) z += weights_and_bias[j] * r.values[j];
    // log(1+e^z) - y*z, computed stably.
    double log1pez = z > 0.0 ? z + std::log1p(std::exp(-z))
                             : std::log1p(std::exp(z));
    loss += r.weight * (log1pez - r.target * z);
    double p = 1.0 / (1.0 + std::exp(-z));
    double g = r.weight * (p - r.target);
    for (std::size_t j = 0; j < f; ++j) gradient_out[j] += g * r.values[j];
    gradient_out[f] += g;
  }
  loss /= total_weight;
  for (std::size_t j = 0; j <= f; ++j) gradient_out[j] /= total_weight;
  for (std::size_t j = 0; j < f; ++j) {
    loss += 0.5 * lambda * weights_and_bias[j] * weights_and_bias[j];
    gradient_out[j] += lambda * weights_and_bias[j];
  }
  return loss;
}

TrainedModel train(ClassifierKind kind, const Hyperparameters& params,
                   const Dataset& data, std::uint64_t seed) {
  if (data.rows.empty()) throw EmptyDatasetError();
  for (const auto& r : data.rows)
    if (r.values.size() != data.schema.size()) throw SchemaMismatchError();

  TrainedModel model;
  model.kind = kind;
  model.params = params;
  model.schema = data.schema;
  model.schema_hash = data.schema.hash();
  model.meta.row_count = data.rows.size();
  model.meta.seed = seed;

  switch (kind) {
    case ClassifierKind::decision_tree: {
      model.structure = train_tree(data, all_rows(data.rows.size()),
                                   params.positive_class_weight,
                                   static_cast<int>(data.schema.size()),
                                   nullptr);
      break;
    }
    case ClassifierKind::random_forest: {
      RandomForestModel forest;
      int max_features = params.max_features > 0
                             ? params.max_features
                             : default_max_features(data.schema.size());
      const std::size_t n = data.rows.size();
      forest.feature_importance.assign(data.schema.size(), 0.0);
      for (int t = 0; t < params.forest_trees; ++t) {
        SplitMix64 rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        std::vector<std::uint32_t> sample;
        if (params.bootstrap) {
          sample.reserve(n);
          for (std::size_t i = 0; i < n; ++i)
            sample.push_back(static_cast<std::uint32_t>(rng.next_below(n)));
        } else {
          sample = all_rows(n);
        }
        bool subsample_features =
            max_features < static_cast<int>(data.schema.size());
        forest.trees.push_back(
            train_tree(data, sample, params.positive_class_weight, max_features,
                       subsample_features ? &rng : nullptr));
        for (std::size_t j = 0; j < data.schema.size(); ++j)
          forest.feature_importance[j] +=
              forest.trees.back().feature_importance[j] / params.forest_trees;
      }
      model.structure = std::move(forest);
      break;
    }
    case ClassifierKind::naive_bayes:
      model.structure = train_naive_bayes(data, params);
      break;
    case ClassifierKind::logistic_regression:
      model.structure = train_logistic(data, params);
      break;
  }
  return model;
}

double TrainedModel::score(std::span<const double> values) const {
  if (values.size() != schema.size()) throw SchemaMismatchError();
  switch (kind) {
    case ClassifierKind::decision_tree:
      return std::get<DecisionTreeModel>(structure).score(values);
    case ClassifierKind::random_forest: {
      const auto& forest = std::get<RandomForestModel>(structure);
      if (forest.trees.empty()) return 0.0;
      long long votes = 0;
      for (const auto& tree : forest.trees)
        if (tree.score(values) >= 0.5) ++votes;
      return static_cast<double>(votes) /
             static_cast<double>(forest.trees.size());
    }
    case ClassifierKind::naive_bayes: {
      const auto& nb = std::get<NaiveBayesModel>(structure);
      double l0 = nb_log_likelihood(nb, 0, values);
      double l1 = nb_log_likelihood(nb, 1, values);
      return 1.0 / (1.0 + std::exp(l0 - l1));
    }
    case ClassifierKind::logistic_regression: {
      const auto& lr = std::get<LogisticRegressionModel>(structure);
      double z = lr.bias;
      for (std::size_t j = 0; j < values.size(); ++j)
        z += lr.weights[j] * (values[j] - lr.feature_mean[j]) /
             lr.feature_scale[j];
      return 1.0 / (1.0 + std::exp(-z));
    }
  }
  return 0.0;
}

std::vector<std::pair<std::string, double>> TrainedModel::top_features(
    std::span<const double> values, std::size_t k) const {
  std::vector<double> contribution(schema.size(), 0.0);
  switch (kind) {
    case ClassifierKind::decision_tree:
      contribution = std::get<DecisionTreeModel>(structure).feature_importance;
      break;
    case ClassifierKind::random_forest:
      contribution = std::get<RandomForestModel>(structure).feature_importance;
      break;
    case ClassifierKind::naive_bayes: {
      const auto& nb = std::get<NaiveBayesModel>(structure);
      for (std::size_t j = 0; j < schema.size(); ++j) {
        auto ll = [&](int c) {
          double var = nb.variance[c][j];
          double d = values[j] - nb.mean[c][j];
          return -0.5 * (std::log(2.0 * M_PI * var) + d * d / var);
        };
        contribution[j] = std::abs(ll(1) - ll(0));
      }
      break;
    }
    case ClassifierKind::logistic_regression: {
      const auto& lr = std::get<LogisticRegressionModel>(structure);
      for (std::size_t j = 0; j < schema.size(); ++j)
        contribution[j] = std::abs(lr.weights[j] * (values[j] -
                                                    lr.feature_mean[j]) /
                                   lr.feature_scale[j]);
      break;
    }
  }
  std::vector<std::size_t> order(schema.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return contribution[a] > contribution[b];
  });
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t i = 0; i < std::min(k, order.size()); ++i)
    out.emplace_back(schema.fields[order[i]].name, values[order[i]]);
  return out;
}

// ---- serialization ----------------------------------------------------------

namespace {

json schema_to_json(const FeatureSchema& s) {
  json fields = json::array();
  for (const auto& f : s.fields)
    fields.push_back(json{
        {"name", f.name},
        {"kind", f.kind == FeatureField::Kind::boolean ? "boolean" : "numeric"}});
  return fields;
}

FeatureSchema schema_from_json(const json& j) {
  FeatureSchema s;
  for (const auto& f : j)
    s.fields.push_back({f.at("name").get<std::string>(),
                        f.at("kind").get<std::string>() == "boolean"
                            ? FeatureField::Kind::boolean
                            : FeatureField::Kind::numeric});
  return s;
}

json tree_to_json(const DecisionTreeModel& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes)
    nodes.push_back(json{{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right},
                         {"leaf_value", n.leaf_value}});
  return json{{"nodes", nodes}, {"feature_importance", t.feature_importance}};
}

DecisionTreeModel tree_from_json(const json& j) {
  DecisionTreeModel t;
  for (const auto& n : j.at("nodes"))
    t.nodes.push_back(TreeNode{n.at("feature").get<int>(),
                               n.at("threshold").get<double>(),
                               n.at("left").get<int>(),
                               n.at("right").get<int>(),
                               n.at("leaf_value").get<double>()});
  t.feature_importance =
      j.value("feature_importance", std::vector<double>(0));
  return t;
}

}  // namespace

json model_to_json(const TrainedModel& model) {
  json structure;
  switch (model.kind) {
    case ClassifierKind::decision_tree:
      structure = tree_to_json(std::get<DecisionTreeModel>(model.structure));
      break;
    case ClassifierKind::random_forest: {
      const auto& forest = std::get<RandomForestModel>(model.structure);
      json trees = json::array();
      for (const auto& t : forest.trees) trees.push_back(tree_to_json(t));
      structure = json{{"trees", trees},
                       {"feature_importance", forest.feature_importance}};
      break;
    }
    case ClassifierKind::naive_bayes: {
      const auto& nb = std::get<NaiveBayesModel>(model.structure);
      structure = json{{"log_prior", {nb.log_prior[0], nb.log_prior[1]}},
                       {"mean", {nb.mean[0], nb.mean[1]}},
                       {"variance", {nb.variance[0], nb.variance[1]}}};
      break;
    }
    case ClassifierKind::logistic_regression: {
      const auto& lr = std::get<LogisticRegressionModel>(model.structure);
      structure = json{{"weights", lr.weights},
                       {"bias", lr.bias},
                       {"feature_mean", lr.feature_mean},
                       {"feature_scale", lr.feature_scale},
                       {"epochs_run", lr.epochs_run},
                       {"final_gradient_norm", lr.final_gradient_norm}};
      break;
    }
  }
  return json{{"format_version", 1},
              {"kind", classifier_kind_to_string(model.kind)},
              {"hyperparameters", model.params.to_json()},
              {"schema", schema_to_json(model.schema)},
              {"schema_hash", model.schema_hash},
              {"threshold", model.threshold},
              {"structure", structure},
              {"metadata", json{{"row_count", model.meta.row_count},
                                {"seed", model.meta.seed},
                                {"trained_at", model.meta.trained_at}}}};
}

TrainedModel model_from_json(const json& j) {
  if (j.value("format_version", 0) != 1)
    throw std::runtime_error("unsupported model format version");
  TrainedModel model;
  model.kind = classifier_kind_from_string(j.at("kind").get<std::string>());
  model.params = Hyperparameters::from_json(j.at("hyperparameters"));
  model.schema = schema_from_json(j.at("schema"));
  model.schema_hash = j.at("schema_hash").get<std::uint64_t>();
  if (model.schema.hash() != model.schema_hash)
    throw std::runtime_error("model schema hash does not match its schema");
  model.threshold = j.at("threshold").get<double>();
  const json& s = j.at("structure");
  switch (model.kind) {
    case ClassifierKind::decision_tree:
      model.structure = tree_from_json(s);
      break;
    case ClassifierKind::random_forest: {
      RandomForestModel forest;
      for (const auto& t : s.at("trees")) forest.trees.push_back(tree_from_json(t));
      forest.feature_importance =
          s.value("feature_importance", std::vector<double>(0));
      model.structure = std::move(forest);
      break;
    }
    case ClassifierKind::naive_bayes: {
      NaiveBayesModel nb;
      nb.log_prior[0] = s.at("log_prior").at(0).get<double>();
      nb.log_prior[1] = s.at("log_prior").at(1).get<double>();
      nb.mean[0] = s.at("mean").at(0).get<std::vector<double>>();
      nb.mean[1] = s.at("mean").at(1).get<std::vector<double>>();
      nb.variance[0] = s.at("variance").at(0).get<std::vector<double>>();
      nb.variance[1] = s.at("variance").at(1).get<std::vector<double>>();
      model.structure = std::move(nb);
      break;
    }
    case ClassifierKind::logistic_regression: {
      LogisticRegressionModel lr;
      lr.weights = s.at("weights").get<std::vector<double>>();
      lr.bias = s.at("bias").get<double>();
      lr.feature_mean = s.at("feature_mean").get<std::vector<double>>();
      lr.feature_scale = s.at("feature_scale").get<std::vector<double>>();
      lr.epochs_run = s.value("epochs_run", 0);
      lr.final_gradient_norm = s.value("final_gradient_norm", 0.0);
      model.structure = std::move(lr);
      break;
    }
  }
  const json& meta = j.at("metadata");
  model.meta.row_count = meta.at("row_count").get<std::size_t>();
  model.meta.seed = meta.at("seed").get<std::uint64_t>();
  model.meta.trained_at = meta.at("trained_at").get<std::int64_t>();
  return model;
}

void save_model(const TrainedModel& model, const std::string& path) {
  write_file(path, model_to_json(model).dump(2) + "\n");
}

TrainedModel load_model(const std::string& path) {
  return model_from_json(json::parse(read_file(path)));
}

// ---- metrics ----------------------------------------------------------------

MetricsReport MetricsReport::from_confusion(long long tn, long long fp,
                                            long long fn, long long tp) {
  MetricsReport m;
  m.tn = tn;
  m.fp = fp;
  m.fn = fn;
  m.tp = tp;
  m.support_vic = tp + fn;
  m.support_lnc = tn + fp;
  if (tp + fn > 0)
    m.recall_vic = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (tp + fp > 0)
    m.precision_vic = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tn + fp > 0)
    m.recall_lnc = static_cast<double>(tn) / static_cast<double>(tn + fp);
  if (tn + fn > 0)
    m.precision_lnc = static_cast<double>(tn) / static_cast<double>(tn + fn);
  return m;
}

json MetricsReport::to_json() const {
  auto opt = [](const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
  };
  return json{{"tn", tn},
              {"fp", fp},
              {"fn", fn},
              {"tp", tp},
              {"recall_vic", opt(recall_vic)},
              {"precision_vic", opt(precision_vic)},
              {"recall_lnc", opt(recall_lnc)},
              {"precision_lnc", opt(precision_lnc)},
              {"roc_area", opt(roc_area)},
              {"support_vic", support_vic},
              {"support_lnc", support_lnc}};
}

std::optional<double> mann_whitney_auc(std::span<const Prediction> predictions) {
  std::size_t n = predictions.size();
  long long n_pos = 0;
  for (const auto& p : predictions) n_pos += p.target == 1;
  long long n_neg = static_cast<long long>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predictions[a].score < predictions[b].score;
  });

  // Midranks over ties, then the Mann-Whitney statistic.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n &&
           predictions[order[j]].score == predictions[order[i]].score)
      ++j;
    double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (predictions[order[k]].target == 1) rank_sum_pos += midrank;
    i = j;
  }
  double u = rank_sum_pos -
             static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

MetricsReport compute_metrics(std::span<const Prediction> predictions) {
  long long tn = 0, fp = 0, fn = 0, tp = 0;
  for (const auto& p : predictions) {
    if (p.target == 1)
      (p.predicted == 1 ? tp : fn)++;
    else
      (p.predicted == 1 ? fp : tn)++;
  }
  MetricsReport m = MetricsReport::from_confusion(tn, fp, fn, tp);
  m.roc_area = mann_whitney_auc(predictions);
  return m;
}

}  // namespace vulnpred
