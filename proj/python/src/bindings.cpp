#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vulnpred/change_model.hpp"
#include "vulnpred/classifiers.hpp"
#include "vulnpred/evaluation.hpp"
#include "vulnpred/featurize.hpp"
#include "vulnpred/git_history.hpp"
#include "vulnpred/lineage.hpp"
#include "vulnpred/text_mining.hpp"

namespace py = pybind11;
namespace vp = vulnpred;

namespace {

py::object json_to_py(const vp::json& j) {
  static py::object loads = py::module_::import("json").attr("loads");
  return loads(j.dump());
}

vp::json py_to_json(const py::object& obj) {
  static py::object dumps = py::module_::import("json").attr("dumps");
  return vp::json::parse(dumps(obj).cast<std::string>());
}

vp::ExperimentConfig config_from_dict(const py::dict& d) {
  vp::ExperimentConfig c;
  if (d.contains("classifier"))
    c.classifier =
        vp::classifier_kind_from_string(d["classifier"].cast<std::string>());
  if (d.contains("trees")) c.params.forest_trees = d["trees"].cast<int>();
  if (d.contains("max_features"))
    c.params.max_features = d["max_features"].cast<int>();
  if (d.contains("bootstrap")) c.params.bootstrap = d["bootstrap"].cast<bool>();
  if (d.contains("feature_subset"))
    c.feature_subset = d["feature_subset"].cast<std::string>();
  if (d.contains("threshold")) c.threshold = d["threshold"].cast<double>();
  if (d.contains("seed")) c.seed = d["seed"].cast<std::uint64_t>();
  if (d.contains("n")) c.nfold_n = d["n"].cast<int>();
  if (d.contains("period"))
    c.period = vp::PeriodScheme::parse(d["period"].cast<std::string>());
  if (d.contains("window"))
    c.window = vp::window_kind_from_string(d["window"].cast<std::string>());
  if (d.contains("label_delay_seconds"))
    c.label_delay_seconds = d["label_delay_seconds"].cast<std::int64_t>();
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "vulnerability-prediction toolkit core";

  py::register_exception<vp::IngestError>(m, "IngestError");

  py::class_<vp::ChangeRecord>(m, "ChangeRecord")
      .def_readonly("change_id", &vp::ChangeRecord::change_id)
      .def_readonly("project", &vp::ChangeRecord::project)
      .def_readonly("created_at", &vp::ChangeRecord::created_at)
      .def_readonly("submitted_at", &vp::ChangeRecord::submitted_at)
      .def_readonly("description", &vp::ChangeRecord::description)
      .def("to_dict",
           [](const vp::ChangeRecord& c) { return json_to_py(vp::change_to_json(c)); })
      .def("__repr__", [](const vp::ChangeRecord& c) {
        return "<ChangeRecord " + c.change_id + ">";
      });

  py::class_<vp::LabeledChange>(m, "LabeledChange")
      .def_readonly("change", &vp::LabeledChange::change)
      .def_property_readonly("kind",
                             [](const vp::LabeledChange& lc) {
                               return vp::label_kind_to_string(lc.label.kind);
                             })
      .def_property_readonly("known_at", [](const vp::LabeledChange& lc) {
        return lc.label.known_at;
      })
      .def_property_readonly("target", [](const vp::LabeledChange& lc) {
        return vp::label_target(lc.label);
      });

  m.def("ingest_changes", [](const std::string& jsonl) {
    return vp::ingest_changes(jsonl);
  });
  m.def("ingest_issues_summary", [](const std::string& jsonl) {
    auto issues = vp::ingest_issues(jsonl);
    py::list out;
    for (const auto& i : issues) out.append(json_to_py(vp::issue_to_json(i)));
    return out;
  });
  m.def("emit_changes", [](const std::vector<vp::ChangeRecord>& changes) {
    return vp::emit_changes(changes);
  });

  py::class_<vp::FixtureHistory>(m, "FixtureHistory")
      .def_static("from_json",
                  [](const py::object& obj) {
                    return vp::FixtureHistory::from_json(py_to_json(obj));
                  })
      .def_static("from_file", &vp::FixtureHistory::from_file)
      .def("commit_count", &vp::FixtureHistory::commit_count);

  m.def(
      "build_labeled_corpus",
      [](const std::vector<vp::ChangeRecord>& changes,
         const std::string& issues_jsonl, const vp::FixtureHistory& history,
         std::int64_t label_delay_seconds, bool require_cve) {
        auto issues = vp::ingest_issues(issues_jsonl);
        vp::CorpusBuildOptions options;
        options.label_delay_seconds = label_delay_seconds;
        options.cve_filter.require_cve = require_cve;
        vp::LabeledCorpus built =
            vp::build_labeled_corpus(changes, issues, history, options);
        return built.corpus;
      },
      py::arg("changes"), py::arg("issues_jsonl"), py::arg("history"),
      py::arg("label_delay_seconds") = 0, py::arg("require_cve") = true);

  m.def("attach_labels", [](std::vector<vp::ChangeRecord> changes,
                            const std::string& labels_jsonl) {
    return vp::attach_labels(std::move(changes), labels_jsonl);
  });
  m.def("emit_labels", [](const std::vector<vp::LabeledChange>& corpus) {
    return vp::emit_labels(corpus);
  });

  m.def("feature_names", [] {
    std::vector<std::string> names;
    for (const auto& f : vp::full_schema().fields) names.push_back(f.name);
    return names;
  });

  py::class_<vp::HistoryState>(m, "HistoryState")
      .def(py::init([](const std::string& period, double decay) {
             return vp::HistoryState(vp::PeriodScheme::parse(period), decay);
           }),
           py::arg("period") = "month", py::arg("decay") = 1.0)
      .def("record", &vp::HistoryState::record_labeled_change)
      .def("vh_score", &vp::HistoryState::vh_score)
      .def("save", &vp::HistoryState::save)
      .def_static("load", &vp::HistoryState::load);

  m.def(
      "extract_features",
      [](const vp::ChangeRecord& change, const vp::HistoryState& state) {
        return vp::extract_feature_vector(change, state, vp::FeatureConfig{});
      },
      "full-schema feature vector for one change against a history state");

  m.def("featurize_corpus",
        [](const std::vector<vp::LabeledChange>& corpus) {
          // Chronological: each change sees labels known before its submit
          // time; returns (matrix, targets, change_ids).
          std::vector<std::size_t> by_known(corpus.size());
          std::iota(by_known.begin(), by_known.end(), 0u);
          std::sort(by_known.begin(), by_known.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (corpus[a].label.known_at != corpus[b].label.known_at)
                        return corpus[a].label.known_at < corpus[b].label.known_at;
                      return corpus[a].change.change_id <
                             corpus[b].change.change_id;
                    });
          std::vector<std::size_t> by_submit(corpus.size());
          std::iota(by_submit.begin(), by_submit.end(), 0u);
          std::sort(by_submit.begin(), by_submit.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (corpus[a].change.submitted_at !=
                          corpus[b].change.submitted_at)
                        return corpus[a].change.submitted_at <
                               corpus[b].change.submitted_at;
                      return corpus[a].change.change_id <
                             corpus[b].change.change_id;
                    });
          vp::HistoryState state;
          vp::FeatureConfig config;
          std::vector<std::vector<double>> matrix(corpus.size());
          std::vector<int> targets(corpus.size());
          std::vector<std::string> ids(corpus.size());
          std::size_t cursor = 0;
          for (std::size_t pos = 0; pos < by_submit.size(); ++pos) {
            std::size_t i = by_submit[pos];
            while (cursor < by_known.size() &&
                   corpus[by_known[cursor]].label.known_at <
                       corpus[i].change.submitted_at) {
              state.record_labeled_change(corpus[by_known[cursor]]);
              ++cursor;
            }
            matrix[pos] = vp::extract_feature_vector(corpus[i].change, state,
                                                     config);
            targets[pos] = vp::label_target(corpus[i].label);
            ids[pos] = corpus[i].change.change_id;
          }
          return py::make_tuple(matrix, targets, ids);
        });

  py::class_<vp::TrainedModel>(m, "TrainedModel")
      .def_property_readonly("kind",
                             [](const vp::TrainedModel& model) {
                               return vp::classifier_kind_to_string(model.kind);
                             })
      .def_readwrite("threshold", &vp::TrainedModel::threshold)
      .def("score",
           [](const vp::TrainedModel& model, const std::vector<double>& values) {
             return model.score(values);
           })
      .def("classify",
           [](const vp::TrainedModel& model, const std::vector<double>& values) {
             return model.classify(values);
           })
      .def("save", &vp::save_model)
      .def_static("load", &vp::load_model)
      .def("to_dict", [](const vp::TrainedModel& model) {
        return json_to_py(vp::model_to_json(model));
      });

  m.def(
      "train",
      [](const std::string& kind, const std::vector<std::vector<double>>& rows,
         const std::vector<int>& targets,
         const std::vector<std::string>& feature_names, std::uint64_t seed,
         const py::dict& params) {
        if (rows.size() != targets.size())
          throw std::invalid_argument("rows/targets length mismatch");
        vp::Dataset data;
        if (feature_names.empty()) {
          data.schema = vp::full_schema();
        } else {
          for (const auto& name : feature_names)
            data.schema.fields.push_back(
                {name, name == "RP_plus2_self"
                           ? vp::FeatureField::Kind::boolean
                           : vp::FeatureField::Kind::numeric});
        }
        for (std::size_t i = 0; i < rows.size(); ++i)
          data.rows.push_back({rows[i], targets[i], 1.0, std::to_string(i)});
        vp::Hyperparameters hp;
        if (params.contains("trees")) hp.forest_trees = params["trees"].cast<int>();
        if (params.contains("bootstrap"))
          hp.bootstrap = params["bootstrap"].cast<bool>();
        if (params.contains("max_features"))
          hp.max_features = params["max_features"].cast<int>();
        return vp::train(vp::classifier_kind_from_string(kind), hp, data, seed);
      },
      py::arg("kind"), py::arg("rows"), py::arg("targets"),
      py::arg("feature_names") = std::vector<std::string>{},
      py::arg("seed") = 0, py::arg("params") = py::dict());

  m.def("metrics_from_confusion",
        [](long long tn, long long fp, long long fn, long long tp) {
          return json_to_py(
              vp::MetricsReport::from_confusion(tn, fp, fn, tp).to_json());
        });
  m.def("compute_metrics", [](const std::vector<int>& targets,
                              const std::vector<int>& predicted,
                              const std::vector<double>& scores) {
    if (targets.size() != predicted.size() || targets.size() != scores.size())
      throw std::invalid_argument("length mismatch");
    std::vector<vp::Prediction> preds(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i)
      preds[i] = {targets[i], predicted[i], scores[i]};
    return json_to_py(vp::compute_metrics(preds).to_json());
  });

  m.def("run_nfold", [](const std::vector<vp::LabeledChange>& corpus,
                        const py::dict& config) {
    return json_to_py(vp::run_nfold(corpus, config_from_dict(config)).to_json());
  });
  m.def("run_online", [](const std::vector<vp::LabeledChange>& corpus,
                         const py::dict& config) {
    return json_to_py(vp::run_online(corpus, config_from_dict(config)).to_json());
  });
  m.def("run_ablation", [](const std::vector<vp::LabeledChange>& corpus,
                           const py::dict& config,
                           const std::vector<std::string>& subsets) {
    auto rows = vp::run_ablation(corpus, config_from_dict(config),
                                 vp::Protocol::nfold, subsets);
    return json_to_py(vp::ablation_to_json(rows));
  });

  m.def("strip_comments_and_strings", [](const std::vector<std::string>& lines) {
    return vp::strip_comments_and_strings(lines).lines;
  });
  m.def("classify_tokens", [](const std::vector<std::string>& lines) {
    vp::TokenCounts counts = vp::classify_tokens(lines);
    py::dict out;
    const char* names[] = {"arithmetic", "comparison", "conditional", "loop",
                           "assignment", "logical",    "memory_access", "other"};
    for (std::size_t i = 0; i < vp::kTokenClassCount; ++i)
      out[names[i]] = counts.by_class[i];
    return out;
  });

  m.attr("__version__") = "0.1.0";
}
