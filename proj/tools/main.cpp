// vulnpred command line: ingest -> label -> featurize -> train -> eval/score,
// plus the scoring service. Every subcommand is deterministic given its
// inputs and --seed; wall time lives only in the manifest sidecar.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "vulnpred/bot_service.hpp"
#include "vulnpred/change_model.hpp"
#include "vulnpred/classifiers.hpp"
#include "vulnpred/evaluation.hpp"
#include "vulnpred/featurize.hpp"
#include "vulnpred/git_history.hpp"
#include "vulnpred/lineage.hpp"
#include "vulnpred/util.hpp"

namespace vp = vulnpred;
using vp::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

struct ManifestWriter {
  std::string command;
  json config = json::object();
  json inputs = json::object();
  std::uint64_t seed = 0;
  std::chrono::steady_clock::time_point started =
      std::chrono::steady_clock::now();

  void add_input(const std::string& path) {
    if (path.empty()) return;
    inputs[path] = "fnv1a64:" + [&] {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%016llx",
                    static_cast<unsigned long long>(
                        vp::fnv1a64(vp::read_file(path))));
      return std::string(buf);
    }();
  }

  void write_for(const std::string& artifact_path) const {
    if (artifact_path.empty()) return;
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - started)
                       .count();
    json manifest{{"command", command},
                  {"config", config},
                  {"inputs", inputs},
                  {"seed", seed},
                  {"tool_version", kToolVersion},
                  {"wall_time_ms", elapsed}};
    vp::write_file(artifact_path + ".manifest.json", manifest.dump(2) + "\n");
  }
};

vp::DomainRankTable load_ranks(const std::string& path) {
  if (path.empty()) return vp::DomainRankTable::aosp_default();
  return vp::DomainRankTable::from_file(path);
}

std::unique_ptr<vp::GitHistory> load_history(const std::string& fixture,
                                             const std::string& git_dir) {
  if (!fixture.empty())
    return std::make_unique<vp::FixtureHistory>(
        vp::FixtureHistory::from_file(fixture));
  if (!git_dir.empty()) return std::make_unique<vp::GitRepoHistory>(git_dir);
  throw std::invalid_argument("provide --history <fixture.json> or --git-dir");
}

std::string csv_cell(double v) { return json(v).dump(); }

// features.csv: change_id, full schema order, target.
std::string features_to_csv(const std::vector<vp::LabeledChange>& corpus,
                            const std::vector<std::vector<double>>& rows) {
  std::string out = "change_id";
  for (const auto& f : vp::full_schema().fields) out += "," + f.name;
  out += ",target\n";
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    out += corpus[i].change.change_id;
    for (double v : rows[i]) out += "," + csv_cell(v);
    out += "," + std::to_string(vp::label_target(corpus[i].label));
    out += "\n";
  }
  return out;
}

vp::Dataset dataset_from_csv(const std::string& text) {
  std::vector<std::string> lines = vp::split_lines(text);
  if (lines.empty()) throw std::invalid_argument("empty features csv");
  std::vector<std::string> header;
  {
    std::string_view rest = lines[0];
    while (true) {
      std::size_t comma = rest.find(',');
      header.emplace_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
  }
  if (header.size() < 3 || header.front() != "change_id" ||
      header.back() != "target")
    throw std::invalid_argument("features csv must be change_id,...,target");

  vp::Dataset data;
  for (std::size_t c = 1; c + 1 < header.size(); ++c) {
    vp::FeatureField field;
    field.name = header[c];
    field.kind = field.name == "RP_plus2_self"
                     ? vp::FeatureField::Kind::boolean
                     : vp::FeatureField::Kind::numeric;
    data.schema.fields.push_back(field);
  }
  for (std::size_t r = 1; r < lines.size(); ++r) {
    if (vp::trim(lines[r]).empty()) continue;
    vp::DataRow row;
    std::string_view rest = lines[r];
    std::size_t col = 0;
    while (true) {
      std::size_t comma = rest.find(',');
      std::string_view cell = rest.substr(0, comma);
      if (col == 0) {
        row.row_id = std::string(cell);
      } else if (col == header.size() - 1) {
        row.target = std::stoi(std::string(cell));
      } else {
        row.values.push_back(std::stod(std::string(cell)));
      }
      ++col;
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (col != header.size())
      throw std::invalid_argument("csv row arity mismatch at line " +
                                  std::to_string(r + 1));
    data.rows.push_back(std::move(row));
  }
  return data;
}

// Chronological featurization: each change sees only labels known strictly
// before its own submitted_at.
std::vector<std::vector<double>> featurize_causal(
    std::vector<vp::LabeledChange>& corpus, const vp::FeatureConfig& features,
    const vp::PeriodScheme& period, double decay,
    vp::HistoryState* final_state_out) {
  std::vector<std::size_t> by_known(corpus.size());
  std::iota(by_known.begin(), by_known.end(), 0u);
  std::sort(by_known.begin(), by_known.end(), [&](std::size_t a, std::size_t b) {
    if (corpus[a].label.known_at != corpus[b].label.known_at)
      return corpus[a].label.known_at < corpus[b].label.known_at;
    return corpus[a].change.change_id < corpus[b].change.change_id;
  });
  vp::HistoryState state(period, decay);
  std::vector<std::vector<double>> rows(corpus.size());
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {  // corpus is submit-sorted
    while (cursor < by_known.size() &&
           corpus[by_known[cursor]].label.known_at <
               corpus[i].change.submitted_at) {
      state.record_labeled_change(corpus[by_known[cursor]]);
      ++cursor;
    }
    rows[i] = vp::extract_feature_vector(corpus[i].change, state, features);
  }
  if (final_state_out) {
    while (cursor < by_known.size()) {
      state.record_labeled_change(corpus[by_known[cursor]]);
      ++cursor;
    }
    *final_state_out = std::move(state);
  }
  return rows;
}

int run(int argc, char** argv) {
  CLI::App app{"vulnerability-prediction toolkit"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "master seed for all randomness")
      ->capture_default_str();

  // ---- ingest ----
  auto* ingest = app.add_subcommand("ingest", "validate and canonicalize exports");
  std::string in_changes, in_issues, out_changes, out_issues;
  ingest->add_option("--changes", in_changes, "changes.jsonl")->required();
  ingest->add_option("--issues", in_issues, "issues.jsonl");
  ingest->add_option("--out-changes", out_changes, "canonical changes output")
      ->required();
  ingest->add_option("--out-issues", out_issues, "canonical issues output");

  // ---- label ----
  auto* label = app.add_subcommand("label", "derive ViC/VfC/LNC labels via blame lineage");
  std::string l_changes, l_issues, l_history, l_git_dir, l_out, l_unresolved,
      l_delay = "0s", l_min_severity;
  bool l_no_require_cve = false;
  label->add_option("--changes", l_changes)->required();
  label->add_option("--issues", l_issues)->required();
  label->add_option("--history", l_history, "fixture history JSON");
  label->add_option("--git-dir", l_git_dir, "git work tree");
  label->add_option("--out", l_out, "labels.jsonl")->required();
  label->add_option("--unresolved", l_unresolved, "side report path");
  label->add_option("--label-delay", l_delay, "extra ViC visibility delay (e.g. 14d)");
  label->add_flag("--no-require-cve", l_no_require_cve,
                  "treat issues without CVE ids as vulnerabilities too");
  label->add_option("--min-severity", l_min_severity,
                    "drop issues below this severity");

  // ---- featurize ----
  auto* featurize = app.add_subcommand("featurize", "extract the feature matrix");
  std::string f_changes, f_labels, f_out, f_ranks, f_period = "month",
                                                   f_state_out;
  double f_decay = 1.0;
  featurize->add_option("--changes", f_changes)->required();
  featurize->add_option("--labels", f_labels, "labels.jsonl (optional; default all-LNC)");
  featurize->add_option("--out", f_out, "features.csv")->required();
  featurize->add_option("--domain-ranks", f_ranks, "domain rank config (TOML)");
  featurize->add_option("--period", f_period, "month or a duration like 30d");
  featurize->add_option("--decay", f_decay, "per-period decay on account scores");
  featurize->add_option("--state-out", f_state_out,
                        "write the end-of-corpus history checkpoint");

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "train a classifier from features.csv");
  std::string t_features, t_model, t_classifier = "random-forest";
  double t_threshold = 0.5;
  int t_trees = 100, t_max_features = 0;
  bool t_no_bootstrap = false;
  double t_positive_weight = 1.0;
  train_cmd->add_option("--features", t_features, "features.csv")->required();
  train_cmd->add_option("--model", t_model, "model.json output")->required();
  train_cmd->add_option("--classifier", t_classifier,
                        "decision-tree|random-forest|naive-bayes|logistic-regression");
  train_cmd->add_option("--threshold", t_threshold, "decision threshold");
  train_cmd->add_option("--trees", t_trees, "forest size");
  train_cmd->add_option("--max-features", t_max_features,
                        "candidate features per split (0 = log2(F)+1)");
  train_cmd->add_flag("--no-bootstrap", t_no_bootstrap);
  train_cmd->add_option("--positive-class-weight", t_positive_weight);

  // ---- eval ----
  auto* eval = app.add_subcommand("eval", "run an evaluation protocol");
  eval->require_subcommand(1);
  std::string e_changes, e_labels, e_out, e_classifier = "random-forest",
                                          e_features = "all", e_ranks;
  double e_threshold = 0.5;
  int e_trees = 100;
  auto add_eval_common = [&](CLI::App* cmd) {
    cmd->add_option("--changes", e_changes)->required();
    cmd->add_option("--labels", e_labels)->required();
    cmd->add_option("--out", e_out, "report path prefix (.json/.csv)")->required();
    cmd->add_option("--classifier", e_classifier);
    cmd->add_option("--features", e_features, "subset expression, e.g. VH+CC+RP");
    cmd->add_option("--threshold", e_threshold);
    cmd->add_option("--trees", e_trees);
    cmd->add_option("--domain-ranks", e_ranks);
  };
  auto* eval_nfold = eval->add_subcommand("nfold", "stratified N-fold validation");
  int e_n = 12;
  add_eval_common(eval_nfold);
  eval_nfold->add_option("--n", e_n, "fold count");
  auto* eval_online = eval->add_subcommand("online", "per-period retraining backtest");
  std::string e_period = "month", e_window = "cumulative", e_delay = "0s";
  add_eval_common(eval_online);
  eval_online->add_option("--period", e_period);
  eval_online->add_option("--window", e_window, "cumulative|previous-period");
  eval_online->add_option("--label-delay", e_delay);
  auto* eval_ablation = eval->add_subcommand("ablation", "feature-subset comparison");
  std::string a_subsets;
  int a_n = 12;
  add_eval_common(eval_ablation);
  eval_ablation->add_option("--subsets", a_subsets,
                            "semicolon-separated subset expressions "
                            "(default: families, VH+CC+RP, global five)");
  eval_ablation->add_option("--n", a_n);

  // ---- score ----
  auto* score = app.add_subcommand("score", "score one change file");
  std::string s_model, s_state, s_change, s_out, s_ranks,
      s_trigger = "manual";
  score->add_option("--model", s_model)->required();
  score->add_option("--state", s_state)->required();
  score->add_option("--change", s_change, "single ChangeRecord JSON file")->required();
  score->add_option("--out", s_out, "verdict path (default stdout)");
  score->add_option("--domain-ranks", s_ranks);
  score->add_option("--trigger", s_trigger);

  // ---- serve ----
  auto* serve = app.add_subcommand("serve", "run the review-bot scoring service");
  std::string v_model, v_state, v_ranks, v_reviewers, v_feedback_log,
      v_rotation_state, v_host = "127.0.0.1";
  int v_port = 8080;
  double v_testing_floor = -1.0;
  serve->add_option("--model", v_model)->required();
  serve->add_option("--state", v_state)->required();
  serve->add_option("--port", v_port);
  serve->add_option("--host", v_host);
  serve->add_option("--domain-ranks", v_ranks);
  serve->add_option("--reviewers", v_reviewers, "comma-separated security pool");
  serve->add_option("--feedback-log", v_feedback_log);
  serve->add_option("--rotation-state", v_rotation_state);
  serve->add_option("--security-testing-floor", v_testing_floor);

  CLI11_PARSE(app, argc, argv);

  if (ingest->parsed()) {
    ManifestWriter manifest{"ingest"};
    manifest.seed = seed;
    manifest.add_input(in_changes);
    auto changes = vp::ingest_changes(vp::read_file(in_changes));
    vp::write_file(out_changes, vp::emit_changes(changes));
    manifest.config = json{{"changes", in_changes}, {"out_changes", out_changes}};
    if (!in_issues.empty()) {
      manifest.add_input(in_issues);
      auto issues = vp::ingest_issues(vp::read_file(in_issues));
      if (out_issues.empty())
        throw std::invalid_argument("--out-issues required with --issues");
      vp::write_file(out_issues, vp::emit_issues(issues));
      manifest.config["issues"] = in_issues;
      manifest.config["out_issues"] = out_issues;
      manifest.write_for(out_issues);
    }
    manifest.write_for(out_changes);
    std::cout << "ingested " << vp::ingest_changes(vp::read_file(in_changes)).size()
              << " changes\n";
    return 0;
  }

  if (label->parsed()) {
    ManifestWriter manifest{"label"};
    manifest.seed = seed;
    manifest.add_input(l_changes);
    manifest.add_input(l_issues);
    if (!l_history.empty()) manifest.add_input(l_history);
    auto changes = vp::ingest_changes(vp::read_file(l_changes));
    auto issues = vp::ingest_issues(vp::read_file(l_issues));
    auto history = load_history(l_history, l_git_dir);
    vp::CorpusBuildOptions options;
    options.label_delay_seconds = vp::parse_duration_seconds(l_delay);
    options.cve_filter.require_cve = !l_no_require_cve;
    if (!l_min_severity.empty())
      options.cve_filter.min_severity = vp::severity_from_string(l_min_severity);
    vp::LabeledCorpus built =
        vp::build_labeled_corpus(changes, issues, *history, options);
    vp::write_file(l_out, vp::emit_labels(built.corpus));
    manifest.config = json{{"label_delay", l_delay},
                           {"require_cve", !l_no_require_cve},
                           {"min_severity", l_min_severity}};
    manifest.write_for(l_out);
    if (!l_unresolved.empty()) {
      std::string side;
      for (const auto& [bug, entry] : built.unresolved_links)
        side += json{{"type", "unresolved_link"}, {"bug_id", bug},
                     {"entry", entry}}.dump() + "\n";
      for (const auto& note : built.side_report)
        side += json{{"type", "lineage"}, {"vfc_change_id", note.vfc_change_id},
                     {"path", note.path}, {"line", note.line_number},
                     {"reason", note.reason}}.dump() + "\n";
      vp::write_file(l_unresolved, side);
    }
    long long vics = 0, vfcs = 0;
    for (const auto& lc : built.corpus) {
      vics += lc.label.kind == vp::LabelKind::ViC;
      vfcs += lc.label.kind == vp::LabelKind::VfC;
    }
    std::cout << "labeled " << built.corpus.size() << " changes: " << vics
              << " ViC, " << vfcs << " VfC, "
              << static_cast<long long>(built.corpus.size()) - vics - vfcs
              << " LNC\n";
    return 0;
  }

  if (featurize->parsed()) {
    ManifestWriter manifest{"featurize"};
    manifest.seed = seed;
    manifest.add_input(f_changes);
    if (!f_labels.empty()) manifest.add_input(f_labels);
    if (!f_ranks.empty()) manifest.add_input(f_ranks);
    auto changes = vp::ingest_changes(vp::read_file(f_changes));
    auto corpus = vp::attach_labels(
        std::move(changes), f_labels.empty() ? "" : vp::read_file(f_labels));
    vp::FeatureConfig features;
    features.ranks = load_ranks(f_ranks);
    vp::PeriodScheme period = vp::PeriodScheme::parse(f_period);
    vp::HistoryState final_state(period, f_decay);
    auto rows = featurize_causal(corpus, features, period, f_decay,
                                 f_state_out.empty() ? nullptr : &final_state);
    vp::write_file(f_out, features_to_csv(corpus, rows));
    manifest.config = json{{"period", f_period}, {"decay", f_decay},
                           {"domain_ranks", f_ranks}};
    manifest.write_for(f_out);
    if (!f_state_out.empty()) {
      final_state.save(f_state_out);
      manifest.write_for(f_state_out);
    }
    std::cout << "featurized " << corpus.size() << " changes ("
              << vp::full_schema().size() << " features)\n";
    return 0;
  }

  if (train_cmd->parsed()) {
    ManifestWriter manifest{"train"};
    manifest.seed = seed;
    manifest.add_input(t_features);
    vp::Dataset data = dataset_from_csv(vp::read_file(t_features));
    vp::Hyperparameters params;
    params.forest_trees = t_trees;
    params.bootstrap = !t_no_bootstrap;
    params.max_features = t_max_features;
    params.positive_class_weight = t_positive_weight;
    vp::TrainedModel model = vp::train(
        vp::classifier_kind_from_string(t_classifier), params, data, seed);
    model.threshold = t_threshold;
    vp::save_model(model, t_model);
    manifest.config = json{{"classifier", t_classifier},
                           {"threshold", t_threshold},
                           {"hyperparameters", params.to_json()}};
    manifest.write_for(t_model);
    std::cout << "trained " << t_classifier << " on " << data.rows.size()
              << " rows\n";
    return 0;
  }

  if (eval->parsed()) {
    CLI::App* mode = eval->get_subcommands().front();
    ManifestWriter manifest{"eval " + mode->get_name()};
    manifest.seed = seed;
    manifest.add_input(e_changes);
    manifest.add_input(e_labels);
    if (!e_ranks.empty()) manifest.add_input(e_ranks);
    auto changes = vp::ingest_changes(vp::read_file(e_changes));
    vp::Corpus corpus =
        vp::attach_labels(std::move(changes), vp::read_file(e_labels));

    vp::ExperimentConfig config;
    config.classifier = vp::classifier_kind_from_string(e_classifier);
    config.params.forest_trees = e_trees;
    config.feature_subset = e_features;
    config.threshold = e_threshold;
    config.seed = seed;
    config.features.ranks = load_ranks(e_ranks);

    json report_json;
    std::string report_csv;
    if (mode == eval_nfold) {
      config.nfold_n = e_n;
      vp::EvaluationReport report = vp::run_nfold(corpus, config);
      report_json = report.to_json();
      report_csv = report.to_csv();
    } else if (mode == eval_online) {
      config.period = vp::PeriodScheme::parse(e_period);
      config.window = vp::window_kind_from_string(e_window);
      config.label_delay_seconds = vp::parse_duration_seconds(e_delay);
      vp::EvaluationReport report = vp::run_online(corpus, config);
      report_json = report.to_json();
      report_csv = report.to_csv();
    } else {
      config.nfold_n = a_n;
      std::vector<std::string> subsets;
      if (a_subsets.empty()) {
        subsets = {"all"};
        for (const auto& fam : vp::feature_family_names()) subsets.push_back(fam);
        subsets.push_back("VH+CC+RP");
        subsets.push_back(vp::kGlobalFeatureSubset);
      } else {
        std::string_view rest = a_subsets;
        while (true) {
          std::size_t semi = rest.find(';');
          subsets.emplace_back(vp::trim(rest.substr(0, semi)));
          if (semi == std::string_view::npos) break;
          rest = rest.substr(semi + 1);
        }
      }
      auto rows =
          vp::run_ablation(corpus, config, vp::Protocol::nfold, subsets);
      report_json = vp::ablation_to_json(rows);
      report_csv = "subset,tn,fp,fn,tp,recall_vic,precision_vic,roc_area\n";
      for (const auto& row : rows) {
        const vp::MetricsReport& m = row.report.pooled;
        auto num = [](const std::optional<double>& v) {
          return v ? json(*v).dump() : std::string();
        };
        report_csv += "\"" + row.subset + "\"," + std::to_string(m.tn) + "," +
                      std::to_string(m.fp) + "," + std::to_string(m.fn) + "," +
                      std::to_string(m.tp) + "," + num(m.recall_vic) + "," +
                      num(m.precision_vic) + "," + num(m.roc_area) + "\n";
      }
    }
    vp::write_file(e_out + ".json", report_json.dump(2) + "\n");
    vp::write_file(e_out + ".csv", report_csv);
    manifest.config = config.to_json();
    manifest.config["mode"] = mode->get_name();
    manifest.write_for(e_out + ".json");
    std::cout << "report written to " << e_out << ".json\n";
    return 0;
  }

  if (score->parsed()) {
    ManifestWriter manifest{"score"};
    manifest.seed = seed;
    manifest.add_input(s_model);
    manifest.add_input(s_state);
    manifest.add_input(s_change);
    vp::FeatureConfig features;
    features.ranks = load_ranks(s_ranks);
    vp::BotService service({vp::load_model(s_model)},
                           vp::HistoryState::load(s_state), features, {});
    json payload = json::parse(vp::read_file(s_change));
    vp::Verdict verdict = service.handle_score_request(
        payload, vp::trigger_from_string(s_trigger));
    std::string text = verdict.to_json().dump(2) + "\n";
    if (s_out.empty()) {
      std::cout << text;
    } else {
      vp::write_file(s_out, text);
      manifest.config = json{{"trigger", s_trigger}};
      manifest.write_for(s_out);
    }
    return 0;
  }

  if (serve->parsed()) {
    vp::FeatureConfig features;
    features.ranks = load_ranks(v_ranks);
    vp::ServiceConfig service_config;
    if (!v_reviewers.empty()) {
      std::string_view rest = v_reviewers;
      while (true) {
        std::size_t comma = rest.find(',');
        service_config.reviewer_pool.emplace_back(vp::trim(rest.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
      }
    }
    service_config.feedback_log_path = v_feedback_log;
    service_config.rotation_state_path = v_rotation_state;
    service_config.security_testing_floor = v_testing_floor;
    vp::BotService service({vp::load_model(v_model)},
                           vp::HistoryState::load(v_state), features,
                           service_config);
    std::cout << "serving on " << v_host << ":" << v_port << "\n";
    return vp::run_http_server(service, v_host, v_port);
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const vp::IngestError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
}
