#include "vulnpred/bot_service.hpp"

#include <chrono>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "vulnpred/util.hpp"

namespace vulnpred {

std::string trigger_to_string(Trigger t) {
  switch (t) {
    case Trigger::sent_for_review: return "sent_for_review";
    case Trigger::new_patch_set: return "new_patch_set";
    case Trigger::submitted: return "submitted";
    case Trigger::manual: return "manual";
  }
  return "manual";
}

Trigger trigger_from_string(std::string_view s) {
  if (s == "sent_for_review") return Trigger::sent_for_review;
  if (s == "new_patch_set") return Trigger::new_patch_set;
  if (s == "submitted") return Trigger::submitted;
  if (s == "manual") return Trigger::manual;
  throw MalformedPayload("unknown trigger: " + std::string(s));
}

json Verdict::to_json() const {
  json features = json::array();
  for (const auto& [name, value] : top_features)
    features.push_back(json{{"name", name}, {"value", value}});
  json j{{"change_id", change_id},
         {"label", likely_vulnerable ? "likely_vulnerable" : "likely_normal"},
         {"score", score},
         {"threshold", threshold},
         {"model_version", model_version},
         {"top_features", features},
         {"suggested_action", suggested_action},
         {"trigger", trigger_to_string(trigger)}};
  j["assigned_reviewer"] = assigned_reviewer ? json(*assigned_reviewer)
                                             : json(nullptr);
  return j;
}

json FeedbackAck::to_json() const {
  return json{{"status", "ok"},
              {"duplicate", duplicate},
              {"unknown_change", unknown_change}};
}

BotService::BotService(std::vector<TrainedModel> models, HistoryState state,
                       FeatureConfig features, ServiceConfig config)
    : features_(std::move(features)), config_(std::move(config)) {
  if (models.empty()) throw std::invalid_argument("service needs a model");
  auto snap = std::make_shared<Snapshot>();
  snap->models = std::move(models);
  snap->state = std::move(state);
  snap->version = 1;
  snapshot_ = std::move(snap);

  if (!config_.rotation_state_path.empty()) {
    std::ifstream in(config_.rotation_state_path);
    if (in) {
      json j = json::parse(in, nullptr, false);
      if (j.is_object() && j.contains("cursor"))
        rotation_cursor_ = j.at("cursor").get<std::size_t>();
      if (!config_.reviewer_pool.empty())
        rotation_cursor_ %= config_.reviewer_pool.size();
    }
  }
}

std::shared_ptr<const BotService::Snapshot> BotService::current() const {
  std::lock_guard<std::mutex> lock(snapshot_mutex_);
  return snapshot_;
}

int BotService::version() const { return current()->version; }

double BotService::ensemble_score(const Snapshot& snap,
                                  std::span<const double> values) const {
  if (snap.models.size() == 1) return snap.models.front().score(values);
  // Majority vote across models; the fraction doubles as the score.
  int votes = 0;
  for (const auto& m : snap.models)
    if (m.score(values) >= m.threshold) ++votes;
  return static_cast<double>(votes) / static_cast<double>(snap.models.size());
}

Verdict BotService::handle_score_request(const json& payload, Trigger trigger) {
  ChangeRecord change;
  try {
    change = change_from_json(payload);
  } catch (const IngestError& e) {
    throw MalformedPayload(e.what());
  }

  std::shared_ptr<const Snapshot> snap = current();
  const TrainedModel& primary = snap->models.front();
  primary.ensure_schema(full_schema());

  std::vector<double> values =
      extract_feature_vector(change, snap->state, features_);

  Verdict verdict;
  verdict.change_id = change.change_id;
  verdict.trigger = trigger;
  verdict.threshold = primary.threshold;
  verdict.model_version = snap->version;
  verdict.score = ensemble_score(*snap, values);
  verdict.likely_vulnerable = verdict.score >= verdict.threshold;
  verdict.top_features =
      primary.top_features(values, config_.top_feature_count);
  if (verdict.likely_vulnerable)
    verdict.suggested_action = "secure_review";
  else if (config_.security_testing_floor >= 0.0 &&
           verdict.score >= config_.security_testing_floor)
    verdict.suggested_action = "security_testing";
  else
    verdict.suggested_action = "none";

  if (verdict.likely_vulnerable && !config_.reviewer_pool.empty()) {
    std::lock_guard<std::mutex> lock(pool_mutex_);
    verdict.assigned_reviewer = config_.reviewer_pool[rotation_cursor_];
    rotation_cursor_ = (rotation_cursor_ + 1) % config_.reviewer_pool.size();
    if (!config_.rotation_state_path.empty())
      write_file(config_.rotation_state_path,
                 json{{"cursor", rotation_cursor_}}.dump() + "\n");
  }

  {
    std::lock_guard<std::mutex> lock(scored_mutex_);
    scored_ids_.insert(change.change_id);
  }
  return verdict;
}

FeedbackAck BotService::handle_feedback(const std::string& change_id,
                                        const std::string& confirmed_label) {
  label_kind_from_string(confirmed_label);  // validates
  FeedbackAck ack;
  {
    std::lock_guard<std::mutex> lock(scored_mutex_);
    ack.unknown_change = scored_ids_.count(change_id) == 0;
  }
  std::lock_guard<std::mutex> lock(feedback_mutex_);
  ack.duplicate = !feedback_seen_.insert(change_id).second;
  if (!ack.duplicate && !config_.feedback_log_path.empty()) {
    std::ofstream out(config_.feedback_log_path, std::ios::app);
    out << json{{"change_id", change_id},
                {"label", confirmed_label},
                {"unknown_change", ack.unknown_change}}
               .dump()
        << "\n";
  }
  return ack;
}

void BotService::swap_model(const std::string& model_path,
                            const std::string& state_path) {
  // Full validation before the swap; any throw leaves the old snapshot live.
  TrainedModel model = load_model(model_path);
  model.ensure_schema(full_schema());
  HistoryState state = HistoryState::load(state_path);

  auto snap = std::make_shared<Snapshot>();
  snap->models.push_back(std::move(model));
  snap->state = std::move(state);
  std::lock_guard<std::mutex> lock(snapshot_mutex_);
  snap->version = snapshot_->version + 1;
  snapshot_ = std::move(snap);
}

json BotService::model_info() const {
  std::shared_ptr<const Snapshot> snap = current();
  const TrainedModel& m = snap->models.front();
  return json{{"version", snap->version},
              {"kind", classifier_kind_to_string(m.kind)},
              {"schema_hash", m.schema_hash},
              {"threshold", m.threshold},
              {"models", snap->models.size()}};
}

json BotService::render_notification(const Verdict& verdict) const {
  if (!verdict.likely_vulnerable) return json(nullptr);
  std::string message =
      "Potentially vulnerable change: score " + json(verdict.score).dump() +
      " >= threshold " + json(verdict.threshold).dump() + " (model v" +
      std::to_string(verdict.model_version) + ").";
  message += " Signals:";
  for (const auto& [name, value] : verdict.top_features)
    message += " " + name + "=" + json(value).dump();
  message += ". Suggested action: " + verdict.suggested_action + ".";
  if (verdict.assigned_reviewer)
    message += " Assigned security reviewer: " + *verdict.assigned_reviewer + ".";
  if (verdict.trigger == Trigger::manual)
    message += " (manually requested)";
  return json{{"change_id", verdict.change_id},
              {"message", message},
              {"reviewer", verdict.assigned_reviewer
                               ? json(*verdict.assigned_reviewer)
                               : json(nullptr)}};
}

int run_http_server(BotService& service, const std::string& host, int port,
                    std::atomic<int>* ready_port, std::atomic<bool>* stop) {
  httplib::Server server;

  server.Post("/v1/score", [&](const httplib::Request& req,
                               httplib::Response& res) {
    try {
      json body = json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.is_object() || !body.contains("change"))
        throw MalformedPayload("body must be {trigger, change}");
      Trigger trigger =
          trigger_from_string(body.value("trigger", std::string("manual")));
      Verdict v = service.handle_score_request(body.at("change"), trigger);
      res.set_content(v.to_json().dump(), "application/json");
    } catch (const MalformedPayload& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 422;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  });

  server.Post("/v1/feedback", [&](const httplib::Request& req,
                                  httplib::Response& res) {
    try {
      json body = json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.is_object())
        throw MalformedPayload("body must be {change_id, label}");
      FeedbackAck ack = service.handle_feedback(
          body.at("change_id").get<std::string>(),
          body.at("label").get<std::string>());
      res.set_content(ack.to_json().dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  });

  server.Post("/v1/model", [&](const httplib::Request& req,
                               httplib::Response& res) {
    try {
      json body = json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.is_object())
        throw MalformedPayload("body must be {model_path, state_path}");
      service.swap_model(body.at("model_path").get<std::string>(),
                         body.at("state_path").get<std::string>());
      res.set_content(json{{"version", service.version()}}.dump(),
                      "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  });

  server.Get("/v1/model", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(service.model_info().dump(), "application/json");
  });

  if (stop != nullptr) {
    // Poll the stop flag so tests can shut the server down.
    server.set_idle_interval(0, 100000);
    std::thread watcher([&server, stop] {
      while (!stop->load()) std::this_thread::sleep_for(std::chrono::milliseconds(20));
      server.stop();
    });
    watcher.detach();
  }

  int bound = port;
  if (port == 0) {
    bound = server.bind_to_any_port(host);
    if (bound < 0) return 1;
    if (ready_port) ready_port->store(bound);
    return server.listen_after_bind() ? 0 : 1;
  }
  if (!server.bind_to_port(host, port)) return 1;
  if (ready_port) ready_port->store(bound);
  return server.listen_after_bind() ? 0 : 1;
}

}  // namespace vulnpred
