#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "vulnpred/classifiers.hpp"
#include "vulnpred/evaluation.hpp"
#include "vulnpred/features_history.hpp"

namespace vulnpred {

enum class Trigger { sent_for_review, new_patch_set, submitted, manual };

std::string trigger_to_string(Trigger t);
Trigger trigger_from_string(std::string_view s);

struct MalformedPayload : std::runtime_error {
  explicit MalformedPayload(const std::string& why)
      : std::runtime_error("malformed payload: " + why) {}
};

struct Verdict {
  std::string change_id;
  bool likely_vulnerable = false;
  double score = 0.0;
  double threshold = 0.5;
  int model_version = 0;
  std::vector<std::pair<std::string, double>> top_features;
  std::string suggested_action;  // "secure_review" | "security_testing" | "none"
  std::optional<std::string> assigned_reviewer;
  Trigger trigger = Trigger::manual;

  json to_json() const;
};

struct FeedbackAck {
  bool duplicate = false;
  bool unknown_change = false;

  json to_json() const;
};

struct ServiceConfig {
  std::vector<std::string> reviewer_pool;
  std::string feedback_log_path;    // empty = keep in memory only
  std::string rotation_state_path;  // empty = no persistence
  // Optional second band: scores in [security_testing_floor, threshold) get
  // suggested_action = security_testing. Negative disables.
  double security_testing_floor = -1.0;
  std::size_t top_feature_count = 3;
};

// Serving core behind the HTTP endpoints. Scoring runs against an immutable
// (model, state, version) snapshot; the swap and the reviewer cursor are the
// only serialized mutations.
class BotService {
 public:
  // Ensemble option: majority vote over the model list (single model = the
  // usual case).
  BotService(std::vector<TrainedModel> models, HistoryState state,
             FeatureConfig features, ServiceConfig config);

  Verdict handle_score_request(const json& payload, Trigger trigger);
  FeedbackAck handle_feedback(const std::string& change_id,
                              const std::string& confirmed_label);
  // Atomic swap; on validation failure the old snapshot stays live.
  void swap_model(const std::string& model_path, const std::string& state_path);

  json model_info() const;
  // Comment payload for a verdict; null for likely-normal verdicts.
  json render_notification(const Verdict& verdict) const;

  int version() const;

 private:
  struct Snapshot {
    std::vector<TrainedModel> models;
    HistoryState state;
    int version = 1;
  };

  std::shared_ptr<const Snapshot> current() const;
  double ensemble_score(const Snapshot& snap,
                        std::span<const double> values) const;

  FeatureConfig features_;
  ServiceConfig config_;

  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const Snapshot> snapshot_;

  std::mutex pool_mutex_;
  std::size_t rotation_cursor_ = 0;

  std::mutex feedback_mutex_;
  std::unordered_set<std::string> feedback_seen_;

  std::mutex scored_mutex_;
  std::unordered_set<std::string> scored_ids_;
};

// Blocks serving HTTP on host:port. Endpoints: POST /v1/score, POST
// /v1/feedback, POST /v1/model, GET /v1/model. `ready_port` (when non-null)
// receives the bound port before serving starts; port 0 picks a free one.
int run_http_server(BotService& service, const std::string& host, int port,
                    std::atomic<int>* ready_port = nullptr,
                    std::atomic<bool>* stop = nullptr);

}  // namespace vulnpred
