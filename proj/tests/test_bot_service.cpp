#include <doctest.h>

#include <filesystem>
#include <thread>

#include "support/builders.hpp"
#include "vulnpred/bot_service.hpp"
#include "vulnpred/util.hpp"

using namespace vulnpred;
using namespace vulnpred::testing;

namespace {

// A constant-score model at the full schema: a single leaf.
TrainedModel constant_model(double score, double threshold = 0.5) {
  TrainedModel m;
  m.kind = ClassifierKind::decision_tree;
  m.schema = full_schema();
  m.schema_hash = m.schema.hash();
  m.threshold = threshold;
  DecisionTreeModel tree;
  TreeNode leaf;
  leaf.leaf_value = score;
  tree.nodes.push_back(leaf);
  tree.feature_importance.assign(m.schema.size(), 0.0);
  m.structure = std::move(tree);
  return m;
}

json change_payload(const std::string& id) {
  return change_to_json(
      ChangeBuilder(id).final_edit(edit_with_counts("f.cpp", 3, 1)).build());
}

ServiceConfig pool_config(std::vector<std::string> pool) {
  ServiceConfig c;
  c.reviewer_pool = std::move(pool);
  return c;
}

}  // namespace

TEST_CASE("score request: round robin over the reviewer pool") {
  BotService service({constant_model(0.9)}, HistoryState{}, FeatureConfig{},
                     pool_config({"r1", "r2"}));
  Verdict v1 = service.handle_score_request(change_payload("c1"),
                                            Trigger::sent_for_review);
  CHECK(v1.likely_vulnerable);
  CHECK(v1.assigned_reviewer == "r1");
  Verdict v2 = service.handle_score_request(change_payload("c2"),
                                            Trigger::sent_for_review);
  CHECK(v2.assigned_reviewer == "r2");
  Verdict v3 = service.handle_score_request(change_payload("c3"),
                                            Trigger::sent_for_review);
  CHECK(v3.assigned_reviewer == "r1");
}

TEST_CASE("score request: below threshold, no assignment") {
  BotService service({constant_model(0.1)}, HistoryState{}, FeatureConfig{},
                     pool_config({"r1"}));
  Verdict v = service.handle_score_request(change_payload("c1"),
                                           Trigger::new_patch_set);
  CHECK_FALSE(v.likely_vulnerable);
  CHECK_FALSE(v.assigned_reviewer.has_value());
  CHECK(v.suggested_action == "none");
  CHECK(service.render_notification(v).is_null());
}

TEST_CASE("score request: malformed payload leaves the cursor untouched") {
  BotService service({constant_model(0.9)}, HistoryState{}, FeatureConfig{},
                     pool_config({"r1", "r2"}));
  CHECK_THROWS_AS(
      service.handle_score_request(json{{"garbage", true}}, Trigger::manual),
      MalformedPayload);
  Verdict v = service.handle_score_request(change_payload("ok"),
                                           Trigger::manual);
  CHECK(v.assigned_reviewer == "r1");  // cursor did not advance on the error
}

TEST_CASE("security-testing band sits between the floor and the threshold") {
  ServiceConfig config;
  config.security_testing_floor = 0.3;
  BotService service({constant_model(0.4)}, HistoryState{}, FeatureConfig{},
                     config);
  Verdict v = service.handle_score_request(change_payload("c"),
                                           Trigger::submitted);
  CHECK_FALSE(v.likely_vulnerable);
  CHECK(v.suggested_action == "security_testing");
}

TEST_CASE("feedback: idempotent acks with duplicate and unknown flags") {
  BotService service({constant_model(0.9)}, HistoryState{}, FeatureConfig{},
                     {});
  service.handle_score_request(change_payload("seen"), Trigger::manual);

  FeedbackAck a1 = service.handle_feedback("seen", "ViC");
  CHECK_FALSE(a1.duplicate);
  CHECK_FALSE(a1.unknown_change);

  FeedbackAck a2 = service.handle_feedback("seen", "ViC");
  CHECK(a2.duplicate);

  FeedbackAck a3 = service.handle_feedback("never-scored", "LNC");
  CHECK(a3.unknown_change);

  CHECK_THROWS(service.handle_feedback("seen", "bogus-label"));
}

TEST_CASE("swap: valid swap bumps the version, corrupt artifact keeps the old") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "vulnpred_swap_test";
  fs::create_directories(dir);

  BotService service({constant_model(0.2)}, HistoryState{}, FeatureConfig{},
                     {});
  CHECK(service.version() == 1);

  TrainedModel next = constant_model(0.95);
  save_model(next, (dir / "model.json").string());
  HistoryState{}.save((dir / "state.json").string());

  service.swap_model((dir / "model.json").string(),
                     (dir / "state.json").string());
  CHECK(service.version() == 2);
  Verdict v = service.handle_score_request(change_payload("c"),
                                           Trigger::manual);
  CHECK(v.score == doctest::Approx(0.95));
  CHECK(v.model_version == 2);

  write_file((dir / "broken.json").string(), "{not json");
  CHECK_THROWS(service.swap_model((dir / "broken.json").string(),
                                  (dir / "state.json").string()));
  CHECK(service.version() == 2);  // old model retained

  // Wrong-schema model is rejected before the swap.
  TrainedModel bad = constant_model(0.5);
  bad.schema.fields.pop_back();
  bad.schema_hash = bad.schema.hash();
  save_model(bad, (dir / "bad_schema.json").string());
  CHECK_THROWS(service.swap_model((dir / "bad_schema.json").string(),
                                  (dir / "state.json").string()));
  CHECK(service.version() == 2);

  std::error_code ec;
  fs::remove_all(dir, ec);
}

TEST_CASE("rotation state persists across service restarts") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "vulnpred_rotation_test";
  fs::create_directories(dir);
  ServiceConfig config = pool_config({"r1", "r2", "r3"});
  config.rotation_state_path = (dir / "rotation.json").string();

  {
    BotService service({constant_model(0.9)}, HistoryState{}, FeatureConfig{},
                       config);
    service.handle_score_request(change_payload("c1"), Trigger::manual);
    service.handle_score_request(change_payload("c2"), Trigger::manual);
  }
  {
    BotService service({constant_model(0.9)}, HistoryState{}, FeatureConfig{},
                       config);
    Verdict v = service.handle_score_request(change_payload("c3"),
                                             Trigger::manual);
    CHECK(v.assigned_reviewer == "r3");  // rotation resumed, not reset
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
}

TEST_CASE("notification rendering carries score, reviewer, manual tag") {
  BotService service({constant_model(0.9)}, HistoryState{}, FeatureConfig{},
                     pool_config({"sec-rev"}));
  Verdict v = service.handle_score_request(change_payload("c1"),
                                           Trigger::manual);
  json note = service.render_notification(v);
  REQUIRE(note.is_object());
  std::string message = note.at("message").get<std::string>();
  CHECK(message.find("0.9") != std::string::npos);
  CHECK(message.find("sec-rev") != std::string::npos);
  CHECK(message.find("manually requested") != std::string::npos);
  CHECK(note.at("reviewer").get<std::string>() == "sec-rev");
}

TEST_CASE("ensemble: majority vote over the model list") {
  std::vector<TrainedModel> models;
  models.push_back(constant_model(0.9));
  models.push_back(constant_model(0.9));
  models.push_back(constant_model(0.1));
  BotService service(std::move(models), HistoryState{}, FeatureConfig{}, {});
  Verdict v = service.handle_score_request(change_payload("c"),
                                           Trigger::manual);
  CHECK(v.score == doctest::Approx(2.0 / 3.0));
  CHECK(v.likely_vulnerable);
}

TEST_CASE("concurrent scoring against a swapping service stays coherent") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "vulnpred_concurrent_test";
  fs::create_directories(dir);
  save_model(constant_model(0.75), (dir / "m2.json").string());
  HistoryState{}.save((dir / "state.json").string());

  BotService service({constant_model(0.9)}, HistoryState{}, FeatureConfig{},
                     pool_config({"r1", "r2", "r3", "r4"}));

  constexpr int kRequests = 200;
  std::vector<Verdict> verdicts(kRequests);
  std::thread swapper([&] {
    for (int i = 0; i < 6; ++i) {
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
      service.swap_model((dir / "m2.json").string(),
                         (dir / "state.json").string());
    }
  });
  std::vector<std::thread> scorers;
  for (int t = 0; t < 4; ++t) {
    scorers.emplace_back([&, t] {
      for (int i = t; i < kRequests; i += 4)
        verdicts[static_cast<std::size_t>(i)] = service.handle_score_request(
            change_payload("c" + std::to_string(i)), Trigger::manual);
    });
  }
  for (auto& th : scorers) th.join();
  swapper.join();

  // Version coherence: v1 snapshots score 0.9, later ones 0.75.
  std::map<std::string, int> assignments;
  for (const auto& v : verdicts) {
    double expected = v.model_version == 1 ? 0.9 : 0.75;
    CHECK(v.score == doctest::Approx(expected));
    REQUIRE(v.assigned_reviewer.has_value());
    ++assignments[*v.assigned_reviewer];
  }
  // Exact fairness: 200 assignments over 4 reviewers.
  CHECK(assignments.size() == 4);
  for (const auto& [_, count] : assignments) CHECK(count == 50);

  std::error_code ec;
  fs::remove_all(dir, ec);
}
