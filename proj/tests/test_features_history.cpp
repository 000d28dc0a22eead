#include <doctest.h>

#include "support/builders.hpp"
#include "vulnpred/features_history.hpp"

using namespace vulnpred;
using namespace vulnpred::testing;

namespace {

LabeledChange lnc_by(const std::string& author, const std::string& reviewer,
                     int score, std::int64_t at, const std::string& path,
                     int added = 10, int deleted = 0) {
  ChangeRecord c = ChangeBuilder("c" + std::to_string(at),
                                 ident(author, "google.com"))
                       .created(at - 100)
                       .submitted(at)
                       .review(reviewer, "google.com", score, at - 50)
                       .final_edit(edit_with_counts(path, added, deleted))
                       .build();
  return labeled(std::move(c), LabelKind::LNC, at);
}

LabeledChange vic_by(const std::string& author, const std::string& reviewer,
                     int score, std::int64_t at, const std::string& path) {
  ChangeRecord c = ChangeBuilder("v" + std::to_string(at),
                                 ident(author, "google.com"))
                       .created(at - 100)
                       .submitted(at)
                       .review(reviewer, "google.com", score, at - 50)
                       .final_edit(edit_with_counts(path, 10, 0))
                       .build();
  return labeled(std::move(c), LabelKind::ViC, at);
}

}  // namespace

TEST_CASE("record: LNC grants +2 author, +1 positive reviewer") {
  HistoryState state;
  state.record_labeled_change(lnc_by("A", "B", 2, 1000, "f.cpp"));
  CHECK(state.account_lnc("A") == 2);
  CHECK(state.account_lnc("B") == 1);
  CHECK(state.account_vic("A") == 0);
}

TEST_CASE("record: ViC grants -3 author, -2 positive reviewer") {
  HistoryState state;
  state.record_labeled_change(lnc_by("A", "B", 2, 1000, "f.cpp"));
  state.record_labeled_change(vic_by("A", "B", 1, 2000, "f.cpp"));
  CHECK(state.account_vic("A") == -3);
  CHECK(state.account_vic("B") == -2);
}

TEST_CASE("record: negative reviewers earn no points") {
  HistoryState state;
  state.record_labeled_change(lnc_by("A", "B", -1, 1000, "f.cpp"));
  CHECK(state.account_lnc("B") == 0);
}

TEST_CASE("record: out-of-order feed throws") {
  HistoryState state;
  state.record_labeled_change(lnc_by("A", "B", 2, 2000, "f.cpp"));
  CHECK_THROWS_AS(state.record_labeled_change(lnc_by("A", "B", 2, 1000, "g.cpp")),
                  OutOfOrderFeed);
}

TEST_CASE("vh file score: lnc_count - 3*vic_count") {
  HistoryState state;
  for (int i = 0; i < 5; ++i)
    state.record_labeled_change(lnc_by("A", "B", 2, 1000 + i, "f.cpp"));
  state.record_labeled_change(vic_by("A", "B", 2, 2000, "f.cpp"));
  CHECK(state.vh_score("f.cpp") == 5 - 3);
  CHECK(state.vh_score("unknown.cpp") == 0);
}

TEST_CASE("extract_hh: ratio under the max(1, lnc) denominator") {
  HistoryState state;
  // lnc_score(A)=4 via two authored LNCs; vic_score(A)=-3 via one ViC.
  state.record_labeled_change(lnc_by("A", "B", 2, 1000, "f.cpp"));
  state.record_labeled_change(lnc_by("A", "B", 2, 1001, "f.cpp"));
  state.record_labeled_change(vic_by("A", "B", 2, 1002, "f.cpp"));

  ChangeRecord probe = ChangeBuilder("p", ident("A", "google.com"))
                           .submitted(5000)
                           .build();
  CHECK(state.extract_hh(probe).author == doctest::Approx(-0.75));

  ChangeRecord fresh = ChangeBuilder("p", ident("nobody", "google.com"))
                           .submitted(5000)
                           .build();
  CHECK(state.extract_hh(fresh).author == 0.0);
}

TEST_CASE("extract_hh: reviewer aggregates max/min/avg") {
  HistoryState state;
  // R1: lnc 2 (authored one LNC), vic -1... build: R1 authors an LNC, then
  // reviews a ViC (+1) -> vic_score(R1) = -2, lnc_score(R1) = 2 -> hh = -1.
  // Simpler: craft hh values {-0.5, 0}.
  // R1: authored 2 LNCs (lnc 4), reviewed a ViC positively (vic -2) -> -0.5.
  state.record_labeled_change(lnc_by("R1", "X", 2, 1000, "f.cpp"));
  state.record_labeled_change(lnc_by("R1", "X", 2, 1001, "f.cpp"));
  state.record_labeled_change(vic_by("Y", "R1", 2, 1002, "f.cpp"));
  // R2: unknown -> 0.

  ChangeRecord probe = ChangeBuilder("p", ident("author", "google.com"))
                           .submitted(5000)
                           .review("R1", "google.com", 1, 4000)
                           .review("R2", "google.com", 2, 4000)
                           .build();
  HhFeatures hh = state.extract_hh(probe);
  CHECK(hh.reviewer == doctest::Approx(0.0));
  CHECK(hh.min_reviewer == doctest::Approx(-0.5));
  CHECK(hh.avg_reviewer == doctest::Approx(-0.25));
}

TEST_CASE("extract_hh: -2 voters and the author's own vote don't qualify") {
  HistoryState state;
  state.record_labeled_change(vic_by("R1", "X", 2, 1000, "f.cpp"));
  ChangeRecord probe = ChangeBuilder("p", ident("author", "google.com"))
                           .submitted(5000)
                           .review("R1", "google.com", -2, 4000)
                           .review("author", "google.com", 2, 4000)
                           .build();
  HhFeatures hh = state.extract_hh(probe);
  CHECK(hh.reviewer == 0.0);
  CHECK(hh.min_reviewer == 0.0);
  CHECK(hh.avg_reviewer == 0.0);
}

TEST_CASE("extract_vh: temporal aggregates over touched files") {
  HistoryState state;
  // f1 -> vh 2 (5 LNC, 1 ViC); f2 -> vh -3 (1 ViC).
  for (int i = 0; i < 5; ++i)
    state.record_labeled_change(lnc_by("A", "B", 2, 1000 + i, "dir1/f1.cpp"));
  state.record_labeled_change(vic_by("A", "B", 2, 2000, "dir1/f1.cpp"));
  state.record_labeled_change(vic_by("A", "B", 2, 2001, "dir2/f2.cpp"));

  ChangeRecord probe = ChangeBuilder("p")
                           .submitted(5000)
                           .final_edit(edit_with_counts("dir1/f1.cpp", 1, 0))
                           .final_edit(edit_with_counts("dir2/f2.cpp", 1, 0))
                           .build();
  VhFeatures vh = state.extract_vh(probe);
  CHECK(vh.temporal_max == doctest::Approx(2.0));
  CHECK(vh.temporal_min == doctest::Approx(-3.0));
  CHECK(vh.temporal_avg == doctest::Approx(-0.5));
}

TEST_CASE("extract_vh: all-unknown files yield all zeros") {
  HistoryState state;
  ChangeRecord probe = ChangeBuilder("p")
                           .submitted(5000)
                           .final_edit(edit_with_counts("new/file.cpp", 1, 0))
                           .build();
  VhFeatures vh = state.extract_vh(probe);
  CHECK(vh.temporal_max == 0.0);
  CHECK(vh.temporal_min == 0.0);
  CHECK(vh.temporal_avg == 0.0);
  CHECK(vh.spatial_max == 0.0);
  CHECK(vh.spatial_min == 0.0);
  CHECK(vh.spatial_avg == 0.0);
}

TEST_CASE("extract_vh: spatial neighborhood scoring and normalization") {
  HistoryState state;
  // dir/ holds three LNC files and one ViC file; probe touches dir/f.cpp
  // (itself unseen). raw = -2*1 + 3 = 1; normalized = 1/3.
  state.record_labeled_change(lnc_by("A", "B", 2, 1000, "dir/l1.cpp"));
  state.record_labeled_change(lnc_by("A", "B", 2, 1001, "dir/l2.cpp"));
  state.record_labeled_change(lnc_by("A", "B", 2, 1002, "dir/l3.cpp"));
  state.record_labeled_change(vic_by("A", "B", 2, 1003, "dir/bad.cpp"));

  ChangeRecord probe = ChangeBuilder("p")
                           .submitted(5000)
                           .final_edit(edit_with_counts("dir/f.cpp", 1, 0))
                           .build();
  VhFeatures vh = state.extract_vh(probe);
  CHECK(vh.spatial_max == doctest::Approx(1.0 / 3.0));
  CHECK(vh.spatial_min == doctest::Approx(1.0 / 3.0));
  CHECK(vh.spatial_avg == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("extract_vh: same-basename files in other directories are neighbors") {
  HistoryState state;
  state.record_labeled_change(vic_by("A", "B", 2, 1000, "x/codec.cpp"));
  ChangeRecord probe = ChangeBuilder("p")
                           .submitted(5000)
                           .final_edit(edit_with_counts("y/codec.h", 1, 0))
                           .build();
  VhFeatures vh = state.extract_vh(probe);
  // One ViC neighbor, zero LNC neighbors: raw -2, denominator max(1,0)=1.
  CHECK(vh.spatial_avg == doctest::Approx(-2.0));
}

TEST_CASE("extract_pt: period deltas averaged over files") {
  PeriodScheme monthly = PeriodScheme::monthly();
  HistoryState state(monthly);
  // Month 0: 100 lines on f1. Month 1: 40 lines on f1.
  std::int64_t m0 = monthly.period_start(100);
  std::int64_t m1 = monthly.period_start(101);
  state.record_labeled_change(lnc_by("A", "B", 2, m0 + 100, "f1.cpp", 60, 40));
  state.record_labeled_change(lnc_by("A", "B", 2, m1 + 100, "f1.cpp", 30, 10));

  ChangeRecord probe = ChangeBuilder("p")
                           .submitted(m1 + 200)
                           .final_edit(edit_with_counts("f1.cpp", 1, 0))
                           .build();
  PtFeatures pt = state.extract_pt(probe);
  CHECK(pt.change_volume == doctest::Approx(40.0 - 100.0));

  // First period ever: previous period is all zeros.
  ChangeRecord early = ChangeBuilder("p")
                           .submitted(m0 + 200)
                           .final_edit(edit_with_counts("f1.cpp", 1, 0))
                           .build();
  CHECK(state.extract_pt(early).change_volume == doctest::Approx(100.0));
}

TEST_CASE("extract_pt: VfC deltas averaged over two files") {
  PeriodScheme monthly = PeriodScheme::monthly();
  HistoryState state(monthly);
  std::int64_t m1 = monthly.period_start(101);
  // f1 gets 2 VfCs this month, f2 none.
  for (int i = 0; i < 2; ++i) {
    ChangeRecord c = ChangeBuilder("vfc" + std::to_string(i))
                         .created(m1)
                         .submitted(m1 + 100 + i)
                         .final_edit(edit_with_counts("f1.cpp", 5, 5))
                         .build();
    state.record_labeled_change(labeled(std::move(c), LabelKind::VfC));
  }
  ChangeRecord probe = ChangeBuilder("p")
                           .submitted(m1 + 500)
                           .final_edit(edit_with_counts("f1.cpp", 1, 0))
                           .final_edit(edit_with_counts("f2.cpp", 1, 0))
                           .build();
  PtFeatures pt = state.extract_pt(probe);
  CHECK(pt.vfc_volume == doctest::Approx(1.0));  // mean of {+2, 0}
}

TEST_CASE("causality: future labels don't alter extraction") {
  PeriodScheme monthly = PeriodScheme::monthly();
  HistoryState state(monthly);
  state.record_labeled_change(lnc_by("A", "B", 2, 1000, "f.cpp"));

  ChangeRecord probe = ChangeBuilder("p", ident("A", "google.com"))
                           .submitted(2000)
                           .final_edit(edit_with_counts("f.cpp", 1, 0))
                           .build();
  HhFeatures before_hh = state.extract_hh(probe);
  VhFeatures before_vh = state.extract_vh(probe);

  // The runner must not feed this, but even if state advances later, a
  // snapshot taken before is unaffected: copy semantics.
  HistoryState snapshot = state;
  state.record_labeled_change(vic_by("A", "B", 2, 3000, "f.cpp"));
  CHECK(snapshot.extract_hh(probe).author == before_hh.author);
  CHECK(snapshot.extract_vh(probe).temporal_avg == before_vh.temporal_avg);
}

TEST_CASE("replay determinism: same feed, same state") {
  std::vector<LabeledChange> feed;
  for (int i = 0; i < 20; ++i)
    feed.push_back(i % 4 == 0 ? vic_by("A", "B", 2, 1000 + i, "f.cpp")
                              : lnc_by("C", "D", 1, 1000 + i, "g.cpp"));
  HistoryState s1, s2;
  for (const auto& lc : feed) {
    s1.record_labeled_change(lc);
    s2.record_labeled_change(lc);
  }
  CHECK(s1.to_checkpoint() == s2.to_checkpoint());
}

TEST_CASE("checkpoint round-trip preserves every feature path") {
  PeriodScheme monthly = PeriodScheme::monthly();
  HistoryState state(monthly);
  std::int64_t m1 = monthly.period_start(500);
  state.record_labeled_change(lnc_by("A", "B", 2, m1 + 10, "d/f1.cpp"));
  state.record_labeled_change(vic_by("A", "B", 1, m1 + 20, "d/f2.cpp"));

  HistoryState loaded = HistoryState::from_checkpoint(state.to_checkpoint());
  CHECK(loaded.to_checkpoint() == state.to_checkpoint());

  ChangeRecord probe = ChangeBuilder("p", ident("A", "google.com"))
                           .submitted(m1 + 100)
                           .final_edit(edit_with_counts("d/f1.cpp", 1, 0))
                           .build();
  CHECK(loaded.extract_hh(probe).author == state.extract_hh(probe).author);
  CHECK(loaded.extract_vh(probe).spatial_avg ==
        state.extract_vh(probe).spatial_avg);
  CHECK(loaded.extract_pt(probe).change_volume ==
        state.extract_pt(probe).change_volume);
}

TEST_CASE("optional decay ages account scores across periods") {
  PeriodScheme monthly = PeriodScheme::monthly();
  HistoryState state(monthly, 0.5);
  std::int64_t m0 = monthly.period_start(100);
  std::int64_t m2 = monthly.period_start(102);
  state.record_labeled_change(lnc_by("A", "B", 2, m0 + 10, "f.cpp"));
  state.record_labeled_change(vic_by("A", "B", 2, m0 + 20, "f.cpp"));

  ChangeRecord probe_now = ChangeBuilder("p", ident("A", "google.com"))
                               .submitted(m0 + 100)
                               .build();
  ChangeRecord probe_later = ChangeBuilder("p", ident("A", "google.com"))
                                 .submitted(m2 + 100)
                                 .build();
  // hh = vic / max(1, lnc); two periods later both decay by 0.25:
  // -3*0.25 / max(1, 2*0.25) = -0.75.
  CHECK(state.extract_hh(probe_now).author == doctest::Approx(-1.5));
  CHECK(state.extract_hh(probe_later).author == doctest::Approx(-0.75));
}

TEST_CASE("temporal locality: clustered ViCs depress the hot file's VH") {
  HistoryState state;
  for (int i = 0; i < 3; ++i)
    state.record_labeled_change(vic_by("A", "B", 2, 1000 + i, "hot.cpp"));
  for (int i = 0; i < 3; ++i)
    state.record_labeled_change(lnc_by("A", "B", 2, 2000 + i, "cold.cpp"));

  ChangeRecord hot = ChangeBuilder("h")
                         .submitted(9000)
                         .final_edit(edit_with_counts("hot.cpp", 1, 0))
                         .build();
  ChangeRecord cold = ChangeBuilder("c")
                          .submitted(9000)
                          .final_edit(edit_with_counts("cold.cpp", 1, 0))
                          .build();
  CHECK(state.extract_vh(hot).temporal_avg <
        state.extract_vh(cold).temporal_avg);
}
