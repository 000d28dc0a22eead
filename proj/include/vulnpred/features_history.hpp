#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>

#include "vulnpred/change_model.hpp"
#include "vulnpred/util.hpp"

#include <json.hpp>

namespace vulnpred {

struct OutOfOrderFeed : std::runtime_error {
  OutOfOrderFeed() : std::runtime_error("labeled feed not monotone in known_at") {}
};

struct HhFeatures {
  double author = 0.0;
  double reviewer = 0.0;      // max over qualifying reviewers
  double min_reviewer = 0.0;
  double avg_reviewer = 0.0;
};

struct VhFeatures {
  double temporal_max = 0.0;
  double temporal_min = 0.0;
  double temporal_avg = 0.0;
  double spatial_max = 0.0;
  double spatial_min = 0.0;
  double spatial_avg = 0.0;
};

struct PtFeatures {
  double change_volume = 0.0;
  double vfc_volume = 0.0;
  double vic_volume = 0.0;
};

// Rolling aggregates over the labeled feed: per-account LNC/ViC scores,
// per-file counts, per-period per-file volumes, directory and basename
// indexes. Fed strictly monotone in known_at; extraction is const and
// snapshot-safe.
class HistoryState {
 public:
  explicit HistoryState(PeriodScheme period = PeriodScheme::monthly(),
                        double decay_per_period = 1.0)
      : period_(period), decay_(decay_per_period) {}

  // LNC: author +2, positive reviewers +1. ViC: author -3, positive
  // reviewers -2. VfC scores like an LNC and bumps the per-period VfC count.
  // `as_of` overrides the label's own known_at for the monotone-feed check
  // (runners feed by delay-adjusted visibility).
  void record_labeled_change(const LabeledChange& labeled,
                             std::optional<std::int64_t> as_of = std::nullopt);

  HhFeatures extract_hh(const ChangeRecord& change) const;
  VhFeatures extract_vh(const ChangeRecord& change) const;
  PtFeatures extract_pt(const ChangeRecord& change) const;

  // lnc_count - 3*vic_count; 0 for unknown files.
  double vh_score(const std::string& path) const;
  double account_lnc(const std::string& account_id) const;
  double account_vic(const std::string& account_id) const;

  std::int64_t last_known_at() const { return last_known_at_; }
  std::int64_t current_period() const { return current_period_; }
  const PeriodScheme& period_scheme() const { return period_; }
  std::size_t recorded_count() const { return recorded_; }

  // Versioned JSON checkpoint; deterministic (sorted keys).
  json to_checkpoint() const;
  static HistoryState from_checkpoint(const json& j);
  void save(const std::string& path) const;
  static HistoryState load(const std::string& path);

 private:
  struct AccountScore {
    double lnc = 0.0;
    double vic = 0.0;
    std::int64_t last_period = 0;
  };
  struct FileStats {
    long long lnc_count = 0;
    long long vic_count = 0;
  };
  struct PeriodFileStats {
    long long line_volume = 0;
    long long vfc_count = 0;
    long long vic_count = 0;
  };

  double effective(const AccountScore& s, bool vic, std::int64_t at_period) const;
  double hh_of(const std::string& account_id, std::int64_t at_period) const;
  void index_file(const std::string& path);
  const PeriodFileStats* period_stats(std::int64_t period,
                                      const std::string& path) const;

  static std::string dir_of(const std::string& path);
  static std::string stem_of(const std::string& path);

  PeriodScheme period_;
  double decay_ = 1.0;

  std::int64_t last_known_at_ = std::numeric_limits<std::int64_t>::min();
  std::int64_t current_period_ = 0;
  std::size_t recorded_ = 0;
  std::map<std::string, AccountScore> accounts_;
  std::map<std::string, FileStats> files_;
  std::map<std::int64_t, std::map<std::string, PeriodFileStats>> period_volumes_;
  std::unordered_map<std::string, std::set<std::string>> dir_index_;
  std::unordered_map<std::string, std::set<std::string>> stem_index_;
};

}  // namespace vulnpred
