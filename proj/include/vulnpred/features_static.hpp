#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vulnpred/change_model.hpp"

namespace vulnpred {

// Ordered (pattern, rank) pairs; first match wins, default otherwise.
// Patterns are exact lowercase domains or "*.suffix" wildcards.
struct DomainRankTable {
  struct Entry {
    std::string pattern;
    int rank = 1;
  };
  std::vector<Entry> entries;
  int default_rank = 5;

  int rank_of(std::string_view domain) const;

  // AOSP mapping: google.com=1, android.com=2, partner examples=3,
  // kernel.org=4, everything else 5.
  static DomainRankTable aosp_default();

  // Minimal TOML subset:
  //   default = 5
  //   [[rank]]
  //   pattern = "google.com"
  //   value = 1
  static DomainRankTable parse_toml(std::string_view text);
  static DomainRankTable from_file(const std::string& path);
  std::string to_toml() const;
};

struct HpFeatures {
  int author = 0;
  int reviewer = 0;
};

struct CcFeatures {
  long long add = 0;
  long long del = 0;
};

struct PcFeatures {
  int count = 1;
  long long revision = 0;
  double relative_revision = 0.0;
  double avg_patchset = 0.0;
  long long max_patchset = 0;
  long long min_patchset = 0;
};

struct RpFeatures {
  long long time_seconds = 0;
  int weekday = 1;  // 1 = Sunday .. 7 = Saturday, UTC
  int hour = 0;     // 0..23, UTC
  bool plus2_self = false;
};

// Author rank, and max rank over reviewers voting {-1,+1,+2} (-2 excluded);
// with no qualifying reviewer the author's rank stands in.
HpFeatures extract_hp(const ChangeRecord& change, const DomainRankTable& table);

// Line totals over final_edits; a modified line counts on both sides.
CcFeatures extract_cc(const ChangeRecord& change);

PcFeatures extract_pc(const ChangeRecord& change);

RpFeatures extract_rp(const ChangeRecord& change);

}  // namespace vulnpred
