#pragma once

// Random fixture-repo generator with ground-truth line provenance. The
// generator applies explicit insert/modify/delete operations and tracks, for
// every live line, the commit that added or last modified it — an exhaustive
// replay oracle that never touches the diff machinery under test. Valid code
// lines carry globally unique tokens so the LCS alignment of snapshots is
// forced to agree with the construction.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vulnpred/git_history.hpp"
#include "vulnpred/lineage.hpp"
#include "vulnpred/util.hpp"

namespace vulnpred::testing {

struct GeneratedRepo {
  FixtureHistory history;
  std::string vfc_change_id;                // the last commit
  std::set<std::string> expected_vics;      // ground truth for the VfC
  std::size_t expected_side_notes = 0;      // self-origin / before-corpus hits
};

// `commits` counts the intermediate commits before the final VfC commit.
GeneratedRepo generate_repo(std::uint64_t seed, int commits,
                            bool with_baseline);

}  // namespace vulnpred::testing
