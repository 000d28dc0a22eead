#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "vulnpred/change_model.hpp"
#include "vulnpred/git_history.hpp"

namespace vulnpred {

// Fixed "valid line" filter: a line is noise when blank, comment-only
// (//, /* ... */, *-continuation) or a preprocessor include/guard directive.
// This is a deliberate, deterministic closure of the rules; it carries no
// cross-line comment state, so bare prose inside block comments passes.
struct LineFilter {
  bool drop_blank = true;
  bool drop_comment = true;
  bool drop_preprocessor = true;
  std::set<std::string> preprocessor_directives = {"include", "ifndef",
                                                   "define", "endif", "pragma"};

  bool is_valid(std::string_view line) const;
};

enum class VflKind { deleted, added };

// Vulnerability-fixing line: an edited line of a VfC surviving the filter.
struct Vfl {
  std::string path;
  int line_number = 0;  // pre-image numbering for deleted, post-image for added
  VflKind kind = VflKind::deleted;
  std::string text;
};

struct LineOrigin {
  std::string path;
  int line_number = 0;
  std::string commit_hash;
  std::string change_id;
};

enum class BlameStatus {
  ok,
  before_corpus,  // line predates the ingested history
  self_origin,    // resolves to the VfC itself (new file / full replacement)
};

struct BlameResult {
  BlameStatus status = BlameStatus::ok;
  LineOrigin origin;  // valid when status == ok
};

struct UnresolvableBaseline : std::runtime_error {
  std::string change_id;
  explicit UnresolvableBaseline(std::string id)
      : std::runtime_error("change not resolvable against history: " + id),
        change_id(std::move(id)) {}
};

// Added/deleted lines of the VfC's commit surviving the filter, ordered by
// (path, line_number, deleted-before-added).
std::vector<Vfl> extract_vfls(const ChangeRecord& vfc, const GitHistory& history,
                              const LineFilter& filter = {});

// Origin of a deleted line: the commit that added or last modified that exact
// pre-image line, found by tracking the line number backward through every
// intermediate diff (no content heuristics).
BlameResult blame_deleted(const Vfl& vfl, const std::string& vfc_change_id,
                          const GitHistory& history);

// Origin for a group of consecutively added lines: the first valid post-image
// line after the group (falling back to the nearest valid preceding line)
// that maps into the pre-image, blamed with deleted-line semantics. A file
// new in the VfC — or one with no valid pre-image line at all — is
// self-origin.
BlameResult blame_added(std::span<const Vfl> group,
                        const std::string& vfc_change_id,
                        const GitHistory& history,
                        const LineFilter& filter = {});

struct LineageNote {
  std::string vfc_change_id;
  std::string path;
  int line_number = 0;
  std::string reason;  // "self_origin" | "before_corpus" | "unresolvable"
};

struct VicFindings {
  std::map<std::string, std::set<std::string>> vics_by_vfc;
  std::vector<LineageNote> side_report;
};

// Table-driven ViC location: union of deleted-line blames and consecutive
// added-group blames per VfC; self-origin and unknown-origin results are
// excluded from the ViC sets but listed in the side report.
VicFindings find_vics_from_vfcs(std::span<const ChangeRecord> vfcs,
                                const GitHistory& history,
                                const LineFilter& filter = {});

struct CveFilter {
  bool require_cve = true;
  std::optional<Severity> min_severity;  // critical > high > moderate > low

  bool accepts(const IssueRecord& issue) const;
};

struct CorpusBuildOptions {
  CveFilter cve_filter;
  std::int64_t label_delay_seconds = 0;  // shifts ViC known_at only
  LineFilter line_filter;
};

struct LabeledCorpus {
  std::vector<LabeledChange> corpus;  // sorted by (submitted_at, change_id)
  std::vector<LineageNote> side_report;
  std::vector<std::pair<std::string, std::string>> unresolved_links;
};

LabeledCorpus build_labeled_corpus(std::span<const ChangeRecord> changes,
                                   std::span<const IssueRecord> issues,
                                   const GitHistory& history,
                                   const CorpusBuildOptions& options = {});

}  // namespace vulnpred
