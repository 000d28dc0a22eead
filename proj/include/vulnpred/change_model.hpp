#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace vulnpred {

using json = nlohmann::json;

struct Identity {
  std::string account_id;
  std::string email_domain;  // lowercase, no '@'

  bool operator==(const Identity&) const = default;
};

// Gerrit-style vote. Score 0 comments are not review events.
struct ReviewEvent {
  Identity reviewer;
  int score = 0;  // one of {-2,-1,+1,+2}
  std::int64_t timestamp = 0;
};

struct Hunk {
  int old_start = 0;  // 1-based line in pre-image; 0-count hunks anchor after it
  int old_count = 0;
  int new_start = 0;
  int new_count = 0;
  std::vector<std::string> old_lines;
  std::vector<std::string> new_lines;
};

struct FileEdit {
  std::string path;
  int lines_added = 0;
  int lines_deleted = 0;
  std::vector<int> added_line_numbers;    // post-image numbering, sorted
  std::vector<int> deleted_line_numbers;  // pre-image numbering, sorted
  std::vector<Hunk> hunks;
};

struct PatchSet {
  int index = 1;  // 1-based, contiguous
  std::int64_t uploaded_at = 0;
  // Delta vs. previous patch set for index > 1, vs. baseline for index 1.
  std::vector<FileEdit> file_edits;
};

struct ChangeRecord {
  std::string change_id;
  std::vector<std::string> commit_hashes;
  std::string project;
  Identity author;
  std::vector<ReviewEvent> reviews;
  std::vector<PatchSet> patch_sets;  // non-empty
  std::int64_t created_at = 0;
  std::int64_t submitted_at = 0;  // >= created_at
  std::vector<FileEdit> final_edits;  // merged patch set vs. baseline
  std::string description;
  std::vector<std::string> referenced_bug_ids;
};

enum class Severity { critical, high, moderate, low, none, unknown };

std::string severity_to_string(Severity s);
Severity severity_from_string(std::string_view s);

struct IssueRecord {
  std::string bug_id;
  std::vector<std::string> cve_ids;
  Severity severity = Severity::unknown;
  std::vector<std::string> linked_change_ids;  // change ids or commit hashes
  std::int64_t published_at = 0;
};

enum class LabelKind { ViC, VfC, LNC };
enum class LabelSource { lineage, manual, assumed };

std::string label_kind_to_string(LabelKind k);
LabelKind label_kind_from_string(std::string_view s);
std::string label_source_to_string(LabelSource s);
LabelSource label_source_from_string(std::string_view s);

struct LabelProvenance {
  std::string cve_id;
  std::string vfc_change_id;
};

struct Label {
  LabelKind kind = LabelKind::LNC;
  LabelSource source = LabelSource::assumed;
  std::optional<LabelProvenance> provenance;
  std::int64_t known_at = 0;  // time the label becomes visible to training
};

struct LabeledChange {
  ChangeRecord change;
  Label label;
};

// Binary classification target: 1 iff ViC, VfC maps to the negative class.
inline int label_target(const Label& l) { return l.kind == LabelKind::ViC ? 1 : 0; }

// ---- ingest errors (whole-ingest failures, no partial corpora) -------------

struct IngestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MalformedLine final : IngestError {
  std::size_t line_no;
  explicit MalformedLine(std::size_t line);
};

struct SchemaViolation final : IngestError {
  std::string field;
  explicit SchemaViolation(std::string field_name);
};

struct InvariantViolation final : IngestError {
  std::string change_id;
  std::string rule;
  InvariantViolation(std::string id, std::string rule_name);
};

// ---- ingest / emit ----------------------------------------------------------

// One JSON object per line; validates every invariant; returns records sorted
// by (submitted_at, change_id).
std::vector<ChangeRecord> ingest_changes(std::string_view jsonl);
std::vector<IssueRecord> ingest_issues(std::string_view jsonl);

// Canonical re-emission (sorted keys, fixed field set): ingest(emit(x)) == x.
std::string emit_changes(std::span<const ChangeRecord> changes);
std::string emit_issues(std::span<const IssueRecord> issues);

json change_to_json(const ChangeRecord& c);
ChangeRecord change_from_json(const json& j);
json issue_to_json(const IssueRecord& i);
IssueRecord issue_from_json(const json& j);

json label_to_json(const std::string& change_id, const Label& l);
Label label_from_json(const json& j, std::string* change_id_out);
std::string emit_labels(std::span<const LabeledChange> corpus);
// Attaches labels from labels.jsonl to an ingested corpus; changes without an
// entry become assumed LNC with known_at = submitted_at.
std::vector<LabeledChange> attach_labels(std::vector<ChangeRecord> changes,
                                         std::string_view labels_jsonl);

// ---- bug <-> change linking -------------------------------------------------

struct BugLinkResult {
  std::map<std::string, std::vector<std::string>> changes_by_bug;
  // (bug_id, unresolvable entry) pairs, mirrors the manual-review fallback.
  std::vector<std::pair<std::string, std::string>> unresolved;
};

BugLinkResult link_bugs_to_changes(std::span<const IssueRecord> issues,
                                   std::span<const ChangeRecord> changes);

}  // namespace vulnpred
