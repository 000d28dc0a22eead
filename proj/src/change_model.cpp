#include "vulnpred/change_model.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "vulnpred/util.hpp"

namespace vulnpred {

MalformedLine::MalformedLine(std::size_t line)
    : IngestError("malformed line " + std::to_string(line)), line_no(line) {}

SchemaViolation::SchemaViolation(std::string field_name)
    : IngestError("schema violation: " + field_name),
      field(std::move(field_name)) {}

InvariantViolation::InvariantViolation(std::string id, std::string rule_name)
    : IngestError("invariant violation in change " + id + ": " + rule_name),
      change_id(std::move(id)),
      rule(std::move(rule_name)) {}

std::string severity_to_string(Severity s) {
  switch (s) {
    case Severity::critical: return "critical";
    case Severity::high: return "high";
    case Severity::moderate: return "moderate";
    case Severity::low: return "low";
    case Severity::none: return "none";
    case Severity::unknown: return "unknown";
  }
  return "unknown";
}

Severity severity_from_string(std::string_view s) {
  if (s == "critical") return Severity::critical;
  if (s == "high") return Severity::high;
  if (s == "moderate") return Severity::moderate;
  if (s == "low") return Severity::low;
  if (s == "none") return Severity::none;
  if (s == "unknown") return Severity::unknown;
  throw SchemaViolation("severity");
}

std::string label_kind_to_string(LabelKind k) {
  switch (k) {
    case LabelKind::ViC: return "ViC";
    case LabelKind::VfC: return "VfC";
    case LabelKind::LNC: return "LNC";
  }
  return "LNC";
}

LabelKind label_kind_from_string(std::string_view s) {
  if (s == "ViC") return LabelKind::ViC;
  if (s == "VfC") return LabelKind::VfC;
  if (s == "LNC") return LabelKind::LNC;
  throw SchemaViolation("label.kind");
}

std::string label_source_to_string(LabelSource s) {
  switch (s) {
    case LabelSource::lineage: return "lineage";
    case LabelSource::manual: return "manual";
    case LabelSource::assumed: return "assumed";
  }
  return "assumed";
}

LabelSource label_source_from_string(std::string_view s) {
  if (s == "lineage") return LabelSource::lineage;
  if (s == "manual") return LabelSource::manual;
  if (s == "assumed") return LabelSource::assumed;
  throw SchemaViolation("label.source");
}

namespace {

const json& require(const json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end()) throw SchemaViolation(field);
  return *it;
}

std::string get_string(const json& j, const char* field) {
  const json& v = require(j, field);
  if (!v.is_string()) throw SchemaViolation(field);
  return v.get<std::string>();
}

std::int64_t get_int(const json& j, const char* field) {
  const json& v = require(j, field);
  if (!v.is_number_integer()) throw SchemaViolation(field);
  return v.get<std::int64_t>();
}

std::vector<std::string> get_string_list(const json& j, const char* field) {
  const json& v = require(j, field);
  if (!v.is_array()) throw SchemaViolation(field);
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw SchemaViolation(field);
    out.push_back(e.get<std::string>());
  }
  return out;
}

Identity identity_from_json(const json& j, const char* field) {
  if (!j.is_object()) throw SchemaViolation(field);
  Identity id;
  id.account_id = get_string(j, "account_id");
  id.email_domain = lowercase(get_string(j, "email_domain"));
  if (id.email_domain.empty() ||
      id.email_domain.find('@') != std::string::npos)
    throw SchemaViolation(std::string(field) + ".email_domain");
  return id;
}

json identity_to_json(const Identity& id) {
  return json{{"account_id", id.account_id}, {"email_domain", id.email_domain}};
}

std::vector<int> get_int_list(const json& j, const char* field) {
  const json& v = require(j, field);
  if (!v.is_array()) throw SchemaViolation(field);
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) throw SchemaViolation(field);
    out.push_back(e.get<int>());
  }
  return out;
}

Hunk hunk_from_json(const json& j) {
  if (!j.is_object()) throw SchemaViolation("hunks");
  Hunk h;
  h.old_start = static_cast<int>(get_int(j, "old_start"));
  h.old_count = static_cast<int>(get_int(j, "old_count"));
  h.new_start = static_cast<int>(get_int(j, "new_start"));
  h.new_count = static_cast<int>(get_int(j, "new_count"));
  h.old_lines = get_string_list(j, "old_lines");
  h.new_lines = get_string_list(j, "new_lines");
  if (static_cast<int>(h.old_lines.size()) != h.old_count)
    throw SchemaViolation("hunks.old_lines");
  if (static_cast<int>(h.new_lines.size()) != h.new_count)
    throw SchemaViolation("hunks.new_lines");
  return h;
}

json hunk_to_json(const Hunk& h) {
  return json{{"old_start", h.old_start}, {"old_count", h.old_count},
              {"new_start", h.new_start}, {"new_count", h.new_count},
              {"old_lines", h.old_lines}, {"new_lines", h.new_lines}};
}

FileEdit file_edit_from_json(const json& j) {
  if (!j.is_object()) throw SchemaViolation("file_edits");
  FileEdit fe;
  fe.path = get_string(j, "path");
  fe.lines_added = static_cast<int>(get_int(j, "lines_added"));
  fe.lines_deleted = static_cast<int>(get_int(j, "lines_deleted"));
  fe.added_line_numbers = get_int_list(j, "added_line_numbers");
  fe.deleted_line_numbers = get_int_list(j, "deleted_line_numbers");
  if (j.contains("hunks")) {
    const json& hs = j.at("hunks");
    if (!hs.is_array()) throw SchemaViolation("hunks");
    for (const auto& h : hs) fe.hunks.push_back(hunk_from_json(h));
  }
  return fe;
}

json file_edit_to_json(const FileEdit& fe) {
  json hunks = json::array();
  for (const auto& h : fe.hunks) hunks.push_back(hunk_to_json(h));
  return json{{"path", fe.path},
              {"lines_added", fe.lines_added},
              {"lines_deleted", fe.lines_deleted},
              {"added_line_numbers", fe.added_line_numbers},
              {"deleted_line_numbers", fe.deleted_line_numbers},
              {"hunks", hunks}};
}

void validate_file_edit(const FileEdit& fe, const std::string& change_id) {
  if (fe.lines_added < 0 || fe.lines_deleted < 0)
    throw InvariantViolation(change_id, "negative line counts");
  if (static_cast<std::size_t>(fe.lines_added) != fe.added_line_numbers.size())
    throw InvariantViolation(change_id,
                             "lines_added != |added_line_numbers| for " + fe.path);
  if (static_cast<std::size_t>(fe.lines_deleted) !=
      fe.deleted_line_numbers.size())
    throw InvariantViolation(
        change_id, "lines_deleted != |deleted_line_numbers| for " + fe.path);
  if (!std::is_sorted(fe.added_line_numbers.begin(),
                      fe.added_line_numbers.end()) ||
      !std::is_sorted(fe.deleted_line_numbers.begin(),
                      fe.deleted_line_numbers.end()))
    throw InvariantViolation(change_id, "line number lists not sorted for " +
                                            fe.path);
}

// Composition of patch-set deltas must conserve per-path line counts against
// the merged diff: sum over patch sets of (added - deleted) == final net.
void validate_final_edit_composition(const ChangeRecord& c) {
  std::unordered_map<std::string, long long> net;
  for (const auto& ps : c.patch_sets)
    for (const auto& fe : ps.file_edits)
      net[fe.path] += fe.lines_added - fe.lines_deleted;
  std::unordered_map<std::string, long long> final_net;
  for (const auto& fe : c.final_edits)
    final_net[fe.path] += fe.lines_added - fe.lines_deleted;
  for (const auto& [path, n] : net) {
    auto it = final_net.find(path);
    long long f = it == final_net.end() ? 0 : it->second;
    if (f != n)
      throw InvariantViolation(
          c.change_id, "final_edits line-count conservation for " + path);
  }
  for (const auto& [path, f] : final_net) {
    if (!net.count(path) && f != 0)
      throw InvariantViolation(
          c.change_id, "final_edits line-count conservation for " + path);
  }
}

}  // namespace

ChangeRecord change_from_json(const json& j) {
  if (!j.is_object()) throw SchemaViolation("change");
  ChangeRecord c;
  c.change_id = get_string(j, "change_id");
  c.commit_hashes = get_string_list(j, "commit_hashes");
  c.project = get_string(j, "project");
  c.author = identity_from_json(require(j, "author"), "author");
  const json& reviews = require(j, "reviews");
  if (!reviews.is_array()) throw SchemaViolation("reviews");
  for (const auto& r : reviews) {
    ReviewEvent ev;
    ev.reviewer = identity_from_json(r, "reviews");
    ev.score = static_cast<int>(get_int(r, "score"));
    ev.timestamp = get_int(r, "timestamp");
    if (ev.score != -2 && ev.score != -1 && ev.score != 1 && ev.score != 2)
      throw InvariantViolation(c.change_id, "review score not in {-2,-1,+1,+2}");
    c.reviews.push_back(std::move(ev));
  }
  const json& psets = require(j, "patch_sets");
  if (!psets.is_array()) throw SchemaViolation("patch_sets");
  for (const auto& p : psets) {
    PatchSet ps;
    ps.index = static_cast<int>(get_int(p, "index"));
    ps.uploaded_at = get_int(p, "uploaded_at");
    const json& fes = require(p, "file_edits");
    if (!fes.is_array()) throw SchemaViolation("file_edits");
    for (const auto& fe : fes) ps.file_edits.push_back(file_edit_from_json(fe));
    c.patch_sets.push_back(std::move(ps));
  }
  c.created_at = get_int(j, "created_at");
  c.submitted_at = get_int(j, "submitted_at");
  const json& finals = require(j, "final_edits");
  if (!finals.is_array()) throw SchemaViolation("final_edits");
  for (const auto& fe : finals) c.final_edits.push_back(file_edit_from_json(fe));
  c.description = get_string(j, "description");
  c.referenced_bug_ids = get_string_list(j, "referenced_bug_ids");

  // Invariants.
  if (c.change_id.empty()) throw SchemaViolation("change_id");
  if (c.patch_sets.empty())
    throw InvariantViolation(c.change_id, "patch_sets empty");
  if (c.submitted_at < c.created_at)
    throw InvariantViolation(c.change_id, "submitted_at < created_at");
  for (std::size_t i = 0; i < c.patch_sets.size(); ++i) {
    if (c.patch_sets[i].index != static_cast<int>(i) + 1)
      throw InvariantViolation(c.change_id, "patch set indices not contiguous");
    if (i > 0 &&
        c.patch_sets[i].uploaded_at < c.patch_sets[i - 1].uploaded_at)
      throw InvariantViolation(c.change_id, "uploaded_at decreasing");
    for (const auto& fe : c.patch_sets[i].file_edits)
      validate_file_edit(fe, c.change_id);
  }
  for (const auto& fe : c.final_edits) validate_file_edit(fe, c.change_id);
  validate_final_edit_composition(c);
  return c;
}

json change_to_json(const ChangeRecord& c) {
  json reviews = json::array();
  for (const auto& r : c.reviews)
    reviews.push_back(json{{"account_id", r.reviewer.account_id},
                           {"email_domain", r.reviewer.email_domain},
                           {"score", r.score},
                           {"timestamp", r.timestamp}});
  json psets = json::array();
  for (const auto& p : c.patch_sets) {
    json fes = json::array();
    for (const auto& fe : p.file_edits) fes.push_back(file_edit_to_json(fe));
    psets.push_back(json{{"index", p.index},
                         {"uploaded_at", p.uploaded_at},
                         {"file_edits", fes}});
  }
  json finals = json::array();
  for (const auto& fe : c.final_edits) finals.push_back(file_edit_to_json(fe));
  return json{{"change_id", c.change_id},
              {"commit_hashes", c.commit_hashes},
              {"project", c.project},
              {"author", identity_to_json(c.author)},
              {"reviews", reviews},
              {"patch_sets", psets},
              {"created_at", c.created_at},
              {"submitted_at", c.submitted_at},
              {"final_edits", finals},
              {"description", c.description},
              {"referenced_bug_ids", c.referenced_bug_ids}};
}

IssueRecord issue_from_json(const json& j) {
  if (!j.is_object()) throw SchemaViolation("issue");
  IssueRecord i;
  i.bug_id = get_string(j, "bug_id");
  if (i.bug_id.empty()) throw SchemaViolation("bug_id");
  i.cve_ids = get_string_list(j, "cve_ids");
  i.severity = severity_from_string(get_string(j, "severity"));
  i.linked_change_ids = get_string_list(j, "linked_change_ids");
  i.published_at = get_int(j, "published_at");
  return i;
}

json issue_to_json(const IssueRecord& i) {
  return json{{"bug_id", i.bug_id},
              {"cve_ids", i.cve_ids},
              {"severity", severity_to_string(i.severity)},
              {"linked_change_ids", i.linked_change_ids},
              {"published_at", i.published_at}};
}

namespace {

template <typename T, typename ParseFn>
std::vector<T> ingest_jsonl(std::string_view text, ParseFn parse) {
  std::vector<T> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    std::string_view line = end == std::string_view::npos
                                ? text.substr(pos)
                                : text.substr(pos, end - pos);
    ++line_no;
    if (!trim(line).empty()) {
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) throw MalformedLine(line_no);
      out.push_back(parse(j));
    }
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

}  // namespace

std::vector<ChangeRecord> ingest_changes(std::string_view jsonl) {
  auto out = ingest_jsonl<ChangeRecord>(
      jsonl, [](const json& j) { return change_from_json(j); });
  std::stable_sort(out.begin(), out.end(),
                   [](const ChangeRecord& a, const ChangeRecord& b) {
                     if (a.submitted_at != b.submitted_at)
                       return a.submitted_at < b.submitted_at;
                     return a.change_id < b.change_id;
                   });
  return out;
}

std::vector<IssueRecord> ingest_issues(std::string_view jsonl) {
  auto out = ingest_jsonl<IssueRecord>(
      jsonl, [](const json& j) { return issue_from_json(j); });
  std::unordered_set<std::string> seen;
  for (const auto& i : out)
    if (!seen.insert(i.bug_id).second)
      throw InvariantViolation(i.bug_id, "bug_id not unique in corpus");
  std::stable_sort(out.begin(), out.end(),
                   [](const IssueRecord& a, const IssueRecord& b) {
                     if (a.published_at != b.published_at)
                       return a.published_at < b.published_at;
                     return a.bug_id < b.bug_id;
                   });
  return out;
}

std::string emit_changes(std::span<const ChangeRecord> changes) {
  std::string out;
  for (const auto& c : changes) {
    out += change_to_json(c).dump();
    out += '\n';
  }
  return out;
}

std::string emit_issues(std::span<const IssueRecord> issues) {
  std::string out;
  for (const auto& i : issues) {
    out += issue_to_json(i).dump();
    out += '\n';
  }
  return out;
}

json label_to_json(const std::string& change_id, const Label& l) {
  json j{{"change_id", change_id},
         {"kind", label_kind_to_string(l.kind)},
         {"source", label_source_to_string(l.source)},
         {"known_at", l.known_at}};
  if (l.provenance)
    j["provenance"] = json{{"cve_id", l.provenance->cve_id},
                           {"vfc_change_id", l.provenance->vfc_change_id}};
  else
    j["provenance"] = nullptr;
  return j;
}

Label label_from_json(const json& j, std::string* change_id_out) {
  if (!j.is_object()) throw SchemaViolation("label");
  if (change_id_out) *change_id_out = get_string(j, "change_id");
  Label l;
  l.kind = label_kind_from_string(get_string(j, "kind"));
  l.source = label_source_from_string(get_string(j, "source"));
  l.known_at = get_int(j, "known_at");
  if (j.contains("provenance") && !j.at("provenance").is_null()) {
    const json& p = j.at("provenance");
    l.provenance = LabelProvenance{get_string(p, "cve_id"),
                                   get_string(p, "vfc_change_id")};
  }
  if (l.kind == LabelKind::ViC && l.source == LabelSource::lineage &&
      !l.provenance)
    throw InvariantViolation(change_id_out ? *change_id_out : "",
                             "lineage ViC without provenance");
  return l;
}

std::string emit_labels(std::span<const LabeledChange> corpus) {
  std::string out;
  for (const auto& lc : corpus) {
    out += label_to_json(lc.change.change_id, lc.label).dump();
    out += '\n';
  }
  return out;
}

std::vector<LabeledChange> attach_labels(std::vector<ChangeRecord> changes,
                                         std::string_view labels_jsonl) {
  std::unordered_map<std::string, Label> by_id;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  std::string_view text = labels_jsonl;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    std::string_view line = end == std::string_view::npos
                                ? text.substr(pos)
                                : text.substr(pos, end - pos);
    ++line_no;
    if (!trim(line).empty()) {
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) throw MalformedLine(line_no);
      std::string id;
      Label l = label_from_json(j, &id);
      by_id[id] = l;
    }
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  std::vector<LabeledChange> out;
  out.reserve(changes.size());
  for (auto& c : changes) {
    LabeledChange lc;
    auto it = by_id.find(c.change_id);
    if (it != by_id.end()) {
      lc.label = it->second;
    } else {
      lc.label.kind = LabelKind::LNC;
      lc.label.source = LabelSource::assumed;
      lc.label.known_at = c.submitted_at;
    }
    lc.change = std::move(c);
    out.push_back(std::move(lc));
  }
  return out;
}

BugLinkResult link_bugs_to_changes(std::span<const IssueRecord> issues,
                                   std::span<const ChangeRecord> changes) {
  // Index change ids and commit hashes; commits sharing a change id collapse
  // to that id (cherry-picks).
  std::unordered_map<std::string, std::string> resolve;  // id or hash -> change_id
  for (const auto& c : changes) {
    resolve[c.change_id] = c.change_id;
    for (const auto& h : c.commit_hashes) resolve.emplace(h, c.change_id);
  }

  BugLinkResult result;
  for (const auto& issue : issues) {
    std::set<std::string> linked;
    for (const auto& entry : issue.linked_change_ids) {
      auto it = resolve.find(entry);
      if (it != resolve.end())
        linked.insert(it->second);
      else
        result.unresolved.emplace_back(issue.bug_id, entry);
    }
    for (const auto& c : changes) {
      for (const char* prefix : {"Bug: ", "Fixes: "}) {
        std::string needle = prefix + issue.bug_id;
        std::size_t at = c.description.find(needle);
        // The referenced id must end at a token boundary so that "Bug: B1"
        // does not match bug "B" or description "Bug: B12".
        while (at != std::string::npos) {
          std::size_t after = at + needle.size();
          if (after == c.description.size() ||
              !std::isalnum(static_cast<unsigned char>(c.description[after]))) {
            linked.insert(c.change_id);
            break;
          }
          at = c.description.find(needle, at + 1);
        }
      }
    }
    result.changes_by_bug[issue.bug_id] =
        std::vector<std::string>(linked.begin(), linked.end());
  }
  return result;
}

}  // namespace vulnpred
