#include "vulnpred/lineage.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

#include "vulnpred/util.hpp"

namespace vulnpred {

bool LineFilter::is_valid(std::string_view line) const {
  std::string_view t = trim(line);
  if (t.empty()) return !drop_blank;
  if (drop_comment) {
    if (t.substr(0, 2) == "//") return false;
    if (t.front() == '*') return false;  // block-comment continuation or close
    if (t.substr(0, 2) == "/*") {
      std::size_t close = t.find("*/", 2);
      if (close == std::string_view::npos) return false;
      // Comment-only line when nothing follows the close.
      if (trim(t.substr(close + 2)).empty()) return false;
    }
  }
  if (drop_preprocessor && t.front() == '#') {
    std::string_view rest = trim(t.substr(1));
    std::size_t end = 0;
    while (end < rest.size() &&
           std::isalpha(static_cast<unsigned char>(rest[end])))
      ++end;
    std::string directive(rest.substr(0, end));
    if (preprocessor_directives.count(directive)) return false;
  }
  return true;
}

namespace {

std::size_t resolve_commit(const GitHistory& history,
                           const std::string& change_id) {
  auto idx = history.find_change(change_id);
  if (!idx) throw UnresolvableBaseline(change_id);
  return *idx;
}

}  // namespace

std::vector<Vfl> extract_vfls(const ChangeRecord& vfc, const GitHistory& history,
                              const LineFilter& filter) {
  std::size_t idx = resolve_commit(history, vfc.change_id);
  std::vector<std::string> paths = history.changed_paths(idx);
  std::sort(paths.begin(), paths.end());

  std::vector<Vfl> out;
  for (const auto& path : paths) {
    FileLines old_lines =
        history.file_before(idx, path).value_or(FileLines{});
    FileLines new_lines = history.file_after(idx, path).value_or(FileLines{});
    for (const auto& h : diff_lines(old_lines, new_lines)) {
      for (int i = 0; i < h.old_count; ++i) {
        int line = h.old_start + i;
        const std::string& text = old_lines[static_cast<std::size_t>(line) - 1];
        if (filter.is_valid(text))
          out.push_back({path, line, VflKind::deleted, text});
      }
      for (int i = 0; i < h.new_count; ++i) {
        int line = h.new_start + i;
        const std::string& text = new_lines[static_cast<std::size_t>(line) - 1];
        if (filter.is_valid(text))
          out.push_back({path, line, VflKind::added, text});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const Vfl& a, const Vfl& b) {
    if (a.path != b.path) return a.path < b.path;
    if (a.line_number != b.line_number) return a.line_number < b.line_number;
    return a.kind < b.kind;  // deleted before added
  });
  return out;
}

namespace {

// Backward line-number walk from the state before commit `from_index`.
BlameResult blame_pre_image_line(const std::string& path, int line,
                                 std::size_t from_index,
                                 const GitHistory& history) {
  for (std::size_t j = from_index; j-- > 0;) {
    auto cur = history.file_after(j, path);
    if (!cur) return {BlameStatus::before_corpus, {}};  // unreachable in a
                                                        // consistent history
    auto prev = history.file_before(j, path);
    if (!prev) {
      const CommitMeta& m = history.commit(j);
      return {BlameStatus::ok, {path, line, m.commit_hash, m.change_id}};
    }
    auto mapped = map_new_line_to_old(diff_lines(*prev, *cur), line);
    if (!mapped) {
      const CommitMeta& m = history.commit(j);
      return {BlameStatus::ok, {path, line, m.commit_hash, m.change_id}};
    }
    line = *mapped;
  }
  return {BlameStatus::before_corpus, {}};
}

}  // namespace

BlameResult blame_deleted(const Vfl& vfl, const std::string& vfc_change_id,
                          const GitHistory& history) {
  std::size_t idx = resolve_commit(history, vfc_change_id);
  return blame_pre_image_line(vfl.path, vfl.line_number, idx, history);
}

BlameResult blame_added(std::span<const Vfl> group,
                        const std::string& vfc_change_id,
                        const GitHistory& history, const LineFilter& filter) {
  std::size_t idx = resolve_commit(history, vfc_change_id);
  const std::string& path = group.front().path;
  auto pre = history.file_before(idx, path);
  if (!pre) return {BlameStatus::self_origin, {}};  // file new in the VfC
  auto post = history.file_after(idx, path);
  if (!post) return {BlameStatus::self_origin, {}};

  std::vector<DiffHunk> hunks = diff_lines(*pre, *post);
  int first = group.front().line_number;
  int last = group.back().line_number;

  auto try_line = [&](int post_line) -> std::optional<BlameResult> {
    const std::string& text = (*post)[static_cast<std::size_t>(post_line) - 1];
    if (!filter.is_valid(text)) return std::nullopt;
    auto old_line = map_new_line_to_old(hunks, post_line);
    if (!old_line) return std::nullopt;  // added by the VfC itself
    return blame_pre_image_line(path, *old_line, idx, history);
  };

  for (int l = last + 1; l <= static_cast<int>(post->size()); ++l)
    if (auto r = try_line(l)) return *r;
  for (int l = first - 1; l >= 1; --l)
    if (auto r = try_line(l)) return *r;
  return {BlameStatus::self_origin, {}};
}

VicFindings find_vics_from_vfcs(std::span<const ChangeRecord> vfcs,
                                const GitHistory& history,
                                const LineFilter& filter) {
  VicFindings findings;
  for (const auto& vfc : vfcs) {
    std::set<std::string>& vics = findings.vics_by_vfc[vfc.change_id];
    std::vector<Vfl> vfls = extract_vfls(vfc, history, filter);

    auto note = [&](const Vfl& v, BlameStatus status) {
      findings.side_report.push_back(
          {vfc.change_id, v.path, v.line_number,
           status == BlameStatus::self_origin ? "self_origin"
                                              : "before_corpus"});
    };
    auto absorb = [&](const Vfl& v, const BlameResult& r) {
      if (r.status != BlameStatus::ok) {
        note(v, r.status);
      } else if (r.origin.change_id == vfc.change_id) {
        note(v, BlameStatus::self_origin);
      } else {
        vics.insert(r.origin.change_id);
      }
    };

    for (const auto& v : vfls)
      if (v.kind == VflKind::deleted)
        absorb(v, blame_deleted(v, vfc.change_id, history));

    // Group consecutively added lines per path.
    std::vector<Vfl> added;
    for (const auto& v : vfls)
      if (v.kind == VflKind::added) added.push_back(v);
    std::size_t i = 0;
    while (i < added.size()) {
      std::size_t j = i + 1;
      while (j < added.size() && added[j].path == added[i].path &&
             added[j].line_number == added[j - 1].line_number + 1)
        ++j;
      std::span<const Vfl> group(&added[i], j - i);
      absorb(added[i], blame_added(group, vfc.change_id, history, filter));
      i = j;
    }
  }
  return findings;
}

bool CveFilter::accepts(const IssueRecord& issue) const {
  if (require_cve && issue.cve_ids.empty()) return false;
  if (min_severity) {
    auto rank = [](Severity s) {
      switch (s) {
        case Severity::critical: return 4;
        case Severity::high: return 3;
        case Severity::moderate: return 2;
        case Severity::low: return 1;
        default: return 0;
      }
    };
    if (rank(issue.severity) < rank(*min_severity)) return false;
  }
  return true;
}

LabeledCorpus build_labeled_corpus(std::span<const ChangeRecord> changes,
                                   std::span<const IssueRecord> issues,
                                   const GitHistory& history,
                                   const CorpusBuildOptions& options) {
  LabeledCorpus result;

  std::vector<IssueRecord> eligible;
  for (const auto& issue : issues)
    if (options.cve_filter.accepts(issue)) eligible.push_back(issue);

  BugLinkResult links = link_bugs_to_changes(eligible, changes);
  result.unresolved_links = std::move(links.unresolved);

  auto issue_cve = [](const IssueRecord& issue) {
    if (issue.cve_ids.empty()) return "bug:" + issue.bug_id;
    return *std::min_element(issue.cve_ids.begin(), issue.cve_ids.end());
  };

  // VfC change id -> smallest cve id that linked it; cve -> its VfC set.
  std::map<std::string, std::string> vfc_cve;
  std::map<std::string, std::set<std::string>> vfcs_of_cve;
  for (const auto& issue : eligible) {
    std::string cve = issue_cve(issue);
    for (const auto& cid : links.changes_by_bug[issue.bug_id]) {
      auto [it, inserted] = vfc_cve.emplace(cid, cve);
      if (!inserted && cve < it->second) it->second = cve;
      vfcs_of_cve[cve].insert(cid);
    }
  }

  std::unordered_map<std::string, const ChangeRecord*> by_id;
  for (const auto& c : changes) by_id.emplace(c.change_id, &c);

  // ViC change id -> smallest (cve, vfc) provenance.
  std::map<std::string, LabelProvenance> vic_provenance;
  for (const auto& [vfc_id, cve] : vfc_cve) {
    const ChangeRecord* rec = by_id.at(vfc_id);
    VicFindings f;
    try {
      f = find_vics_from_vfcs(std::span<const ChangeRecord>(rec, 1), history,
                              options.line_filter);
    } catch (const UnresolvableBaseline&) {
      result.side_report.push_back({vfc_id, "", 0, "unresolvable"});
      continue;
    }
    for (auto& n : f.side_report) result.side_report.push_back(std::move(n));
    for (const auto& vic_id : f.vics_by_vfc[vfc_id]) {
      // Per-CVE disjointness: an origin that is itself a fix for the same
      // CVE goes to the manual-review bucket instead of the ViC set.
      if (vfcs_of_cve[cve].count(vic_id)) {
        result.side_report.push_back({vfc_id, vic_id, 0,
                                      "vfc_origin_same_cve"});
        continue;
      }
      LabelProvenance prov{cve, vfc_id};
      auto it = vic_provenance.find(vic_id);
      if (it == vic_provenance.end()) {
        vic_provenance.emplace(vic_id, prov);
      } else if (std::tie(prov.cve_id, prov.vfc_change_id) <
                 std::tie(it->second.cve_id, it->second.vfc_change_id)) {
        it->second = prov;
      }
    }
  }

  result.corpus.reserve(changes.size());
  for (const auto& c : changes) {
    LabeledChange lc;
    lc.change = c;
    auto vic = vic_provenance.find(c.change_id);
    if (vic != vic_provenance.end()) {
      lc.label.kind = LabelKind::ViC;
      lc.label.source = LabelSource::lineage;
      lc.label.provenance = vic->second;
      lc.label.known_at = c.submitted_at + options.label_delay_seconds;
    } else if (auto vfc = vfc_cve.find(c.change_id); vfc != vfc_cve.end()) {
      lc.label.kind = LabelKind::VfC;
      lc.label.source = LabelSource::lineage;
      lc.label.provenance = LabelProvenance{vfc->second, c.change_id};
      lc.label.known_at = c.submitted_at;
    } else {
      lc.label.kind = LabelKind::LNC;
      lc.label.source = LabelSource::assumed;
      lc.label.known_at = c.submitted_at;
    }
    result.corpus.push_back(std::move(lc));
  }
  return result;
}

}  // namespace vulnpred
