#pragma once

// Small builders for hand-constructed test records.

#include <string>
#include <vector>

#include "vulnpred/change_model.hpp"

namespace vulnpred::testing {

inline Identity ident(const std::string& account, const std::string& domain) {
  return Identity{account, domain};
}

// Pure-add + pure-delete file edit with one hunk per side. Added lines occupy
// post-image 1..n, deleted lines pre-image 1..m.
inline FileEdit edit_with_lines(const std::string& path,
                                std::vector<std::string> added,
                                std::vector<std::string> deleted = {}) {
  FileEdit fe;
  fe.path = path;
  fe.lines_added = static_cast<int>(added.size());
  fe.lines_deleted = static_cast<int>(deleted.size());
  for (int i = 1; i <= fe.lines_added; ++i) fe.added_line_numbers.push_back(i);
  for (int i = 1; i <= fe.lines_deleted; ++i)
    fe.deleted_line_numbers.push_back(i);
  if (!deleted.empty()) {
    Hunk del;
    del.old_start = 1;
    del.old_count = fe.lines_deleted;
    del.new_start = 0;
    del.new_count = 0;
    del.old_lines = deleted;
    fe.hunks.push_back(std::move(del));
  }
  if (!added.empty()) {
    Hunk add;
    add.old_start = static_cast<int>(deleted.size());
    add.old_count = 0;
    add.new_start = 1;
    add.new_count = fe.lines_added;
    add.new_lines = added;
    fe.hunks.push_back(std::move(add));
  }
  return fe;
}

// Counts-only edit (no hunk text); enough for CC/PC/VH/PT paths.
inline FileEdit edit_with_counts(const std::string& path, int added,
                                 int deleted) {
  FileEdit fe;
  fe.path = path;
  fe.lines_added = added;
  fe.lines_deleted = deleted;
  for (int i = 1; i <= added; ++i) fe.added_line_numbers.push_back(i);
  for (int i = 1; i <= deleted; ++i) fe.deleted_line_numbers.push_back(i);
  return fe;
}

struct ChangeBuilder {
  ChangeRecord record;

  explicit ChangeBuilder(const std::string& id,
                         Identity author = {"alice", "google.com"}) {
    record.change_id = id;
    record.project = "demo";
    record.author = std::move(author);
    record.created_at = 1000;
    record.submitted_at = 2000;
  }

  ChangeBuilder& created(std::int64_t t) {
    record.created_at = t;
    return *this;
  }
  ChangeBuilder& submitted(std::int64_t t) {
    record.submitted_at = t;
    return *this;
  }
  ChangeBuilder& describe(const std::string& text) {
    record.description = text;
    return *this;
  }
  ChangeBuilder& commit_hash(const std::string& h) {
    record.commit_hashes.push_back(h);
    return *this;
  }
  ChangeBuilder& review(const std::string& account, const std::string& domain,
                        int score, std::int64_t at = 1500) {
    record.reviews.push_back(ReviewEvent{{account, domain}, score, at});
    return *this;
  }
  ChangeBuilder& final_edit(FileEdit fe) {
    record.final_edits.push_back(std::move(fe));
    return *this;
  }
  ChangeBuilder& patch_set(std::vector<FileEdit> edits,
                           std::int64_t uploaded_at = 0) {
    PatchSet ps;
    ps.index = static_cast<int>(record.patch_sets.size()) + 1;
    ps.uploaded_at = uploaded_at == 0 ? record.created_at : uploaded_at;
    ps.file_edits = std::move(edits);
    record.patch_sets.push_back(std::move(ps));
    return *this;
  }

  // Finalize: default patch set mirroring final_edits when none was given.
  ChangeRecord build() {
    ChangeRecord out = record;
    if (out.patch_sets.empty()) {
      PatchSet ps;
      ps.index = 1;
      ps.uploaded_at = out.created_at;
      ps.file_edits = out.final_edits;
      out.patch_sets.push_back(std::move(ps));
    }
    return out;
  }
};

inline LabeledChange labeled(ChangeRecord change, LabelKind kind,
                             std::int64_t known_at = 0) {
  LabeledChange lc;
  lc.label.kind = kind;
  lc.label.source =
      kind == LabelKind::LNC ? LabelSource::assumed : LabelSource::manual;
  lc.label.known_at = known_at == 0 ? change.submitted_at : known_at;
  lc.change = std::move(change);
  return lc;
}

}  // namespace vulnpred::testing
