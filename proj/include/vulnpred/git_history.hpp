#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace vulnpred {

// Line diff hunk, 1-based starts, unified-diff anchoring: a hunk with
// old_count == 0 inserts after old_start (old_start may be 0 for inserts at
// the top of the file).
struct DiffHunk {
  int old_start = 0;
  int old_count = 0;
  int new_start = 0;
  int new_count = 0;
};

// Longest-common-subsequence line diff. Hunks are maximal, non-overlapping,
// ascending. Common prefix/suffix are trimmed first so the quadratic DP only
// sees the changed middle.
std::vector<DiffHunk> diff_lines(const std::vector<std::string>& old_lines,
                                 const std::vector<std::string>& new_lines);

// Maps a post-image line number to its pre-image number through `hunks`,
// or nullopt when the line was added/modified by the diff.
std::optional<int> map_new_line_to_old(const std::vector<DiffHunk>& hunks,
                                       int new_line);

struct CommitMeta {
  std::string commit_hash;
  std::string change_id;
};

using FileLines = std::vector<std::string>;

// Linear history of file snapshots. Commit indices run 0..commit_count()-1 in
// chronological order; the state before commit 0 is the baseline (empty when
// the history has none).
class GitHistory {
 public:
  virtual ~GitHistory() = default;

  virtual std::size_t commit_count() const = 0;
  virtual const CommitMeta& commit(std::size_t index) const = 0;
  virtual bool has_baseline() const = 0;

  // Content of `path` after commit `index`; nullopt when absent.
  virtual std::optional<FileLines> file_after(std::size_t index,
                                              const std::string& path) const = 0;
  virtual std::optional<FileLines> baseline_file(
      const std::string& path) const = 0;

  // Paths touched by commit `index` (created, edited, or deleted).
  virtual std::vector<std::string> changed_paths(std::size_t index) const = 0;

  // Content of `path` just before commit `index`.
  std::optional<FileLines> file_before(std::size_t index,
                                       const std::string& path) const;
  // Earliest commit carrying `change_id` (original, not cherry-picks).
  std::optional<std::size_t> find_change(const std::string& change_id) const;
};

// In-memory backend over explicit per-commit snapshots. The canonical test
// backend; also loadable from a JSON file:
//   {"baseline": {path: [lines...]},                 // optional
//    "commits": [{"commit_hash": "...", "change_id": "...",
//                 "files": {path: [lines...] | null}}]}   // null deletes
class FixtureHistory final : public GitHistory {
 public:
  FixtureHistory() = default;

  void set_baseline(std::map<std::string, FileLines> files);
  // Appends a commit; `files` holds full new content of every touched path,
  // nullopt content deletes the path.
  void add_commit(CommitMeta meta,
                  std::map<std::string, std::optional<FileLines>> files);

  static FixtureHistory from_json(const nlohmann::json& j);
  static FixtureHistory from_file(const std::string& path);

  std::size_t commit_count() const override { return commits_.size(); }
  const CommitMeta& commit(std::size_t index) const override {
    return commits_[index].meta;
  }
  bool has_baseline() const override { return has_baseline_; }
  std::optional<FileLines> file_after(std::size_t index,
                                      const std::string& path) const override;
  std::optional<FileLines> baseline_file(
      const std::string& path) const override;
  std::vector<std::string> changed_paths(std::size_t index) const override;

 private:
  using Snapshot = std::map<std::string, std::shared_ptr<const FileLines>>;
  struct Entry {
    CommitMeta meta;
    std::vector<std::string> changed;
    Snapshot after;  // full snapshot; unchanged files share pointers
  };
  bool has_baseline_ = false;
  Snapshot baseline_;
  std::vector<Entry> commits_;
};

// Backend over a real git work tree, driven via git plumbing subprocesses.
// Follows first-parent history of HEAD in chronological order; the change id
// of a commit is its Change-Id trailer when present, else the commit hash.
class GitRepoHistory final : public GitHistory {
 public:
  explicit GitRepoHistory(std::string repo_dir);

  std::size_t commit_count() const override { return commits_.size(); }
  const CommitMeta& commit(std::size_t index) const override {
    return commits_[index];
  }
  bool has_baseline() const override { return false; }
  std::optional<FileLines> file_after(std::size_t index,
                                      const std::string& path) const override;
  std::optional<FileLines> baseline_file(const std::string&) const override {
    return std::nullopt;
  }
  std::vector<std::string> changed_paths(std::size_t index) const override;

 private:
  std::string run_git(const std::vector<std::string>& args, bool* ok) const;
  std::string repo_dir_;
  std::vector<CommitMeta> commits_;
};

std::vector<std::string> split_lines(std::string_view text);

}  // namespace vulnpred
