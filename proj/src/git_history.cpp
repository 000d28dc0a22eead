#include "vulnpred/git_history.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "vulnpred/util.hpp"

namespace vulnpred {

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      out.emplace_back(text.substr(pos));
      break;
    }
    out.emplace_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  return out;
}

std::vector<DiffHunk> diff_lines(const std::vector<std::string>& a,
                                 const std::vector<std::string>& b) {
  std::size_t n = a.size(), m = b.size();
  std::size_t lo = 0;
  while (lo < n && lo < m && a[lo] == b[lo]) ++lo;
  std::size_t hi = 0;
  while (hi + lo < n && hi + lo < m && a[n - 1 - hi] == b[m - 1 - hi]) ++hi;
  std::size_t an = n - lo - hi, bm = m - lo - hi;

  // match[i] for the middle section: 1 when a[lo+i] pairs with a common line.
  std::vector<char> keep_a(an, 0), keep_b(bm, 0);
  if (an > 0 && bm > 0) {
    // LCS via DP table over the trimmed middle.
    std::vector<std::vector<int>> dp(an + 1, std::vector<int>(bm + 1, 0));
    for (std::size_t i = an; i-- > 0;)
      for (std::size_t j = bm; j-- > 0;)
        dp[i][j] = a[lo + i] == b[lo + j]
                       ? dp[i + 1][j + 1] + 1
                       : std::max(dp[i + 1][j], dp[i][j + 1]);
    std::size_t i = 0, j = 0;
    while (i < an && j < bm) {
      if (a[lo + i] == b[lo + j]) {
        keep_a[i] = keep_b[j] = 1;
        ++i, ++j;
      } else if (dp[i + 1][j] >= dp[i][j + 1]) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  std::vector<DiffHunk> hunks;
  std::size_t i = 0, j = 0;
  while (i < an || j < bm) {
    if (i < an && j < bm && keep_a[i] && keep_b[j]) {
      ++i, ++j;
      continue;
    }
    DiffHunk h;
    std::size_t i0 = i, j0 = j;
    while (i < an && !keep_a[i]) ++i;
    while (j < bm && !keep_b[j]) ++j;
    h.old_count = static_cast<int>(i - i0);
    h.new_count = static_cast<int>(j - j0);
    // Zero-count sides anchor after the preceding line (0 = top of file).
    h.old_start = static_cast<int>(lo + i0) + (h.old_count > 0 ? 1 : 0);
    h.new_start = static_cast<int>(lo + j0) + (h.new_count > 0 ? 1 : 0);
    hunks.push_back(h);
  }
  return hunks;
}

std::optional<int> map_new_line_to_old(const std::vector<DiffHunk>& hunks,
                                       int new_line) {
  int shift = 0;
  for (const auto& h : hunks) {
    if (h.new_count > 0 && new_line >= h.new_start &&
        new_line < h.new_start + h.new_count)
      return std::nullopt;  // added or modified by this diff
    int hunk_new_end = h.new_count > 0 ? h.new_start + h.new_count - 1
                                       : h.new_start;
    if (hunk_new_end < new_line || (h.new_count == 0 && h.new_start < new_line))
      shift += h.old_count - h.new_count;
    else
      break;
  }
  return new_line + shift;
}

std::optional<FileLines> GitHistory::file_before(
    std::size_t index, const std::string& path) const {
  if (index == 0) return baseline_file(path);
  return file_after(index - 1, path);
}

std::optional<std::size_t> GitHistory::find_change(
    const std::string& change_id) const {
  for (std::size_t i = 0; i < commit_count(); ++i)
    if (commit(i).change_id == change_id) return i;
  return std::nullopt;
}

void FixtureHistory::set_baseline(std::map<std::string, FileLines> files) {
  if (!commits_.empty())
    throw std::logic_error("baseline must be set before commits");
  has_baseline_ = true;
  baseline_.clear();
  for (auto& [path, lines] : files)
    baseline_[path] = std::make_shared<const FileLines>(std::move(lines));
}

void FixtureHistory::add_commit(
    CommitMeta meta, std::map<std::string, std::optional<FileLines>> files) {
  Entry e;
  e.meta = std::move(meta);
  e.after = commits_.empty() ? baseline_ : commits_.back().after;
  for (auto& [path, lines] : files) {
    e.changed.push_back(path);
    if (lines)
      e.after[path] = std::make_shared<const FileLines>(std::move(*lines));
    else
      e.after.erase(path);
  }
  commits_.push_back(std::move(e));
}

FixtureHistory FixtureHistory::from_json(const nlohmann::json& j) {
  FixtureHistory h;
  if (j.contains("baseline") && !j.at("baseline").is_null()) {
    std::map<std::string, FileLines> base;
    for (const auto& [path, lines] : j.at("baseline").items())
      base[path] = lines.get<FileLines>();
    h.set_baseline(std::move(base));
  }
  for (const auto& c : j.at("commits")) {
    CommitMeta meta{c.at("commit_hash").get<std::string>(),
                    c.at("change_id").get<std::string>()};
    std::map<std::string, std::optional<FileLines>> files;
    for (const auto& [path, lines] : c.at("files").items()) {
      if (lines.is_null())
        files[path] = std::nullopt;
      else
        files[path] = lines.get<FileLines>();
    }
    h.add_commit(std::move(meta), std::move(files));
  }
  return h;
}

FixtureHistory FixtureHistory::from_file(const std::string& path) {
  return from_json(nlohmann::json::parse(read_file(path)));
}

std::optional<FileLines> FixtureHistory::file_after(
    std::size_t index, const std::string& path) const {
  const Snapshot& snap = commits_.at(index).after;
  auto it = snap.find(path);
  if (it == snap.end()) return std::nullopt;
  return *it->second;
}

std::optional<FileLines> FixtureHistory::baseline_file(
    const std::string& path) const {
  auto it = baseline_.find(path);
  if (it == baseline_.end()) return std::nullopt;
  return *it->second;
}

std::vector<std::string> FixtureHistory::changed_paths(
    std::size_t index) const {
  return commits_.at(index).changed;
}

// ---- git subprocess backend -------------------------------------------------

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  out += "'";
  return out;
}

std::string run_command(const std::string& cmd, bool* ok) {
  std::string out;
  FILE* pipe = popen((cmd + " 2>/dev/null").c_str(), "r");
  if (!pipe) {
    if (ok) *ok = false;
    return out;
  }
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) out.append(buf, got);
  int rc = pclose(pipe);
  if (ok) *ok = rc == 0;
  return out;
}

}  // namespace

GitRepoHistory::GitRepoHistory(std::string repo_dir)
    : repo_dir_(std::move(repo_dir)) {
  bool ok = false;
  // %x1f separates hash from the Change-Id trailer value (may be empty).
  std::string log = run_git(
      {"log", "--first-parent", "--reverse",
       "--format=%H%x1f%(trailers:key=Change-Id,valueonly,separator=%x20)"},
      &ok);
  if (!ok) throw std::runtime_error("git log failed in " + repo_dir_);
  for (const auto& line : split_lines(log)) {
    if (line.empty()) continue;
    std::size_t sep = line.find('\x1f');
    CommitMeta meta;
    meta.commit_hash = line.substr(0, sep);
    if (sep != std::string::npos) {
      std::string trailer(trim(line.substr(sep + 1)));
      // Multiple Change-Id trailers are join-separated; keep the first.
      std::size_t sp = trailer.find(' ');
      meta.change_id = sp == std::string::npos ? trailer : trailer.substr(0, sp);
    }
    if (meta.change_id.empty()) meta.change_id = meta.commit_hash;
    commits_.push_back(std::move(meta));
  }
}

std::string GitRepoHistory::run_git(const std::vector<std::string>& args,
                                    bool* ok) const {
  std::string cmd = "git -C " + shell_quote(repo_dir_);
  for (const auto& a : args) cmd += " " + shell_quote(a);
  return run_command(cmd, ok);
}

std::optional<FileLines> GitRepoHistory::file_after(
    std::size_t index, const std::string& path) const {
  bool ok = false;
  std::string content =
      run_git({"show", commits_.at(index).commit_hash + ":" + path}, &ok);
  if (!ok) return std::nullopt;
  return split_lines(content);
}

std::vector<std::string> GitRepoHistory::changed_paths(
    std::size_t index) const {
  bool ok = false;
  const std::string& hash = commits_.at(index).commit_hash;
  std::string out;
  if (index == 0)
    out = run_git({"show", "--name-only", "--format=", hash}, &ok);
  else
    out = run_git({"diff", "--name-only", hash + "^", hash}, &ok);
  if (!ok) throw std::runtime_error("git diff --name-only failed");
  std::vector<std::string> paths = split_lines(out);
  paths.erase(std::remove(paths.begin(), paths.end(), std::string()),
              paths.end());
  return paths;
}

}  // namespace vulnpred
