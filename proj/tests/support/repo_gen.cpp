#include "repo_gen.hpp"

#include <algorithm>
#include <cassert>

namespace vulnpred::testing {

namespace {

struct GenLine {
  std::string text;
  int owner;       // commit index; -1 = baseline
  long long id;    // identity, survives nothing (modify = new id)
  bool valid;
};

struct GenState {
  std::map<std::string, std::vector<GenLine>> files;
  long long next_id = 0;
  long long next_token = 0;

  GenLine fresh_line(SplitMix64& rng, int owner) {
    long long tok = next_token++;
    double kind = rng.next_double();
    GenLine line;
    line.owner = owner;
    line.id = next_id++;
    if (kind < 0.60) {
      line.text = "v" + std::to_string(tok) + " = a" + std::to_string(tok) +
                  " + 1;";
      line.valid = true;
    } else if (kind < 0.75) {
      line.text = "// note " + std::to_string(tok);
      line.valid = false;
    } else if (kind < 0.90) {
      line.text = "";
      line.valid = false;
    } else {
      line.text = "#include <h" + std::to_string(tok) + ".h>";
      line.valid = false;
    }
    return line;
  }
};

std::vector<std::string> texts_of(const std::vector<GenLine>& lines) {
  std::vector<std::string> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(l.text);
  return out;
}

std::string pick_file(GenState& state, SplitMix64& rng) {
  std::vector<std::string> names;
  for (const auto& [name, _] : state.files) names.push_back(name);
  return names[static_cast<std::size_t>(rng.next_below(names.size()))];
}

// Applies 1..max_ops random ops attributed to commit `owner`; returns the
// set of touched paths.
std::set<std::string> apply_random_ops(GenState& state, SplitMix64& rng,
                                       int owner, int max_ops) {
  std::set<std::string> touched;
  int ops = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_ops)));
  for (int k = 0; k < ops; ++k) {
    bool create = state.files.empty() || rng.next_double() < 0.10;
    if (create) {
      std::string path =
          "src/f" + std::to_string(state.next_token++) + ".cpp";
      int n = 2 + static_cast<int>(rng.next_below(4));
      std::vector<GenLine> lines;
      for (int i = 0; i < n; ++i) lines.push_back(state.fresh_line(rng, owner));
      state.files[path] = std::move(lines);
      touched.insert(path);
      continue;
    }
    std::string path = pick_file(state, rng);
    std::vector<GenLine>& lines = state.files[path];
    double op = rng.next_double();
    if (op < 0.40 || lines.empty()) {
      // insert a block of 1..3 lines
      std::size_t at = static_cast<std::size_t>(
          rng.next_below(lines.size() + 1));
      int n = 1 + static_cast<int>(rng.next_below(3));
      std::vector<GenLine> block;
      for (int i = 0; i < n; ++i) block.push_back(state.fresh_line(rng, owner));
      lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(at),
                   block.begin(), block.end());
    } else if (op < 0.72) {
      std::size_t at = static_cast<std::size_t>(rng.next_below(lines.size()));
      lines[at] = state.fresh_line(rng, owner);
    } else {
      std::size_t at = static_cast<std::size_t>(rng.next_below(lines.size()));
      lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(at));
    }
    touched.insert(path);
  }
  return touched;
}

}  // namespace

GeneratedRepo generate_repo(std::uint64_t seed, int commits,
                            bool with_baseline) {
  SplitMix64 rng(seed);
  GenState state;
  GeneratedRepo repo;

  if (with_baseline) {
    std::map<std::string, FileLines> baseline;
    int nfiles = 1 + static_cast<int>(rng.next_below(2));
    for (int f = 0; f < nfiles; ++f) {
      std::string path = "src/base" + std::to_string(f) + ".cpp";
      int n = 3 + static_cast<int>(rng.next_below(5));
      std::vector<GenLine> lines;
      for (int i = 0; i < n; ++i) lines.push_back(state.fresh_line(rng, -1));
      baseline[path] = texts_of(lines);
      state.files[path] = std::move(lines);
    }
    repo.history.set_baseline(std::move(baseline));
  }

  for (int c = 0; c < commits; ++c) {
    std::set<std::string> touched = apply_random_ops(state, rng, c, 3);
    std::map<std::string, std::optional<FileLines>> files;
    for (const auto& path : touched) files[path] = texts_of(state.files[path]);
    repo.history.add_commit({"h" + std::to_string(c), "c" + std::to_string(c)},
                            std::move(files));
  }

  // Final commit: the VfC. Ground truth comes from the identity-tracked
  // pre/post arrays, mirroring the blame rules directly.
  const int vfc_index = commits;
  std::map<std::string, std::vector<GenLine>> pre = state.files;
  std::set<std::string> touched =
      apply_random_ops(state, rng, vfc_index, 4);
  std::map<std::string, std::optional<FileLines>> files;
  for (const auto& path : touched) files[path] = texts_of(state.files[path]);
  repo.history.add_commit({"hV", "vfc"}, std::move(files));
  repo.vfc_change_id = "vfc";

  auto commit_change_id = [&](int owner) -> std::optional<std::string> {
    if (owner < 0) return std::nullopt;  // baseline: before corpus
    return "c" + std::to_string(owner);
  };

  for (const auto& path : touched) {
    const std::vector<GenLine>* pre_lines =
        pre.count(path) ? &pre.at(path) : nullptr;
    const std::vector<GenLine>& post_lines = state.files.at(path);

    std::set<long long> post_ids;
    for (const auto& l : post_lines) post_ids.insert(l.id);

    // Deleted valid lines: owner of the exact pre-image line.
    if (pre_lines != nullptr) {
      for (const auto& l : *pre_lines) {
        if (post_ids.count(l.id) || !l.valid) continue;
        auto origin = commit_change_id(l.owner);
        if (origin)
          repo.expected_vics.insert(*origin);
        else
          ++repo.expected_side_notes;
      }
    }

    // Added groups: consecutive valid VfC-owned lines; next valid retained
    // line wins, else nearest preceding, else self-origin.
    std::size_t i = 0;
    while (i < post_lines.size()) {
      if (!(post_lines[i].owner == vfc_index && post_lines[i].valid)) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < post_lines.size() && post_lines[j].owner == vfc_index &&
             post_lines[j].valid)
        ++j;
      // j is one past the group.
      if (pre_lines == nullptr) {
        ++repo.expected_side_notes;  // file new in the VfC: self-origin
        i = j;
        continue;
      }
      auto usable = [&](std::size_t at) {
        return post_lines[at].valid && post_lines[at].owner != vfc_index;
      };
      std::optional<int> hit_owner;
      for (std::size_t f = j; f < post_lines.size(); ++f)
        if (usable(f)) {
          hit_owner = post_lines[f].owner;
          break;
        }
      if (!hit_owner)
        for (std::size_t b = i; b-- > 0;)
          if (usable(b)) {
            hit_owner = post_lines[b].owner;
            break;
          }
      if (!hit_owner) {
        ++repo.expected_side_notes;  // nothing valid anywhere: self-origin
      } else {
        auto origin = commit_change_id(*hit_owner);
        if (origin)
          repo.expected_vics.insert(*origin);
        else
          ++repo.expected_side_notes;
      }
      i = j;
    }
  }
  return repo;
}

}  // namespace vulnpred::testing
