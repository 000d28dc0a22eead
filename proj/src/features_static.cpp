#include "vulnpred/features_static.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "vulnpred/util.hpp"

namespace vulnpred {

int DomainRankTable::rank_of(std::string_view domain) const {
  std::string d = lowercase(domain);
  for (const auto& e : entries) {
    if (e.pattern.size() > 2 && e.pattern[0] == '*' && e.pattern[1] == '.') {
      std::string_view suffix(e.pattern);
      suffix.remove_prefix(1);  // keep the dot: "*.foo.com" matches "a.foo.com"
      if (d.size() > suffix.size() &&
          d.compare(d.size() - suffix.size(), suffix.size(), suffix) == 0)
        return e.rank;
    } else if (d == e.pattern) {
      return e.rank;
    }
  }
  return default_rank;
}

DomainRankTable DomainRankTable::aosp_default() {
  DomainRankTable t;
  t.entries = {{"google.com", 1},   {"android.com", 2}, {"samsung.com", 3},
               {"qualcomm.com", 3}, {"qti.qualcomm.com", 3},
               {"mediatek.com", 3}, {"nvidia.com", 3},  {"intel.com", 3},
               {"sony.com", 3},     {"sonymobile.com", 3},
               {"broadcom.com", 3}, {"codeaurora.org", 3},
               {"kernel.org", 4},   {"linaro.org", 4},  {"linux.com", 4}};
  t.default_rank = 5;
  return t;
}

DomainRankTable DomainRankTable::parse_toml(std::string_view text) {
  DomainRankTable t;
  t.entries.clear();
  bool in_rank = false;
  std::string pattern;
  int value = 0;
  bool have_pattern = false, have_value = false;

  auto flush = [&]() {
    if (!in_rank) return;
    if (!have_pattern || !have_value)
      throw std::invalid_argument("domain rank entry missing pattern or value");
    if (value < 1) throw std::invalid_argument("domain rank must be >= 1");
    t.entries.push_back({lowercase(pattern), value});
    have_pattern = have_value = false;
  };

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    std::string_view raw = end == std::string_view::npos
                               ? text.substr(pos)
                               : text.substr(pos, end - pos);
    std::string_view line = trim(raw);
    if (!line.empty() && line[0] != '#') {
      if (line == "[[rank]]") {
        flush();
        in_rank = true;
      } else {
        std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
          throw std::invalid_argument("bad domain rank config line: " +
                                      std::string(line));
        std::string key(trim(line.substr(0, eq)));
        std::string_view val = trim(line.substr(eq + 1));
        if (key == "default") {
          t.default_rank = std::stoi(std::string(val));
        } else if (key == "pattern" && in_rank) {
          if (val.size() < 2 || val.front() != '"' || val.back() != '"')
            throw std::invalid_argument("pattern must be a quoted string");
          pattern = std::string(val.substr(1, val.size() - 2));
          have_pattern = true;
        } else if (key == "value" && in_rank) {
          value = std::stoi(std::string(val));
          have_value = true;
        } else {
          throw std::invalid_argument("unknown domain rank config key: " + key);
        }
      }
    }
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  flush();
  if (t.default_rank < 1)
    throw std::invalid_argument("default domain rank must be >= 1");
  return t;
}

DomainRankTable DomainRankTable::from_file(const std::string& path) {
  return parse_toml(read_file(path));
}

std::string DomainRankTable::to_toml() const {
  std::ostringstream out;
  out << "default = " << default_rank << "\n";
  for (const auto& e : entries)
    out << "\n[[rank]]\npattern = \"" << e.pattern << "\"\nvalue = " << e.rank
        << "\n";
  return out.str();
}

HpFeatures extract_hp(const ChangeRecord& change, const DomainRankTable& table) {
  HpFeatures hp;
  hp.author = table.rank_of(change.author.email_domain);
  bool any = false;
  int best = 0;
  for (const auto& r : change.reviews) {
    if (r.score == -2) continue;  // blocked changes are not submittable
    best = std::max(best, table.rank_of(r.reviewer.email_domain));
    any = true;
  }
  hp.reviewer = any ? best : hp.author;
  return hp;
}

CcFeatures extract_cc(const ChangeRecord& change) {
  CcFeatures cc;
  for (const auto& fe : change.final_edits) {
    cc.add += fe.lines_added;
    cc.del += fe.lines_deleted;
  }
  return cc;
}

PcFeatures extract_pc(const ChangeRecord& change) {
  PcFeatures pc;
  pc.count = static_cast<int>(change.patch_sets.size());

  auto volume = [](const PatchSet& ps) {
    long long v = 0;
    for (const auto& fe : ps.file_edits) v += fe.lines_added + fe.lines_deleted;
    return v;
  };

  pc.max_patchset = volume(change.patch_sets.front());
  pc.min_patchset = pc.max_patchset;
  for (std::size_t i = 1; i < change.patch_sets.size(); ++i) {
    long long v = volume(change.patch_sets[i]);
    pc.revision += v;
    pc.max_patchset = std::max(pc.max_patchset, v);
    pc.min_patchset = std::min(pc.min_patchset, v);
  }

  CcFeatures cc = extract_cc(change);
  pc.relative_revision =
      static_cast<double>(pc.revision) /
      static_cast<double>(std::max<long long>(1, cc.add + cc.del));
  pc.avg_patchset = pc.count > 1
                        ? static_cast<double>(pc.revision) / (pc.count - 1)
                        : 0.0;
  return pc;
}

RpFeatures extract_rp(const ChangeRecord& change) {
  RpFeatures rp;
  rp.time_seconds = change.submitted_at - change.created_at;
  rp.weekday = weekday_sunday1(change.submitted_at);
  rp.hour = hour_of_day(change.submitted_at);

  bool author_plus2 = false;
  bool other_positive = false;
  for (const auto& r : change.reviews) {
    bool is_author = r.reviewer.account_id == change.author.account_id;
    if (is_author && r.score == 2) author_plus2 = true;
    if (!is_author && r.score >= 1) other_positive = true;
  }
  rp.plus2_self = author_plus2 && !other_positive;
  return rp;
}

}  // namespace vulnpred
