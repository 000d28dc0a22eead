#include "vulnpred/features_history.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vulnpred {

namespace {

// Distinct non-author reviewer accounts with any vote in `scores`.
std::set<std::string> qualifying_reviewers(const ChangeRecord& change,
                                           bool positive_only) {
  std::set<std::string> out;
  for (const auto& r : change.reviews) {
    if (r.reviewer.account_id == change.author.account_id) continue;
    if (positive_only ? r.score >= 1 : r.score != -2)
      out.insert(r.reviewer.account_id);
  }
  return out;
}

std::set<std::string> change_paths(const ChangeRecord& change) {
  std::set<std::string> out;
  for (const auto& fe : change.final_edits) out.insert(fe.path);
  return out;
}

}  // namespace

std::string HistoryState::dir_of(const std::string& path) {
  std::size_t slash = path.rfind('/');
  return slash == std::string::npos ? std::string() : path.substr(0, slash);
}

std::string HistoryState::stem_of(const std::string& path) {
  std::size_t slash = path.rfind('/');
  std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
  std::size_t dot = name.rfind('.');
  return dot == std::string::npos || dot == 0 ? name : name.substr(0, dot);
}

double HistoryState::effective(const AccountScore& s, bool vic,
                               std::int64_t at_period) const {
  double value = vic ? s.vic : s.lnc;
  if (decay_ != 1.0 && at_period > s.last_period)
    value *= std::pow(decay_, static_cast<double>(at_period - s.last_period));
  return value;
}

void HistoryState::index_file(const std::string& path) {
  dir_index_[dir_of(path)].insert(path);
  stem_index_[stem_of(path)].insert(path);
}

void HistoryState::record_labeled_change(const LabeledChange& labeled,
                                         std::optional<std::int64_t> as_of) {
  std::int64_t known = as_of.value_or(labeled.label.known_at);
  if (known < last_known_at_) throw OutOfOrderFeed();
  const ChangeRecord& change = labeled.change;
  const bool is_vic = labeled.label.kind == LabelKind::ViC;
  std::int64_t period = period_.period_of(change.submitted_at);

  auto touch = [&](const std::string& account) -> AccountScore& {
    AccountScore& s = accounts_[account];
    if (decay_ != 1.0 && period > s.last_period) {
      double f = std::pow(decay_, static_cast<double>(period - s.last_period));
      s.lnc *= f;
      s.vic *= f;
    }
    s.last_period = std::max(s.last_period, period);
    return s;
  };

  AccountScore& author = touch(change.author.account_id);
  if (is_vic)
    author.vic -= 3;
  else
    author.lnc += 2;
  for (const auto& reviewer : qualifying_reviewers(change, true)) {
    AccountScore& s = touch(reviewer);
    if (is_vic)
      s.vic -= 2;
    else
      s.lnc += 1;
  }

  for (const auto& fe : change.final_edits) {
    FileStats& fs = files_[fe.path];
    if (is_vic)
      ++fs.vic_count;
    else
      ++fs.lnc_count;
    index_file(fe.path);

    PeriodFileStats& pv = period_volumes_[period][fe.path];
    pv.line_volume += fe.lines_added + fe.lines_deleted;
    if (is_vic) ++pv.vic_count;
    if (labeled.label.kind == LabelKind::VfC) ++pv.vfc_count;
  }

  last_known_at_ = known;
  current_period_ = std::max(current_period_, period);
  ++recorded_;
}

double HistoryState::hh_of(const std::string& account_id,
                           std::int64_t at_period) const {
  auto it = accounts_.find(account_id);
  if (it == accounts_.end()) return 0.0;  // unknown account: 0/0 -> 0
  double vic = effective(it->second, true, at_period);
  double lnc = effective(it->second, false, at_period);
  return vic / std::max(1.0, lnc);
}

double HistoryState::account_lnc(const std::string& account_id) const {
  auto it = accounts_.find(account_id);
  return it == accounts_.end() ? 0.0 : it->second.lnc;
}

double HistoryState::account_vic(const std::string& account_id) const {
  auto it = accounts_.find(account_id);
  return it == accounts_.end() ? 0.0 : it->second.vic;
}

HhFeatures HistoryState::extract_hh(const ChangeRecord& change) const {
  std::int64_t period = period_.period_of(change.submitted_at);
  HhFeatures hh;
  hh.author = hh_of(change.author.account_id, period);
  std::set<std::string> reviewers = qualifying_reviewers(change, false);
  if (reviewers.empty()) return hh;
  double mx = -std::numeric_limits<double>::infinity();
  double mn = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (const auto& r : reviewers) {
    double v = hh_of(r, period);
    mx = std::max(mx, v);
    mn = std::min(mn, v);
    sum += v;
  }
  hh.reviewer = mx;
  hh.min_reviewer = mn;
  hh.avg_reviewer = sum / static_cast<double>(reviewers.size());
  return hh;
}

double HistoryState::vh_score(const std::string& path) const {
  auto it = files_.find(path);
  if (it == files_.end()) return 0.0;
  return static_cast<double>(it->second.lnc_count - 3 * it->second.vic_count);
}

VhFeatures HistoryState::extract_vh(const ChangeRecord& change) const {
  VhFeatures vh;
  std::set<std::string> paths = change_paths(change);
  if (paths.empty()) return vh;

  double tmax = -std::numeric_limits<double>::infinity();
  double tmin = std::numeric_limits<double>::infinity();
  double tsum = 0.0;
  double smax = -std::numeric_limits<double>::infinity();
  double smin = std::numeric_limits<double>::infinity();
  double ssum = 0.0;

  for (const auto& path : paths) {
    double score = vh_score(path);
    tmax = std::max(tmax, score);
    tmin = std::min(tmin, score);
    tsum += score;

    // Spatial neighborhood: same-directory files plus same-stem files
    // elsewhere, all previously seen in history, excluding the file itself.
    std::set<std::string> neighbors;
    if (auto it = dir_index_.find(dir_of(path)); it != dir_index_.end())
      neighbors.insert(it->second.begin(), it->second.end());
    if (auto it = stem_index_.find(stem_of(path)); it != stem_index_.end())
      neighbors.insert(it->second.begin(), it->second.end());
    neighbors.erase(path);

    long long vic_neighbors = 0, lnc_neighbors = 0;
    for (const auto& n : neighbors) {
      auto fit = files_.find(n);
      if (fit == files_.end()) continue;
      if (fit->second.vic_count > 0) ++vic_neighbors;
      if (fit->second.lnc_count > 0) ++lnc_neighbors;
    }
    double raw = -2.0 * static_cast<double>(vic_neighbors) +
                 static_cast<double>(lnc_neighbors);
    double normalized = raw / std::max(1.0, static_cast<double>(lnc_neighbors));
    smax = std::max(smax, normalized);
    smin = std::min(smin, normalized);
    ssum += normalized;
  }

  double n = static_cast<double>(paths.size());
  vh.temporal_max = tmax;
  vh.temporal_min = tmin;
  vh.temporal_avg = tsum / n;
  vh.spatial_max = smax;
  vh.spatial_min = smin;
  vh.spatial_avg = ssum / n;
  return vh;
}

const HistoryState::PeriodFileStats* HistoryState::period_stats(
    std::int64_t period, const std::string& path) const {
  auto pit = period_volumes_.find(period);
  if (pit == period_volumes_.end()) return nullptr;
  auto fit = pit->second.find(path);
  if (fit == pit->second.end()) return nullptr;
  return &fit->second;
}

PtFeatures HistoryState::extract_pt(const ChangeRecord& change) const {
  PtFeatures pt;
  std::set<std::string> paths = change_paths(change);
  if (paths.empty()) return pt;

  std::int64_t current = period_.period_of(change.submitted_at);
  double dv = 0.0, dvfc = 0.0, dvic = 0.0;
  for (const auto& path : paths) {
    const PeriodFileStats* cur = period_stats(current, path);
    const PeriodFileStats* prev = period_stats(current - 1, path);
    auto delta = [&](auto member) {
      long long c = cur ? cur->*member : 0;
      long long p = prev ? prev->*member : 0;
      return static_cast<double>(c - p);
    };
    dv += delta(&PeriodFileStats::line_volume);
    dvfc += delta(&PeriodFileStats::vfc_count);
    dvic += delta(&PeriodFileStats::vic_count);
  }
  double n = static_cast<double>(paths.size());
  pt.change_volume = dv / n;
  pt.vfc_volume = dvfc / n;
  pt.vic_volume = dvic / n;
  return pt;
}

json HistoryState::to_checkpoint() const {
  json accounts = json::object();
  for (const auto& [id, s] : accounts_)
    accounts[id] = json{{"lnc", s.lnc}, {"vic", s.vic},
                        {"last_period", s.last_period}};
  json files = json::object();
  for (const auto& [path, fs] : files_)
    files[path] = json{{"lnc_count", fs.lnc_count}, {"vic_count", fs.vic_count}};
  json periods = json::object();
  for (const auto& [period, by_file] : period_volumes_) {
    json pf = json::object();
    for (const auto& [path, pv] : by_file)
      pf[path] = json{{"line_volume", pv.line_volume},
                      {"vfc_count", pv.vfc_count},
                      {"vic_count", pv.vic_count}};
    periods[std::to_string(period)] = std::move(pf);
  }
  return json{{"version", 1},
              {"period_scheme", period_.to_string()},
              {"decay_per_period", decay_},
              {"last_known_at", last_known_at_ ==
                                        std::numeric_limits<std::int64_t>::min()
                                    ? json(nullptr)
                                    : json(last_known_at_)},
              {"current_period", current_period_},
              {"recorded_count", recorded_},
              {"accounts", accounts},
              {"files", files},
              {"period_volumes", periods}};
}

HistoryState HistoryState::from_checkpoint(const json& j) {
  if (!j.is_object() || j.value("version", 0) != 1)
    throw std::runtime_error("unsupported history checkpoint version");
  HistoryState state(PeriodScheme::parse(j.at("period_scheme").get<std::string>()),
                     j.value("decay_per_period", 1.0));
  if (!j.at("last_known_at").is_null())
    state.last_known_at_ = j.at("last_known_at").get<std::int64_t>();
  state.current_period_ = j.at("current_period").get<std::int64_t>();
  state.recorded_ = j.at("recorded_count").get<std::size_t>();
  for (const auto& [id, s] : j.at("accounts").items())
    state.accounts_[id] = AccountScore{s.at("lnc").get<double>(),
                                       s.at("vic").get<double>(),
                                       s.at("last_period").get<std::int64_t>()};
  for (const auto& [path, fs] : j.at("files").items()) {
    state.files_[path] = FileStats{fs.at("lnc_count").get<long long>(),
                                   fs.at("vic_count").get<long long>()};
    state.index_file(path);
  }
  for (const auto& [period, by_file] : j.at("period_volumes").items()) {
    auto& dst = state.period_volumes_[std::stoll(period)];
    for (const auto& [path, pv] : by_file.items())
      dst[path] = PeriodFileStats{pv.at("line_volume").get<long long>(),
                                  pv.at("vfc_count").get<long long>(),
                                  pv.at("vic_count").get<long long>()};
  }
  return state;
}

void HistoryState::save(const std::string& path) const {
  write_file(path, to_checkpoint().dump(2) + "\n");
}

HistoryState HistoryState::load(const std::string& path) {
  return from_checkpoint(json::parse(read_file(path)));
}

}  // namespace vulnpred
