#include "vulnpred/util.hpp"

#include <cctype>
#include <cmath>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace vulnpred {

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t SplitMix64::next_below(std::uint64_t bound) {
  // Lemire's nearly-divisionless method with rejection: unbiased.
  std::uint64_t x = next();
  __uint128_t m = static_cast<__uint128_t>(x) * bound;
  std::uint64_t l = static_cast<std::uint64_t>(m);
  if (l < bound) {
    std::uint64_t t = -bound % bound;
    while (l < t) {
      x = next();
      m = static_cast<__uint128_t>(x) * bound;
      l = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double SplitMix64::next_double() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double SplitMix64::next_gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * next_double() - 1.0;
    v = 2.0 * next_double() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * factor;
  have_spare_ = true;
  return u * factor;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  SplitMix64 g(seed ^ (0xd1b54a32d192ed03ULL * (index + 1)));
  return g.next();
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// Howard Hinnant's civil-date algorithms.
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = floor_div(y, 400);
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = floor_div(z, 146097);
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return {static_cast<int>(y + (m <= 2)), m, d};
}

int weekday_sunday1(std::int64_t unix_seconds) {
  std::int64_t days = floor_div(unix_seconds, 86400);
  // 1970-01-01 was a Thursday; Sunday-based index of Thursday is 4.
  std::int64_t dow = (days + 4) % 7;
  if (dow < 0) dow += 7;
  return static_cast<int>(dow) + 1;
}

int hour_of_day(std::int64_t unix_seconds) {
  std::int64_t sec = unix_seconds - floor_div(unix_seconds, 86400) * 86400;
  return static_cast<int>(sec / 3600);
}

std::int64_t PeriodScheme::period_of(std::int64_t unix_seconds) const {
  if (kind == Kind::fixed) return floor_div(unix_seconds, seconds);
  CivilDate c = civil_from_days(floor_div(unix_seconds, 86400));
  return static_cast<std::int64_t>(c.year - 1970) * 12 + (c.month - 1);
}

std::int64_t PeriodScheme::period_start(std::int64_t period_id) const {
  if (kind == Kind::fixed) return period_id * seconds;
  std::int64_t y = 1970 + floor_div(period_id, 12);
  std::int64_t m = period_id - floor_div(period_id, 12) * 12;  // 0..11
  return days_from_civil(static_cast<int>(y), static_cast<unsigned>(m + 1), 1) *
         86400;
}

std::string PeriodScheme::label(std::int64_t period_id) const {
  if (kind == Kind::fixed) return "p" + std::to_string(period_id);
  std::int64_t y = 1970 + floor_div(period_id, 12);
  std::int64_t m = period_id - floor_div(period_id, 12) * 12 + 1;
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%04lld-%02lld", static_cast<long long>(y),
                static_cast<long long>(m));
  return buf;
}

PeriodScheme PeriodScheme::parse(std::string_view text) {
  if (text == "month" || text == "monthly") return monthly();
  return fixed(parse_duration_seconds(text));
}

std::string PeriodScheme::to_string() const {
  if (kind == Kind::monthly) return "month";
  return std::to_string(seconds) + "s";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

std::int64_t parse_duration_seconds(std::string_view text) {
  std::string_view t = trim(text);
  if (t.empty()) throw std::invalid_argument("empty duration");
  if (t == "inf" || t == "infinite")
    return std::numeric_limits<std::int64_t>::max() / 4;
  std::int64_t mult = 1;
  char suffix = t.back();
  if (suffix == 'd' || suffix == 'h' || suffix == 'm' || suffix == 's') {
    switch (suffix) {
      case 'd': mult = 86400; break;
      case 'h': mult = 3600; break;
      case 'm': mult = 60; break;
      case 's': mult = 1; break;
    }
    t.remove_suffix(1);
  }
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size())
    throw std::invalid_argument("bad duration: " + std::string(text));
  return value * mult;
}

}  // namespace vulnpred
