#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vulnpred {

// FNV-1a, 64-bit. Used for schema hashes and manifest digests; stable across
// platforms and runs, unlike std::hash.
std::uint64_t fnv1a64(std::string_view data);

// splitmix64 generator. All randomness in the project flows through this so
// that artifacts are bit-identical regardless of standard library.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  // Unbiased integer in [0, bound). bound must be > 0.
  std::uint64_t next_below(std::uint64_t bound);
  // Uniform double in [0, 1).
  double next_double();
  // Standard normal via Box-Muller.
  double next_gaussian();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Decorrelated child seed for stream `index` of `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// ---- civil time (UTC) -----------------------------------------------------

struct CivilDate {
  int year;
  unsigned month;  // 1..12
  unsigned day;    // 1..31
};

std::int64_t days_from_civil(int year, unsigned month, unsigned day);
CivilDate civil_from_days(std::int64_t days);

// Day of week with 1 = Sunday .. 7 = Saturday, from Unix seconds UTC.
int weekday_sunday1(std::int64_t unix_seconds);
// Hour of day 0..23, UTC.
int hour_of_day(std::int64_t unix_seconds);

// ---- evaluation periods ---------------------------------------------------

// A period scheme maps timestamps to consecutive integer period ids.
// Monthly = calendar months UTC; fixed = windows of `seconds` since epoch.
struct PeriodScheme {
  enum class Kind { monthly, fixed };
  Kind kind = Kind::monthly;
  std::int64_t seconds = 0;  // only for Kind::fixed

  std::int64_t period_of(std::int64_t unix_seconds) const;
  std::int64_t period_start(std::int64_t period_id) const;
  std::string label(std::int64_t period_id) const;

  static PeriodScheme monthly() { return {}; }
  static PeriodScheme fixed(std::int64_t seconds) {
    return {Kind::fixed, seconds};
  }
  // "month" or "<N>d"/"<N>s".
  static PeriodScheme parse(std::string_view text);
  std::string to_string() const;
};

// ---- misc -----------------------------------------------------------------

std::int64_t floor_div(std::int64_t a, std::int64_t b);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

std::string lowercase(std::string_view s);
std::string_view trim(std::string_view s);

// Parses "14d", "36h", "15m", "30s" or a bare seconds count; "inf" maps to a
// huge delay. Throws std::invalid_argument on junk.
std::int64_t parse_duration_seconds(std::string_view text);

}  // namespace vulnpred
