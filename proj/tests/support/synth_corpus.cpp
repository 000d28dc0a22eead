#include "synth_corpus.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

#include "vulnpred/util.hpp"

namespace vulnpred::testing {

namespace {

// 2015-08-01T00:00:00Z, the first month of the corpus.
const std::int64_t kEpoch = days_from_civil(2015, 8, 1) * 86400;

std::int64_t month_start(int month) {
  CivilDate c = civil_from_days(kEpoch / 86400);
  int total = (c.year * 12 + static_cast<int>(c.month) - 1) + month;
  return days_from_civil(total / 12, static_cast<unsigned>(total % 12) + 1, 1) *
         86400;
}

struct RowSpec {
  int month = 0;
  LabelKind kind = LabelKind::LNC;
  std::string path;
};

struct Maker {
  SplitMix64 rng;
  std::vector<std::string> authors;
  std::vector<std::string> domains;
  long long next_id = 0;

  explicit Maker(std::uint64_t seed) : rng(seed) {
    for (int i = 0; i < 40; ++i) authors.push_back("dev" + std::to_string(i));
    domains = {"google.com", "google.com", "google.com",  "google.com",
               "google.com", "google.com", "android.com", "android.com",
               "qualcomm.com", "gmail.com"};
  }

  LabeledChange make(const RowSpec& spec) {
    std::int64_t start = month_start(spec.month);
    std::int64_t end = month_start(spec.month + 1);
    std::int64_t submitted =
        start + static_cast<std::int64_t>(
                    rng.next_below(static_cast<std::uint64_t>(end - start)));
    std::int64_t review_time =
        3600 + static_cast<std::int64_t>(rng.next_below(5 * 86400));

    ChangeRecord change;
    change.change_id =
        "syn-" + std::to_string(spec.month) + "-" + std::to_string(next_id++);
    change.project = "synthetic/media";
    change.author.account_id =
        authors[static_cast<std::size_t>(rng.next_below(authors.size()))];
    change.author.email_domain =
        domains[static_cast<std::size_t>(rng.next_below(domains.size()))];
    change.created_at = submitted - review_time;
    change.submitted_at = submitted;

    int reviewers = 1 + static_cast<int>(rng.next_below(2));
    for (int r = 0; r < reviewers; ++r) {
      ReviewEvent ev;
      ev.reviewer.account_id =
          authors[static_cast<std::size_t>(rng.next_below(authors.size()))];
      ev.reviewer.email_domain =
          domains[static_cast<std::size_t>(rng.next_below(domains.size()))];
      ev.score = rng.next_double() < 0.7 ? 2 : 1;
      ev.timestamp = change.created_at + 1800;
      change.reviews.push_back(std::move(ev));
    }

    // Mild planted size signal: ViCs sit in a medium band, normals are
    // bimodal small/wide.
    int added, deleted;
    if (spec.kind == LabelKind::ViC) {
      added = 60 + static_cast<int>(rng.next_below(161));   // 60..220
      deleted = 10 + static_cast<int>(rng.next_below(51));  // 10..60
    } else if (rng.next_double() < 0.65) {
      added = 1 + static_cast<int>(rng.next_below(80));
      deleted = static_cast<int>(rng.next_below(30));
    } else {
      added = 40 + static_cast<int>(rng.next_below(361));  // 40..400
      deleted = static_cast<int>(rng.next_below(120));
    }

    FileEdit fe;
    fe.path = spec.path;
    fe.lines_added = added;
    fe.lines_deleted = deleted;
    for (int i = 1; i <= added; ++i) fe.added_line_numbers.push_back(i);
    for (int i = 1; i <= deleted; ++i) fe.deleted_line_numbers.push_back(i);
    change.final_edits.push_back(fe);

    PatchSet ps1;
    ps1.index = 1;
    ps1.uploaded_at = change.created_at;
    ps1.file_edits.push_back(fe);
    change.patch_sets.push_back(std::move(ps1));
    if (rng.next_double() < 0.5) {
      // A net-zero revision keeps patch-set composition conserved.
      int churn = 1 + static_cast<int>(rng.next_below(30));
      FileEdit rev;
      rev.path = spec.path;
      rev.lines_added = churn;
      rev.lines_deleted = churn;
      for (int i = 1; i <= churn; ++i) {
        rev.added_line_numbers.push_back(i);
        rev.deleted_line_numbers.push_back(i);
      }
      PatchSet ps2;
      ps2.index = 2;
      ps2.uploaded_at = change.created_at + 3600;
      ps2.file_edits.push_back(std::move(rev));
      change.patch_sets.push_back(std::move(ps2));
    }

    LabeledChange lc;
    lc.change = std::move(change);
    lc.label.kind = spec.kind;
    lc.label.known_at = submitted;
    if (spec.kind == LabelKind::LNC) {
      lc.label.source = LabelSource::assumed;
    } else {
      lc.label.source = LabelSource::lineage;
      lc.label.provenance =
          LabelProvenance{"CVE-SYN-" + spec.path, "vfc-" + spec.path};
    }
    return lc;
  }
};

}  // namespace

std::vector<LabeledChange> generate_synthetic_corpus(const SynthConfig& config) {
  std::vector<RowSpec> specs;
  SplitMix64 plan_rng(derive_seed(config.seed, 99));

  if (config.months < config.burst_months + config.post_burst_months + 3)
    throw std::logic_error("synthetic corpus needs room for burst + tail");

  int planned_positives = 0;
  for (int f = 0; f < config.hot_files; ++f) {
    std::string path = "src/hot" + std::to_string(f) + "/hot" +
                       std::to_string(f) + ".cpp";
    // Bursts stagger over the corpus, leaving room for the full LNC tail.
    int latest_start =
        config.months - config.burst_months - config.post_burst_months;
    int start = 2 + (f * (latest_start - 2)) / std::max(1, config.hot_files - 1);
    for (int m = 0; m < config.burst_months; ++m) {
      int month = start + m;
      for (int v = 0; v < config.vics_per_burst_month; ++v) {
        specs.push_back({month, LabelKind::ViC, path});
        ++planned_positives;
      }
      for (int l = 0; l < config.burst_lncs_per_month; ++l)
        specs.push_back({month, LabelKind::LNC, path});
      specs.push_back({month, LabelKind::VfC, path});
    }
    for (int m = 0; m < config.post_burst_months; ++m) {
      int month = start + config.burst_months + m;
      for (int l = 0; l < config.post_burst_lncs_per_month; ++l)
        specs.push_back({month, LabelKind::LNC, path});
    }
  }

  // Top up the positive count with extra ViCs in random mid-burst months.
  while (planned_positives < config.positives) {
    int f = static_cast<int>(plan_rng.next_below(
        static_cast<std::uint64_t>(config.hot_files)));
    std::string path = "src/hot" + std::to_string(f) + "/hot" +
                       std::to_string(f) + ".cpp";
    int latest_start =
        config.months - config.burst_months - config.post_burst_months;
    int start = 2 + (f * (latest_start - 2)) / std::max(1, config.hot_files - 1);
    int month = start + 1 +
                static_cast<int>(plan_rng.next_below(
                    static_cast<std::uint64_t>(config.burst_months - 2)));
    specs.push_back({month, LabelKind::ViC, path});
    ++planned_positives;
  }
  if (planned_positives != config.positives)
    throw std::logic_error("synthetic corpus positive count drifted");

  int cold_rows = config.total_rows - static_cast<int>(specs.size());
  if (cold_rows < 0)
    throw std::logic_error("synthetic corpus config exceeds total_rows");
  for (int i = 0; i < cold_rows; ++i) {
    int month = i % config.months;
    int file = static_cast<int>(plan_rng.next_below(
        static_cast<std::uint64_t>(config.cold_files)));
    specs.push_back({month, LabelKind::LNC,
                     "src/mod" + std::to_string(file) + "/cold" +
                         std::to_string(file) + ".cpp"});
  }

  Maker maker(derive_seed(config.seed, 7));
  std::vector<LabeledChange> corpus;
  corpus.reserve(specs.size());
  for (const auto& spec : specs) corpus.push_back(maker.make(spec));
  std::sort(corpus.begin(), corpus.end(),
            [](const LabeledChange& a, const LabeledChange& b) {
              if (a.change.submitted_at != b.change.submitted_at)
                return a.change.submitted_at < b.change.submitted_at;
              return a.change.change_id < b.change.change_id;
            });
  return corpus;
}

std::vector<LabeledChange> generate_cc_signal_corpus(std::uint64_t seed,
                                                     int rows, int positives) {
  Maker maker(seed);
  SplitMix64 rng(derive_seed(seed, 4));
  std::vector<LabeledChange> corpus;
  for (int i = 0; i < rows; ++i) {
    RowSpec spec;
    spec.month = static_cast<int>(rng.next_below(12));
    spec.kind = i < positives ? LabelKind::ViC : LabelKind::LNC;
    spec.path = "src/p" + std::to_string(rng.next_below(20)) + ".cpp";
    LabeledChange lc = maker.make(spec);
    // Sharpen: the only reliable signal is CC_add (ViC band 400..500).
    if (spec.kind == LabelKind::ViC) {
      int added = 400 + static_cast<int>(rng.next_below(100));
      lc.change.final_edits[0].lines_added = added;
      lc.change.final_edits[0].added_line_numbers.clear();
      for (int k = 1; k <= added; ++k)
        lc.change.final_edits[0].added_line_numbers.push_back(k);
      lc.change.patch_sets[0].file_edits = lc.change.final_edits;
      if (lc.change.patch_sets.size() > 1) lc.change.patch_sets.resize(1);
    }
    corpus.push_back(std::move(lc));
  }
  std::sort(corpus.begin(), corpus.end(),
            [](const LabeledChange& a, const LabeledChange& b) {
              if (a.change.submitted_at != b.change.submitted_at)
                return a.change.submitted_at < b.change.submitted_at;
              return a.change.change_id < b.change.change_id;
            });
  return corpus;
}

}  // namespace vulnpred::testing
