#include "vulnpred/featurize.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

#include "vulnpred/util.hpp"

namespace vulnpred {

std::uint64_t FeatureSchema::hash() const {
  std::string repr;
  for (const auto& f : fields) {
    repr += f.name;
    repr += f.kind == FeatureField::Kind::boolean ? ":b;" : ":n;";
  }
  return fnv1a64(repr);
}

std::size_t FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < fields.size(); ++i)
    if (fields[i].name == name) return i;
  throw std::invalid_argument("unknown feature: " + std::string(name));
}

namespace {

using Kind = FeatureField::Kind;

const std::map<std::string, std::vector<std::string>, std::less<>>&
family_table() {
  static const std::map<std::string, std::vector<std::string>, std::less<>>
      table = {
          {"HP", {"HP_author", "HP_reviewer"}},
          {"CC", {"CC_add", "CC_del"}},
          {"PC",
           {"PC_count", "PC_revision", "PC_relative_revision",
            "PC_avg_patchset", "PC_max_patchset", "PC_min_patchset"}},
          {"RP", {"RP_time", "RP_weekday", "RP_hour", "RP_plus2_self"}},
          {"HH",
           {"HH_author", "HH_reviewer", "HH_min_reviewer", "HH_avg_reviewer"}},
          {"VH",
           {"VH_temporal_max", "VH_temporal_min", "VH_temporal_avg",
            "VH_spatial_max", "VH_spatial_min", "VH_spatial_avg"}},
          {"PT", {"PT_change_volume", "PT_VFC_volume", "PT_ViC_volume"}},
          {"TM",
           {"TM_arithmetic", "TM_comparison", "TM_conditional", "TM_loop",
            "TM_assignment", "TM_logical", "TM_memory_access"}},
      };
  return table;
}

}  // namespace

const std::vector<std::string>& feature_family_names() {
  static const std::vector<std::string> names = {"HP", "CC", "PC", "RP",
                                                 "HH", "VH", "PT", "TM"};
  return names;
}

const std::vector<std::string>& family_features(std::string_view family) {
  auto it = family_table().find(family);
  if (it == family_table().end())
    throw std::invalid_argument("unknown feature family: " +
                                std::string(family));
  return it->second;
}

const FeatureSchema& full_schema() {
  static const FeatureSchema schema = [] {
    FeatureSchema s;
    for (const auto& family : feature_family_names())
      for (const auto& name : family_features(family))
        s.fields.push_back(
            {name, name == "RP_plus2_self" ? Kind::boolean : Kind::numeric});
    return s;
  }();
  return schema;
}

std::vector<double> extract_feature_vector(const ChangeRecord& change,
                                           const HistoryState& state,
                                           const FeatureConfig& config) {
  HpFeatures hp = extract_hp(change, config.ranks);
  CcFeatures cc = extract_cc(change);
  PcFeatures pc = extract_pc(change);
  RpFeatures rp = extract_rp(change);
  HhFeatures hh = state.extract_hh(change);
  VhFeatures vh = state.extract_vh(change);
  PtFeatures pt = state.extract_pt(change);
  TmFeatures tm = extract_tm(change);

  return {
      static_cast<double>(hp.author),
      static_cast<double>(hp.reviewer),
      static_cast<double>(cc.add),
      static_cast<double>(cc.del),
      static_cast<double>(pc.count),
      static_cast<double>(pc.revision),
      pc.relative_revision,
      pc.avg_patchset,
      static_cast<double>(pc.max_patchset),
      static_cast<double>(pc.min_patchset),
      static_cast<double>(rp.time_seconds),
      static_cast<double>(rp.weekday),
      static_cast<double>(rp.hour),
      rp.plus2_self ? 1.0 : 0.0,
      hh.author,
      hh.reviewer,
      hh.min_reviewer,
      hh.avg_reviewer,
      vh.temporal_max,
      vh.temporal_min,
      vh.temporal_avg,
      vh.spatial_max,
      vh.spatial_min,
      vh.spatial_avg,
      pt.change_volume,
      pt.vfc_volume,
      pt.vic_volume,
      tm.arithmetic,
      tm.comparison,
      tm.conditional,
      tm.loop,
      tm.assignment,
      tm.logical,
      tm.memory_access,
  };
}

FeatureSchema FeatureSubset::project_schema() const {
  FeatureSchema s;
  for (std::size_t i : indices) s.fields.push_back(full_schema().fields[i]);
  return s;
}

std::vector<double> FeatureSubset::project(std::span<const double> full) const {
  std::vector<double> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(full[i]);
  return out;
}

FeatureSubset resolve_subset(std::string_view expression) {
  FeatureSubset subset;
  subset.expression = std::string(trim(expression));
  std::set<std::size_t> picked;

  auto add_term = [&](std::string_view term) {
    term = trim(term);
    if (term.empty()) throw std::invalid_argument("empty feature subset term");
    if (term == "all" || term == "All" || term == "ALL") {
      for (std::size_t i = 0; i < full_schema().size(); ++i) picked.insert(i);
      return;
    }
    auto fam = family_table().find(term);
    if (fam != family_table().end()) {
      for (const auto& name : fam->second)
        picked.insert(full_schema().index_of(name));
      return;
    }
    picked.insert(full_schema().index_of(term));
  };

  std::string_view rest = subset.expression;
  while (true) {
    std::size_t plus = rest.find('+');
    if (plus == std::string_view::npos) {
      add_term(rest);
      break;
    }
    add_term(rest.substr(0, plus));
    rest = rest.substr(plus + 1);
  }
  if (picked.empty()) throw std::invalid_argument("empty feature subset");
  subset.indices.assign(picked.begin(), picked.end());
  return subset;
}

}  // namespace vulnpred
