#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vulnpred/change_model.hpp"
#include "vulnpred/features_history.hpp"
#include "vulnpred/features_static.hpp"
#include "vulnpred/text_mining.hpp"

namespace vulnpred {

struct FeatureField {
  std::string name;
  enum class Kind { numeric, boolean } kind = Kind::numeric;
};

struct FeatureSchema {
  std::vector<FeatureField> fields;

  std::uint64_t hash() const;
  std::size_t index_of(std::string_view name) const;  // throws on unknown
  std::size_t size() const { return fields.size(); }
};

// The 34 features of the eight families, fixed order:
// HP, CC, PC, RP, HH, VH, PT, TM.
const FeatureSchema& full_schema();
const std::vector<std::string>& feature_family_names();
// Feature names of one family ("VH" -> 6 names); throws on unknown family.
const std::vector<std::string>& family_features(std::string_view family);

struct FeatureConfig {
  DomainRankTable ranks = DomainRankTable::aosp_default();
};

// All families extracted against `state` as of the change's own
// submitted_at. Pure given (change, state, config).
std::vector<double> extract_feature_vector(const ChangeRecord& change,
                                           const HistoryState& state,
                                           const FeatureConfig& config);

// Subset expression: '+'-joined family names and/or individual feature
// names, or "all". Resolves to ascending full-schema indices.
struct FeatureSubset {
  std::string expression;
  std::vector<std::size_t> indices;

  FeatureSchema project_schema() const;
  std::vector<double> project(std::span<const double> full) const;
};

FeatureSubset resolve_subset(std::string_view expression);

}  // namespace vulnpred
