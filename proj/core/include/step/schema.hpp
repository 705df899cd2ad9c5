#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "step/types.hpp"

namespace step {

enum class FeatureKind { kContinuous, kOrdinal, kCategorical };
enum class Mutability { kFree, kImmutable, kIncreaseOnly };

std::string_view to_string(FeatureKind kind);
std::string_view to_string(Mutability mutability);

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kContinuous;
  // Ordinal levels in ascending order, or the categories of a one-hot
  // feature. Empty for continuous features.
  std::vector<std::string> levels;
  Mutability mutability = Mutability::kFree;
  // Only meaningful for continuous features.
  double scale_mean = 0.0;
  double scale_std = 1.0;

  // Number of encoded dimensions this feature occupies.
  std::size_t width() const {
    return kind == FeatureKind::kCategorical ? levels.size() : 1;
  }
};

struct TargetSpec {
  std::string name;
  std::string positive_value;
};

// A raw (unencoded) value: a number for continuous features, a level or
// category label otherwise.
using RawValue = std::variant<double, std::string>;
// One raw value per feature, in schema order.
using RawRow = std::vector<RawValue>;

class FeatureSchema {
 public:
  FeatureSchema() = default;
  // Throws SchemaError if the feature list violates the schema invariants.
  explicit FeatureSchema(std::vector<FeatureSpec> features, TargetSpec target = {},
                         bool has_scaling = false);

  const std::vector<FeatureSpec>& features() const { return features_; }
  const FeatureSpec& feature(std::size_t i) const { return features_.at(i); }
  std::size_t size() const { return features_.size(); }
  std::size_t encoded_dim() const { return encoded_dim_; }
  // First encoded dimension of feature i.
  std::size_t offset(std::size_t i) const { return offsets_.at(i); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  const TargetSpec& target() const { return target_; }

  // True once scaling statistics have been fitted or loaded.
  bool has_scaling() const { return has_scaling_; }

  // Fits z-score statistics (population standard deviation) of every
  // continuous feature on `rows`. Throws SchemaError on a constant column.
  FeatureSchema with_scaling(std::span<const RawRow> rows) const;

  // Throws SchemaError (or UnknownCategoryError) if the row does not fit.
  Vector encode(const RawRow& row) const;
  RawRow decode(const Vector& point) const;

  // Parses a raw cell of feature i.
  RawValue parse_cell(std::size_t i, std::string_view text) const;

  // One-hot blocks are exact indicators, ordinal entries are integer levels
  // in range, every entry finite.
  bool is_valid(const Vector& point) const;

  // Per encoded dimension: true iff it belongs to a continuous feature.
  std::vector<bool> continuous_mask() const;

 private:
  std::vector<FeatureSpec> features_;
  std::vector<std::size_t> offsets_;
  std::size_t encoded_dim_ = 0;
  TargetSpec target_;
  bool has_scaling_ = false;
};

FeatureSchema schema_from_json(const nlohmann::json& doc);
nlohmann::json schema_to_json(const FeatureSchema& schema);
// Throws ConfigError if the file is missing or unreadable.
FeatureSchema load_schema(const std::filesystem::path& path);

// Makes `proposed` actionable relative to `current`: immutable dimensions
// are restored, increase-only dimensions clamped from below, ordinal
// dimensions rounded to an in-range level and each one-hot block snapped to
// its largest coordinate (ties keep the current category).
Vector project_constraints(const Vector& current, const Vector& proposed,
                           const FeatureSchema& schema);

}  // namespace step
