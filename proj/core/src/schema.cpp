#include "step/schema.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace step {

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kContinuous: return "continuous";
    case FeatureKind::kOrdinal: return "ordinal";
    case FeatureKind::kCategorical: return "categorical";
  }
  return "unknown";
}

std::string_view to_string(Mutability mutability) {
  switch (mutability) {
    case Mutability::kFree: return "free";
    case Mutability::kImmutable: return "immutable";
    case Mutability::kIncreaseOnly: return "increase_only";
  }
  return "unknown";
}

namespace {

bool has_unique_entries(const std::vector<std::string>& values) {
  std::set<std::string> seen(values.begin(), values.end());
  return seen.size() == values.size();
}

std::size_t level_index(const FeatureSpec& spec, const std::string& value) {
  auto it = std::find(spec.levels.begin(), spec.levels.end(), value);
  if (it == spec.levels.end()) {
    throw UnknownCategoryError("feature '" + spec.name + "': unknown value '" + value + "'");
  }
  return static_cast<std::size_t>(it - spec.levels.begin());
}

}  // namespace

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> features, TargetSpec target,
                             bool has_scaling)
    : features_(std::move(features)), target_(std::move(target)), has_scaling_(has_scaling) {
  if (features_.empty()) throw SchemaError("schema declares no features");
  std::set<std::string> names;
  offsets_.reserve(features_.size());
  for (const auto& f : features_) {
    if (f.name.empty()) throw SchemaError("feature with empty name");
    if (!names.insert(f.name).second) throw SchemaError("duplicate feature name '" + f.name + "'");
    switch (f.kind) {
      case FeatureKind::kContinuous:
        if (!(f.scale_std > 0.0) || !std::isfinite(f.scale_std) || !std::isfinite(f.scale_mean)) {
          throw SchemaError("feature '" + f.name + "': scale_std must be positive and finite");
        }
        break;
      case FeatureKind::kOrdinal:
      case FeatureKind::kCategorical:
        if (f.levels.size() < 2) {
          throw SchemaError("feature '" + f.name + "': needs at least two levels");
        }
        if (!has_unique_entries(f.levels)) {
          throw SchemaError("feature '" + f.name + "': levels must be unique");
        }
        if (f.kind == FeatureKind::kCategorical && f.mutability == Mutability::kIncreaseOnly) {
          throw SchemaError("feature '" + f.name +
                            "': increase_only is undefined for unordered categories");
        }
        break;
    }
    offsets_.push_back(encoded_dim_);
    encoded_dim_ += f.width();
  }
  if (!target_.name.empty() && names.count(target_.name) != 0) {
    throw SchemaError("target '" + target_.name + "' is also declared as a feature");
  }
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].name == name) return i;
  }
  return std::nullopt;
}

FeatureSchema FeatureSchema::with_scaling(std::span<const RawRow> rows) const {
  if (rows.empty()) throw SchemaError("cannot fit scaling statistics on zero rows");
  std::vector<FeatureSpec> fitted = features_;
  for (std::size_t i = 0; i < fitted.size(); ++i) {
    auto& f = fitted[i];
    if (f.kind != FeatureKind::kContinuous) continue;
    double sum = 0.0;
    for (const auto& row : rows) sum += std::get<double>(row.at(i));
    const double mean = sum / static_cast<double>(rows.size());
    double sq = 0.0;
    for (const auto& row : rows) {
      const double dev = std::get<double>(row.at(i)) - mean;
      sq += dev * dev;
    }
    const double stddev = std::sqrt(sq / static_cast<double>(rows.size()));
    if (!(stddev > 0.0)) {
      throw SchemaError("feature '" + f.name + "' is constant; cannot scale");
    }
    f.scale_mean = mean;
    f.scale_std = stddev;
  }
  return FeatureSchema(std::move(fitted), target_, true);
}

RawValue FeatureSchema::parse_cell(std::size_t i, std::string_view text) const {
  const auto& f = features_.at(i);
  if (f.kind != FeatureKind::kContinuous) {
    std::string value(text);
    level_index(f, value);
    return value;
  }
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw SchemaError("feature '" + f.name + "': '" + std::string(text) + "' is not a number");
  }
  return value;
}

Vector FeatureSchema::encode(const RawRow& row) const {
  if (row.size() != features_.size()) {
    throw SchemaError("row has " + std::to_string(row.size()) + " values, schema has " +
                      std::to_string(features_.size()) + " features");
  }
  Vector point = Vector::Zero(static_cast<Eigen::Index>(encoded_dim_));
  for (std::size_t i = 0; i < features_.size(); ++i) {
    const auto& f = features_[i];
    const auto at = static_cast<Eigen::Index>(offsets_[i]);
    switch (f.kind) {
      case FeatureKind::kContinuous: {
        const double* value = std::get_if<double>(&row[i]);
        if (value == nullptr || !std::isfinite(*value)) {
          throw SchemaError("feature '" + f.name + "' expects a finite number");
        }
        point[at] = (*value - f.scale_mean) / f.scale_std;
        break;
      }
      case FeatureKind::kOrdinal:
      case FeatureKind::kCategorical: {
        const std::string* value = std::get_if<std::string>(&row[i]);
        if (value == nullptr) throw SchemaError("feature '" + f.name + "' expects a label");
        const std::size_t level = level_index(f, *value);
        if (f.kind == FeatureKind::kOrdinal) {
          point[at] = static_cast<double>(level + 1);
        } else {
          point[at + static_cast<Eigen::Index>(level)] = 1.0;
        }
        break;
      }
    }
  }
  return point;
}

RawRow FeatureSchema::decode(const Vector& point) const {
  if (static_cast<std::size_t>(point.size()) != encoded_dim_) {
    throw SchemaError("point has dimension " + std::to_string(point.size()) + ", expected " +
                      std::to_string(encoded_dim_));
  }
  RawRow row;
  row.reserve(features_.size());
  for (std::size_t i = 0; i < features_.size(); ++i) {
    const auto& f = features_[i];
    const auto at = static_cast<Eigen::Index>(offsets_[i]);
    switch (f.kind) {
      case FeatureKind::kContinuous:
        row.emplace_back(point[at] * f.scale_std + f.scale_mean);
        break;
      case FeatureKind::kOrdinal: {
        const double levels = static_cast<double>(f.levels.size());
        const double level = std::clamp(std::round(point[at]), 1.0, levels);
        row.emplace_back(f.levels[static_cast<std::size_t>(level) - 1]);
        break;
      }
      case FeatureKind::kCategorical: {
        Eigen::Index best = 0;
        point.segment(at, static_cast<Eigen::Index>(f.width())).maxCoeff(&best);
        row.emplace_back(f.levels[static_cast<std::size_t>(best)]);
        break;
      }
    }
  }
  return row;
}

bool FeatureSchema::is_valid(const Vector& point) const {
  if (static_cast<std::size_t>(point.size()) != encoded_dim_) return false;
  if (!point.allFinite()) return false;
  for (std::size_t i = 0; i < features_.size(); ++i) {
    const auto& f = features_[i];
    const auto at = static_cast<Eigen::Index>(offsets_[i]);
    if (f.kind == FeatureKind::kOrdinal) {
      const double v = point[at];
      if (v != std::round(v) || v < 1.0 || v > static_cast<double>(f.levels.size())) return false;
    } else if (f.kind == FeatureKind::kCategorical) {
      int ones = 0;
      for (std::size_t j = 0; j < f.width(); ++j) {
        const double v = point[at + static_cast<Eigen::Index>(j)];
        if (v == 1.0) {
          ++ones;
        } else if (v != 0.0) {
          return false;
        }
      }
      if (ones != 1) return false;
    }
  }
  return true;
}

std::vector<bool> FeatureSchema::continuous_mask() const {
  std::vector<bool> mask(encoded_dim_, false);
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].kind == FeatureKind::kContinuous) mask[offsets_[i]] = true;
  }
  return mask;
}

Vector project_constraints(const Vector& current, const Vector& proposed,
                           const FeatureSchema& schema) {
  if (current.size() != proposed.size() ||
      static_cast<std::size_t>(current.size()) != schema.encoded_dim()) {
    throw std::invalid_argument("project_constraints: dimension mismatch");
  }
  Vector out = proposed;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& f = schema.feature(i);
    const auto at = static_cast<Eigen::Index>(schema.offset(i));
    const auto width = static_cast<Eigen::Index>(f.width());
    if (f.mutability == Mutability::kImmutable) {
      out.segment(at, width) = current.segment(at, width);
      continue;
    }
    switch (f.kind) {
      case FeatureKind::kContinuous:
        if (f.mutability == Mutability::kIncreaseOnly) out[at] = std::max(out[at], current[at]);
        break;
      case FeatureKind::kOrdinal: {
        double v = out[at];
        if (f.mutability == Mutability::kIncreaseOnly) v = std::max(v, current[at]);
        out[at] = std::clamp(std::round(v), 1.0, static_cast<double>(f.levels.size()));
        break;
      }
      case FeatureKind::kCategorical: {
        Eigen::Index current_cat = 0;
        current.segment(at, width).maxCoeff(&current_cat);
        Eigen::Index best = current_cat;
        for (Eigen::Index j = 0; j < width; ++j) {
          if (out[at + j] > out[at + best]) best = j;
        }
        out.segment(at, width).setZero();
        out[at + best] = 1.0;
        break;
      }
    }
  }
  return out;
}

FeatureSchema schema_from_json(const nlohmann::json& doc) {
  try {
    std::vector<FeatureSpec> features;
    bool any_continuous = false;
    bool all_scaled = true;
    for (const auto& entry : doc.at("features")) {
      FeatureSpec spec;
      spec.name = entry.at("name").get<std::string>();
      const auto kind = entry.at("kind").get<std::string>();
      if (kind == "continuous") {
        spec.kind = FeatureKind::kContinuous;
        any_continuous = true;
        if (entry.contains("mean") && entry.contains("std")) {
          spec.scale_mean = entry.at("mean").get<double>();
          spec.scale_std = entry.at("std").get<double>();
        } else {
          all_scaled = false;
        }
      } else if (kind == "ordinal") {
        spec.kind = FeatureKind::kOrdinal;
        spec.levels = entry.at("levels").get<std::vector<std::string>>();
      } else if (kind == "categorical") {
        spec.kind = FeatureKind::kCategorical;
        spec.levels = entry.at("categories").get<std::vector<std::string>>();
      } else {
        throw SchemaError("feature '" + spec.name + "': unknown kind '" + kind + "'");
      }
      const auto mutability = entry.value("mutability", std::string("free"));
      if (mutability == "free") {
        spec.mutability = Mutability::kFree;
      } else if (mutability == "immutable") {
        spec.mutability = Mutability::kImmutable;
      } else if (mutability == "increase_only") {
        spec.mutability = Mutability::kIncreaseOnly;
      } else {
        throw SchemaError("feature '" + spec.name + "': unknown mutability '" + mutability + "'");
      }
      features.push_back(std::move(spec));
    }
    TargetSpec target;
    if (doc.contains("target")) {
      const auto& t = doc.at("target");
      target.name = t.at("name").get<std::string>();
      const auto& positive = t.at("positive_value");
      target.positive_value =
          positive.is_string() ? positive.get<std::string>() : positive.dump();
    }
    return FeatureSchema(std::move(features), std::move(target), !any_continuous || all_scaled);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed schema document: ") + e.what());
  }
}

nlohmann::json schema_to_json(const FeatureSchema& schema) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : schema.features()) {
    nlohmann::json entry = {{"name", f.name},
                            {"kind", std::string(to_string(f.kind))},
                            {"mutability", std::string(to_string(f.mutability))}};
    if (f.kind == FeatureKind::kOrdinal) entry["levels"] = f.levels;
    if (f.kind == FeatureKind::kCategorical) entry["categories"] = f.levels;
    if (f.kind == FeatureKind::kContinuous && schema.has_scaling()) {
      entry["mean"] = f.scale_mean;
      entry["std"] = f.scale_std;
    }
    features.push_back(std::move(entry));
  }
  nlohmann::json doc = {{"features", std::move(features)}};
  if (!schema.target().name.empty()) {
    doc["target"] = {{"name", schema.target().name},
                     {"positive_value", schema.target().positive_value}};
  }
  return doc;
}

FeatureSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schema file: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("schema file " + path.string() + " is not valid JSON: " + e.what());
  }
  return schema_from_json(doc);
}

}  // namespace step
