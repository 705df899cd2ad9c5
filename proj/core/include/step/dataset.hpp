#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "step/model.hpp"
#include "step/schema.hpp"
#include "step/types.hpp"

namespace step {

// Parsed CSV restricted to the schema's columns.
struct RawTable {
  std::vector<std::string> ids;  // data-row index in the source file
  std::vector<RawRow> rows;
  // 0/1 per row, present only if the CSV carries the schema's target column.
  std::optional<std::vector<int>> targets;
  std::size_t dropped_rows = 0;  // rows discarded for missing values
};

// Reads a comma-separated file with a header row. Rows with an empty, "?" or
// "NA" cell in a schema column are dropped and counted. Throws ConfigError if
// the file cannot be opened, SchemaError on a header mismatch or an
// unparsable cell, UnknownCategoryError on an undeclared category.
RawTable read_table(const std::filesystem::path& csv_path, const FeatureSchema& schema);

// Rows of `table` selected by `indices`, in index order.
RawTable subset(const RawTable& table, std::span<const std::size_t> indices);

Matrix encode_rows(const FeatureSchema& schema, std::span<const RawRow> rows);

struct RecourseDataset {
  FeatureSchema schema;
  Matrix points;  // n x m, scaled and encoded
  std::vector<std::string> raw_ids;
  std::vector<Label> labels;  // model classification at the dataset threshold
  std::vector<std::optional<int>> cluster_of;  // set iff label is positive
  double threshold = kDefaultThreshold;

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(points.cols()); }
  Vector point(std::size_t i) const { return points.row(static_cast<Eigen::Index>(i)).transpose(); }
  std::vector<std::size_t> positive_indices() const;
};

// Labels every row with `model` at `threshold`; clusters are left unset.
RecourseDataset make_dataset(FeatureSchema schema, Matrix points, std::vector<std::string> ids,
                             const Model& model, double threshold);

// Reads, scales and labels a CSV. If the schema document carries no scaling
// statistics they are fitted on the loaded rows. Throws SchemaError if no
// rows survive.
RecourseDataset load_dataset(const std::filesystem::path& csv_path,
                             const std::filesystem::path& schema_path, const Model& model,
                             double threshold);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

// Seeded shuffle followed by a train/validation/test cut.
SplitIndices split_indices(std::size_t n, std::uint64_t seed, double train_fraction = 0.70,
                           double validation_fraction = 0.15);

}  // namespace step
