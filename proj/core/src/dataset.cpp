#include "step/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>

#include "step/random.hpp"

namespace step {

namespace {

// Splits one CSV record. Supports double-quoted fields with "" escapes;
// records may not span lines.
std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

bool is_missing(const std::string& cell) { return cell.empty() || cell == "?" || cell == "NA"; }

bool same_value(const std::string& cell, const std::string& expected) {
  if (cell == expected) return true;
  double a = 0.0;
  double b = 0.0;
  auto ra = std::from_chars(cell.data(), cell.data() + cell.size(), a);
  auto rb = std::from_chars(expected.data(), expected.data() + expected.size(), b);
  return ra.ec == std::errc() && rb.ec == std::errc() &&
         ra.ptr == cell.data() + cell.size() && rb.ptr == expected.data() + expected.size() &&
         a == b;
}

}  // namespace

RawTable read_table(const std::filesystem::path& csv_path, const FeatureSchema& schema) {
  std::ifstream in(csv_path);
  if (!in) throw ConfigError("cannot open dataset file: " + csv_path.string());

  std::string line;
  if (!std::getline(in, line)) throw SchemaError("dataset file is empty: " + csv_path.string());
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_record(line);
  for (auto& h : header) h = trim(h);

  std::vector<std::size_t> column_of(schema.size());
  for (std::size_t f = 0; f < schema.size(); ++f) {
    auto it = std::find(header.begin(), header.end(), schema.feature(f).name);
    if (it == header.end()) {
      throw SchemaError("dataset " + csv_path.string() + " has no column '" +
                        schema.feature(f).name + "'");
    }
    column_of[f] = static_cast<std::size_t>(it - header.begin());
  }
  std::optional<std::size_t> target_column;
  if (!schema.target().name.empty()) {
    auto it = std::find(header.begin(), header.end(), schema.target().name);
    if (it != header.end()) target_column = static_cast<std::size_t>(it - header.begin());
  }

  RawTable table;
  if (target_column) table.targets.emplace();
  std::size_t data_row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::size_t row_index = data_row++;
    std::vector<std::string> cells = split_record(line);
    if (cells.size() != header.size()) {
      throw SchemaError("dataset row " + std::to_string(row_index) + " has " +
                        std::to_string(cells.size()) + " cells, header has " +
                        std::to_string(header.size()));
    }
    for (auto& c : cells) c = trim(c);
    bool missing = false;
    for (std::size_t f = 0; f < schema.size() && !missing; ++f) {
      missing = is_missing(cells[column_of[f]]);
    }
    if (target_column && is_missing(cells[*target_column])) missing = true;
    if (missing) {
      ++table.dropped_rows;
      continue;
    }
    RawRow row;
    row.reserve(schema.size());
    for (std::size_t f = 0; f < schema.size(); ++f) {
      try {
        row.push_back(schema.parse_cell(f, cells[column_of[f]]));
      } catch (const UnknownCategoryError& e) {
        throw UnknownCategoryError("dataset row " + std::to_string(row_index) + ": " + e.what());
      } catch (const SchemaError& e) {
        throw SchemaError("dataset row " + std::to_string(row_index) + ": " + e.what());
      }
    }
    table.rows.push_back(std::move(row));
    table.ids.push_back(std::to_string(row_index));
    if (target_column) {
      table.targets->push_back(
          same_value(cells[*target_column], schema.target().positive_value) ? 1 : 0);
    }
  }
  if (table.rows.empty()) {
    throw SchemaError("dataset " + csv_path.string() + " has no complete rows");
  }
  return table;
}

RawTable subset(const RawTable& table, std::span<const std::size_t> indices) {
  RawTable out;
  out.dropped_rows = table.dropped_rows;
  if (table.targets) out.targets.emplace();
  out.rows.reserve(indices.size());
  out.ids.reserve(indices.size());
  for (std::size_t i : indices) {
    out.rows.push_back(table.rows.at(i));
    out.ids.push_back(table.ids.at(i));
    if (table.targets) out.targets->push_back(table.targets->at(i));
  }
  return out;
}

Matrix encode_rows(const FeatureSchema& schema, std::span<const RawRow> rows) {
  Matrix points(static_cast<Eigen::Index>(rows.size()),
                static_cast<Eigen::Index>(schema.encoded_dim()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    points.row(static_cast<Eigen::Index>(r)) = schema.encode(rows[r]).transpose();
  }
  return points;
}

std::vector<std::size_t> RecourseDataset::positive_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == Label::kPositive) out.push_back(i);
  }
  return out;
}

RecourseDataset make_dataset(FeatureSchema schema, Matrix points, std::vector<std::string> ids,
                             const Model& model, double threshold) {
  if (static_cast<std::size_t>(points.cols()) != schema.encoded_dim()) {
    throw SchemaError("points have " + std::to_string(points.cols()) +
                      " columns, schema encodes " + std::to_string(schema.encoded_dim()));
  }
  if (ids.size() != static_cast<std::size_t>(points.rows())) {
    throw std::invalid_argument("make_dataset: id count does not match row count");
  }
  if (points.rows() == 0) throw SchemaError("dataset is empty");
  RecourseDataset ds;
  ds.labels = classify_batch(model, points, threshold);
  ds.schema = std::move(schema);
  ds.points = std::move(points);
  ds.raw_ids = std::move(ids);
  ds.cluster_of.assign(ds.labels.size(), std::nullopt);
  ds.threshold = threshold;
  return ds;
}

RecourseDataset load_dataset(const std::filesystem::path& csv_path,
                             const std::filesystem::path& schema_path, const Model& model,
                             double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("load_dataset: threshold must lie in (0, 1)");
  }
  FeatureSchema schema = load_schema(schema_path);
  RawTable table = read_table(csv_path, schema);
  if (!schema.has_scaling()) schema = schema.with_scaling(table.rows);
  Matrix points = encode_rows(schema, table.rows);
  return make_dataset(std::move(schema), std::move(points), std::move(table.ids), model,
                      threshold);
}

SplitIndices split_indices(std::size_t n, std::uint64_t seed, double train_fraction,
                           double validation_fraction) {
  if (train_fraction <= 0.0 || validation_fraction < 0.0 ||
      train_fraction + validation_fraction >= 1.0) {
    throw std::invalid_argument("split_indices: fractions must leave a non-empty test share");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(mix_seed(seed));
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
  const auto n_val =
      static_cast<std::size_t>(std::floor(validation_fraction * static_cast<double>(n)));
  SplitIndices split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                          order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return split;
}

}  // namespace step
