#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "step/path.hpp"
#include "step/types.hpp"

namespace step {

// 1 iff any path succeeded. Requires at least one path.
int success(std::span<const RecoursePath> paths);
// Fraction of successful paths. Requires at least one path.
double avg_success(std::span<const RecoursePath> paths);
// |x^0 - x^l|_2.
double l2_distance(const RecoursePath& path);
// Mean pairwise distance between terminals of the successful paths.
// Requires at least two successful paths.
double diversity(std::span<const RecoursePath> paths);
// Sum of hop lengths.
double path_length(const RecoursePath& path);
// Hop count, i.e. number of points minus one.
std::size_t path_steps(const RecoursePath& path);
// Sum of pairwise terminal distances over successful paths, divided by the
// largest PoI-to-terminal distance (0 when every terminal is the PoI).
// Requires at least two successful paths.
double proximal_diversity(const Vector& poi, std::span<const RecoursePath> paths);

inline constexpr std::array<std::string_view, 7> kMetricNames = {
    "success",     "avg_success", "l2_distance",       "diversity",
    "path_length", "path_steps",  "proximal_diversity"};

// Metric values for one PoI in one trial, indexed like kMetricNames. Distance
// and path metrics (averaged over successful paths) need one successful
// path, the diversity metrics two.
struct PoiMetrics {
  std::string id;
  int trial = 0;
  std::array<std::optional<double>, kMetricNames.size()> values;
};

// Empty `paths` counts as a failure (success 0, avg_success 0).
PoiMetrics evaluate_poi(std::string id, int trial, const Vector& poi,
                        std::span<const RecoursePath> paths);

struct MetricSummary {
  double mean = 0.0;
  double standard_error = 0.0;  // sample std / sqrt(count); 0 when count < 2
  std::size_t count = 0;
};

struct MetricsReport {
  std::vector<PoiMetrics> per_poi;
  std::array<MetricSummary, kMetricNames.size()> aggregate;
  int trials = 0;
  nlohmann::json config;  // echo of the run configuration, may be null
};

MetricsReport aggregate(std::vector<PoiMetrics> per_poi, int trials);

nlohmann::json report_to_json(const MetricsReport& report);
// Header plus one row of aggregate means followed by their standard errors.
std::string report_to_csv(const MetricsReport& report);

}  // namespace step
