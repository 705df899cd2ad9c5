#include "step/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace step {

namespace {

std::vector<const RecoursePath*> successful(std::span<const RecoursePath> paths) {
  std::vector<const RecoursePath*> out;
  for (const auto& p : paths) {
    if (p.success && !p.points.empty()) out.push_back(&p);
  }
  return out;
}

double pair_distance_sum(const std::vector<const RecoursePath*>& ok) {
  double sum = 0.0;
  for (std::size_t i = 0; i < ok.size(); ++i) {
    for (std::size_t j = i + 1; j < ok.size(); ++j) {
      sum += (ok[i]->points.back() - ok[j]->points.back()).norm();
    }
  }
  return sum;
}

void require_nonempty(const RecoursePath& path, const char* what) {
  if (path.points.empty()) throw std::invalid_argument(std::string(what) + ": empty path");
}

std::string format_number(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

}  // namespace

int success(std::span<const RecoursePath> paths) {
  if (paths.empty()) throw std::invalid_argument("success: no paths");
  return std::any_of(paths.begin(), paths.end(), [](const auto& p) { return p.success; }) ? 1 : 0;
}

double avg_success(std::span<const RecoursePath> paths) {
  if (paths.empty()) throw std::invalid_argument("avg_success: no paths");
  const auto n = std::count_if(paths.begin(), paths.end(), [](const auto& p) { return p.success; });
  return static_cast<double>(n) / static_cast<double>(paths.size());
}

double l2_distance(const RecoursePath& path) {
  require_nonempty(path, "l2_distance");
  return (path.points.front() - path.points.back()).norm();
}

double diversity(std::span<const RecoursePath> paths) {
  const auto ok = successful(paths);
  if (ok.size() < 2) throw std::invalid_argument("diversity: needs two successful paths");
  const double pairs = static_cast<double>(ok.size() * (ok.size() - 1) / 2);
  return pair_distance_sum(ok) / pairs;
}

double path_length(const RecoursePath& path) {
  require_nonempty(path, "path_length");
  double total = 0.0;
  for (std::size_t i = 1; i < path.points.size(); ++i) {
    total += (path.points[i] - path.points[i - 1]).norm();
  }
  return total;
}

std::size_t path_steps(const RecoursePath& path) { return path.steps_taken(); }

double proximal_diversity(const Vector& poi, std::span<const RecoursePath> paths) {
  const auto ok = successful(paths);
  if (ok.size() < 2) {
    throw std::invalid_argument("proximal_diversity: needs two successful paths");
  }
  double furthest = 0.0;
  for (const auto* p : ok) furthest = std::max(furthest, (poi - p->points.back()).norm());
  if (furthest == 0.0) return 0.0;
  return pair_distance_sum(ok) / furthest;
}

PoiMetrics evaluate_poi(std::string id, int trial, const Vector& poi,
                        std::span<const RecoursePath> paths) {
  PoiMetrics m;
  m.id = std::move(id);
  m.trial = trial;
  if (paths.empty()) {
    m.values[0] = 0.0;
    m.values[1] = 0.0;
    return m;
  }
  m.values[0] = success(paths);
  m.values[1] = avg_success(paths);
  const auto ok = successful(paths);
  if (!ok.empty()) {
    double dist = 0.0;
    double length = 0.0;
    double steps = 0.0;
    for (const auto* p : ok) {
      dist += l2_distance(*p);
      length += path_length(*p);
      steps += static_cast<double>(path_steps(*p));
    }
    const double n = static_cast<double>(ok.size());
    m.values[2] = dist / n;
    m.values[4] = length / n;
    m.values[5] = steps / n;
  }
  if (ok.size() >= 2) {
    m.values[3] = diversity(paths);
    m.values[6] = proximal_diversity(poi, paths);
  }
  return m;
}

MetricsReport aggregate(std::vector<PoiMetrics> per_poi, int trials) {
  MetricsReport report;
  report.trials = trials;
  for (std::size_t k = 0; k < kMetricNames.size(); ++k) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& m : per_poi) {
      if (m.values[k]) {
        sum += *m.values[k];
        ++count;
      }
    }
    MetricSummary s;
    s.count = count;
    if (count > 0) {
      s.mean = sum / static_cast<double>(count);
      if (count > 1) {
        double sq = 0.0;
        for (const auto& m : per_poi) {
          if (m.values[k]) sq += (*m.values[k] - s.mean) * (*m.values[k] - s.mean);
        }
        const double var = sq / static_cast<double>(count - 1);
        s.standard_error = std::sqrt(var / static_cast<double>(count));
      }
    }
    report.aggregate[k] = s;
  }
  report.per_poi = std::move(per_poi);
  return report;
}

nlohmann::json report_to_json(const MetricsReport& report) {
  nlohmann::json aggregate = nlohmann::json::object();
  for (std::size_t k = 0; k < kMetricNames.size(); ++k) {
    const auto& s = report.aggregate[k];
    aggregate[std::string(kMetricNames[k])] = {
        {"mean", s.mean}, {"stderr", s.standard_error}, {"count", s.count}};
  }
  nlohmann::json per_poi = nlohmann::json::array();
  for (const auto& m : report.per_poi) {
    nlohmann::json entry = {{"id", m.id}, {"trial", m.trial}};
    for (std::size_t k = 0; k < kMetricNames.size(); ++k) {
      entry[std::string(kMetricNames[k])] =
          m.values[k] ? nlohmann::json(*m.values[k]) : nlohmann::json(nullptr);
    }
    per_poi.push_back(std::move(entry));
  }
  nlohmann::json doc = {
      {"trials", report.trials}, {"aggregate", std::move(aggregate)}, {"per_poi", std::move(per_poi)}};
  if (!report.config.is_null()) doc["config"] = report.config;
  return doc;
}

std::string report_to_csv(const MetricsReport& report) {
  std::ostringstream out;
  for (std::size_t k = 0; k < kMetricNames.size(); ++k) out << kMetricNames[k] << ',';
  for (std::size_t k = 0; k < kMetricNames.size(); ++k) {
    out << "stderr_" << kMetricNames[k] << (k + 1 < kMetricNames.size() ? "," : "\n");
  }
  for (std::size_t k = 0; k < kMetricNames.size(); ++k) {
    const auto& s = report.aggregate[k];
    out << (s.count > 0 ? format_number(s.mean) : "") << ',';
  }
  for (std::size_t k = 0; k < kMetricNames.size(); ++k) {
    const auto& s = report.aggregate[k];
    out << (s.count > 0 ? format_number(s.standard_error) : "")
        << (k + 1 < kMetricNames.size() ? "," : "\n");
  }
  return out.str();
}

}  // namespace step
