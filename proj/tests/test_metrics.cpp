#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "step/metrics.hpp"
#include "support.hpp"

namespace step {
namespace {

RecoursePath make_path(std::initializer_list<std::pair<double, double>> pts, bool ok) {
  RecoursePath p;
  for (const auto& [a, b] : pts) p.points.push_back((Vector(2) << a, b).finished());
  p.success = ok;
  return p;
}

RecoursePath random_path(std::mt19937_64& rng, const Vector& poi, int dims) {
  RecoursePath p;
  p.points.push_back(poi);
  const int hops = static_cast<int>(rng() % 6);
  for (int i = 0; i < hops; ++i) p.points.push_back(p.points.back() + testing::random_vector(rng, dims, -1, 1));
  p.success = true;
  return p;
}

TEST(Metrics, SuccessAndAverage) {
  const auto s = make_path({{0, 0}, {1, 0}}, true);
  const auto f = make_path({{0, 0}, {1, 1}}, false);
  EXPECT_EQ(success(std::vector{f, f, s}), 1);
  EXPECT_EQ(success(std::vector{f, f}), 0);
  EXPECT_EQ(success(std::vector{s, s, s}), 1);
  EXPECT_EQ(avg_success(std::vector{s, f, f}), 1.0 / 3.0);
  EXPECT_EQ(avg_success(std::vector{s, s, s}), 1.0);
  EXPECT_EQ(avg_success(std::vector{s, f, s, f}), 0.5);
}

TEST(Metrics, Distances) {
  EXPECT_EQ(l2_distance(make_path({{0, 0}, {3, 4}}, true)), 5.0);
  EXPECT_EQ(l2_distance(make_path({{1, 1}}, true)), 0.0);
  EXPECT_EQ(l2_distance(make_path({{0, 0}, {1, 0}, {1, 1}}, true)), std::sqrt(2.0));
  EXPECT_EQ(path_length(make_path({{0, 0}, {1, 0}, {1, 1}}, true)), 2.0);
  EXPECT_EQ(path_length(make_path({{1, 1}}, true)), 0.0);
  const auto hop = make_path({{2, 1}, {-3, 7}}, true);
  EXPECT_EQ(path_length(hop), l2_distance(hop));
}

TEST(Metrics, Steps) {
  EXPECT_EQ(path_steps(make_path({{0, 0}, {1, 0}, {1, 1}}, true)), 2u);
  EXPECT_EQ(path_steps(make_path({{0, 0}, {1, 0}}, true)), 1u);
  EXPECT_EQ(path_steps(make_path({{0, 0}}, true)), 0u);
}

TEST(Metrics, Diversity) {
  EXPECT_EQ(diversity(std::vector{make_path({{0, 0}}, true), make_path({{0, 0}, {3, 4}}, true)}), 5.0);
  const auto same = make_path({{0, 0}, {2, 2}}, true);
  EXPECT_EQ(diversity(std::vector{same, same, same}), 0.0);
  EXPECT_EQ(diversity(std::vector{make_path({{9, 9}, {0, 0}}, true), make_path({{9, 9}, {3, 4}}, true),
                                  make_path({{9, 9}, {6, 8}}, true)}),
            20.0 / 3.0);
  // Failed paths do not count.
  EXPECT_EQ(diversity(std::vector{make_path({{0, 0}}, true), make_path({{0, 0}, {3, 4}}, true),
                                  make_path({{0, 0}, {100, 0}}, false)}),
            5.0);
}

TEST(Metrics, ProximalDiversity) {
  const Vector o = Vector::Zero(2);
  EXPECT_EQ(proximal_diversity(o, std::vector{make_path({{0, 0}, {3, 4}}, true), make_path({{0, 0}, {6, 8}}, true)}),
            0.5);
  const auto same = make_path({{0, 0}, {2, 2}}, true);
  EXPECT_EQ(proximal_diversity(o, std::vector{same, same}), 0.0);
  EXPECT_EQ(proximal_diversity(o, std::vector{make_path({{0, 0}, {0, 2.5}}, true), make_path({{0, 0}, {0, -2.5}}, true)}),
            2.0);
  EXPECT_EQ(proximal_diversity(o, std::vector{make_path({{0, 0}}, true), make_path({{0, 0}}, true)}), 0.0);
}

TEST(Metrics, Preconditions) {
  EXPECT_THROW(success(std::vector<RecoursePath>{}), std::invalid_argument);
  EXPECT_THROW(avg_success(std::vector<RecoursePath>{}), std::invalid_argument);
  EXPECT_THROW(diversity(std::vector{make_path({{0, 0}}, true)}), std::invalid_argument);
}

TEST(MetricProperties, LengthAtLeastDistance) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 500; ++t) {
    const auto p = random_path(rng, testing::random_vector(rng, 3), 3);
    EXPECT_GE(path_length(p), l2_distance(p) - 1e-12);
  }
}

TEST(MetricProperties, DiversityIgnoresPathOrder) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    const Vector poi = testing::random_vector(rng, 2);
    std::vector<RecoursePath> paths;
    for (int i = 0; i < 4; ++i) paths.push_back(random_path(rng, poi, 2));
    const double d = diversity(paths), pd = proximal_diversity(poi, paths);
    std::shuffle(paths.begin(), paths.end(), rng);
    EXPECT_NEAR(diversity(paths), d, 1e-12);
    EXPECT_NEAR(proximal_diversity(poi, paths), pd, 1e-12);
  }
}

TEST(MetricProperties, RotationInvariant) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    const Matrix a = testing::random_orthogonal(rng, 3);
    const Vector poi = testing::random_vector(rng, 3);
    std::vector<RecoursePath> paths, rotated;
    for (int i = 0; i < 3; ++i) {
      paths.push_back(random_path(rng, poi, 3));
      RecoursePath r = paths.back();
      for (auto& x : r.points) x = a * x;
      rotated.push_back(r);
    }
    const PoiMetrics m = evaluate_poi("a", 0, poi, paths);
    const PoiMetrics mr = evaluate_poi("a", 0, a * poi, rotated);
    for (std::size_t k = 0; k < kMetricNames.size(); ++k) {
      ASSERT_EQ(m.values[k].has_value(), mr.values[k].has_value());
      if (m.values[k]) { EXPECT_NEAR(*m.values[k], *mr.values[k], 1e-9); }
    }
  }
}

TEST(Evaluate, PresenceRules) {
  const Vector o = Vector::Zero(2);
  const auto none = evaluate_poi("a", 0, o, std::vector{make_path({{0, 0}, {1, 0}}, false)});
  EXPECT_EQ(*none.values[0], 0.0);
  for (std::size_t k = 2; k < 7; ++k) EXPECT_FALSE(none.values[k].has_value());
  const auto one = evaluate_poi("a", 0, o, std::vector{make_path({{0, 0}, {1, 0}}, true)});
  EXPECT_TRUE(one.values[2].has_value());
  EXPECT_FALSE(one.values[3].has_value());
  EXPECT_FALSE(one.values[6].has_value());
  const auto empty = evaluate_poi("a", 0, o, std::vector<RecoursePath>{});
  EXPECT_EQ(*empty.values[0], 0.0);
  EXPECT_EQ(*empty.values[1], 0.0);
}

TEST(Aggregate, MeanAndStandardError) {
  std::vector<PoiMetrics> per;
  const std::vector<double> xs = {1.0, 0.0, 1.0, 1.0};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    PoiMetrics m;
    m.id = std::to_string(i);
    m.values[0] = xs[i];
    if (i < 2) m.values[2] = 2.0 * static_cast<double>(i + 1);
    per.push_back(m);
  }
  const MetricsReport r = aggregate(per, 2);
  EXPECT_EQ(r.trials, 2);
  EXPECT_EQ(r.aggregate[0].count, 4u);
  EXPECT_DOUBLE_EQ(r.aggregate[0].mean, 0.75);
  // Sample std of {1,0,1,1} is 0.5, over sqrt(4).
  EXPECT_DOUBLE_EQ(r.aggregate[0].standard_error, 0.25);
  EXPECT_EQ(r.aggregate[2].count, 2u);
  EXPECT_DOUBLE_EQ(r.aggregate[2].mean, 3.0);
  EXPECT_DOUBLE_EQ(r.aggregate[2].standard_error, std::sqrt(2.0) / std::sqrt(2.0));
  EXPECT_EQ(r.aggregate[3].count, 0u);
}

TEST(Report, CsvColumns) {
  PoiMetrics m;
  m.values[0] = 1.0;
  m.values[1] = 0.5;
  const std::string csv = report_to_csv(aggregate({m}, 1));
  const std::string header = csv.substr(0, csv.find('\n'));
  EXPECT_EQ(header,
            "success,avg_success,l2_distance,diversity,path_length,path_steps,proximal_diversity,"
            "stderr_success,stderr_avg_success,stderr_l2_distance,stderr_diversity,"
            "stderr_path_length,stderr_path_steps,stderr_proximal_diversity");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

TEST(Report, JsonHasPerPoiAndAggregate) {
  PoiMetrics m;
  m.id = "row-7";
  m.trial = 3;
  m.values[0] = 1.0;
  const auto doc = report_to_json(aggregate({m}, 4));
  EXPECT_EQ(doc.at("trials"), 4);
  EXPECT_EQ(doc.at("per_poi").size(), 1u);
  EXPECT_EQ(doc.at("aggregate").at("success").at("mean"), 1.0);
}

}  // namespace
}  // namespace step
