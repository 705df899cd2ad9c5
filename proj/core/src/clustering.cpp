#include "step/clustering.hpp"

#include <limits>
#include <random>
#include <stdexcept>

#include "step/random.hpp"

namespace step {

namespace {

struct Assignment {
  std::vector<int> labels;
  double wcss = 0.0;
};

Assignment assign_nearest(const Matrix& points, const Matrix& centroids) {
  Assignment out;
  out.labels.resize(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
      const double d = (points.row(r) - centroids.row(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    out.labels[static_cast<std::size_t>(r)] = best;
    out.wcss += best_d;
  }
  return out;
}

Matrix plus_plus_seeds(const Matrix& points, int k, std::mt19937_64& rng) {
  const auto n = points.rows();
  Matrix centroids(k, points.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centroids.row(0) = points.row(pick(rng));
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
      auto& d = d2[static_cast<std::size_t>(r)];
      d = std::min(d, (points.row(r) - centroids.row(c - 1)).squaredNorm());
      total += d;
    }
    Eigen::Index chosen = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      chosen = n - 1;
      for (Eigen::Index r = 0; r < n; ++r) {
        target -= d2[static_cast<std::size_t>(r)];
        if (target < 0.0) {
          chosen = r;
          break;
        }
      }
    } else {
      chosen = pick(rng);
    }
    centroids.row(c) = points.row(chosen);
  }
  return centroids;
}

KMeansResult lloyd(const Matrix& points, int k, std::mt19937_64& rng, int max_iters) {
  Matrix centroids = plus_plus_seeds(points, k, rng);
  Assignment current = assign_nearest(points, centroids);
  for (int iter = 0; iter < max_iters; ++iter) {
    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index r = 0; r < points.rows(); ++r) {
      const int c = current.labels[static_cast<std::size_t>(r)];
      sums.row(c) += points.row(r);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
        continue;
      }
      // Empty cluster: move it onto the point worst served by its centroid.
      Eigen::Index worst = 0;
      double worst_d = -1.0;
      for (Eigen::Index r = 0; r < points.rows(); ++r) {
        const int owner = current.labels[static_cast<std::size_t>(r)];
        const double d = (points.row(r) - centroids.row(owner)).squaredNorm();
        if (d > worst_d) {
          worst_d = d;
          worst = r;
        }
      }
      centroids.row(c) = points.row(worst);
    }
    Assignment next = assign_nearest(points, centroids);
    const bool stable = next.labels == current.labels;
    current = std::move(next);
    if (stable) break;
  }
  // Final centroids are exact means of the final assignment.
  Matrix sums = Matrix::Zero(k, points.cols());
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    const int c = current.labels[static_cast<std::size_t>(r)];
    sums.row(c) += points.row(r);
    ++counts[static_cast<std::size_t>(c)];
  }
  double wcss = 0.0;
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) {
      centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
    }
  }
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    wcss += (points.row(r) - centroids.row(current.labels[static_cast<std::size_t>(r)]))
                .squaredNorm();
  }
  return {std::move(current.labels), std::move(centroids), wcss};
}

Clustering from_positive_labels(const RecourseDataset& dataset,
                                const std::vector<std::size_t>& positives,
                                const std::vector<int>& labels, int k, std::uint64_t seed) {
  Clustering out;
  out.k = k;
  out.seed = seed;
  out.assignment.assign(dataset.size(), -1);
  out.members.assign(static_cast<std::size_t>(k), {});
  out.centroids = Matrix::Zero(k, static_cast<Eigen::Index>(dataset.dim()));
  for (std::size_t j = 0; j < positives.size(); ++j) {
    const int c = labels[j];
    out.assignment[positives[j]] = c;
    out.members[static_cast<std::size_t>(c)].push_back(positives[j]);
  }
  for (int c = 0; c < k; ++c) {
    const auto& m = out.members[static_cast<std::size_t>(c)];
    if (m.empty()) continue;
    for (std::size_t i : m) out.centroids.row(c) += dataset.points.row(static_cast<Eigen::Index>(i));
    out.centroids.row(c) /= static_cast<double>(m.size());
    for (std::size_t i : m) {
      out.wcss += (dataset.points.row(static_cast<Eigen::Index>(i)) - out.centroids.row(c))
                      .squaredNorm();
    }
  }
  return out;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iters,
                    int restarts) {
  if (k < 1) throw std::invalid_argument("kmeans: k must be at least 1");
  if (static_cast<Eigen::Index>(k) > points.rows()) {
    throw std::invalid_argument("kmeans: k exceeds the number of points");
  }
  if (restarts < 1 || max_iters < 0) {
    throw std::invalid_argument("kmeans: restarts must be >= 1 and max_iters >= 0");
  }
  std::mt19937_64 rng(mix_seed(seed));
  KMeansResult best;
  best.wcss = std::numeric_limits<double>::infinity();
  for (int run = 0; run < restarts; ++run) {
    KMeansResult candidate = lloyd(points, k, rng, max_iters);
    if (candidate.wcss < best.wcss) best = std::move(candidate);
  }
  return best;
}

Clustering kmeans_positive(const RecourseDataset& dataset, int k, std::uint64_t seed,
                           int max_iters, int restarts) {
  const auto positives = dataset.positive_indices();
  if (k < 1) throw std::invalid_argument("kmeans_positive: k must be at least 1");
  if (positives.size() < static_cast<std::size_t>(k)) {
    throw std::invalid_argument("kmeans_positive: k = " + std::to_string(k) + " exceeds the " +
                                std::to_string(positives.size()) + " positive points");
  }
  Matrix pos(static_cast<Eigen::Index>(positives.size()), dataset.points.cols());
  for (std::size_t j = 0; j < positives.size(); ++j) {
    pos.row(static_cast<Eigen::Index>(j)) = dataset.points.row(static_cast<Eigen::Index>(positives[j]));
  }
  const KMeansResult result = kmeans(pos, k, seed, max_iters, restarts);
  return from_positive_labels(dataset, positives, result.assignment, k, seed);
}

Clustering random_clustering(const RecourseDataset& dataset, int k, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("random_clustering: k must be at least 1");
  const auto positives = dataset.positive_indices();
  std::mt19937_64 rng(mix_seed(seed));
  std::uniform_int_distribution<int> pick(0, k - 1);
  std::vector<int> labels(positives.size());
  for (auto& l : labels) l = pick(rng);
  return from_positive_labels(dataset, positives, labels, k, seed);
}

void assign_clusters(RecourseDataset& dataset, const Clustering& clustering) {
  if (clustering.assignment.size() != dataset.size()) {
    throw std::invalid_argument("assign_clusters: clustering was built for another dataset");
  }
  dataset.cluster_of.assign(dataset.size(), std::nullopt);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (clustering.assignment[i] >= 0) dataset.cluster_of[i] = clustering.assignment[i];
  }
}

}  // namespace step
