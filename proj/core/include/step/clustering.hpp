#pragma once

#include <cstdint>
#include <vector>

#include "step/dataset.hpp"
#include "step/types.hpp"

namespace step {

struct Clustering {
  int k = 1;
  // Per dataset row: cluster index for positively classified rows, -1 for
  // every other row.
  std::vector<int> assignment;
  // Dataset row indices of each cluster, ascending.
  std::vector<std::vector<std::size_t>> members;
  Matrix centroids;  // k x m; rows of empty clusters are zero
  double wcss = 0.0;  // within-cluster sum of squares
  std::uint64_t seed = 0;
};

struct KMeansResult {
  std::vector<int> assignment;
  Matrix centroids;
  double wcss = 0.0;
};

// Lloyd's algorithm from k-means++ seeding; the best of `restarts` runs by
// WCSS wins. Deterministic for a fixed seed. Throws std::invalid_argument
// unless 1 <= k <= rows.
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iters = 300,
                    int restarts = 10);

// Clusters the positively classified rows of `dataset`.
Clustering kmeans_positive(const RecourseDataset& dataset, int k, std::uint64_t seed,
                           int max_iters = 300, int restarts = 10);

// Uniform random cluster label for every positive row (clusters may end up
// empty).
Clustering random_clustering(const RecourseDataset& dataset, int k, std::uint64_t seed);

// Copies the assignment into dataset.cluster_of.
void assign_clusters(RecourseDataset& dataset, const Clustering& clustering);

}  // namespace step
