#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "step/model.hpp"
#include "step/path.hpp"
#include "step/types.hpp"

namespace step {

inline constexpr double kDefaultFaceDistance = 3.0;
inline constexpr int kDefaultFaceMaxPathNodes = 50;

struct Edge {
  std::size_t to = 0;
  double weight = 0.0;
};

// Epsilon-graph over dataset rows: undirected, l2 weights strictly below the
// distance threshold. Independent of any PoI, so it can be shared.
class DatasetGraph {
 public:
  DatasetGraph(Matrix points, double distance_threshold);

  std::size_t size() const { return adjacency_.size(); }
  double distance_threshold() const { return distance_threshold_; }
  const Matrix& points() const { return points_; }
  const std::vector<Edge>& neighbours(std::size_t node) const { return adjacency_.at(node); }

 private:
  Matrix points_;
  double distance_threshold_;
  std::vector<std::vector<Edge>> adjacency_;
};

// A DatasetGraph plus the PoI as node n, joined under the same rule.
class RecourseGraph {
 public:
  RecourseGraph(std::shared_ptr<const DatasetGraph> base, Vector poi);

  std::size_t node_count() const { return base_->size() + 1; }
  std::size_t poi_node() const { return base_->size(); }
  double distance_threshold() const { return base_->distance_threshold(); }
  Vector position(std::size_t node) const;
  std::size_t edge_count() const;

  // Calls fn(edge) for every edge incident to `node`.
  void for_each_neighbour(std::size_t node, const std::function<void(const Edge&)>& fn) const;

 private:
  std::shared_ptr<const DatasetGraph> base_;
  Vector poi_;
  std::vector<Edge> poi_edges_;
};

// Throws std::invalid_argument unless distance_threshold > 0.
RecourseGraph build_graph(const Matrix& dataset_points, const Vector& poi,
                          double distance_threshold = kDefaultFaceDistance);

struct ShortestPaths {
  std::vector<double> distance;  // +inf when unreachable
  std::vector<std::size_t> predecessor;  // the node itself for the source
};

ShortestPaths dijkstra(const RecourseGraph& graph, std::size_t source);

// Up to k shortest-path routes from the PoI to the nearest (by path cost)
// positively classified dataset nodes, ties broken by node index. Routes with
// more than max_path_nodes nodes (PoI included) are skipped. Fewer than k
// routes come back when fewer candidates are reachable.
std::vector<RecoursePath> face_paths(const RecourseGraph& graph, const Model& model,
                                     double threshold, int k,
                                     int max_path_nodes = kDefaultFaceMaxPathNodes);

}  // namespace step
