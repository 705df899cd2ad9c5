#include "step/face.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <stdexcept>

namespace step {

DatasetGraph::DatasetGraph(Matrix points, double distance_threshold)
    : points_(std::move(points)), distance_threshold_(distance_threshold) {
  if (!(distance_threshold_ > 0.0)) {
    throw std::invalid_argument("build_graph: distance threshold must be positive");
  }
  const auto n = points_.rows();
  adjacency_.resize(static_cast<std::size_t>(n));
  for (Eigen::Index u = 0; u < n; ++u) {
    for (Eigen::Index v = u + 1; v < n; ++v) {
      const double w = (points_.row(u) - points_.row(v)).norm();
      if (w < distance_threshold_) {
        adjacency_[static_cast<std::size_t>(u)].push_back({static_cast<std::size_t>(v), w});
        adjacency_[static_cast<std::size_t>(v)].push_back({static_cast<std::size_t>(u), w});
      }
    }
  }
}

RecourseGraph::RecourseGraph(std::shared_ptr<const DatasetGraph> base, Vector poi)
    : base_(std::move(base)), poi_(std::move(poi)) {
  const Matrix& pts = base_->points();
  if (pts.rows() > 0 && pts.cols() != poi_.size()) {
    throw std::invalid_argument("build_graph: PoI dimension mismatch");
  }
  for (Eigen::Index v = 0; v < pts.rows(); ++v) {
    const double w = (pts.row(v).transpose() - poi_).norm();
    if (w < base_->distance_threshold()) poi_edges_.push_back({static_cast<std::size_t>(v), w});
  }
}

Vector RecourseGraph::position(std::size_t node) const {
  if (node == poi_node()) return poi_;
  return base_->points().row(static_cast<Eigen::Index>(node)).transpose();
}

std::size_t RecourseGraph::edge_count() const {
  std::size_t twice = 0;
  for (std::size_t u = 0; u < base_->size(); ++u) twice += base_->neighbours(u).size();
  return twice / 2 + poi_edges_.size();
}

void RecourseGraph::for_each_neighbour(std::size_t node,
                                       const std::function<void(const Edge&)>& fn) const {
  if (node == poi_node()) {
    for (const Edge& e : poi_edges_) fn(e);
    return;
  }
  for (const Edge& e : base_->neighbours(node)) fn(e);
  // poi_edges_ is sorted by node, so the reverse edge can be found directly.
  auto it = std::lower_bound(poi_edges_.begin(), poi_edges_.end(), node,
                             [](const Edge& e, std::size_t n) { return e.to < n; });
  if (it != poi_edges_.end() && it->to == node) fn({poi_node(), it->weight});
}

RecourseGraph build_graph(const Matrix& dataset_points, const Vector& poi,
                          double distance_threshold) {
  return RecourseGraph(std::make_shared<const DatasetGraph>(dataset_points, distance_threshold),
                       poi);
}

ShortestPaths dijkstra(const RecourseGraph& graph, std::size_t source) {
  const std::size_t n = graph.node_count();
  ShortestPaths sp;
  sp.distance.assign(n, std::numeric_limits<double>::infinity());
  sp.predecessor.resize(n);
  for (std::size_t i = 0; i < n; ++i) sp.predecessor[i] = i;
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> frontier;
  sp.distance.at(source) = 0.0;
  frontier.emplace(0.0, source);
  std::vector<bool> settled(n, false);
  while (!frontier.empty()) {
    const auto [d, u] = frontier.top();
    frontier.pop();
    if (settled[u]) continue;
    settled[u] = true;
    graph.for_each_neighbour(u, [&, d = d, u = u](const Edge& e) {
      const double candidate = d + e.weight;
      if (candidate < sp.distance[e.to]) {
        sp.distance[e.to] = candidate;
        sp.predecessor[e.to] = u;
        frontier.emplace(candidate, e.to);
      }
    });
  }
  return sp;
}

std::vector<RecoursePath> face_paths(const RecourseGraph& graph, const Model& model,
                                     double threshold, int k, int max_path_nodes) {
  if (k < 1) throw std::invalid_argument("face_paths: k must be at least 1");
  const std::size_t source = graph.poi_node();
  const ShortestPaths sp = dijkstra(graph, source);

  std::vector<std::size_t> candidates;
  for (std::size_t v = 0; v < source; ++v) {
    if (std::isfinite(sp.distance[v]) &&
        model.classify(graph.position(v), threshold) == Label::kPositive) {
      candidates.push_back(v);
    }
  }
  std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
    return sp.distance[a] != sp.distance[b] ? sp.distance[a] < sp.distance[b] : a < b;
  });

  std::vector<RecoursePath> paths;
  for (std::size_t target : candidates) {
    if (paths.size() == static_cast<std::size_t>(k)) break;
    std::vector<std::size_t> route{target};
    while (route.back() != source) route.push_back(sp.predecessor[route.back()]);
    if (route.size() > static_cast<std::size_t>(max_path_nodes)) continue;
    std::reverse(route.begin(), route.end());
    RecoursePath path;
    path.cluster_id = static_cast<int>(paths.size());
    path.success = true;
    for (std::size_t node : route) path.points.push_back(graph.position(node));
    paths.push_back(std::move(path));
  }
  return paths;
}

}  // namespace step
