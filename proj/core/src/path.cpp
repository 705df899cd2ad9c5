#include "step/path.hpp"

#include <stdexcept>

#include "step/direction.hpp"
#include "step/random.hpp"

namespace step {

namespace {

void check_privacy(const Clustering& clustering, const PathConfig& config) {
  if (config.privacy && clustering.k > 1 && !config.allow_unaudited_privacy) {
    throw ConfigError(
        "privacy guarantees do not cover the clustering step; use k = 1 or set "
        "allow_unaudited_privacy");
  }
}

}  // namespace

Direction cluster_direction(const Vector& current, const RecourseDataset& dataset,
                            const Clustering& clustering, int cluster_id,
                            const AlphaFunction& alpha, const PathConfig& config,
                            int iteration) {
  if (cluster_id < 0 || cluster_id >= clustering.k) {
    throw std::invalid_argument("cluster id out of range");
  }
  check_privacy(clustering, config);
  const AlphaFunction weight =
      config.privacy ? bounded_alpha(alpha, config.privacy->sensitivity_bound) : alpha;
  Direction d;
  d.cluster_id = cluster_id;
  d.vector = step_direction(current, dataset.points, dataset.labels,
                            clustering.members[static_cast<std::size_t>(cluster_id)], weight);
  if (config.privacy) {
    const auto seed = derive_seed(config.privacy->seed,
                                  {config.stream_seed, static_cast<std::uint64_t>(cluster_id),
                                   static_cast<std::uint64_t>(iteration)});
    d = privatize_direction(d, config.privacy->sigma, seed);
  }
  return d;
}

std::vector<RecoursePath> generate_paths(const Vector& poi, const RecourseDataset& dataset,
                                         const Clustering& clustering, const Model& model,
                                         const AlphaFunction& alpha, const PathConfig& config) {
  if (static_cast<std::size_t>(poi.size()) != dataset.dim()) {
    throw std::invalid_argument("generate_paths: PoI dimension mismatch");
  }
  if (config.max_iterations < 0) {
    throw std::invalid_argument("generate_paths: max_iterations must be >= 0");
  }
  if (clustering.members.size() != static_cast<std::size_t>(clustering.k)) {
    throw std::invalid_argument("generate_paths: malformed clustering");
  }
  check_privacy(clustering, config);

  std::vector<RecoursePath> paths;
  paths.reserve(static_cast<std::size_t>(clustering.k));
  const bool already_positive = model.classify(poi, config.threshold) == Label::kPositive;
  for (int c = 0; c < clustering.k; ++c) {
    RecoursePath path;
    path.cluster_id = c;
    path.points.push_back(poi);
    path.success = already_positive;
    Vector current = poi;
    for (int it = 0; !path.success && it < config.max_iterations; ++it) {
      Direction d = cluster_direction(current, dataset, clustering, c, alpha, config, it);
      if (!(d.vector.norm() > 0.0)) break;
      Vector followed = config.perturb ? config.perturb(d.vector, c, it) : d.vector;
      if (!(followed.norm() > 0.0)) break;
      current = apply_step(current, followed, dataset.schema, config.step_size);
      path.points.push_back(current);
      path.success = model.classify(current, config.threshold) == Label::kPositive;
    }
    paths.push_back(std::move(path));
  }
  return paths;
}

nlohmann::json path_to_json(const RecoursePath& path) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : path.points) points.push_back(std::vector<double>(p.begin(), p.end()));
  return {{"cluster", path.cluster_id}, {"success", path.success}, {"points", std::move(points)}};
}

RecoursePath path_from_json(const nlohmann::json& doc) {
  RecoursePath path;
  path.cluster_id = doc.at("cluster").get<int>();
  path.success = doc.at("success").get<bool>();
  for (const auto& p : doc.at("points")) {
    const auto v = p.get<std::vector<double>>();
    path.points.emplace_back(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  return path;
}

}  // namespace step
