#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "step/alpha.hpp"
#include "step/clustering.hpp"
#include "step/dataset.hpp"
#include "step/model.hpp"
#include "step/privacy.hpp"

namespace step {

inline constexpr int kDefaultMaxIterations = 50;
inline constexpr double kDefaultStepSize = 1.0;

struct RecoursePath {
  std::vector<Vector> points;  // points[0] is the PoI
  int cluster_id = 0;
  bool success = false;

  std::size_t steps_taken() const { return points.empty() ? 0 : points.size() - 1; }
};

// Called on every direction before it is turned into a step; returns the
// vector that is actually followed.
using DirectionTransform =
    std::function<Vector(const Vector& direction, int cluster_id, int iteration)>;

struct PathConfig {
  double step_size = kDefaultStepSize;
  int max_iterations = kDefaultMaxIterations;
  double threshold = kDefaultThreshold;
  // Gaussian mechanism on each released direction; alpha is capped at C.
  std::optional<PrivacyParams> privacy;
  // Privacy over k > 1 clusters is refused unless this is set, because the
  // clustering step itself is not private.
  bool allow_unaudited_privacy = false;
  // Per-call stream id mixed into every noise seed.
  std::uint64_t stream_seed = 0;
  DirectionTransform perturb;
};

// Follows each cluster's direction from `poi` until the model classifies the
// current point positive or max_iterations steps were taken. A cluster with
// zero direction ends its path unsuccessfully at the current point. An
// already-positive PoI yields k successful zero-step paths.
std::vector<RecoursePath> generate_paths(const Vector& poi, const RecourseDataset& dataset,
                                         const Clustering& clustering, const Model& model,
                                         const AlphaFunction& alpha, const PathConfig& config);

// Direction for one cluster at `current`, including privatization when the
// config asks for it. Shared by generate_paths and the interactive service.
Direction cluster_direction(const Vector& current, const RecourseDataset& dataset,
                            const Clustering& clustering, int cluster_id,
                            const AlphaFunction& alpha, const PathConfig& config,
                            int iteration);

nlohmann::json path_to_json(const RecoursePath& path);
RecoursePath path_from_json(const nlohmann::json& doc);

}  // namespace step
