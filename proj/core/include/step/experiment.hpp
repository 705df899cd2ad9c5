#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "step/alpha.hpp"
#include "step/clustering.hpp"
#include "step/dataset.hpp"
#include "step/direction.hpp"
#include "step/face.hpp"
#include "step/metrics.hpp"
#include "step/model.hpp"
#include "step/path.hpp"
#include "step/privacy.hpp"

namespace step {

enum class Method { kStep, kFace };
enum class ClusteringMode { kKMeans, kRandom };

struct ModelSpec {
  // Train a logistic model on each trial's training split, or load weights.
  bool load = false;
  std::filesystem::path path;
  LogisticTrainingOptions training;
};

struct ExperimentConfig {
  std::filesystem::path csv;
  std::filesystem::path schema;
  ModelSpec model;
  Method method = Method::kStep;
  int k = 3;
  int trials = 10;
  double threshold = kDefaultThreshold;
  double step_size = kDefaultStepSize;
  int max_iterations = kDefaultMaxIterations;
  AlphaFunction alpha = AlphaFunction::volcano(2.0, 0.5);
  double noise_beta = 0.0;
  ClusteringMode clustering = ClusteringMode::kKMeans;
  std::optional<PrivacyParams> privacy;
  bool allow_unaudited_privacy = false;
  std::uint64_t seed = 0;
  int poi_cap = 1000;
  double face_distance = kDefaultFaceDistance;
  int face_max_path_nodes = kDefaultFaceMaxPathNodes;
  int kmeans_max_iters = 300;
  int kmeans_restarts = 10;
  double train_fraction = 0.70;
  double validation_fraction = 0.15;
  int threads = 0;  // 0 picks the hardware concurrency

  // Throws ConfigError on an out-of-range field.
  void validate() const;
};

// Relative paths inside the document resolve against `base_dir`. Unknown
// keys are rejected. Throws ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& doc,
                                  const std::filesystem::path& base_dir = {});
nlohmann::json config_to_json(const ExperimentConfig& config);
// Reads a JSON config; STEP_SEED in the environment overrides "seed".
ExperimentConfig load_config(const std::filesystem::path& path);

// Adds user-interference noise: standard normal draws on continuous
// dimensions only, rescaled to length beta * |d|. beta == 0, a zero
// direction, or a schema without continuous features return d unchanged.
// Throws std::invalid_argument for negative beta.
Direction perturb_direction(const Direction& direction, double beta, const FeatureSchema& schema,
                            std::uint64_t seed);

// Everything one trial needs: fitted schema, labelled and clustered training
// data, the model and the negatively classified test PoIs.
struct TrialSetup {
  int trial = 0;
  std::uint64_t seed = 0;
  FeatureSchema schema;
  RecourseDataset dataset;
  Clustering clustering;
  ModelHandle model;
  std::shared_ptr<const DatasetGraph> face_graph;  // FACE method only
  Matrix pois;
  std::vector<std::string> poi_ids;
};

std::uint64_t trial_seed(const ExperimentConfig& config, int trial);

TrialSetup prepare_trial(const ExperimentConfig& config, const RawTable& table, int trial);

PathConfig path_config(const ExperimentConfig& config, std::uint64_t stream_seed);

// Paths for one PoI of a prepared trial with the configured method.
std::vector<RecoursePath> recourse_for(const ExperimentConfig& config, const TrialSetup& setup,
                                       const Vector& poi, std::uint64_t stream_seed);

// Metrics for every PoI of one trial. Depends only on (config, trial).
std::vector<PoiMetrics> run_trial(const ExperimentConfig& config, const RawTable& table,
                                  int trial);

// Throws ConfigError for invalid configs and Error if a trial has no
// negatively classified test point.
MetricsReport run_experiment(const ExperimentConfig& config);

// One report per value, everything else fixed.
std::vector<MetricsReport> sweep_noise(const ExperimentConfig& config,
                                       std::span<const double> betas);
std::vector<MetricsReport> sweep_k(const ExperimentConfig& config, std::span<const int> ks);

}  // namespace step
