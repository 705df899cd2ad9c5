#include "step/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <random>
#include <set>
#include <thread>

#include "step/random.hpp"

namespace step {

namespace {

using nlohmann::json;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "dataset", "csv", "schema", "model", "method", "k", "trials", "threshold", "step_size",
      "max_iterations", "alpha", "noise_beta", "clustering", "privacy",
      "allow_unaudited_privacy", "seed", "poi_cap", "face", "kmeans", "split", "threads"};
  return keys;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

std::string method_name(Method m) { return m == Method::kStep ? "step" : "face"; }
std::string clustering_name(ClusteringMode c) {
  return c == ClusteringMode::kKMeans ? "kmeans" : "random";
}

}  // namespace

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("invalid config: " + what); };
  if (csv.empty()) fail("dataset csv path is required");
  if (schema.empty()) fail("dataset schema path is required");
  if (model.load && model.path.empty()) fail("model.path is required when mode is 'load'");
  if (trials < 1) fail("trials must be >= 1");
  if (k < 1) fail("k must be >= 1");
  if (!(threshold > 0.0 && threshold < 1.0)) fail("threshold must lie in (0, 1)");
  if (!(step_size > 0.0)) fail("step_size must be positive");
  if (max_iterations < 0) fail("max_iterations must be >= 0");
  if (!(noise_beta >= 0.0)) fail("noise_beta must be >= 0");
  if (poi_cap < 1) fail("poi_cap must be >= 1");
  if (!(face_distance > 0.0)) fail("face.distance_threshold must be positive");
  if (face_max_path_nodes < 2) fail("face.max_path_nodes must be >= 2");
  if (kmeans_max_iters < 0 || kmeans_restarts < 1) fail("kmeans settings out of range");
  if (!(train_fraction > 0.0) || !(validation_fraction >= 0.0) ||
      !(train_fraction + validation_fraction < 1.0)) {
    fail("split fractions must leave a non-empty test share");
  }
  if (threads < 0) fail("threads must be >= 0");
  if (privacy && method == Method::kFace) fail("privacy applies to the step method only");
  if (privacy && k > 1 && !allow_unaudited_privacy) {
    fail("privacy with k > 1 clusters is not covered by the guarantee; set "
         "allow_unaudited_privacy to run it anyway");
  }
}

ExperimentConfig config_from_json(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (known_keys().count(key) == 0) throw ConfigError("unknown config key '" + key + "'");
  }
  ExperimentConfig c;
  try {
    if (doc.contains("dataset")) {
      const auto& d = doc.at("dataset");
      c.csv = resolve(base_dir, d.at("csv").get<std::string>());
      c.schema = resolve(base_dir, d.at("schema").get<std::string>());
    }
    if (doc.contains("csv")) c.csv = resolve(base_dir, doc.at("csv").get<std::string>());
    if (doc.contains("schema")) c.schema = resolve(base_dir, doc.at("schema").get<std::string>());
    if (doc.contains("model")) {
      const auto& m = doc.at("model");
      const auto mode = m.value("mode", std::string("train"));
      if (mode != "train" && mode != "load") {
        throw ConfigError("model.mode must be 'train' or 'load'");
      }
      c.model.load = mode == "load";
      if (m.contains("path")) c.model.path = resolve(base_dir, m.at("path").get<std::string>());
      c.model.training.epochs = m.value("epochs", c.model.training.epochs);
      c.model.training.learning_rate = m.value("learning_rate", c.model.training.learning_rate);
      c.model.training.l2_penalty = m.value("l2_penalty", c.model.training.l2_penalty);
    }
    if (doc.contains("method")) {
      const auto m = doc.at("method").get<std::string>();
      if (m == "step") {
        c.method = Method::kStep;
      } else if (m == "face") {
        c.method = Method::kFace;
      } else {
        throw ConfigError("method must be 'step' or 'face'");
      }
    }
    c.k = doc.value("k", c.k);
    c.trials = doc.value("trials", c.trials);
    c.threshold = doc.value("threshold", c.threshold);
    c.step_size = doc.value("step_size", c.step_size);
    c.max_iterations = doc.value("max_iterations", c.max_iterations);
    if (doc.contains("alpha")) c.alpha = alpha_from_json(doc.at("alpha"));
    c.noise_beta = doc.value("noise_beta", c.noise_beta);
    if (doc.contains("clustering")) {
      const auto m = doc.at("clustering").get<std::string>();
      if (m == "kmeans") {
        c.clustering = ClusteringMode::kKMeans;
      } else if (m == "random") {
        c.clustering = ClusteringMode::kRandom;
      } else {
        throw ConfigError("clustering must be 'kmeans' or 'random'");
      }
    }
    if (doc.contains("privacy") && !doc.at("privacy").is_null()) {
      c.privacy = privacy_from_json(doc.at("privacy"));
    }
    c.allow_unaudited_privacy = doc.value("allow_unaudited_privacy", false);
    c.seed = doc.value("seed", c.seed);
    c.poi_cap = doc.value("poi_cap", c.poi_cap);
    if (doc.contains("face")) {
      const auto& f = doc.at("face");
      c.face_distance = f.value("distance_threshold", c.face_distance);
      c.face_max_path_nodes = f.value("max_path_nodes", c.face_max_path_nodes);
    }
    if (doc.contains("kmeans")) {
      const auto& km = doc.at("kmeans");
      c.kmeans_max_iters = km.value("max_iters", c.kmeans_max_iters);
      c.kmeans_restarts = km.value("restarts", c.kmeans_restarts);
    }
    if (doc.contains("split")) {
      const auto& s = doc.at("split");
      c.train_fraction = s.value("train", c.train_fraction);
      c.validation_fraction = s.value("validation", c.validation_fraction);
    }
    c.threads = doc.value("threads", c.threads);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json doc = {
      {"dataset", {{"csv", c.csv.string()}, {"schema", c.schema.string()}}},
      {"model",
       {{"mode", c.model.load ? "load" : "train"},
        {"epochs", c.model.training.epochs},
        {"learning_rate", c.model.training.learning_rate},
        {"l2_penalty", c.model.training.l2_penalty}}},
      {"method", method_name(c.method)},
      {"k", c.k},
      {"trials", c.trials},
      {"threshold", c.threshold},
      {"step_size", c.step_size},
      {"max_iterations", c.max_iterations},
      {"alpha", alpha_to_json(c.alpha)},
      {"noise_beta", c.noise_beta},
      {"clustering", clustering_name(c.clustering)},
      {"allow_unaudited_privacy", c.allow_unaudited_privacy},
      {"seed", c.seed},
      {"poi_cap", c.poi_cap},
      {"face", {{"distance_threshold", c.face_distance}, {"max_path_nodes", c.face_max_path_nodes}}},
      {"kmeans", {{"max_iters", c.kmeans_max_iters}, {"restarts", c.kmeans_restarts}}},
      {"split", {{"train", c.train_fraction}, {"validation", c.validation_fraction}}},
  };
  if (c.model.load) doc["model"]["path"] = c.model.path.string();
  if (c.privacy) doc["privacy"] = privacy_to_json(*c.privacy);
  return doc;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  if (const char* env = std::getenv("STEP_SEED"); env != nullptr && *env != '\0') {
    try {
      doc["seed"] = std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string("STEP_SEED is not an unsigned integer: ") + env);
    }
  }
  return config_from_json(doc, path.parent_path());
}

Direction perturb_direction(const Direction& direction, double beta, const FeatureSchema& schema,
                            std::uint64_t seed) {
  if (!(beta >= 0.0)) throw std::invalid_argument("perturb_direction: beta must be >= 0");
  if (static_cast<std::size_t>(direction.vector.size()) != schema.encoded_dim()) {
    throw std::invalid_argument("perturb_direction: dimension mismatch");
  }
  const double magnitude = beta * direction.vector.norm();
  if (magnitude == 0.0) return direction;
  const auto mask = schema.continuous_mask();
  std::mt19937_64 rng(mix_seed(seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector noise = Vector::Zero(direction.vector.size());
  for (Eigen::Index i = 0; i < noise.size(); ++i) {
    if (mask[static_cast<std::size_t>(i)]) noise[i] = normal(rng);
  }
  const double norm = noise.norm();
  if (norm == 0.0) return direction;
  Direction out = direction;
  out.vector += noise * (magnitude / norm);
  return out;
}

std::uint64_t trial_seed(const ExperimentConfig& config, int trial) {
  return derive_seed(config.seed, {static_cast<std::uint64_t>(trial)});
}

TrialSetup prepare_trial(const ExperimentConfig& config, const RawTable& table, int trial) {
  TrialSetup setup;
  setup.trial = trial;
  setup.seed = trial_seed(config, trial);
  const FeatureSchema base = load_schema(config.schema);

  const SplitIndices split = split_indices(table.rows.size(), derive_seed(setup.seed, {1}),
                                           config.train_fraction, config.validation_fraction);
  if (split.train.empty() || split.test.empty()) {
    throw Error("dataset too small for a train/test split");
  }
  const RawTable train = subset(table, split.train);
  const RawTable test = subset(table, split.test);
  setup.schema = base.has_scaling() ? base : base.with_scaling(train.rows);

  Matrix train_points = encode_rows(setup.schema, train.rows);
  if (config.model.load) {
    setup.model = load_model(config.model.path);
  } else {
    if (!train.targets) {
      throw ConfigError("training needs the target column '" + setup.schema.target().name +
                        "' in " + config.csv.string());
    }
    LogisticTrainingOptions options = config.model.training;
    options.seed = derive_seed(setup.seed, {2});
    setup.model = train_logistic(train_points, *train.targets, options);
  }

  setup.dataset = make_dataset(setup.schema, std::move(train_points), train.ids, *setup.model,
                               config.threshold);

  if (config.method == Method::kStep) {
    const auto cluster_seed = derive_seed(setup.seed, {3});
    setup.clustering = config.clustering == ClusteringMode::kKMeans
                           ? kmeans_positive(setup.dataset, config.k, cluster_seed,
                                             config.kmeans_max_iters, config.kmeans_restarts)
                           : random_clustering(setup.dataset, config.k, cluster_seed);
    assign_clusters(setup.dataset, setup.clustering);
  } else {
    setup.face_graph =
        std::make_shared<const DatasetGraph>(setup.dataset.points, config.face_distance);
  }

  const Matrix test_points = encode_rows(setup.schema, test.rows);
  std::vector<Eigen::Index> chosen;
  for (Eigen::Index r = 0; r < test_points.rows(); ++r) {
    if (static_cast<int>(chosen.size()) >= config.poi_cap) break;
    if (setup.model->classify(test_points.row(r).transpose(), config.threshold) ==
        Label::kNegative) {
      chosen.push_back(r);
    }
  }
  setup.pois.resize(static_cast<Eigen::Index>(chosen.size()), test_points.cols());
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    setup.pois.row(static_cast<Eigen::Index>(i)) = test_points.row(chosen[i]);
    setup.poi_ids.push_back(test.ids[static_cast<std::size_t>(chosen[i])]);
  }
  return setup;
}

PathConfig path_config(const ExperimentConfig& config, std::uint64_t stream_seed) {
  PathConfig pc;
  pc.step_size = config.step_size;
  pc.max_iterations = config.max_iterations;
  pc.threshold = config.threshold;
  pc.privacy = config.privacy;
  pc.allow_unaudited_privacy = config.allow_unaudited_privacy;
  pc.stream_seed = stream_seed;
  return pc;
}

std::vector<RecoursePath> recourse_for(const ExperimentConfig& config, const TrialSetup& setup,
                                       const Vector& poi, std::uint64_t stream_seed) {
  if (config.method == Method::kFace) {
    const RecourseGraph graph(setup.face_graph, poi);
    return face_paths(graph, *setup.model, config.threshold, config.k,
                      config.face_max_path_nodes);
  }
  PathConfig pc = path_config(config, stream_seed);
  if (config.noise_beta > 0.0) {
    const FeatureSchema& schema = setup.schema;
    const double beta = config.noise_beta;
    pc.perturb = [&schema, beta, stream_seed](const Vector& d, int cluster, int iteration) {
      Direction dir{d, cluster, false};
      const auto seed = derive_seed(stream_seed, {0xB7E7AULL, static_cast<std::uint64_t>(cluster),
                                                  static_cast<std::uint64_t>(iteration)});
      return perturb_direction(dir, beta, schema, seed).vector;
    };
  }
  return generate_paths(poi, setup.dataset, setup.clustering, *setup.model, config.alpha, pc);
}

std::vector<PoiMetrics> run_trial(const ExperimentConfig& config, const RawTable& table,
                                  int trial) {
  const TrialSetup setup = prepare_trial(config, table, trial);
  const auto n = static_cast<std::size_t>(setup.pois.rows());
  if (n == 0) {
    throw Error("trial " + std::to_string(trial) +
                ": no negatively classified points in the test split");
  }
  std::vector<PoiMetrics> results(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      const Vector poi = setup.pois.row(static_cast<Eigen::Index>(i)).transpose();
      const auto stream = derive_seed(setup.seed, {4, static_cast<std::uint64_t>(i)});
      const auto paths = recourse_for(config, setup, poi, stream);
      results[i] = evaluate_poi(setup.poi_ids[i], trial, poi, paths);
    }
  };
  unsigned threads = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return results;
}

MetricsReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const RawTable table = read_table(config.csv, load_schema(config.schema));
  std::vector<PoiMetrics> all;
  for (int t = 0; t < config.trials; ++t) {
    auto trial = run_trial(config, table, t);
    all.insert(all.end(), std::make_move_iterator(trial.begin()),
               std::make_move_iterator(trial.end()));
  }
  MetricsReport report = aggregate(std::move(all), config.trials);
  report.config = config_to_json(config);
  return report;
}

std::vector<MetricsReport> sweep_noise(const ExperimentConfig& config,
                                       std::span<const double> betas) {
  std::vector<MetricsReport> reports;
  for (double beta : betas) {
    ExperimentConfig c = config;
    c.noise_beta = beta;
    reports.push_back(run_experiment(c));
  }
  return reports;
}

std::vector<MetricsReport> sweep_k(const ExperimentConfig& config, std::span<const int> ks) {
  std::vector<MetricsReport> reports;
  for (int k : ks) {
    ExperimentConfig c = config;
    c.k = k;
    reports.push_back(run_experiment(c));
  }
  return reports;
}

}  // namespace step
