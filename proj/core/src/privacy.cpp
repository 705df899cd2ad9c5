#include "step/privacy.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "step/random.hpp"

namespace step {

double required_sigma(double epsilon, double delta, double sensitivity, SigmaMode mode) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("required_sigma: epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("required_sigma: delta must lie in (0, 1)");
  }
  if (!(sensitivity >= 0.0)) {
    throw std::invalid_argument("required_sigma: sensitivity must be non-negative");
  }
  const double beta = std::sqrt(2.0 * std::log(1.25 / delta));
  const double scale = mode == SigmaMode::kStandard ? sensitivity : sensitivity * sensitivity;
  return beta * scale / epsilon;
}

PrivacyParams make_privacy_params(double epsilon, double delta, double sensitivity_bound,
                                  SigmaMode mode, std::uint64_t seed) {
  if (!(sensitivity_bound > 0.0)) {
    throw std::invalid_argument("privacy: sensitivity bound C must be positive");
  }
  PrivacyParams p;
  p.epsilon = epsilon;
  p.delta = delta;
  p.sensitivity_bound = sensitivity_bound;
  p.sigma = required_sigma(epsilon, delta, sensitivity_bound, mode);
  p.seed = seed;
  p.mode = mode;
  return p;
}

Direction privatize_direction(const Direction& direction, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("privatize_direction: sigma must be >= 0");
  Direction out = direction;
  out.privatized = true;
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(mix_seed(seed));
  std::normal_distribution<double> noise(0.0, sigma);
  for (Eigen::Index i = 0; i < out.vector.size(); ++i) out.vector[i] += noise(rng);
  return out;
}

PrivacyBudget compose_budget(PrivacyBudget per_direction, int k) {
  if (k < 1) throw std::invalid_argument("compose_budget: k must be at least 1");
  return {k * per_direction.epsilon, k * per_direction.delta};
}

PrivacyParams privacy_from_json(const nlohmann::json& doc) {
  try {
    const auto mode_name = doc.value("mode", std::string("standard"));
    SigmaMode mode = SigmaMode::kStandard;
    if (mode_name == "squared_sensitivity") {
      mode = SigmaMode::kSquaredSensitivity;
    } else if (mode_name != "standard") {
      throw ConfigError("unknown privacy mode '" + mode_name + "'");
    }
    return make_privacy_params(doc.at("epsilon").get<double>(), doc.at("delta").get<double>(),
                               doc.at("C").get<double>(), mode, doc.value("seed", 0ULL));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed privacy spec: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

nlohmann::json privacy_to_json(const PrivacyParams& p) {
  return {{"epsilon", p.epsilon},
          {"delta", p.delta},
          {"C", p.sensitivity_bound},
          {"sigma", p.sigma},
          {"seed", p.seed},
          {"mode", p.mode == SigmaMode::kStandard ? "standard" : "squared_sensitivity"}};
}

}  // namespace step
