#pragma once

#include <cstdint>

#include <nlohmann/json.hpp>

#include "step/alpha.hpp"
#include "step/direction.hpp"

namespace step {

// kStandard calibrates the Gaussian mechanism linearly in the l2
// sensitivity. kSquaredSensitivity squares the sensitivity bound instead; it is
// kept for side-by-side comparison only.
enum class SigmaMode { kStandard, kSquaredSensitivity };

struct PrivacyBudget {
  double epsilon = 0.0;
  double delta = 0.0;
};

struct PrivacyParams {
  double epsilon = 1.0;
  double delta = 1e-5;
  double sensitivity_bound = 1.0;  // C, with alpha(z) <= C / z
  double sigma = 0.0;
  std::uint64_t seed = 0;
  SigmaMode mode = SigmaMode::kStandard;
};

// sqrt(2 ln(1.25 / delta)) * sensitivity / epsilon in standard mode;
// sqrt(2 ln(1.25 / delta)) * sensitivity^2 / epsilon in squared-sensitivity mode.
// Throws std::invalid_argument unless epsilon > 0, 0 < delta < 1 and
// sensitivity >= 0.
double required_sigma(double epsilon, double delta, double sensitivity,
                      SigmaMode mode = SigmaMode::kStandard);

// Params with sigma set to the required minimum.
PrivacyParams make_privacy_params(double epsilon, double delta, double sensitivity_bound,
                                  SigmaMode mode = SigmaMode::kStandard, std::uint64_t seed = 0);

// Adds i.i.d. N(0, sigma^2) noise to every coordinate and sets the
// privatized flag. Throws std::invalid_argument for negative sigma.
Direction privatize_direction(const Direction& direction, double sigma, std::uint64_t seed);

// Basic composition: k releases cost (k * epsilon, k * delta).
PrivacyBudget compose_budget(PrivacyBudget per_direction, int k);

// {"epsilon":…, "delta":…, "C":…, "mode":"standard"|"squared_sensitivity", "seed"?}
PrivacyParams privacy_from_json(const nlohmann::json& doc);
nlohmann::json privacy_to_json(const PrivacyParams& params);

}  // namespace step
