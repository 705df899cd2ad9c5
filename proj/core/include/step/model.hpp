#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "step/types.hpp"

namespace step {

inline constexpr double kDefaultThreshold = 0.7;

// Black-box binary classifier over encoded, scaled points.
class Model {
 public:
  virtual ~Model() = default;

  // Probability-like score in [0, 1].
  virtual double confidence(const Vector& point) const = 0;

  // Inclusive at the threshold: confidence(p) >= t is positive.
  Label classify(const Vector& point, double threshold) const {
    return confidence(point) >= threshold ? Label::kPositive : Label::kNegative;
  }
};

using ModelHandle = std::shared_ptr<const Model>;

class LogisticModel final : public Model {
 public:
  LogisticModel(Vector weights, double bias, double threshold = kDefaultThreshold);

  double confidence(const Vector& point) const override;

  const Vector& weights() const { return weights_; }
  double bias() const { return bias_; }
  // Decision threshold the model was saved with; callers may override it.
  double threshold() const { return threshold_; }

 private:
  Vector weights_;
  double bias_;
  double threshold_;
};

// Answers by exact lookup of dataset rows; anything off the dataset gets
// `default_label`. Confidence is 0 or 1.
class LookupModel final : public Model {
 public:
  LookupModel(Matrix rows, std::map<std::size_t, Label> table, Label default_label);

  double confidence(const Vector& point) const override;
  Label label_of_row(std::size_t row) const;

 private:
  Matrix rows_;
  std::map<std::size_t, Label> table_;
  Label default_label_;
};

struct LogisticTrainingOptions {
  int epochs = 500;
  double learning_rate = 0.5;
  double l2_penalty = 1e-3;
  // Full-batch descent from zero weights does not consume randomness; the
  // seed is carried so training records are self-describing.
  std::uint64_t seed = 0;
};

// Value and gradient of the mean log-loss plus (l2/2)*|w|^2.
struct LogisticLoss {
  double value = 0.0;
  Vector grad_weights;
  double grad_bias = 0.0;
};

LogisticLoss logistic_loss(const Matrix& features, std::span<const int> targets,
                           const Vector& weights, double bias, double l2_penalty);

// Throws std::invalid_argument on fewer than two rows, a single class, or
// non-finite features.
std::shared_ptr<const LogisticModel> train_logistic(const Matrix& features,
                                                    std::span<const int> targets,
                                                    const LogisticTrainingOptions& options);

std::vector<Label> classify_batch(const Model& model, const Matrix& points,
                                  double threshold = kDefaultThreshold);

nlohmann::json model_to_json(const LogisticModel& model);
std::shared_ptr<const LogisticModel> model_from_json(const nlohmann::json& doc);
std::shared_ptr<const LogisticModel> load_model(const std::filesystem::path& path);
void save_model(const LogisticModel& model, const std::filesystem::path& path);

}  // namespace step
