#include "step/model.hpp"

#include <cmath>
#include <fstream>
#include <span>
#include <stdexcept>

namespace step {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

LogisticModel::LogisticModel(Vector weights, double bias, double threshold)
    : weights_(std::move(weights)), bias_(bias), threshold_(threshold) {
  if (!weights_.allFinite() || !std::isfinite(bias_)) {
    throw std::invalid_argument("LogisticModel: non-finite parameters");
  }
  if (!(threshold_ > 0.0 && threshold_ < 1.0)) {
    throw std::invalid_argument("LogisticModel: threshold must lie in (0, 1)");
  }
}

double LogisticModel::confidence(const Vector& point) const {
  if (point.size() != weights_.size()) {
    throw std::invalid_argument("LogisticModel: point has dimension " +
                                std::to_string(point.size()) + ", model expects " +
                                std::to_string(weights_.size()));
  }
  return sigmoid(weights_.dot(point) + bias_);
}

LookupModel::LookupModel(Matrix rows, std::map<std::size_t, Label> table, Label default_label)
    : rows_(std::move(rows)), table_(std::move(table)), default_label_(default_label) {
  for (const auto& [row, label] : table_) {
    if (row >= static_cast<std::size_t>(rows_.rows())) {
      throw std::invalid_argument("LookupModel: table row out of range");
    }
  }
}

Label LookupModel::label_of_row(std::size_t row) const {
  auto it = table_.find(row);
  return it == table_.end() ? default_label_ : it->second;
}

double LookupModel::confidence(const Vector& point) const {
  Label label = default_label_;
  if (point.size() == rows_.cols()) {
    for (Eigen::Index r = 0; r < rows_.rows(); ++r) {
      if (rows_.row(r).transpose() == point) {
        label = label_of_row(static_cast<std::size_t>(r));
        break;
      }
    }
  }
  return label == Label::kPositive ? 1.0 : 0.0;
}

LogisticLoss logistic_loss(const Matrix& features, std::span<const int> targets,
                           const Vector& weights, double bias, double l2_penalty) {
  const auto n = features.rows();
  if (static_cast<std::size_t>(n) != targets.size()) {
    throw std::invalid_argument("logistic_loss: row/target count mismatch");
  }
  LogisticLoss loss;
  loss.grad_weights = Vector::Zero(features.cols());
  const Vector logits = (features * weights).array() + bias;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = logits[i];
    const double y = targets[static_cast<std::size_t>(i)];
    // log(1 + e^z) computed without overflow.
    const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    loss.value += softplus - y * z;
    const double residual = sigmoid(z) - y;
    loss.grad_weights += residual * features.row(i).transpose();
    loss.grad_bias += residual;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  loss.value = loss.value * inv_n + 0.5 * l2_penalty * weights.squaredNorm();
  loss.grad_weights = loss.grad_weights * inv_n + l2_penalty * weights;
  loss.grad_bias *= inv_n;
  return loss;
}

std::shared_ptr<const LogisticModel> train_logistic(const Matrix& features,
                                                    std::span<const int> targets,
                                                    const LogisticTrainingOptions& options) {
  if (features.rows() < 2) throw std::invalid_argument("train_logistic: need at least 2 rows");
  if (static_cast<std::size_t>(features.rows()) != targets.size()) {
    throw std::invalid_argument("train_logistic: row/target count mismatch");
  }
  if (!features.allFinite()) throw std::invalid_argument("train_logistic: non-finite features");
  bool seen[2] = {false, false};
  for (int t : targets) {
    if (t != 0 && t != 1) throw std::invalid_argument("train_logistic: targets must be 0/1");
    seen[t] = true;
  }
  if (!seen[0] || !seen[1]) {
    throw std::invalid_argument("train_logistic: targets contain a single class");
  }
  if (options.epochs < 0) throw std::invalid_argument("train_logistic: negative epochs");

  Vector weights = Vector::Zero(features.cols());
  double bias = 0.0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const auto loss = logistic_loss(features, targets, weights, bias, options.l2_penalty);
    weights -= options.learning_rate * loss.grad_weights;
    bias -= options.learning_rate * loss.grad_bias;
  }
  return std::make_shared<const LogisticModel>(std::move(weights), bias);
}

std::vector<Label> classify_batch(const Model& model, const Matrix& points, double threshold) {
  std::vector<Label> labels;
  labels.reserve(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    labels.push_back(model.classify(points.row(r).transpose(), threshold));
  }
  return labels;
}

nlohmann::json model_to_json(const LogisticModel& model) {
  return {{"weights", std::vector<double>(model.weights().begin(), model.weights().end())},
          {"bias", model.bias()},
          {"threshold", model.threshold()}};
}

std::shared_ptr<const LogisticModel> model_from_json(const nlohmann::json& doc) {
  try {
    const auto w = doc.at("weights").get<std::vector<double>>();
    Vector weights = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
    return std::make_shared<const LogisticModel>(std::move(weights), doc.at("bias").get<double>(),
                                                 doc.value("threshold", kDefaultThreshold));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model document: ") + e.what());
  }
}

std::shared_ptr<const LogisticModel> load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("model file " + path.string() + " is not valid JSON: " + e.what());
  }
  return model_from_json(doc);
}

void save_model(const LogisticModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model file: " + path.string());
  out << model_to_json(model).dump(2) << '\n';
}

}  // namespace step
