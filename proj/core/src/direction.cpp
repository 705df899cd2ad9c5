#include "step/direction.hpp"

#include <stdexcept>

namespace step {

namespace {

void check_inputs(const Vector& poi, const Matrix& points, std::size_t label_count) {
  if (points.rows() > 0 && points.cols() != poi.size()) {
    throw std::invalid_argument("step_direction: point dimension mismatch");
  }
  if (label_count != static_cast<std::size_t>(points.rows())) {
    throw std::invalid_argument("step_direction: label count does not match row count");
  }
  if (!poi.allFinite() || !points.allFinite()) {
    throw std::invalid_argument("step_direction: non-finite input");
  }
}

void accumulate(Vector& sum, const Vector& poi, const Matrix& points, Eigen::Index row,
                const AlphaFunction& alpha) {
  const Vector offset = points.row(row).transpose() - poi;
  sum += offset * alpha(offset.norm());
}

}  // namespace

Vector step_direction(const Vector& poi, const Matrix& points, std::span<const Label> labels,
                      const AlphaFunction& alpha) {
  check_inputs(poi, points, labels.size());
  Vector sum = Vector::Zero(poi.size());
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    if (labels[static_cast<std::size_t>(r)] == Label::kPositive) {
      accumulate(sum, poi, points, r, alpha);
    }
  }
  return sum;
}

Vector step_direction(const Vector& poi, const Matrix& points, const Model& model,
                      const AlphaFunction& alpha, double threshold) {
  const auto labels = classify_batch(model, points, threshold);
  return step_direction(poi, points, labels, alpha);
}

Vector step_direction(const Vector& poi, const Matrix& points, std::span<const Label> labels,
                      std::span<const std::size_t> members, const AlphaFunction& alpha) {
  check_inputs(poi, points, labels.size());
  Vector sum = Vector::Zero(poi.size());
  for (std::size_t i : members) {
    if (i >= labels.size()) throw std::invalid_argument("step_direction: member out of range");
    if (labels[i] == Label::kPositive) {
      accumulate(sum, poi, points, static_cast<Eigen::Index>(i), alpha);
    }
  }
  return sum;
}

Vector apply_step(const Vector& poi, const Vector& direction, const FeatureSchema& schema,
                  double step_size) {
  if (direction.size() != poi.size()) {
    throw std::invalid_argument("apply_step: dimension mismatch");
  }
  const double norm = direction.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw std::invalid_argument("apply_step: zero direction, no recourse from this cluster");
  }
  if (!(step_size > 0.0)) throw std::invalid_argument("apply_step: step size must be positive");
  const Vector proposed = poi + (direction / norm) * step_size;
  return project_constraints(poi, proposed, schema);
}

}  // namespace step
