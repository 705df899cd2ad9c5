#pragma once

#include <span>

#include "step/alpha.hpp"
#include "step/model.hpp"
#include "step/schema.hpp"
#include "step/types.hpp"

namespace step {

struct Direction {
  Vector vector;
  int cluster_id = 0;
  bool privatized = false;
};

// Sum over rows x' of `points` labelled positive of
//   (x' - poi) * alpha(|x' - poi|_2),
// accumulated in row order. Rows labelled negative contribute nothing, and
// an empty or all-negative set yields the zero vector. Throws
// std::invalid_argument on non-finite input or mismatched sizes.
Vector step_direction(const Vector& poi, const Matrix& points, std::span<const Label> labels,
                      const AlphaFunction& alpha);

// Labels the rows with `model` at `threshold` first. The model is only ever
// queried on rows of `points`.
Vector step_direction(const Vector& poi, const Matrix& points, const Model& model,
                      const AlphaFunction& alpha, double threshold);

// Restricted to the rows listed in `members`.
Vector step_direction(const Vector& poi, const Matrix& points, std::span<const Label> labels,
                      std::span<const std::size_t> members, const AlphaFunction& alpha);

// Rescales `direction` to length `step_size`, adds it to `poi` and projects
// the result onto the actionable set. Throws std::invalid_argument on a zero
// (or non-finite) direction.
Vector apply_step(const Vector& poi, const Vector& direction, const FeatureSchema& schema,
                  double step_size = 1.0);

}  // namespace step
