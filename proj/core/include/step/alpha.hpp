#pragma once

#include <optional>
#include <variant>

#include <nlohmann/json.hpp>

namespace step {

// 1/z^degree outside the cutoff, flat 1/cutoff^degree inside it.
struct Volcano {
  double degree = 2.0;
  double cutoff = 0.5;
};

// exp(-(z/width)^2 / 2).
struct Sloped {
  double width = 1.0;
};

// Non-negative, non-increasing distance weight. An optional cap C replaces
// the value by min(base(z), C/z), which bounds every single-point
// contribution (x' - x) * alpha(|x' - x|) to norm C.
class AlphaFunction {
 public:
  AlphaFunction() = default;
  AlphaFunction(Volcano v);  // NOLINT(google-explicit-constructor)
  AlphaFunction(Sloped s);   // NOLINT(google-explicit-constructor)

  static AlphaFunction volcano(double degree, double cutoff) { return Volcano{degree, cutoff}; }
  static AlphaFunction sloped(double width) { return Sloped{width}; }

  double operator()(double z) const;

  const std::variant<Volcano, Sloped>& shape() const { return shape_; }
  const std::optional<double>& cap() const { return cap_; }

  friend AlphaFunction bounded_alpha(const AlphaFunction& base, double cap);

 private:
  std::variant<Volcano, Sloped> shape_ = Volcano{};
  std::optional<double> cap_;
};

// z -> min(base(z), cap / z). Throws std::invalid_argument unless cap > 0.
AlphaFunction bounded_alpha(const AlphaFunction& base, double cap);

// Same as alpha(z); throws std::invalid_argument for negative z.
double alpha_eval(const AlphaFunction& alpha, double z);

// {"kind":"volcano","degree":2,"cutoff":0.5} or {"kind":"sloped","width":1},
// with an optional "cap".
AlphaFunction alpha_from_json(const nlohmann::json& doc);
nlohmann::json alpha_to_json(const AlphaFunction& alpha);

}  // namespace step
