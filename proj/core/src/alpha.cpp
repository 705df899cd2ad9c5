#include "step/alpha.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "step/types.hpp"

namespace step {

AlphaFunction::AlphaFunction(Volcano v) : shape_(v) {
  if (!(v.degree >= 0.0) || !(v.cutoff > 0.0)) {
    throw std::invalid_argument("volcano alpha needs degree >= 0 and cutoff > 0");
  }
}

AlphaFunction::AlphaFunction(Sloped s) : shape_(s) {
  if (!(s.width > 0.0)) throw std::invalid_argument("sloped alpha needs width > 0");
}

double AlphaFunction::operator()(double z) const {
  double value = 0.0;
  if (const auto* v = std::get_if<Volcano>(&shape_)) {
    value = z > v->cutoff ? 1.0 / std::pow(z, v->degree) : 1.0 / std::pow(v->cutoff, v->degree);
  } else {
    const auto& s = std::get<Sloped>(shape_);
    const double r = z / s.width;
    value = std::exp(-0.5 * r * r);
  }
  if (cap_ && z > 0.0) value = std::min(value, *cap_ / z);
  return value;
}

AlphaFunction bounded_alpha(const AlphaFunction& base, double cap) {
  if (!(cap > 0.0) || !std::isfinite(cap)) {
    throw std::invalid_argument("bounded_alpha: cap must be positive and finite");
  }
  AlphaFunction out = base;
  out.cap_ = base.cap_ ? std::min(*base.cap_, cap) : cap;
  return out;
}

double alpha_eval(const AlphaFunction& alpha, double z) {
  if (!(z >= 0.0)) throw std::invalid_argument("alpha_eval: distance must be non-negative");
  return alpha(z);
}

AlphaFunction alpha_from_json(const nlohmann::json& doc) {
  try {
    const auto kind = doc.value("kind", std::string("volcano"));
    AlphaFunction alpha;
    if (kind == "volcano") {
      alpha = AlphaFunction::volcano(doc.value("degree", 2.0), doc.value("cutoff", 0.5));
    } else if (kind == "sloped") {
      alpha = AlphaFunction::sloped(doc.value("width", 1.0));
    } else {
      throw ConfigError("unknown alpha kind '" + kind + "'");
    }
    if (doc.contains("cap")) alpha = bounded_alpha(alpha, doc.at("cap").get<double>());
    return alpha;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed alpha spec: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

nlohmann::json alpha_to_json(const AlphaFunction& alpha) {
  nlohmann::json doc;
  if (const auto* v = std::get_if<Volcano>(&alpha.shape())) {
    doc = {{"kind", "volcano"}, {"degree", v->degree}, {"cutoff", v->cutoff}};
  } else {
    doc = {{"kind", "sloped"}, {"width", std::get<Sloped>(alpha.shape()).width}};
  }
  if (alpha.cap()) doc["cap"] = *alpha.cap();
  return doc;
}

}  // namespace step
