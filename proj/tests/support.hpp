#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "step/alpha.hpp"
#include "step/schema.hpp"
#include "step/types.hpp"

namespace step::testing {

inline Matrix random_matrix(std::mt19937_64& rng, int rows, int cols, double lo = -3.0,
                            double hi = 3.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = u(rng);
  }
  return m;
}

inline Vector random_vector(std::mt19937_64& rng, int n, double lo = -3.0, double hi = 3.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

inline std::vector<Label> random_labels(std::mt19937_64& rng, int n, double positive_rate = 0.6) {
  std::bernoulli_distribution b(positive_rate);
  std::vector<Label> labels(static_cast<std::size_t>(n));
  for (auto& l : labels) l = b(rng) ? Label::kPositive : Label::kNegative;
  return labels;
}

// Orthogonal matrix from the QR factorization of a Gaussian matrix; the sign
// fix makes the distribution uniform over O(n).
inline Matrix random_orthogonal(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  return q;
}

// Closed-form weights written out independently of the library.
inline double volcano_weight(double z, double degree, double cutoff) {
  return z > cutoff ? 1.0 / std::pow(z, degree) : 1.0 / std::pow(cutoff, degree);
}

inline double sloped_weight(double z, double width) {
  return std::exp(-0.5 * (z / width) * (z / width));
}

// Term-by-term direction with plain loops.
template <typename Weight>
std::vector<double> naive_direction(const std::vector<double>& poi,
                                    const std::vector<std::vector<double>>& rows,
                                    const std::vector<int>& labels, Weight weight) {
  std::vector<double> d(poi.size(), 0.0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (labels[r] != 1) continue;
    double sq = 0.0;
    for (std::size_t j = 0; j < poi.size(); ++j) sq += (rows[r][j] - poi[j]) * (rows[r][j] - poi[j]);
    const double w = weight(std::sqrt(sq));
    for (std::size_t j = 0; j < poi.size(); ++j) d[j] += (rows[r][j] - poi[j]) * w;
  }
  return d;
}

inline double relative_error(const Vector& a, const Vector& b) {
  const double scale = std::max({1.0, a.norm(), b.norm()});
  return (a - b).norm() / scale;
}

inline FeatureSpec continuous_feature(std::string name) {
  FeatureSpec f;
  f.name = std::move(name);
  return f;
}

inline FeatureSchema continuous_schema(int dims, Mutability mutability = Mutability::kFree) {
  std::vector<FeatureSpec> specs;
  for (int i = 0; i < dims; ++i) {
    FeatureSpec f;
    f.name = "x" + std::to_string(i + 1);
    f.mutability = mutability;
    specs.push_back(f);
  }
  return FeatureSchema(std::move(specs), TargetSpec{"y", "1"});
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("step_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path write(const std::string& name, const std::string& text) const {
    const auto p = path_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }

 private:
  std::filesystem::path path_;
};

// Two Gaussian blobs in 2D labelled by blob, written as a CSV plus schema.
inline std::string blob_csv(std::uint64_t seed, int n, double separation = 1.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::string out = "x1,x2,y\n";
  for (int i = 0; i < n; ++i) {
    const bool positive = i % 2 == 0;
    const double c = positive ? separation : -separation;
    out += std::to_string(c + g(rng)) + "," + std::to_string(c + g(rng)) + "," +
           (positive ? "1" : "0") + "\n";
  }
  return out;
}

inline const char* kBlobSchema = R"({
  "features": [
    {"name": "x1", "kind": "continuous", "mutability": "free"},
    {"name": "x2", "kind": "continuous", "mutability": "free"}
  ],
  "target": {"name": "y", "positive_value": 1}
})";

}  // namespace step::testing
