#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <vector>

namespace cardopt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using IndexSet = std::vector<int>;

inline bool is_finite(const Vec& v) { return v.allFinite(); }
inline bool is_finite(const Mat& m) { return m.allFinite(); }

inline double inf_norm(const Vec& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

/// Max coefficient of a vector, 0 for an empty one.
inline double max_or_zero(const Vec& v) {
  return v.size() == 0 ? 0.0 : v.maxCoeff();
}

inline Mat symmetrized(const Mat& m) { return 0.5 * (m + m.transpose()); }

inline bool contains(const IndexSet& s, int i) {
  return std::find(s.begin(), s.end(), i) != s.end();
}

/// Orthonormal basis of the null space of A (empty A means full space).
/// Columns of the result span {d : A d = 0}.
inline Mat null_space_basis(const Mat& a, int dim) {
  if (a.rows() == 0) return Mat::Identity(dim, dim);
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double smax = sv.size() > 0 ? sv(0) : 0.0;
  double tol = 1e-12 * std::max(1.0, smax) * std::max<Eigen::Index>(a.rows(), a.cols());
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  return svd.matrixV().rightCols(dim - rank);
}

/// Smallest singular value of A; 0 for a matrix without rows.
inline double smallest_singular_value(const Mat& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues().minCoeff();
}

/// xorshift-based deterministic RNG kept bit-stable across platforms.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller.
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 1e-300) u1 = next_uniform();
    double u2 = next_uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  Vec gaussian_vector(int n) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = next_gaussian();
    return v;
  }

  Vec uniform_vector(int n, double lo, double hi) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = lo + (hi - lo) * next_uniform();
    return v;
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cardopt
