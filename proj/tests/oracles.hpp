#pragma once

// Independent reference implementations used to freeze expected values.
// Everything here is deliberately naive (loops, enumeration, finite
// differences) and shares no code with the library paths it checks.

#include <cmath>
#include <optional>
#include <vector>

#include "patchsim/types.hpp"

namespace oracle {

using patchsim::Mat3;
using patchsim::MatX;
using patchsim::Quat;
using patchsim::Vec3;
using patchsim::VecX;

/// Plain triple-loop 3x3 product A * B.
inline Mat3 mat3_product(const Mat3& A, const Mat3& B) {
  Mat3 C = Mat3::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) C(i, j) += A(i, k) * B(k, j);
  return C;
}

/// Gaussian elimination with partial pivoting.
inline VecX gauss_solve(MatX A, VecX b) {
  const int n = int(b.size());
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(A(r, col)) > std::abs(A(piv, col))) piv = r;
    }
    A.row(col).swap(A.row(piv));
    std::swap(b[col], b[piv]);
    for (int r = col + 1; r < n; ++r) {
      const double f = A(r, col) / A(col, col);
      A.row(r) -= f * A.row(col);
      b[r] -= f * b[col];
    }
  }
  VecX x = VecX::Zero(n);
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < n; ++c) s -= A(r, c) * x[c];
    x[r] = s / A(r, r);
  }
  return x;
}

/// Rotation angle recovered from the quaternion logarithm.
inline double quat_log_angle(const Quat& q) {
  const double v = std::sqrt(q.x() * q.x() + q.y() * q.y() + q.z() * q.z());
  return 2.0 * std::atan2(v, std::abs(q.w()));
}

/// Exhaustive active-set enumeration for small LCPs: for every subset S,
/// solve A_SS x = -b_S and keep the first subset satisfying the sign
/// conditions. Exact for nondegenerate problems of size <= ~12.
inline std::optional<VecX> lcp_enumerate(const MatX& A, const VecX& b, double tol = 1e-9) {
  const int n = int(b.size());
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    std::vector<int> S;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) S.push_back(i);
    }
    VecX lambda = VecX::Zero(n);
    if (!S.empty()) {
      MatX As(S.size(), S.size());
      VecX bs(S.size());
      for (std::size_t r = 0; r < S.size(); ++r) {
        bs[int(r)] = -b[S[r]];
        for (std::size_t c = 0; c < S.size(); ++c) As(int(r), int(c)) = A(S[r], S[c]);
      }
      const VecX xs = gauss_solve(As, bs);
      if (!xs.allFinite()) continue;
      for (std::size_t r = 0; r < S.size(); ++r) lambda[S[r]] = xs[int(r)];
    }
    bool ok = true;
    const VecX w = A * lambda + b;
    for (int i = 0; i < n; ++i) {
      if (lambda[i] < -tol || w[i] < -tol) {
        ok = false;
        break;
      }
    }
    if (ok) return lambda;
  }
  return std::nullopt;
}

/// Triangle area from the exact cross product.
inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

/// Token-level edit distance, quadratic reference.
inline int levenshtein(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<int>> d(a.size() + 1, std::vector<int>(b.size() + 1, 0));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = int(i);
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = int(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
  }
  return d[a.size()][b.size()];
}

}  // namespace oracle
