#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace patchsim {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using VecX = Eigen::VectorXd;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat36 = Eigen::Matrix<double, 3, 6>;
using MatX = Eigen::MatrixXd;
using Quat = Eigen::Quaterniond;

inline constexpr double kGravity = 9.81;        // m/s^2, acts along -y
inline constexpr double kDefaultTimeStep = 0.002; // s
inline constexpr double kPenetrationTol = 1e-4; // m, contact activation band
inline constexpr double kGeomTol = 1e-6;        // m, point/line collapse threshold

/// Raised when a linear solve or pivoting method cannot proceed
/// (singular mass matrix, LCP pivot failure, Lemke ray termination).
struct SolverError : std::runtime_error {
  explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised when a simulation reaches an invalid state (deep penetration,
/// non-finite velocity) or a solver inside the loop gives up.
struct SimulationError : std::runtime_error {
  explicit SimulationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised on malformed inputs: bad files, dimension mismatches,
/// degenerate datasets.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

/// Quaternion exponential map: rotation by angle |w| about axis w/|w|.
inline Quat quat_exp(const Vec3& w) {
  const double angle = w.norm();
  if (angle < 1e-14) {
    // First-order expansion keeps the map smooth through zero.
    Quat q(1.0, 0.5 * w.x(), 0.5 * w.y(), 0.5 * w.z());
    q.normalize();
    return q;
  }
  const Vec3 axis = w / angle;
  return Quat(Eigen::AngleAxisd(angle, axis));
}

/// Rotation angle of a unit quaternion, in [0, pi].
inline double quat_angle(const Quat& q) {
  const double s = std::min(1.0, std::abs(q.w()));
  return 2.0 * std::acos(s);
}

inline bool finite(const Eigen::Ref<const VecX>& v) {
  return v.allFinite();
}

}  // namespace patchsim
