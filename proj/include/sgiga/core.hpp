#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sgiga {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat32 = Eigen::Matrix<double, 3, 2>;

/// Thrown on violated preconditions that indicate a caller bug rather than
/// a data problem (points outside the reference domain, asymmetric metric
/// tensors, mismatched interface points, ...).
class invalid_input : public std::runtime_error {
public:
    explicit invalid_input(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr double point_tol = 1e-12;

inline double sq(double x) { return x * x; }

} // namespace sgiga
