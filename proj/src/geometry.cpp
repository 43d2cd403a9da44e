#include "skillgp/geometry.hpp"

#include <cmath>

namespace skillgp::geometry {

namespace {

// Tolerance below which the cranial direction counts as parallel to the
// scope axis: |1 - |cranial . axis|| <= kParallelTol.
constexpr double kParallelTol = 1e-6;

// Scope handle direction must arrive normalized to within this.
constexpr double kUnitTol = 1e-6;

}  // namespace

CranialVector::CranialVector(const Eigen::Vector3d& direction) {
  const double norm = direction.norm();
  if (!std::isfinite(norm) || norm <= 0.0) {
    throw Error("cranial direction must be a finite non-zero vector");
  }
  direction_ = direction / norm;
}

EndoscopeFrame build_endoscope_frame(const Eigen::Vector3d& scope_tip,
                                     const Eigen::Vector3d& scope_handle_dir,
                                     const CranialVector& cranial) {
  if (std::abs(scope_handle_dir.norm() - 1.0) > kUnitTol) {
    throw Error("scope handle direction must be unit length");
  }

  const Eigen::Vector3d x = scope_handle_dir.normalized();
  const Eigen::Vector3d& c = cranial.direction();

  // Gram-Schmidt: remove the component of the cranial direction along the
  // scope axis. When the two are (anti)parallel nothing is left and the
  // roll of the frame is undefined.
  if (std::abs(1.0 - std::abs(c.dot(x))) <= kParallelTol) {
    throw DegenerateFrame("cranial direction is parallel to the scope axis");
  }
  const Eigen::Vector3d z = (c - c.dot(x) * x).normalized();
  const Eigen::Vector3d y = z.cross(x);

  EndoscopeFrame frame;
  frame.origin = scope_tip;
  frame.rotation.row(0) = x.transpose();
  frame.rotation.row(1) = y.transpose();
  frame.rotation.row(2) = z.transpose();
  return frame;
}

Eigen::Vector3d project_point(const EndoscopeFrame& frame,
                              const Eigen::Vector3d& p_world) {
  return frame.rotation * (p_world - frame.origin);
}

Eigen::Vector3d unproject_point(const EndoscopeFrame& frame,
                                const Eigen::Vector3d& p_local) {
  return frame.rotation.transpose() * p_local + frame.origin;
}

Eigen::Vector3d project_vector(const EndoscopeFrame& frame,
                               const Eigen::Vector3d& v_world) {
  return frame.rotation * v_world;
}

Eigen::Vector3d instrument_direction_local(const EndoscopeFrame& frame,
                                           const Eigen::Quaterniond& instrument_orientation,
                                           const Eigen::Vector3d& shaft_axis_body) {
  const Eigen::Vector3d dir_world =
      instrument_orientation.normalized() * shaft_axis_body;
  return (frame.rotation * dir_world).normalized();
}

}  // namespace skillgp::geometry
