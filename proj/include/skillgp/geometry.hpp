#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "skillgp/errors.hpp"

namespace skillgp::geometry {

/// Which of the two tracked rigid bodies a pose sample belongs to.
enum class Device { Endoscope, Instrument };

inline std::string to_string(Device d) {
  return d == Device::Endoscope ? "endoscope" : "instrument";
}

/// One time-stamped rigid pose reported by the tracker, in the fixed world
/// frame. Positions are millimetres, timestamps seconds. `valid` is false
/// for samples the tracker emitted while the line of sight was lost; such
/// rows carry the last known pose and must not be used for estimation.
struct PoseSample {
  double t = 0.0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
  Device device = Device::Instrument;
  bool valid = true;
};

/// World-frame unit vector pointing toward the top of the patient's head.
/// It anchors the roll of the scope-local frame so that "up" is anatomically
/// meaningful. Normalized on construction; a zero or non-finite input throws.
class CranialVector {
 public:
  explicit CranialVector(const Eigen::Vector3d& direction);

  const Eigen::Vector3d& direction() const { return direction_; }

 private:
  Eigen::Vector3d direction_;
};

/// Orthonormal local frame anchored at the endoscope tip. The rows of
/// `rotation` are the local axes expressed in world coordinates, so
/// `rotation * v_world` gives local coordinates directly:
///   X: along the scope shaft, from tip toward handle (the viewing
///      direction is therefore -X),
///   Z: cranial direction made orthogonal to X,
///   Y: Z x X, completing the right-handed triad.
struct EndoscopeFrame {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();

  Eigen::Vector3d axis_x() const { return rotation.row(0).transpose(); }
  Eigen::Vector3d axis_y() const { return rotation.row(1).transpose(); }
  Eigen::Vector3d axis_z() const { return rotation.row(2).transpose(); }
  Eigen::Vector3d viewing_direction() const { return -axis_x(); }
};

/// Builds the scope-local frame from the tip position, the unit direction
/// from tip toward handle, and the cranial reference. Throws DegenerateFrame
/// when the cranial direction is parallel to the scope axis (the roll of the
/// frame would be undefined); callers should skip such samples.
EndoscopeFrame build_endoscope_frame(const Eigen::Vector3d& scope_tip,
                                     const Eigen::Vector3d& scope_handle_dir,
                                     const CranialVector& cranial);

/// World point -> local coordinates (rotate and translate).
Eigen::Vector3d project_point(const EndoscopeFrame& frame,
                              const Eigen::Vector3d& p_world);

/// Inverse of project_point.
Eigen::Vector3d unproject_point(const EndoscopeFrame& frame,
                                const Eigen::Vector3d& p_local);

/// World direction -> local coordinates (rotate only; for velocities and
/// axes, which have no origin).
Eigen::Vector3d project_vector(const EndoscopeFrame& frame,
                               const Eigen::Vector3d& v_world);

/// Unit direction of the instrument shaft expressed in the scope-local
/// frame. `shaft_axis_body` is the body-frame axis that points along the
/// shaft from handle toward tip (+Z for the devices we track).
Eigen::Vector3d instrument_direction_local(const EndoscopeFrame& frame,
                                           const Eigen::Quaterniond& instrument_orientation,
                                           const Eigen::Vector3d& shaft_axis_body = Eigen::Vector3d::UnitZ());

}  // namespace skillgp::geometry
