#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>
#include <vector>

#include "skillgp/errors.hpp"

namespace skillgp::kinematics {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

/// Noise model of the constant-velocity filter. Observation noise is the
/// tracker's positional jitter; process noise is how much the velocity is
/// allowed to drift per unit time (discrete white-noise acceleration).
struct NoiseConfig {
  double sigma_pos_obs = 0.3;     // mm
  double sigma_speed_proc = 1.0;  // mm/s

  void validate() const {
    if (!(sigma_pos_obs > 0.0) || !(sigma_speed_proc > 0.0)) {
      throw InvalidConfig("filter noise parameters must be strictly positive");
    }
  }
};

/// Filter state: stacked position (mm) and velocity (mm/s) with covariance.
struct KinematicState {
  double t = 0.0;
  Vector6d x = Vector6d::Zero();
  Matrix6d covariance = Matrix6d::Zero();

  Eigen::Vector3d position() const { return x.head<3>(); }
  Eigen::Vector3d velocity() const { return x.tail<3>(); }
  double speed() const { return x.tail<3>().norm(); }
};

/// State after the first observation: position taken as observed, velocity
/// zero with a wide prior so the first few updates pull it into line.
KinematicState kf_init(const Eigen::Vector3d& first_obs, double t0,
                       const NoiseConfig& cfg);

/// Propagates the state dt seconds forward under the constant-velocity
/// model. dt = 0 is a no-op; dt < 0 throws NegativeDt.
KinematicState kf_predict(const KinematicState& state, double dt,
                          const NoiseConfig& cfg);

/// Folds in one position observation (Joseph-form update, which keeps the
/// covariance symmetric and positive semi-definite).
KinematicState kf_update(const KinematicState& state,
                         const Eigen::Vector3d& obs, const NoiseConfig& cfg);

struct TimedPosition {
  double t = 0.0;
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
};

struct SpeedEstimate {
  double t = 0.0;
  double speed = 0.0;  // |velocity|, mm/s
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
};

/// Incremental speed estimator for one device's position stream. Feed valid
/// observations in time order; each push returns the filtered velocity at
/// that timestamp. Dropouts need no special handling here - the next push
/// simply predicts across the gap.
class SpeedFilter {
 public:
  explicit SpeedFilter(NoiseConfig cfg = {});

  SpeedEstimate push(double t, const Eigen::Vector3d& obs);

  const std::optional<KinematicState>& state() const { return state_; }
  const NoiseConfig& config() const { return cfg_; }

 private:
  NoiseConfig cfg_;
  std::optional<KinematicState> state_;
};

/// Batch convenience: runs a SpeedFilter over a whole track. Throws
/// EmptyTrack on empty input and NonMonotoneTime on out-of-order stamps.
std::vector<SpeedEstimate> estimate_speed(std::span<const TimedPosition> track,
                                          const NoiseConfig& cfg = {});

}  // namespace skillgp::kinematics
