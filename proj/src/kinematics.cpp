#include "skillgp/kinematics.hpp"

#include <Eigen/LU>
#include <cmath>

namespace skillgp::kinematics {

namespace {

// Prior standard deviation of each velocity component before any motion has
// been seen (mm/s). Deliberately wide: the first observations decide.
constexpr double kInitVelSigma = 100.0;

Eigen::Matrix3d I3() { return Eigen::Matrix3d::Identity(); }

}  // namespace

KinematicState kf_init(const Eigen::Vector3d& first_obs, double t0,
                       const NoiseConfig& cfg) {
  cfg.validate();
  KinematicState s;
  s.t = t0;
  s.x.head<3>() = first_obs;
  const double r = cfg.sigma_pos_obs * cfg.sigma_pos_obs;
  s.covariance.topLeftCorner<3, 3>() = r * I3();
  s.covariance.bottomRightCorner<3, 3>() = kInitVelSigma * kInitVelSigma * I3();
  return s;
}

KinematicState kf_predict(const KinematicState& state, double dt,
                          const NoiseConfig& cfg) {
  if (dt < 0.0) {
    throw NegativeDt("predict step dt must be non-negative");
  }
  cfg.validate();

  Matrix6d F = Matrix6d::Identity();
  F.topRightCorner<3, 3>() = dt * I3();

  // Discrete white-noise acceleration: velocity random-walks with intensity
  // sigma_speed_proc^2 and position picks up the integrated effect.
  const double q = cfg.sigma_speed_proc * cfg.sigma_speed_proc;
  Matrix6d Q = Matrix6d::Zero();
  Q.topLeftCorner<3, 3>() = q * (dt * dt * dt / 3.0) * I3();
  Q.topRightCorner<3, 3>() = q * (dt * dt / 2.0) * I3();
  Q.bottomLeftCorner<3, 3>() = q * (dt * dt / 2.0) * I3();
  Q.bottomRightCorner<3, 3>() = q * dt * I3();

  KinematicState out;
  out.t = state.t + dt;
  out.x = F * state.x;
  out.covariance = F * state.covariance * F.transpose() + Q;
  return out;
}

KinematicState kf_update(const KinematicState& state,
                         const Eigen::Vector3d& obs, const NoiseConfig& cfg) {
  cfg.validate();

  Eigen::Matrix<double, 3, 6> H = Eigen::Matrix<double, 3, 6>::Zero();
  H.leftCols<3>() = I3();
  const Eigen::Matrix3d R = cfg.sigma_pos_obs * cfg.sigma_pos_obs * I3();

  const Eigen::Vector3d innovation = obs - H * state.x;
  const Eigen::Matrix3d S = H * state.covariance * H.transpose() + R;
  const Eigen::Matrix<double, 6, 3> K =
      state.covariance * H.transpose() * S.inverse();

  KinematicState out;
  out.t = state.t;
  out.x = state.x + K * innovation;
  const Matrix6d ImKH = Matrix6d::Identity() - K * H;
  Matrix6d P = ImKH * state.covariance * ImKH.transpose() + K * R * K.transpose();
  out.covariance = 0.5 * (P + P.transpose());
  return out;
}

SpeedFilter::SpeedFilter(NoiseConfig cfg) : cfg_(cfg) { cfg_.validate(); }

SpeedEstimate SpeedFilter::push(double t, const Eigen::Vector3d& obs) {
  if (!state_) {
    state_ = kf_init(obs, t, cfg_);
  } else {
    const double dt = t - state_->t;
    if (dt < 0.0) {
      throw NonMonotoneTime("observation at t=" + std::to_string(t) +
                            " precedes filter time t=" +
                            std::to_string(state_->t));
    }
    state_ = kf_update(kf_predict(*state_, dt, cfg_), obs, cfg_);
  }
  return {state_->t, state_->speed(), state_->velocity()};
}

std::vector<SpeedEstimate> estimate_speed(std::span<const TimedPosition> track,
                                          const NoiseConfig& cfg) {
  if (track.empty()) {
    throw EmptyTrack("speed estimation needs at least one sample");
  }
  SpeedFilter filter(cfg);
  std::vector<SpeedEstimate> out;
  out.reserve(track.size());
  for (const auto& sample : track) {
    out.push_back(filter.push(sample.t, sample.p));
  }
  return out;
}

}  // namespace skillgp::kinematics
