// Independent reference implementations used to cross-check the library.
// Everything here is written the slow, obvious way on purpose: explicit
// loops, dense inverses, textbook formulas. If a test disagrees with the
// library, the bug hunt starts from two independently derived answers.

#pragma once

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "skillgp/gp.hpp"
#include "skillgp/kinematics.hpp"

namespace oracles {

// ---------------------------------------------------------------------------
// Geometry

// Frame construction via an explicit projection matrix: Z is the cranial
// vector with its component along X removed by (I - X X^T), rather than the
// subtract-the-dot-product form the library uses.
inline Eigen::Matrix3d frame_rotation(const Eigen::Vector3d& handle_dir,
                                      const Eigen::Vector3d& cranial) {
  const Eigen::Vector3d x = handle_dir;
  const Eigen::Matrix3d reject =
      Eigen::Matrix3d::Identity() - x * x.transpose();
  const Eigen::Vector3d z = (reject * cranial).normalized();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d rows;
  rows.row(0) = x;
  rows.row(1) = y;
  rows.row(2) = z;
  return rows;
}

// World->local as a single 4x4 homogeneous transform applied to [p; 1].
inline Eigen::Vector3d homogeneous_project(const Eigen::Matrix3d& rotation,
                                           const Eigen::Vector3d& origin,
                                           const Eigen::Vector3d& p_world) {
  Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
  T.topLeftCorner<3, 3>() = rotation;
  T.topRightCorner<3, 1>() = -rotation * origin;
  const Eigen::Vector4d h = T * p_world.homogeneous();
  return h.head<3>();
}

// Quaternion to rotation matrix, written out component by component
// (independent of Eigen's own conversion).
inline Eigen::Matrix3d quat_to_matrix(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  w /= n; x /= n; y /= n; z /= n;
  Eigen::Matrix3d m;
  m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return m;
}

// ---------------------------------------------------------------------------
// Kinematics: plain textbook Kalman filter (standard-form covariance update,
// no Joseph stabilization, no in-place tricks).

struct RefKalman {
  Eigen::Matrix<double, 6, 1> x = Eigen::Matrix<double, 6, 1>::Zero();
  Eigen::Matrix<double, 6, 6> P = Eigen::Matrix<double, 6, 6>::Zero();
  double sigma_pos = 0.3;
  double sigma_speed = 1.0;

  void init(const Eigen::Vector3d& obs) {
    x.setZero();
    x.head<3>() = obs;
    P.setZero();
    P.topLeftCorner<3, 3>() =
        sigma_pos * sigma_pos * Eigen::Matrix3d::Identity();
    P.bottomRightCorner<3, 3>() = 100.0 * 100.0 * Eigen::Matrix3d::Identity();
  }

  void predict(double dt) {
    Eigen::Matrix<double, 6, 6> F = Eigen::Matrix<double, 6, 6>::Identity();
    F.topRightCorner<3, 3>() = dt * Eigen::Matrix3d::Identity();
    const double q = sigma_speed * sigma_speed;
    Eigen::Matrix<double, 6, 6> Q = Eigen::Matrix<double, 6, 6>::Zero();
    Q.topLeftCorner<3, 3>() =
        q * dt * dt * dt / 3.0 * Eigen::Matrix3d::Identity();
    Q.topRightCorner<3, 3>() = q * dt * dt / 2.0 * Eigen::Matrix3d::Identity();
    Q.bottomLeftCorner<3, 3>() = Q.topRightCorner<3, 3>();
    Q.bottomRightCorner<3, 3>() = q * dt * Eigen::Matrix3d::Identity();
    x = F * x;
    P = F * P * F.transpose() + Q;
  }

  void update(const Eigen::Vector3d& obs) {
    Eigen::Matrix<double, 3, 6> H = Eigen::Matrix<double, 3, 6>::Zero();
    H.leftCols<3>() = Eigen::Matrix3d::Identity();
    const Eigen::Matrix3d R =
        sigma_pos * sigma_pos * Eigen::Matrix3d::Identity();
    const Eigen::Matrix3d S = H * P * H.transpose() + R;
    const Eigen::Matrix<double, 6, 3> K = P * H.transpose() * S.inverse();
    x = x + K * (obs - H * x);
    P = (Eigen::Matrix<double, 6, 6>::Identity() - K * H) * P;
  }
};

// ---------------------------------------------------------------------------
// Gaussian process: brute-force dense inversion of the predictive equations.
// The same jitter the library folds into its effective noise is included
// here, so both sides factor exactly the same matrix.

inline double ref_kernel(const skillgp::gp::Kernel& k,
                         const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = (a[i] - b[i]) / k.length_scales[i];
    s += d * d;
  }
  return k.sigma_f * k.sigma_f * std::exp(-0.5 * s);
}

inline Eigen::MatrixXd ref_gram(const skillgp::gp::Kernel& k,
                                const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      K(i, j) = ref_kernel(k, X.row(i), X.row(j));
    }
  }
  return K;
}

struct RefPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

inline RefPrediction ref_predict(const skillgp::gp::Kernel& k,
                                 const Eigen::MatrixXd& X,
                                 const Eigen::VectorXd& Y,
                                 const Eigen::VectorXd& x_star) {
  const Eigen::Index n = X.rows();
  const Eigen::MatrixXd Ky =
      ref_gram(k, X) +
      k.noise_variance() * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd Kinv = Ky.inverse();
  Eigen::VectorXd kstar(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    kstar[i] = ref_kernel(k, X.row(i), x_star);
  }
  RefPrediction p;
  p.mean = kstar.dot(Kinv * Y);
  p.variance = ref_kernel(k, x_star, x_star) - kstar.dot(Kinv * kstar);
  if (p.variance < 0.0) p.variance = 0.0;
  return p;
}

inline double ref_log_marginal(const skillgp::gp::Kernel& k,
                               const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& Y) {
  const Eigen::Index n = X.rows();
  const Eigen::MatrixXd Ky =
      ref_gram(k, X) +
      k.noise_variance() * Eigen::MatrixXd::Identity(n, n);
  const double logdet = std::log(Ky.determinant());
  const double fit = Y.dot(Ky.inverse() * Y);
  return -0.5 * fit - 0.5 * logdet -
         0.5 * static_cast<double>(n) * std::log(2.0 * 3.14159265358979323846);
}

// ---------------------------------------------------------------------------
// Random input helpers for property tests. Test-side randomness uses the
// standard library directly; only library outputs have the cross-platform
// byte-reproducibility contract.

struct TestRng {
  std::mt19937_64 engine;

  explicit TestRng(std::uint64_t seed) : engine(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine);
  }

  double gauss(double mean = 0.0, double std = 1.0) {
    return std::normal_distribution<double>(mean, std)(engine);
  }

  int integer(int lo, int hi) {  // inclusive bounds
    return std::uniform_int_distribution<int>(lo, hi)(engine);
  }

  Eigen::Vector3d vec3(double scale = 1.0) {
    return {gauss(0.0, scale), gauss(0.0, scale), gauss(0.0, scale)};
  }

  Eigen::Vector3d unit_vec3() {
    Eigen::Vector3d v;
    do {
      v = vec3();
    } while (v.norm() < 1e-6);
    return v.normalized();
  }

  Eigen::Quaterniond quat() {
    Eigen::Quaterniond q(gauss(), gauss(), gauss(), gauss());
    while (q.norm() < 1e-6) q = Eigen::Quaterniond(gauss(), gauss(), gauss(), gauss());
    q.normalize();
    return q;
  }

  Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols, double lo = -2.0,
                         double hi = 2.0) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        m(i, j) = uniform(lo, hi);
      }
    }
    return m;
  }

  Eigen::VectorXd labels(Eigen::Index n) {
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      y[i] = integer(0, 1) == 0 ? -1.0 : 1.0;
    }
    // Guarantee both classes so downstream class-based code never trips.
    if (n >= 2) {
      y[0] = 1.0;
      y[1] = -1.0;
    }
    return y;
  }

  skillgp::gp::Kernel kernel(int dim) {
    skillgp::gp::Kernel k;
    k.sigma_f = uniform(0.5, 2.0);
    k.sigma_n = uniform(0.05, 0.5);
    k.length_scales = Eigen::VectorXd::Zero(dim);
    for (int i = 0; i < dim; ++i) k.length_scales[i] = uniform(0.5, 2.0);
    return k;
  }
};

}  // namespace oracles
