#pragma once

#include <Eigen/Core>

#include "skillgp/errors.hpp"
#include "skillgp/features.hpp"
#include "skillgp/types.hpp"

namespace skillgp::gp {

/// Squared-exponential kernel with one length scale per (standardized)
/// feature, plus the observation noise level used on the Gram diagonal:
///   k(a, b) = sigma_f^2 * exp(-1/2 * sum_i ((a_i - b_i) / ell_i)^2)
struct Kernel {
  double sigma_f = 1.0;
  Eigen::VectorXd length_scales;
  double sigma_n = 0.1;

  static Kernel isotropic(double sigma_f, double length, Eigen::Index dim,
                          double sigma_n);

  double signal_variance() const { return sigma_f * sigma_f; }
  /// Tiny diagonal boost added alongside sigma_n^2 before factorization so
  /// duplicated inputs cannot break positive definiteness. Scales with the
  /// signal variance and is part of the model's effective noise.
  double jitter() const { return 1e-10 * sigma_f * sigma_f; }
  double noise_variance() const { return sigma_n * sigma_n + jitter(); }

  void validate() const;
};

double kernel_eval(const Kernel& k, const Eigen::Ref<const Eigen::VectorXd>& a,
                   const Eigen::Ref<const Eigen::VectorXd>& b);

/// Dense Gram matrix K with K(i,j) = k(X.row(i), X.row(j)). Exactly
/// symmetric by construction (only one triangle is evaluated).
Eigen::MatrixXd build_gram(const Kernel& k,
                           const Eigen::Ref<const Eigen::MatrixXd>& X);

struct Prediction {
  double mean = 0.0;        // regressed label value; >= 0 reads as Expert
  double variance = 0.0;    // posterior variance of the latent value
  SkillLabel label = SkillLabel::Expert;
  double uncertainty = 1.0; // sqrt(variance) / sigma_f, clamped to [0, 1]
};

/// Gaussian-process regressor over +/-1 skill labels, trained once via a
/// Cholesky factorization and immutable afterwards. Inputs are standardized
/// feature vectors; the normalizer that produced them travels with the
/// model so persistence keeps the two in sync.
class GpModel {
 public:
  GpModel() = default;

  /// Factorizes K + (sigma_n^2 + jitter) I and solves for the prediction
  /// weights. X is n x d with one sample per row; Y holds +/-1 labels.
  static GpModel train(Eigen::MatrixXd X, Eigen::VectorXd Y, Kernel kernel,
                       features::Normalizer normalizer);

  /// Model with no observations: predicts the prior (mean 0, variance
  /// sigma_f^2, uncertainty 1). Starting point for incremental training.
  static GpModel prior(Kernel kernel, features::Normalizer normalizer);

  /// Predictive mean and variance at one standardized input.
  Prediction predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Convenience: applies the model's normalizer first.
  Prediction predict_features(const features::FeatureVector& f) const;

  /// Returns a new model extended by one observation, reusing this model's
  /// factorization (O(n^2) instead of a full retrain). Equivalent to
  /// train() on the extended dataset.
  GpModel updated(const Eigen::Ref<const Eigen::VectorXd>& x, double y) const;

  Eigen::Index size() const { return y_.size(); }
  Eigen::Index dim() const { return kernel_.length_scales.size(); }
  const Eigen::MatrixXd& inputs() const { return x_; }
  const Eigen::VectorXd& labels() const { return y_; }
  const Kernel& kernel() const { return kernel_; }
  const features::Normalizer& normalizer() const { return normalizer_; }
  const Eigen::MatrixXd& chol_lower() const { return chol_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }

 private:
  Kernel kernel_;
  features::Normalizer normalizer_;
  Eigen::MatrixXd x_;     // n x d training inputs (standardized)
  Eigen::VectorXd y_;     // +/-1 labels
  Eigen::MatrixXd chol_;  // lower Cholesky factor of K + noise I
  Eigen::VectorXd alpha_; // (K + noise I)^-1 Y
};

/// Value and gradient of the log marginal likelihood of (X, Y) under the
/// kernel. The gradient is with respect to the log-parameters, ordered
/// (log sigma_f, log ell_1 .. log ell_d, log sigma_n).
struct LogMarginal {
  double value = 0.0;
  Eigen::VectorXd grad_log;
};

LogMarginal log_marginal_likelihood(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                    const Eigen::Ref<const Eigen::VectorXd>& Y,
                                    const Kernel& k);

/// Box constraints for hyperparameter fitting, in natural units.
struct KernelBounds {
  double sigma_f_min = 1e-3, sigma_f_max = 1e3;
  double length_min = 1e-3, length_max = 1e3;
  double sigma_n_min = 1e-3, sigma_n_max = 1e3;

  void validate() const;
};

/// Maximizes the log marginal likelihood over log-parameters by projected
/// gradient ascent with a backtracking step size. Only strictly improving
/// steps are accepted, so the result never scores below `init`.
Kernel fit_hyperparams(const Eigen::Ref<const Eigen::MatrixXd>& X,
                       const Eigen::Ref<const Eigen::VectorXd>& Y, Kernel init,
                       const KernelBounds& bounds = {});

}  // namespace skillgp::gp
