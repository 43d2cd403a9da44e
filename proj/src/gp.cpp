#include "skillgp/gp.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <numbers>

namespace skillgp::gp {

namespace {

void require_finite(const Eigen::Ref<const Eigen::MatrixXd>& m,
                    const char* what) {
  if (!m.allFinite()) {
    throw NonFinite(std::string(what) + " contains NaN or infinity");
  }
}

void require_dim_match(const Kernel& k, Eigen::Index d) {
  if (k.length_scales.size() != d) {
    throw DimensionMismatch("kernel has " +
                            std::to_string(k.length_scales.size()) +
                            " length scales but inputs have dimension " +
                            std::to_string(d));
  }
}

// Lower-triangular Cholesky factor of K + noise I, or CholeskyFailure.
Eigen::MatrixXd factorize(const Kernel& k, Eigen::MatrixXd gram) {
  gram.diagonal().array() += k.noise_variance();
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw CholeskyFailure("Gram matrix is not positive definite");
  }
  return llt.matrixL();
}

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& chol,
                          Eigen::VectorXd rhs) {
  chol.triangularView<Eigen::Lower>().solveInPlace(rhs);
  chol.triangularView<Eigen::Lower>().transpose().solveInPlace(rhs);
  return rhs;
}

Prediction finalize_prediction(double mean, double variance, double sigma_f) {
  Prediction p;
  p.mean = mean;
  p.variance = variance > 0.0 ? variance : 0.0;
  p.label = mean >= 0.0 ? SkillLabel::Expert : SkillLabel::Novice;
  p.uncertainty = std::clamp(std::sqrt(p.variance) / sigma_f, 0.0, 1.0);
  return p;
}

}  // namespace

Kernel Kernel::isotropic(double sigma_f, double length, Eigen::Index dim,
                         double sigma_n) {
  Kernel k;
  k.sigma_f = sigma_f;
  k.length_scales = Eigen::VectorXd::Constant(dim, length);
  k.sigma_n = sigma_n;
  k.validate();
  return k;
}

void Kernel::validate() const {
  if (!(sigma_f > 0.0) || !std::isfinite(sigma_f) || !(sigma_n > 0.0) ||
      !std::isfinite(sigma_n)) {
    throw InvalidConfig("kernel sigma_f and sigma_n must be finite and positive");
  }
  for (Eigen::Index i = 0; i < length_scales.size(); ++i) {
    if (!(length_scales[i] > 0.0) || !std::isfinite(length_scales[i])) {
      throw InvalidConfig("kernel length scales must be finite and positive");
    }
  }
}

double kernel_eval(const Kernel& k, const Eigen::Ref<const Eigen::VectorXd>& a,
                   const Eigen::Ref<const Eigen::VectorXd>& b) {
  require_dim_match(k, a.size());
  if (a.size() != b.size()) {
    throw DimensionMismatch("kernel arguments must have equal dimension");
  }
  const double z = (a - b).cwiseQuotient(k.length_scales).squaredNorm();
  return k.signal_variance() * std::exp(-0.5 * z);
}

Eigen::MatrixXd build_gram(const Kernel& k,
                           const Eigen::Ref<const Eigen::MatrixXd>& X) {
  if (X.rows() == 0) {
    throw EmptyInput("Gram matrix needs at least one input row");
  }
  require_dim_match(k, X.cols());
  require_finite(X, "Gram inputs");

  const Eigen::Index n = X.rows();
  // Pre-divide by the length scales so each pair costs one squared
  // distance; fill one triangle and mirror so K is exactly symmetric.
  const Eigen::MatrixXd S =
      X * k.length_scales.cwiseInverse().asDiagonal();
  const double sf2 = k.signal_variance();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    K(j, j) = sf2;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double z = (S.row(i) - S.row(j)).squaredNorm();
      const double v = sf2 * std::exp(-0.5 * z);
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

GpModel GpModel::train(Eigen::MatrixXd X, Eigen::VectorXd Y, Kernel kernel,
                       features::Normalizer normalizer) {
  kernel.validate();
  if (X.rows() == 0) {
    throw EmptyInput("training needs at least one sample");
  }
  if (X.rows() != Y.size()) {
    throw DimensionMismatch("training inputs and labels disagree: " +
                            std::to_string(X.rows()) + " rows vs " +
                            std::to_string(Y.size()) + " labels");
  }
  require_dim_match(kernel, X.cols());
  require_finite(X, "training inputs");
  for (Eigen::Index i = 0; i < Y.size(); ++i) {
    if (Y[i] != 1.0 && Y[i] != -1.0) {
      throw Error("training labels must be +1 or -1");
    }
  }

  GpModel m;
  m.kernel_ = std::move(kernel);
  m.normalizer_ = std::move(normalizer);
  m.chol_ = factorize(m.kernel_, build_gram(m.kernel_, X));
  m.alpha_ = solve_spd(m.chol_, Y);
  m.x_ = std::move(X);
  m.y_ = std::move(Y);
  return m;
}

GpModel GpModel::prior(Kernel kernel, features::Normalizer normalizer) {
  kernel.validate();
  GpModel m;
  const Eigen::Index d = kernel.length_scales.size();
  m.kernel_ = std::move(kernel);
  m.normalizer_ = std::move(normalizer);
  m.x_.resize(0, d);
  m.y_.resize(0);
  m.chol_.resize(0, 0);
  m.alpha_.resize(0);
  return m;
}

Prediction GpModel::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  require_dim_match(kernel_, x.size());
  require_finite(x, "prediction input");

  const double kss = kernel_.signal_variance();  // k(x, x)
  if (size() == 0) {
    return finalize_prediction(0.0, kss, kernel_.sigma_f);
  }

  // k* against every training input, vectorized over rows.
  const Eigen::RowVectorXd xs =
      x.transpose().cwiseQuotient(kernel_.length_scales.transpose());
  const Eigen::MatrixXd S =
      x_ * kernel_.length_scales.cwiseInverse().asDiagonal();
  Eigen::VectorXd kstar =
      (-0.5 * (S.rowwise() - xs).rowwise().squaredNorm()).array().exp() *
      kernel_.signal_variance();

  const double mean = kstar.dot(alpha_);
  chol_.triangularView<Eigen::Lower>().solveInPlace(kstar);
  const double variance = kss - kstar.squaredNorm();
  return finalize_prediction(mean, variance, kernel_.sigma_f);
}

Prediction GpModel::predict_features(const features::FeatureVector& f) const {
  return predict(normalizer_.apply(Eigen::VectorXd(f.to_vector())));
}

GpModel GpModel::updated(const Eigen::Ref<const Eigen::VectorXd>& x,
                         double y) const {
  require_dim_match(kernel_, x.size());
  require_finite(x, "new training input");
  if (y != 1.0 && y != -1.0) {
    throw Error("training labels must be +1 or -1");
  }

  const Eigen::Index n = size();
  GpModel m;
  m.kernel_ = kernel_;
  m.normalizer_ = normalizer_;
  m.x_.resize(n + 1, dim());
  m.x_.topRows(n) = x_;
  m.x_.bottomRows(1) = x.transpose();
  m.y_.resize(n + 1);
  m.y_.head(n) = y_;
  m.y_[n] = y;

  const double c = kernel_.signal_variance() + kernel_.noise_variance();
  if (n == 0) {
    m.chol_ = Eigen::MatrixXd::Constant(1, 1, std::sqrt(c));
  } else {
    // Grow the factorization by one bordered row: with K' = [K k; k^T c],
    // the new factor is [L 0; l12^T l22] where L l12 = k and
    // l22^2 = c - |l12|^2.
    Eigen::VectorXd k12(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      k12[i] = kernel_eval(kernel_, x_.row(i).transpose(), x);
    }
    chol_.triangularView<Eigen::Lower>().solveInPlace(k12);
    const double l22_sq = c - k12.squaredNorm();
    if (!(l22_sq > 0.0)) {
      throw CholeskyFailure("extended Gram matrix is not positive definite");
    }
    m.chol_ = Eigen::MatrixXd::Zero(n + 1, n + 1);
    m.chol_.topLeftCorner(n, n) = chol_;
    m.chol_.row(n).head(n) = k12.transpose();
    m.chol_(n, n) = std::sqrt(l22_sq);
  }
  m.alpha_ = solve_spd(m.chol_, m.y_);
  return m;
}

LogMarginal log_marginal_likelihood(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                    const Eigen::Ref<const Eigen::VectorXd>& Y,
                                    const Kernel& k) {
  k.validate();
  if (X.rows() == 0) {
    throw EmptyInput("log marginal likelihood needs at least one sample");
  }
  if (X.rows() != Y.size()) {
    throw DimensionMismatch("inputs and labels disagree");
  }
  require_finite(X, "inputs");
  require_finite(Y, "labels");

  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  const Eigen::MatrixXd Kf = build_gram(k, X);
  const Eigen::MatrixXd L = factorize(k, Kf);
  const Eigen::VectorXd alpha = solve_spd(L, Y);

  LogMarginal out;
  out.value = -0.5 * Y.dot(alpha) - L.diagonal().array().log().sum() -
              0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

  // d lml / d theta = 1/2 tr((alpha alpha^T - Ky^-1) dK/dtheta).
  // A below is that bracket; M = A o Kf shows up in every kernel term.
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
  L.triangularView<Eigen::Lower>().solveInPlace(A);
  L.triangularView<Eigen::Lower>().transpose().solveInPlace(A);  // Ky^-1
  A = (alpha * alpha.transpose() - A).eval();
  const Eigen::MatrixXd M = A.cwiseProduct(Kf);

  out.grad_log.resize(d + 2);
  // dK/dlog sigma_f = 2 Kf + 2 jitter I (the jitter also scales with it).
  out.grad_log[0] = M.sum() + k.jitter() * A.trace();
  for (Eigen::Index i = 0; i < d; ++i) {
    // dK/dlog ell_i = Kf o D_i with D_i(a,b) = ((X(a,i)-X(b,i))/ell_i)^2.
    // Expanding the square turns tr(M D_i) into vector work.
    const Eigen::VectorXd di = X.col(i) / k.length_scales[i];
    const double s = di.cwiseProduct(di).dot(M.rowwise().sum());
    const double q = di.dot(M * di);
    out.grad_log[1 + i] = s - q;
  }
  // dK/dlog sigma_n = 2 sigma_n^2 I.
  out.grad_log[1 + d] = k.sigma_n * k.sigma_n * A.trace();

  if (!std::isfinite(out.value) || !out.grad_log.allFinite()) {
    throw NonFinite("log marginal likelihood is not finite");
  }
  return out;
}

void KernelBounds::validate() const {
  const bool ok = 0.0 < sigma_f_min && sigma_f_min <= sigma_f_max &&
                  0.0 < length_min && length_min <= length_max &&
                  0.0 < sigma_n_min && sigma_n_min <= sigma_n_max;
  if (!ok) {
    throw InvalidConfig("hyperparameter bounds must satisfy 0 < min <= max");
  }
}

namespace {

Eigen::VectorXd kernel_to_log(const Kernel& k) {
  Eigen::VectorXd theta(k.length_scales.size() + 2);
  theta[0] = std::log(k.sigma_f);
  for (Eigen::Index i = 0; i < k.length_scales.size(); ++i) {
    theta[1 + i] = std::log(k.length_scales[i]);
  }
  theta[theta.size() - 1] = std::log(k.sigma_n);
  return theta;
}

Kernel kernel_from_log(const Eigen::VectorXd& theta) {
  Kernel k;
  k.sigma_f = std::exp(theta[0]);
  k.length_scales = theta.segment(1, theta.size() - 2).array().exp();
  k.sigma_n = std::exp(theta[theta.size() - 1]);
  return k;
}

Eigen::VectorXd clamp_log(Eigen::VectorXd theta, const KernelBounds& b) {
  const Eigen::Index d = theta.size() - 2;
  theta[0] = std::clamp(theta[0], std::log(b.sigma_f_min), std::log(b.sigma_f_max));
  for (Eigen::Index i = 0; i < d; ++i) {
    theta[1 + i] =
        std::clamp(theta[1 + i], std::log(b.length_min), std::log(b.length_max));
  }
  theta[1 + d] = std::clamp(theta[1 + d], std::log(b.sigma_n_min), std::log(b.sigma_n_max));
  return theta;
}

}  // namespace

Kernel fit_hyperparams(const Eigen::Ref<const Eigen::MatrixXd>& X,
                       const Eigen::Ref<const Eigen::VectorXd>& Y, Kernel init,
                       const KernelBounds& bounds) {
  init.validate();
  bounds.validate();
  if (X.rows() < 5) {
    throw TooFewSamples("hyperparameter fitting needs at least 5 samples");
  }
  require_dim_match(init, X.cols());

  constexpr int kMaxIters = 200;
  constexpr double kMinStep = 1e-10;
  constexpr double kGradTol = 1e-8;

  Eigen::VectorXd theta = clamp_log(kernel_to_log(init), bounds);
  LogMarginal cur = log_marginal_likelihood(X, Y, kernel_from_log(theta));
  double step = 0.1;

  for (int iter = 0; iter < kMaxIters && step >= kMinStep; ++iter) {
    if (cur.grad_log.lpNorm<Eigen::Infinity>() < kGradTol) break;
    const Eigen::VectorXd candidate =
        clamp_log(theta + step * cur.grad_log, bounds);
    LogMarginal next;
    bool usable = true;
    try {
      next = log_marginal_likelihood(X, Y, kernel_from_log(candidate));
    } catch (const Error&) {
      usable = false;  // e.g. Cholesky breakdown at an aggressive step
    }
    if (usable && next.value > cur.value) {
      theta = candidate;
      cur = next;
      step *= 1.6;
    } else {
      step *= 0.5;
    }
  }
  return kernel_from_log(theta);
}

}  // namespace skillgp::gp
