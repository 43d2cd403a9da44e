#include "skillgp/features.hpp"

#include <Eigen/Geometry>
#include <array>
#include <cmath>

namespace skillgp::features {

namespace {

// Below this tip distance (mm) the instrument is effectively touching the
// lens and the axis-offset ratio is numerically meaningless; report 0.
constexpr double kMinTipDistance = 0.01;

// Pooled within-class std is floored here so that perfectly separated
// constant channels score large-but-finite instead of dividing by zero.
constexpr double kMinPooledStd = 1e-12;

double angle_between(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

double distance_ratio_of(const CandidateFeatures& c) {
  return c.d_tip < kMinTipDistance ? 0.0 : c.d_line / c.d_tip;
}

const std::array<std::string, 9> kChannelNames = {
    "x",     "y",     "z",
    "d_tip", "d_line", "distance_ratio",
    "speed", "angle", "angular_speed"};

double channel_value(const CandidateFeatures& c, std::size_t idx) {
  switch (idx) {
    case 0: return c.pos_local.x();
    case 1: return c.pos_local.y();
    case 2: return c.pos_local.z();
    case 3: return c.d_tip;
    case 4: return c.d_line;
    case 5: return distance_ratio_of(c);
    case 6: return c.speed;
    case 7: return c.angle;
    default: return c.angular_speed;
  }
}

struct RunningStats {
  std::size_t n = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double v) {
    ++n;
    sum += v;
    sum_sq += v * v;
  }
  double mean() const { return sum / static_cast<double>(n); }
  // Unbiased sample variance; callers guarantee n >= 2.
  double variance() const {
    const double m = mean();
    const double v = (sum_sq - static_cast<double>(n) * m * m) /
                     static_cast<double>(n - 1);
    return v > 0.0 ? v : 0.0;
  }
};

}  // namespace

CandidateFeatures extract_candidates(const Eigen::Vector3d& tip_local,
                                     const Eigen::Vector3d& velocity_local,
                                     const Eigen::Vector3d& shaft_dir_local,
                                     const std::optional<ShaftSample>& prev_shaft,
                                     double t) {
  CandidateFeatures c;
  c.pos_local = tip_local;
  c.d_tip = tip_local.norm();
  // The scope axis is the local X axis, so the offset from it lives in Y/Z.
  c.d_line = std::hypot(tip_local.y(), tip_local.z());
  c.speed = velocity_local.norm();

  const Eigen::Vector3d viewing = -Eigen::Vector3d::UnitX();
  c.angle = angle_between(shaft_dir_local.normalized(), viewing);

  if (prev_shaft && t > prev_shaft->t) {
    const double swept =
        angle_between(prev_shaft->dir_local.normalized(), shaft_dir_local.normalized());
    c.angular_speed = swept / (t - prev_shaft->t);
  }
  return c;
}

FeatureVector select_features(const CandidateFeatures& c) {
  FeatureVector f;
  f.x = c.pos_local.x();
  f.y = c.pos_local.y();
  f.z = c.pos_local.z();
  f.distance_ratio = distance_ratio_of(c);
  f.speed = c.speed;
  return f;
}

const ChannelStats& FeatureStats::channel(const std::string& name) const {
  for (const auto& ch : channels) {
    if (ch.name == name) return ch;
  }
  throw Error("unknown feature channel '" + name + "'");
}

std::span<const std::string> candidate_channel_names() {
  return {kChannelNames.data(), kChannelNames.size()};
}

FeatureStats feature_significance(std::span<const LabeledCandidate> dataset) {
  std::array<RunningStats, 9> expert_stats{};
  std::array<RunningStats, 9> novice_stats{};
  std::size_t n_expert = 0;
  std::size_t n_novice = 0;

  for (const auto& [candidate, label] : dataset) {
    auto& stats = label == SkillLabel::Expert ? expert_stats : novice_stats;
    (label == SkillLabel::Expert ? n_expert : n_novice)++;
    for (std::size_t i = 0; i < kChannelNames.size(); ++i) {
      stats[i].add(channel_value(candidate, i));
    }
  }

  if (n_expert == 0 || n_novice == 0) {
    throw SingleClass("feature significance needs samples from both classes");
  }
  if (n_expert < 2 || n_novice < 2) {
    throw TooFewSamples("feature significance needs at least two samples per class");
  }

  FeatureStats out;
  out.channels.reserve(kChannelNames.size());
  const double dof = static_cast<double>(n_expert + n_novice - 2);
  for (std::size_t i = 0; i < kChannelNames.size(); ++i) {
    ChannelStats ch;
    ch.name = kChannelNames[i];
    ch.mean_expert = expert_stats[i].mean();
    ch.std_expert = std::sqrt(expert_stats[i].variance());
    ch.mean_novice = novice_stats[i].mean();
    ch.std_novice = std::sqrt(novice_stats[i].variance());

    const double n_e = static_cast<double>(n_expert);
    const double n_n = static_cast<double>(n_novice);
    ch.mean_pooled = (n_e * ch.mean_expert + n_n * ch.mean_novice) / (n_e + n_n);

    const double pooled_var =
        (static_cast<double>(n_expert - 1) * expert_stats[i].variance() +
         static_cast<double>(n_novice - 1) * novice_stats[i].variance()) /
        dof;
    ch.std_pooled = std::max(std::sqrt(pooled_var), kMinPooledStd);
    ch.significance = std::abs(ch.mean_expert - ch.mean_novice) / ch.std_pooled;
    out.channels.push_back(std::move(ch));
  }
  return out;
}

Normalizer Normalizer::fit(std::span<const FeatureVector> training) {
  if (training.empty()) {
    throw EmptyTrainingSet("normalizer fit needs at least one sample");
  }
  const auto n = static_cast<double>(training.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(FeatureVector::kDim);
  for (const auto& f : training) mean += f.to_vector();
  mean /= n;

  Eigen::VectorXd var = Eigen::VectorXd::Zero(FeatureVector::kDim);
  for (const auto& f : training) {
    const Eigen::VectorXd d = f.to_vector() - mean;
    var += d.cwiseProduct(d);
  }
  var /= n;  // population variance: {-1,+1} maps to itself

  Eigen::VectorXd scale(FeatureVector::kDim);
  for (Eigen::Index i = 0; i < scale.size(); ++i) {
    const double s = std::sqrt(var[i]);
    scale[i] = s > 0.0 ? s : 1.0;
  }
  return from_stats(std::move(mean), std::move(scale));
}

Normalizer Normalizer::from_stats(Eigen::VectorXd mean, Eigen::VectorXd scale) {
  if (mean.size() != scale.size()) {
    throw DimensionMismatch("normalizer mean and scale must have equal size");
  }
  for (Eigen::Index i = 0; i < scale.size(); ++i) {
    if (!std::isfinite(mean[i]) || !std::isfinite(scale[i]) || scale[i] <= 0.0) {
      throw NonFinite("normalizer statistics must be finite with positive scale");
    }
  }
  Normalizer nz;
  nz.mean_ = std::move(mean);
  nz.scale_ = std::move(scale);
  return nz;
}

Normalizer Normalizer::identity(Eigen::Index dim) {
  return from_stats(Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim));
}

Eigen::VectorXd Normalizer::apply(const Eigen::Ref<const Eigen::VectorXd>& raw) const {
  if (raw.size() != mean_.size()) {
    throw DimensionMismatch("normalizer expects dimension " +
                            std::to_string(mean_.size()) + ", got " +
                            std::to_string(raw.size()));
  }
  return (raw - mean_).cwiseQuotient(scale_);
}

FeatureVector Normalizer::apply(const FeatureVector& f) const {
  return FeatureVector::from_vector(apply(Eigen::VectorXd(f.to_vector())));
}

}  // namespace skillgp::features
