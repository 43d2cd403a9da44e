#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "skillgp/errors.hpp"
#include "skillgp/types.hpp"

namespace skillgp::features {

/// Everything we can measure per paired sample, all in the scope-local
/// frame. Candidates exist so their class-separating power can be compared;
/// only a subset feeds the classifier (see select_features).
struct CandidateFeatures {
  Eigen::Vector3d pos_local = Eigen::Vector3d::Zero();  // instrument tip, mm
  double d_tip = 0.0;          // distance to the scope tip, mm
  double d_line = 0.0;         // distance to the scope axis line, mm
  double speed = 0.0;          // |instrument velocity|, mm/s
  double angle = 0.0;          // shaft vs viewing direction, rad in [0, pi]
  double angular_speed = 0.0;  // shaft rotation rate, rad/s (0 without history)
};

/// Shaft direction at an earlier timestamp, used to differentiate the
/// angular speed between consecutive samples.
struct ShaftSample {
  double t = 0.0;
  Eigen::Vector3d dir_local = Eigen::Vector3d::UnitZ();
};

/// Derives the candidate set from one paired sample. All inputs are in the
/// scope-local frame; `prev_shaft` is the shaft direction at the previous
/// paired sample of the same stream (nullopt for the first one).
CandidateFeatures extract_candidates(const Eigen::Vector3d& tip_local,
                                     const Eigen::Vector3d& velocity_local,
                                     const Eigen::Vector3d& shaft_dir_local,
                                     const std::optional<ShaftSample>& prev_shaft,
                                     double t);

/// The subset that actually feeds the classifier: local position, the
/// axis-offset-to-depth ratio, and the speed.
struct FeatureVector {
  double x = 0.0;               // mm, negative in front of the lens
  double y = 0.0;               // mm
  double z = 0.0;               // mm
  double distance_ratio = 0.0;  // d_line / d_tip, dimensionless
  double speed = 0.0;           // mm/s

  static constexpr int kDim = 5;

  Eigen::Matrix<double, 5, 1> to_vector() const {
    return {x, y, z, distance_ratio, speed};
  }
  static FeatureVector from_vector(const Eigen::Matrix<double, 5, 1>& v) {
    return {v[0], v[1], v[2], v[3], v[4]};
  }
};

FeatureVector select_features(const CandidateFeatures& c);

/// Per-channel class statistics plus the separation score
/// |mean_expert - mean_novice| / pooled within-class std.
struct ChannelStats {
  std::string name;
  double mean_expert = 0.0, std_expert = 0.0;
  double mean_novice = 0.0, std_novice = 0.0;
  double mean_pooled = 0.0;  // over both classes combined
  double std_pooled = 0.0;   // within-class, the significance denominator
  double significance = 0.0;
};

struct FeatureStats {
  std::vector<ChannelStats> channels;

  const ChannelStats& channel(const std::string& name) const;
};

/// Channel names reported by feature_significance, in order.
std::span<const std::string> candidate_channel_names();

using LabeledCandidate = std::pair<CandidateFeatures, SkillLabel>;

/// Scores every candidate channel on a labelled dataset. Needs both classes
/// present (else SingleClass) with at least two samples each (else
/// TooFewSamples).
FeatureStats feature_significance(std::span<const LabeledCandidate> dataset);

/// Per-feature z-score transform with statistics frozen at fit time. Fit it
/// on the training split only, then apply to everything; constant features
/// get scale 1 so they pass through centred instead of dividing by zero.
class Normalizer {
 public:
  Normalizer() = default;

  static Normalizer fit(std::span<const FeatureVector> training);
  static Normalizer from_stats(Eigen::VectorXd mean, Eigen::VectorXd scale);
  static Normalizer identity(Eigen::Index dim);

  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& raw) const;
  FeatureVector apply(const FeatureVector& f) const;

  Eigen::Index dim() const { return mean_.size(); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& scale() const { return scale_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd scale_;
};

}  // namespace skillgp::features
