#pragma once

#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "skillgp/assess.hpp"
#include "skillgp/features.hpp"
#include "skillgp/gp.hpp"
#include "skillgp/kinematics.hpp"
#include "skillgp/pose_log.hpp"
#include "skillgp/synth.hpp"

namespace skillgp::pipeline {

/// Knobs of the pose-to-feature stage.
struct PipelineConfig {
  kinematics::NoiseConfig noise;
  /// An instrument sample pairs with the nearest valid endoscope sample no
  /// further than this away in time; otherwise it is dropped.
  double pairing_window_s = 0.075;

  void validate() const {
    noise.validate();
    if (!(pairing_window_s > 0.0)) {
      throw InvalidConfig("pairing window must be positive");
    }
  }
};

/// Candidate features plus the selected vector for one paired sample.
struct ExtractedSample {
  double t = 0.0;
  features::CandidateFeatures candidates;
  features::FeatureVector selected;
};

/// Streaming pose-to-feature converter. Feed pose samples in log order;
/// instrument samples are velocity-filtered in the world frame, paired with
/// the nearest endoscope sample inside the window, projected into that
/// sample's scope frame and reduced to features. Invalid samples and
/// instrument samples with no scope partner are dropped silently; samples
/// whose scope frame is degenerate are dropped too. Feeding a whole log and
/// feeding it line by line produce identical output.
class FeatureExtractor {
 public:
  FeatureExtractor(const io::PoseLogHeader& header, PipelineConfig cfg = {});

  /// Returns every feature that became decidable with this sample.
  std::vector<ExtractedSample> push(const geometry::PoseSample& sample);

  /// Flushes instrument samples still waiting for a later scope sample.
  std::vector<ExtractedSample> finish();

 private:
  struct PendingTool {
    double t = 0.0;
    Eigen::Vector3d tip_world = Eigen::Vector3d::Zero();
    Eigen::Vector3d velocity_world = Eigen::Vector3d::Zero();
    Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
  };

  std::optional<ExtractedSample> pair_and_extract(
      const PendingTool& tool, const geometry::PoseSample& scope);
  std::vector<ExtractedSample> resolve_pending(bool flush);

  geometry::CranialVector cranial_;
  Eigen::Vector3d scope_axis_body_;  // handle->tip axis, lens angle applied
  PipelineConfig cfg_;
  kinematics::SpeedFilter filter_;
  std::deque<geometry::PoseSample> scopes_;  // recent valid endoscope samples
  std::deque<PendingTool> pending_;
  std::optional<features::ShaftSample> prev_shaft_;
};

/// Convenience: runs a FeatureExtractor over a whole log.
std::vector<ExtractedSample> extract_features(const io::PoseLog& log,
                                              const PipelineConfig& cfg = {});

/// How run_train carves the labelled pool into training and holdout halves.
/// Pooled draws individual samples, which mixes timestamps from every session
/// into the training set; Session keeps whole sessions together so holdout
/// scores are free of within-session temporal leakage.
enum class SplitBy { Pooled, Session };

/// Everything the end-to-end runners need to know.
struct RunConfig {
  PipelineConfig pipeline;
  gp::Kernel kernel = gp::Kernel::isotropic(1.0, 1.0, features::FeatureVector::kDim, 0.1);
  bool fit_kernel = false;           // maximize marginal likelihood on the training split
  double train_split = 0.4;          // fraction of pooled samples used for training
  SplitBy split_by = SplitBy::Pooled;
  std::size_t subsample_cap = 2000;  // hard ceiling on training-set size
  double uncertainty_threshold = 0.5;
  std::uint64_t seed = 0;            // drives the train/holdout shuffle

  void validate() const;
};

struct LabeledLog {
  io::PoseLog log;
  SkillLabel label = SkillLabel::Expert;
  std::string name;
};

/// Per-session holdout outcome, plus the verdict check.
struct SessionEval {
  std::string name;
  SkillLabel truth = SkillLabel::Expert;
  assess::SummativeResult summative;
  std::size_t n_samples = 0;    // holdout samples of this session
  std::size_t n_predicted = 0;  // non-abstained
  std::size_t n_correct = 0;    // non-abstained and matching truth
};

struct TrainResult {
  gp::GpModel model;
  std::size_t n_pool = 0;     // pooled feature count across sessions
  std::size_t n_train = 0;    // after split and cap
  std::size_t n_holdout = 0;
  double holdout_accuracy = 0.0;  // non-abstained holdout samples only
  std::vector<SessionEval> sessions;
  std::vector<assess::AssessmentEvent> holdout_events;  // time-ordered per session
};

/// Pools features across the labelled sessions, splits them with a seeded
/// shuffle, standardizes and trains on the training part, and scores the
/// holdout per sample and per session.
TrainResult run_train(std::span<const LabeledLog> logs, const RunConfig& cfg);

struct AssessResult {
  std::vector<assess::AssessmentEvent> events;
  assess::SummativeResult summative;
};

AssessResult run_assess(const gp::GpModel& model, const io::PoseLog& log,
                        const RunConfig& cfg);

/// Error/coverage trade-off of the model on labelled sessions.
assess::ConfidenceCurve run_curve(const gp::GpModel& model,
                                  std::span<const LabeledLog> logs,
                                  const RunConfig& cfg,
                                  std::span<const double> thresholds,
                                  assess::RateBase base);

/// Candidate-channel separation scores over labelled sessions.
features::FeatureStats run_features(std::span<const LabeledLog> logs,
                                    const PipelineConfig& cfg = {});

/// In-memory dataset -> labelled logs (shared by tests and the CLI).
std::vector<LabeledLog> to_labeled_logs(const synth::LabeledDataset& dataset);

// Fixed-format writers so repeated runs are byte-identical.
std::string write_events_csv(std::span<const assess::AssessmentEvent> events);
std::string write_events_jsonl(std::span<const assess::AssessmentEvent> events);
std::string write_feature_stats_csv(const features::FeatureStats& stats);
nlohmann::json train_report_json(const TrainResult& result);

}  // namespace skillgp::pipeline
