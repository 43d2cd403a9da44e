#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "skillgp/gp.hpp"

namespace skillgp::assess {

/// Per-sample outcome: a class call, or an abstention when the model is too
/// unsure to commit.
enum class EventLabel { Expert, Novice, Abstain };

inline std::string to_string(EventLabel e) {
  switch (e) {
    case EventLabel::Expert: return "expert";
    case EventLabel::Novice: return "novice";
    default: return "abstain";
  }
}

struct AssessmentEvent {
  double t = 0.0;
  EventLabel label = EventLabel::Abstain;
  double confidence = 0.0;  // 1 - uncertainty, in [0, 1]
  double mean = 0.0;        // raw regressed value behind the call
};

struct TimedFeature {
  double t = 0.0;
  features::FeatureVector features;
};

/// Scores one sample: predicts, then abstains when the model's uncertainty
/// exceeds the threshold (0 = trust nothing, 1 = abstain never).
AssessmentEvent assess_sample(const gp::GpModel& model, double t,
                              const features::FeatureVector& f,
                              double uncertainty_threshold);

/// Runs assess_sample over a time-ordered feature stream. The model must
/// have training data (UntrainedModel otherwise).
std::vector<AssessmentEvent> assess_stream(const gp::GpModel& model,
                                           std::span<const TimedFeature> stream,
                                           double uncertainty_threshold);

/// Whole-session verdict: confidence-weighted vote of the non-abstained
/// events (+confidence for expert calls, -confidence for novice calls).
/// Score >= 0 reads as Expert, including the empty/all-abstained case.
struct SummativeResult {
  double score = 0.0;
  SkillLabel verdict = SkillLabel::Expert;
  std::size_t n_events = 0;
  std::size_t n_abstained = 0;
};

SummativeResult summative_score(std::span<const AssessmentEvent> events);

/// How error and coverage trade off against the abstention threshold.
/// All vectors are parallel to `thresholds`. With RateBase::AllSamples the
/// error rates are fractions of every sample (abstentions silently count as
/// not-wrong); with PredictedOnly they are fractions of committed calls.
struct ConfidenceCurve {
  std::vector<double> thresholds;
  std::vector<double> wrong_ratio;
  std::vector<double> false_positive_ratio;  // novice called expert
  std::vector<double> false_negative_ratio;  // expert called novice
  std::vector<double> prediction_ratio;      // non-abstained fraction
};

enum class RateBase { AllSamples, PredictedOnly };

using LabeledFeature = std::pair<features::FeatureVector, SkillLabel>;

ConfidenceCurve confidence_curve(const gp::GpModel& model,
                                 std::span<const LabeledFeature> test_set,
                                 std::span<const double> thresholds,
                                 RateBase base = RateBase::AllSamples);

/// 0.0, 0.05, ..., 1.0.
std::vector<double> default_threshold_grid();

/// Curve as CSV with a header row, fixed formatting.
std::string write_curve_csv(const ConfidenceCurve& curve);

}  // namespace skillgp::assess
