#include "skillgp/assess.hpp"

#include <cstdio>
#include <limits>

namespace skillgp::assess {

namespace {

void require_threshold(double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw InvalidConfig("uncertainty threshold must lie in [0, 1]");
  }
}

void require_trained(const gp::GpModel& model) {
  if (model.size() == 0) {
    throw UntrainedModel("assessment needs a model with training data");
  }
}

}  // namespace

AssessmentEvent assess_sample(const gp::GpModel& model, double t,
                              const features::FeatureVector& f,
                              double uncertainty_threshold) {
  require_threshold(uncertainty_threshold);
  require_trained(model);

  const gp::Prediction p = model.predict_features(f);
  AssessmentEvent e;
  e.t = t;
  e.mean = p.mean;
  e.confidence = 1.0 - p.uncertainty;
  if (p.uncertainty > uncertainty_threshold) {
    e.label = EventLabel::Abstain;
  } else {
    e.label = p.label == SkillLabel::Expert ? EventLabel::Expert
                                            : EventLabel::Novice;
  }
  return e;
}

std::vector<AssessmentEvent> assess_stream(const gp::GpModel& model,
                                           std::span<const TimedFeature> stream,
                                           double uncertainty_threshold) {
  require_threshold(uncertainty_threshold);
  require_trained(model);

  std::vector<AssessmentEvent> out;
  out.reserve(stream.size());
  double last_t = -std::numeric_limits<double>::infinity();
  for (const auto& sample : stream) {
    if (sample.t < last_t) {
      throw NonMonotoneTime("feature stream timestamps must be non-decreasing");
    }
    last_t = sample.t;
    out.push_back(assess_sample(model, sample.t, sample.features,
                                uncertainty_threshold));
  }
  return out;
}

SummativeResult summative_score(std::span<const AssessmentEvent> events) {
  SummativeResult r;
  r.n_events = events.size();
  for (const auto& e : events) {
    switch (e.label) {
      case EventLabel::Expert: r.score += e.confidence; break;
      case EventLabel::Novice: r.score -= e.confidence; break;
      case EventLabel::Abstain: ++r.n_abstained; break;
    }
  }
  r.verdict = r.score >= 0.0 ? SkillLabel::Expert : SkillLabel::Novice;
  return r;
}

ConfidenceCurve confidence_curve(const gp::GpModel& model,
                                 std::span<const LabeledFeature> test_set,
                                 std::span<const double> thresholds,
                                 RateBase base) {
  require_trained(model);
  if (test_set.empty()) {
    throw EmptyInput("confidence curve needs a non-empty test set");
  }
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    require_threshold(thresholds[i]);
    if (i > 0 && thresholds[i] < thresholds[i - 1]) {
      throw InvalidConfig("threshold grid must be ascending");
    }
  }
  bool has_expert = false, has_novice = false;
  for (const auto& [f, truth] : test_set) {
    (truth == SkillLabel::Expert ? has_expert : has_novice) = true;
  }
  if (!has_expert || !has_novice) {
    throw SingleClass("confidence curve needs both classes in the test set");
  }

  // Predict once per sample; every threshold reuses the same predictions.
  struct Scored {
    double uncertainty;
    bool truth_expert;
    bool called_expert;
  };
  std::vector<Scored> scored;
  scored.reserve(test_set.size());
  for (const auto& [f, truth] : test_set) {
    const gp::Prediction p = model.predict_features(f);
    scored.push_back({p.uncertainty, truth == SkillLabel::Expert,
                      p.label == SkillLabel::Expert});
  }

  ConfidenceCurve curve;
  curve.thresholds.assign(thresholds.begin(), thresholds.end());
  const auto n_all = static_cast<double>(scored.size());
  for (double th : thresholds) {
    std::size_t fp = 0, fn = 0, predicted = 0;
    for (const auto& s : scored) {
      if (s.uncertainty > th) continue;  // abstained at this threshold
      ++predicted;
      if (!s.truth_expert && s.called_expert) ++fp;
      if (s.truth_expert && !s.called_expert) ++fn;
    }
    const double denom =
        base == RateBase::AllSamples ? n_all : static_cast<double>(predicted);
    const double fp_ratio = predicted == 0 && base == RateBase::PredictedOnly
                                ? 0.0
                                : static_cast<double>(fp) / denom;
    const double fn_ratio = predicted == 0 && base == RateBase::PredictedOnly
                                ? 0.0
                                : static_cast<double>(fn) / denom;
    curve.false_positive_ratio.push_back(fp_ratio);
    curve.false_negative_ratio.push_back(fn_ratio);
    curve.wrong_ratio.push_back(fp_ratio + fn_ratio);
    curve.prediction_ratio.push_back(static_cast<double>(predicted) / n_all);
  }
  return curve;
}

std::vector<double> default_threshold_grid() {
  std::vector<double> grid;
  grid.reserve(21);
  for (int i = 0; i <= 20; ++i) grid.push_back(static_cast<double>(i) / 20.0);
  return grid;
}

std::string write_curve_csv(const ConfidenceCurve& curve) {
  std::string out = "threshold,wrong,fp,fn,predicted\n";
  char line[160];
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
    std::snprintf(line, sizeof(line), "%.6f,%.9f,%.9f,%.9f,%.9f\n",
                  curve.thresholds[i], curve.wrong_ratio[i],
                  curve.false_positive_ratio[i], curve.false_negative_ratio[i],
                  curve.prediction_ratio[i]);
    out += line;
  }
  return out;
}

}  // namespace skillgp::assess
