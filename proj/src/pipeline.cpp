#include "skillgp/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <span>

#include "skillgp/rng.hpp"

namespace skillgp::pipeline {

namespace {

constexpr double kPi = 3.14159265358979323846;

// The scope's optical axis in its body frame: the handle->tip axis (+Z)
// tilted by the lens angle about body Y. A straight scope looks along its
// shaft; an angled scope looks off to the side by that fixed amount.
Eigen::Vector3d scope_axis_for(double scope_angle_deg) {
  return Eigen::AngleAxisd(scope_angle_deg * kPi / 180.0,
                           Eigen::Vector3d::UnitY()) *
         Eigen::Vector3d::UnitZ();
}

}  // namespace

void RunConfig::validate() const {
  pipeline.validate();
  kernel.validate();
  if (!(train_split > 0.0 && train_split < 1.0)) {
    throw InvalidConfig("train split must be strictly between 0 and 1");
  }
  if (!(uncertainty_threshold >= 0.0 && uncertainty_threshold <= 1.0)) {
    throw InvalidConfig("uncertainty threshold must lie in [0, 1]");
  }
  if (subsample_cap < 1) {
    throw InvalidConfig("subsample cap must be at least 1");
  }
}

FeatureExtractor::FeatureExtractor(const io::PoseLogHeader& header,
                                   PipelineConfig cfg)
    : cranial_(header.cranial),
      scope_axis_body_(scope_axis_for(header.scope_angle_deg)),
      cfg_(cfg),
      filter_(cfg.noise) {
  cfg_.validate();
}

std::optional<ExtractedSample> FeatureExtractor::pair_and_extract(
    const PendingTool& tool, const geometry::PoseSample& scope) {
  const Eigen::Vector3d handle_dir =
      (-(scope.orientation.normalized() * scope_axis_body_)).normalized();
  geometry::EndoscopeFrame frame;
  try {
    frame = geometry::build_endoscope_frame(scope.position, handle_dir, cranial_);
  } catch (const DegenerateFrame&) {
    return std::nullopt;  // unusable viewpoint; skip this sample
  }

  const Eigen::Vector3d tip_local = geometry::project_point(frame, tool.tip_world);
  const Eigen::Vector3d vel_local =
      geometry::project_vector(frame, tool.velocity_world);
  const Eigen::Vector3d shaft_local =
      geometry::instrument_direction_local(frame, tool.orientation);

  ExtractedSample out;
  out.t = tool.t;
  out.candidates = features::extract_candidates(tip_local, vel_local,
                                                shaft_local, prev_shaft_, tool.t);
  out.selected = features::select_features(out.candidates);
  prev_shaft_ = features::ShaftSample{tool.t, shaft_local};
  return out;
}

std::vector<ExtractedSample> FeatureExtractor::resolve_pending(bool flush) {
  std::vector<ExtractedSample> out;
  while (!pending_.empty()) {
    const PendingTool& tool = pending_.front();

    // Candidates: the last scope at or before the tool sample and the first
    // one after. Until a scope at or after tool.t exists, a closer one may
    // still arrive - unless we are flushing at end of stream.
    const geometry::PoseSample* before = nullptr;
    const geometry::PoseSample* after = nullptr;
    for (const auto& s : scopes_) {
      if (s.t <= tool.t) {
        before = &s;
      } else {
        after = &s;
        break;
      }
    }
    if (!flush && !after && (scopes_.empty() || scopes_.back().t < tool.t)) {
      break;  // wait for a later scope sample
    }

    const geometry::PoseSample* best = nullptr;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const geometry::PoseSample* cand : {before, after}) {
      if (!cand) continue;
      const double dist = std::abs(cand->t - tool.t);
      if (dist < best_dist) {
        best = cand;
        best_dist = dist;
      }
    }

    if (best && best_dist <= cfg_.pairing_window_s) {
      if (auto sample = pair_and_extract(tool, *best)) {
        out.push_back(*sample);
      }
    }
    // else: no scope close enough - the sample is dropped.
    pending_.pop_front();
  }

  // Scopes older than this can no longer be nearest-in-window for any
  // pending or future instrument sample (per-device timestamps only move
  // forward), so the buffers stay bounded on endless streams.
  const double horizon =
      pending_.empty()
          ? (filter_.state() ? filter_.state()->t : -std::numeric_limits<double>::infinity())
          : pending_.front().t;
  while (scopes_.size() > 1 && scopes_.front().t < horizon - cfg_.pairing_window_s) {
    scopes_.pop_front();
  }
  return out;
}

std::vector<ExtractedSample> FeatureExtractor::push(
    const geometry::PoseSample& sample) {
  if (!sample.valid) return {};

  if (sample.device == geometry::Device::Endoscope) {
    if (!scopes_.empty() && sample.t <= scopes_.back().t) {
      throw NonMonotoneTime("endoscope timestamps must strictly increase");
    }
    scopes_.push_back(sample);
    return resolve_pending(false);
  }

  // Instrument: filter velocity in the world frame, then queue for pairing.
  const kinematics::SpeedEstimate est = filter_.push(sample.t, sample.position);
  PendingTool tool;
  tool.t = sample.t;
  tool.tip_world = sample.position;
  tool.velocity_world = est.velocity;
  tool.orientation = sample.orientation;
  pending_.push_back(tool);
  return resolve_pending(false);
}

std::vector<ExtractedSample> FeatureExtractor::finish() {
  return resolve_pending(true);
}

std::vector<ExtractedSample> extract_features(const io::PoseLog& log,
                                              const PipelineConfig& cfg) {
  FeatureExtractor extractor(log.header, cfg);
  std::vector<ExtractedSample> out;
  for (const auto& sample : log.samples) {
    auto batch = extractor.push(sample);
    out.insert(out.end(), batch.begin(), batch.end());
  }
  auto tail = extractor.finish();
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

namespace {

struct PooledSample {
  std::size_t session = 0;
  double t = 0.0;
  features::FeatureVector selected;
  SkillLabel truth = SkillLabel::Expert;
};

std::vector<PooledSample> pool_features(std::span<const LabeledLog> logs,
                                        const PipelineConfig& cfg) {
  if (logs.empty()) {
    throw EmptyInput("at least one labelled session is required");
  }
  std::vector<PooledSample> pool;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    for (const auto& f : extract_features(logs[i].log, cfg)) {
      pool.push_back({i, f.t, f.selected, logs[i].label});
    }
  }
  return pool;
}

}  // namespace

TrainResult run_train(std::span<const LabeledLog> logs, const RunConfig& cfg) {
  cfg.validate();
  std::vector<PooledSample> pool = pool_features(logs, cfg.pipeline);
  const std::size_t n_pool = pool.size();
  if (n_pool < 2) {
    throw TooFewSamples("training needs at least two pooled samples");
  }
  const bool has_expert = std::any_of(pool.begin(), pool.end(), [](const auto& p) {
    return p.truth == SkillLabel::Expert;
  });
  const bool has_novice = std::any_of(pool.begin(), pool.end(), [](const auto& p) {
    return p.truth == SkillLabel::Novice;
  });
  if (!has_expert || !has_novice) {
    throw SingleClass("training needs samples from both classes");
  }

  // Seeded shuffle decides which samples train and which are held out. The
  // order vector lists training indices first (split_point of them), then
  // holdout indices; everything downstream only reads that layout.
  Rng rng(cfg.seed);
  std::vector<std::size_t> order;
  std::size_t split_point = 0;
  if (cfg.split_by == SplitBy::Pooled) {
    order.resize(n_pool);
    for (std::size_t i = 0; i < n_pool; ++i) order[i] = i;
    shuffle(order, rng);
    split_point = std::clamp<std::size_t>(
        static_cast<std::size_t>(
            std::llround(cfg.train_split * static_cast<double>(n_pool))),
        1, n_pool - 1);
  } else {
    // Whole sessions go to one side or the other, so the holdout never sees
    // samples that are temporally adjacent to training ones.
    const std::size_t n_sessions = logs.size();
    if (n_sessions < 2) {
      throw TooFewSamples("session-level split needs at least two sessions");
    }
    std::vector<std::size_t> session_order(n_sessions);
    for (std::size_t i = 0; i < n_sessions; ++i) session_order[i] = i;
    shuffle(session_order, rng);
    const auto n_train_sessions = std::clamp<std::size_t>(
        static_cast<std::size_t>(
            std::llround(cfg.train_split * static_cast<double>(n_sessions))),
        1, n_sessions - 1);
    std::vector<char> trains(n_sessions, 0);
    for (std::size_t i = 0; i < n_train_sessions; ++i) {
      trains[session_order[i]] = 1;
    }
    order.reserve(n_pool);
    for (std::size_t i = 0; i < n_pool; ++i) {
      if (trains[pool[i].session]) order.push_back(i);
    }
    split_point = order.size();
    if (split_point == 0 || split_point == n_pool) {
      throw TooFewSamples("session-level split left one side empty");
    }
    // Shuffle within the training block so the subsample cap, when it bites,
    // takes a representative draw instead of the first sessions wholesale.
    shuffle(std::span<std::size_t>(order.data(), split_point), rng);
    for (std::size_t i = 0; i < n_pool; ++i) {
      if (!trains[pool[i].session]) order.push_back(i);
    }
    bool train_expert = false, train_novice = false;
    for (std::size_t i = 0; i < split_point; ++i) {
      (pool[order[i]].truth == SkillLabel::Expert ? train_expert
                                                  : train_novice) = true;
    }
    if (!train_expert || !train_novice) {
      throw SingleClass(
          "session-level split put only one class into training; "
          "try another seed or split fraction");
    }
  }
  // Samples beyond the cap are discarded outright rather than folded into
  // the holdout, so the holdout's definition does not depend on the cap.
  const std::size_t n_train = std::min(split_point, cfg.subsample_cap);

  std::vector<features::FeatureVector> train_features;
  train_features.reserve(n_train);
  for (std::size_t i = 0; i < n_train; ++i) {
    train_features.push_back(pool[order[i]].selected);
  }
  const auto normalizer = features::Normalizer::fit(train_features);

  Eigen::MatrixXd X(n_train, features::FeatureVector::kDim);
  Eigen::VectorXd Y(n_train);
  for (std::size_t i = 0; i < n_train; ++i) {
    X.row(i) = normalizer.apply(Eigen::VectorXd(train_features[i].to_vector()))
                   .transpose();
    Y[i] = label_value(pool[order[i]].truth);
  }

  gp::Kernel kernel = cfg.kernel;
  if (cfg.fit_kernel) {
    kernel = gp::fit_hyperparams(X, Y, kernel);
  }

  TrainResult result;
  result.model = gp::GpModel::train(std::move(X), std::move(Y), kernel, normalizer);
  result.n_pool = n_pool;
  result.n_train = n_train;
  result.n_holdout = n_pool - split_point;

  // Holdout evaluation, grouped back into sessions in time order.
  std::vector<std::vector<const PooledSample*>> by_session(logs.size());
  for (std::size_t i = split_point; i < n_pool; ++i) {
    const PooledSample& s = pool[order[i]];
    by_session[s.session].push_back(&s);
  }

  std::size_t total_predicted = 0;
  std::size_t total_correct = 0;
  for (std::size_t si = 0; si < logs.size(); ++si) {
    auto& samples = by_session[si];
    // A session whose samples all landed in training (possible under the
    // session-level split) has nothing to judge; leave it out of the report.
    if (samples.empty()) continue;
    std::sort(samples.begin(), samples.end(),
              [](const auto* a, const auto* b) { return a->t < b->t; });

    SessionEval eval;
    eval.name = logs[si].name;
    eval.truth = logs[si].label;
    eval.n_samples = samples.size();

    std::vector<assess::AssessmentEvent> events;
    events.reserve(samples.size());
    for (const PooledSample* s : samples) {
      events.push_back(assess::assess_sample(result.model, s->t, s->selected,
                                             cfg.uncertainty_threshold));
      const auto& e = events.back();
      if (e.label != assess::EventLabel::Abstain) {
        ++eval.n_predicted;
        const bool called_expert = e.label == assess::EventLabel::Expert;
        if (called_expert == (s->truth == SkillLabel::Expert)) ++eval.n_correct;
      }
    }
    eval.summative = assess::summative_score(events);
    total_predicted += eval.n_predicted;
    total_correct += eval.n_correct;
    result.sessions.push_back(std::move(eval));
    result.holdout_events.insert(result.holdout_events.end(), events.begin(),
                                 events.end());
  }
  result.holdout_accuracy =
      total_predicted == 0
          ? 0.0
          : static_cast<double>(total_correct) / static_cast<double>(total_predicted);
  return result;
}

AssessResult run_assess(const gp::GpModel& model, const io::PoseLog& log,
                        const RunConfig& cfg) {
  cfg.validate();
  std::vector<assess::TimedFeature> stream;
  for (const auto& f : extract_features(log, cfg.pipeline)) {
    stream.push_back({f.t, f.selected});
  }
  AssessResult result;
  result.events = assess::assess_stream(model, stream, cfg.uncertainty_threshold);
  result.summative = assess::summative_score(result.events);
  return result;
}

assess::ConfidenceCurve run_curve(const gp::GpModel& model,
                                  std::span<const LabeledLog> logs,
                                  const RunConfig& cfg,
                                  std::span<const double> thresholds,
                                  assess::RateBase base) {
  cfg.validate();
  std::vector<assess::LabeledFeature> test_set;
  for (const auto& s : pool_features(logs, cfg.pipeline)) {
    test_set.push_back({s.selected, s.truth});
  }
  return assess::confidence_curve(model, test_set, thresholds, base);
}

features::FeatureStats run_features(std::span<const LabeledLog> logs,
                                    const PipelineConfig& cfg) {
  if (logs.empty()) {
    throw EmptyInput("at least one labelled session is required");
  }
  std::vector<features::LabeledCandidate> dataset;
  for (const auto& log : logs) {
    for (const auto& f : extract_features(log.log, cfg)) {
      dataset.push_back({f.candidates, log.label});
    }
  }
  return features::feature_significance(dataset);
}

std::vector<LabeledLog> to_labeled_logs(const synth::LabeledDataset& dataset) {
  std::vector<LabeledLog> logs;
  logs.reserve(dataset.sessions.size());
  for (const auto& s : dataset.sessions) {
    logs.push_back({s.log, s.label, s.name});
  }
  return logs;
}

std::string write_events_csv(std::span<const assess::AssessmentEvent> events) {
  std::string out;
  out.reserve(events.size() * 48);
  char line[128];
  for (const auto& e : events) {
    std::snprintf(line, sizeof(line), "%.6f,%s,%.6f,%.9f\n", e.t,
                  assess::to_string(e.label).c_str(), e.confidence, e.mean);
    out += line;
  }
  return out;
}

std::string write_events_jsonl(std::span<const assess::AssessmentEvent> events) {
  std::string out;
  for (const auto& e : events) {
    nlohmann::json j{{"t", e.t},
                     {"label", assess::to_string(e.label)},
                     {"confidence", e.confidence},
                     {"mean", e.mean}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string write_feature_stats_csv(const features::FeatureStats& stats) {
  std::string out =
      "channel,mean_expert,std_expert,mean_novice,std_novice,"
      "mean_pooled,std_pooled,significance\n";
  char line[320];
  for (const auto& ch : stats.channels) {
    std::snprintf(line, sizeof(line), "%s,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                  ch.name.c_str(), ch.mean_expert, ch.std_expert,
                  ch.mean_novice, ch.std_novice, ch.mean_pooled, ch.std_pooled,
                  ch.significance);
    out += line;
  }
  return out;
}

nlohmann::json train_report_json(const TrainResult& result) {
  nlohmann::json sessions = nlohmann::json::array();
  bool all_correct = true;
  for (const auto& s : result.sessions) {
    const bool correct = s.summative.verdict == s.truth;
    all_correct = all_correct && correct;
    sessions.push_back({{"name", s.name},
                        {"truth", to_string(s.truth)},
                        {"verdict", to_string(s.summative.verdict)},
                        {"score", s.summative.score},
                        {"correct", correct},
                        {"n_samples", s.n_samples},
                        {"n_predicted", s.n_predicted},
                        {"n_correct", s.n_correct},
                        {"n_abstained", s.summative.n_abstained}});
  }
  return nlohmann::json{
      {"n_pool", result.n_pool},
      {"n_train", result.n_train},
      {"n_holdout", result.n_holdout},
      {"holdout_accuracy", result.holdout_accuracy},
      {"all_sessions_correct", all_correct},
      {"sessions", std::move(sessions)}};
}

}  // namespace skillgp::pipeline
