#include "skillgp/features.hpp"

#include <cmath>
#include <optional>
#include <vector>

#include <doctest.h>

#include "skillgp/geometry.hpp"
#include "oracles.hpp"

using namespace skillgp;
using features::CandidateFeatures;
using features::extract_candidates;
using features::FeatureVector;
using features::LabeledCandidate;
using features::Normalizer;
using features::ShaftSample;

namespace {

constexpr double kPi = 3.14159265358979323846;

CandidateFeatures candidates_at(const Eigen::Vector3d& tip,
                                double speed_x = 0.0) {
  return extract_candidates(tip, {speed_x, 0, 0}, Eigen::Vector3d(-1, 0, 0),
                            std::nullopt, 0.0);
}

// Dataset with one channel (d_tip) drawn from configurable per-class
// Gaussians; all other channels constant.
std::vector<LabeledCandidate> gaussian_dataset(oracles::TestRng& rng,
                                               std::size_t n_per_class,
                                               double mean_e, double mean_n,
                                               double std_dev) {
  std::vector<LabeledCandidate> data;
  for (std::size_t i = 0; i < 2 * n_per_class; ++i) {
    const bool expert = i < n_per_class;
    CandidateFeatures c;
    c.d_tip = rng.gauss(expert ? mean_e : mean_n, std_dev);
    data.emplace_back(c, expert ? SkillLabel::Expert : SkillLabel::Novice);
  }
  return data;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("three-four-five triangle distances") {
  const CandidateFeatures c = candidates_at({3, 4, 0});
  CHECK(c.d_tip == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(c.d_line == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("shaft along the viewing direction has zero angle") {
  // The scope looks along -X in its own frame.
  const CandidateFeatures c = extract_candidates(
      {10, 0, 0}, {0, 0, 0}, Eigen::Vector3d(-1, 0, 0), std::nullopt, 0.0);
  CHECK(c.angle == doctest::Approx(0.0).epsilon(1e-12));

  const CandidateFeatures held = extract_candidates(
      {10, 0, 0}, {0, 0, 0}, Eigen::Vector3d(-1, 0, 0),
      ShaftSample{0.0, Eigen::Vector3d(-1, 0, 0)}, 0.5);
  CHECK(held.angular_speed == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("first sample has zero angular speed") {
  const CandidateFeatures c = extract_candidates(
      {1, 1, 1}, {0, 0, 0}, Eigen::Vector3d(0, 1, 0), std::nullopt, 3.0);
  CHECK(c.angular_speed == 0.0);
}

TEST_CASE("angular speed equals swept angle over elapsed time") {
  const ShaftSample prev{1.0, Eigen::Vector3d(0, 0, 1)};
  const CandidateFeatures c = extract_candidates(
      {1, 1, 1}, {0, 0, 0}, Eigen::Vector3d(0, 1, 0), prev, 3.0);
  CHECK(c.angular_speed == doctest::Approx((kPi / 2.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("candidate identities hold on random inputs") {
  oracles::TestRng rng(301);
  std::optional<ShaftSample> prev;
  for (int i = 0; i < 500; ++i) {
    const Eigen::Vector3d tip = rng.vec3(30.0);
    const Eigen::Vector3d vel = rng.vec3(15.0);
    const Eigen::Vector3d shaft = rng.unit_vec3();
    const double t = 0.1 * i;
    const CandidateFeatures c = extract_candidates(tip, vel, shaft, prev, t);

    CHECK(c.d_tip == doctest::Approx(tip.norm()).epsilon(1e-9));
    CHECK(c.d_line ==
          doctest::Approx(std::sqrt(tip.y() * tip.y() + tip.z() * tip.z()))
              .epsilon(1e-9));
    CHECK(c.d_line <= c.d_tip + 1e-12);
    CHECK(c.speed == doctest::Approx(vel.norm()).epsilon(1e-9));
    CHECK(c.angle >= 0.0);
    CHECK(c.angle <= kPi);
    CHECK(c.angular_speed >= 0.0);

    // Angle spot-check against plain vector algebra.
    const double cos_angle = shaft.dot(Eigen::Vector3d(-1, 0, 0));
    CHECK(std::cos(c.angle) == doctest::Approx(cos_angle).epsilon(1e-9));

    prev = ShaftSample{t, shaft};
  }
}

TEST_CASE("distance ratio selection rules") {
  CHECK(features::select_features(candidates_at({-8, 0, 0})).distance_ratio ==
        doctest::Approx(0.0));
  CHECK(features::select_features(candidates_at({0, 4, 3})).distance_ratio ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(features::select_features(candidates_at({3, 4, 0})).distance_ratio ==
        doctest::Approx(0.8).epsilon(1e-12));
  // Tips touching: the ratio is defined as 0 instead of 0/0.
  CHECK(features::select_features(candidates_at({0, 0, 0})).distance_ratio ==
        0.0);
}

TEST_CASE("selected vector copies the remaining channels") {
  CandidateFeatures c = candidates_at({-10, 2, 1}, 7.0);
  const FeatureVector f = features::select_features(c);
  CHECK(f.x == -10.0);
  CHECK(f.y == 2.0);
  CHECK(f.z == 1.0);
  CHECK(f.speed == doctest::Approx(7.0));
}

TEST_CASE("candidates are invariant under a common rigid transform") {
  // Features describe relative motion, so moving the whole scene (scope and
  // instrument together) must not change them.
  oracles::TestRng rng(302);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Vector3d scope_tip = rng.vec3(40.0);
    const Eigen::Vector3d handle = rng.unit_vec3();
    const Eigen::Vector3d cranial = rng.unit_vec3();
    if (std::abs(std::abs(handle.dot(cranial)) - 1.0) < 1e-3) continue;
    const Eigen::Vector3d tool_tip = rng.vec3(40.0);
    const Eigen::Vector3d tool_vel = rng.vec3(10.0);
    const Eigen::Quaterniond tool_q = rng.quat();

    const Eigen::Quaterniond move_q = rng.quat();
    const Eigen::Vector3d move_t = rng.vec3(100.0);

    const auto scene_features = [&](const Eigen::Quaterniond& q,
                                    const Eigen::Vector3d& shift) {
      const auto frame = geometry::build_endoscope_frame(
          q * scope_tip + shift, q * handle,
          geometry::CranialVector(q * cranial));
      const Eigen::Vector3d tip_local =
          geometry::project_point(frame, q * tool_tip + shift);
      const Eigen::Vector3d vel_local =
          geometry::project_vector(frame, q * tool_vel);
      const Eigen::Vector3d shaft_local =
          geometry::instrument_direction_local(frame, q * tool_q);
      return extract_candidates(tip_local, vel_local, shaft_local,
                                std::nullopt, 0.0);
    };

    const CandidateFeatures base =
        scene_features(Eigen::Quaterniond::Identity(), {0, 0, 0});
    const CandidateFeatures moved = scene_features(move_q, move_t);

    CHECK((base.pos_local - moved.pos_local).norm() < 1e-9);
    CHECK(base.d_tip == doctest::Approx(moved.d_tip).epsilon(1e-9));
    CHECK(base.d_line == doctest::Approx(moved.d_line).epsilon(1e-9));
    CHECK(base.speed == doctest::Approx(moved.speed).epsilon(1e-9));
    CHECK(std::abs(base.angle - moved.angle) < 1e-9);
  }
}

TEST_CASE("identical class distributions give zero significance") {
  oracles::TestRng rng(303);
  std::vector<LabeledCandidate> data;
  for (int i = 0; i < 50; ++i) {
    CandidateFeatures c;
    c.pos_local = rng.vec3(10.0);
    c.d_tip = c.pos_local.norm();
    c.d_line = std::hypot(c.pos_local.y(), c.pos_local.z());
    c.speed = rng.uniform(0.0, 20.0);
    c.angle = rng.uniform(0.0, kPi);
    c.angular_speed = rng.uniform(0.0, 2.0);
    data.emplace_back(c, SkillLabel::Expert);
    data.emplace_back(c, SkillLabel::Novice);  // same sample, both labels
  }
  const auto stats = features::feature_significance(data);
  for (const auto& ch : stats.channels) {
    CHECK(ch.significance == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(ch.mean_expert == doctest::Approx(ch.mean_novice));
  }
}

TEST_CASE("disjoint constant classes give a large finite score") {
  std::vector<LabeledCandidate> data;
  for (int i = 0; i < 10; ++i) {
    CandidateFeatures e;
    e.d_tip = 0.0;
    data.emplace_back(e, SkillLabel::Expert);
    CandidateFeatures n;
    n.d_tip = 10.0;
    data.emplace_back(n, SkillLabel::Novice);
  }
  const auto stats = features::feature_significance(data);
  const auto& ch = stats.channel("d_tip");
  CHECK(std::isfinite(ch.significance));
  // Within-class variance is zero; the floored denominator keeps the score
  // finite but enormous.
  CHECK(ch.significance > 1e6);
  CHECK(ch.mean_expert == doctest::Approx(0.0));
  CHECK(ch.mean_novice == doctest::Approx(10.0));
  CHECK(ch.mean_pooled == doctest::Approx(5.0));
}

TEST_CASE("unit-separated Gaussians score close to one") {
  oracles::TestRng rng(304);
  const auto data = gaussian_dataset(rng, 10000, 0.0, 1.0, 1.0);
  const auto stats = features::feature_significance(data);
  CHECK(stats.channel("d_tip").significance ==
        doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("significance is invariant to dataset order and label swap") {
  oracles::TestRng rng(305);
  auto data = gaussian_dataset(rng, 200, 2.0, 5.0, 1.5);
  const auto base = features::feature_significance(data);

  // Reverse order.
  std::vector<LabeledCandidate> reversed(data.rbegin(), data.rend());
  const auto rev = features::feature_significance(reversed);
  CHECK(rev.channel("d_tip").significance ==
        doctest::Approx(base.channel("d_tip").significance).epsilon(1e-12));

  // Swap every label.
  auto swapped = data;
  for (auto& [c, label] : swapped) {
    label = label == SkillLabel::Expert ? SkillLabel::Novice
                                        : SkillLabel::Expert;
  }
  const auto swap = features::feature_significance(swapped);
  CHECK(swap.channel("d_tip").significance ==
        doctest::Approx(base.channel("d_tip").significance).epsilon(1e-12));
}

TEST_CASE("rescaling a channel leaves its significance unchanged") {
  oracles::TestRng rng(306);
  auto data = gaussian_dataset(rng, 300, 1.0, 4.0, 2.0);
  const auto base = features::feature_significance(data);
  for (auto& [c, label] : data) c.d_tip *= 37.5;
  const auto scaled = features::feature_significance(data);
  CHECK(scaled.channel("d_tip").significance ==
        doctest::Approx(base.channel("d_tip").significance).epsilon(1e-9));
}

TEST_CASE("pooled statistics summarize the combined sample") {
  oracles::TestRng rng(307);
  const auto data = gaussian_dataset(rng, 500, 0.0, 2.0, 1.0);
  const auto stats = features::feature_significance(data);
  const auto& ch = stats.channel("d_tip");

  double sum = 0.0;
  for (const auto& [c, label] : data) sum += c.d_tip;
  CHECK(ch.mean_pooled ==
        doctest::Approx(sum / static_cast<double>(data.size())).epsilon(1e-12));
  CHECK(ch.std_pooled > 0.0);
  CHECK(ch.significance == doctest::Approx(std::abs(ch.mean_expert - ch.mean_novice) /
                                           ch.std_pooled));
}

TEST_CASE("significance rejects single-class and tiny datasets") {
  std::vector<LabeledCandidate> one_class(
      5, {CandidateFeatures{}, SkillLabel::Expert});
  CHECK_THROWS_AS(features::feature_significance(one_class), SingleClass);

  std::vector<LabeledCandidate> tiny{
      {CandidateFeatures{}, SkillLabel::Expert},
      {CandidateFeatures{}, SkillLabel::Novice}};
  CHECK_THROWS_AS(features::feature_significance(tiny), TooFewSamples);
}

TEST_CASE("normalizer on a repeated vector centres to zero with scale one") {
  std::vector<FeatureVector> train(7, FeatureVector{3, -1, 2, 0.5, 9});
  const Normalizer norm = Normalizer::fit(train);
  const FeatureVector out = norm.apply(train[0]);
  CHECK(out.x == 0.0);
  CHECK(out.y == 0.0);
  CHECK(out.z == 0.0);
  CHECK(out.distance_ratio == 0.0);
  CHECK(out.speed == 0.0);
  CHECK((norm.scale() - Eigen::VectorXd::Ones(5)).norm() == 0.0);
}

TEST_CASE("normalizer on a symmetric pair is the identity") {
  const std::vector<FeatureVector> train{{-1, -1, -1, -1, -1},
                                         {1, 1, 1, 1, 1}};
  const Normalizer norm = Normalizer::fit(train);
  for (const auto& f : train) {
    const Eigen::VectorXd out = norm.apply(Eigen::VectorXd(f.to_vector()));
    CHECK((out - f.to_vector()).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("normalized training set has zero mean and unit std") {
  oracles::TestRng rng(308);
  std::vector<FeatureVector> train;
  for (int i = 0; i < 400; ++i) {
    train.push_back({rng.gauss(5, 3), rng.gauss(-2, 8), rng.gauss(0, 1),
                     rng.uniform(0, 1), rng.uniform(0, 40)});
  }
  const Normalizer norm = Normalizer::fit(train);

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(5);
  for (const auto& f : train) mean += norm.apply(Eigen::VectorXd(f.to_vector()));
  mean /= static_cast<double>(train.size());
  CHECK(mean.cwiseAbs().maxCoeff() < 1e-9);

  Eigen::VectorXd var = Eigen::VectorXd::Zero(5);
  for (const auto& f : train) {
    const Eigen::VectorXd d =
        norm.apply(Eigen::VectorXd(f.to_vector())) - mean;
    var += d.cwiseProduct(d);
  }
  var /= static_cast<double>(train.size());
  CHECK((var - Eigen::VectorXd::Ones(5)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("normalizer rejects empty input and dimension mismatch") {
  CHECK_THROWS_AS(Normalizer::fit({}), EmptyTrainingSet);
  const Normalizer norm = Normalizer::identity(5);
  CHECK_THROWS_AS(norm.apply(Eigen::VectorXd::Zero(3)), DimensionMismatch);
}

TEST_CASE("channel lookup by name") {
  oracles::TestRng rng(309);
  const auto data = gaussian_dataset(rng, 5, 0.0, 1.0, 0.5);
  const auto stats = features::feature_significance(data);
  CHECK(stats.channels.size() == features::candidate_channel_names().size());
  CHECK_THROWS_AS(stats.channel("no_such_channel"), Error);
}

}  // TEST_SUITE
