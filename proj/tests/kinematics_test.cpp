#include "skillgp/kinematics.hpp"

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include "oracles.hpp"

using namespace skillgp;
using kinematics::KinematicState;
using kinematics::NoiseConfig;
using kinematics::TimedPosition;

namespace {

// Largest symmetry violation and most negative eigenvalue of a covariance.
void check_covariance_health(const kinematics::Matrix6d& P) {
  CHECK((P - P.transpose()).cwiseAbs().maxCoeff() < 1e-9);
  Eigen::SelfAdjointEigenSolver<kinematics::Matrix6d> eig(P);
  CHECK(eig.eigenvalues().minCoeff() > -1e-9);
}

}  // namespace

TEST_SUITE("kinematics") {

TEST_CASE("init takes the observation as position with zero velocity") {
  const NoiseConfig cfg;
  for (const Eigen::Vector3d& obs :
       {Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(1, 2, 3)}) {
    const KinematicState s = kinematics::kf_init(obs, 7.5, cfg);
    CHECK(s.t == 7.5);
    CHECK(s.position() == obs);
    CHECK(s.velocity() == Eigen::Vector3d::Zero());
    check_covariance_health(s.covariance);
    // Documented prior: tight on position, wide on velocity.
    CHECK(s.covariance(0, 0) ==
          doctest::Approx(cfg.sigma_pos_obs * cfg.sigma_pos_obs));
    CHECK(s.covariance(3, 3) == doctest::Approx(100.0 * 100.0));
  }
}

TEST_CASE("predict with dt zero changes nothing") {
  const NoiseConfig cfg;
  KinematicState s = kinematics::kf_init({1, 2, 3}, 0.0, cfg);
  s.x.tail<3>() = Eigen::Vector3d(4, 5, 6);
  const KinematicState after = kinematics::kf_predict(s, 0.0, cfg);
  CHECK(after.x == s.x);
  CHECK(after.covariance == s.covariance);
  CHECK(after.t == s.t);
}

TEST_CASE("predict moves the position by velocity times dt") {
  const NoiseConfig cfg;
  KinematicState s = kinematics::kf_init({0, 0, 0}, 0.0, cfg);
  s.x.tail<3>() = Eigen::Vector3d(5, 0, 0);
  const KinematicState after = kinematics::kf_predict(s, 1.0, cfg);
  CHECK(after.position().isApprox(Eigen::Vector3d(5, 0, 0), 1e-15));
  CHECK(after.velocity().isApprox(Eigen::Vector3d(5, 0, 0), 1e-15));
}

TEST_CASE("negative dt is rejected") {
  const NoiseConfig cfg;
  const KinematicState s = kinematics::kf_init({0, 0, 0}, 0.0, cfg);
  CHECK_THROWS_AS(kinematics::kf_predict(s, -0.1, cfg), NegativeDt);
}

TEST_CASE("predict never shrinks the position covariance") {
  const NoiseConfig cfg;
  oracles::TestRng rng(201);
  for (int trial = 0; trial < 50; ++trial) {
    KinematicState s = kinematics::kf_init(rng.vec3(10.0), 0.0, cfg);
    // Run a few updates so P is no longer the construction-time diagonal.
    for (int i = 0; i < 5; ++i) {
      s = kinematics::kf_update(kinematics::kf_predict(s, 0.1, cfg),
                                rng.vec3(10.0), cfg);
    }
    const double dt = rng.uniform(0.01, 1.0);
    const KinematicState after = kinematics::kf_predict(s, dt, cfg);
    const Eigen::Matrix3d growth = (after.covariance - s.covariance).topLeftCorner<3, 3>();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(growth);
    CHECK(eig.eigenvalues().minCoeff() > -1e-12);
  }
}

TEST_CASE("update with the predicted position leaves the mean unchanged") {
  const NoiseConfig cfg;
  KinematicState s = kinematics::kf_init({1, 1, 1}, 0.0, cfg);
  s = kinematics::kf_predict(s, 0.1, cfg);
  const double trace_before = s.covariance.topLeftCorner<3, 3>().trace();
  const KinematicState after = kinematics::kf_update(s, s.position(), cfg);
  CHECK((after.x - s.x).norm() < 1e-12);
  CHECK(after.covariance.topLeftCorner<3, 3>().trace() < trace_before);
}

TEST_CASE("filter matches a textbook reference implementation") {
  const NoiseConfig cfg;
  oracles::TestRng rng(202);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Vector3d first = rng.vec3(20.0);
    KinematicState s = kinematics::kf_init(first, 0.0, cfg);
    oracles::RefKalman ref;
    ref.sigma_pos = cfg.sigma_pos_obs;
    ref.sigma_speed = cfg.sigma_speed_proc;
    ref.init(first);

    for (int i = 0; i < 30; ++i) {
      const double dt = rng.uniform(0.02, 0.5);
      const Eigen::Vector3d obs = rng.vec3(20.0);
      s = kinematics::kf_update(kinematics::kf_predict(s, dt, cfg), obs, cfg);
      ref.predict(dt);
      ref.update(obs);
      CHECK((s.x - ref.x).cwiseAbs().maxCoeff() < 1e-9);
      CHECK((s.covariance - ref.P).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("stationary target: speed decays below 0.05 mm/s") {
  const NoiseConfig cfg;
  const Eigen::Vector3d obs(1, 1, 1);
  KinematicState s = kinematics::kf_init(obs, 0.0, cfg);
  for (int i = 1; i <= 100; ++i) {
    s = kinematics::kf_update(kinematics::kf_predict(s, 0.1, cfg), obs, cfg);
  }
  CHECK(s.speed() < 0.05);
}

TEST_CASE("constant velocity ramp: speed within 1% after 50 samples") {
  const NoiseConfig cfg;
  KinematicState s = kinematics::kf_init({0, 0, 0}, 0.0, cfg);
  for (int i = 1; i <= 50; ++i) {
    const double t = 0.1 * i;
    s = kinematics::kf_update(kinematics::kf_predict(s, 0.1, cfg),
                              {5.0 * t, 0.0, 0.0}, cfg);
  }
  CHECK(s.velocity().x() == doctest::Approx(5.0).epsilon(0.01));
  CHECK(s.speed() == doctest::Approx(5.0).epsilon(0.01));
}

TEST_CASE("covariance stays symmetric PSD through random sequences") {
  const NoiseConfig cfg;
  oracles::TestRng rng(203);
  KinematicState s = kinematics::kf_init(rng.vec3(5.0), 0.0, cfg);
  for (int i = 0; i < 500; ++i) {
    s = kinematics::kf_predict(s, rng.uniform(0.0, 0.6), cfg);
    check_covariance_health(s.covariance);
    if (rng.integer(0, 3) != 0) {
      s = kinematics::kf_update(s, rng.vec3(5.0), cfg);
      check_covariance_health(s.covariance);
    }
  }
}

TEST_CASE("update never increases the position covariance trace") {
  const NoiseConfig cfg;
  oracles::TestRng rng(204);
  KinematicState s = kinematics::kf_init(rng.vec3(5.0), 0.0, cfg);
  for (int i = 0; i < 200; ++i) {
    s = kinematics::kf_predict(s, rng.uniform(0.0, 0.4), cfg);
    const double before = s.covariance.topLeftCorner<3, 3>().trace();
    s = kinematics::kf_update(s, rng.vec3(5.0), cfg);
    CHECK(s.covariance.topLeftCorner<3, 3>().trace() <= before + 1e-12);
  }
}

TEST_CASE("inserting a dt-zero predict between steps changes nothing") {
  const NoiseConfig cfg;
  oracles::TestRng rng(205);
  KinematicState plain = kinematics::kf_init({0, 0, 0}, 0.0, cfg);
  KinematicState padded = plain;
  for (int i = 0; i < 50; ++i) {
    const double dt = rng.uniform(0.01, 0.3);
    const Eigen::Vector3d obs = rng.vec3(10.0);
    plain = kinematics::kf_update(kinematics::kf_predict(plain, dt, cfg), obs, cfg);
    padded = kinematics::kf_predict(padded, 0.0, cfg);
    padded = kinematics::kf_update(kinematics::kf_predict(padded, dt, cfg), obs, cfg);
    padded = kinematics::kf_predict(padded, 0.0, cfg);
    CHECK(padded.x == plain.x);
    CHECK(padded.covariance == plain.covariance);
  }
}

TEST_CASE("single-sample track reports zero speed") {
  const std::vector<TimedPosition> track{{0.0, {3, 2, 1}}};
  const auto out = kinematics::estimate_speed(track);
  REQUIRE(out.size() == 1);
  CHECK(out[0].speed == 0.0);
  CHECK(out[0].t == 0.0);
}

TEST_CASE("empty track is rejected") {
  CHECK_THROWS_AS(kinematics::estimate_speed({}), EmptyTrack);
}

TEST_CASE("out-of-order track is rejected") {
  const std::vector<TimedPosition> track{{0.0, {0, 0, 0}}, {1.0, {1, 0, 0}},
                                         {0.5, {2, 0, 0}}};
  CHECK_THROWS_AS(kinematics::estimate_speed(track), NonMonotoneTime);
}

TEST_CASE("constant-position track: speeds decay toward zero") {
  std::vector<TimedPosition> track;
  for (int i = 0; i < 80; ++i) track.push_back({0.1 * i, {4, -2, 9}});
  const auto out = kinematics::estimate_speed(track);
  CHECK(out.back().speed < 0.01);
}

TEST_CASE("integrated velocity reconstructs a sinusoidal track") {
  // Verification mirrors how the smoother is validated against recordings:
  // integrate the estimated velocity and compare with the raw positions.
  const NoiseConfig cfg;
  oracles::TestRng rng(206);
  const double omega = 2.0 * 3.14159265358979323846 / 12.0;

  std::vector<TimedPosition> track;
  for (int i = 0; i <= 200; ++i) {
    const double t = 0.1 * i;
    Eigen::Vector3d p(5.0 * std::cos(omega * t), 2.5 * std::cos(omega * t),
                      1.5 * std::cos(1.3 * omega * t));
    p += rng.vec3(0.1);  // tracker jitter
    track.push_back({t, p});
  }
  const auto estimates = kinematics::estimate_speed(track, cfg);
  REQUIRE(estimates.size() == track.size());

  // Trapezoidal integration of the velocity estimates, anchored at the
  // first observation.
  Eigen::Vector3d integrated = track.front().p;
  double sum_sq = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 1; i < estimates.size(); ++i) {
    const double dt = estimates[i].t - estimates[i - 1].t;
    integrated += 0.5 * dt * (estimates[i].velocity + estimates[i - 1].velocity);
    if (estimates[i].t > 3.0) {  // skip the velocity-prior burn-in
      sum_sq += (integrated - track[i].p).squaredNorm();
      ++count;
    }
  }
  const double rms = std::sqrt(sum_sq / static_cast<double>(count));
  CHECK(rms < 2.0);
}

TEST_CASE("non-positive noise parameters are rejected") {
  NoiseConfig cfg;
  cfg.sigma_pos_obs = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
  cfg.sigma_pos_obs = 0.3;
  cfg.sigma_speed_proc = -1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
}

}  // TEST_SUITE
