#include "skillgp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "skillgp/geometry.hpp"
#include "skillgp/rng.hpp"

namespace skillgp::synth {

namespace {

using nlohmann::json;

// The synthetic world: scope tip near the origin looking mostly along +X
// (tilted a little so the frame construction is exercised off-axis), head
// toward +Z. Instruments enter through a "nostril" behind the tip.
const Eigen::Vector3d kCranial{0.0, 0.0, 1.0};
const Eigen::Vector3d kBaseViewing = Eigen::Vector3d(1.0, 0.12, -0.28).normalized();
const Eigen::Vector3d kNostrilLocal{25.0, 3.0, 0.0};  // scope-local, behind the tip

// Instantaneous sampling rates are clamped just inside the range real
// trackers were observed to cover.
constexpr double kMinHz = 6.05;
constexpr double kMaxHz = 15.95;

// Dropout bursts end with probability 1/kBurstLength per sample, i.e.
// bursts are geometric with this mean length.
constexpr double kBurstLength = 3.0;

double lerp(double from, double to, double t) { return from + t * (to - from); }

// Exact discretization of a mean-reverting (Ornstein-Uhlenbeck) process
// with stationary std `sigma` and time constant `tau`.
double ou_step(double x, double mean, double sigma, double tau, double dt,
               Rng& rng) {
  const double a = std::exp(-dt / tau);
  return mean + (x - mean) * a +
         sigma * std::sqrt(1.0 - a * a) * rng.gauss();
}

Eigen::Vector3d gauss_vec3(Rng& rng) {
  return {rng.gauss(), rng.gauss(), rng.gauss()};
}

// Free-running sample clock: random start phase, per-tick rate wobble.
std::vector<double> make_ticks(const ProfileConfig& cfg, Rng& rng) {
  std::vector<double> ticks;
  double t = rng.uniform() / cfg.mean_sampling_hz;
  while (t < cfg.duration_s) {
    ticks.push_back(t);
    const double hz = std::clamp(
        rng.gauss(cfg.mean_sampling_hz, cfg.sampling_jitter_hz), kMinHz, kMaxHz);
    t += 1.0 / hz;
  }
  return ticks;
}

// Burst dropout mask, then repaired sample by sample until the delivered
// count hits round(tracking_rate * n) exactly.
std::vector<char> make_mask(std::size_t n, double tracking_rate, Rng& rng) {
  std::vector<char> delivered(n, 1);
  if (n == 0 || tracking_rate >= 1.0) return delivered;

  const double p_recover = 1.0 / kBurstLength;
  const double p_drop = p_recover * (1.0 - tracking_rate) / tracking_rate;
  bool tracked = rng.uniform() < tracking_rate;
  for (std::size_t i = 0; i < n; ++i) {
    delivered[i] = tracked ? 1 : 0;
    tracked = tracked ? (rng.uniform() >= p_drop) : (rng.uniform() < p_recover);
  }

  const auto target =
      static_cast<std::size_t>(std::llround(tracking_rate * static_cast<double>(n)));
  std::vector<std::size_t> on, off;
  for (std::size_t i = 0; i < n; ++i) (delivered[i] ? on : off).push_back(i);
  while (on.size() > target) {
    const auto pick = static_cast<std::size_t>(rng.integer(on.size()));
    delivered[on[pick]] = 0;
    on[pick] = on.back();
    on.pop_back();
  }
  while (on.size() < target && !off.empty()) {
    const auto pick = static_cast<std::size_t>(rng.integer(off.size()));
    delivered[off[pick]] = 1;
    on.push_back(off[pick]);
    off[pick] = off.back();
    off.pop_back();
  }
  return delivered;
}

// Replaces poses at dropped ticks with the last delivered pose - trackers
// hold their previous output while the line of sight is blocked.
void apply_stale_hold(std::vector<geometry::PoseSample>& rows,
                      const std::vector<char>& mask) {
  const geometry::PoseSample* last_valid = nullptr;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (mask[i]) {
      rows[i].valid = true;
      last_valid = &rows[i];
    } else {
      rows[i].valid = false;
      if (last_valid) {
        rows[i].position = last_valid->position;
        rows[i].orientation = last_valid->orientation;
      }
    }
  }
}

}  // namespace

void ProfileConfig::validate() const {
  if (!(duration_s > 0.0 && duration_s <= 36000.0)) {
    throw InvalidConfig("duration_s must be in (0, 36000]");
  }
  if (!(mean_sampling_hz > 6.0 && mean_sampling_hz < 16.0)) {
    throw InvalidConfig("mean_sampling_hz must be in (6, 16)");
  }
  if (!(sampling_jitter_hz >= 0.0 && sampling_jitter_hz <= 5.0)) {
    throw InvalidConfig("sampling_jitter_hz must be in [0, 5]");
  }
  if (!(tracking_rate > 0.0 && tracking_rate <= 1.0)) {
    throw InvalidConfig("tracking_rate must be in (0, 1]");
  }
  if (!(depth_mean_mm > 5.0 && depth_mean_mm < 200.0)) {
    throw InvalidConfig("depth_mean_mm must be in (5, 200)");
  }
  if (!(depth_std_mm >= 0.0) || !(axis_offset_mm >= 0.0) ||
      !(speed_std_mm_s >= 0.0) || !(heading_jitter_rad_s >= 0.0)) {
    throw InvalidConfig("spread parameters must be non-negative");
  }
  if (!(speed_mean_mm_s > 0.0)) {
    throw InvalidConfig("speed_mean_mm_s must be positive");
  }
}

ProfileConfig ProfileConfig::expert_profile(std::uint64_t seed) {
  ProfileConfig cfg;
  cfg.skill = SkillLabel::Expert;
  cfg.seed = seed;
  return cfg;  // the defaults are the expert profile
}

ProfileConfig ProfileConfig::novice_profile(std::uint64_t seed) {
  ProfileConfig cfg;
  cfg.skill = SkillLabel::Novice;
  cfg.seed = seed;
  cfg.depth_mean_mm = 55.0;
  cfg.depth_std_mm = 9.0;
  cfg.lateral_bias_y_mm = 10.0;
  cfg.lateral_bias_z_mm = -8.0;
  cfg.axis_offset_mm = 6.0;
  cfg.speed_mean_mm_s = 25.0;
  cfg.speed_std_mm_s = 9.0;
  cfg.heading_jitter_rad_s = 1.5;
  return cfg;
}

ProfileConfig ProfileConfig::profile(SkillLabel label, std::uint64_t seed,
                                     double overlap) {
  if (!(overlap >= 0.0 && overlap <= 1.0)) {
    throw InvalidConfig("overlap must be in [0, 1]");
  }
  if (label == SkillLabel::Expert) return expert_profile(seed);
  ProfileConfig n = novice_profile(seed);
  const ProfileConfig e = expert_profile(seed);
  n.depth_mean_mm = lerp(n.depth_mean_mm, e.depth_mean_mm, overlap);
  n.depth_std_mm = lerp(n.depth_std_mm, e.depth_std_mm, overlap);
  n.lateral_bias_y_mm = lerp(n.lateral_bias_y_mm, e.lateral_bias_y_mm, overlap);
  n.lateral_bias_z_mm = lerp(n.lateral_bias_z_mm, e.lateral_bias_z_mm, overlap);
  n.axis_offset_mm = lerp(n.axis_offset_mm, e.axis_offset_mm, overlap);
  n.speed_mean_mm_s = lerp(n.speed_mean_mm_s, e.speed_mean_mm_s, overlap);
  n.speed_std_mm_s = lerp(n.speed_std_mm_s, e.speed_std_mm_s, overlap);
  n.heading_jitter_rad_s =
      lerp(n.heading_jitter_rad_s, e.heading_jitter_rad_s, overlap);
  return n;
}

io::PoseLog generate_session(const ProfileConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);

  const geometry::CranialVector cranial(kCranial);
  const geometry::EndoscopeFrame nominal = geometry::build_endoscope_frame(
      Eigen::Vector3d::Zero(), -kBaseViewing, cranial);
  const Eigen::Vector3d nostril_world =
      geometry::unproject_point(nominal, kNostrilLocal);

  // Stage 1: both device clocks.
  const std::vector<double> scope_ticks = make_ticks(cfg, rng);
  const std::vector<double> tool_ticks = make_ticks(cfg, rng);

  // Stage 2: endoscope poses. The scope holds position up to a slow
  // mean-reverting wander of the tip, the viewing direction and the roll.
  std::vector<geometry::PoseSample> scope_rows(scope_ticks.size());
  {
    Eigen::Vector3d tip = 0.8 * gauss_vec3(rng);
    double yaw = rng.gauss(0.0, 0.04);
    double pitch = rng.gauss(0.0, 0.04);
    double roll = rng.gauss(0.0, 0.3);
    for (std::size_t k = 0; k < scope_ticks.size(); ++k) {
      if (k > 0) {
        const double dt = scope_ticks[k] - scope_ticks[k - 1];
        for (int i = 0; i < 3; ++i) tip[i] = ou_step(tip[i], 0.0, 0.8, 8.0, dt, rng);
        yaw = ou_step(yaw, 0.0, 0.04, 10.0, dt, rng);
        pitch = ou_step(pitch, 0.0, 0.04, 10.0, dt, rng);
        roll = ou_step(roll, 0.0, 0.3, 10.0, dt, rng);
      }
      const Eigen::Vector3d viewing =
          (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
           Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) * kBaseViewing)
              .normalized();
      Eigen::Quaterniond q =
          Eigen::AngleAxisd(roll, viewing) *
          Eigen::Quaterniond::FromTwoVectors(Eigen::Vector3d::UnitZ(), viewing);
      q.normalize();

      auto& row = scope_rows[k];
      row.t = scope_ticks[k];
      row.position = tip;
      row.orientation = q;
      row.device = geometry::Device::Endoscope;
    }
  }

  // Stage 3: instrument poses. A waypoint walker in the scope's nominal
  // local frame: pick a target and a segment speed from the profile, head
  // for the target with some heading wobble, resample on arrival.
  std::vector<geometry::PoseSample> tool_rows(tool_ticks.size());
  {
    const auto draw_target = [&]() -> Eigen::Vector3d {
      return {-rng.gauss(cfg.depth_mean_mm, cfg.depth_std_mm),
              cfg.lateral_bias_y_mm + rng.gauss(0.0, cfg.axis_offset_mm),
              cfg.lateral_bias_z_mm + rng.gauss(0.0, cfg.axis_offset_mm)};
    };
    const auto draw_speed = [&]() {
      return std::max(rng.gauss(cfg.speed_mean_mm_s, cfg.speed_std_mm_s), 0.5);
    };

    Eigen::Vector3d pos = draw_target();
    Eigen::Vector3d target = draw_target();
    double speed = draw_speed();
    double segment_age = 0.0;
    double tool_roll = rng.gauss(0.0, 0.3);

    for (std::size_t k = 0; k < tool_ticks.size(); ++k) {
      if (k > 0) {
        const double dt = tool_ticks[k] - tool_ticks[k - 1];
        Eigen::Vector3d to_target = target - pos;
        double dist = to_target.norm();
        if (dist < 1.0 || segment_age > 4.0) {
          target = draw_target();
          speed = draw_speed();
          segment_age = 0.0;
          to_target = target - pos;
          dist = to_target.norm();
        }
        Eigen::Vector3d dir =
            dist > 1e-9 ? Eigen::Vector3d(to_target / dist)
                        : Eigen::Vector3d(-1.0, 0.0, 0.0);
        const Eigen::Vector3d g = gauss_vec3(rng);
        const Eigen::Vector3d lateral = g - g.dot(dir) * dir;
        dir = (dir + cfg.heading_jitter_rad_s * std::sqrt(dt) * lateral)
                  .normalized();
        const double step = speed * dt;
        if (step >= dist) {
          pos = target;
          segment_age = 1e9;  // force a fresh segment next tick
        } else {
          pos += step * dir;
          segment_age += dt;
        }
        tool_roll = ou_step(tool_roll, 0.0, 0.3, 6.0, dt, rng);
      }

      const Eigen::Vector3d tip_world = geometry::unproject_point(nominal, pos);
      const Eigen::Vector3d shaft =
          (tip_world - nostril_world).normalized();
      Eigen::Quaterniond q =
          Eigen::AngleAxisd(tool_roll, shaft) *
          Eigen::Quaterniond::FromTwoVectors(Eigen::Vector3d::UnitZ(), shaft);
      q.normalize();

      auto& row = tool_rows[k];
      row.t = tool_ticks[k];
      row.position = tip_world;
      row.orientation = q;
      row.device = geometry::Device::Instrument;
    }
  }

  // Stage 4: burst dropouts, repaired to the exact tracking rate.
  apply_stale_hold(scope_rows, make_mask(scope_rows.size(), cfg.tracking_rate, rng));
  apply_stale_hold(tool_rows, make_mask(tool_rows.size(), cfg.tracking_rate, rng));

  // Stage 5: interleave by timestamp (endoscope first on exact ties).
  io::PoseLog log;
  log.header.version = 1;
  log.header.session_id = cfg.session_id;
  log.header.scope_angle_deg = 0.0;
  log.header.cranial = kCranial;
  log.samples.resize(scope_rows.size() + tool_rows.size());
  std::merge(scope_rows.begin(), scope_rows.end(), tool_rows.begin(),
             tool_rows.end(), log.samples.begin(),
             [](const auto& a, const auto& b) { return a.t < b.t; });
  return log;
}

json LabeledDataset::manifest() const {
  json sessions_json = json::array();
  for (const auto& s : sessions) {
    sessions_json.push_back({{"name", s.name},
                             {"file", s.name + ".csv"},
                             {"label", to_string(s.label)},
                             {"config", s.config}});
  }
  return json{{"format", "skillgp-benchmark"},
              {"version", 1},
              {"sessions", std::move(sessions_json)}};
}

void to_json(json& j, const ProfileConfig& cfg) {
  j = json{{"skill", to_string(cfg.skill)},
           {"session_id", cfg.session_id},
           {"seed", cfg.seed},
           {"mean_sampling_hz", cfg.mean_sampling_hz},
           {"sampling_jitter_hz", cfg.sampling_jitter_hz},
           {"tracking_rate", cfg.tracking_rate},
           {"duration_s", cfg.duration_s},
           {"depth_mean_mm", cfg.depth_mean_mm},
           {"depth_std_mm", cfg.depth_std_mm},
           {"lateral_bias_y_mm", cfg.lateral_bias_y_mm},
           {"lateral_bias_z_mm", cfg.lateral_bias_z_mm},
           {"axis_offset_mm", cfg.axis_offset_mm},
           {"speed_mean_mm_s", cfg.speed_mean_mm_s},
           {"speed_std_mm_s", cfg.speed_std_mm_s},
           {"heading_jitter_rad_s", cfg.heading_jitter_rad_s}};
}

void from_json(const json& j, ProfileConfig& cfg) {
  cfg.skill = parse_skill_label(j.at("skill").get<std::string>());
  cfg.session_id = j.at("session_id").get<std::string>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.mean_sampling_hz = j.at("mean_sampling_hz").get<double>();
  cfg.sampling_jitter_hz = j.at("sampling_jitter_hz").get<double>();
  cfg.tracking_rate = j.at("tracking_rate").get<double>();
  cfg.duration_s = j.at("duration_s").get<double>();
  cfg.depth_mean_mm = j.at("depth_mean_mm").get<double>();
  cfg.depth_std_mm = j.at("depth_std_mm").get<double>();
  cfg.lateral_bias_y_mm = j.at("lateral_bias_y_mm").get<double>();
  cfg.lateral_bias_z_mm = j.at("lateral_bias_z_mm").get<double>();
  cfg.axis_offset_mm = j.at("axis_offset_mm").get<double>();
  cfg.speed_mean_mm_s = j.at("speed_mean_mm_s").get<double>();
  cfg.speed_std_mm_s = j.at("speed_std_mm_s").get<double>();
  cfg.heading_jitter_rad_s = j.at("heading_jitter_rad_s").get<double>();
}

LabeledDataset generate_benchmark(std::uint64_t base_seed,
                                  const BenchmarkOptions& opts) {
  if (opts.n_expert < 1 || opts.n_novice < 1) {
    throw InvalidConfig("benchmark needs at least one session per class");
  }

  LabeledDataset dataset;
  std::uint64_t counter = base_seed;
  char name[32];
  for (int i = 0; i < opts.n_expert + opts.n_novice; ++i) {
    const bool expert = i < opts.n_expert;
    const SkillLabel label = expert ? SkillLabel::Expert : SkillLabel::Novice;
    std::snprintf(name, sizeof(name), "%s_%02d", to_string(label).c_str(),
                  expert ? i : i - opts.n_expert);

    ProfileConfig cfg = ProfileConfig::profile(label, splitmix64(counter++), opts.overlap);
    cfg.session_id = name;
    cfg.duration_s = opts.duration_s;
    cfg.tracking_rate = opts.tracking_rate;
    cfg.mean_sampling_hz = opts.mean_sampling_hz;
    cfg.sampling_jitter_hz = opts.sampling_jitter_hz;

    dataset.sessions.push_back({name, label, cfg, generate_session(cfg)});
  }
  return dataset;
}

LabeledDataset dataset_from_manifest(const json& manifest) {
  try {
    if (manifest.at("format").get<std::string>() != "skillgp-benchmark" ||
        manifest.at("version").get<int>() != 1) {
      throw UnknownVersion("not a benchmark manifest this build understands");
    }
    LabeledDataset dataset;
    for (const auto& s : manifest.at("sessions")) {
      SessionRecord rec;
      rec.name = s.at("name").get<std::string>();
      rec.label = parse_skill_label(s.at("label").get<std::string>());
      rec.config = s.at("config").get<ProfileConfig>();
      rec.log = generate_session(rec.config);
      dataset.sessions.push_back(std::move(rec));
    }
    return dataset;
  } catch (const json::exception& e) {
    throw Error(std::string("benchmark manifest is malformed: ") + e.what());
  }
}

void write_dataset(const std::filesystem::path& dir,
                   const LabeledDataset& dataset) {
  std::filesystem::create_directories(dir);
  for (const auto& s : dataset.sessions) {
    io::save_pose_log(dir / (s.name + ".csv"), s.log);
  }
  std::ofstream manifest(dir / "manifest.json", std::ios::binary);
  if (!manifest) {
    throw Error("cannot write manifest in '" + dir.string() + "'");
  }
  manifest << dataset.manifest().dump(2) << "\n";
}

}  // namespace skillgp::synth
