#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "skillgp/pose_log.hpp"
#include "skillgp/types.hpp"

namespace skillgp::synth {

/// Complete recipe for one synthetic session. A config plus nothing else
/// determines the generated log byte for byte, so persisting the config in
/// the manifest makes every dataset reproducible.
///
/// The kinematic parameters encode the intended skill contrast: experts
/// hold the instrument close to the scope axis at a steady working depth
/// and move it slowly; novices drift off-axis with a systematic lateral
/// bias, hunt back and forth in depth, and move fast and jerkily.
struct ProfileConfig {
  SkillLabel skill = SkillLabel::Expert;
  std::string session_id;
  std::uint64_t seed = 0;

  // Acquisition behaviour.
  double mean_sampling_hz = 14.0;
  double sampling_jitter_hz = 2.0;  // std of the per-sample rate wobble
  double tracking_rate = 0.9;      // delivered fraction; hit exactly
  double duration_s = 60.0;

  // Kinematics, in the scope's nominal local frame.
  double depth_mean_mm = 35.0;        // working distance in front of the lens
  double depth_std_mm = 5.0;
  double lateral_bias_y_mm = 0.0;     // systematic off-axis displacement
  double lateral_bias_z_mm = 0.0;
  double axis_offset_mm = 2.5;        // lateral wander scale around the bias
  double speed_mean_mm_s = 8.0;
  double speed_std_mm_s = 3.0;
  double heading_jitter_rad_s = 0.4;  // how jerkily the motion changes course

  void validate() const;

  static ProfileConfig expert_profile(std::uint64_t seed);
  static ProfileConfig novice_profile(std::uint64_t seed);
  /// `overlap` pulls the novice kinematics toward the expert ones:
  /// 0 keeps the classes well separated, 1 makes them identical.
  static ProfileConfig profile(SkillLabel label, std::uint64_t seed,
                               double overlap = 0.0);
};

void to_json(nlohmann::json& j, const ProfileConfig& cfg);
void from_json(const nlohmann::json& j, ProfileConfig& cfg);

/// Simulates one session: two free-running device clocks, a wandering
/// endoscope, a waypoint-seeking instrument, and burst dropouts that hit
/// the configured tracking rate exactly. Same config => same bytes.
io::PoseLog generate_session(const ProfileConfig& cfg);

struct SessionRecord {
  std::string name;  // file stem, e.g. "expert_00"
  SkillLabel label;
  ProfileConfig config;
  io::PoseLog log;
};

struct BenchmarkOptions {
  int n_expert = 4;
  int n_novice = 4;
  double duration_s = 60.0;
  double tracking_rate = 0.9;
  double mean_sampling_hz = 14.0;
  double sampling_jitter_hz = 2.0;
  double overlap = 0.0;
};

struct LabeledDataset {
  std::vector<SessionRecord> sessions;

  /// Self-describing JSON index: per session the file name, label and the
  /// full generating config.
  nlohmann::json manifest() const;
};

/// Generates a labelled benchmark; per-session seeds are derived from
/// `base_seed` with splitmix64 so sessions are independent but reproducible.
LabeledDataset generate_benchmark(std::uint64_t base_seed,
                                  const BenchmarkOptions& opts = {});

/// Regenerates the exact dataset a manifest describes.
LabeledDataset dataset_from_manifest(const nlohmann::json& manifest);

/// Writes `<name>.csv` per session plus `manifest.json` into `dir`
/// (created if needed).
void write_dataset(const std::filesystem::path& dir,
                   const LabeledDataset& dataset);

}  // namespace skillgp::synth
