#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skillgp/geometry.hpp"

namespace skillgp::io {

/// Metadata lines of a pose log (`# key=value` before or between rows).
struct PoseLogHeader {
  int version = 1;
  std::string session_id;
  double scope_angle_deg = 0.0;          // lens angle of the scope
  Eigen::Vector3d cranial{0.0, 0.0, 1.0};  // world-frame "toward the head"
  std::map<std::string, std::string> extra;  // unknown keys, kept verbatim
};

struct PoseLog {
  PoseLogHeader header;
  std::vector<geometry::PoseSample> samples;
};

/// Line-at-a-time parser so live streams and whole files share one
/// implementation. Feed every line (with or without the trailing newline);
/// data rows come back as samples, header/comment/blank lines return
/// nullopt. Errors carry 1-based line numbers.
///
/// Row format (strict, 10 comma-separated fields):
///   t,device,px,py,pz,qw,qx,qy,qz,valid
/// with device in {endoscope, instrument} and valid in {0, 1}. Timestamps
/// must strictly increase per device.
class PoseLogStreamParser {
 public:
  std::optional<geometry::PoseSample> feed(std::string_view line);

  const PoseLogHeader& header() const { return header_; }
  std::size_t line_number() const { return line_; }
  std::size_t rows_parsed() const { return rows_; }

 private:
  PoseLogHeader header_;
  std::size_t line_ = 0;
  std::size_t rows_ = 0;
  double last_t_[2] = {-1.0, -1.0};  // per device, -1 = none yet
};

/// Parses a complete log. Throws EmptyFile when there are no data rows.
PoseLog parse_pose_log(std::string_view text);

/// Serializes a log in the exact format parse_pose_log accepts; parsing the
/// result and writing it again is byte-identical.
std::string write_pose_log(const PoseLog& log);

PoseLog load_pose_log(const std::filesystem::path& path);
void save_pose_log(const std::filesystem::path& path, const PoseLog& log);

}  // namespace skillgp::io
