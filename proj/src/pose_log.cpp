#include "skillgp/pose_log.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace skillgp::io {

namespace {

// Parsed quaternions may be off unit length by at most this much; the
// writer emits enough digits to stay far inside.
constexpr double kQuatNormTol = 1e-6;

double parse_double(std::string_view field, std::size_t line, const char* what) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw MalformedRow(line, std::string("malformed ") + what + " '" +
                                 std::string(field) + "'");
  }
  if (!std::isfinite(value)) {
    throw MalformedRow(line, std::string(what) + " must be finite");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view strip_cr(std::string_view line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) {
    line.remove_suffix(1);
  }
  return line;
}

}  // namespace

std::optional<geometry::PoseSample> PoseLogStreamParser::feed(std::string_view raw) {
  ++line_;
  const std::string_view line = strip_cr(raw);
  if (line.empty()) return std::nullopt;

  if (line.front() == '#') {
    std::string_view body = line.substr(1);
    while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
    const std::size_t eq = body.find('=');
    if (eq == std::string_view::npos) return std::nullopt;  // plain comment
    const std::string key(body.substr(0, eq));
    const std::string value(body.substr(eq + 1));
    if (key == "version") {
      if (value != "1") {
        throw UnknownVersion("unsupported pose log version '" + value + "'");
      }
      header_.version = 1;
    } else if (key == "session") {
      header_.session_id = value;
    } else if (key == "scope_angle_deg") {
      header_.scope_angle_deg = parse_double(value, line_, "scope_angle_deg");
    } else if (key == "cranial") {
      const auto parts = split(value, ',');
      if (parts.size() != 3) {
        throw MalformedRow(line_, "cranial needs exactly 3 components");
      }
      for (int i = 0; i < 3; ++i) {
        header_.cranial[i] = parse_double(parts[i], line_, "cranial component");
      }
    } else {
      header_.extra[key] = value;
    }
    return std::nullopt;
  }

  const auto fields = split(line, ',');
  if (fields.size() != 10) {
    throw MalformedRow(line_, "expected 10 fields, got " +
                                  std::to_string(fields.size()));
  }

  geometry::PoseSample s;
  s.t = parse_double(fields[0], line_, "timestamp");
  if (s.t < 0.0) {
    throw MalformedRow(line_, "timestamp must be non-negative");
  }

  if (fields[1] == "endoscope") {
    s.device = geometry::Device::Endoscope;
  } else if (fields[1] == "instrument") {
    s.device = geometry::Device::Instrument;
  } else {
    throw MalformedRow(line_, "unknown device '" + std::string(fields[1]) + "'");
  }

  for (int i = 0; i < 3; ++i) {
    s.position[i] = parse_double(fields[2 + i], line_, "position component");
  }
  const double qw = parse_double(fields[5], line_, "quaternion component");
  const double qx = parse_double(fields[6], line_, "quaternion component");
  const double qy = parse_double(fields[7], line_, "quaternion component");
  const double qz = parse_double(fields[8], line_, "quaternion component");
  s.orientation = Eigen::Quaterniond(qw, qx, qy, qz);
  if (std::abs(s.orientation.norm() - 1.0) > kQuatNormTol) {
    throw MalformedRow(line_, "quaternion is not unit length");
  }

  if (fields[9] == "1") {
    s.valid = true;
  } else if (fields[9] == "0") {
    s.valid = false;
  } else {
    throw MalformedRow(line_, "valid flag must be 0 or 1");
  }

  double& last = last_t_[s.device == geometry::Device::Endoscope ? 0 : 1];
  if (last >= 0.0 && s.t <= last) {
    throw NonMonotoneTime(
        line_, geometry::to_string(s.device) + " timestamp " +
                   std::to_string(s.t) + " does not increase over " +
                   std::to_string(last));
  }
  last = s.t;

  ++rows_;
  return s;
}

PoseLog parse_pose_log(std::string_view text) {
  PoseLogStreamParser parser;
  PoseLog log;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    if (auto sample = parser.feed(text.substr(start, pos - start))) {
      log.samples.push_back(*sample);
    }
    start = pos + 1;
  }
  if (parser.rows_parsed() == 0) {
    throw EmptyFile("pose log contains no data rows");
  }
  log.header = parser.header();
  return log;
}

std::string write_pose_log(const PoseLog& log) {
  std::string out;
  out.reserve(96 + log.samples.size() * 120);
  char buf[256];

  std::snprintf(buf, sizeof(buf), "# version=%d\n", log.header.version);
  out += buf;
  out += "# session=" + log.header.session_id + "\n";
  std::snprintf(buf, sizeof(buf), "# scope_angle_deg=%.6g\n",
                log.header.scope_angle_deg);
  out += buf;
  std::snprintf(buf, sizeof(buf), "# cranial=%.9g,%.9g,%.9g\n",
                log.header.cranial.x(), log.header.cranial.y(),
                log.header.cranial.z());
  out += buf;
  for (const auto& [key, value] : log.header.extra) {
    out += "# " + key + "=" + value + "\n";
  }

  for (const auto& s : log.samples) {
    // Positions get micrometre resolution; quaternions get enough digits
    // that re-parsing stays within 1e-9 of unit norm.
    std::snprintf(buf, sizeof(buf),
                  "%.6f,%s,%.6f,%.6f,%.6f,%.12f,%.12f,%.12f,%.12f,%d\n", s.t,
                  geometry::to_string(s.device).c_str(), s.position.x(),
                  s.position.y(), s.position.z(), s.orientation.w(),
                  s.orientation.x(), s.orientation.y(), s.orientation.z(),
                  s.valid ? 1 : 0);
    out += buf;
  }
  return out;
}

PoseLog load_pose_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open pose log '" + path.string() + "'");
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_pose_log(text.str());
}

void save_pose_log(const std::filesystem::path& path, const PoseLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write pose log '" + path.string() + "'");
  }
  out << write_pose_log(log);
}

}  // namespace skillgp::io
