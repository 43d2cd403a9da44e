#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "skillgp/gp.hpp"

namespace skillgp::io {

/// FNV-1a over the little-endian byte image of the doubles, reported as a
/// 16-digit hex string. Guards persisted training data against corruption.
std::uint64_t fnv1a64(std::span<const double> values);
std::string checksum_hex(std::span<const double> values);

/// Serializes kernel, normalizer and training data as JSON. The Cholesky
/// factor is deliberately not stored: load_model retrains from (X, Y),
/// which keeps the file small and makes corruption detectable via the
/// checksums instead of silently producing a broken factorization.
std::string write_model_json(const gp::GpModel& model);

/// Inverse of write_model_json. Throws UnknownVersion for files from a
/// different format generation and Error on checksum mismatch.
gp::GpModel read_model_json(const std::string& text);

void save_model(const std::filesystem::path& path, const gp::GpModel& model);
gp::GpModel load_model(const std::filesystem::path& path);

}  // namespace skillgp::io
