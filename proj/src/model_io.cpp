#include "skillgp/model_io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace skillgp::io {

namespace {

using nlohmann::json;

constexpr const char* kFormatName = "skillgp-model";
constexpr int kFormatVersion = 1;

std::vector<double> to_vector(const Eigen::MatrixXd& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  }
  return out;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

}  // namespace

std::uint64_t fnv1a64(std::span<const double> values) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (double v : values) {
    std::uint64_t bits = 0;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    for (int byte = 0; byte < 8; ++byte) {
      hash ^= (bits >> (8 * byte)) & 0xffULL;
      hash *= 0x100000001b3ULL;
    }
  }
  return hash;
}

std::string checksum_hex(std::span<const double> values) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(values)));
  return buf;
}

std::string write_model_json(const gp::GpModel& model) {
  const auto x_flat = to_vector(model.inputs());
  const auto y_flat = to_vector(model.labels());

  json j;
  j["format"] = kFormatName;
  j["version"] = kFormatVersion;
  j["kernel"] = {{"sigma_f", model.kernel().sigma_f},
                 {"length_scales", vector_to_json(model.kernel().length_scales)},
                 {"sigma_n", model.kernel().sigma_n}};
  j["normalizer"] = {{"mean", vector_to_json(model.normalizer().mean())},
                     {"scale", vector_to_json(model.normalizer().scale())}};
  j["n"] = model.size();
  j["d"] = model.dim();
  json rows = json::array();
  for (Eigen::Index r = 0; r < model.size(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < model.dim(); ++c) row.push_back(model.inputs()(r, c));
    rows.push_back(std::move(row));
  }
  j["x"] = std::move(rows);
  json labels = json::array();
  for (Eigen::Index i = 0; i < model.size(); ++i) {
    labels.push_back(static_cast<int>(model.labels()[i]));
  }
  j["y"] = std::move(labels);
  j["checksum_x"] = checksum_hex(x_flat);
  j["checksum_y"] = checksum_hex(y_flat);
  return j.dump(2) + "\n";
}

gp::GpModel read_model_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("model file is not valid JSON: ") + e.what());
  }

  try {
    if (j.at("format").get<std::string>() != kFormatName) {
      throw UnknownVersion("not a model file (format '" +
                           j.at("format").get<std::string>() + "')");
    }
    if (j.at("version").get<int>() != kFormatVersion) {
      throw UnknownVersion("unsupported model version " +
                           std::to_string(j.at("version").get<int>()));
    }

    gp::Kernel kernel;
    kernel.sigma_f = j.at("kernel").at("sigma_f").get<double>();
    kernel.length_scales = vector_from_json(j.at("kernel").at("length_scales"));
    kernel.sigma_n = j.at("kernel").at("sigma_n").get<double>();

    auto normalizer = features::Normalizer::from_stats(
        vector_from_json(j.at("normalizer").at("mean")),
        vector_from_json(j.at("normalizer").at("scale")));

    const auto n = j.at("n").get<Eigen::Index>();
    const auto d = j.at("d").get<Eigen::Index>();
    if (n < 0 || d < 0 || j.at("x").size() != static_cast<std::size_t>(n) ||
        j.at("y").size() != static_cast<std::size_t>(n)) {
      throw Error("model dimensions are inconsistent");
    }

    Eigen::MatrixXd X(n, d);
    for (Eigen::Index r = 0; r < n; ++r) {
      const json& row = j.at("x")[static_cast<std::size_t>(r)];
      if (row.size() != static_cast<std::size_t>(d)) {
        throw Error("model input row has wrong dimension");
      }
      for (Eigen::Index c = 0; c < d; ++c) {
        X(r, c) = row[static_cast<std::size_t>(c)].get<double>();
      }
    }
    Eigen::VectorXd Y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      Y[i] = j.at("y")[static_cast<std::size_t>(i)].get<double>();
    }

    if (checksum_hex(to_vector(X)) != j.at("checksum_x").get<std::string>() ||
        checksum_hex(to_vector(Y)) != j.at("checksum_y").get<std::string>()) {
      throw Error("model checksum mismatch: training data is corrupted");
    }

    if (n == 0) {
      return gp::GpModel::prior(std::move(kernel), std::move(normalizer));
    }
    // Retrain rather than trusting a stored factorization; this revalidates
    // positive definiteness of the persisted data as a side effect.
    return gp::GpModel::train(std::move(X), std::move(Y), std::move(kernel),
                              std::move(normalizer));
  } catch (const json::exception& e) {
    throw Error(std::string("model file is missing fields: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const gp::GpModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write model '" + path.string() + "'");
  }
  out << write_model_json(model);
}

gp::GpModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open model '" + path.string() + "'");
  }
  std::ostringstream text;
  text << in.rdbuf();
  return read_model_json(text.str());
}

}  // namespace skillgp::io
