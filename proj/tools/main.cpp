// Command-line front end: synthesize benchmarks, train models, assess pose
// logs in batch or from stdin, and export diagnostic curves and feature
// statistics. All output formatting is fixed so repeated runs with the same
// inputs are byte-identical.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "skillgp/model_io.hpp"
#include "skillgp/pipeline.hpp"
#include "skillgp/synth.hpp"

namespace {

using namespace skillgp;
using nlohmann::json;

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write '" + path + "'");
  }
  out << content;
}

// Session inputs shared by train/curve/features: explicit labelled files
// and/or a benchmark manifest whose file entries are relative to it.
struct SessionArgs {
  std::vector<std::string> expert_files;
  std::vector<std::string> novice_files;
  std::string manifest_path;

  void attach(CLI::App* cmd) {
    cmd->add_option("--expert", expert_files,
                    "Pose log recorded by an expert (repeatable)");
    cmd->add_option("--novice", novice_files,
                    "Pose log recorded by a novice (repeatable)");
    cmd->add_option("--manifest", manifest_path,
                    "Benchmark manifest.json listing labelled sessions");
  }

  std::vector<pipeline::LabeledLog> load() const {
    std::vector<pipeline::LabeledLog> logs;
    const auto add = [&logs](const std::filesystem::path& file, SkillLabel label,
                             std::string name) {
      pipeline::LabeledLog item;
      item.log = io::load_pose_log(file);
      item.label = label;
      item.name = name.empty() ? file.stem().string() : std::move(name);
      logs.push_back(std::move(item));
    };
    for (const auto& f : expert_files) add(f, SkillLabel::Expert, "");
    for (const auto& f : novice_files) add(f, SkillLabel::Novice, "");
    if (!manifest_path.empty()) {
      std::ifstream in(manifest_path, std::ios::binary);
      if (!in) {
        throw Error("cannot open manifest '" + manifest_path + "'");
      }
      json manifest;
      try {
        manifest = json::parse(in);
      } catch (const json::exception& e) {
        throw Error(std::string("manifest is not valid JSON: ") + e.what());
      }
      const auto dir = std::filesystem::path(manifest_path).parent_path();
      try {
        for (const auto& s : manifest.at("sessions")) {
          add(dir / s.at("file").get<std::string>(),
              parse_skill_label(s.at("label").get<std::string>()),
              s.at("name").get<std::string>());
        }
      } catch (const json::exception& e) {
        throw Error(std::string("manifest is missing fields: ") + e.what());
      }
    }
    if (logs.empty()) {
      throw Error("no input sessions: pass --expert/--novice files or --manifest");
    }
    return logs;
  }
};

struct KernelArgs {
  double sigma_f = 1.0;
  double length_scale = 1.0;
  double sigma_n = 0.1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--sigma-f", sigma_f, "Kernel signal std")
        ->capture_default_str();
    cmd->add_option("--length-scale", length_scale,
                    "Kernel length scale (per standardized feature)")
        ->capture_default_str();
    cmd->add_option("--sigma-n", sigma_n, "Kernel observation-noise std")
        ->capture_default_str();
  }
};

struct FilterArgs {
  double sigma_pos = 0.3;
  double sigma_speed = 1.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--sigma-pos", sigma_pos,
                    "Tracker position noise std, mm")
        ->capture_default_str();
    cmd->add_option("--sigma-speed", sigma_speed,
                    "Velocity process noise std, mm/s")
        ->capture_default_str();
  }
};

std::string format_summative(const assess::SummativeResult& s) {
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "verdict=%s score=%.3f events=%zu abstained=%zu",
                to_string(s.verdict).c_str(), s.score, s.n_events,
                s.n_abstained);
  return buf;
}

int cmd_synth(const std::string& out_dir, std::uint64_t seed,
              const synth::BenchmarkOptions& opts) {
  const synth::LabeledDataset dataset = synth::generate_benchmark(seed, opts);
  synth::write_dataset(out_dir, dataset);
  for (const auto& s : dataset.sessions) {
    std::printf("%s: %zu rows, %.1f s\n", s.name.c_str(), s.log.samples.size(),
                s.config.duration_s);
  }
  std::printf("wrote %zu sessions + manifest.json to %s\n",
              dataset.sessions.size(), out_dir.c_str());
  return 0;
}

int cmd_train(const SessionArgs& sessions, const pipeline::RunConfig& cfg,
              const std::string& model_path, const std::string& report_path,
              const std::string& events_path) {
  const auto logs = sessions.load();
  const pipeline::TrainResult result = pipeline::run_train(logs, cfg);

  io::save_model(model_path, result.model);
  if (!report_path.empty()) {
    write_text_file(report_path, pipeline::train_report_json(result).dump(2) + "\n");
  }
  if (!events_path.empty()) {
    write_text_file(events_path, pipeline::write_events_csv(result.holdout_events));
  }

  std::printf("pooled %zu samples from %zu sessions; trained on %zu, holdout %zu\n",
              result.n_pool, logs.size(), result.n_train, result.n_holdout);
  std::printf("holdout accuracy (non-abstained): %.4f\n", result.holdout_accuracy);
  for (const auto& s : result.sessions) {
    std::printf("%s: truth=%s %s [%s]\n", s.name.c_str(),
                to_string(s.truth).c_str(), format_summative(s.summative).c_str(),
                s.summative.verdict == s.truth ? "ok" : "WRONG");
  }
  std::printf("model written to %s\n", model_path.c_str());
  return 0;
}

int cmd_assess(const std::string& model_path, const std::string& log_path,
               const pipeline::RunConfig& cfg, const std::string& out_path,
               bool jsonl) {
  const gp::GpModel model = io::load_model(model_path);
  const io::PoseLog log = io::load_pose_log(log_path);
  const pipeline::AssessResult result = pipeline::run_assess(model, log, cfg);

  const std::string events = jsonl
                                 ? pipeline::write_events_jsonl(result.events)
                                 : pipeline::write_events_csv(result.events);
  if (out_path.empty()) {
    std::fputs(events.c_str(), stdout);
  } else {
    write_text_file(out_path, events);
  }
  if (result.summative.n_events == 0) {
    std::fprintf(stderr,
                 "warning: no assessable samples; the >= 0 rule makes an "
                 "empty session score as expert\n");
  }
  std::printf("summative: %s\n", format_summative(result.summative).c_str());
  return 0;
}

int cmd_stream(const std::string& model_path, double threshold,
               const FilterArgs& filter, bool jsonl,
               const std::string& cranial_override, double scope_angle_override,
               bool has_scope_angle) {
  const gp::GpModel model = io::load_model(model_path);

  io::PoseLogStreamParser parser;
  std::optional<pipeline::FeatureExtractor> extractor;
  pipeline::PipelineConfig pcfg;
  pcfg.noise.sigma_pos_obs = filter.sigma_pos;
  pcfg.noise.sigma_speed_proc = filter.sigma_speed;

  std::size_t n_events = 0;
  std::chrono::steady_clock::time_point t0;
  bool timing = false;

  const auto emit = [&](const assess::AssessmentEvent& e) {
    const std::span<const assess::AssessmentEvent> one(&e, 1);
    const std::string line = jsonl ? pipeline::write_events_jsonl(one)
                                   : pipeline::write_events_csv(one);
    std::fputs(line.c_str(), stdout);
    ++n_events;
  };

  std::string line;
  while (std::getline(std::cin, line)) {
    const auto sample = parser.feed(line);
    if (!sample) continue;
    if (!extractor) {
      io::PoseLogHeader header = parser.header();
      if (!cranial_override.empty()) {
        std::istringstream ss(cranial_override);
        char comma;
        if (!(ss >> header.cranial[0] >> comma >> header.cranial[1] >> comma >>
              header.cranial[2])) {
          throw Error("--cranial expects x,y,z");
        }
      }
      if (has_scope_angle) header.scope_angle_deg = scope_angle_override;
      extractor.emplace(header, pcfg);
      t0 = std::chrono::steady_clock::now();
      timing = true;
    }
    for (const auto& f : extractor->push(*sample)) {
      emit(assess::assess_sample(model, f.t, f.selected, threshold));
    }
  }
  if (extractor) {
    for (const auto& f : extractor->finish()) {
      emit(assess::assess_sample(model, f.t, f.selected, threshold));
    }
  }
  std::fflush(stdout);

  if (timing) {
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::fprintf(stderr, "processed %zu assessments in %.3f s (%.1f /s)\n",
                 n_events, elapsed,
                 elapsed > 0.0 ? static_cast<double>(n_events) / elapsed : 0.0);
  }
  return 0;
}

int cmd_curve(const std::string& model_path, const SessionArgs& sessions,
              const pipeline::RunConfig& cfg, double grid_step,
              const std::string& rate_base, const std::string& out_path) {
  if (!(grid_step > 0.0 && grid_step <= 1.0)) {
    throw Error("--grid-step must be in (0, 1]");
  }
  const gp::GpModel model = io::load_model(model_path);
  const auto logs = sessions.load();

  std::vector<double> grid;
  for (double t = 0.0; t <= 1.0 + 1e-12; t += grid_step) {
    grid.push_back(std::min(t, 1.0));
  }
  const auto base = rate_base == "predicted" ? assess::RateBase::PredictedOnly
                                             : assess::RateBase::AllSamples;
  const auto curve = pipeline::run_curve(model, logs, cfg, grid, base);
  const std::string csv = assess::write_curve_csv(curve);
  if (out_path.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    write_text_file(out_path, csv);
    std::printf("curve written to %s\n", out_path.c_str());
  }
  return 0;
}

int cmd_features(const SessionArgs& sessions, const pipeline::RunConfig& cfg,
                 const std::string& out_path) {
  const auto logs = sessions.load();
  const auto stats = pipeline::run_features(logs, cfg.pipeline);
  const std::string csv = pipeline::write_feature_stats_csv(stats);
  if (out_path.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    write_text_file(out_path, csv);
    std::printf("feature statistics written to %s\n", out_path.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surgical skill assessment from endoscope/instrument pose streams"};
  app.require_subcommand(1);

  // --- synth ---
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic labelled benchmark");
  std::string synth_out;
  std::uint64_t synth_seed = 42;
  synth::BenchmarkOptions synth_opts;
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--seed", synth_seed, "Base seed")->capture_default_str();
  synth_cmd->add_option("--experts", synth_opts.n_expert, "Expert session count")
      ->capture_default_str();
  synth_cmd->add_option("--novices", synth_opts.n_novice, "Novice session count")
      ->capture_default_str();
  synth_cmd->add_option("--duration", synth_opts.duration_s, "Session length, s")
      ->capture_default_str();
  synth_cmd->add_option("--tracking-rate", synth_opts.tracking_rate,
                        "Delivered sample fraction")
      ->capture_default_str();
  synth_cmd->add_option("--mean-hz", synth_opts.mean_sampling_hz,
                        "Mean sampling rate")
      ->capture_default_str();
  synth_cmd->add_option("--rate-jitter", synth_opts.sampling_jitter_hz,
                        "Sampling rate wobble std, Hz")
      ->capture_default_str();
  synth_cmd->add_option("--overlap", synth_opts.overlap,
                        "0 = classes well separated, 1 = identical")
      ->capture_default_str();

  // --- train ---
  auto* train_cmd = app.add_subcommand("train", "Train a model on labelled sessions");
  SessionArgs train_sessions;
  train_sessions.attach(train_cmd);
  KernelArgs train_kernel;
  train_kernel.attach(train_cmd);
  FilterArgs train_filter;
  train_filter.attach(train_cmd);
  std::string train_model_out, train_report, train_events;
  pipeline::RunConfig train_cfg;
  bool train_fit = false;
  train_cmd->add_option("--out", train_model_out, "Model file to write")->required();
  train_cmd->add_option("--split", train_cfg.train_split,
                        "Training fraction of the pooled samples")
      ->capture_default_str();
  std::string train_split_by = "pooled";
  train_cmd
      ->add_option("--split-by", train_split_by,
                   "pooled: draw individual samples; session: keep whole "
                   "sessions together (no within-session leakage)")
      ->check(CLI::IsMember({"pooled", "session"}))
      ->capture_default_str();
  train_cmd->add_option("--seed", train_cfg.seed, "Shuffle seed")->capture_default_str();
  train_cmd->add_option("--threshold", train_cfg.uncertainty_threshold,
                        "Abstention threshold for the holdout report")
      ->capture_default_str();
  train_cmd->add_option("--subsample-cap", train_cfg.subsample_cap,
                        "Max training samples")
      ->capture_default_str();
  train_cmd->add_flag("--fit", train_fit,
                      "Fit kernel hyperparameters by marginal likelihood");
  train_cmd->add_option("--report", train_report, "Write a JSON holdout report");
  train_cmd->add_option("--holdout-events", train_events,
                        "Write holdout events as CSV");

  // --- assess ---
  auto* assess_cmd = app.add_subcommand("assess", "Assess one pose log with a model");
  std::string assess_model, assess_log, assess_out, assess_format = "csv";
  pipeline::RunConfig assess_cfg;
  FilterArgs assess_filter;
  assess_filter.attach(assess_cmd);
  assess_cmd->add_option("--model", assess_model, "Model file")->required();
  assess_cmd->add_option("--log", assess_log, "Pose log to assess")->required();
  assess_cmd->add_option("--threshold", assess_cfg.uncertainty_threshold,
                         "Abstention threshold")
      ->capture_default_str();
  assess_cmd->add_option("--out", assess_out, "Write events here instead of stdout");
  assess_cmd->add_option("--format", assess_format, "csv or jsonl")
      ->check(CLI::IsMember({"csv", "jsonl"}))
      ->capture_default_str();

  // --- stream ---
  auto* stream_cmd =
      app.add_subcommand("stream", "Assess pose rows from stdin, line by line");
  std::string stream_model, stream_format = "csv", stream_cranial;
  double stream_threshold = 0.5, stream_scope_angle = 0.0;
  FilterArgs stream_filter;
  stream_filter.attach(stream_cmd);
  stream_cmd->add_option("--model", stream_model, "Model file")->required();
  stream_cmd->add_option("--threshold", stream_threshold, "Abstention threshold")
      ->capture_default_str();
  stream_cmd->add_option("--format", stream_format, "csv or jsonl")
      ->check(CLI::IsMember({"csv", "jsonl"}))
      ->capture_default_str();
  stream_cmd->add_option("--cranial", stream_cranial,
                         "Override the header cranial direction (x,y,z)");
  auto* scope_angle_opt = stream_cmd->add_option(
      "--scope-angle", stream_scope_angle, "Override the header lens angle, deg");

  // --- curve ---
  auto* curve_cmd = app.add_subcommand(
      "curve", "Error/coverage trade-off against the abstention threshold");
  SessionArgs curve_sessions;
  curve_sessions.attach(curve_cmd);
  std::string curve_model, curve_out, curve_rate_base = "all";
  double curve_step = 0.05;
  pipeline::RunConfig curve_cfg;
  curve_cmd->add_option("--model", curve_model, "Model file")->required();
  curve_cmd->add_option("--grid-step", curve_step, "Threshold grid step")
      ->capture_default_str();
  curve_cmd->add_option("--rate-base", curve_rate_base,
                        "Error denominators: all samples or predicted only")
      ->check(CLI::IsMember({"all", "predicted"}))
      ->capture_default_str();
  curve_cmd->add_option("--out", curve_out, "Write CSV here instead of stdout");

  // --- features ---
  auto* features_cmd = app.add_subcommand(
      "features", "Per-channel class statistics and separation scores");
  SessionArgs features_sessions;
  features_sessions.attach(features_cmd);
  std::string features_out;
  features_cmd->add_option("--out", features_out,
                           "Write CSV here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) {
      return cmd_synth(synth_out, synth_seed, synth_opts);
    }
    if (*train_cmd) {
      train_cfg.fit_kernel = train_fit;
      train_cfg.split_by = train_split_by == "session"
                               ? pipeline::SplitBy::Session
                               : pipeline::SplitBy::Pooled;
      train_cfg.kernel = gp::Kernel::isotropic(
          train_kernel.sigma_f, train_kernel.length_scale,
          features::FeatureVector::kDim, train_kernel.sigma_n);
      train_cfg.pipeline.noise.sigma_pos_obs = train_filter.sigma_pos;
      train_cfg.pipeline.noise.sigma_speed_proc = train_filter.sigma_speed;
      return cmd_train(train_sessions, train_cfg, train_model_out, train_report,
                       train_events);
    }
    if (*assess_cmd) {
      assess_cfg.pipeline.noise.sigma_pos_obs = assess_filter.sigma_pos;
      assess_cfg.pipeline.noise.sigma_speed_proc = assess_filter.sigma_speed;
      return cmd_assess(assess_model, assess_log, assess_cfg, assess_out,
                        assess_format == "jsonl");
    }
    if (*stream_cmd) {
      return cmd_stream(stream_model, stream_threshold, stream_filter,
                        stream_format == "jsonl", stream_cranial,
                        stream_scope_angle, scope_angle_opt->count() > 0);
    }
    if (*curve_cmd) {
      return cmd_curve(curve_model, curve_sessions, curve_cfg, curve_step,
                       curve_rate_base, curve_out);
    }
    if (*features_cmd) {
      pipeline::RunConfig cfg;
      return cmd_features(features_sessions, cfg, features_out);
    }
  } catch (const skillgp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
