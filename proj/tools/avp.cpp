#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "avp/density_cluster.hpp"
#include "avp/error.hpp"
#include "avp/io.hpp"
#include "avp/pipeline.hpp"
#include "avp/synth.hpp"
#include "json.hpp"

namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;

int run_command(const std::string& manifest_path, const std::string& out, const avp::RunConfig& config) {
  const auto manifest = avp::load_manifest(manifest_path);
  const auto report = avp::validate_alignment(manifest, config.max_duration);
  for (const auto& v : report.violations) std::cerr << "warning: " << v << '\n';
  const auto dataset = avp::load_dataset(manifest);
  const auto result = avp::run_pipeline(dataset, config);
  avp::write_run_outputs(result, out);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "instances " << result.match.instances.size() << ", hci " << result.match.hci.size()
            << ", iterations " << result.match.trace.size() << ", profiles " << result.profiles.size() << '\n';
  return 0;
}

int eval_command(const std::string& results, const std::string& manifest_path, const std::string& out) {
  const auto dataset = avp::load_dataset(avp::load_manifest(manifest_path));
  if (!dataset.labels) throw avp::Error("ground truth required");
  const auto report = avp::evaluate_outputs(dataset, results);
  avp::write_eval_outputs(dataset, report, results, out);
  std::printf("active_speaker_auroc %.6f\nvas_only_auroc %.6f\nbackground_auroc %.6f\n", report.active_speaker_auroc,
              report.vas_only_auroc, report.background_auroc);
  if (report.gt_baseline_auroc) std::printf("gt_baseline_auroc %.6f\n", *report.gt_baseline_auroc);
  return 0;
}

int synth_command(const std::string& config_path, const std::string& out, std::uint64_t seed) {
  avp::synth::SynthConfig config;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw avp::Error("config not found: " + config_path);
    config = avp::synth::config_from_json(nlohmann::json::parse(in));
  }
  config.seed = seed;
  const auto scenario = avp::synth::generate(config);
  avp::synth::write_dataset(scenario, out);
  std::cout << "segments " << scenario.segments.size() << ", tracks " << scenario.tracks.size() << '\n';
  return 0;
}

int cluster_report_command(const std::string& embeddings_path, const std::string& out, std::size_t mcs,
                           std::size_t min_samples) {
  auto matrix = avp::load_embeddings(embeddings_path);
  matrix.normalize_rows();
  avp::kernels::PointSet points;
  points.dim = matrix.dim();
  for (std::size_t i = 0; i < matrix.rows(); ++i) points.push_back(matrix.row(i));
  avp::ClusterParams params;
  params.min_cluster_size = mcs;
  params.min_samples = min_samples;
  const auto model = avp::fit(points, params);
  const auto doc = avp::cluster_report(model, matrix.row_ids());
  if (out.empty() || out == "-") {
    std::cout << doc.dump(2) << '\n';
  } else {
    std::ofstream file(out);
    if (!file) throw avp::Error("cannot write " + out);
    file << doc.dump(2) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised active speaker localization and background character detection"};
  app.require_subcommand(1);

  avp::RunConfig config;
  std::string manifest, out, results, synth_config, embeddings;
  std::uint64_t synth_seed = 0;
  std::size_t report_mcs = 5, report_min_samples = 0;

  auto* run = app.add_subcommand("run", "score every speech-face instance of a manifest");
  run->add_option("--manifest", manifest, "manifest.json")->required();
  run->add_option("--out", out, "results directory")->required();
  run->add_option("--tau", config.tau, "VAS threshold for the seed set")->capture_default_str();
  run->add_option("--delta", config.delta, "fused-score threshold for admission")->capture_default_str();
  run->add_option("--beta", config.beta, "background distance threshold")->capture_default_str();
  run->add_option("--min-cluster-size", config.min_cluster_size)->capture_default_str();
  run->add_option("--min-samples", config.min_samples, "0 means min-cluster-size")->capture_default_str();
  run->add_option("--max-iters", config.max_iters)->capture_default_str();
  run->add_option("--max-duration", config.max_duration, "segment length cap in seconds")->capture_default_str();
  run->add_option("--seed", config.seed)->capture_default_str();

  auto* eval = app.add_subcommand("eval", "evaluate a results directory against ground truth");
  eval->add_option("--results", results)->required();
  eval->add_option("--manifest", manifest)->required();
  eval->add_option("--out", out)->required();

  auto* synth = app.add_subcommand("synth", "generate a labeled synthetic dataset");
  synth->add_option("--config", synth_config, "JSON overrides of the generator defaults");
  synth->add_option("--out", out)->required();
  synth->add_option("--seed", synth_seed)->required();

  auto* report = app.add_subcommand("cluster-report", "cluster an embedding file and summarize the clusters");
  report->add_option("--embeddings", embeddings)->required();
  report->add_option("--out", out, "output file, '-' for stdout");
  report->add_option("--min-cluster-size", report_mcs)->capture_default_str();
  report->add_option("--min-samples", report_min_samples)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) {
      try {
        config.validate();
      } catch (const avp::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsageError;
      }
      if (!avp::fs::exists(manifest)) {
        std::cerr << "error: manifest not found: " << manifest << '\n';
        return kUsageError;
      }
      return run_command(manifest, out, config);
    }
    if (*eval) return eval_command(results, manifest, out);
    if (*synth) return synth_command(synth_config, out, synth_seed);
    if (*report) return cluster_report_command(embeddings, out, report_mcs, report_min_samples);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kRuntimeError;
}
