#include <fstream>
#include <sstream>

#include "avp/error.hpp"
#include "avp/pipeline.hpp"
#include "avp/synth.hpp"
#include "doctest.h"
#include "json.hpp"
#include "support.hpp"

using namespace avp;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("run writes every artifact and evaluates from disk") {
  testing::TempDir dir("pipeline");
  const auto manifest = synth::write_dataset(synth::generate(synth::SynthConfig{}), dir / "data");
  const auto dataset = load_dataset(manifest);
  const auto result = run_pipeline(dataset, RunConfig{});
  write_run_outputs(result, dir / "res");
  for (const char* f : {"segments.jsonl", "instances.jsonl", "scores.jsonl", "hci.jsonl", "trace.json",
                        "profiles.json", "clusters.json", "background.jsonl"})
    CHECK(fs::exists(dir / "res" / f));

  const auto in_memory = evaluate(dataset, result);
  const auto from_disk = evaluate_outputs(dataset, dir / "res");
  CHECK(in_memory.active_speaker_auroc == from_disk.active_speaker_auroc);
  CHECK(in_memory.background_auroc == from_disk.background_auroc);
  CHECK(in_memory.per_iteration_aurocs == from_disk.per_iteration_aurocs);
  CHECK(in_memory.per_iteration_aurocs.size() == result.match.trace.size() + 1);

  write_eval_outputs(dataset, from_disk, dir / "res", dir / "eval");
  std::ifstream in(dir / "eval" / "eval.json");
  const auto doc = nlohmann::json::parse(in);
  for (const char* k : {"active_speaker_auroc", "vas_only_auroc", "background_auroc"}) {
    CHECK(doc[k].is_number());
    CHECK(doc[k].get<double>() >= 0.0);
    CHECK(doc[k].get<double>() <= 1.0);
  }
  CHECK(slurp(dir / "eval" / "roc_points.csv").rfind("curve,fpr,tpr\n", 0) == 0);
}

TEST_CASE("identical inputs give identical bytes") {
  testing::TempDir dir("pipeline_det");
  const auto dataset = load_dataset(synth::write_dataset(synth::generate(synth::SynthConfig{}), dir / "data"));
  write_run_outputs(run_pipeline(dataset, RunConfig{}), dir / "a");
  write_run_outputs(run_pipeline(dataset, RunConfig{}), dir / "b");
  for (const char* f : {"scores.jsonl", "background.jsonl", "trace.json", "profiles.json"})
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
}

TEST_CASE("no seed instances leave background unset") {
  testing::TempDir dir("pipeline_empty");
  const auto dataset = load_dataset(synth::write_dataset(synth::generate(synth::SynthConfig{}), dir / "data"));
  RunConfig cfg;
  cfg.tau = 1.0;
  const auto r = run_pipeline(dataset, cfg);
  CHECK_FALSE(r.has_profiles);
  CHECK(r.warnings.size() >= 2);
  write_run_outputs(r, dir / "res");
  std::ifstream in(dir / "res" / "background.jsonl");
  std::string line;
  std::getline(in, line);
  const auto row = nlohmann::json::parse(line);
  CHECK(row["is_background"].is_null());
  CHECK(row["min_profile_distance"].is_null());
  CHECK_THROWS_AS(evaluate(dataset, r), Error);
}

TEST_CASE("evaluation requires labels") {
  testing::TempDir dir("pipeline_nolabels");
  auto manifest = synth::write_dataset(synth::generate(synth::SynthConfig{}), dir / "data");
  manifest.labels.reset();
  const auto dataset = load_dataset(manifest);
  const auto r = run_pipeline(dataset, RunConfig{});
  CHECK_THROWS_WITH_AS(evaluate(dataset, r), "ground truth required", Error);
}

TEST_CASE("run config validation") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  c.tau = 1.5;
  CHECK_THROWS_AS(c.validate(), Error);
  c = RunConfig{};
  c.max_iters = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = RunConfig{};
  c.max_duration = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = RunConfig{};
  c.min_cluster_size = 1;
  CHECK_THROWS_AS(c.validate(), Error);
}
