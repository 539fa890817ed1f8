#include <algorithm>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"
#include "slp/checkpoint.hpp"
#include "slp/dataset.hpp"
#include "slp/evaluation.hpp"
#include "slp/pose_io.hpp"
#include "slp/run_config.hpp"
#include "slp/training.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result slp_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "slp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = slp::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

fs::path write_config(const fs::path& dir) {
  const json cfg = {
      {"seed", 3},
      {"model", {{"num_layers", 1}, {"num_heads", 2}, {"model_dim", 16}, {"ff_dim", 32}}},
      {"slp_train", {{"total_epochs", 2}, {"dev_every", 0}}},
      {"slt_train", {{"total_epochs", 2}, {"dev_every", 0}}},
      {"decoding", {{"max_frames", 12}}},
      {"synth", {{"num_samples", 6}, {"num_signers", 2}, {"min_words", 2}, {"max_words", 3}, {"test_fraction", 0.34}}},
      {"eval", {{"split", "test"}}},
  };
  const auto path = dir / "config.json";
  std::ofstream(path) << cfg.dump(2);
  return path;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(slp_cli({}).code == 2);
  CHECK(slp_cli({"fly"}).code == 2);
  CHECK(slp_cli({"generate"}).code == 2);
  const auto dir = slp::testing::temp_dir("cli_usage");
  CHECK(slp_cli({"--config", (dir / "absent.json").string(), "inspect"}).code == 2);
  std::ofstream(dir / "bad.json") << R"({"model": {"num_layers": 1, "colour": "red"}})";
  CHECK(slp_cli({"--config", (dir / "bad.json").string(), "inspect"}).code == 2);
  CHECK(slp_cli({"--out", dir.string(), "evaluate", "--slp", "none.ckpt", "--slt", "none.ckpt", "--manifest",
                 "none.json"})
            .code == 2);
}

TEST_CASE("full command pipeline") {
  const auto dir = slp::testing::temp_dir("cli_pipeline");
  const auto config = write_config(dir).string();
  auto in = [&](const char* sub) { return (dir / sub).string(); };
  auto run = [&](const char* out, std::vector<std::string> args) {
    args.insert(args.begin(), {"--config", config, "--out", in(out)});
    return slp_cli(args);
  };

  REQUIRE(run("raw", {"synth"}).code == 0);
  CHECK(fs::exists(dir / "raw" / "synth.provenance.json"));

  const auto prepared = run("data", {"prepare", "--manifest", in("raw/raw_manifest.json")});
  REQUIRE(prepared.code == 0);
  CHECK(prepared.out.find("prepared 6 samples") != std::string::npos);
  SUBCASE("prepare reruns byte-identically") {
    REQUIRE(run("data2", {"prepare", "--manifest", in("raw/raw_manifest.json")}).code == 0);
    CHECK(slurp(dir / "data" / "manifest.json") == slurp(dir / "data2" / "manifest.json"));
    for (const auto& r : slp::pose::read_manifest(dir / "data" / "manifest.json")) {
      CHECK(slurp(dir / "data" / r.pose_path) == slurp(dir / "data2" / r.pose_path));
    }
    CHECK(slurp(dir / "data" / "prepare.provenance.json") == slurp(dir / "data2" / "prepare.provenance.json"));
  }
  SUBCASE("corrupt stream is named") {
    std::ofstream(dir / "raw" / "raw" / "s00004.jsonl") << "[]\n";
    const auto r = run("data3", {"prepare", "--manifest", in("raw/raw_manifest.json")});
    CHECK(r.code != 0);
    CHECK(r.err.find("s00004") != std::string::npos);
  }
  SUBCASE("train, generate, evaluate, render, inspect") {
    REQUIRE(run("gloss", {"gloss", "--manifest", in("data/manifest.json")}).code == 0);
    const auto glossed = slp::pose::read_manifest(dir / "gloss" / "manifest.json");
    for (const auto& r : glossed) CHECK(r.gloss.has_value());

    REQUIRE(run("models", {"train-slt", "--manifest", in("data/manifest.json")}).code == 0);
    CHECK(fs::exists(dir / "models" / "slt_last.ckpt"));
    CHECK(fs::exists(dir / "models" / "slt_best.ckpt"));

    const auto missing = run("models", {"train-slp", "--manifest", in("data/manifest.json")});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("--slt") != std::string::npos);
    REQUIRE(run("models", {"train-slp", "--manifest", in("data/manifest.json"), "--slt", in("models/slt_best.ckpt")})
                .code == 0);
    const auto log = slurp(dir / "models" / "slp_train_log.jsonl");
    CHECK(std::count(log.begin(), log.end(), '\n') == 2);
    CHECK(log.find("TEACHER_FORCING") != std::string::npos);
    CHECK(log.find("AUTOREGRESSIVE") != std::string::npos);

    SUBCASE("resume continues the epoch numbering") {
      // Interrupted run: one of the two configured epochs.
      const auto cfg = slp::config::load_run_config(config);
      const auto ds = slp::data::load_dataset(dir / "data" / "manifest.json");
      slp::data::SampleFilter train;
      train.split = slp::pose::Split::train;
      slp::training::SltTrainer trainer(cfg.model, cfg.slt_train, slp::data::build_vocabulary(ds));
      trainer.run_epoch(slp::data::select(ds, train));
      fs::create_directories(dir / "resumed");
      slp::ckpt::save_checkpoint(dir / "resumed" / "mid.ckpt", trainer.checkpoint());

      REQUIRE(run("resumed", {"train-slt", "--manifest", in("data/manifest.json"), "--resume", in("resumed/mid.ckpt")})
                  .code == 0);
      const auto resumed_log = slurp(dir / "resumed" / "slt_train_log.jsonl");
      CHECK(std::count(resumed_log.begin(), resumed_log.end(), '\n') == 1);
      CHECK(json::parse(resumed_log)["epoch"] == 1);
      CHECK(slp::ckpt::load_checkpoint(dir / "resumed" / "slt_last.ckpt").tensors ==
            slp::ckpt::load_checkpoint(dir / "models" / "slt_last.ckpt").tensors);
      CHECK(run("resumed", {"train-slt", "--manifest", in("data/manifest.json"), "--resume", in("resumed/mid.ckpt"),
                            "--epochs", "3"})
                .code == 2);
    }

    CHECK(run("gen", {"generate", "--checkpoint", in("models/slp_best.ckpt"), "--text", ""}).code == 2);
    CHECK(run("gen", {"generate", "--checkpoint", in("models/nope.ckpt"), "--text", "x"}).code == 2);
    REQUIRE(run("gen", {"generate", "--checkpoint", in("models/slp_best.ckpt"), "--text", glossed[0].text}).code == 0);
    const auto seq = slp::pose::read_pose_file(dir / "gen" / "generated.pose");
    CHECK(seq.num_frames() <= 12);

    REQUIRE(run("eval", {"evaluate", "--slp", in("models/slp_best.ckpt"), "--slt", in("models/slt_best.ckpt"),
                         "--manifest", in("data/manifest.json")})
                .code == 0);
    const auto report = slurp(dir / "eval" / "report.json");
    CHECK_NOTHROW(slp::eval::validate_report_json(report));
    CHECK(json::parse(report).contains("run_config"));
    CHECK(run("eval", {"evaluate", "--slp", in("models/slp_best.ckpt"), "--slt", in("models/slt_best.ckpt"),
                       "--manifest", in("data/manifest.json"), "--test-signer", "nobody"})
              .code == 2);
    CHECK(run("eval", {"evaluate", "--slp", in("models/slt_best.ckpt"), "--slt", in("models/slt_best.ckpt"),
                       "--manifest", in("data/manifest.json")})
              .code != 0);

    REQUIRE(run("svg", {"render", "--pose", in("gen/generated.pose")}).code == 0);
    CHECK(fs::exists(dir / "svg" / "frame_00000.svg"));

    const auto ck = slp_cli({"inspect", in("models/slp_best.ckpt")});
    CHECK(ck.code == 0);
    CHECK(ck.out.find("slp") != std::string::npos);
    CHECK(slp_cli({"inspect", in("gen/generated.pose")}).code == 0);
    CHECK(slp_cli({"inspect", in("data/manifest.json")}).code == 0);
    const auto prov = json::parse(slurp(dir / "eval" / "evaluate.provenance.json"));
    CHECK(prov["command"] == "evaluate");
    CHECK(prov["fingerprint"].get<std::string>().size() == 64);
  }
}
