#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "slp/checkpoint.hpp"
#include "slp/dataset.hpp"
#include "slp/errors.hpp"
#include "slp/evaluation.hpp"
#include "slp/gloss.hpp"
#include "slp/pose_io.hpp"
#include "slp/prepare.hpp"
#include "slp/production.hpp"
#include "slp/run_config.hpp"
#include "slp/skeleton.hpp"
#include "slp/synth.hpp"
#include "slp/training.hpp"

namespace slp::cli {

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
};

struct Context {
  config::RunConfig config;
  std::string fingerprint;
  fs::path out;
  std::ostream& log;
};

config::RunConfig load_config(const Globals& g) {
  config::RunConfig c = g.config_path.empty() ? config::RunConfig{} : config::load_run_config(g.config_path);
  if (g.seed) c.seed = g.seed;
  c.apply_seed();
  return c;
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw ConfigError(what + " path is required");
  if (!fs::is_regular_file(path)) throw ConfigError(what + " not found: " + path);
}

void write_provenance(const Context& ctx, const std::string& command, const std::vector<fs::path>& artifacts) {
  Json list = Json::array();
  for (const auto& a : artifacts) list.push_back(a.lexically_relative(ctx.out).generic_string());
  const Json doc = {{"command", command},
                    {"fingerprint", ctx.fingerprint},
                    {"run_config", config::to_json(ctx.config)},
                    {"artifacts", list}};
  std::ofstream out(ctx.out / (command + ".provenance.json"), std::ios::trunc);
  if (!out) throw Error("cannot write provenance sidecar in " + ctx.out.string());
  out << doc.dump(2) << '\n';
}

// Embeds the full run configuration next to the trainer's own metadata.
ckpt::Checkpoint annotate(ckpt::Checkpoint c, const Context& ctx) {
  auto meta = Json::parse(c.config_json);
  meta["run_config"] = config::to_json(ctx.config);
  c.config_json = meta.dump();
  return c;
}

data::Dataset split_of(const data::Dataset& ds, pose::Split split) {
  data::SampleFilter f;
  f.split = split;
  return data::select(ds, f);
}

template <typename Trainer>
std::vector<fs::path> run_training(Trainer& trainer, const data::Dataset& train, const data::Dataset& dev,
                                   const std::string& prefix, bool resumed, const Context& ctx) {
  const fs::path log_path = ctx.out / (prefix + "_train_log.jsonl");
  const fs::path last_path = ctx.out / (prefix + "_last.ckpt");
  const fs::path best_path = ctx.out / (prefix + "_best.ckpt");
  std::ofstream log(log_path, resumed ? std::ios::app : std::ios::trunc);
  if (!log) throw Error("cannot write " + log_path.string());
  training::TrainHooks hooks;
  hooks.on_epoch = [&](const training::EpochRecord& r) {
    log << training::to_json_line(r) << '\n';
    log.flush();
    if (r.dev_metric) {
      ctx.log << prefix << " epoch " << r.epoch << " loss " << r.loss << " dev " << *r.dev_metric
              << (r.best ? " (best)" : "") << '\n';
    }
  };
  hooks.on_checkpoint = [&](const ckpt::Checkpoint& c) { ckpt::save_checkpoint(last_path, annotate(c, ctx)); };
  hooks.on_best = [&](const ckpt::Checkpoint& c) { ckpt::save_checkpoint(best_path, annotate(c, ctx)); };
  trainer.train(train, dev, hooks);
  ctx.log << prefix << " finished at epoch " << trainer.next_epoch() << ", best checkpoint " << best_path.string()
          << '\n';
  return {log_path, last_path, best_path};
}

struct TrainFlags {
  std::string manifest;
  std::string resume;
  std::string slt;
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<double> learning_rate;
  std::optional<double> lambda_p2t;
  bool gloss_mode = false;
};

void apply_train_flags(training::TrainConfig& c, const TrainFlags& f) {
  if (f.epochs) c.total_epochs = *f.epochs;
  if (f.batch_size) c.batch_size = *f.batch_size;
  if (f.learning_rate) c.optimizer.learning_rate = *f.learning_rate;
  if (f.lambda_p2t) c.lambda_p2t = *f.lambda_p2t;
  if (f.gloss_mode) c.gloss_mode = true;
  c.validate();
}

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--manifest", f.manifest, "Prepared dataset manifest")->required();
  cmd->add_option("--resume", f.resume, "Resumable checkpoint to continue from");
  cmd->add_option("--epochs", f.epochs, "Total epochs");
  cmd->add_option("--batch-size", f.batch_size, "Samples per optimizer step");
  cmd->add_option("--lr", f.learning_rate, "Adam learning rate");
  cmd->add_flag("--gloss-mode", f.gloss_mode, "Use glosses as the text side");
}

// ---- commands --------------------------------------------------------------

int cmd_synth(const Context& ctx) {
  const auto corpus = synth::generate_corpus(ctx.config.synth);
  const auto manifest = synth::write_raw_corpus(corpus, ctx.out);
  std::vector<fs::path> artifacts{manifest};
  for (const auto& s : corpus) artifacts.push_back(ctx.out / "raw" / (s.record.id + ".jsonl"));
  write_provenance(ctx, "synth", artifacts);
  ctx.log << "wrote " << corpus.size() << " raw samples, manifest " << manifest.string() << '\n';
  return 0;
}

int cmd_prepare(const Context& ctx, const std::string& raw_manifest) {
  require_file(raw_manifest, "raw manifest");
  const auto summary = data::prepare_dataset(raw_manifest, config::resolve_profile(ctx.config),
                                             ctx.config.normalization, ctx.out);
  std::vector<fs::path> artifacts{summary.manifest_path};
  for (const auto& r : summary.manifest) artifacts.push_back(ctx.out / r.pose_path);
  write_provenance(ctx, "prepare", artifacts);
  ctx.log << "prepared " << summary.manifest.size() << " samples: train " << summary.train << ", dev "
          << summary.dev << ", test " << summary.test << '\n';
  return 0;
}

struct GlossFlags {
  std::string manifest;
  std::string cache;
  std::optional<std::string> provider;
  std::optional<std::string> endpoint;
  std::optional<std::string> model;
};

int cmd_gloss(Context& ctx, const GlossFlags& f) {
  require_file(f.manifest, "manifest");
  auto& gc = ctx.config.gloss;
  if (f.provider) {
    if (*f.provider == "remote_llm") {
      gc.kind = gloss::ProviderKind::remote_llm;
    } else if (*f.provider == "rule_based") {
      gc.kind = gloss::ProviderKind::rule_based;
    } else {
      throw ConfigError("--provider must be remote_llm or rule_based");
    }
  }
  if (f.endpoint) gc.endpoint = *f.endpoint;
  if (f.model) gc.model = *f.model;
  ctx.fingerprint = config::fingerprint(ctx.config);

  std::unique_ptr<gloss::Transport> transport;
  if (gc.kind == gloss::ProviderKind::remote_llm) transport = gloss::make_http_transport();
  auto provider = gloss::make_provider(gc, transport.get());
  const fs::path cache_path = f.cache.empty() ? ctx.out / "gloss_cache.jsonl" : fs::path(f.cache);
  gloss::GlossCache cache(cache_path);

  auto manifest = pose::read_manifest(f.manifest);
  const auto out_manifest = ctx.out / "manifest.json";
  for (auto& r : manifest) {
    const auto pose_file = fs::absolute(pose::resolve_pose_path(f.manifest, r)).lexically_normal();
    r.pose_path = pose_file.lexically_relative(fs::absolute(ctx.out).lexically_normal()).generic_string();
  }
  const auto summary = gloss::gloss_manifest(manifest, *provider, cache, gc.max_in_flight);
  pose::write_manifest(out_manifest, manifest);
  write_provenance(ctx, "gloss", {out_manifest, cache_path});
  ctx.log << "glossed " << manifest.size() << " samples: " << summary.cache_hits << " from cache, "
          << summary.provider_calls << " provider calls\n";
  for (const auto& id : summary.empty_ids) ctx.log << "warning: empty gloss for " << id << '\n';
  return 0;
}

int cmd_train_slt(Context& ctx, const TrainFlags& f) {
  apply_train_flags(ctx.config.slt_train, f);
  ctx.fingerprint = config::fingerprint(ctx.config);
  require_file(f.manifest, "manifest");
  if (!f.resume.empty()) require_file(f.resume, "resume checkpoint");
  const auto ds = data::load_dataset(f.manifest);
  const auto train = split_of(ds, pose::Split::train);
  if (train.empty()) throw InputError("manifest has no train samples");
  training::SltTrainer trainer(ctx.config.model, ctx.config.slt_train, data::build_vocabulary(ds), ctx.fingerprint);
  if (!f.resume.empty()) trainer.resume(ckpt::load_checkpoint(f.resume));
  const auto artifacts = run_training(trainer, train, split_of(ds, pose::Split::dev), "slt", !f.resume.empty(), ctx);
  write_provenance(ctx, "train-slt", artifacts);
  return 0;
}

int cmd_train_slp(Context& ctx, const TrainFlags& f) {
  apply_train_flags(ctx.config.slp_train, f);
  ctx.fingerprint = config::fingerprint(ctx.config);
  const bool needs_slt = ctx.config.slp_train.lambda_p2t > 0.0;
  if (needs_slt && f.slt.empty()) {
    throw ConfigError("train-slp: lambda_p2t > 0 needs a frozen translation checkpoint (--slt)");
  }
  require_file(f.manifest, "manifest");
  if (!f.resume.empty()) require_file(f.resume, "resume checkpoint");
  const auto ds = data::load_dataset(f.manifest);
  const auto train = split_of(ds, pose::Split::train);
  if (train.empty()) throw InputError("manifest has no train samples");
  auto vocab = data::build_vocabulary(ds);

  std::optional<training::LoadedSlt> slt;
  if (needs_slt) {
    require_file(f.slt, "translation checkpoint");
    slt.emplace(training::load_slt(ckpt::load_checkpoint(f.slt)));
    if (!(slt->vocab == vocab)) {
      throw ConfigError("train-slp: the translation checkpoint was built for a different vocabulary");
    }
    slt->model.freeze();
  }
  training::SlpTrainer trainer(ctx.config.model, ctx.config.slp_train, std::move(vocab),
                               slt ? &slt->model : nullptr, ctx.fingerprint);
  if (!f.resume.empty()) trainer.resume(ckpt::load_checkpoint(f.resume));
  const auto artifacts = run_training(trainer, train, split_of(ds, pose::Split::dev), "slp", !f.resume.empty(), ctx);
  write_provenance(ctx, "train-slp", artifacts);
  return 0;
}

int cmd_generate(const Context& ctx, const std::string& checkpoint, const std::string& text,
                 const std::string& name) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw ConfigError("generate: --text must not be empty");
  require_file(checkpoint, "checkpoint");
  const auto loaded = training::load_slp(ckpt::load_checkpoint(checkpoint));
  const auto generated = production::generate(loaded.model, text, loaded.vocab, ctx.config.decoding);
  const auto path = ctx.out / name;
  pose::write_pose_file(path, generated.sequence);
  write_provenance(ctx, "generate", {path});
  ctx.log << "wrote " << generated.sequence.num_frames() << " frames to " << path.string() << '\n';
  return 0;
}

struct EvalFlags {
  std::string slp;
  std::string slt;
  std::string manifest;
  std::optional<std::string> split;
  std::optional<std::string> train_signer;
  std::optional<std::string> test_signer;
};

int cmd_evaluate(Context& ctx, const EvalFlags& f) {
  auto& protocol = ctx.config.eval;
  if (f.split) protocol.split = *f.split == "all" ? std::nullopt : std::optional(pose::parse_split(*f.split));
  if (f.train_signer) protocol.train_signer = *f.train_signer;
  if (f.test_signer) protocol.test_signer = *f.test_signer;
  ctx.fingerprint = config::fingerprint(ctx.config);
  require_file(f.slp, "SLP checkpoint");
  require_file(f.slt, "SLT checkpoint");
  require_file(f.manifest, "manifest");
  const auto slp = training::load_slp(ckpt::load_checkpoint(f.slp));
  const auto slt = training::load_slt(ckpt::load_checkpoint(f.slt));
  const auto ds = data::load_dataset(f.manifest);
  if (protocol.test_signer) {
    bool present = false;
    for (const auto& s : ds) present = present || s.record.signer_id == *protocol.test_signer;
    if (!present) throw ConfigError("test signer '" + *protocol.test_signer + "' is not in the manifest");
  }
  auto report =
      eval::back_translate_evaluate(slp.model, slp.vocab, slt.model, slt.vocab, ds, protocol, ctx.config.decoding);
  report.fingerprint = ctx.fingerprint;
  auto doc = Json::parse(eval::report_to_json(report));
  doc["run_config"] = config::to_json(ctx.config);
  const std::string text = doc.dump(2) + "\n";
  eval::validate_report_json(text);
  const auto path = ctx.out / "report.json";
  std::ofstream(path, std::ios::trunc) << text;
  write_provenance(ctx, "evaluate", {path});
  auto show = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string("null"); };
  ctx.log << "evaluated " << report.count << " samples: BLEU-1 " << show(report.bleu1) << ", BLEU-4 "
          << show(report.bleu4) << ", ROUGE-L " << show(report.rouge_l) << ", DTW " << show(report.dtw_mean) << '\n';
  return 0;
}

int cmd_render(const Context& ctx, const std::string& pose_path, const std::string& connectivity) {
  require_file(pose_path, "pose file");
  const auto seq = pose::read_pose_file(pose_path);
  const auto edges = connectivity.empty() ? render::default_connectivity() : render::read_connectivity(connectivity);
  const auto bones = render::bones_for_profile(edges, config::resolve_profile(ctx.config));
  const auto files = render::render_sequence(seq, bones, ctx.out, ctx.fingerprint);
  write_provenance(ctx, "render", files);
  ctx.log << "rendered " << files.size() << " frames into " << ctx.out.string() << '\n';
  return 0;
}

std::string file_magic(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  char buf[4] = {};
  in.read(buf, 4);
  return in.gcount() == 4 ? std::string(buf, 4) : std::string();
}

int cmd_inspect(const Context& ctx, const std::string& target) {
  auto& o = ctx.log;
  if (target.empty()) {
    o << config::to_json(ctx.config).dump(2) << "\nfingerprint " << ctx.fingerprint << '\n';
    return 0;
  }
  require_file(target, "inspect target");
  const auto magic = file_magic(target);
  if (magic == "SLPP") {
    const auto seq = pose::read_pose_file(target);
    o << "pose file: " << seq.num_frames() << " frames x " << pose::kFrameDim << " values\n";
    if (!seq.empty()) {
      o << "counter " << seq.counter(0) << " -> " << seq.counter(seq.num_frames() - 1) << '\n';
    }
    return 0;
  }
  if (magic == "SLPC") {
    const auto c = ckpt::load_checkpoint(target);
    const auto meta = Json::parse(c.config_json);
    std::size_t values = 0;
    for (const auto& [name, t] : c.tensors) values += t.data.size();
    o << "checkpoint: kind " << meta.value("kind", std::string("?")) << ", epoch " << meta.value("epoch", -1)
      << ", " << c.tensors.size() << " tensors, " << values << " values\n";
    o << "best_dev " << meta.value("best_dev", Json(nullptr)).dump() << ", fingerprint "
      << meta.value("fingerprint", std::string()) << '\n';
    o << "model " << meta.value("model", Json::object()).dump() << '\n';
    return 0;
  }
  const auto manifest = pose::read_manifest(target);
  std::map<std::string, std::size_t> splits;
  std::map<std::string, std::size_t> signers;
  std::size_t glossed = 0;
  for (const auto& r : manifest) {
    ++splits[pose::to_string(r.split)];
    ++signers[r.signer_id];
    if (r.gloss && !r.gloss->empty()) ++glossed;
  }
  o << "manifest: " << manifest.size() << " samples, " << glossed << " with gloss\n";
  for (const auto& [k, v] : splits) o << "  split " << k << ": " << v << '\n';
  for (const auto& [k, v] : signers) o << "  signer " << k << ": " << v << '\n';
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sign language production and translation toolkit", "slp"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "JSON run configuration");
  app.add_option("--seed", g.seed, "Seed for every training and synthesis section");
  app.add_option("--out", g.out_dir, "Output directory");

  auto* synth = app.add_subcommand("synth", "Write a synthetic raw corpus (interchange files + manifest)");
  std::optional<std::size_t> synth_samples;
  std::optional<std::size_t> synth_signers;
  synth->add_option("--samples", synth_samples, "Number of samples");
  synth->add_option("--signers", synth_signers, "Number of signers");

  auto* prepare = app.add_subcommand("prepare", "Subsample, normalize and validate raw landmark streams");
  std::string raw_manifest;
  std::optional<std::string> profile_path;
  prepare->add_option("--manifest", raw_manifest, "Manifest whose pose_path entries are interchange files")
      ->required();
  prepare->add_option("--profile", profile_path, "Selection profile JSON");

  auto* gloss_cmd = app.add_subcommand("gloss", "Fill the gloss field of every manifest record");
  GlossFlags gloss_flags;
  gloss_cmd->add_option("--manifest", gloss_flags.manifest, "Input manifest")->required();
  gloss_cmd->add_option("--cache", gloss_flags.cache, "Gloss cache (JSON lines)");
  gloss_cmd->add_option("--provider", gloss_flags.provider, "remote_llm or rule_based");
  gloss_cmd->add_option("--endpoint", gloss_flags.endpoint, "Chat-completion endpoint URL");
  gloss_cmd->add_option("--model", gloss_flags.model, "Remote model name");

  auto* train_slt = app.add_subcommand("train-slt", "Train the pose-to-text model");
  TrainFlags slt_flags;
  add_train_flags(train_slt, slt_flags);

  auto* train_slp = app.add_subcommand("train-slp", "Train the text-to-pose model");
  TrainFlags slp_flags;
  add_train_flags(train_slp, slp_flags);
  train_slp->add_option("--slt", slp_flags.slt, "Frozen translation checkpoint for the pose-to-text loss");
  train_slp->add_option("--lambda-p2t", slp_flags.lambda_p2t, "Weight of the pose-to-text loss");

  auto* generate = app.add_subcommand("generate", "Produce a pose file from text");
  std::string gen_checkpoint;
  std::string gen_text;
  std::string gen_name = "generated.pose";
  generate->add_option("--checkpoint", gen_checkpoint, "SLP checkpoint")->required();
  generate->add_option("--text", gen_text, "Input sentence (or gloss in gloss mode)")->required();
  generate->add_option("--name", gen_name, "Output file name inside --out");

  auto* evaluate = app.add_subcommand("evaluate", "Back-translation evaluation report");
  EvalFlags eval_flags;
  evaluate->add_option("--slp", eval_flags.slp, "SLP checkpoint")->required();
  evaluate->add_option("--slt", eval_flags.slt, "SLT checkpoint")->required();
  evaluate->add_option("--manifest", eval_flags.manifest, "Prepared dataset manifest")->required();
  evaluate->add_option("--split", eval_flags.split, "train, dev, test or all");
  evaluate->add_option("--train-signer", eval_flags.train_signer, "Signer the models were trained on");
  evaluate->add_option("--test-signer", eval_flags.test_signer, "Only evaluate this signer's samples");

  auto* render_cmd = app.add_subcommand("render", "One SVG per frame of a pose file");
  std::string render_pose;
  std::string connectivity;
  render_cmd->add_option("--pose", render_pose, "Pose file")->required();
  render_cmd->add_option("--connectivity", connectivity, "Connectivity asset (default: built-in v1)");

  auto* inspect = app.add_subcommand("inspect", "Summarize a pose file, checkpoint or manifest");
  std::string inspect_target;
  inspect->add_option("path", inspect_target, "File to inspect; omit to print the effective config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "usage error: " << e.what() << '\n';
    return 2;
  }

  try {
    Context ctx{load_config(g), {}, g.out_dir, out};
    if (synth_samples) ctx.config.synth.num_samples = *synth_samples;
    if (synth_signers) ctx.config.synth.num_signers = *synth_signers;
    if (profile_path) ctx.config.profile_path = *profile_path;
    ctx.config.synth.validate();
    ctx.fingerprint = config::fingerprint(ctx.config);
    fs::create_directories(ctx.out);

    if (*synth) return cmd_synth(ctx);
    if (*prepare) return cmd_prepare(ctx, raw_manifest);
    if (*gloss_cmd) return cmd_gloss(ctx, gloss_flags);
    if (*train_slt) return cmd_train_slt(ctx, slt_flags);
    if (*train_slp) return cmd_train_slp(ctx, slp_flags);
    if (*generate) return cmd_generate(ctx, gen_checkpoint, gen_text, gen_name);
    if (*evaluate) return cmd_evaluate(ctx, eval_flags);
    if (*render_cmd) return cmd_render(ctx, render_pose, connectivity);
    if (*inspect) return cmd_inspect(ctx, inspect_target);
    err << "usage error: no command\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace slp::cli
