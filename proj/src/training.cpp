#include "slp/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "slp/config_json.hpp"
#include "slp/ctc.hpp"
#include "slp/errors.hpp"
#include "slp/metrics.hpp"

namespace slp::training {

namespace {

using config::Json;

constexpr std::uint64_t kShuffleStream = 0x5deece66dULL;

std::string rng_state(const std::mt19937_64& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

void set_rng_state(std::mt19937_64& rng, const std::string& state) {
  std::istringstream in(state);
  in >> rng;
  if (!in) throw FormatError("checkpoint holds a corrupt RNG state");
}

Json parse_meta(const ckpt::Checkpoint& c) {
  try {
    return Json::parse(c.config_json);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint config blob is not JSON: ") + e.what());
  }
}

Json base_meta(const char* kind, const nn::TransformerConfig& model, const TrainConfig& train,
               const text::Vocabulary& vocab, int epoch, std::optional<double> best_dev,
               const std::string& fingerprint) {
  return {{"kind", kind},
          {"model", config::to_json(model)},
          {"train", config::to_json(train)},
          {"vocab", vocab.tokens()},
          {"epoch", epoch},
          {"best_dev", best_dev ? Json(*best_dev) : Json(nullptr)},
          {"fingerprint", fingerprint}};
}

void require_kind(const Json& meta, const std::string& kind) {
  const auto found = meta.value("kind", std::string());
  if (found != kind) throw FormatError("checkpoint holds a '" + found + "' model, expected '" + kind + "'");
}

struct ResumeState {
  int epoch;
  std::uint64_t step;
  std::optional<double> best_dev;
};

ResumeState check_resume(const Json& meta, const char* kind, const nn::TransformerConfig& model,
                         const TrainConfig& train, const text::Vocabulary& vocab, std::mt19937_64& rng) {
  require_kind(meta, kind);
  if (!meta.contains("optimizer_step") || !meta.contains("rng")) {
    throw FormatError("checkpoint is not resumable (no optimizer state)");
  }
  if (meta.at("model") != config::to_json(model)) throw ConfigError("resume: model config differs from checkpoint");
  if (meta.at("train") != config::to_json(train)) throw ConfigError("resume: train config differs from checkpoint");
  if (meta.at("vocab").get<std::vector<std::string>>() != vocab.tokens()) {
    throw ConfigError("resume: vocabulary differs from checkpoint");
  }
  set_rng_state(rng, meta.at("rng").get<std::string>());
  ResumeState s{meta.at("epoch").get<int>(), meta.at("optimizer_step").get<std::uint64_t>(), std::nullopt};
  if (!meta.at("best_dev").is_null()) s.best_dev = meta.at("best_dev").get<double>();
  return s;
}

std::vector<std::size_t> shuffled_order(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Fisher-Yates with explicit draws; std::shuffle's draw pattern is
  // implementation-defined.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

bool should_evaluate(int epoch, const TrainConfig& cfg) {
  const bool last = epoch + 1 == cfg.total_epochs;
  return last || (cfg.dev_every > 0 && (epoch + 1) % cfg.dev_every == 0);
}

}  // namespace

std::string to_string(Mode mode) {
  return mode == Mode::teacher_forcing ? "TEACHER_FORCING" : "AUTOREGRESSIVE";
}

int TrainConfig::teacher_forcing_epochs() const { return tf_epochs.value_or(total_epochs / 2); }

void TrainConfig::validate() const {
  if (total_epochs < 1) throw ConfigError("total_epochs must be >= 1");
  if (tf_epochs && (*tf_epochs < 0 || *tf_epochs > total_epochs)) {
    throw ConfigError("tf_epochs must lie in [0, total_epochs]");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lambda_mse >= 0.0) || !(lambda_p2t >= 0.0)) throw ConfigError("loss weights must be >= 0");
  if (checkpoint_every < 0 || dev_every < 0) throw ConfigError("checkpoint_every / dev_every must be >= 0");
  if (max_decode_tokens < 1) throw ConfigError("max_decode_tokens must be >= 1");
}

Mode schedule_mode(int epoch, const TrainConfig& config) {
  if (epoch < 0 || epoch >= config.total_epochs) {
    throw InputError("epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(config.total_epochs) + ")");
  }
  return epoch < config.teacher_forcing_epochs() ? Mode::teacher_forcing : Mode::autoregressive;
}

template <typename T>
CombinedLoss<T> combined_loss(const nn::Tensor<T>& predicted, const nn::Tensor<T>& ground_truth,
                              std::span<const int> text_target, const translation::TranslationModel<T>* frozen_slt,
                              double lambda_mse, double lambda_p2t) {
  if (lambda_mse < 0.0 || lambda_p2t < 0.0) throw ConfigError("loss weights must be >= 0");
  CombinedLoss<T> out;
  out.mse = production::mse_regression_loss(predicted, ground_truth);
  out.total = nn::scale(out.mse, static_cast<T>(lambda_mse));
  if (lambda_p2t > 0.0) {
    if (frozen_slt == nullptr) throw ConfigError("a frozen translation model is required when lambda_p2t > 0");
    out.p2t = translation::pose_to_text_loss(*frozen_slt, predicted, text_target);
    out.total = nn::add(out.total, nn::scale(*out.p2t, static_cast<T>(lambda_p2t)));
  }
  return out;
}

template CombinedLoss<float> combined_loss<float>(const nn::Tensor<float>&, const nn::Tensor<float>&,
                                                  std::span<const int>, const translation::TranslationModel<float>*,
                                                  double, double);
template CombinedLoss<double> combined_loss<double>(const nn::Tensor<double>&, const nn::Tensor<double>&,
                                                    std::span<const int>,
                                                    const translation::TranslationModel<double>*, double, double);

std::string to_json_line(const EpochRecord& r) {
  Json j = {{"epoch", r.epoch}, {"loss", r.loss}, {"wall_seconds", r.wall_seconds}, {"best", r.best}};
  if (r.mode) {
    j["mode"] = to_string(*r.mode);
    j["mse"] = r.mse;
    j["p2t"] = r.p2t ? Json(*r.p2t) : Json(nullptr);
    j["p2t_skipped"] = r.p2t_skipped;
  }
  if (r.ctc) j["ctc"] = *r.ctc;
  if (r.cross_entropy) j["cross_entropy"] = *r.cross_entropy;
  if (r.dev_metric) j["dev"] = *r.dev_metric;
  return j.dump();
}

// ---- SLP -------------------------------------------------------------------

SlpTrainer::SlpTrainer(const nn::TransformerConfig& model_config, const TrainConfig& config, text::Vocabulary vocab,
                       const translation::TranslationModel<float>* frozen_slt, std::string fingerprint)
    : config_(config),
      vocab_(std::move(vocab)),
      model_(model_config, vocab_.size(), config.seed),
      params_(model_.parameters()),
      optimizer_(config.optimizer, params_),
      frozen_slt_(frozen_slt),
      rng_(config.seed ^ kShuffleStream),
      fingerprint_(std::move(fingerprint)) {
  config_.validate();
  if (config_.lambda_p2t > 0.0) {
    if (frozen_slt_ == nullptr) throw ConfigError("lambda_p2t > 0 needs a frozen translation model");
    if (!frozen_slt_->frozen()) throw ConfigError("the translation model must be frozen before SLP training");
    if (frozen_slt_->vocab_size() != vocab_.size()) {
      throw ConfigError("translation and production vocabularies differ in size");
    }
  }
}

ckpt::Checkpoint SlpTrainer::model_checkpoint() const {
  ckpt::Checkpoint c;
  c.config_json = base_meta("slp", model_.config(), config_, vocab_, epoch_, best_dev_, fingerprint_).dump();
  ckpt::store_parameters(c, params_);
  return c;
}

ckpt::Checkpoint SlpTrainer::checkpoint() const {
  auto meta = base_meta("slp", model_.config(), config_, vocab_, epoch_, best_dev_, fingerprint_);
  meta["optimizer_step"] = optimizer_.step;
  meta["rng"] = rng_state(rng_);
  ckpt::Checkpoint c;
  c.config_json = meta.dump();
  ckpt::store_parameters(c, params_);
  ckpt::store_optimizer(c, params_, optimizer_);
  return c;
}

void SlpTrainer::resume(const ckpt::Checkpoint& checkpoint) {
  const auto state = check_resume(parse_meta(checkpoint), "slp", model_.config(), config_, vocab_, rng_);
  ckpt::restore_parameters(checkpoint, params_);
  ckpt::restore_optimizer(checkpoint, params_, optimizer_);
  optimizer_.step = state.step;
  epoch_ = state.epoch;
  best_dev_ = state.best_dev;
}

EpochRecord SlpTrainer::run_epoch(const data::Dataset& train) {
  if (train.empty()) throw InputError("empty train split");
  const auto start = std::chrono::steady_clock::now();
  EpochRecord record;
  record.epoch = epoch_;
  const Mode mode = schedule_mode(epoch_, config_);
  record.mode = mode;

  const bool use_p2t = config_.lambda_p2t > 0.0;
  double p2t_sum = 0.0;
  std::size_t p2t_count = 0;
  const auto order = shuffled_order(train.size(), rng_);
  model_.set_dropout_rng(&rng_);
  const auto batch = static_cast<std::size_t>(config_.batch_size);
  for (std::size_t first = 0; first < order.size(); first += batch) {
    const std::size_t count = std::min(batch, order.size() - first);
    nn::zero_grads(params_);
    for (std::size_t k = 0; k < count; ++k) {
      const auto& sample = train[order[first + k]];
      const auto ids = vocab_.encode(data::source_text(sample.record, config_.gloss_mode));
      if (ids.empty()) throw InputError("sample '" + sample.record.id + "' has no tokens");
      const auto gt = production::to_tensor<float>(sample.pose);
      const auto target = vocab_.encode(sample.record.text);

      nn::Tape<float> tape;
      nn::TapeScope<float> scope(tape);
      const auto pred = mode == Mode::teacher_forcing ? model_.forward_teacher_forced(ids, gt)
                                                      : model_.forward_autoregressive(ids, gt.rows());
      // A rollout shorter than its CTC target has no alignment; that sample
      // trains on MSE alone.
      const bool feasible = use_p2t && !target.empty() && ctc::minimum_frames(target) <= gt.rows();
      if (use_p2t && !feasible) ++record.p2t_skipped;
      const auto loss = combined_loss<float>(pred, gt, target, feasible ? frozen_slt_ : nullptr, config_.lambda_mse,
                                             feasible ? config_.lambda_p2t : 0.0);
      tape.backward(nn::scale(loss.total, 1.0f / static_cast<float>(count)));
      record.loss += static_cast<double>(loss.total.item());
      record.mse += static_cast<double>(loss.mse.item());
      if (loss.p2t) {
        p2t_sum += static_cast<double>(loss.p2t->item());
        ++p2t_count;
      }
    }
    nn::adam_step(params_, optimizer_);
  }
  nn::zero_grads(params_);
  model_.set_dropout_rng(nullptr);

  const auto n = static_cast<double>(train.size());
  record.loss /= n;
  record.mse /= n;
  if (p2t_count > 0) record.p2t = p2t_sum / static_cast<double>(p2t_count);
  record.wall_seconds = seconds_since(start);
  ++epoch_;
  return record;
}

double SlpTrainer::evaluate_dev(const data::Dataset& dev) const {
  if (dev.empty()) throw InputError("empty dev split");
  double total = 0.0;
  for (const auto& sample : dev) {
    const auto ids = vocab_.encode(data::source_text(sample.record, config_.gloss_mode));
    if (ids.empty()) throw InputError("sample '" + sample.record.id + "' has no tokens");
    const auto gt = production::to_tensor<float>(sample.pose);
    total += static_cast<double>(
        production::mse_regression_loss(model_.forward_autoregressive(ids, gt.rows()), gt).item());
  }
  return total / static_cast<double>(dev.size());
}

void SlpTrainer::train(const data::Dataset& train, const data::Dataset& dev, const TrainHooks& hooks) {
  while (!finished()) {
    const int epoch = epoch_;
    auto record = run_epoch(train);
    if (!dev.empty() && should_evaluate(epoch, config_)) {
      record.dev_metric = evaluate_dev(dev);
      if (!best_dev_ || *record.dev_metric < *best_dev_) {
        best_dev_ = record.dev_metric;
        record.best = true;
      }
    } else if (dev.empty() && finished()) {
      record.best = true;
    }
    if (record.best && hooks.on_best) hooks.on_best(model_checkpoint());
    if (hooks.on_epoch) hooks.on_epoch(record);
    const bool periodic = config_.checkpoint_every > 0 && epoch_ % config_.checkpoint_every == 0;
    if ((periodic || finished()) && hooks.on_checkpoint) hooks.on_checkpoint(checkpoint());
  }
}

// ---- SLT -------------------------------------------------------------------

SltTrainer::SltTrainer(const nn::TransformerConfig& model_config, const TrainConfig& config, text::Vocabulary vocab,
                       std::string fingerprint)
    : config_(config),
      vocab_(std::move(vocab)),
      model_(model_config, vocab_.size(), config.seed),
      params_(model_.parameters()),
      optimizer_(config.optimizer, params_),
      rng_(config.seed ^ kShuffleStream),
      fingerprint_(std::move(fingerprint)) {
  config_.validate();
}

ckpt::Checkpoint SltTrainer::model_checkpoint() const {
  ckpt::Checkpoint c;
  c.config_json = base_meta("slt", model_.config(), config_, vocab_, epoch_, best_dev_, fingerprint_).dump();
  ckpt::store_parameters(c, params_);
  return c;
}

ckpt::Checkpoint SltTrainer::checkpoint() const {
  auto meta = base_meta("slt", model_.config(), config_, vocab_, epoch_, best_dev_, fingerprint_);
  meta["optimizer_step"] = optimizer_.step;
  meta["rng"] = rng_state(rng_);
  ckpt::Checkpoint c;
  c.config_json = meta.dump();
  ckpt::store_parameters(c, params_);
  ckpt::store_optimizer(c, params_, optimizer_);
  return c;
}

void SltTrainer::resume(const ckpt::Checkpoint& checkpoint) {
  const auto state = check_resume(parse_meta(checkpoint), "slt", model_.config(), config_, vocab_, rng_);
  ckpt::restore_parameters(checkpoint, params_);
  ckpt::restore_optimizer(checkpoint, params_, optimizer_);
  optimizer_.step = state.step;
  epoch_ = state.epoch;
  best_dev_ = state.best_dev;
}

EpochRecord SltTrainer::run_epoch(const data::Dataset& train) {
  if (train.empty()) throw InputError("empty train split");
  if (finished()) throw InputError("training already finished");
  const auto start = std::chrono::steady_clock::now();
  EpochRecord record;
  record.epoch = epoch_;
  double ctc_sum = 0.0;
  double ce_sum = 0.0;
  const auto order = shuffled_order(train.size(), rng_);
  model_.set_dropout_rng(&rng_);
  const auto batch = static_cast<std::size_t>(config_.batch_size);
  for (std::size_t first = 0; first < order.size(); first += batch) {
    const std::size_t count = std::min(batch, order.size() - first);
    nn::zero_grads(params_);
    for (std::size_t k = 0; k < count; ++k) {
      const auto& sample = train[order[first + k]];
      const auto target = vocab_.encode(sample.record.text);
      const auto frames = production::to_tensor<float>(sample.pose);
      nn::Tape<float> tape;
      nn::TapeScope<float> scope(tape);
      const auto memory = model_.encode_frames(frames);
      const auto ctc = ctc::ctc_loss(nn::log_softmax_rows(model_.ctc_head(memory)), std::span<const int>(target),
                                     model_.blank());
      const auto logits = model_.decoder_logits(memory, target);
      std::vector<int> next(target.begin(), target.end());
      next.push_back(text::Vocabulary::kEos);
      const auto ce = nn::scale(
          nn::mean(nn::select_columns(nn::log_softmax_rows(logits), std::span<const int>(next))), -1.0f);
      tape.backward(nn::scale(nn::add(ctc, ce), 1.0f / static_cast<float>(count)));
      ctc_sum += static_cast<double>(ctc.item());
      ce_sum += static_cast<double>(ce.item());
    }
    nn::adam_step(params_, optimizer_);
  }
  nn::zero_grads(params_);
  model_.set_dropout_rng(nullptr);

  const auto n = static_cast<double>(train.size());
  record.ctc = ctc_sum / n;
  record.cross_entropy = ce_sum / n;
  record.loss = *record.ctc + *record.cross_entropy;
  record.wall_seconds = seconds_since(start);
  ++epoch_;
  return record;
}

double SltTrainer::evaluate_dev(const data::Dataset& dev) const {
  if (dev.empty()) throw InputError("empty dev split");
  double total = 0.0;
  for (const auto& sample : dev) {
    const auto ids = translation::greedy_decode(model_, production::to_tensor<float>(sample.pose),
                                                static_cast<std::size_t>(config_.max_decode_tokens));
    const auto hypothesis = text::tokenize(vocab_.decode(ids));
    const auto reference = text::tokenize(sample.record.text);
    total += metrics::bleu_n(hypothesis, reference, 4);
  }
  return total / static_cast<double>(dev.size());
}

void SltTrainer::train(const data::Dataset& train, const data::Dataset& dev, const TrainHooks& hooks) {
  while (!finished()) {
    const int epoch = epoch_;
    auto record = run_epoch(train);
    if (!dev.empty() && should_evaluate(epoch, config_)) {
      record.dev_metric = evaluate_dev(dev);
      if (!best_dev_ || *record.dev_metric > *best_dev_) {
        best_dev_ = record.dev_metric;
        record.best = true;
      }
    } else if (dev.empty() && finished()) {
      record.best = true;
    }
    if (record.best && hooks.on_best) hooks.on_best(model_checkpoint());
    if (hooks.on_epoch) hooks.on_epoch(record);
    const bool periodic = config_.checkpoint_every > 0 && epoch_ % config_.checkpoint_every == 0;
    if ((periodic || finished()) && hooks.on_checkpoint) hooks.on_checkpoint(checkpoint());
  }
}

// ---- loading ---------------------------------------------------------------

std::string checkpoint_kind(const ckpt::Checkpoint& checkpoint) {
  return parse_meta(checkpoint).value("kind", std::string());
}

LoadedSlp load_slp(const ckpt::Checkpoint& checkpoint) {
  const auto meta = parse_meta(checkpoint);
  require_kind(meta, "slp");
  const auto model_cfg = config::transformer_from_json(meta.at("model"));
  const auto train_cfg = config::train_from_json(meta.at("train"));
  auto vocab = text::Vocabulary::from_tokens(meta.at("vocab").get<std::vector<std::string>>());
  production::ProductionModel<float> model(model_cfg, vocab.size(), train_cfg.seed);
  ckpt::restore_parameters(checkpoint, model.parameters());
  return {std::move(model), std::move(vocab), train_cfg, meta.value("fingerprint", std::string())};
}

LoadedSlt load_slt(const ckpt::Checkpoint& checkpoint) {
  const auto meta = parse_meta(checkpoint);
  require_kind(meta, "slt");
  const auto model_cfg = config::transformer_from_json(meta.at("model"));
  const auto train_cfg = config::train_from_json(meta.at("train"));
  auto vocab = text::Vocabulary::from_tokens(meta.at("vocab").get<std::vector<std::string>>());
  translation::TranslationModel<float> model(model_cfg, vocab.size(), train_cfg.seed);
  ckpt::restore_parameters(checkpoint, model.parameters());
  return {std::move(model), std::move(vocab), train_cfg, meta.value("fingerprint", std::string())};
}

}  // namespace slp::training
