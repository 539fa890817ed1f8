#pragma once

// SLP and SLT training loops: TF/AD schedule, combined loss, Adam updates,
// best-dev retention and resumable checkpoints.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>

#include "slp/checkpoint.hpp"
#include "slp/dataset.hpp"
#include "slp/optim.hpp"
#include "slp/production.hpp"
#include "slp/translation.hpp"
#include "slp/vocabulary.hpp"

namespace slp::training {

enum class Mode { teacher_forcing, autoregressive };

std::string to_string(Mode mode);

struct TrainConfig {
  int total_epochs = 200;
  std::optional<int> tf_epochs;  // floor(total_epochs / 2) when unset
  int batch_size = 1;
  std::uint64_t seed = 0;
  double lambda_mse = 1.0;
  double lambda_p2t = 1.0;
  bool gloss_mode = false;
  nn::AdamConfig optimizer;
  int checkpoint_every = 0;  // epochs between resumable checkpoints, 0 = none
  int dev_every = 10;        // epochs between dev evaluations, 0 = final only
  int max_decode_tokens = 50;

  [[nodiscard]] int teacher_forcing_epochs() const;
  /// Throws ConfigError on a negative weight, E < 1, tf_epochs outside [0, E]
  /// or batch_size < 1.
  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

/// TEACHER_FORCING iff epoch < teacher_forcing_epochs(). Throws InputError
/// for an epoch outside [0, E).
Mode schedule_mode(int epoch, const TrainConfig& config);

template <typename T>
struct CombinedLoss {
  nn::Tensor<T> total;
  nn::Tensor<T> mse;
  std::optional<nn::Tensor<T>> p2t;
};

/// lambda_mse * MSE + lambda_p2t * pose_to_text_loss. The second term is
/// left out when lambda_p2t == 0; with lambda_p2t > 0 a frozen translation
/// model is required (ConfigError otherwise).
template <typename T>
CombinedLoss<T> combined_loss(const nn::Tensor<T>& predicted, const nn::Tensor<T>& ground_truth,
                              std::span<const int> text_target, const translation::TranslationModel<T>* frozen_slt,
                              double lambda_mse, double lambda_p2t);

struct EpochRecord {
  int epoch = 0;
  std::optional<Mode> mode;  // SLT training has no schedule
  double loss = 0.0;
  double mse = 0.0;
  std::optional<double> p2t;
  std::optional<double> ctc;
  std::optional<double> cross_entropy;
  std::size_t p2t_skipped = 0;  // samples too short for their CTC target
  double wall_seconds = 0.0;
  std::optional<double> dev_metric;
  bool best = false;
};

/// One JSON object per line for the training log.
std::string to_json_line(const EpochRecord& record);

struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
  /// Resumable state after every checkpoint_every epochs and at the end.
  std::function<void(const ckpt::Checkpoint&)> on_checkpoint;
  /// Parameters of a new best dev score.
  std::function<void(const ckpt::Checkpoint&)> on_best;
};

class SlpTrainer {
 public:
  /// `frozen_slt` must outlive the trainer, share the vocabulary and be frozen.
  SlpTrainer(const nn::TransformerConfig& model_config, const TrainConfig& config, text::Vocabulary vocab,
             const translation::TranslationModel<float>* frozen_slt, std::string fingerprint = {});

  /// Continues from a resumable checkpoint. ConfigError when its model or
  /// train config differs from this trainer's.
  void resume(const ckpt::Checkpoint& checkpoint);

  [[nodiscard]] ckpt::Checkpoint checkpoint() const;
  [[nodiscard]] int next_epoch() const noexcept { return epoch_; }
  [[nodiscard]] bool finished() const noexcept { return epoch_ >= config_.total_epochs; }

  EpochRecord run_epoch(const data::Dataset& train);

  /// Mean MSE of ground-truth-length rollouts over `dev` (lower is better).
  [[nodiscard]] double evaluate_dev(const data::Dataset& dev) const;

  /// Runs the remaining epochs. When dev is empty the final model counts as best.
  void train(const data::Dataset& train, const data::Dataset& dev, const TrainHooks& hooks = {});

  [[nodiscard]] const production::ProductionModel<float>& model() const noexcept { return model_; }
  [[nodiscard]] production::ProductionModel<float>& model() noexcept { return model_; }
  [[nodiscard]] const text::Vocabulary& vocabulary() const noexcept { return vocab_; }
  [[nodiscard]] const TrainConfig& config() const noexcept { return config_; }
  [[nodiscard]] std::optional<double> best_dev() const noexcept { return best_dev_; }

 private:
  [[nodiscard]] ckpt::Checkpoint model_checkpoint() const;

  TrainConfig config_;
  text::Vocabulary vocab_;
  production::ProductionModel<float> model_;
  nn::ParameterList<float> params_;
  nn::OptimizerState<float> optimizer_;
  const translation::TranslationModel<float>* frozen_slt_;
  std::mt19937_64 rng_;
  int epoch_ = 0;
  std::optional<double> best_dev_;
  std::string fingerprint_;
};

class SltTrainer {
 public:
  SltTrainer(const nn::TransformerConfig& model_config, const TrainConfig& config, text::Vocabulary vocab,
             std::string fingerprint = {});

  void resume(const ckpt::Checkpoint& checkpoint);
  [[nodiscard]] ckpt::Checkpoint checkpoint() const;
  [[nodiscard]] int next_epoch() const noexcept { return epoch_; }
  [[nodiscard]] bool finished() const noexcept { return epoch_ >= config_.total_epochs; }

  EpochRecord run_epoch(const data::Dataset& train);

  /// Mean sentence BLEU-4 of greedy decoding over `dev` (higher is better).
  [[nodiscard]] double evaluate_dev(const data::Dataset& dev) const;

  void train(const data::Dataset& train, const data::Dataset& dev, const TrainHooks& hooks = {});

  [[nodiscard]] const translation::TranslationModel<float>& model() const noexcept { return model_; }
  [[nodiscard]] translation::TranslationModel<float>& model() noexcept { return model_; }
  [[nodiscard]] const text::Vocabulary& vocabulary() const noexcept { return vocab_; }
  [[nodiscard]] std::optional<double> best_dev() const noexcept { return best_dev_; }

 private:
  [[nodiscard]] ckpt::Checkpoint model_checkpoint() const;

  TrainConfig config_;
  text::Vocabulary vocab_;
  translation::TranslationModel<float> model_;
  nn::ParameterList<float> params_;
  nn::OptimizerState<float> optimizer_;
  std::mt19937_64 rng_;
  int epoch_ = 0;
  std::optional<double> best_dev_;
  std::string fingerprint_;
};

// ---- loading trained models ------------------------------------------------

struct LoadedSlp {
  production::ProductionModel<float> model;
  text::Vocabulary vocab;
  TrainConfig train_config;
  std::string fingerprint;
};

struct LoadedSlt {
  translation::TranslationModel<float> model;
  text::Vocabulary vocab;
  TrainConfig train_config;
  std::string fingerprint;
};

/// FormatError when the checkpoint holds a different model kind.
LoadedSlp load_slp(const ckpt::Checkpoint& checkpoint);
LoadedSlt load_slt(const ckpt::Checkpoint& checkpoint);

/// "slp" or "slt" from the config blob.
std::string checkpoint_kind(const ckpt::Checkpoint& checkpoint);

}  // namespace slp::training
