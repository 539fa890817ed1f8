#pragma once

// Pose-to-text translation model: frame encoder with a frame-level CTC head
// (vocabulary + blank) and an autoregressive text decoder for back-translation.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "slp/layers.hpp"
#include "slp/pose_data.hpp"
#include "slp/tensor.hpp"
#include "slp/transformer.hpp"

namespace slp::translation {

template <typename T>
class TranslationModel {
 public:
  TranslationModel(const nn::TransformerConfig& config, std::size_t vocab_size, std::uint64_t seed);

  [[nodiscard]] const nn::TransformerConfig& config() const noexcept { return config_; }
  [[nodiscard]] std::size_t vocab_size() const noexcept { return vocab_size_; }
  /// Blank id of the CTC head; one past the last vocabulary id.
  [[nodiscard]] int blank() const noexcept { return static_cast<int>(vocab_size_); }

  /// (F x 383) frames -> (F x dim) encoder states.
  [[nodiscard]] nn::Tensor<T> encode_frames(const nn::Tensor<T>& frames) const;

  /// Per-frame log-probabilities over vocabulary + blank, (F x (V+1)).
  [[nodiscard]] nn::Tensor<T> ctc_log_probs(const nn::Tensor<T>& frames) const;

  /// Decoder logits for inputs [BOS, ids...], one row per input, (U+1 x V).
  [[nodiscard]] nn::Tensor<T> decoder_logits(const nn::Tensor<T>& memory, std::span<const int> target_ids) const;

  [[nodiscard]] nn::ParameterList<T> parameters() const;

  /// Marks every parameter as not requiring grad. Irreversible for this
  /// instance; pose_to_text_loss only accepts frozen models.
  void freeze();
  [[nodiscard]] bool frozen() const noexcept { return frozen_; }

  void set_dropout_rng(std::mt19937_64* rng);

  nn::Linear<T> frame_embedding;  // 383 -> dim
  nn::Encoder<T> encoder;
  nn::Linear<T> ctc_head;         // dim -> V + 1
  nn::Tensor<T> token_embedding;  // V x dim
  nn::Decoder<T> decoder;
  nn::Linear<T> output_head;  // dim -> V

  [[nodiscard]] nn::Tensor<T> positions(std::size_t start, std::size_t count) const;
  [[nodiscard]] nn::Tensor<T> embed_tokens(std::span<const int> ids, std::size_t first_position) const;

 private:
  nn::TransformerConfig config_;
  std::size_t vocab_size_;
  nn::Tensor<T> position_table_;
  bool frozen_ = false;
};

/// CTC negative log-likelihood of `target_ids` on the frame-level head.
template <typename T>
nn::Tensor<T> translation_loss(const TranslationModel<T>& model, const nn::Tensor<T>& frames,
                               std::span<const int> target_ids);

/// Mean token cross-entropy of the decoder predicting [ids..., EOS] from
/// [BOS, ids...].
template <typename T>
nn::Tensor<T> decoder_cross_entropy(const TranslationModel<T>& model, const nn::Tensor<T>& frames,
                                    std::span<const int> target_ids);

/// CTC + cross-entropy with equal weights; both share one encoder pass.
template <typename T>
nn::Tensor<T> training_loss(const TranslationModel<T>& model, const nn::Tensor<T>& frames,
                            std::span<const int> target_ids);

/// translation_loss on a frozen model, so gradients reach only the frames.
/// Throws ConfigError when the model is not frozen.
template <typename T>
nn::Tensor<T> pose_to_text_loss(const TranslationModel<T>& frozen_model, const nn::Tensor<T>& generated_frames,
                                std::span<const int> target_ids);

/// Argmax decoding loop over an arbitrary step function that maps the tokens
/// emitted so far (starting with BOS) to next-token logits.
std::vector<int> greedy_search(const std::function<std::vector<double>(const std::vector<int>&)>& next_logits,
                               std::size_t max_len, int bos, int eos);

/// Autoregressive text decoding; stops at EOS (not included) or max_len tokens.
template <typename T>
std::vector<int> greedy_decode(const TranslationModel<T>& model, const nn::Tensor<T>& frames, std::size_t max_len);

/// Argmax per frame on the CTC head, repeats collapsed, blanks removed.
template <typename T>
std::vector<int> ctc_greedy(const TranslationModel<T>& model, const nn::Tensor<T>& frames);

}  // namespace slp::translation
