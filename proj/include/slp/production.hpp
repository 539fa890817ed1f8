#pragma once

// Text-to-pose production model: a symbolic encoder over token ids and a
// progressive decoder that emits 383-wide frame vectors one step at a time,
// starting from an all-zero frame with counter 0.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "slp/layers.hpp"
#include "slp/pose_data.hpp"
#include "slp/tensor.hpp"
#include "slp/transformer.hpp"
#include "slp/vocabulary.hpp"

namespace slp::production {

struct DecodingConfig {
  double counter_stop_threshold = 0.95;
  int max_frames = 300;

  void validate() const;
};

template <typename T>
struct DecodedFrames {
  nn::Tensor<T> frames;              // emitted x 383
  std::vector<double> raw_counters;  // counter channel as predicted
};

template <typename T>
class ProductionModel {
 public:
  ProductionModel(const nn::TransformerConfig& config, std::size_t vocab_size, std::uint64_t seed);

  [[nodiscard]] const nn::TransformerConfig& config() const noexcept { return config_; }
  [[nodiscard]] std::size_t vocab_size() const noexcept { return vocab_size_; }

  /// Per-token memory states. Throws InputError on an empty sequence.
  [[nodiscard]] nn::Tensor<T> encode_text(std::span<const int> token_ids) const;

  /// One causal pass: the prediction for frame t sees the zero start frame
  /// and ground-truth frames 0..t-1.
  [[nodiscard]] nn::Tensor<T> forward_teacher_forced(std::span<const int> token_ids,
                                                     const nn::Tensor<T>& ground_truth) const;

  /// Feeds back its own predictions for exactly `num_frames` steps.
  [[nodiscard]] nn::Tensor<T> forward_autoregressive(std::span<const int> token_ids, std::size_t num_frames) const;

  /// Inference decoding: stops once the predicted counter reaches the
  /// threshold or after max_frames frames.
  [[nodiscard]] DecodedFrames<T> decode(std::span<const int> token_ids, const DecodingConfig& config) const;

  [[nodiscard]] nn::ParameterList<T> parameters() const;

  /// Enables residual dropout (config().dropout) driven by `rng`; nullptr disables.
  void set_dropout_rng(std::mt19937_64* rng);

  nn::Tensor<T> token_embedding;  // vocab x dim
  nn::Encoder<T> encoder;
  nn::Linear<T> frame_projection;  // 383 -> dim
  nn::Decoder<T> decoder;
  nn::Linear<T> output_head;  // dim -> 383

 private:
  [[nodiscard]] nn::Tensor<T> positions(std::size_t start, std::size_t count) const;
  [[nodiscard]] nn::Tensor<T> embed_frames(const nn::Tensor<T>& frames, std::size_t first_position) const;

  nn::TransformerConfig config_;
  std::size_t vocab_size_;
  nn::Tensor<T> position_table_;
};

/// Mean over every entry (counter channel included) of the squared error.
/// Throws ShapeError when the frame counts differ.
template <typename T>
nn::Tensor<T> mse_regression_loss(const nn::Tensor<T>& predicted, const nn::Tensor<T>& ground_truth);

/// PoseSequence as an (F x 383) constant tensor.
template <typename T>
nn::Tensor<T> to_tensor(const pose::PoseSequence& seq);

struct GeneratedSequence {
  pose::PoseSequence sequence;       // counters replaced by the 0..1 ramp
  std::vector<double> raw_counters;  // as predicted
};

/// Tokenize, encode, decode autoregressively, then rewrite the counter
/// channel to the ramp of the emitted length. Throws InputError on empty text.
template <typename T>
GeneratedSequence generate(const ProductionModel<T>& model, std::string_view text, const text::Vocabulary& vocab,
                           const DecodingConfig& config);

/// Same as generate() but from already encoded ids.
template <typename T>
GeneratedSequence generate_from_ids(const ProductionModel<T>& model, std::span<const int> token_ids,
                                    const DecodingConfig& config);

}  // namespace slp::production
