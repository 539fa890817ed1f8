#pragma once

// Post-norm transformer encoder/decoder blocks shared by the production and
// translation models.

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "slp/attention_mask.hpp"
#include "slp/layers.hpp"
#include "slp/tensor.hpp"

namespace slp::nn {

struct TransformerConfig {
  int num_layers = 2;
  int num_heads = 4;
  int model_dim = 512;
  int ff_dim = 2048;
  double dropout = 0.0;

  /// Throws ConfigError on non-positive sizes or model_dim % num_heads != 0.
  void validate() const;

  bool operator==(const TransformerConfig&) const = default;
};

/// Standard interleaved encoding: even columns sin(pos / 10000^(2i/dim)),
/// odd columns the matching cos.
template <typename T>
Tensor<T> sinusoidal_positions(std::size_t length, std::size_t dim);

/// Optional inverted dropout on residual branches. Inactive without an rng.
struct Dropout {
  double rate = 0.0;
  std::mt19937_64* rng = nullptr;

  template <typename T>
  Tensor<T> operator()(const Tensor<T>& x) const {
    if (rng == nullptr || rate <= 0.0) return x;
    return dropout(x, rate, *rng);
  }
};

template <typename T>
struct MultiHeadAttention {
  Linear<T> query;
  Linear<T> key;
  Linear<T> value;
  Linear<T> output;
  std::size_t num_heads = 1;

  MultiHeadAttention() = default;
  MultiHeadAttention(std::size_t dim, std::size_t heads, std::mt19937_64& rng);

  /// Projects, attends per head, concatenates heads and applies the output
  /// projection. `mask` is (queries x keys) when given.
  [[nodiscard]] Tensor<T> operator()(const Tensor<T>& queries, const Tensor<T>& keys_values,
                                     const AttentionMask* mask) const;

  /// Attention over already projected q/k/v (used by the incremental decoder).
  [[nodiscard]] Tensor<T> attend(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                 const AttentionMask* mask) const;

  void collect(ParameterList<T>& out, const std::string& prefix) const;
};

template <typename T>
struct EncoderLayer {
  MultiHeadAttention<T> self_attention;
  LayerNorm<T> norm1;
  Linear<T> ff_in;
  Linear<T> ff_out;
  LayerNorm<T> norm2;

  EncoderLayer(const TransformerConfig& cfg, std::mt19937_64& rng);
  [[nodiscard]] Tensor<T> forward(const Tensor<T>& x, const AttentionMask* mask, const Dropout& drop) const;
  void collect(ParameterList<T>& out, const std::string& prefix) const;
};

template <typename T>
struct DecoderLayer {
  MultiHeadAttention<T> self_attention;
  LayerNorm<T> norm1;
  MultiHeadAttention<T> cross_attention;
  LayerNorm<T> norm2;
  Linear<T> ff_in;
  Linear<T> ff_out;
  LayerNorm<T> norm3;

  DecoderLayer(const TransformerConfig& cfg, std::mt19937_64& rng);
  [[nodiscard]] Tensor<T> forward(const Tensor<T>& x, const Tensor<T>& memory, const AttentionMask* self_mask,
                                  const AttentionMask* memory_mask, const Dropout& drop) const;
  void collect(ParameterList<T>& out, const std::string& prefix) const;
};

template <typename T>
class Encoder {
 public:
  Encoder() = default;
  Encoder(const TransformerConfig& cfg, std::mt19937_64& rng);

  /// One output state per input row. `key_valid` marks real (non-padded)
  /// positions; padded keys are invisible to every query.
  [[nodiscard]] Tensor<T> forward(const Tensor<T>& embedded, const std::vector<bool>* key_valid = nullptr) const;

  void collect(ParameterList<T>& out, const std::string& prefix) const;
  void set_dropout(Dropout d) { dropout_ = d; }
  [[nodiscard]] std::size_t num_layers() const { return layers_.size(); }

 private:
  std::vector<EncoderLayer<T>> layers_;
  Dropout dropout_;
};

/// Growing per-layer key/value state for position-by-position decoding.
template <typename T>
struct DecoderCache {
  struct Layer {
    Tensor<T> self_keys;
    Tensor<T> self_values;
    Tensor<T> memory_keys;
    Tensor<T> memory_values;
  };
  std::vector<Layer> layers;
  Tensor<T> memory;
  std::vector<bool> memory_valid;  // empty = all valid
  std::size_t length = 0;
};

template <typename T>
class Decoder {
 public:
  Decoder() = default;
  Decoder(const TransformerConfig& cfg, std::mt19937_64& rng);

  /// Full parallel pass. `self_mask` is (targets x targets), normally causal.
  [[nodiscard]] Tensor<T> forward(const Tensor<T>& targets, const Tensor<T>& memory, const AttentionMask* self_mask,
                                  const std::vector<bool>* memory_valid = nullptr) const;

  [[nodiscard]] DecoderCache<T> start(const Tensor<T>& memory, const std::vector<bool>* memory_valid = nullptr) const;

  /// Decodes one more position given its (1 x dim) input row. Produces the
  /// same row as forward() with a causal mask would at that position.
  [[nodiscard]] Tensor<T> step(DecoderCache<T>& cache, const Tensor<T>& input_row) const;

  void collect(ParameterList<T>& out, const std::string& prefix) const;
  void set_dropout(Dropout d) { dropout_ = d; }
  [[nodiscard]] std::size_t num_layers() const { return layers_.size(); }

 private:
  std::vector<DecoderLayer<T>> layers_;
  Dropout dropout_;
};

}  // namespace slp::nn
