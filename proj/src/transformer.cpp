#include "slp/transformer.hpp"

#include <cmath>

#include "slp/errors.hpp"

namespace slp::nn {

void TransformerConfig::validate() const {
  if (num_layers < 0) throw ConfigError("num_layers must be >= 0");
  if (num_heads <= 0 || model_dim <= 0 || ff_dim <= 0) {
    throw ConfigError("num_heads, model_dim and ff_dim must be positive");
  }
  if (model_dim % num_heads != 0) {
    throw ConfigError("model_dim " + std::to_string(model_dim) + " is not divisible by num_heads " +
                      std::to_string(num_heads));
  }
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
}

template <typename T>
Tensor<T> sinusoidal_positions(std::size_t length, std::size_t dim) {
  std::vector<T> values(length * dim);
  for (std::size_t pos = 0; pos < length; ++pos) {
    for (std::size_t i = 0; i < dim; i += 2) {
      const double rate = std::pow(10000.0, static_cast<double>(i) / static_cast<double>(dim));
      const double angle = static_cast<double>(pos) / rate;
      values[pos * dim + i] = static_cast<T>(std::sin(angle));
      if (i + 1 < dim) values[pos * dim + i + 1] = static_cast<T>(std::cos(angle));
    }
  }
  return Tensor<T>(length, dim, std::move(values));
}

// ---- attention -------------------------------------------------------------

template <typename T>
MultiHeadAttention<T>::MultiHeadAttention(std::size_t dim, std::size_t heads, std::mt19937_64& rng)
    : query(dim, dim, rng), key(dim, dim, rng), value(dim, dim, rng), output(dim, dim, rng), num_heads(heads) {}

template <typename T>
Tensor<T> MultiHeadAttention<T>::operator()(const Tensor<T>& queries, const Tensor<T>& keys_values,
                                            const AttentionMask* mask) const {
  return attend(query(queries), key(keys_values), value(keys_values), mask);
}

template <typename T>
Tensor<T> MultiHeadAttention<T>::attend(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                        const AttentionMask* mask) const {
  if (mask != nullptr && (mask->rows() != q.rows() || mask->cols() != k.rows())) {
    throw ShapeError("attention mask is " + std::to_string(mask->rows()) + "x" + std::to_string(mask->cols()) +
                     " but attention is " + std::to_string(q.rows()) + "x" + std::to_string(k.rows()));
  }
  const std::size_t dim = q.cols();
  const std::size_t head_dim = dim / num_heads;
  const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(static_cast<double>(head_dim)));
  std::vector<Tensor<T>> heads;
  heads.reserve(num_heads);
  for (std::size_t h = 0; h < num_heads; ++h) {
    const auto qh = slice_cols(q, h * head_dim, head_dim);
    const auto kh = slice_cols(k, h * head_dim, head_dim);
    const auto vh = slice_cols(v, h * head_dim, head_dim);
    const auto scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
    heads.push_back(matmul(softmax_rows(scores, mask), vh));
  }
  const auto merged = num_heads == 1 ? heads.front() : concat_cols(heads);
  return output(merged);
}

template <typename T>
void MultiHeadAttention<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  query.collect(out, prefix + ".query");
  key.collect(out, prefix + ".key");
  value.collect(out, prefix + ".value");
  output.collect(out, prefix + ".output");
}

// ---- layers ----------------------------------------------------------------

template <typename T>
EncoderLayer<T>::EncoderLayer(const TransformerConfig& cfg, std::mt19937_64& rng)
    : self_attention(static_cast<std::size_t>(cfg.model_dim), static_cast<std::size_t>(cfg.num_heads), rng),
      norm1(static_cast<std::size_t>(cfg.model_dim)),
      ff_in(static_cast<std::size_t>(cfg.model_dim), static_cast<std::size_t>(cfg.ff_dim), rng),
      ff_out(static_cast<std::size_t>(cfg.ff_dim), static_cast<std::size_t>(cfg.model_dim), rng),
      norm2(static_cast<std::size_t>(cfg.model_dim)) {}

template <typename T>
Tensor<T> EncoderLayer<T>::forward(const Tensor<T>& x, const AttentionMask* mask, const Dropout& drop) const {
  const auto h = norm1(add(x, drop(self_attention(x, x, mask))));
  return norm2(add(h, drop(ff_out(relu(ff_in(h))))));
}

template <typename T>
void EncoderLayer<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  self_attention.collect(out, prefix + ".self_attention");
  norm1.collect(out, prefix + ".norm1");
  ff_in.collect(out, prefix + ".ff_in");
  ff_out.collect(out, prefix + ".ff_out");
  norm2.collect(out, prefix + ".norm2");
}

template <typename T>
DecoderLayer<T>::DecoderLayer(const TransformerConfig& cfg, std::mt19937_64& rng)
    : self_attention(static_cast<std::size_t>(cfg.model_dim), static_cast<std::size_t>(cfg.num_heads), rng),
      norm1(static_cast<std::size_t>(cfg.model_dim)),
      cross_attention(static_cast<std::size_t>(cfg.model_dim), static_cast<std::size_t>(cfg.num_heads), rng),
      norm2(static_cast<std::size_t>(cfg.model_dim)),
      ff_in(static_cast<std::size_t>(cfg.model_dim), static_cast<std::size_t>(cfg.ff_dim), rng),
      ff_out(static_cast<std::size_t>(cfg.ff_dim), static_cast<std::size_t>(cfg.model_dim), rng),
      norm3(static_cast<std::size_t>(cfg.model_dim)) {}

template <typename T>
Tensor<T> DecoderLayer<T>::forward(const Tensor<T>& x, const Tensor<T>& memory, const AttentionMask* self_mask,
                                   const AttentionMask* memory_mask, const Dropout& drop) const {
  const auto h1 = norm1(add(x, drop(self_attention(x, x, self_mask))));
  const auto h2 = norm2(add(h1, drop(cross_attention(h1, memory, memory_mask))));
  return norm3(add(h2, drop(ff_out(relu(ff_in(h2))))));
}

template <typename T>
void DecoderLayer<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  self_attention.collect(out, prefix + ".self_attention");
  norm1.collect(out, prefix + ".norm1");
  cross_attention.collect(out, prefix + ".cross_attention");
  norm2.collect(out, prefix + ".norm2");
  ff_in.collect(out, prefix + ".ff_in");
  ff_out.collect(out, prefix + ".ff_out");
  norm3.collect(out, prefix + ".norm3");
}

// ---- stacks ----------------------------------------------------------------

template <typename T>
Encoder<T>::Encoder(const TransformerConfig& cfg, std::mt19937_64& rng) : dropout_{cfg.dropout, nullptr} {
  cfg.validate();
  layers_.reserve(static_cast<std::size_t>(cfg.num_layers));
  for (int i = 0; i < cfg.num_layers; ++i) layers_.emplace_back(cfg, rng);
}

template <typename T>
Tensor<T> Encoder<T>::forward(const Tensor<T>& embedded, const std::vector<bool>* key_valid) const {
  AttentionMask mask;
  const AttentionMask* mask_ptr = nullptr;
  if (key_valid != nullptr) {
    if (key_valid->size() != embedded.rows()) throw ShapeError("encoder padding mask length mismatch");
    mask = AttentionMask::padding(embedded.rows(), *key_valid);
    mask_ptr = &mask;
  }
  Tensor<T> x = embedded;
  for (const auto& layer : layers_) x = layer.forward(x, mask_ptr, dropout_);
  return x;
}

template <typename T>
void Encoder<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i].collect(out, prefix + ".layer" + std::to_string(i));
}

template <typename T>
Decoder<T>::Decoder(const TransformerConfig& cfg, std::mt19937_64& rng) : dropout_{cfg.dropout, nullptr} {
  cfg.validate();
  layers_.reserve(static_cast<std::size_t>(cfg.num_layers));
  for (int i = 0; i < cfg.num_layers; ++i) layers_.emplace_back(cfg, rng);
}

template <typename T>
Tensor<T> Decoder<T>::forward(const Tensor<T>& targets, const Tensor<T>& memory, const AttentionMask* self_mask,
                              const std::vector<bool>* memory_valid) const {
  AttentionMask memory_mask;
  const AttentionMask* memory_mask_ptr = nullptr;
  if (memory_valid != nullptr) {
    if (memory_valid->size() != memory.rows()) throw ShapeError("decoder memory mask length mismatch");
    memory_mask = AttentionMask::padding(targets.rows(), *memory_valid);
    memory_mask_ptr = &memory_mask;
  }
  Tensor<T> x = targets;
  for (const auto& layer : layers_) x = layer.forward(x, memory, self_mask, memory_mask_ptr, dropout_);
  return x;
}

template <typename T>
DecoderCache<T> Decoder<T>::start(const Tensor<T>& memory, const std::vector<bool>* memory_valid) const {
  DecoderCache<T> cache;
  cache.memory = memory;
  if (memory_valid != nullptr) {
    if (memory_valid->size() != memory.rows()) throw ShapeError("decoder memory mask length mismatch");
    cache.memory_valid = *memory_valid;
  }
  cache.layers.reserve(layers_.size());
  for (const auto& layer : layers_) {
    typename DecoderCache<T>::Layer entry;
    entry.memory_keys = layer.cross_attention.key(memory);
    entry.memory_values = layer.cross_attention.value(memory);
    cache.layers.push_back(std::move(entry));
  }
  return cache;
}

template <typename T>
Tensor<T> Decoder<T>::step(DecoderCache<T>& cache, const Tensor<T>& input_row) const {
  if (input_row.rows() != 1) throw ShapeError("decoder step expects a single input row");
  if (cache.layers.size() != layers_.size()) throw ShapeError("decoder cache was started by a different decoder");

  AttentionMask memory_mask;
  const AttentionMask* memory_mask_ptr = nullptr;
  if (!cache.memory_valid.empty()) {
    memory_mask = AttentionMask::padding(1, cache.memory_valid);
    memory_mask_ptr = &memory_mask;
  }

  Tensor<T> x = input_row;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    auto& state = cache.layers[i];
    const auto q = layer.self_attention.query(x);
    const auto k = layer.self_attention.key(x);
    const auto v = layer.self_attention.value(x);
    state.self_keys = state.self_keys.defined() ? concat_rows<T>({state.self_keys, k}) : k;
    state.self_values = state.self_values.defined() ? concat_rows<T>({state.self_values, v}) : v;
    const auto attn = layer.self_attention.attend(q, state.self_keys, state.self_values, nullptr);
    const auto h1 = layer.norm1(add(x, dropout_(attn)));
    const auto cross = layer.cross_attention.attend(layer.cross_attention.query(h1), state.memory_keys,
                                                    state.memory_values, memory_mask_ptr);
    const auto h2 = layer.norm2(add(h1, dropout_(cross)));
    x = layer.norm3(add(h2, dropout_(layer.ff_out(relu(layer.ff_in(h2))))));
  }
  cache.length += 1;
  return x;
}

template <typename T>
void Decoder<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i].collect(out, prefix + ".layer" + std::to_string(i));
}

template Tensor<float> sinusoidal_positions<float>(std::size_t, std::size_t);
template Tensor<double> sinusoidal_positions<double>(std::size_t, std::size_t);
template struct MultiHeadAttention<float>;
template struct MultiHeadAttention<double>;
template struct EncoderLayer<float>;
template struct EncoderLayer<double>;
template struct DecoderLayer<float>;
template struct DecoderLayer<double>;
template class Encoder<float>;
template class Encoder<double>;
template class Decoder<float>;
template class Decoder<double>;

}  // namespace slp::nn
