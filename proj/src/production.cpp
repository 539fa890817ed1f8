#include "slp/production.hpp"

#include <cmath>

#include "slp/errors.hpp"

namespace slp::production {

namespace {
constexpr std::size_t kPositionTableLength = 1024;
}

void DecodingConfig::validate() const {
  if (!(counter_stop_threshold > 0.0 && counter_stop_threshold <= 1.0)) {
    throw ConfigError("counter_stop_threshold must lie in (0, 1]");
  }
  if (max_frames < 1) throw ConfigError("max_frames must be >= 1");
}

template <typename T>
ProductionModel<T>::ProductionModel(const nn::TransformerConfig& config, std::size_t vocab_size, std::uint64_t seed)
    : config_(config), vocab_size_(vocab_size) {
  config_.validate();
  if (vocab_size_ == 0) throw ConfigError("vocabulary must not be empty");
  std::mt19937_64 rng(seed);
  const auto dim = static_cast<std::size_t>(config_.model_dim);
  token_embedding = nn::normal_init<T>(vocab_size_, dim, 1.0 / std::sqrt(static_cast<double>(dim)), rng);
  encoder = nn::Encoder<T>(config_, rng);
  frame_projection = nn::Linear<T>(pose::kFrameDim, dim, rng);
  decoder = nn::Decoder<T>(config_, rng);
  output_head = nn::Linear<T>(dim, pose::kFrameDim, rng);
  position_table_ = nn::sinusoidal_positions<T>(kPositionTableLength, dim);
}

template <typename T>
nn::Tensor<T> ProductionModel<T>::positions(std::size_t start, std::size_t count) const {
  if (start + count <= position_table_.rows()) return nn::slice_rows(position_table_, start, count);
  const auto table = nn::sinusoidal_positions<T>(start + count, static_cast<std::size_t>(config_.model_dim));
  return nn::slice_rows(table, start, count);
}

template <typename T>
nn::Tensor<T> ProductionModel<T>::embed_frames(const nn::Tensor<T>& frames, std::size_t first_position) const {
  return nn::add(frame_projection(frames), positions(first_position, frames.rows()));
}

template <typename T>
nn::Tensor<T> ProductionModel<T>::encode_text(std::span<const int> token_ids) const {
  if (token_ids.empty()) throw InputError("cannot encode an empty token sequence");
  std::vector<int> ids(token_ids.begin(), token_ids.end());
  for (auto& id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size_) id = text::Vocabulary::kUnk;
  }
  const T emb_scale = static_cast<T>(std::sqrt(static_cast<double>(config_.model_dim)));
  const auto embedded = nn::add(nn::scale(nn::embedding(token_embedding, std::span<const int>(ids)), emb_scale),
                                positions(0, ids.size()));
  return encoder.forward(embedded);
}

template <typename T>
nn::Tensor<T> ProductionModel<T>::forward_teacher_forced(std::span<const int> token_ids,
                                                         const nn::Tensor<T>& ground_truth) const {
  if (ground_truth.cols() != pose::kFrameDim) throw ShapeError("ground truth frames must be 383 wide");
  const std::size_t frames = ground_truth.rows();
  const auto memory = encode_text(token_ids);
  const auto start = nn::Tensor<T>::zeros(1, pose::kFrameDim);
  const auto inputs = frames == 1 ? start : nn::concat_rows<T>({start, nn::slice_rows(ground_truth, 0, frames - 1)});
  const auto causal = nn::AttentionMask::causal(frames);
  return output_head(decoder.forward(embed_frames(inputs, 0), memory, &causal));
}

template <typename T>
nn::Tensor<T> ProductionModel<T>::forward_autoregressive(std::span<const int> token_ids,
                                                         std::size_t num_frames) const {
  if (num_frames == 0) throw InputError("autoregressive rollout needs at least one frame");
  const auto memory = encode_text(token_ids);
  auto cache = decoder.start(memory);
  nn::Tensor<T> previous = nn::Tensor<T>::zeros(1, pose::kFrameDim);
  std::vector<nn::Tensor<T>> outputs;
  outputs.reserve(num_frames);
  for (std::size_t t = 0; t < num_frames; ++t) {
    const auto state = decoder.step(cache, embed_frames(previous, t));
    previous = output_head(state);
    outputs.push_back(previous);
  }
  return outputs.size() == 1 ? outputs.front() : nn::concat_rows(outputs);
}

template <typename T>
DecodedFrames<T> ProductionModel<T>::decode(std::span<const int> token_ids, const DecodingConfig& cfg) const {
  cfg.validate();
  const auto memory = encode_text(token_ids);
  auto cache = decoder.start(memory);
  nn::Tensor<T> previous = nn::Tensor<T>::zeros(1, pose::kFrameDim);
  std::vector<nn::Tensor<T>> outputs;
  DecodedFrames<T> result;
  for (std::size_t t = 0; t < static_cast<std::size_t>(cfg.max_frames); ++t) {
    const auto state = decoder.step(cache, embed_frames(previous, t));
    previous = output_head(state);
    outputs.push_back(previous);
    const double counter = static_cast<double>(previous.at(0, pose::kCounterIndex));
    result.raw_counters.push_back(counter);
    if (counter >= cfg.counter_stop_threshold) break;
  }
  result.frames = outputs.size() == 1 ? outputs.front() : nn::concat_rows(outputs);
  return result;
}

template <typename T>
nn::ParameterList<T> ProductionModel<T>::parameters() const {
  nn::ParameterList<T> out;
  out.push_back({"slp.token_embedding", token_embedding});
  encoder.collect(out, "slp.encoder");
  frame_projection.collect(out, "slp.frame_projection");
  decoder.collect(out, "slp.decoder");
  output_head.collect(out, "slp.output_head");
  return out;
}

template <typename T>
void ProductionModel<T>::set_dropout_rng(std::mt19937_64* rng) {
  encoder.set_dropout({config_.dropout, rng});
  decoder.set_dropout({config_.dropout, rng});
}

template <typename T>
nn::Tensor<T> mse_regression_loss(const nn::Tensor<T>& predicted, const nn::Tensor<T>& ground_truth) {
  if (predicted.shape() != ground_truth.shape()) {
    throw ShapeError("mse: predicted " + std::to_string(predicted.rows()) + " frames vs ground truth " +
                     std::to_string(ground_truth.rows()));
  }
  const auto diff = nn::sub(predicted, ground_truth);
  return nn::mean(nn::mul(diff, diff));
}

template <typename T>
nn::Tensor<T> to_tensor(const pose::PoseSequence& seq) {
  std::vector<T> values(seq.values().size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<T>(seq.values()[i]);
  return nn::Tensor<T>(seq.num_frames(), pose::kFrameDim, std::move(values));
}

template <typename T>
GeneratedSequence generate_from_ids(const ProductionModel<T>& model, std::span<const int> token_ids,
                                    const DecodingConfig& config) {
  if (token_ids.empty()) throw InputError("cannot generate from empty text");
  const auto decoded = model.decode(token_ids, config);
  const std::size_t frames = decoded.frames.rows();
  std::vector<double> values(decoded.frames.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<double>(decoded.frames.values()[i]);
  const auto ramp = pose::counter_ramp(frames);
  for (std::size_t f = 0; f < frames; ++f) values[f * pose::kFrameDim + pose::kCounterIndex] = ramp[f];
  return {pose::PoseSequence(frames, std::move(values)), decoded.raw_counters};
}

template <typename T>
GeneratedSequence generate(const ProductionModel<T>& model, std::string_view text, const text::Vocabulary& vocab,
                           const DecodingConfig& config) {
  const auto ids = vocab.encode(text);
  if (ids.empty()) throw InputError("cannot generate from empty text");
  return generate_from_ids(model, ids, config);
}

template class ProductionModel<float>;
template class ProductionModel<double>;
template nn::Tensor<float> mse_regression_loss<float>(const nn::Tensor<float>&, const nn::Tensor<float>&);
template nn::Tensor<double> mse_regression_loss<double>(const nn::Tensor<double>&, const nn::Tensor<double>&);
template nn::Tensor<float> to_tensor<float>(const pose::PoseSequence&);
template nn::Tensor<double> to_tensor<double>(const pose::PoseSequence&);
template GeneratedSequence generate<float>(const ProductionModel<float>&, std::string_view, const text::Vocabulary&,
                                           const DecodingConfig&);
template GeneratedSequence generate<double>(const ProductionModel<double>&, std::string_view,
                                            const text::Vocabulary&, const DecodingConfig&);
template GeneratedSequence generate_from_ids<float>(const ProductionModel<float>&, std::span<const int>,
                                                    const DecodingConfig&);
template GeneratedSequence generate_from_ids<double>(const ProductionModel<double>&, std::span<const int>,
                                                     const DecodingConfig&);

}  // namespace slp::production
