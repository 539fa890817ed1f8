#include "slp/translation.hpp"

#include <algorithm>
#include <cmath>

#include "slp/ctc.hpp"
#include "slp/errors.hpp"
#include "slp/vocabulary.hpp"

namespace slp::translation {

namespace {

constexpr std::size_t kPositionTableLength = 1024;

std::vector<int> decoder_inputs(std::span<const int> ids) {
  std::vector<int> in;
  in.reserve(ids.size() + 1);
  in.push_back(text::Vocabulary::kBos);
  in.insert(in.end(), ids.begin(), ids.end());
  return in;
}

std::vector<int> decoder_targets(std::span<const int> ids) {
  std::vector<int> out(ids.begin(), ids.end());
  out.push_back(text::Vocabulary::kEos);
  return out;
}

template <typename T>
void check_frames(const nn::Tensor<T>& frames) {
  if (!frames.defined() || frames.cols() != pose::kFrameDim) throw ShapeError("translation: frames must be 383 wide");
}

template <typename T>
nn::Tensor<T> cross_entropy_from_memory(const TranslationModel<T>& model, const nn::Tensor<T>& memory,
                                        std::span<const int> target_ids) {
  const auto logits = model.decoder_logits(memory, target_ids);
  const auto targets = decoder_targets(target_ids);
  const auto picked = nn::select_columns(nn::log_softmax_rows(logits), std::span<const int>(targets));
  return nn::scale(nn::mean(picked), T{-1});
}

template <typename T>
nn::Tensor<T> ctc_from_memory(const TranslationModel<T>& model, const nn::Tensor<T>& memory,
                              std::span<const int> target_ids) {
  const auto log_probs = nn::log_softmax_rows(model.ctc_head(memory));
  return ctc::ctc_loss(log_probs, target_ids, model.blank());
}

}  // namespace

template <typename T>
TranslationModel<T>::TranslationModel(const nn::TransformerConfig& config, std::size_t vocab_size,
                                      std::uint64_t seed)
    : config_(config), vocab_size_(vocab_size) {
  config_.validate();
  if (vocab_size_ <= static_cast<std::size_t>(text::Vocabulary::kNumSpecials)) {
    throw ConfigError("translation vocabulary holds no words");
  }
  std::mt19937_64 rng(seed);
  const auto dim = static_cast<std::size_t>(config_.model_dim);
  frame_embedding = nn::Linear<T>(pose::kFrameDim, dim, rng);
  encoder = nn::Encoder<T>(config_, rng);
  ctc_head = nn::Linear<T>(dim, vocab_size_ + 1, rng);
  token_embedding = nn::normal_init<T>(vocab_size_, dim, 1.0 / std::sqrt(static_cast<double>(dim)), rng);
  decoder = nn::Decoder<T>(config_, rng);
  output_head = nn::Linear<T>(dim, vocab_size_, rng);
  position_table_ = nn::sinusoidal_positions<T>(kPositionTableLength, dim);
}

template <typename T>
nn::Tensor<T> TranslationModel<T>::positions(std::size_t start, std::size_t count) const {
  if (start + count <= position_table_.rows()) return nn::slice_rows(position_table_, start, count);
  const auto table = nn::sinusoidal_positions<T>(start + count, static_cast<std::size_t>(config_.model_dim));
  return nn::slice_rows(table, start, count);
}

template <typename T>
nn::Tensor<T> TranslationModel<T>::embed_tokens(std::span<const int> ids, std::size_t first_position) const {
  std::vector<int> safe(ids.begin(), ids.end());
  for (auto& id : safe) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size_) id = text::Vocabulary::kUnk;
  }
  const T emb_scale = static_cast<T>(std::sqrt(static_cast<double>(config_.model_dim)));
  return nn::add(nn::scale(nn::embedding(token_embedding, std::span<const int>(safe)), emb_scale),
                 positions(first_position, safe.size()));
}

template <typename T>
nn::Tensor<T> TranslationModel<T>::encode_frames(const nn::Tensor<T>& frames) const {
  check_frames(frames);
  return encoder.forward(nn::add(frame_embedding(frames), positions(0, frames.rows())));
}

template <typename T>
nn::Tensor<T> TranslationModel<T>::ctc_log_probs(const nn::Tensor<T>& frames) const {
  return nn::log_softmax_rows(ctc_head(encode_frames(frames)));
}

template <typename T>
nn::Tensor<T> TranslationModel<T>::decoder_logits(const nn::Tensor<T>& memory, std::span<const int> target_ids) const {
  const auto inputs = decoder_inputs(target_ids);
  const auto causal = nn::AttentionMask::causal(inputs.size());
  return output_head(decoder.forward(embed_tokens(inputs, 0), memory, &causal));
}

template <typename T>
nn::ParameterList<T> TranslationModel<T>::parameters() const {
  nn::ParameterList<T> out;
  frame_embedding.collect(out, "slt.frame_embedding");
  encoder.collect(out, "slt.encoder");
  ctc_head.collect(out, "slt.ctc_head");
  out.push_back({"slt.token_embedding", token_embedding});
  decoder.collect(out, "slt.decoder");
  output_head.collect(out, "slt.output_head");
  return out;
}

template <typename T>
void TranslationModel<T>::freeze() {
  const auto params = parameters();
  nn::set_requires_grad(params, false);
  nn::zero_grads(params);
  encoder.set_dropout({});
  decoder.set_dropout({});
  frozen_ = true;
}

template <typename T>
void TranslationModel<T>::set_dropout_rng(std::mt19937_64* rng) {
  if (frozen_) return;
  encoder.set_dropout({config_.dropout, rng});
  decoder.set_dropout({config_.dropout, rng});
}

template <typename T>
nn::Tensor<T> translation_loss(const TranslationModel<T>& model, const nn::Tensor<T>& frames,
                               std::span<const int> target_ids) {
  return ctc_from_memory(model, model.encode_frames(frames), target_ids);
}

template <typename T>
nn::Tensor<T> decoder_cross_entropy(const TranslationModel<T>& model, const nn::Tensor<T>& frames,
                                    std::span<const int> target_ids) {
  return cross_entropy_from_memory(model, model.encode_frames(frames), target_ids);
}

template <typename T>
nn::Tensor<T> training_loss(const TranslationModel<T>& model, const nn::Tensor<T>& frames,
                            std::span<const int> target_ids) {
  const auto memory = model.encode_frames(frames);
  return nn::add(ctc_from_memory(model, memory, target_ids), cross_entropy_from_memory(model, memory, target_ids));
}

template <typename T>
nn::Tensor<T> pose_to_text_loss(const TranslationModel<T>& frozen_model, const nn::Tensor<T>& generated_frames,
                                std::span<const int> target_ids) {
  if (!frozen_model.frozen()) throw ConfigError("pose-to-text loss needs a frozen translation model");
  return translation_loss(frozen_model, generated_frames, target_ids);
}

std::vector<int> greedy_search(const std::function<std::vector<double>(const std::vector<int>&)>& next_logits,
                               std::size_t max_len, int bos, int eos) {
  std::vector<int> history{bos};
  std::vector<int> out;
  while (out.size() < max_len) {
    const auto logits = next_logits(history);
    if (logits.empty()) throw ShapeError("greedy_search: empty logits");
    const int best = static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    if (best == eos) break;
    out.push_back(best);
    history.push_back(best);
  }
  return out;
}

template <typename T>
std::vector<int> greedy_decode(const TranslationModel<T>& model, const nn::Tensor<T>& frames, std::size_t max_len) {
  const auto memory = model.encode_frames(frames);
  auto cache = model.decoder.start(memory);
  auto step = [&](const std::vector<int>& history) {
    const std::size_t position = history.size() - 1;
    const int last = history.back();
    const auto state = model.decoder.step(cache, model.embed_tokens(std::span<const int>(&last, 1), position));
    const auto logits = model.output_head(state);
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(logits.values()[i]);
    return out;
  };
  return greedy_search(step, max_len, text::Vocabulary::kBos, text::Vocabulary::kEos);
}

template <typename T>
std::vector<int> ctc_greedy(const TranslationModel<T>& model, const nn::Tensor<T>& frames) {
  return ctc::greedy_collapse(model.ctc_log_probs(frames), model.blank());
}

#define SLP_INSTANTIATE_TRANSLATION(T)                                                                          \
  template class TranslationModel<T>;                                                                           \
  template nn::Tensor<T> translation_loss<T>(const TranslationModel<T>&, const nn::Tensor<T>&,                  \
                                             std::span<const int>);                                             \
  template nn::Tensor<T> decoder_cross_entropy<T>(const TranslationModel<T>&, const nn::Tensor<T>&,             \
                                                  std::span<const int>);                                        \
  template nn::Tensor<T> training_loss<T>(const TranslationModel<T>&, const nn::Tensor<T>&, std::span<const int>); \
  template nn::Tensor<T> pose_to_text_loss<T>(const TranslationModel<T>&, const nn::Tensor<T>&,                 \
                                              std::span<const int>);                                            \
  template std::vector<int> greedy_decode<T>(const TranslationModel<T>&, const nn::Tensor<T>&, std::size_t);    \
  template std::vector<int> ctc_greedy<T>(const TranslationModel<T>&, const nn::Tensor<T>&);

SLP_INSTANTIATE_TRANSLATION(float)
SLP_INSTANTIATE_TRANSLATION(double)

}  // namespace slp::translation
