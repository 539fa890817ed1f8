#include "slp/config_json.hpp"

#include "slp/errors.hpp"

namespace slp::config {

namespace {

template <typename V>
void read(const Json& j, const char* key, V& out, const std::string& section) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    out = it->template get<V>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(section + "." + key + ": wrong type");
  }
}

}  // namespace

void reject_unknown_keys(const Json& object, std::initializer_list<const char*> allowed, const std::string& section) {
  if (!object.is_object()) throw ConfigError(section + ": expected a JSON object");
  for (const auto& [key, value] : object.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw ConfigError("unknown config key '" + section + "." + key + "'");
  }
}

Json to_json(const nn::TransformerConfig& c) {
  return {{"num_layers", c.num_layers},
          {"num_heads", c.num_heads},
          {"model_dim", c.model_dim},
          {"ff_dim", c.ff_dim},
          {"dropout", c.dropout}};
}

nn::TransformerConfig transformer_from_json(const Json& j) {
  const std::string s = "model";
  reject_unknown_keys(j, {"num_layers", "num_heads", "model_dim", "ff_dim", "dropout"}, s);
  nn::TransformerConfig c;
  read(j, "num_layers", c.num_layers, s);
  read(j, "num_heads", c.num_heads, s);
  read(j, "model_dim", c.model_dim, s);
  read(j, "ff_dim", c.ff_dim, s);
  read(j, "dropout", c.dropout, s);
  c.validate();
  return c;
}

Json to_json(const nn::AdamConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"epsilon", c.epsilon}};
}

nn::AdamConfig adam_from_json(const Json& j) {
  const std::string s = "optimizer";
  reject_unknown_keys(j, {"learning_rate", "beta1", "beta2", "epsilon"}, s);
  nn::AdamConfig c;
  read(j, "learning_rate", c.learning_rate, s);
  read(j, "beta1", c.beta1, s);
  read(j, "beta2", c.beta2, s);
  read(j, "epsilon", c.epsilon, s);
  if (!(c.learning_rate > 0.0) || c.beta1 < 0.0 || c.beta1 >= 1.0 || c.beta2 < 0.0 || c.beta2 >= 1.0 ||
      !(c.epsilon > 0.0)) {
    throw ConfigError("optimizer: invalid Adam parameters");
  }
  return c;
}

Json to_json(const training::TrainConfig& c) {
  return {{"total_epochs", c.total_epochs},
          {"tf_epochs", c.tf_epochs ? Json(*c.tf_epochs) : Json(nullptr)},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"lambda_mse", c.lambda_mse},
          {"lambda_p2t", c.lambda_p2t},
          {"gloss_mode", c.gloss_mode},
          {"optimizer", to_json(c.optimizer)},
          {"checkpoint_every", c.checkpoint_every},
          {"dev_every", c.dev_every},
          {"max_decode_tokens", c.max_decode_tokens}};
}

training::TrainConfig train_from_json(const Json& j) {
  const std::string s = "train";
  reject_unknown_keys(j,
                      {"total_epochs", "tf_epochs", "batch_size", "seed", "lambda_mse", "lambda_p2t", "gloss_mode",
                       "optimizer", "checkpoint_every", "dev_every", "max_decode_tokens"},
                      s);
  training::TrainConfig c;
  read(j, "total_epochs", c.total_epochs, s);
  if (j.contains("tf_epochs") && !j.at("tf_epochs").is_null()) {
    int tf = 0;
    read(j, "tf_epochs", tf, s);
    c.tf_epochs = tf;
  }
  read(j, "batch_size", c.batch_size, s);
  read(j, "seed", c.seed, s);
  read(j, "lambda_mse", c.lambda_mse, s);
  read(j, "lambda_p2t", c.lambda_p2t, s);
  read(j, "gloss_mode", c.gloss_mode, s);
  if (j.contains("optimizer")) c.optimizer = adam_from_json(j.at("optimizer"));
  read(j, "checkpoint_every", c.checkpoint_every, s);
  read(j, "dev_every", c.dev_every, s);
  read(j, "max_decode_tokens", c.max_decode_tokens, s);
  c.validate();
  return c;
}

Json to_json(const production::DecodingConfig& c) {
  return {{"counter_stop_threshold", c.counter_stop_threshold}, {"max_frames", c.max_frames}};
}

production::DecodingConfig decoding_from_json(const Json& j) {
  const std::string s = "decoding";
  reject_unknown_keys(j, {"counter_stop_threshold", "max_frames"}, s);
  production::DecodingConfig c;
  read(j, "counter_stop_threshold", c.counter_stop_threshold, s);
  read(j, "max_frames", c.max_frames, s);
  c.validate();
  return c;
}

Json to_json(const pose::NormalizationSpec& c) {
  return {{"left_shoulder", c.left_shoulder}, {"right_shoulder", c.right_shoulder}, {"epsilon", c.epsilon}};
}

pose::NormalizationSpec normalization_from_json(const Json& j) {
  const std::string s = "normalization";
  reject_unknown_keys(j, {"left_shoulder", "right_shoulder", "epsilon"}, s);
  pose::NormalizationSpec c;
  read(j, "left_shoulder", c.left_shoulder, s);
  read(j, "right_shoulder", c.right_shoulder, s);
  read(j, "epsilon", c.epsilon, s);
  c.validate();
  return c;
}

}  // namespace slp::config
