#pragma once

// Strict JSON mapping of the module configs. Parsers reject unknown keys and
// fill absent keys with defaults.

#include <initializer_list>
#include <string>

#include "json.hpp"
#include "slp/optim.hpp"
#include "slp/pose_data.hpp"
#include "slp/production.hpp"
#include "slp/training.hpp"
#include "slp/transformer.hpp"

namespace slp::config {

using Json = nlohmann::json;

/// ConfigError naming the first key of `object` outside `allowed`, or when
/// `object` is not a JSON object.
void reject_unknown_keys(const Json& object, std::initializer_list<const char*> allowed, const std::string& section);

Json to_json(const nn::TransformerConfig& c);
nn::TransformerConfig transformer_from_json(const Json& j);

Json to_json(const nn::AdamConfig& c);
nn::AdamConfig adam_from_json(const Json& j);

Json to_json(const training::TrainConfig& c);
training::TrainConfig train_from_json(const Json& j);

Json to_json(const production::DecodingConfig& c);
production::DecodingConfig decoding_from_json(const Json& j);

Json to_json(const pose::NormalizationSpec& c);
pose::NormalizationSpec normalization_from_json(const Json& j);

}  // namespace slp::config
