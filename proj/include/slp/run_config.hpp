#pragma once

// Merged run configuration for the command-line tool: a JSON file with one
// section per module, then flag overrides.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "slp/evaluation.hpp"
#include "slp/gloss.hpp"
#include "slp/pose_data.hpp"
#include "slp/production.hpp"
#include "slp/synth.hpp"
#include "slp/training.hpp"
#include "slp/transformer.hpp"

namespace slp::config {

struct RunConfig {
  std::optional<std::uint64_t> seed;  // when set, overrides every section seed
  nn::TransformerConfig model;
  training::TrainConfig slp_train;
  training::TrainConfig slt_train;
  production::DecodingConfig decoding;
  gloss::GlossProviderConfig gloss;
  pose::NormalizationSpec normalization;
  std::optional<std::string> profile_path;
  eval::EvalProtocol eval;
  synth::SynthConfig synth;

  /// Copies `seed` into the train and synth sections.
  void apply_seed();

  bool operator==(const RunConfig& other) const;
};

/// Strict parser: unknown keys anywhere raise ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& c);
nlohmann::json to_json(const gloss::GlossProviderConfig& c);
gloss::GlossProviderConfig gloss_from_json(const nlohmann::json& j);
nlohmann::json to_json(const eval::EvalProtocol& p);
eval::EvalProtocol protocol_from_json(const nlohmann::json& j);
nlohmann::json to_json(const synth::SynthConfig& c);
synth::SynthConfig synth_from_json(const nlohmann::json& j);

/// Hex SHA-256 of the compact, key-sorted JSON form.
std::string fingerprint(const RunConfig& c);

/// The profile named by profile_path, else the built-in default.
pose::SelectionProfile resolve_profile(const RunConfig& c);

}  // namespace slp::config
