#include "slp/run_config.hpp"

#include <fstream>

#include "slp/config_json.hpp"
#include "slp/errors.hpp"
#include "slp/hashing.hpp"
#include "slp/pose_io.hpp"

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

template <typename V>
void read_optional(const Json& j, const char* key, std::optional<V>& out, const std::string& section) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  V v{};
  read(j, key, v, section);
  out = v;
}

template <typename V>
Json nullable(const std::optional<V>& v) {
  return v ? Json(*v) : Json(nullptr);
}

}  // namespace

void RunConfig::apply_seed() {
  if (!seed) return;
  slp_train.seed = *seed;
  slt_train.seed = *seed;
  synth.seed = *seed;
}

bool RunConfig::operator==(const RunConfig& other) const { return to_json(*this) == to_json(other); }

Json to_json(const gloss::GlossProviderConfig& c) {
  return {{"provider", c.kind == gloss::ProviderKind::remote_llm ? "remote_llm" : "rule_based"},
          {"endpoint", c.endpoint},
          {"model", c.model},
          {"api_key_env", c.api_key_env},
          {"timeout_seconds", c.timeout_seconds},
          {"retries", c.retries},
          {"max_in_flight", c.max_in_flight},
          {"stopwords", c.stopwords}};
}

gloss::GlossProviderConfig gloss_from_json(const Json& j) {
  const std::string s = "gloss";
  reject_unknown_keys(
      j, {"provider", "endpoint", "model", "api_key_env", "timeout_seconds", "retries", "max_in_flight", "stopwords"},
      s);
  gloss::GlossProviderConfig c;
  std::string provider = "rule_based";
  read(j, "provider", provider, s);
  if (provider == "remote_llm") {
    c.kind = gloss::ProviderKind::remote_llm;
  } else if (provider != "rule_based") {
    throw ConfigError("gloss.provider must be remote_llm or rule_based, got '" + provider + "'");
  }
  read(j, "endpoint", c.endpoint, s);
  read(j, "model", c.model, s);
  read(j, "api_key_env", c.api_key_env, s);
  read(j, "timeout_seconds", c.timeout_seconds, s);
  read(j, "retries", c.retries, s);
  read(j, "max_in_flight", c.max_in_flight, s);
  read(j, "stopwords", c.stopwords, s);
  // The API key is only checked when a provider is built.
  if (!(c.timeout_seconds > 0.0) || c.retries < 0 || c.max_in_flight < 1) {
    throw ConfigError("gloss: invalid timeout, retries or max_in_flight");
  }
  return c;
}

Json to_json(const eval::EvalProtocol& p) {
  return {{"split", p.split ? Json(pose::to_string(*p.split)) : Json(nullptr)},
          {"train_signer", nullable(p.train_signer)},
          {"test_signer", nullable(p.test_signer)},
          {"compute_text", p.compute_text},
          {"compute_dtw", p.compute_dtw},
          {"gloss_mode", p.gloss_mode},
          {"max_decode_tokens", p.max_decode_tokens}};
}

eval::EvalProtocol protocol_from_json(const Json& j) {
  const std::string s = "eval";
  reject_unknown_keys(
      j, {"split", "train_signer", "test_signer", "compute_text", "compute_dtw", "gloss_mode", "max_decode_tokens"}, s);
  eval::EvalProtocol p;
  if (j.contains("split")) {
    if (j.at("split").is_null()) {
      p.split.reset();
    } else {
      std::string split;
      read(j, "split", split, s);
      try {
        p.split = pose::parse_split(split);
      } catch (const Error&) {
        throw ConfigError("eval.split must be train, dev, test or null");
      }
    }
  }
  read_optional(j, "train_signer", p.train_signer, s);
  read_optional(j, "test_signer", p.test_signer, s);
  read(j, "compute_text", p.compute_text, s);
  read(j, "compute_dtw", p.compute_dtw, s);
  read(j, "gloss_mode", p.gloss_mode, s);
  read(j, "max_decode_tokens", p.max_decode_tokens, s);
  if (p.max_decode_tokens < 1) throw ConfigError("eval.max_decode_tokens must be >= 1");
  return p;
}

Json to_json(const synth::SynthConfig& c) {
  return {{"num_samples", c.num_samples},
          {"num_signers", c.num_signers},
          {"words_per_signer", c.words_per_signer},
          {"min_words", c.min_words},
          {"max_words", c.max_words},
          {"frames_per_word", c.frames_per_word},
          {"disjoint_signer_vocab", c.disjoint_signer_vocab},
          {"stopword_rate", c.stopword_rate},
          {"missing_rate", c.missing_rate},
          {"hand_amplitude", c.hand_amplitude},
          {"dev_fraction", c.dev_fraction},
          {"test_fraction", c.test_fraction},
          {"seed", c.seed}};
}

synth::SynthConfig synth_from_json(const Json& j) {
  const std::string s = "synth";
  reject_unknown_keys(j,
                      {"num_samples", "num_signers", "words_per_signer", "min_words", "max_words", "frames_per_word",
                       "disjoint_signer_vocab", "stopword_rate", "missing_rate", "hand_amplitude", "dev_fraction",
                       "test_fraction", "seed"},
                      s);
  synth::SynthConfig c;
  read(j, "num_samples", c.num_samples, s);
  read(j, "num_signers", c.num_signers, s);
  read(j, "words_per_signer", c.words_per_signer, s);
  read(j, "min_words", c.min_words, s);
  read(j, "max_words", c.max_words, s);
  read(j, "frames_per_word", c.frames_per_word, s);
  read(j, "disjoint_signer_vocab", c.disjoint_signer_vocab, s);
  read(j, "stopword_rate", c.stopword_rate, s);
  read(j, "missing_rate", c.missing_rate, s);
  read(j, "hand_amplitude", c.hand_amplitude, s);
  read(j, "dev_fraction", c.dev_fraction, s);
  read(j, "test_fraction", c.test_fraction, s);
  read(j, "seed", c.seed, s);
  c.validate();
  return c;
}

Json to_json(const RunConfig& c) {
  return {{"seed", nullable(c.seed)},
          {"model", to_json(c.model)},
          {"slp_train", to_json(c.slp_train)},
          {"slt_train", to_json(c.slt_train)},
          {"decoding", to_json(c.decoding)},
          {"gloss", to_json(c.gloss)},
          {"normalization", to_json(c.normalization)},
          {"profile_path", nullable(c.profile_path)},
          {"eval", to_json(c.eval)},
          {"synth", to_json(c.synth)}};
}

RunConfig run_config_from_json(const Json& j) {
  reject_unknown_keys(j,
                      {"seed", "model", "slp_train", "slt_train", "decoding", "gloss", "normalization",
                       "profile_path", "eval", "synth"},
                      "config");
  RunConfig c;
  read_optional(j, "seed", c.seed, "config");
  if (j.contains("model")) c.model = transformer_from_json(j.at("model"));
  if (j.contains("slp_train")) c.slp_train = train_from_json(j.at("slp_train"));
  if (j.contains("slt_train")) c.slt_train = train_from_json(j.at("slt_train"));
  if (j.contains("decoding")) c.decoding = decoding_from_json(j.at("decoding"));
  if (j.contains("gloss")) c.gloss = gloss_from_json(j.at("gloss"));
  if (j.contains("normalization")) c.normalization = normalization_from_json(j.at("normalization"));
  read_optional(j, "profile_path", c.profile_path, "config");
  if (j.contains("eval")) c.eval = protocol_from_json(j.at("eval"));
  if (j.contains("synth")) c.synth = synth_from_json(j.at("synth"));
  c.apply_seed();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

std::string fingerprint(const RunConfig& c) { return sha256_hex(to_json(c).dump()); }

pose::SelectionProfile resolve_profile(const RunConfig& c) {
  if (c.profile_path) return pose::read_profile(*c.profile_path);
  return pose::SelectionProfile::default_profile();
}

}  // namespace slp::config
