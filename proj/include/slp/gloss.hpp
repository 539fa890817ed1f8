#pragma once

// Gloss generation: an LLM chat-completion client behind a transport
// interface, a persistent per-sample cache and a rule-based offline provider.

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "slp/pose_io.hpp"

namespace slp::gloss {

/// Template of assets/gloss_prompt_v1.txt; "{text}" marks the sentence.
inline constexpr std::string_view kPromptTemplateV1 =
    "Transform this Greek sentence into Greek Sign Language gloss: \"{text}\"";

/// Throws InputError for empty (or all-whitespace) text.
std::string build_prompt(std::string_view text, std::string_view prompt_template = kPromptTemplateV1);

/// Uppercase (ASCII), whitespace runs collapsed to one space, trimmed, and
/// one pair of surrounding double quotes dropped.
std::string normalize_gloss(std::string_view raw);

/// Tokenize, drop stopwords (case-insensitive), uppercase, keep order.
std::string rule_based_gloss(std::string_view text, const std::vector<std::string>& stopwords);

const std::vector<std::string>& default_stopwords();

enum class ProviderKind { remote_llm, rule_based };

struct GlossProviderConfig {
  ProviderKind kind = ProviderKind::rule_based;
  std::string endpoint;  // full URL of the chat-completion endpoint
  std::string model;
  std::string api_key_env = "SLP_GLOSS_API_KEY";
  double timeout_seconds = 30.0;
  int retries = 2;
  int max_in_flight = 4;
  std::vector<std::string> stopwords = default_stopwords();

  /// ConfigError unless remote_llm has an endpoint and the key variable is
  /// set, and rule_based has a stopword list.
  void validate() const;

  bool operator==(const GlossProviderConfig&) const = default;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

class Transport {
 public:
  virtual ~Transport() = default;
  /// Throws on connection-level failure.
  virtual HttpResponse post(const std::string& url, const std::string& body,
                            const std::vector<std::pair<std::string, std::string>>& headers,
                            double timeout_seconds) = 0;
};

/// cpp-httplib based transport (http and https).
std::unique_ptr<Transport> make_http_transport();

class GlossProvider {
 public:
  virtual ~GlossProvider() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  /// Gloss before normalization. Throws ProviderError on failure.
  virtual std::string raw_gloss(const std::string& text) = 0;
};

class RuleBasedProvider final : public GlossProvider {
 public:
  explicit RuleBasedProvider(std::vector<std::string> stopwords);
  [[nodiscard]] std::string name() const override { return "rule_based"; }
  std::string raw_gloss(const std::string& text) override;

 private:
  std::vector<std::string> stopwords_;
};

class RemoteLlmProvider final : public GlossProvider {
 public:
  /// Reads the API key from the configured environment variable.
  RemoteLlmProvider(GlossProviderConfig config, Transport& transport);
  [[nodiscard]] std::string name() const override { return "remote_llm:" + config_.model; }
  std::string raw_gloss(const std::string& text) override;

  /// {"model": ..., "messages": [{"role": "user", "content": prompt}]}
  [[nodiscard]] std::string request_body(const std::string& text) const;

 private:
  GlossProviderConfig config_;
  Transport& transport_;
  std::string api_key_;
};

/// First text reply of a chat-completion response; supports
/// choices[0].message.content and content[0].text. ProviderError otherwise.
std::string extract_reply(const std::string& response_body);

std::unique_ptr<GlossProvider> make_provider(const GlossProviderConfig& config, Transport* transport);

struct CacheEntry {
  std::string source_text_hash;
  std::string gloss;
  std::string provider;
  std::string timestamp;
};

/// JSON-lines cache keyed by sample id. Later lines win. Thread-safe.
class GlossCache {
 public:
  GlossCache() = default;  // in-memory only
  explicit GlossCache(std::filesystem::path path);

  /// The stored gloss when the stored text hash matches `text`.
  std::optional<std::string> lookup(const std::string& id, std::string_view text) const;
  void store(const std::string& id, std::string_view text, const std::string& gloss, const std::string& provider);
  [[nodiscard]] std::size_t size() const;

 private:
  std::optional<std::filesystem::path> path_;
  std::map<std::string, CacheEntry> entries_;
  mutable std::mutex mutex_;
};

struct GlossOutcome {
  std::string gloss;
  bool from_cache = false;
  bool empty = false;
};

/// Cache hit, else provider call + normalization + cache store.
GlossOutcome generate_gloss(const std::string& id, const std::string& text, GlossProvider& provider,
                            GlossCache& cache);

struct GlossRunSummary {
  std::size_t cache_hits = 0;
  std::size_t provider_calls = 0;
  std::vector<std::string> empty_ids;
};

/// Fills every record's gloss, at most `max_in_flight` requests at a time.
GlossRunSummary gloss_manifest(pose::Manifest& manifest, GlossProvider& provider, GlossCache& cache,
                               int max_in_flight);

}  // namespace slp::gloss
