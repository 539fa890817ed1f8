#include "slp/gloss.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <set>
#include <thread>

#include "json.hpp"
#include "slp/errors.hpp"
#include "slp/hashing.hpp"
#include "slp/vocabulary.hpp"

namespace slp::gloss {

namespace {

using Json = nlohmann::json;

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string build_prompt(std::string_view text, std::string_view prompt_template) {
  if (is_blank(text)) throw InputError("cannot build a gloss prompt for empty text");
  const auto at = prompt_template.find("{text}");
  if (at == std::string_view::npos) throw ConfigError("prompt template lacks a {text} placeholder");
  std::string out(prompt_template.substr(0, at));
  out += text;
  out += prompt_template.substr(at + 6);
  return out;
}

std::string normalize_gloss(std::string_view raw) {
  std::string out;
  bool pending_space = false;
  for (const char ch : raw) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isspace(c) != 0) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c < 0x80 ? static_cast<char>(std::toupper(c)) : ch);
  }
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = normalize_gloss(out.substr(1, out.size() - 2));
  return out;
}

std::string rule_based_gloss(std::string_view text, const std::vector<std::string>& stopwords) {
  std::set<std::string> stop;
  for (const auto& w : stopwords) {
    for (auto& t : text::tokenize(w)) stop.insert(std::move(t));
  }
  std::string out;
  for (const auto& token : text::tokenize(text)) {
    if (stop.count(token) != 0) continue;
    if (!out.empty()) out.push_back(' ');
    out += token;
  }
  return normalize_gloss(out);
}

const std::vector<std::string>& default_stopwords() {
  static const std::vector<std::string> words = {"a",  "an",  "and", "are", "at",   "by", "for", "i",  "in",
                                                 "into", "is", "it", "my",  "of",   "on", "or",  "the", "to",
                                                 "we", "with"};
  return words;
}

void GlossProviderConfig::validate() const {
  if (kind == ProviderKind::remote_llm) {
    if (endpoint.empty()) throw ConfigError("gloss: remote_llm needs an endpoint");
    if (model.empty()) throw ConfigError("gloss: remote_llm needs a model name");
    const char* key = std::getenv(api_key_env.c_str());
    if (key == nullptr || *key == '\0') throw ConfigError("gloss: environment variable " + api_key_env + " is not set");
    if (!(timeout_seconds > 0.0) || retries < 0) throw ConfigError("gloss: invalid timeout or retry count");
  } else if (stopwords.empty()) {
    throw ConfigError("gloss: rule_based needs a stopword list");
  }
  if (max_in_flight < 1) throw ConfigError("gloss: max_in_flight must be >= 1");
}

RuleBasedProvider::RuleBasedProvider(std::vector<std::string> stopwords) : stopwords_(std::move(stopwords)) {}

std::string RuleBasedProvider::raw_gloss(const std::string& text) { return rule_based_gloss(text, stopwords_); }

RemoteLlmProvider::RemoteLlmProvider(GlossProviderConfig config, Transport& transport)
    : config_(std::move(config)), transport_(transport) {
  config_.validate();
  api_key_ = std::getenv(config_.api_key_env.c_str());
}

std::string RemoteLlmProvider::request_body(const std::string& text) const {
  const Json body = {{"model", config_.model},
                     {"messages", Json::array({{{"role", "user"}, {"content", build_prompt(text)}}})}};
  return body.dump();
}

std::string RemoteLlmProvider::raw_gloss(const std::string& text) {
  const auto body = request_body(text);
  const std::vector<std::pair<std::string, std::string>> headers = {{"Authorization", "Bearer " + api_key_},
                                                                    {"Content-Type", "application/json"}};
  std::string last_error;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    try {
      const auto response = transport_.post(config_.endpoint, body, headers, config_.timeout_seconds);
      if (response.status >= 200 && response.status < 300) return extract_reply(response.body);
      last_error = "HTTP " + std::to_string(response.status);
    } catch (const ProviderError& e) {
      last_error = e.what();
    } catch (const std::exception& e) {
      last_error = e.what();
    }
  }
  throw ProviderError("gloss request failed after " + std::to_string(config_.retries + 1) + " attempts: " + last_error);
}

std::string extract_reply(const std::string& response_body) {
  Json doc;
  try {
    doc = Json::parse(response_body);
  } catch (const nlohmann::json::exception&) {
    throw ProviderError("gloss provider returned non-JSON");
  }
  if (doc.contains("choices") && doc["choices"].is_array() && !doc["choices"].empty()) {
    const auto& first = doc["choices"][0];
    if (first.contains("message") && first["message"].contains("content") && first["message"]["content"].is_string()) {
      return first["message"]["content"].get<std::string>();
    }
  }
  if (doc.contains("content") && doc["content"].is_array()) {
    for (const auto& block : doc["content"]) {
      if (block.contains("text") && block["text"].is_string()) return block["text"].get<std::string>();
    }
  }
  throw ProviderError("gloss provider response has no text reply");
}

std::unique_ptr<GlossProvider> make_provider(const GlossProviderConfig& config, Transport* transport) {
  config.validate();
  if (config.kind == ProviderKind::rule_based) return std::make_unique<RuleBasedProvider>(config.stopwords);
  if (transport == nullptr) throw ConfigError("gloss: remote_llm needs a transport");
  return std::make_unique<RemoteLlmProvider>(config, *transport);
}

GlossCache::GlossCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(*path_);
  if (!in) return;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (is_blank(line)) continue;
    try {
      const auto j = Json::parse(line);
      entries_[j.at("id").get<std::string>()] = {j.at("source_text_hash").get<std::string>(),
                                                 j.at("gloss").get<std::string>(),
                                                 j.value("provider", std::string()), j.value("timestamp", std::string())};
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path_->string() + ":" + std::to_string(number) + ": bad cache line: " + e.what());
    }
  }
}

std::optional<std::string> GlossCache::lookup(const std::string& id, std::string_view text) const {
  const auto hash = sha256_hex(text);
  std::lock_guard lock(mutex_);
  const auto it = entries_.find(id);
  if (it == entries_.end() || it->second.source_text_hash != hash) return std::nullopt;
  return it->second.gloss;
}

void GlossCache::store(const std::string& id, std::string_view text, const std::string& gloss,
                       const std::string& provider) {
  CacheEntry entry{sha256_hex(text), gloss, provider, utc_timestamp()};
  std::lock_guard lock(mutex_);
  if (path_) {
    if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
    std::ofstream out(*path_, std::ios::app);
    if (!out) throw Error("cannot append to gloss cache " + path_->string());
    out << Json{{"id", id},
                {"source_text_hash", entry.source_text_hash},
                {"gloss", entry.gloss},
                {"provider", entry.provider},
                {"timestamp", entry.timestamp}}
               .dump()
        << '\n';
  }
  entries_[id] = std::move(entry);
}

std::size_t GlossCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

GlossOutcome generate_gloss(const std::string& id, const std::string& text, GlossProvider& provider,
                            GlossCache& cache) {
  if (auto hit = cache.lookup(id, text)) return {*hit, true, hit->empty()};
  const auto gloss = normalize_gloss(provider.raw_gloss(text));
  cache.store(id, text, gloss, provider.name());
  return {gloss, false, gloss.empty()};
}

GlossRunSummary gloss_manifest(pose::Manifest& manifest, GlossProvider& provider, GlossCache& cache,
                               int max_in_flight) {
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  std::vector<GlossOutcome> outcomes(manifest.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < manifest.size(); i = next++) {
      try {
        outcomes[i] = generate_gloss(manifest[i].id, manifest[i].text, provider, cache);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = manifest.size();
      }
    }
  };
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(max_in_flight), manifest.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  GlossRunSummary summary;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    manifest[i].gloss = outcomes[i].gloss;
    if (outcomes[i].from_cache) {
      ++summary.cache_hits;
    } else {
      ++summary.provider_calls;
    }
    if (outcomes[i].empty) summary.empty_ids.push_back(manifest[i].id);
  }
  return summary;
}

}  // namespace slp::gloss
