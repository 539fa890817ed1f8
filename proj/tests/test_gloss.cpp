#include <atomic>
#include <cstdlib>

#include "doctest.h"
#include "json.hpp"
#include "slp/errors.hpp"
#include "slp/gloss.hpp"
#include "support.hpp"

using namespace slp;
using namespace slp::gloss;
using nlohmann::json;

namespace {

struct TableRow {
  const char* sentence;
  const char* reply;
  const char* gloss;
};

// English renderings of three published text-to-gloss examples; the replies
// are what a chat model might send back before normalization.
const TableRow kTable[] = {
    {"I complete the table by first estimating the values approximately and then checking my calculations",
     "COMPLETE TABLE ESTIMATE FIRST VALUES APPROXIMATELY CHECK THEN CALCULATIONS",
     "COMPLETE TABLE ESTIMATE FIRST VALUES APPROXIMATELY CHECK THEN CALCULATIONS"},
    {"The line of symmetry divides shhapes into two equal parts", "\"line symmetry divides shape  two equal parts\"\n",
     "LINE SYMMETRY DIVIDES SHAPE TWO EQUAL PARTS"},
    {"I observe and continue the patterns", "  Observe Continue Patterns ", "OBSERVE CONTINUE PATTERNS"},
};

// Replies by prompt content and counts every request.
class StubTransport final : public Transport {
 public:
  HttpResponse post(const std::string& url, const std::string& body,
                    const std::vector<std::pair<std::string, std::string>>& headers, double) override {
    ++requests;
    last_url = url;
    last_headers = headers;
    const auto prompt = json::parse(body)["messages"][0]["content"].get<std::string>();
    for (const auto& row : kTable) {
      if (prompt == build_prompt(row.sentence)) {
        json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", row.reply}}}}}}};
        return {200, reply.dump()};
      }
    }
    return {status_for_unknown, "{}"};
  }

  std::atomic<int> requests{0};
  int status_for_unknown = 500;
  std::string last_url;
  std::vector<std::pair<std::string, std::string>> last_headers;
};

GlossProviderConfig remote_config() {
  setenv("SLP_TEST_GLOSS_KEY", "secret", 1);
  GlossProviderConfig c;
  c.kind = ProviderKind::remote_llm;
  c.endpoint = "http://127.0.0.1:9/v1/chat/completions";
  c.model = "stub-model";
  c.api_key_env = "SLP_TEST_GLOSS_KEY";
  c.retries = 1;
  return c;
}

}  // namespace

TEST_CASE("prompt template") {
  const auto p = build_prompt("I observe and continue the patterns");
  CHECK(p == "Transform this Greek sentence into Greek Sign Language gloss: \"I observe and continue the patterns\"");
  CHECK_THROWS_AS(build_prompt(""), InputError);
  CHECK_THROWS_AS(build_prompt("  \t"), InputError);
  CHECK_THROWS_AS(build_prompt("x", "no placeholder"), ConfigError);
}

TEST_CASE("normalization of replies") {
  CHECK(normalize_gloss("\"line  symmetry\"\n") == "LINE SYMMETRY");
  CHECK(normalize_gloss("   ") == "");
  CHECK(normalize_gloss("Already UPPER") == "ALREADY UPPER");
}

TEST_CASE("remote provider reproduces the published examples through a stub") {
  StubTransport stub;
  auto config = remote_config();
  RemoteLlmProvider provider(config, stub);
  GlossCache cache;
  for (const auto& row : kTable) {
    CAPTURE(row.sentence);
    const auto out = generate_gloss("id", row.sentence, provider, cache);
    CHECK(out.gloss == row.gloss);
    CHECK_FALSE(out.from_cache);
  }
  CHECK(stub.requests == 3);
  CHECK(stub.last_url == config.endpoint);
  bool has_auth = false;
  for (const auto& [k, v] : stub.last_headers) has_auth |= k == "Authorization" && v == "Bearer secret";
  CHECK(has_auth);

  const auto body = json::parse(provider.request_body("two plus two"));
  CHECK(body["model"] == "stub-model");
  CHECK(body["messages"][0]["role"] == "user");
  CHECK(body["messages"][0]["content"].get<std::string>().find("\"two plus two\"") != std::string::npos);
}

TEST_CASE("provider failures") {
  StubTransport stub;
  RemoteLlmProvider provider(remote_config(), stub);
  CHECK_THROWS_AS(provider.raw_gloss("unknown sentence"), ProviderError);
  CHECK(stub.requests == 2);
  CHECK_THROWS_AS(extract_reply("not json"), ProviderError);
  CHECK_THROWS_AS(extract_reply("{\"choices\": []}"), ProviderError);
  CHECK(extract_reply(R"({"content": [{"type": "text", "text": "A B"}]})") == "A B");
}

TEST_CASE("provider configuration") {
  auto c = remote_config();
  CHECK_NOTHROW(c.validate());
  c.endpoint.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = remote_config();
  c.api_key_env = "SLP_TEST_UNSET_VARIABLE";
  unsetenv("SLP_TEST_UNSET_VARIABLE");
  CHECK_THROWS_AS(c.validate(), ConfigError);
  GlossProviderConfig rule;
  rule.stopwords.clear();
  CHECK_THROWS_AS(rule.validate(), ConfigError);
  CHECK_THROWS_AS(make_provider(remote_config(), nullptr), ConfigError);
}

TEST_CASE("rule-based provider") {
  CHECK(rule_based_gloss("I observe and continue the patterns", default_stopwords()) == "OBSERVE CONTINUE PATTERNS");
  CHECK(rule_based_gloss("The cat, the dog.", {"the"}) == "CAT DOG");
  CHECK(rule_based_gloss("the a an", default_stopwords()).empty());
}

TEST_CASE("cache hits and offline runs make no requests") {
  const auto dir = slp::testing::temp_dir("gloss_cache");
  pose::Manifest manifest;
  for (int i = 0; i < 3; ++i) {
    pose::SampleRecord r;
    r.id = "s" + std::to_string(i);
    r.text = kTable[i].sentence;
    r.pose_path = r.id + ".pose";
    manifest.push_back(r);
  }
  StubTransport stub;
  RemoteLlmProvider remote(remote_config(), stub);
  {
    GlossCache cache(dir / "cache.jsonl");
    const auto first = gloss_manifest(manifest, remote, cache, 2);
    CHECK(first.provider_calls == 3);
    CHECK(first.cache_hits == 0);
  }
  CHECK(stub.requests == 3);
  for (int i = 0; i < 3; ++i) CHECK(manifest[static_cast<std::size_t>(i)].gloss == std::string(kTable[i].gloss));

  GlossCache reopened(dir / "cache.jsonl");
  CHECK(reopened.size() == 3);
  auto again = manifest;
  const auto second = gloss_manifest(again, remote, reopened, 2);
  CHECK(second.cache_hits == 3);
  CHECK(stub.requests == 3);
  CHECK(again == manifest);

  SUBCASE("changed text misses the cache") {
    again[0].text = "I observe the patterns";
    CHECK_FALSE(reopened.lookup("s0", again[0].text).has_value());
  }
  SUBCASE("rule-based provider is offline") {
    RuleBasedProvider rule(default_stopwords());
    GlossCache fresh;
    auto m = manifest;
    m[0].text = "the the";
    const auto s = gloss_manifest(m, rule, fresh, 1);
    CHECK(s.provider_calls == 3);
    CHECK(s.empty_ids == std::vector<std::string>{"s0"});
    CHECK(stub.requests == 3);
  }
}
