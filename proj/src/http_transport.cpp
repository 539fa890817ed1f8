#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "slp/errors.hpp"
#include "slp/gloss.hpp"

namespace slp::gloss {

namespace {

class HttplibTransport final : public Transport {
 public:
  HttpResponse post(const std::string& url, const std::string& body,
                    const std::vector<std::pair<std::string, std::string>>& headers,
                    double timeout_seconds) override {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("gloss endpoint lacks a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    const auto seconds = static_cast<time_t>(timeout_seconds);
    const auto micros = static_cast<time_t>((timeout_seconds - static_cast<double>(seconds)) * 1e6);
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);

    httplib::Headers h;
    std::string content_type = "application/json";
    for (const auto& [k, v] : headers) {
      if (k == "Content-Type") {
        content_type = v;
      } else {
        h.emplace(k, v);
      }
    }
    const auto result = client.Post(path, h, body, content_type);
    if (!result) throw ProviderError("HTTP request to " + origin + " failed: " + httplib::to_string(result.error()));
    return {result->status, result->body};
  }
};

}  // namespace

std::unique_ptr<Transport> make_http_transport() { return std::make_unique<HttplibTransport>(); }

}  // namespace slp::gloss
