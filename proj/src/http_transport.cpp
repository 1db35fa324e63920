#include <httplib.h>

#include <stdexcept>

#include "sliar/enrichment.hpp"

namespace sliar {
namespace {

class HttplibTransport final : public HttpTransport {
 public:
  HttpResponse post_json(const std::string& base_url, const std::string& path, const std::string& body,
                         const std::vector<std::pair<std::string, std::string>>& headers,
                         std::chrono::milliseconds timeout) override {
    httplib::Client client(base_url);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto result = client.Post(path, h, body, "application/json");
    if (!result) throw std::runtime_error("HTTP request to " + base_url + " failed: " + httplib::to_string(result.error()));
    return {result->status, result->body};
  }
};

}  // namespace

std::unique_ptr<HttpTransport> make_http_transport() { return std::make_unique<HttplibTransport>(); }

}  // namespace sliar
