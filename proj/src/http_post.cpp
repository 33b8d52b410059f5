#include "internal/http_post.hpp"

#include <httplib.h>

#include <thread>

#include "botscope/common.hpp"

namespace botscope::internal {
namespace {

struct Target {
  std::string host;
  int port = 80;
  std::string path;
};

Target parse_url(const std::string& url) {
  constexpr std::string_view scheme = "http://";
  if (url.rfind(scheme, 0) != 0) throw TransportError("unsupported URL (http:// only): " + url);
  Target t;
  const std::string rest = url.substr(scheme.size());
  const auto slash = rest.find('/');
  std::string authority = rest.substr(0, slash);
  t.path = slash == std::string::npos ? "/" : rest.substr(slash);
  const auto colon = authority.rfind(':');
  if (colon != std::string::npos) {
    try {
      t.port = std::stoi(authority.substr(colon + 1));
    } catch (const std::exception&) {
      throw TransportError("bad port in URL: " + url);
    }
    authority.resize(colon);
  }
  if (authority.empty()) throw TransportError("missing host in URL: " + url);
  t.host = authority;
  return t;
}

}  // namespace

std::string http_post_json(const std::string& url, const std::string& body, const PostOptions& options) {
  const Target target = parse_url(url);
  httplib::Client client(target.host, target.port);
  client.set_connection_timeout(options.timeout);
  client.set_read_timeout(options.timeout);
  client.set_write_timeout(options.timeout);
  httplib::Headers headers;
  if (!options.api_key.empty()) headers.emplace("Authorization", "Bearer " + options.api_key);

  auto backoff = options.initial_backoff;
  std::string last_error;
  for (int attempt = 1; attempt <= std::max(1, options.max_attempts); ++attempt) {
    auto res = client.Post(target.path, headers, body, "application/json");
    if (!res) {
      last_error = "connection failed: " + httplib::to_string(res.error());
    } else if (res->status >= 200 && res->status < 300) {
      return res->body;
    } else if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
    } else {
      throw TransportError(url + ": HTTP " + std::to_string(res->status));
    }
    if (attempt < options.max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw TransportError(url + ": giving up after " + std::to_string(options.max_attempts) +
                       " attempts (" + last_error + ")");
}

}  // namespace botscope::internal
