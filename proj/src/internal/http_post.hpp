#pragma once

#include <chrono>
#include <string>

namespace botscope::internal {

struct PostOptions {
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{200};
  std::chrono::seconds timeout{10};
  std::string api_key;  // sent as "Authorization: Bearer <key>" when set
};

// POST a JSON body to an http:// URL and return the response body. Connection
// failures, 429 and 5xx are retried with doubling backoff; anything else that
// is not 2xx, and running out of attempts, throws TransportError.
std::string http_post_json(const std::string& url, const std::string& body, const PostOptions& options);

}  // namespace botscope::internal
