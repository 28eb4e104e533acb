#pragma once

// Shared plumbing for remote inference backends: error type, retry with
// exponential backoff, and a JSON-over-HTTP request helper.

#include <algorithm>
#include <chrono>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace petwell {

class BackendError : public std::runtime_error {
 public:
  BackendError(const std::string& what, bool retryable)
      : std::runtime_error(what), retryable_(retryable) {}

  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{100};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{2000};
  std::chrono::milliseconds timeout{5000};

  /// Delay before attempt number `attempt` (1-based, attempt >= 2).
  std::chrono::milliseconds backoff_before(int attempt) const {
    double ms = static_cast<double>(initial_backoff.count());
    for (int i = 2; i < attempt; ++i) ms *= multiplier;
    return std::chrono::milliseconds(
        static_cast<long long>(std::min(ms, static_cast<double>(max_backoff.count()))));
  }
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

inline void default_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

/// Calls `fn` until it succeeds, a non-retryable BackendError escapes, or
/// the attempt budget is spent. The last error is rethrown.
template <typename Fn>
auto with_retry(const RetryPolicy& policy, Fn&& fn, const Sleeper& sleep = default_sleep)
    -> decltype(fn()) {
  for (int attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (const BackendError& e) {
      if (!e.retryable() || attempt >= policy.max_attempts) throw;
    }
    sleep(policy.backoff_before(attempt + 1));
  }
}

/// One JSON POST. Transport failures, timeouts and 5xx/429 are retryable;
/// other non-200 statuses and unparseable bodies are not.
inline nlohmann::json post_json(const std::string& base_url, const std::string& path,
                                const nlohmann::json& body, std::chrono::milliseconds timeout) {
  httplib::Client client(base_url);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res)
    throw BackendError(base_url + path + ": " + httplib::to_string(res.error()), true);
  if (res->status == 429 || res->status >= 500)
    throw BackendError(base_url + path + ": HTTP " + std::to_string(res->status), true);
  if (res->status != 200)
    throw BackendError(base_url + path + ": HTTP " + std::to_string(res->status), false);
  auto parsed = nlohmann::json::parse(res->body, nullptr, false);
  if (parsed.is_discarded())
    throw BackendError(base_url + path + ": response is not JSON", false);
  return parsed;
}

}  // namespace petwell
