// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 comuse contributors
#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace comuse {

/* One prompt in, the assistant's text out. Implementations throw
 * TransportError for failures worth retrying (connection trouble, 429,
 * 5xx) and ContentError for answers that are final but unusable. */
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

/* SHA-256 hex of the prompt; the response cache file name and the prompt
 * digest stored in provenance records. */
std::string prompt_hash(std::string_view prompt);

/* Bounded retries around a single client call. Only TransportError is
 * retried; the delay doubles after every failed attempt. The terminal
 * TransportError reports how many attempts were spent. */
struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double backoff_multiplier = 2.0;
};
std::string complete_with_retry(ChatClient& client, const std::string& prompt,
                                const RetryPolicy& policy = {});

/* Directory of recorded responses, one file per prompt, named by
 * prompt_hash. Each file holds a one-line JSON header (prompt digest,
 * model, creation time), a blank line, then the raw response bytes.
 * Writes are atomic; concurrent readers are fine. */
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<std::string> find(const std::string& prompt) const;
  void store(const std::string& prompt, const std::string& response,
             const std::string& model = {});

  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
};

/* Endpoint settings for the live client. from_env reads COMUSE_CHAT_URL,
 * COMUSE_CHAT_API_KEY and COMUSE_CHAT_MODEL. */
struct ChatEndpoint {
  std::string base_url; /* scheme://host[:port][/path-prefix] */
  std::string api_key;
  std::string model;
  std::chrono::seconds timeout{120};

  static ChatEndpoint from_env();
};

/* Talks to an OpenAI-style chat completions endpoint. One attempt per
 * call; wrap calls in complete_with_retry for the retry budget. */
class HttpChatClient final : public ChatClient {
 public:
  explicit HttpChatClient(ChatEndpoint endpoint);
  std::string complete(const std::string& prompt) override;

 private:
  ChatEndpoint endpoint_;
};

/* Replays recorded responses and never touches the network. A prompt that
 * was never recorded throws CacheMissError: augmentation runs built on
 * this client are hermetic by construction. */
class ReplayChatClient final : public ChatClient {
 public:
  explicit ReplayChatClient(std::shared_ptr<ResponseCache> cache);
  std::string complete(const std::string& prompt) override;

 private:
  std::shared_ptr<ResponseCache> cache_;
};

/* Serves from the cache when possible, otherwise asks the inner client
 * and records the answer. live_calls() counts actual inner calls, which
 * is how tests prove a replayed run made none. */
class CachingChatClient final : public ChatClient {
 public:
  CachingChatClient(std::shared_ptr<ChatClient> inner,
                    std::shared_ptr<ResponseCache> cache,
                    std::string model_tag = {});
  std::string complete(const std::string& prompt) override;
  std::size_t live_calls() const noexcept { return live_calls_.load(); }

 private:
  std::shared_ptr<ChatClient> inner_;
  std::shared_ptr<ResponseCache> cache_;
  std::string model_tag_;
  std::atomic<std::size_t> live_calls_{0};
};

/* Minimum spacing between acquire() returns across threads; the polite
 * throttle for live endpoints. An interval of zero never blocks. */
class RateLimiter {
 public:
  explicit RateLimiter(std::chrono::milliseconds min_interval);
  void acquire();

 private:
  std::chrono::milliseconds min_interval_;
  std::mutex mutex_;
  std::chrono::steady_clock::time_point next_free_;
};

}  // namespace comuse
