// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 comuse contributors
#include "comuse/chat_client.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "comuse/errors.hpp"
#include "comuse/hash.hpp"
#include "fsutil.hpp"

namespace comuse {

std::string prompt_hash(std::string_view prompt) { return sha256_hex(prompt); }

std::string complete_with_retry(ChatClient& client, const std::string& prompt,
                                const RetryPolicy& policy) {
  if (policy.max_attempts < 1) {
    throw InvalidArgument("retry policy needs at least one attempt");
  }
  auto delay = policy.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      return client.complete(prompt);
    } catch (const TransportError& error) {
      if (attempt >= policy.max_attempts) {
        throw TransportError(std::string(error.what()) + " (after " +
                                 std::to_string(attempt) + " attempts)",
                             attempt);
      }
      if (delay.count() > 0) std::this_thread::sleep_for(delay);
      delay = std::chrono::milliseconds(static_cast<std::int64_t>(
          static_cast<double>(delay.count()) * policy.backoff_multiplier));
    }
  }
}

// --- response cache ---

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) {
    throw IoError("cannot create response cache directory " + dir_.string() +
                  ": " + ec.message());
  }
}

std::optional<std::string> ResponseCache::find(const std::string& prompt) const {
  const auto file = dir_ / prompt_hash(prompt);
  std::lock_guard<std::mutex> lock(mutex_);
  std::ifstream in(file, std::ios::binary);
  if (!in) return std::nullopt;
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + file.string());

  const auto header_end = data.find('\n');
  if (header_end == std::string::npos) {
    throw IoError("response cache entry without a header line: " +
                  file.string());
  }
  try {
    const auto header =
        nlohmann::json::parse(data.substr(0, header_end));
    if (header.at("prompt_sha256").get<std::string>() != prompt_hash(prompt)) {
      throw IoError("response cache entry named for a different prompt: " +
                    file.string());
    }
  } catch (const nlohmann::json::exception& error) {
    throw IoError("response cache entry with a bad header (" + file.string() +
                  "): " + error.what());
  }
  /* Header line, one blank separator line, then the raw bytes. */
  const auto body_start = data.find('\n', header_end + 1);
  if (body_start == std::string::npos) {
    throw IoError("response cache entry without a body: " + file.string());
  }
  return data.substr(body_start + 1);
}

void ResponseCache::store(const std::string& prompt,
                          const std::string& response,
                          const std::string& model) {
  const auto now_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::system_clock::now().time_since_epoch())
                          .count();
  nlohmann::json header;
  header["prompt_sha256"] = prompt_hash(prompt);
  header["model"] = model;
  header["created_unix_ms"] = now_ms;

  std::string data = header.dump();
  data.push_back('\n');
  data.push_back('\n');
  data += response;

  std::lock_guard<std::mutex> lock(mutex_);
  detail::atomic_write_text(dir_ / prompt_hash(prompt), data);
}

// --- endpoints and clients ---

ChatEndpoint ChatEndpoint::from_env() {
  ChatEndpoint endpoint;
  const char* url = std::getenv("COMUSE_CHAT_URL");
  if (!url || !*url) {
    throw ConfigError("COMUSE_CHAT_URL is not set");
  }
  endpoint.base_url = url;
  if (const char* key = std::getenv("COMUSE_CHAT_API_KEY")) {
    endpoint.api_key = key;
  }
  if (const char* model = std::getenv("COMUSE_CHAT_MODEL")) {
    endpoint.model = model;
  }
  if (endpoint.model.empty()) endpoint.model = "default";
  return endpoint;
}

HttpChatClient::HttpChatClient(ChatEndpoint endpoint)
    : endpoint_(std::move(endpoint)) {
  if (endpoint_.base_url.empty()) {
    throw ConfigError("chat endpoint without a base URL");
  }
}

namespace {

/* scheme://host[:port][/prefix] -> (scheme://host[:port], /prefix) */
std::pair<std::string, std::string> split_origin(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("chat URL needs a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

}  // namespace

std::string HttpChatClient::complete(const std::string& prompt) {
  const auto [origin, prefix] = split_origin(endpoint_.base_url);
  httplib::Client http(origin);
  const auto seconds = static_cast<time_t>(endpoint_.timeout.count());
  http.set_connection_timeout(seconds, 0);
  http.set_read_timeout(seconds, 0);
  http.set_write_timeout(seconds, 0);
  http.set_follow_location(true);

  httplib::Headers headers;
  if (!endpoint_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + endpoint_.api_key);
  }

  nlohmann::json body;
  body["model"] = endpoint_.model;
  body["messages"] =
      nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});

  const auto result = http.Post(prefix + "/chat/completions", headers,
                                body.dump(), "application/json");
  if (!result) {
    throw TransportError(
        "chat request failed: " + httplib::to_string(result.error()), 1);
  }
  const int status = result->status;
  if (status == 408 || status == 429 || status >= 500) {
    throw TransportError("chat endpoint answered " + std::to_string(status),
                         1);
  }
  if (status >= 400) {
    throw ContentError("chat endpoint rejected the request (" +
                       std::to_string(status) + "): " +
                       result->body.substr(0, 512));
  }
  try {
    const auto parsed = nlohmann::json::parse(result->body);
    const auto& choices = parsed.at("choices");
    if (!choices.is_array() || choices.empty()) {
      throw ContentError("chat completion without choices");
    }
    return choices.at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& error) {
    throw ContentError(std::string("malformed chat completion body: ") +
                       error.what());
  }
}

ReplayChatClient::ReplayChatClient(std::shared_ptr<ResponseCache> cache)
    : cache_(std::move(cache)) {
  if (!cache_) throw InvalidArgument("replay client needs a cache");
}

std::string ReplayChatClient::complete(const std::string& prompt) {
  if (auto hit = cache_->find(prompt)) return *hit;
  throw CacheMissError("no recorded response for prompt " +
                       prompt_hash(prompt));
}

CachingChatClient::CachingChatClient(std::shared_ptr<ChatClient> inner,
                                     std::shared_ptr<ResponseCache> cache,
                                     std::string model_tag)
    : inner_(std::move(inner)),
      cache_(std::move(cache)),
      model_tag_(std::move(model_tag)) {
  if (!inner_ || !cache_) {
    throw InvalidArgument("caching client needs an inner client and a cache");
  }
}

std::string CachingChatClient::complete(const std::string& prompt) {
  if (auto hit = cache_->find(prompt)) return *hit;
  live_calls_.fetch_add(1);
  std::string response = inner_->complete(prompt);
  cache_->store(prompt, response, model_tag_);
  return response;
}

RateLimiter::RateLimiter(std::chrono::milliseconds min_interval)
    : min_interval_(min_interval), next_free_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  if (min_interval_.count() <= 0) return;
  std::chrono::steady_clock::time_point wait_until;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto now = std::chrono::steady_clock::now();
    wait_until = std::max(next_free_, now);
    next_free_ = wait_until + min_interval_;
  }
  std::this_thread::sleep_for(wait_until - std::chrono::steady_clock::now());
}

}  // namespace comuse
