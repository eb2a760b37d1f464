#include "readlens/llm_backend.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "readlens/error.hpp"

namespace readlens {

double RetryPolicy::delay_for(int attempt) const {
  double d = initial_delay_s * std::pow(backoff_factor, std::max(0, attempt - 1));
  return std::min(d, max_delay_s);
}

HttpChatBackend::HttpChatBackend(HttpBackendConfig config)
    : config_(std::move(config)) {
  const auto& url = config_.base_url;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::ConfigError, "base_url needs a scheme: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  origin_ = url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (url.rfind("https://", 0) == 0) {
    throw Error(ErrorCode::ConfigError, "built without TLS support; cannot use " + url);
  }
#endif
}

std::string HttpChatBackend::request_body(const std::string& prompt,
                                          double temperature,
                                          int max_tokens) const {
  nlohmann::ordered_json body;
  body["model"] = config_.model;
  body["messages"] = nlohmann::ordered_json::array(
      {{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = temperature;
  body["max_tokens"] = max_tokens;
  return body.dump();
}

std::string HttpChatBackend::complete(const std::string& prompt,
                                      double temperature, int max_tokens) {
  const std::string body = request_body(prompt, temperature, max_tokens);
  const std::string path = path_prefix_ + "/chat/completions";
  const auto timeout = std::chrono::milliseconds(
      static_cast<long long>(config_.timeout_s * 1000.0));

  std::string last_error;
  const int attempts = std::max(1, config_.retry.max_attempts);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    httplib::Client client(origin_);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + config_.api_key);
    }
    auto res = client.Post(path, headers, body, "application/json");
    bool retryable = false;
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      retryable = true;
    } else if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      retryable = true;
    } else if (res->status != 200) {
      throw Error(ErrorCode::BackendError,
                  "HTTP " + std::to_string(res->status) + ": " + res->body);
    } else {
      try {
        auto doc = nlohmann::json::parse(res->body);
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::BackendError,
                    std::string("unexpected completion payload: ") + e.what());
      }
    }
    if (retryable && attempt < attempts) {
      std::this_thread::sleep_for(
          std::chrono::duration<double>(config_.retry.delay_for(attempt)));
    }
  }
  throw Error(ErrorCode::BackendError,
              "gave up after " + std::to_string(attempts) + " attempts (" +
                  last_error + ")");
}

}  // namespace readlens
