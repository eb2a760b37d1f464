#pragma once

#include <string>

namespace readlens {

/// Text-completion backend used by the curator and evaluator agents.
/// Implementations must tolerate concurrent complete() calls.
class LlmBackend {
 public:
  virtual ~LlmBackend() = default;

  virtual std::string complete(const std::string& prompt, double temperature,
                               int max_tokens) = 0;
  virtual std::string name() const = 0;
  virtual std::string model_id() const = 0;
};

struct RetryPolicy {
  int max_attempts = 4;
  double initial_delay_s = 1.0;
  double backoff_factor = 2.0;
  double max_delay_s = 30.0;

  /// Delay before retry number `attempt` (1-based).
  double delay_for(int attempt) const;
};

struct HttpBackendConfig {
  /// Prefix of the chat-completions endpoint, e.g. https://api.openai.com/v1.
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4o";
  std::string api_key;
  double timeout_s = 60.0;
  RetryPolicy retry;
};

/// OpenAI-compatible chat-completion client. Posts a single user message to
/// {base_url}/chat/completions and returns choices[0].message.content.
/// 429 and 5xx responses and transport failures are retried with
/// exponential backoff; anything else raises BackendError.
class HttpChatBackend final : public LlmBackend {
 public:
  explicit HttpChatBackend(HttpBackendConfig config);

  std::string complete(const std::string& prompt, double temperature,
                       int max_tokens) override;
  std::string name() const override { return "http"; }
  std::string model_id() const override { return config_.model; }

  /// Request body for one completion; exposed for wire-format tests.
  std::string request_body(const std::string& prompt, double temperature,
                           int max_tokens) const;

 private:
  HttpBackendConfig config_;
  std::string origin_;  // scheme://host[:port]
  std::string path_prefix_;
};

}  // namespace readlens
