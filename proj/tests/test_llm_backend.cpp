#include <doctest.h>

#include <atomic>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "readlens/error.hpp"
#include "readlens/llm_backend.hpp"

using namespace readlens;

namespace {

/// Local chat-completions stub; `status_for(n)` picks the status of the n-th
/// request (0-based).
class StubServer {
 public:
  explicit StubServer(std::function<int(int)> status_for) : status_for_(std::move(status_for)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int n = hits_++;
      {
        std::lock_guard<std::mutex> lock(mu_);
        bodies_.push_back(req.body);
        auth_ = req.get_header_value("Authorization");
      }
      res.status = status_for_(n);
      if (res.status == 200) {
        nlohmann::json reply = {
            {"choices", {{{"message", {{"role", "assistant"}, {"content", "hello"}}}}}}};
        res.set_content(reply.dump(), "application/json");
      } else {
        res.set_content("{\"error\":\"nope\"}", "application/json");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  int hits() const { return hits_.load(); }
  std::vector<std::string> bodies() {
    std::lock_guard<std::mutex> lock(mu_);
    return bodies_;
  }
  std::string auth() {
    std::lock_guard<std::mutex> lock(mu_);
    return auth_;
  }

 private:
  httplib::Server server_;
  std::function<int(int)> status_for_;
  std::atomic<int> hits_{0};
  std::mutex mu_;
  std::vector<std::string> bodies_;
  std::string auth_;
  int port_ = 0;
  std::thread thread_;
};

HttpBackendConfig fast_config(const std::string& url) {
  HttpBackendConfig c;
  c.base_url = url;
  c.model = "test-model";
  c.api_key = "k123";
  c.timeout_s = 5.0;
  c.retry.initial_delay_s = 0.01;
  c.retry.max_delay_s = 0.05;
  return c;
}

}  // namespace

TEST_CASE("retry policy backs off exponentially up to a cap") {
  RetryPolicy p;
  CHECK(p.delay_for(1) == 1.0);
  CHECK(p.delay_for(2) == 2.0);
  CHECK(p.delay_for(3) == 4.0);
  CHECK(p.delay_for(10) == 30.0);
}

TEST_CASE("request body follows the chat-completions shape") {
  HttpChatBackend b(fast_config("http://127.0.0.1:1/v1"));
  auto body = nlohmann::json::parse(b.request_body("hi", 0.2, 64));
  CHECK(body["model"] == "test-model");
  CHECK(body["messages"].size() == 1);
  CHECK(body["messages"][0]["role"] == "user");
  CHECK(body["messages"][0]["content"] == "hi");
  CHECK(body["temperature"] == 0.2);
  CHECK(body["max_tokens"] == 64);
}

TEST_CASE("429 is retried, then the completion is returned") {
  StubServer s([](int n) { return n < 2 ? 429 : 200; });
  HttpChatBackend b(fast_config(s.base_url()));
  CHECK(b.complete("prompt text", 0.7, 100) == "hello");
  CHECK(s.hits() == 3);
  auto bodies = s.bodies();
  REQUIRE(bodies.size() == 3);
  CHECK(nlohmann::json::parse(bodies[0])["messages"][0]["content"] == "prompt text");
  CHECK(s.auth() == "Bearer k123");
}

TEST_CASE("persistent 5xx gives up after max_attempts") {
  StubServer s([](int) { return 503; });
  HttpChatBackend b(fast_config(s.base_url()));
  try {
    b.complete("x", 0.0, 1);
    FAIL("expected BackendError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BackendError);
  }
  CHECK(s.hits() == 4);
}

TEST_CASE("a 400 is not retried") {
  StubServer s([](int) { return 400; });
  HttpChatBackend b(fast_config(s.base_url()));
  CHECK_THROWS_AS(b.complete("x", 0.0, 1), Error);
  CHECK(s.hits() == 1);
}

TEST_CASE("base_url without a scheme is a config error") {
  try {
    HttpChatBackend b(fast_config("localhost/v1"));
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
  }
}
