#pragma once

#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <semaphore>
#include <thread>

#include <httplib.h>

#include "mapmind/reason.hpp"

namespace mapmind {

inline constexpr const char* api_key_env = "MAPMIND_API_KEY";

// Blocking token bucket. A rate of zero lets everything through.
class TokenBucket {
 public:
  using clock = std::chrono::steady_clock;

  TokenBucket(double per_second, double burst)
      : rate_(per_second), capacity_(std::max(1.0, burst)), tokens_(capacity_), last_(clock::now()) {}

  void acquire() {
    if (rate_ <= 0) return;
    std::unique_lock lock(mu_);
    for (;;) {
      refill();
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      const auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
      lock.unlock();
      std::this_thread::sleep_for(wait);
      lock.lock();
    }
  }

 private:
  void refill() {
    const auto now = clock::now();
    tokens_ = std::min(capacity_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_);
    last_ = now;
  }

  double rate_, capacity_, tokens_;
  clock::time_point last_;
  std::mutex mu_;
};

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

inline ParsedUrl split_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw error("bad-endpoint", "base_url needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out{url.substr(0, path_start), path_start == std::string::npos ? "" : url.substr(path_start)};
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

// Path of the completions call; "/v1" is added unless the base already ends in it.
inline std::string completions_path(const std::string& base_path) {
  const bool has_v1 = base_path.size() >= 3 && base_path.compare(base_path.size() - 3, 3, "/v1") == 0;
  return base_path + (has_v1 ? "" : "/v1") + "/chat/completions";
}

inline std::string chat_request_body(const std::string& model, const ChatRequest& req) {
  ojson messages = ojson::array();
  for (const auto& m : req.messages) messages.push_back({{"role", std::string(role_name(m.role))}, {"content", m.text}});
  return ojson{{"model", model}, {"messages", messages}, {"temperature", req.temperature}, {"n", 1}}.dump();
}

inline std::string chat_reply_text(const std::string& body) {
  try {
    const auto j = ojson::parse(body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string{} : content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw error("bad-reply", e.what());
  }
}

// OpenAI-compatible chat completions over HTTP(S).
class RemoteChatEndpoint : public Endpoint {
 public:
  RemoteChatEndpoint(EndpointSpec spec, std::string api_key)
      : spec_(std::move(spec)),
        key_(std::move(api_key)),
        url_(split_base_url(spec_.base_url)),
        bucket_(spec_.requests_per_second, std::max(1, spec_.max_in_flight)),
        in_flight_(std::max(1, spec_.max_in_flight)) {
    spec_.check();
  }

  static std::unique_ptr<RemoteChatEndpoint> from_env(EndpointSpec spec) {
    const char* key = std::getenv(api_key_env);
    if (!key || !*key) throw error("missing-credentials", std::string(api_key_env) + " is not set");
    return std::make_unique<RemoteChatEndpoint>(std::move(spec), key);
  }

  Completion complete(const ChatRequest& req) override {
    const std::string body = chat_request_body(spec_.model, req);
    const std::string path = completions_path(url_.path);
    Completion out;
    std::string last_error;
    const auto started = std::chrono::steady_clock::now();
    for (int attempt = 1; attempt <= spec_.max_attempts; ++attempt) {
      out.attempts = attempt;
      if (attempt > 1)
        std::this_thread::sleep_for(std::chrono::milliseconds(spec_.backoff_ms) * (1 << std::min(attempt - 2, 6)));
      bucket_.acquire();
      in_flight_.acquire();
      httplib::Result res = [&] {
        httplib::Client client(url_.origin);
        client.set_connection_timeout(spec_.timeout_s);
        client.set_read_timeout(spec_.timeout_s);
        client.set_bearer_token_auth(key_);
        return client.Post(path, body, "application/json");
      }();
      in_flight_.release();
      if (!res) {
        last_error = "transport: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "http " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        last_error = "http " + std::to_string(res->status);
        break;
      }
      try {
        out.text = chat_reply_text(res->body);
        last_error.clear();
        break;
      } catch (const error& e) {
        last_error = std::string("bad reply: ") + e.what();
      }
    }
    out.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    if (!last_error.empty()) out.failure = "endpoint-error: " + last_error;
    return out;
  }

  const EndpointSpec& spec() const override { return spec_; }

 private:
  EndpointSpec spec_;
  std::string key_;
  ParsedUrl url_;
  TokenBucket bucket_;
  std::counting_semaphore<1024> in_flight_;
};

inline std::unique_ptr<Endpoint> make_endpoint(const EndpointSpec& spec) {
  spec.check();
  switch (spec.kind) {
    case EndpointKind::scripted_oracle: return std::make_unique<OracleEndpoint>(spec);
    case EndpointKind::scripted_random: return std::make_unique<RandomEndpoint>(spec);
    case EndpointKind::remote_chat: return RemoteChatEndpoint::from_env(spec);
  }
  throw error("unknown-endpoint-kind", spec.name);
}

}  // namespace mapmind
