#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "parlor/model.hpp"

namespace parlor {

// What a request is for. The wire format ignores it; scripted backends keep
// one output stream per purpose.
enum class RequestPurpose { turn, schedule, survey };

std::string_view to_string(RequestPurpose purpose);

struct SamplingParams {
  double temperature = 0.7;
  int max_tokens = 256;
  std::vector<std::string> stop;

  bool operator==(const SamplingParams&) const = default;
};

// One prompt line. An empty speaker renders the text unlabeled.
struct PromptTurn {
  std::string speaker;
  std::string text;

  bool operator==(const PromptTurn&) const = default;
};

struct BackendRequest {
  std::string model_id;
  std::string system_text;
  std::vector<PromptTurn> turns;
  SamplingParams sampling;
  RequestPurpose purpose = RequestPurpose::turn;
};

struct BackendResponse {
  std::string text;
  std::string finish_reason;
};

// Transport failure that survived the retry policy.
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendResponse complete(const BackendRequest& request) = 0;
};

// Offline backend replaying fixed outputs per purpose, cycling when exhausted.
// A nullopt entry simulates a transport failure. Instrumented for tests.
class ScriptedBackend final : public Backend {
 public:
  using Script = std::vector<std::optional<std::string>>;

  ScriptedBackend() = default;
  explicit ScriptedBackend(std::map<RequestPurpose, Script> scripts);

  void set_script(RequestPurpose purpose, Script script);
  BackendResponse complete(const BackendRequest& request) override;

  std::size_t calls(RequestPurpose purpose) const;
  std::vector<BackendRequest> requests() const;

 private:
  mutable std::mutex mutex_;
  std::map<RequestPurpose, Script> scripts_;
  std::map<RequestPurpose, std::size_t> cursor_;
  std::vector<BackendRequest> requests_;
};

// Forwards to another backend and keeps every request it saw.
class RecordingBackend final : public Backend {
 public:
  explicit RecordingBackend(std::shared_ptr<Backend> inner);

  BackendResponse complete(const BackendRequest& request) override;
  std::vector<BackendRequest> requests() const;

 private:
  std::shared_ptr<Backend> inner_;
  mutable std::mutex mutex_;
  std::vector<BackendRequest> requests_;
};

struct RetryPolicy {
  int max_retries = 1;
  Millis initial_backoff{1000};
  // Replaceable for tests; defaults to std::this_thread::sleep_for.
  std::function<void(Millis)> sleep;
};

struct EndpointOptions {
  std::string base_url;
  std::string api_key;
  RetryPolicy retry;
  Millis timeout{60000};
};

// Default base URL: $PARLOR_BACKEND_URL, else a local OpenAI-compatible server.
std::string default_backend_url();

// Chat-completions client. Stateless between calls, so one instance can be
// shared by every session of a batch.
class EndpointBackend final : public Backend {
 public:
  explicit EndpointBackend(EndpointOptions options);

  BackendResponse complete(const BackendRequest& request) override;

  static nlohmann::json request_body(const BackendRequest& request);
  static BackendResponse parse_response(std::string_view body);

  const EndpointOptions& options() const { return options_; }

 private:
  EndpointOptions options_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

}  // namespace parlor
