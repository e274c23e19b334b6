#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "parlor/backend.hpp"

namespace parlor {

namespace {

constexpr const char* kDefaultBaseUrl = "http://127.0.0.1:8000/v1";

std::string render_turn(const PromptTurn& turn) {
  if (turn.speaker.empty()) return turn.text;
  return turn.speaker + ": " + turn.text;
}

}  // namespace

std::string default_backend_url() {
  if (const char* env = std::getenv("PARLOR_BACKEND_URL"); env != nullptr && *env != '\0') {
    return env;
  }
  return kDefaultBaseUrl;
}

EndpointBackend::EndpointBackend(EndpointOptions options) : options_(std::move(options)) {
  if (options_.base_url.empty()) options_.base_url = default_backend_url();
  if (options_.api_key.empty()) {
    if (const char* key = std::getenv("PARLOR_API_KEY")) options_.api_key = key;
  }
  if (!options_.retry.sleep) {
    options_.retry.sleep = [](Millis d) { std::this_thread::sleep_for(d); };
  }
  std::string url = options_.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  if (path_start == std::string::npos) {
    scheme_host_port_ = url;
  } else {
    scheme_host_port_ = url.substr(0, path_start);
    path_prefix_ = url.substr(path_start);
  }
}

nlohmann::json EndpointBackend::request_body(const BackendRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  messages.push_back({{"role", "system"}, {"content", request.system_text}});
  for (const PromptTurn& turn : request.turns) {
    messages.push_back({{"role", "user"}, {"content", render_turn(turn)}});
  }
  nlohmann::json body = {{"model", request.model_id},
                         {"messages", std::move(messages)},
                         {"temperature", request.sampling.temperature},
                         {"max_tokens", request.sampling.max_tokens}};
  if (!request.sampling.stop.empty()) body["stop"] = request.sampling.stop;
  return body;
}

BackendResponse EndpointBackend::parse_response(std::string_view body) {
  const auto doc = nlohmann::json::parse(body.begin(), body.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("choices") ||
      !doc["choices"].is_array() || doc["choices"].empty()) {
    throw BackendError("malformed chat-completion response");
  }
  const auto& choice = doc["choices"][0];
  BackendResponse response;
  if (choice.contains("message") && choice["message"].contains("content") &&
      choice["message"]["content"].is_string()) {
    response.text = choice["message"]["content"].get<std::string>();
  } else if (choice.contains("text") && choice["text"].is_string()) {
    response.text = choice["text"].get<std::string>();
  }
  if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
    response.finish_reason = choice["finish_reason"].get<std::string>();
  }
  return response;
}

BackendResponse EndpointBackend::complete(const BackendRequest& request) {
  const std::string body = request_body(request).dump();
  const std::string path = path_prefix_ + "/chat/completions";

  httplib::Client client(scheme_host_port_);
  const auto seconds = options_.timeout.count() / 1000;
  const auto micros = (options_.timeout.count() % 1000) * 1000;
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);
  httplib::Headers headers;
  if (!options_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + options_.api_key);
  }

  std::string last_error;
  Millis backoff = options_.retry.initial_backoff;
  for (int attempt = 0; attempt <= options_.retry.max_retries; ++attempt) {
    if (attempt > 0) {
      options_.retry.sleep(backoff);
      backoff *= 2;
    }
    auto result = client.Post(path, headers, body, "application/json");
    if (!result) {
      last_error = "transport error: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status >= 500) {
      last_error = "server error " + std::to_string(result->status);
      continue;
    }
    if (result->status < 200 || result->status >= 300) {
      throw BackendError("backend rejected request with status " +
                         std::to_string(result->status));
    }
    return parse_response(result->body);
  }
  throw BackendError(last_error);
}

}  // namespace parlor
