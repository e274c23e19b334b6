#include "parlor/backend.hpp"

#include <algorithm>

namespace parlor {

std::string_view to_string(RequestPurpose purpose) {
  switch (purpose) {
    case RequestPurpose::turn: return "turn";
    case RequestPurpose::schedule: return "schedule";
    case RequestPurpose::survey: return "survey";
  }
  return "turn";
}

ScriptedBackend::ScriptedBackend(std::map<RequestPurpose, Script> scripts)
    : scripts_(std::move(scripts)) {}

void ScriptedBackend::set_script(RequestPurpose purpose, Script script) {
  std::lock_guard lock(mutex_);
  scripts_[purpose] = std::move(script);
  cursor_[purpose] = 0;
}

BackendResponse ScriptedBackend::complete(const BackendRequest& request) {
  std::lock_guard lock(mutex_);
  requests_.push_back(request);
  auto it = scripts_.find(request.purpose);
  if (it == scripts_.end() || it->second.empty()) return {"", "stop"};
  std::size_t& cursor = cursor_[request.purpose];
  const auto& entry = it->second[cursor % it->second.size()];
  ++cursor;
  if (!entry) {
    throw BackendError("scripted transport failure (" + std::string(to_string(request.purpose)) +
                       ")");
  }
  return {*entry, "stop"};
}

std::size_t ScriptedBackend::calls(RequestPurpose purpose) const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(std::count_if(
      requests_.begin(), requests_.end(),
      [&](const BackendRequest& r) { return r.purpose == purpose; }));
}

std::vector<BackendRequest> ScriptedBackend::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

RecordingBackend::RecordingBackend(std::shared_ptr<Backend> inner) : inner_(std::move(inner)) {}

BackendResponse RecordingBackend::complete(const BackendRequest& request) {
  {
    std::lock_guard lock(mutex_);
    requests_.push_back(request);
  }
  return inner_->complete(request);
}

std::vector<BackendRequest> RecordingBackend::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

}  // namespace parlor
