#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace parlor {

using json = nlohmann::json;

enum class EventKind { session_start, message, skip, survey_answer, suppressed_draft, session_end };

std::string_view to_string(EventKind kind);
std::optional<EventKind> event_kind_from(std::string_view text);

struct EventRecord {
  std::int64_t seq = 0;
  EventKind kind = EventKind::message;
  std::int64_t at_ms = 0;
  json payload = json::object();
  std::string run_id;

  bool operator==(const EventRecord&) const = default;
};

// Sorted keys, no insignificant whitespace, raw UTF-8. Throws on invalid UTF-8.
std::string canonical_json(const json& value);

// One line without the trailing LF.
std::string serialize_event(const EventRecord& record);

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual void write(const EventRecord& record) = 0;
};

// Append-only ".events.jsonl" writer. Each record is one write of one line.
class JsonlFileSink final : public EventSink {
 public:
  explicit JsonlFileSink(std::filesystem::path path);

  void write(const EventRecord& record) override;
  const std::filesystem::path& path() const { return path_; }
  std::int64_t written() const { return written_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::int64_t written_ = 0;
};

class MemorySink final : public EventSink {
 public:
  void write(const EventRecord& record) override;

  std::vector<EventRecord> records() const;
  // Concatenated file image, LF-terminated lines.
  std::string text() const;

 private:
  mutable std::mutex mutex_;
  std::vector<EventRecord> records_;
};

class CallbackSink final : public EventSink {
 public:
  explicit CallbackSink(std::function<void(const EventRecord&)> callback)
      : callback_(std::move(callback)) {}

  void write(const EventRecord& record) override { callback_(record); }

 private:
  std::function<void(const EventRecord&)> callback_;
};

}  // namespace parlor
