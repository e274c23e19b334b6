#include "parlor/events.hpp"

#include "parlor/model.hpp"

namespace parlor {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::session_start: return "session_start";
    case EventKind::message: return "message";
    case EventKind::skip: return "skip";
    case EventKind::survey_answer: return "survey_answer";
    case EventKind::suppressed_draft: return "suppressed_draft";
    case EventKind::session_end: return "session_end";
  }
  return "message";
}

std::optional<EventKind> event_kind_from(std::string_view text) {
  for (EventKind k : {EventKind::session_start, EventKind::message, EventKind::skip,
                      EventKind::survey_answer, EventKind::suppressed_draft,
                      EventKind::session_end}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::string canonical_json(const json& value) {
  // nlohmann objects are std::map-backed, so keys already come out sorted bytewise.
  return value.dump(-1, ' ', false, json::error_handler_t::strict);
}

std::string serialize_event(const EventRecord& record) {
  const json line = {{"seq", record.seq},
                     {"kind", std::string(to_string(record.kind))},
                     {"at_ms", record.at_ms},
                     {"payload", record.payload},
                     {"run_id", record.run_id}};
  return canonical_json(line);
}

JsonlFileSink::JsonlFileSink(std::filesystem::path path) : path_(std::move(path)) {
  out_.open(path_, std::ios::out | std::ios::trunc | std::ios::binary);
  if (!out_.is_open()) throw IoError("cannot open transcript '" + path_.string() + "'");
}

void JsonlFileSink::write(const EventRecord& record) {
  if (record.seq != written_) {
    throw InvariantViolation("event seq " + std::to_string(record.seq) + " written as record " +
                             std::to_string(written_));
  }
  std::string line = serialize_event(record);
  line.push_back('\n');
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  if (record.kind == EventKind::session_end) out_.flush();
  if (!out_) throw IoError("write failed for transcript '" + path_.string() + "'");
  ++written_;
}

void MemorySink::write(const EventRecord& record) {
  std::lock_guard lock(mutex_);
  records_.push_back(record);
}

std::vector<EventRecord> MemorySink::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::string MemorySink::text() const {
  std::lock_guard lock(mutex_);
  std::string out;
  for (const auto& r : records_) {
    out += serialize_event(r);
    out.push_back('\n');
  }
  return out;
}

}  // namespace parlor
