#include "parlor/transcript.hpp"

#include <cstdio>
#include <fstream>
#include <istream>

namespace parlor {

namespace {

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  throw TranscriptError(TranscriptErrorKind::malformed, line,
                        "line " + std::to_string(line) + ": " + what);
}

[[noreturn]] void out_of_order(std::size_t line, const std::string& what) {
  throw TranscriptError(TranscriptErrorKind::ordering, line,
                        "line " + std::to_string(line) + ": " + what);
}

const json& field(const json& payload, const char* key, std::size_t line) {
  if (!payload.contains(key)) malformed(line, std::string("payload lacks '") + key + "'");
  return payload.at(key);
}

std::string string_field(const json& payload, const char* key, std::size_t line) {
  const json& value = field(payload, key, line);
  if (!value.is_string()) malformed(line, std::string("'") + key + "' must be a string");
  return value.get<std::string>();
}

std::int64_t int_field(const json& payload, const char* key, std::size_t line) {
  const json& value = field(payload, key, line);
  if (!value.is_number_integer()) malformed(line, std::string("'") + key + "' must be an integer");
  return value.get<std::int64_t>();
}

}  // namespace

TranscriptError::TranscriptError(TranscriptErrorKind kind, std::size_t line,
                                 const std::string& message)
    : std::runtime_error(message), kind_(kind), line_(line) {}

EventRecord parse_event(std::string_view line, std::size_t line_number) {
  const json doc = json::parse(line.begin(), line.end(), nullptr, false);
  if (doc.is_discarded()) malformed(line_number, "not a valid record");
  if (!doc.is_object() || doc.size() != 5) malformed(line_number, "expected exactly 5 keys");
  EventRecord record;
  record.seq = int_field(doc, "seq", line_number);
  const std::string kind = string_field(doc, "kind", line_number);
  const auto parsed_kind = event_kind_from(kind);
  if (!parsed_kind) malformed(line_number, "unknown event kind '" + kind + "'");
  record.kind = *parsed_kind;
  record.at_ms = int_field(doc, "at_ms", line_number);
  record.payload = field(doc, "payload", line_number);
  if (!record.payload.is_object()) malformed(line_number, "payload must be an object");
  record.run_id = string_field(doc, "run_id", line_number);
  return record;
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_json(config.to_json())) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "fnv1a64:%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

TranscriptView load_transcript(std::istream& in, const std::optional<ExperimentConfig>& expected) {
  TranscriptView view;
  std::string text;
  std::size_t line_number = 0;
  std::int64_t last_at = 0;
  bool ended = false;

  while (std::getline(in, text)) {
    ++line_number;
    if (text.empty()) malformed(line_number, "empty line");
    EventRecord record = parse_event(text, line_number);

    const auto expected_seq = static_cast<std::int64_t>(view.events.size());
    if (record.seq != expected_seq) {
      out_of_order(line_number, "seq " + std::to_string(record.seq) + ", expected " +
                                    std::to_string(expected_seq));
    }
    if (record.at_ms < last_at) out_of_order(line_number, "time goes backwards");
    if (ended) out_of_order(line_number, "record after session_end");
    if ((record.kind == EventKind::session_start) != (expected_seq == 0)) {
      out_of_order(line_number, "session_start must be the first record, and only the first");
    }
    last_at = record.at_ms;
    const json& p = record.payload;

    switch (record.kind) {
      case EventKind::session_start:
        view.run_id = record.run_id;
        view.config_hash = string_field(p, "config_hash", line_number);
        view.config = field(p, "config", line_number);
        if (expected && config_hash(*expected) != view.config_hash) {
          throw TranscriptError(TranscriptErrorKind::config_mismatch, line_number,
                                "transcript was produced by a different config (" +
                                    view.config_hash + ")");
        }
        break;
      case EventKind::message: {
        Message msg;
        msg.turn = int_field(p, "turn", line_number);
        msg.seq = int_field(p, "message_seq", line_number);
        msg.sender = PersonId{string_field(p, "sender", line_number)};
        msg.content = string_field(p, "content", line_number);
        msg.at = Millis{record.at_ms};
        try {
          view.history.append(std::move(msg));
        } catch (const InvariantViolation& e) {
          out_of_order(line_number, e.what());
        }
        break;
      }
      case EventKind::skip:
        ++view.skips[string_field(p, "person", line_number)][string_field(p, "reason", line_number)];
        break;
      case EventKind::survey_answer: {
        SurveyAnswer answer;
        answer.person = PersonId{string_field(p, "person", line_number)};
        answer.question_id = string_field(p, "question_id", line_number);
        answer.phase_label = string_field(p, "phase", line_number);
        answer.raw = string_field(p, "raw", line_number);
        const json& value = field(p, "value", line_number);
        if (value.is_number_integer()) {
          answer.parsed_value = value.get<std::int64_t>();
        } else if (!value.is_null()) {
          malformed(line_number, "'value' must be an integer or null");
        }
        answer.clamped = p.value("clamped", false);
        view.survey_answers.push_back(std::move(answer));
        break;
      }
      case EventKind::suppressed_draft:
        view.suppressed_drafts.push_back({string_field(p, "person", line_number),
                                          int_field(p, "turn", line_number),
                                          string_field(p, "draft", line_number)});
        break;
      case EventKind::session_end:
        ended = true;
        view.complete = true;
        view.end_reason = string_field(p, "end_reason", line_number);
        break;
    }
    view.events.push_back(std::move(record));
  }
  if (view.events.empty()) {
    throw TranscriptError(TranscriptErrorKind::malformed, 0, "transcript is empty");
  }
  return view;
}

TranscriptView load_transcript_file(const std::filesystem::path& path,
                                    const std::optional<ExperimentConfig>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw TranscriptError(TranscriptErrorKind::io, 0, "cannot read '" + path.string() + "'");
  }
  return load_transcript(in, expected);
}

}  // namespace parlor
