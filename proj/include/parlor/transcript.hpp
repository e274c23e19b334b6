#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "parlor/config.hpp"
#include "parlor/events.hpp"
#include "parlor/model.hpp"

namespace parlor {

enum class TranscriptErrorKind { malformed, ordering, config_mismatch, io };

class TranscriptError : public std::runtime_error {
 public:
  TranscriptError(TranscriptErrorKind kind, std::size_t line, const std::string& message);

  TranscriptErrorKind kind() const { return kind_; }
  // 1-based line number, 0 when not tied to a line.
  std::size_t line() const { return line_; }

 private:
  TranscriptErrorKind kind_;
  std::size_t line_;
};

// Parses one serialized record. Throws TranscriptError(malformed).
EventRecord parse_event(std::string_view line, std::size_t line_number = 0);

// "fnv1a64:<16 hex digits>" over the canonical config document.
std::string config_hash(const ExperimentConfig& config);

struct SuppressedDraft {
  std::string person;
  std::int64_t turn = 0;
  std::string draft;
};

struct TranscriptView {
  std::vector<EventRecord> events;
  ChatHistory history;
  std::vector<SurveyAnswer> survey_answers;
  std::vector<SuppressedDraft> suppressed_drafts;
  // person -> skip reason -> count
  std::map<std::string, std::map<std::string, std::int64_t>> skips;
  bool complete = false;
  std::string end_reason;
  std::string run_id;
  std::string config_hash;
  json config;
};

TranscriptView load_transcript(std::istream& in,
                               const std::optional<ExperimentConfig>& expected = std::nullopt);
TranscriptView load_transcript_file(const std::filesystem::path& path,
                                    const std::optional<ExperimentConfig>& expected = std::nullopt);

}  // namespace parlor
