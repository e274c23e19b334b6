#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace parlor {

using json = nlohmann::json;
using Millis = std::chrono::milliseconds;

// Raised when an engine-internal invariant is broken. Never caused by user input.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct PersonId {
  std::string name;

  auto operator<=>(const PersonId&) const = default;
};

struct PersonProfile {
  PersonId id;
  std::string background_story;
  std::string role_class;
  // Class-specific fields (opinion, opinion_strength, model keys as written in the config).
  json extra = json::object();

  bool operator==(const PersonProfile&) const = default;
};

struct Message {
  std::int64_t turn = 0;
  std::int64_t seq = 0;
  PersonId sender;
  std::string content;
  Millis at{0};

  bool operator==(const Message&) const = default;
};

struct LabeledLine {
  std::string sender;
  std::string content;

  bool operator==(const LabeledLine&) const = default;
};

// Append-only shared conversation. Single writer: the session engine.
class ChatHistory {
 public:
  // Throws InvariantViolation on seq mismatch, time regression, or blank content.
  void append(Message msg);

  std::span<const Message> messages() const { return messages_; }
  std::size_t size() const { return messages_.size(); }
  bool empty() const { return messages_.empty(); }

  // Every viewer currently sees the same uniformly labeled transcript.
  std::vector<LabeledLine> visible_to(const PersonId& viewer) const;

  bool operator==(const ChatHistory&) const = default;

 private:
  std::vector<Message> messages_;
};

std::vector<LabeledLine> visible_history(const ChatHistory& history, const PersonId& viewer);

struct FreeText {
  bool operator==(const FreeText&) const = default;
};

struct IntegerScale {
  std::int64_t min = 0;
  std::int64_t max = 10;

  bool operator==(const IntegerScale&) const = default;
};

using AnswerKind = std::variant<FreeText, IntegerScale>;

struct SurveyQuestion {
  std::string id;
  std::string prompt;
  AnswerKind kind = FreeText{};

  bool operator==(const SurveyQuestion&) const = default;
};

struct SurveyAnswer {
  PersonId person;
  std::string question_id;
  std::string phase_label;
  std::string raw;
  std::optional<std::int64_t> parsed_value;
  bool clamped = false;

  bool operator==(const SurveyAnswer&) const = default;
};

std::string trim(std::string_view text);

}  // namespace parlor
