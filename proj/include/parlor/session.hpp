#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "parlor/clock.hpp"
#include "parlor/config.hpp"
#include "parlor/events.hpp"
#include "parlor/hosts.hpp"
#include "parlor/model.hpp"
#include "parlor/persons.hpp"

namespace parlor {

struct EndCondition {
  enum class Kind { num_msgs, time_limit, turn_cap, any_of };

  Kind kind = Kind::num_msgs;
  std::int64_t max = 0;  // num_msgs: messages, turn_cap: granted turns
  Millis limit{0};
  std::vector<EndCondition> members;

  static EndCondition num_msgs(std::int64_t max);
  static EndCondition time_limit(Millis limit);
  static EndCondition turn_cap(std::int64_t max_turns);
  static EndCondition any_of(std::vector<EndCondition> members);
};

// Throws ConfigError for an unknown end class.
EndCondition make_end_condition(const ClassSpec& spec);

// Adds max(10 * expected messages, 1000) as a turn cap unless one is present.
EndCondition with_safety_turn_cap(EndCondition condition);

struct EndCheck {
  bool ended = false;
  std::string reason;  // "num_msgs" | "time_limit" | "turn_cap"
};

EndCheck did_end(const EndCondition& condition, std::size_t messages, Millis elapsed,
                 std::int64_t turn_count);

struct ParsedSurveyReply {
  std::optional<std::int64_t> value;
  bool clamped = false;
};

// Integer scales: first integer token, clamped to the bounds. Free text: no value.
ParsedSurveyReply parse_survey_reply(std::string_view raw, const SurveyQuestion& question);

struct SessionOptions {
  std::optional<std::uint64_t> seed;  // overrides the config seed
  bool golden = false;                // zero run_id and wall-clock metadata
  std::string run_id;                 // generated when empty and not golden
  // Wall-clock sessions only; defaults to std::chrono::steady_clock.
  SessionClock::MonotonicSource wall_source;
};

struct SessionResult {
  std::vector<Message> history;
  std::vector<SurveyAnswer> survey_answers;
  std::vector<std::string> survey_phases;  // labels in firing order
  std::string end_reason;
  std::int64_t event_count = 0;
  std::int64_t turn_count = 0;
  Millis elapsed{0};
  bool aborted = false;
  std::string error;

  bool operator==(const SessionResult&) const = default;
};

enum class SessionStatus { created, running, ended };

// The session room: one history, one host, one clock, one thread of control.
class SessionEngine {
 public:
  SessionEngine(ExperimentConfig config, std::vector<std::unique_ptr<Person>> persons,
                std::vector<EventSink*> sinks, SessionOptions options = {});

  // session_start + "pre" surveys. Throws on sink failure.
  void start();
  EndCheck did_end() const;
  // One granted turn. Requires status running.
  TurnOutcome iterate();
  std::vector<SurveyAnswer> run_survey_phase(const std::string& label);
  // "post" surveys + session_end.
  void finish(const std::string& reason);

  // Whole session. Sink failures abort it and are reported in the result.
  SessionResult run();

  const ChatHistory& history() const { return history_; }
  const SessionClock& clock() const { return clock_; }
  std::int64_t turn_count() const { return turn_count_; }
  std::int64_t event_count() const { return next_seq_; }
  SessionStatus status() const { return status_; }
  const std::string& run_id() const { return run_id_; }
  const std::vector<SurveyAnswer>& survey_answers() const { return survey_answers_; }
  const EndCondition& end_condition() const { return end_; }

 private:
  TurnContext context_for(const Person& person) const;
  void emit(EventKind kind, json payload);
  void run_due_surveys(bool message_appended);

  ExperimentConfig config_;
  std::vector<std::unique_ptr<Person>> persons_;
  std::vector<EventSink*> sinks_;
  SessionOptions options_;
  std::uint64_t seed_;
  std::string run_id_;
  std::unique_ptr<Host> host_;
  SessionClock clock_;
  EndCondition end_;
  ChatHistory history_;
  std::vector<SurveyAnswer> survey_answers_;
  std::vector<std::string> survey_phases_;
  std::int64_t turn_count_ = 0;
  std::int64_t next_seq_ = 0;
  std::int64_t last_at_ms_ = 0;
  SessionStatus status_ = SessionStatus::created;
  std::string end_reason_;
};

SessionResult run_session(const ExperimentConfig& config,
                          std::vector<std::unique_ptr<Person>> persons,
                          std::vector<EventSink*> sinks, SessionOptions options = {});

}  // namespace parlor
