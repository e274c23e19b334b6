#include "parlor/session.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <random>

#include "parlor/prompt.hpp"
#include "parlor/transcript.hpp"

namespace parlor {

namespace {

// Sink failures are the only errors that abort a session mid-run.
class SinkFailure : public IoError {
 public:
  using IoError::IoError;
};

bool contains_turn_cap(const EndCondition& c) {
  if (c.kind == EndCondition::Kind::turn_cap) return true;
  return std::any_of(c.members.begin(), c.members.end(), contains_turn_cap);
}

std::int64_t max_expected_messages(const EndCondition& c) {
  std::int64_t best = 0;
  if (c.kind == EndCondition::Kind::num_msgs) best = c.max;
  for (const auto& m : c.members) best = std::max(best, max_expected_messages(m));
  return best;
}

std::string random_run_id() {
  std::random_device device;
  const std::uint64_t value = (static_cast<std::uint64_t>(device()) << 32) ^ device();
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(value));
  return buffer;
}

std::int64_t unix_now_ms() {
  return std::chrono::duration_cast<Millis>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

EndCondition EndCondition::num_msgs(std::int64_t max) {
  EndCondition c;
  c.kind = Kind::num_msgs;
  c.max = max;
  return c;
}

EndCondition EndCondition::time_limit(Millis limit) {
  EndCondition c;
  c.kind = Kind::time_limit;
  c.limit = limit;
  return c;
}

EndCondition EndCondition::turn_cap(std::int64_t max_turns) {
  EndCondition c;
  c.kind = Kind::turn_cap;
  c.max = max_turns;
  return c;
}

EndCondition EndCondition::any_of(std::vector<EndCondition> members) {
  EndCondition c;
  c.kind = Kind::any_of;
  c.members = std::move(members);
  return c;
}

EndCondition make_end_condition(const ClassSpec& spec) {
  const json& p = spec.params;
  if (spec.class_name == "end_num_msgs") {
    return EndCondition::num_msgs(p.at("max_num_msgs").get<std::int64_t>());
  }
  if (spec.class_name == "end_time_limit") {
    return EndCondition::time_limit(Millis{static_cast<std::int64_t>(
        std::llround(p.at("limit_seconds").get<double>() * 1000.0))});
  }
  if (spec.class_name == "end_turn_cap") {
    return EndCondition::turn_cap(p.at("max_turns").get<std::int64_t>());
  }
  if (spec.class_name == "end_any_of") {
    std::vector<EndCondition> members;
    for (const auto& member : p.at("conditions")) {
      ClassSpec child{member.at("class").get<std::string>(), member};
      child.params.erase("class");
      members.push_back(make_end_condition(child));
    }
    return EndCondition::any_of(std::move(members));
  }
  throw ConfigError(ConfigErrorKind::unknown_class, "end_type.class",
                    "unknown end class '" + spec.class_name + "'");
}

EndCondition with_safety_turn_cap(EndCondition condition) {
  if (contains_turn_cap(condition)) return condition;
  const std::int64_t cap = std::max<std::int64_t>(10 * max_expected_messages(condition), 1000);
  std::vector<EndCondition> members;
  if (condition.kind == EndCondition::Kind::any_of) {
    members = std::move(condition.members);
  } else {
    members.push_back(std::move(condition));
  }
  members.push_back(EndCondition::turn_cap(cap));
  return EndCondition::any_of(std::move(members));
}

EndCheck did_end(const EndCondition& c, std::size_t messages, Millis elapsed,
                 std::int64_t turn_count) {
  switch (c.kind) {
    case EndCondition::Kind::num_msgs:
      if (static_cast<std::int64_t>(messages) >= c.max) return {true, "num_msgs"};
      return {};
    case EndCondition::Kind::time_limit:
      if (elapsed >= c.limit) return {true, "time_limit"};
      return {};
    case EndCondition::Kind::turn_cap:
      if (turn_count >= c.max) return {true, "turn_cap"};
      return {};
    case EndCondition::Kind::any_of:
      for (const auto& member : c.members) {
        EndCheck check = did_end(member, messages, elapsed, turn_count);
        if (check.ended) return check;
      }
      return {};
  }
  return {};
}

ParsedSurveyReply parse_survey_reply(std::string_view raw, const SurveyQuestion& question) {
  const auto* scale = std::get_if<IntegerScale>(&question.kind);
  if (scale == nullptr) return {};
  auto is_digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
  std::size_t i = 0;
  while (i < raw.size() && !is_digit(raw[i])) ++i;
  if (i == raw.size()) return {};
  const bool negative = i > 0 && raw[i - 1] == '-' &&
                        (i < 2 || !std::isalnum(static_cast<unsigned char>(raw[i - 2])));
  std::size_t end = i;
  while (end < raw.size() && is_digit(raw[end])) ++end;
  // Digit runs too long for int64 saturate; they get clamped anyway.
  std::int64_t magnitude = 0;
  bool saturated = false;
  for (std::size_t k = i; k < end; ++k) {
    if (magnitude > (INT64_MAX - 9) / 10) {
      saturated = true;
      break;
    }
    magnitude = magnitude * 10 + (raw[k] - '0');
  }
  std::int64_t value = saturated ? INT64_MAX : magnitude;
  if (negative) value = saturated ? INT64_MIN : -value;
  ParsedSurveyReply out;
  out.value = std::clamp(value, scale->min, scale->max);
  out.clamped = *out.value != value;
  return out;
}

// --- engine -----------------------------------------------------------------

SessionEngine::SessionEngine(ExperimentConfig config, std::vector<std::unique_ptr<Person>> persons,
                             std::vector<EventSink*> sinks, SessionOptions options)
    : config_(std::move(config)),
      persons_(std::move(persons)),
      sinks_(std::move(sinks)),
      options_(std::move(options)),
      seed_(options_.seed.value_or(config_.effective_seed())),
      clock_(SessionClock::virtual_clock(Millis{0})),
      end_(with_safety_turn_cap(make_end_condition(config_.end))) {
  if (persons_.empty()) throw std::invalid_argument("a session needs at least one person");
  std::vector<PersonId> roster;
  for (const auto& person : persons_) roster.push_back(person->profile().id);
  host_ = make_host(config_.host, std::move(roster), seed_);

  run_id_ = options_.golden ? std::string(16, '0')
                            : (options_.run_id.empty() ? random_run_id() : options_.run_id);
  const std::int64_t start = options_.golden ? 0 : unix_now_ms();
  const ClockSpec clock = config_.effective_clock();
  clock_ = clock.mode == ClockMode::virtual_time
               ? SessionClock::virtual_clock(clock.tick, clock.limit, start)
               : SessionClock::wall_clock(clock.limit, options_.wall_source, start);
}

TurnContext SessionEngine::context_for(const Person& person) const {
  return TurnContext{config_.scenario, history_.visible_to(person.profile().id), person.profile(),
                     clock_.snapshot(), turn_count_};
}

void SessionEngine::emit(EventKind kind, json payload) {
  EventRecord record;
  record.seq = next_seq_;
  record.kind = kind;
  record.at_ms = std::max(last_at_ms_, static_cast<std::int64_t>(clock_.elapsed().count()));
  record.payload = std::move(payload);
  record.run_id = run_id_;
  for (EventSink* sink : sinks_) {
    try {
      sink->write(record);
    } catch (const std::exception& e) {
      throw SinkFailure(std::string("event sink failed: ") + e.what());
    }
  }
  last_at_ms_ = record.at_ms;
  ++next_seq_;
}

void SessionEngine::start() {
  if (status_ != SessionStatus::created) throw InvariantViolation("session already started");
  status_ = SessionStatus::running;
  emit(EventKind::session_start,
       {{"config", config_.to_json()},
        {"config_hash", config_hash(config_)},
        {"prompt_version", std::string(kPromptTemplateVersion)},
        {"seed", seed_},
        {"started_at_unix_ms", clock_.start_unix_ms()}});
  if (config_.survey && config_.survey->has(SurveyPhase::Kind::pre)) run_survey_phase("pre");
}

EndCheck SessionEngine::did_end() const {
  return parlor::did_end(end_, history_.size(), clock_.elapsed(), turn_count_);
}

TurnOutcome SessionEngine::iterate() {
  if (status_ != SessionStatus::running) throw InvariantViolation("iterate on a session not running");
  const std::size_t index = host_->next_speaker();
  Person& person = *persons_.at(index);
  const TurnContext ctx = context_for(person);

  TurnOutcome outcome;
  try {
    outcome = person.generate_answer(ctx);
  } catch (const BackendError& e) {
    outcome = TurnOutcome::skip(SkipReason::timeout, e.what());
  }
  if (outcome.spoke && trim(outcome.content).empty()) {
    outcome = TurnOutcome::skip(SkipReason::empty_output);
  }

  const std::size_t before = history_.size();
  if (outcome.spoke) {
    Message msg{turn_count_, static_cast<std::int64_t>(history_.size()), person.profile().id,
                outcome.content, clock_.elapsed()};
    msg.at = std::max(msg.at, Millis{last_at_ms_});
    history_.append(msg);
    emit(EventKind::message, {{"sender", msg.sender.name},
                              {"content", msg.content},
                              {"turn", msg.turn},
                              {"message_seq", msg.seq}});
  } else {
    json payload = {{"person", person.name()},
                    {"reason", std::string(to_string(outcome.reason))},
                    {"turn", turn_count_}};
    if (!outcome.note.empty()) payload["note"] = outcome.note;
    emit(EventKind::skip, std::move(payload));
    if (outcome.suppressed_draft && config_.record_suppressed_drafts) {
      emit(EventKind::suppressed_draft, {{"person", person.name()},
                                         {"draft", *outcome.suppressed_draft},
                                         {"turn", turn_count_}});
    }
  }
  ++turn_count_;
  clock_.on_turn_granted();
  run_due_surveys(history_.size() > before);
  return outcome;
}

void SessionEngine::run_due_surveys(bool message_appended) {
  if (!config_.survey) return;
  const auto n = static_cast<std::int64_t>(persons_.size());
  for (const SurveyPhase& phase : config_.survey->phases) {
    if (phase.kind == SurveyPhase::Kind::every_messages && message_appended &&
        history_.size() % static_cast<std::size_t>(phase.every) == 0) {
      run_survey_phase("messages-" + std::to_string(history_.size()));
    }
    if (phase.kind == SurveyPhase::Kind::every_cycle && host_->is_round_robin() &&
        turn_count_ % n == 0) {
      run_survey_phase("cycle-" + std::to_string(turn_count_ / n));
    }
  }
}

std::vector<SurveyAnswer> SessionEngine::run_survey_phase(const std::string& label) {
  std::vector<SurveyAnswer> answers;
  if (!config_.survey) return answers;
  for (const auto& person : persons_) {
    for (const SurveyQuestion& question : config_.survey->questions) {
      std::string raw;
      try {
        raw = person->answer_survey(context_for(*person), question);
      } catch (const BackendError&) {
        raw.clear();
      }
      const ParsedSurveyReply parsed = parse_survey_reply(raw, question);
      SurveyAnswer answer{person->profile().id, question.id, label, raw, parsed.value,
                          parsed.clamped};
      json payload = {{"person", person->name()},
                      {"question_id", question.id},
                      {"phase", label},
                      {"raw", raw},
                      {"value", parsed.value ? json(*parsed.value) : json(nullptr)},
                      {"clamped", parsed.clamped}};
      emit(EventKind::survey_answer, std::move(payload));
      answers.push_back(answer);
      survey_answers_.push_back(std::move(answer));
    }
  }
  survey_phases_.push_back(label);
  return answers;
}

void SessionEngine::finish(const std::string& reason) {
  if (status_ != SessionStatus::running) throw InvariantViolation("finish on a session not running");
  if (config_.survey && config_.survey->has(SurveyPhase::Kind::post)) run_survey_phase("post");
  emit(EventKind::session_end, {{"end_reason", reason},
                                {"messages", static_cast<std::int64_t>(history_.size())},
                                {"turns", turn_count_}});
  end_reason_ = reason;
  status_ = SessionStatus::ended;
}

SessionResult SessionEngine::run() {
  SessionResult result;
  try {
    start();
    for (;;) {
      const EndCheck check = did_end();
      if (check.ended) {
        finish(check.reason);
        break;
      }
      iterate();
    }
    result.end_reason = end_reason_;
  } catch (const SinkFailure& e) {
    status_ = SessionStatus::ended;
    result.aborted = true;
    result.error = e.what();
    result.end_reason = "aborted";
  }
  const auto messages = history_.messages();
  result.history.assign(messages.begin(), messages.end());
  result.survey_answers = survey_answers_;
  result.survey_phases = survey_phases_;
  result.event_count = next_seq_;
  result.turn_count = turn_count_;
  result.elapsed = clock_.elapsed();
  return result;
}

SessionResult run_session(const ExperimentConfig& config,
                          std::vector<std::unique_ptr<Person>> persons,
                          std::vector<EventSink*> sinks, SessionOptions options) {
  SessionEngine engine(config, std::move(persons), std::move(sinks), std::move(options));
  return engine.run();
}

}  // namespace parlor
