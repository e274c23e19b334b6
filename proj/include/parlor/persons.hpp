#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "parlor/backend.hpp"
#include "parlor/config.hpp"
#include "parlor/input.hpp"
#include "parlor/prompt.hpp"

namespace parlor {

enum class SkipReason { declined, empty_output, pass_token, human_pass, timeout };

std::string_view to_string(SkipReason reason);
std::optional<SkipReason> skip_reason_from(std::string_view text);

struct TurnOutcome {
  bool spoke = false;
  std::string content;                 // spoke only, trimmed and non-empty
  SkipReason reason = SkipReason::declined;  // skipped only
  std::optional<std::string> suppressed_draft;
  std::string note;                    // diagnostics that end up in the event payload

  static TurnOutcome speak(std::string content);
  static TurnOutcome skip(SkipReason reason, std::string note = {});
};

class Person {
 public:
  explicit Person(PersonProfile profile);
  virtual ~Person() = default;

  Person(const Person&) = delete;
  Person& operator=(const Person&) = delete;

  const PersonProfile& profile() const { return profile_; }
  const std::string& name() const { return profile_.id.name; }

  // Throws BackendError when the backend stays unreachable; the engine records a timeout skip.
  virtual TurnOutcome generate_answer(const TurnContext& ctx) = 0;
  // Raw reply text. The survey exchange never reaches the chat history.
  virtual std::string answer_survey(const TurnContext& ctx, const SurveyQuestion& question) = 0;

  virtual bool is_human() const { return false; }

 private:
  PersonProfile profile_;
};

// Trims, removes exactly one leading "OwnName:" echo, trims again.
std::string clean_generation(std::string_view raw, std::string_view own_name);

enum class SchedulerVerdict { yes, no, unparseable };
SchedulerVerdict parse_scheduler_answer(std::string_view reply);

// Person backed by a chat model (endpoint or scripted).
class ModelPerson : public Person {
 public:
  ModelPerson(PersonProfile profile, std::shared_ptr<Backend> generator, std::string model_id,
              SamplingParams sampling = {});

  std::string answer_survey(const TurnContext& ctx, const SurveyQuestion& question) override;

 protected:
  // One generator call; returns the cleaned text (possibly empty).
  std::string generate(const TurnContext& ctx);
  std::string generate(const TurnContext& ctx, const Prompt& prompt);

  Backend& generator() { return *generator_; }
  const SamplingParams& sampling() const { return sampling_; }

 private:
  std::shared_ptr<Backend> generator_;
  std::string model_id_;
  SamplingParams sampling_;
};

// Always takes the turn; whitespace-only output becomes skipped(empty_output).
class SynchronousPerson final : public ModelPerson {
 public:
  using ModelPerson::ModelPerson;
  TurnOutcome generate_answer(const TurnContext& ctx) override;
};

// One model decides and speaks; emitting exactly the pass token means skip.
class FineTunedAsyncPerson final : public ModelPerson {
 public:
  FineTunedAsyncPerson(PersonProfile profile, std::shared_ptr<Backend> generator,
                       std::string model_id, std::string pass_token = "<pass>",
                       SamplingParams sampling = {});

  TurnOutcome generate_answer(const TurnContext& ctx) override;
  const std::string& pass_token() const { return pass_token_; }

 private:
  std::string pass_token_;
};

enum class DecisionOrder { decide_then_generate, generate_then_decide };

// Separate scheduler and generator models.
class InnerSchedulerPerson final : public ModelPerson {
 public:
  InnerSchedulerPerson(PersonProfile profile, DecisionOrder order,
                       std::shared_ptr<Backend> generator, std::string generator_model,
                       std::shared_ptr<Backend> scheduler, std::string scheduler_model,
                       SamplingParams sampling = {});

  TurnOutcome generate_answer(const TurnContext& ctx) override;

  TurnOutcome decide_then_generate(const TurnContext& ctx);
  TurnOutcome generate_then_decide(const TurnContext& ctx);

  DecisionOrder order() const { return order_; }

 private:
  SchedulerVerdict ask_scheduler(const Prompt& prompt, std::string& raw);

  DecisionOrder order_;
  std::shared_ptr<Backend> scheduler_;
  std::string scheduler_model_;
};

// Human participant behind an input channel (console or gateway).
class HumanPerson final : public Person {
 public:
  HumanPerson(PersonProfile profile, bool asynchronous, std::shared_ptr<InputChannel> channel,
              Millis input_timeout = Millis{120000});

  TurnOutcome generate_answer(const TurnContext& ctx) override;
  std::string answer_survey(const TurnContext& ctx, const SurveyQuestion& question) override;
  bool is_human() const override { return true; }

  bool asynchronous() const { return asynchronous_; }
  bool absent() const { return absent_; }

 private:
  TurnOutcome compose(const TurnContext& ctx);

  bool asynchronous_;
  std::shared_ptr<InputChannel> channel_;
  Millis timeout_;
  bool absent_ = false;
};

// Deterministic stand-in for an asynchronous agent: a speak/skip rule plus a
// cycling script of lines. Used for offline reconstructions and tests.
struct SpeakPolicy {
  enum class Kind { always, never, periodic, after_silences };

  Kind kind = Kind::always;
  // periodic: speaks on every n-th own grant (n, 2n, ...).
  std::int64_t speak_every = 1;
  // after_silences: silent until the session has seen this many silent turns.
  std::int64_t silences = 0;
};

class ScriptedAsyncPerson final : public Person {
 public:
  ScriptedAsyncPerson(PersonProfile profile, SpeakPolicy policy, std::vector<std::string> script,
                      std::vector<std::string> survey_script = {});

  TurnOutcome generate_answer(const TurnContext& ctx) override;
  std::string answer_survey(const TurnContext& ctx, const SurveyQuestion& question) override;

 private:
  SpeakPolicy policy_;
  std::vector<std::string> script_;
  std::vector<std::string> survey_script_;
  std::int64_t own_grants_ = 0;
  std::size_t next_line_ = 0;
  std::size_t next_survey_ = 0;
};

// How build_persons reaches the outside world.
struct PersonEnvironment {
  // Returns the endpoint backend for a base URL (empty: default URL). Defaults
  // to one shared EndpointBackend per URL.
  std::function<std::shared_ptr<Backend>(const std::string& base_url)> endpoint;
  // Channel for human persons; without one, humans cannot be built.
  std::shared_ptr<InputChannel> input;
  // Optional wrapper applied to every model backend (e.g. prompt capture).
  std::function<std::shared_ptr<Backend>(std::shared_ptr<Backend>, const PersonSpec&,
                                         RequestPurpose role)>
      decorate;
};

// Instantiates fresh persons (no shared decision state) in config order.
std::vector<std::unique_ptr<Person>> build_persons(const ExperimentConfig& config,
                                                   const PersonEnvironment& env = {});

}  // namespace parlor
