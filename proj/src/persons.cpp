#include "parlor/persons.hpp"

#include <cctype>
#include <cmath>
#include <iostream>
#include <map>
#include <mutex>

namespace parlor {

std::string_view to_string(SkipReason reason) {
  switch (reason) {
    case SkipReason::declined: return "declined";
    case SkipReason::empty_output: return "empty_output";
    case SkipReason::pass_token: return "pass_token";
    case SkipReason::human_pass: return "human_pass";
    case SkipReason::timeout: return "timeout";
  }
  return "declined";
}

std::optional<SkipReason> skip_reason_from(std::string_view text) {
  for (SkipReason r : {SkipReason::declined, SkipReason::empty_output, SkipReason::pass_token,
                       SkipReason::human_pass, SkipReason::timeout}) {
    if (to_string(r) == text) return r;
  }
  return std::nullopt;
}

TurnOutcome TurnOutcome::speak(std::string content) {
  TurnOutcome out;
  out.spoke = true;
  out.content = std::move(content);
  return out;
}

TurnOutcome TurnOutcome::skip(SkipReason reason, std::string note) {
  TurnOutcome out;
  out.reason = reason;
  out.note = std::move(note);
  return out;
}

Person::Person(PersonProfile profile) : profile_(std::move(profile)) {}

std::string clean_generation(std::string_view raw, std::string_view own_name) {
  std::string text = trim(raw);
  const std::string label = std::string(own_name) + ":";
  if (!own_name.empty() && text.rfind(label, 0) == 0) text = trim(text.substr(label.size()));
  return text;
}

SchedulerVerdict parse_scheduler_answer(std::string_view reply) {
  std::size_t i = 0;
  while (i < reply.size() && !std::isalnum(static_cast<unsigned char>(reply[i]))) ++i;
  std::string word;
  while (i < reply.size() && std::isalpha(static_cast<unsigned char>(reply[i]))) {
    word.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(reply[i]))));
    ++i;
  }
  if (word == "YES") return SchedulerVerdict::yes;
  if (word == "NO") return SchedulerVerdict::no;
  return SchedulerVerdict::unparseable;
}

// --- model-backed persons ---------------------------------------------------

ModelPerson::ModelPerson(PersonProfile profile, std::shared_ptr<Backend> generator,
                         std::string model_id, SamplingParams sampling)
    : Person(std::move(profile)),
      generator_(std::move(generator)),
      model_id_(std::move(model_id)),
      sampling_(std::move(sampling)) {}

std::string ModelPerson::generate(const TurnContext& ctx) {
  return generate(ctx, assemble_prompt(ctx));
}

std::string ModelPerson::generate(const TurnContext& /*ctx*/, const Prompt& prompt) {
  BackendRequest request{model_id_, prompt.system_text, prompt.turns, sampling_,
                         RequestPurpose::turn};
  return clean_generation(generator_->complete(request).text, name());
}

std::string ModelPerson::answer_survey(const TurnContext& ctx, const SurveyQuestion& question) {
  const Prompt prompt = assemble_survey_prompt(ctx, question);
  BackendRequest request{model_id_, prompt.system_text, prompt.turns, sampling_,
                         RequestPurpose::survey};
  return clean_generation(generator_->complete(request).text, name());
}

TurnOutcome SynchronousPerson::generate_answer(const TurnContext& ctx) {
  std::string text = generate(ctx);
  if (text.empty()) return TurnOutcome::skip(SkipReason::empty_output);
  return TurnOutcome::speak(std::move(text));
}

FineTunedAsyncPerson::FineTunedAsyncPerson(PersonProfile profile,
                                           std::shared_ptr<Backend> generator,
                                           std::string model_id, std::string pass_token,
                                           SamplingParams sampling)
    : ModelPerson(std::move(profile), std::move(generator), std::move(model_id),
                  std::move(sampling)),
      pass_token_(std::move(pass_token)) {
  if (pass_token_.empty()) throw std::invalid_argument("pass token must be non-empty");
}

TurnOutcome FineTunedAsyncPerson::generate_answer(const TurnContext& ctx) {
  std::string text = generate(ctx);
  if (text == pass_token_) return TurnOutcome::skip(SkipReason::pass_token);
  if (text.empty()) return TurnOutcome::skip(SkipReason::empty_output);
  return TurnOutcome::speak(std::move(text));
}

InnerSchedulerPerson::InnerSchedulerPerson(PersonProfile profile, DecisionOrder order,
                                           std::shared_ptr<Backend> generator,
                                           std::string generator_model,
                                           std::shared_ptr<Backend> scheduler,
                                           std::string scheduler_model, SamplingParams sampling)
    : ModelPerson(std::move(profile), std::move(generator), std::move(generator_model),
                  std::move(sampling)),
      order_(order),
      scheduler_(std::move(scheduler)),
      scheduler_model_(std::move(scheduler_model)) {}

TurnOutcome InnerSchedulerPerson::generate_answer(const TurnContext& ctx) {
  return order_ == DecisionOrder::decide_then_generate ? decide_then_generate(ctx)
                                                       : generate_then_decide(ctx);
}

SchedulerVerdict InnerSchedulerPerson::ask_scheduler(const Prompt& prompt, std::string& raw) {
  BackendRequest request{scheduler_model_, prompt.system_text, prompt.turns, sampling(),
                         RequestPurpose::schedule};
  raw = trim(scheduler_->complete(request).text);
  const SchedulerVerdict verdict = parse_scheduler_answer(raw);
  if (verdict == SchedulerVerdict::unparseable) {
    std::clog << "[parlor] warning: " << name() << ": unparseable scheduler reply \"" << raw
              << "\", treating it as NO\n";
  }
  return verdict;
}

TurnOutcome InnerSchedulerPerson::decide_then_generate(const TurnContext& ctx) {
  const Prompt prompt = assemble_prompt(ctx);
  Prompt question = prompt;
  question.turns.push_back({"", speak_now_question(name())});
  std::string raw;
  const SchedulerVerdict verdict = ask_scheduler(question, raw);
  if (verdict == SchedulerVerdict::unparseable) {
    return TurnOutcome::skip(SkipReason::declined, "unparseable scheduler reply: " + raw);
  }
  if (verdict == SchedulerVerdict::no) return TurnOutcome::skip(SkipReason::declined);
  std::string text = generate(ctx, prompt);
  if (text.empty()) return TurnOutcome::skip(SkipReason::empty_output);
  return TurnOutcome::speak(std::move(text));
}

TurnOutcome InnerSchedulerPerson::generate_then_decide(const TurnContext& ctx) {
  const Prompt prompt = assemble_prompt(ctx);
  std::string draft = generate(ctx, prompt);
  if (draft.empty()) return TurnOutcome::skip(SkipReason::empty_output);
  Prompt question = prompt;
  question.turns.push_back({"Draft reply from " + name(), draft});
  question.turns.push_back({"", post_draft_question(name())});
  std::string raw;
  const SchedulerVerdict verdict = ask_scheduler(question, raw);
  if (verdict == SchedulerVerdict::yes) return TurnOutcome::speak(std::move(draft));
  TurnOutcome out = TurnOutcome::skip(
      SkipReason::declined,
      verdict == SchedulerVerdict::unparseable ? "unparseable scheduler reply: " + raw : "");
  out.suppressed_draft = std::move(draft);
  return out;
}

// --- humans -----------------------------------------------------------------

HumanPerson::HumanPerson(PersonProfile profile, bool asynchronous,
                         std::shared_ptr<InputChannel> channel, Millis input_timeout)
    : Person(std::move(profile)),
      asynchronous_(asynchronous),
      channel_(std::move(channel)),
      timeout_(input_timeout) {
  if (!channel_) throw std::invalid_argument("human person needs an input channel");
}

TurnOutcome HumanPerson::generate_answer(const TurnContext& ctx) {
  if (absent_) return TurnOutcome::skip(SkipReason::timeout, "absent");
  if (!asynchronous_) return compose(ctx);

  InputRequest request{profile().id, InputKind::speak_or_skip,
                       name() + ", it is your turn. Speak or pass?", timeout_, std::nullopt};
  const InputResult result = channel_->request(request);
  switch (result.status) {
    case InputResult::Status::timed_out: return TurnOutcome::skip(SkipReason::timeout);
    case InputResult::Status::closed:
      absent_ = true;
      return TurnOutcome::skip(SkipReason::timeout, "input channel closed");
    case InputResult::Status::replied: break;
  }
  if (result.reply.action == InputReply::Action::skip) {
    return TurnOutcome::skip(SkipReason::human_pass);
  }
  if (result.reply.text) {
    std::string text = trim(*result.reply.text);
    if (!text.empty()) return TurnOutcome::speak(std::move(text));
  }
  return compose(ctx);
}

TurnOutcome HumanPerson::compose(const TurnContext& /*ctx*/) {
  for (int attempt = 0; attempt < 2; ++attempt) {
    InputRequest request{profile().id, InputKind::compose,
                         attempt == 0 ? name() + ", write your message:"
                                      : "Empty message. " + name() + ", write your message:",
                         timeout_, std::nullopt};
    const InputResult result = channel_->request(request);
    if (result.status == InputResult::Status::timed_out) {
      return TurnOutcome::skip(SkipReason::timeout);
    }
    if (result.status == InputResult::Status::closed) {
      absent_ = true;
      return TurnOutcome::skip(SkipReason::timeout, "input channel closed");
    }
    if (result.reply.action == InputReply::Action::skip) {
      return TurnOutcome::skip(SkipReason::human_pass);
    }
    std::string text = trim(result.reply.text.value_or(""));
    if (!text.empty()) return TurnOutcome::speak(std::move(text));
  }
  return TurnOutcome::skip(SkipReason::human_pass, "empty submission");
}

std::string HumanPerson::answer_survey(const TurnContext& /*ctx*/,
                                       const SurveyQuestion& question) {
  if (absent_) return "";
  InputRequest request{profile().id, InputKind::survey, question.prompt, timeout_, std::nullopt};
  if (const auto* scale = std::get_if<IntegerScale>(&question.kind)) request.scale = *scale;
  const InputResult result = channel_->request(request);
  if (result.status == InputResult::Status::closed) absent_ = true;
  if (result.status != InputResult::Status::replied) return "";
  return trim(result.reply.text.value_or(""));
}

// --- scripted asynchronous agents ------------------------------------------

ScriptedAsyncPerson::ScriptedAsyncPerson(PersonProfile profile, SpeakPolicy policy,
                                         std::vector<std::string> script,
                                         std::vector<std::string> survey_script)
    : Person(std::move(profile)),
      policy_(policy),
      script_(std::move(script)),
      survey_script_(std::move(survey_script)) {}

TurnOutcome ScriptedAsyncPerson::generate_answer(const TurnContext& ctx) {
  ++own_grants_;
  bool speak = false;
  switch (policy_.kind) {
    case SpeakPolicy::Kind::always: speak = true; break;
    case SpeakPolicy::Kind::never: speak = false; break;
    case SpeakPolicy::Kind::periodic: speak = own_grants_ % policy_.speak_every == 0; break;
    case SpeakPolicy::Kind::after_silences: speak = ctx.silent_turns() >= policy_.silences; break;
  }
  if (!speak) return TurnOutcome::skip(SkipReason::declined);
  if (script_.empty()) return TurnOutcome::skip(SkipReason::empty_output);
  std::string text = clean_generation(script_[next_line_++ % script_.size()], name());
  if (text.empty()) return TurnOutcome::skip(SkipReason::empty_output);
  return TurnOutcome::speak(std::move(text));
}

std::string ScriptedAsyncPerson::answer_survey(const TurnContext& /*ctx*/,
                                               const SurveyQuestion& /*question*/) {
  if (survey_script_.empty()) return "";
  return trim(survey_script_[next_survey_++ % survey_script_.size()]);
}

// --- factory ----------------------------------------------------------------

namespace {

ScriptedBackend::Script to_script(const json& entries) {
  ScriptedBackend::Script script;
  for (const auto& entry : entries) {
    if (entry.is_null()) {
      script.emplace_back(std::nullopt);
    } else {
      script.emplace_back(entry.get<std::string>());
    }
  }
  return script;
}

std::shared_ptr<Backend> shared_endpoint(const std::string& base_url) {
  static std::mutex mutex;
  static std::map<std::string, std::shared_ptr<Backend>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[base_url];
  if (!slot) slot = std::make_shared<EndpointBackend>(EndpointOptions{base_url, {}, {}, {}});
  return slot;
}

SamplingParams sampling_of(const PersonSpec& spec) {
  SamplingParams sampling;
  sampling.temperature = spec.params.value("temperature", sampling.temperature);
  sampling.max_tokens = spec.params.value("max_tokens", sampling.max_tokens);
  return sampling;
}

// One backend per person; scripted backends keep per-purpose streams, so the
// generator and scheduler roles can share it.
std::shared_ptr<Backend> base_backend(const PersonSpec& spec, const PersonEnvironment& env) {
  const json& params = spec.params;
  if (spec.class_name == "scripted") {
    return std::make_shared<ScriptedBackend>(std::map<RequestPurpose, ScriptedBackend::Script>{
        {RequestPurpose::turn, to_script(params["script"])},
        {RequestPurpose::survey, to_script(params["survey_script"])}});
  }
  std::string base_url;
  if (params.contains("backend")) {
    const json& backend = params["backend"];
    if (backend["class"] == "scripted") {
      std::map<RequestPurpose, ScriptedBackend::Script> scripts;
      if (backend.contains("turn")) scripts[RequestPurpose::turn] = to_script(backend["turn"]);
      if (backend.contains("schedule")) {
        scripts[RequestPurpose::schedule] = to_script(backend["schedule"]);
      }
      if (backend.contains("survey")) scripts[RequestPurpose::survey] = to_script(backend["survey"]);
      return std::make_shared<ScriptedBackend>(std::move(scripts));
    }
    base_url = backend.value("base_url", "");
  }
  return env.endpoint ? env.endpoint(base_url) : shared_endpoint(base_url);
}

std::shared_ptr<Backend> decorated(std::shared_ptr<Backend> backend, const PersonSpec& spec,
                                   const PersonEnvironment& env, RequestPurpose role) {
  return env.decorate ? env.decorate(std::move(backend), spec, role) : backend;
}

SpeakPolicy policy_of(const json& policy) {
  SpeakPolicy out;
  const std::string kind = policy["kind"].get<std::string>();
  if (kind == "never") out.kind = SpeakPolicy::Kind::never;
  if (kind == "periodic") {
    out.kind = SpeakPolicy::Kind::periodic;
    out.speak_every = policy["speak_every"].get<std::int64_t>();
  }
  if (kind == "after_silences") {
    out.kind = SpeakPolicy::Kind::after_silences;
    out.silences = policy["silences"].get<std::int64_t>();
  }
  return out;
}

std::vector<std::string> string_lines(const json& entries) {
  std::vector<std::string> lines;
  for (const auto& entry : entries) lines.push_back(entry.is_string() ? entry.get<std::string>() : "");
  return lines;
}

std::unique_ptr<Person> build_person(const PersonSpec& spec, const PersonEnvironment& env) {
  PersonProfile profile = spec.profile();
  const std::string& cls = spec.class_name;

  if (is_human_class(cls)) {
    if (!env.input) {
      throw ConfigError(ConfigErrorKind::constraint, "persons",
                        "human person '" + spec.name + "' needs an input channel");
    }
    const Millis timeout{static_cast<std::int64_t>(
        std::llround(spec.params.value("input_timeout_seconds", 120.0) * 1000.0))};
    return std::make_unique<HumanPerson>(std::move(profile), cls == "async_human", env.input,
                                         timeout);
  }
  if (cls == "scripted_async") {
    return std::make_unique<ScriptedAsyncPerson>(std::move(profile), policy_of(spec.params["policy"]),
                                                 string_lines(spec.params["script"]),
                                                 string_lines(spec.params["survey_script"]));
  }

  std::shared_ptr<Backend> backend = base_backend(spec, env);
  const SamplingParams sampling = sampling_of(spec);
  auto generator = decorated(backend, spec, env, RequestPurpose::turn);

  if (cls == "scripted" || cls == "person_endpoint") {
    return std::make_unique<SynchronousPerson>(std::move(profile), generator,
                                               model_id_for(spec), sampling);
  }
  if (cls == "fine_tuned_async") {
    return std::make_unique<FineTunedAsyncPerson>(std::move(profile), generator,
                                                  model_id_for(spec),
                                                  spec.params["pass_token"].get<std::string>(),
                                                  sampling);
  }
  DecisionOrder order = DecisionOrder::decide_then_generate;
  if (cls == "first_generates_then_decides" ||
      spec.params.value("decision_order", "") == "generate_then_decide") {
    order = DecisionOrder::generate_then_decide;
  }
  if (cls == "first_decides_then_generates" || cls == "first_generates_then_decides" ||
      cls == "async_group_discussant") {
    auto scheduler = decorated(backend, spec, env, RequestPurpose::schedule);
    return std::make_unique<InnerSchedulerPerson>(std::move(profile), order, generator,
                                                  model_id_for(spec), scheduler,
                                                  model_id_for(spec, "scheduling"), sampling);
  }
  throw ConfigError(ConfigErrorKind::unknown_class, "persons", "unknown person class '" + cls + "'");
}

}  // namespace

std::vector<std::unique_ptr<Person>> build_persons(const ExperimentConfig& config,
                                                   const PersonEnvironment& env) {
  std::vector<std::unique_ptr<Person>> persons;
  persons.reserve(config.persons.size());
  for (const PersonSpec& spec : config.persons) persons.push_back(build_person(spec, env));
  return persons;
}

}  // namespace parlor
