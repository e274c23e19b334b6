#include "parlor/prompt.hpp"

#include <sstream>

namespace parlor {

namespace {

std::string minutes_seconds(Millis duration) {
  const std::int64_t total = std::max<std::int64_t>(duration.count(), 0) / 1000;
  return std::to_string(total / 60) + " minutes " + std::to_string(total % 60) + " seconds";
}

std::string scalar_text(const json& value) {
  return value.is_string() ? value.get<std::string>() : value.dump();
}

std::string system_text(const TurnContext& ctx) {
  const std::string& name = ctx.profile.id.name;
  const json& extra = ctx.profile.extra;
  std::ostringstream out;
  out << "Scenario: " << ctx.scenario << "\n";
  out << "You are " << name << ", one participant in a group discussion.\n";
  if (!ctx.profile.background_story.empty()) {
    out << "Background: " << ctx.profile.background_story << "\n";
  }
  if (extra.contains("opinion")) out << "Your opinion: " << scalar_text(extra["opinion"]) << "\n";
  if (extra.contains("opinion_strength")) {
    out << "Strength of your opinion: " << scalar_text(extra["opinion_strength"]) << "\n";
  }
  if (extra.value("time_aware", false)) {
    out << "The discussion started " << minutes_seconds(ctx.clock.elapsed) << " ago.\n";
  }
  if (ctx.clock.remaining) out << remaining_time_sentence(*ctx.clock.remaining) << "\n";
  out << "You are " << name << ". Reply as " << name << ".";
  return out.str();
}

std::vector<PromptTurn> history_turns(const TurnContext& ctx) {
  std::vector<PromptTurn> turns;
  turns.reserve(ctx.history.size());
  for (const LabeledLine& line : ctx.history) turns.push_back({line.sender, line.content});
  return turns;
}

}  // namespace

std::string remaining_time_sentence(Millis remaining) {
  return "You have " + minutes_seconds(remaining) + " remaining.";
}

std::string speak_now_question(std::string_view name) {
  return "Should " + std::string(name) + " speak now? Answer YES or NO.";
}

std::string post_draft_question(std::string_view name) {
  return "Given this draft reply, should " + std::string(name) + " post it? YES or NO";
}

Prompt assemble_prompt(const TurnContext& ctx) { return {system_text(ctx), history_turns(ctx)}; }

Prompt assemble_survey_prompt(const TurnContext& ctx, const SurveyQuestion& question) {
  Prompt prompt = assemble_prompt(ctx);
  std::string text = "Survey question (private, not part of the discussion): " + question.prompt;
  if (const auto* scale = std::get_if<IntegerScale>(&question.kind)) {
    text += " Answer with a single whole number from " + std::to_string(scale->min) + " to " +
            std::to_string(scale->max) + ".";
  }
  prompt.turns.push_back({"", std::move(text)});
  return prompt;
}

}  // namespace parlor
