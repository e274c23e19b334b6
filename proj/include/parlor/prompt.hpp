#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "parlor/backend.hpp"
#include "parlor/clock.hpp"
#include "parlor/model.hpp"

namespace parlor {

// Logged in every session_start so transcripts are attributable to a template.
inline constexpr std::string_view kPromptTemplateVersion = "parlor-prompt/1";

// Immutable snapshot handed to a person when it is granted a turn.
struct TurnContext {
  std::string scenario;
  std::vector<LabeledLine> history;
  PersonProfile profile;
  ClockSnapshot clock;
  std::int64_t turn = 0;

  // Granted turns so far that produced no message.
  std::int64_t silent_turns() const { return turn - static_cast<std::int64_t>(history.size()); }
};

struct Prompt {
  std::string system_text;
  std::vector<PromptTurn> turns;

  bool operator==(const Prompt&) const = default;
};

// Pure function of the context: equal snapshots give byte-identical prompts.
Prompt assemble_prompt(const TurnContext& ctx);

// "You have 6 minutes 0 seconds remaining." Negative input renders as zero.
std::string remaining_time_sentence(Millis remaining);

std::string speak_now_question(std::string_view name);
std::string post_draft_question(std::string_view name);

Prompt assemble_survey_prompt(const TurnContext& ctx, const SurveyQuestion& question);

}  // namespace parlor
