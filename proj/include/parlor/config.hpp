#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "parlor/clock.hpp"
#include "parlor/model.hpp"

namespace parlor {

enum class ConfigErrorKind {
  syntax,
  unknown_key,
  unknown_class,
  duplicate_name,
  missing_field,
  wrong_type,
  out_of_range,
  constraint,
};

std::string_view to_string(ConfigErrorKind kind);

struct TextPosition {
  std::size_t line = 0;    // 1-based
  std::size_t column = 0;  // 1-based
  std::size_t byte_offset = 0;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(ConfigErrorKind kind, std::string path, const std::string& message,
              std::optional<TextPosition> position = std::nullopt);

  ConfigErrorKind kind() const { return kind_; }
  const std::string& path() const { return path_; }
  const std::optional<TextPosition>& position() const { return position_; }

 private:
  ConfigErrorKind kind_;
  std::string path_;
  std::optional<TextPosition> position_;
};

// A resolved class tag: canonical class name plus params with defaults filled in.
struct ClassSpec {
  std::string class_name;
  json params = json::object();

  bool operator==(const ClassSpec&) const = default;
};

struct PersonSpec {
  std::string class_name;
  std::string name;
  std::string background_story;
  json params = json::object();

  PersonProfile profile() const;
  bool operator==(const PersonSpec&) const = default;
};

struct SurveyPhase {
  enum class Kind { pre, post, every_cycle, every_messages };
  Kind kind = Kind::post;
  std::int64_t every = 0;  // every_messages only

  std::string token() const;
  bool operator==(const SurveyPhase&) const = default;
};

struct SurveySpec {
  std::vector<SurveyQuestion> questions;
  std::vector<SurveyPhase> phases;

  bool has(SurveyPhase::Kind kind) const;
  bool operator==(const SurveySpec&) const = default;
};

struct ClockSpec {
  ClockMode mode = ClockMode::virtual_time;
  Millis tick{1000};
  std::optional<Millis> limit;

  bool operator==(const ClockSpec&) const = default;
};

struct ExperimentConfig {
  std::string scenario;
  bool record_suppressed_drafts = true;
  ClassSpec host;
  std::vector<PersonSpec> persons;
  ClassSpec end;
  std::optional<SurveySpec> survey;
  std::optional<ClockSpec> clock;
  std::optional<std::uint64_t> seed;

  // Canonical document: snake_case class names, "end_type", defaults spelled out.
  json to_json() const;

  std::uint64_t effective_seed() const { return seed.value_or(0); }
  ClockSpec effective_clock() const;
  // Clock limit if configured, else the limit of a time_limit end condition.
  std::optional<Millis> effective_time_limit() const;

  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(std::string_view document);
ExperimentConfig parse_config(const json& document);
ExperimentConfig load_config_file(const std::filesystem::path& path);

struct Violation {
  std::string path;
  std::string message;

  bool operator==(const Violation&) const = default;
};

struct ValidationContext {
  bool batch = false;
  bool console_input = false;
  bool gateway_input = false;
};

std::vector<Violation> validate_cross_refs(const ExperimentConfig& config,
                                           const ValidationContext& context = {});

bool is_human_class(std::string_view canonical_class);
// The model identifier a person addresses, from whichever model key the config used.
std::string model_id_for(const PersonSpec& person, std::string_view role = "generation");

}  // namespace parlor
