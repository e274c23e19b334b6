#include "parlor/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "parlor/registry.hpp"

namespace parlor {

namespace {

const std::set<std::string> kTopLevelKeys = {"experiment", "host",   "persons", "endType",
                                             "end_type",   "survey", "clock",   "seed"};

TextPosition position_of(std::string_view text, std::size_t byte_offset) {
  TextPosition pos{1, 1, byte_offset};
  const std::size_t limit = std::min(byte_offset, text.size());
  for (std::size_t i = 0; i < limit; ++i) {
    if (text[i] == '\n') {
      ++pos.line;
      pos.column = 1;
    } else {
      ++pos.column;
    }
  }
  return pos;
}

std::string_view type_name(FieldType type) {
  switch (type) {
    case FieldType::string: return "a string";
    case FieldType::integer: return "an integer";
    case FieldType::number: return "a number";
    case FieldType::boolean: return "a boolean";
    case FieldType::object: return "an object";
    case FieldType::array: return "an array";
    case FieldType::script: return "an array of strings";
    case FieldType::scalar: return "a string or number";
  }
  return "a value";
}

bool has_type(const json& value, FieldType type) {
  switch (type) {
    case FieldType::string: return value.is_string();
    case FieldType::integer: return value.is_number_integer();
    case FieldType::number: return value.is_number();
    case FieldType::boolean: return value.is_boolean();
    case FieldType::object: return value.is_object();
    case FieldType::array: return value.is_array();
    case FieldType::script:
      if (!value.is_array()) return false;
      for (const auto& entry : value) {
        if (!entry.is_string() && !entry.is_null()) return false;
      }
      return true;
    case FieldType::scalar: return value.is_string() || value.is_number();
  }
  return false;
}

std::string_view category_name(ClassCategory category) {
  switch (category) {
    case ClassCategory::host: return "host";
    case ClassCategory::person: return "person";
    case ClassCategory::end: return "end";
  }
  return "";
}

const json& require_object(const json& value, const std::string& path) {
  if (!value.is_object()) {
    throw ConfigError(ConfigErrorKind::wrong_type, path, "'" + path + "' must be an object");
  }
  return value;
}

// Resolves a "class"-tagged object against the registry and checks its params.
ClassSpec parse_class_object(const json& object, ClassCategory category, const std::string& path) {
  require_object(object, path);
  if (!object.contains("class")) {
    throw ConfigError(ConfigErrorKind::missing_field, path + ".class",
                      "missing required field 'class'");
  }
  if (!object["class"].is_string()) {
    throw ConfigError(ConfigErrorKind::wrong_type, path + ".class", "'class' must be a string");
  }
  const std::string tag = object["class"].get<std::string>();
  const ClassDescriptor* descriptor = ClassRegistry::builtin().find(category, tag);
  if (descriptor == nullptr) {
    throw ConfigError(ConfigErrorKind::unknown_class, path + ".class",
                      "unknown " + std::string(category_name(category)) + " class '" + tag + "'");
  }

  ClassSpec spec{descriptor->canonical, json::object()};
  for (const auto& [key, value] : object.items()) {
    if (key == "class") continue;
    auto field = std::find_if(descriptor->fields.begin(), descriptor->fields.end(),
                              [&](const FieldSpec& f) { return f.name == key; });
    if (field == descriptor->fields.end()) {
      throw ConfigError(ConfigErrorKind::unknown_key, path + "." + key,
                        "unknown key '" + key + "' for class '" + descriptor->canonical + "'");
    }
    if (!has_type(value, field->type)) {
      throw ConfigError(ConfigErrorKind::wrong_type, path + "." + key,
                        "'" + key + "' must be " + std::string(type_name(field->type)));
    }
    spec.params[key] = value;
  }
  for (const FieldSpec& field : descriptor->fields) {
    if (spec.params.contains(field.name)) continue;
    if (field.required) {
      throw ConfigError(ConfigErrorKind::missing_field, path + "." + field.name,
                        "missing required field '" + field.name + "'");
    }
    if (!field.default_value.is_null()) spec.params[field.name] = field.default_value;
  }
  if (descriptor->check) descriptor->check(spec.params, path);
  return spec;
}

ClassSpec parse_end(const json& object, const std::string& path) {
  ClassSpec spec = parse_class_object(object, ClassCategory::end, path);
  if (spec.class_name == "end_any_of") {
    json& members = spec.params["conditions"];
    if (members.empty()) {
      throw ConfigError(ConfigErrorKind::constraint, path + ".conditions",
                        "any_of needs at least one condition");
    }
    json canonical = json::array();
    for (std::size_t i = 0; i < members.size(); ++i) {
      ClassSpec child = parse_end(members[i], path + ".conditions[" + std::to_string(i) + "]");
      json entry = child.params;
      entry["class"] = child.class_name;
      canonical.push_back(std::move(entry));
    }
    members = std::move(canonical);
  }
  return spec;
}

Millis seconds_to_ms(const json& value) {
  return Millis{static_cast<std::int64_t>(std::llround(value.get<double>() * 1000.0))};
}

json ms_to_seconds(Millis ms) {
  if (ms.count() % 1000 == 0) return ms.count() / 1000;
  return static_cast<double>(ms.count()) / 1000.0;
}

void reject_unknown_keys(const json& object, const std::set<std::string>& allowed,
                         const std::string& path) {
  for (const auto& [key, value] : object.items()) {
    if (!allowed.count(key)) {
      throw ConfigError(ConfigErrorKind::unknown_key, path.empty() ? key : path + "." + key,
                        "unknown key '" + key + "'" + (path.empty() ? "" : " in '" + path + "'"));
    }
  }
}

const json& require_key(const json& object, const std::string& key, const std::string& path) {
  if (!object.contains(key)) {
    throw ConfigError(ConfigErrorKind::missing_field, path.empty() ? key : path + "." + key,
                      "missing required field '" + key + "'");
  }
  return object.at(key);
}

std::string require_string(const json& object, const std::string& key, const std::string& path) {
  const json& value = require_key(object, key, path);
  if (!value.is_string()) {
    throw ConfigError(ConfigErrorKind::wrong_type, path + "." + key,
                      "'" + key + "' must be a string");
  }
  return value.get<std::string>();
}

SurveyQuestion parse_question(const json& object, const std::string& path) {
  require_object(object, path);
  reject_unknown_keys(object, {"id", "prompt", "kind", "min", "max"}, path);
  SurveyQuestion q;
  q.id = require_string(object, "id", path);
  if (q.id.empty()) {
    throw ConfigError(ConfigErrorKind::constraint, path + ".id", "question id must be non-empty");
  }
  q.prompt = require_string(object, "prompt", path);
  const std::string kind = object.contains("kind") ? require_string(object, "kind", path)
                                                   : std::string("free_text");
  if (kind == "free_text") {
    if (object.contains("min") || object.contains("max")) {
      throw ConfigError(ConfigErrorKind::unknown_key, path + (object.contains("min") ? ".min" : ".max"),
                        "free_text questions take no bounds");
    }
    q.kind = FreeText{};
  } else if (kind == "integer_scale") {
    IntegerScale scale;
    for (const char* key : {"min", "max"}) {
      const json& bound = require_key(object, key, path);
      if (!bound.is_number_integer()) {
        throw ConfigError(ConfigErrorKind::wrong_type, path + "." + key,
                          std::string("'") + key + "' must be an integer");
      }
    }
    scale.min = object["min"].get<std::int64_t>();
    scale.max = object["max"].get<std::int64_t>();
    if (scale.min >= scale.max) {
      throw ConfigError(ConfigErrorKind::out_of_range, path + ".max",
                        "scale needs min < max");
    }
    q.kind = scale;
  } else {
    throw ConfigError(ConfigErrorKind::out_of_range, path + ".kind",
                      "kind must be \"free_text\" or \"integer_scale\"");
  }
  return q;
}

SurveyPhase parse_phase(const json& token, const std::string& path) {
  if (!token.is_string()) {
    throw ConfigError(ConfigErrorKind::wrong_type, path, "phase tokens are strings");
  }
  const std::string text = token.get<std::string>();
  if (text == "pre") return {SurveyPhase::Kind::pre, 0};
  if (text == "post") return {SurveyPhase::Kind::post, 0};
  if (text == "every_cycle") return {SurveyPhase::Kind::every_cycle, 0};
  constexpr std::string_view prefix = "every_messages:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string digits = text.substr(prefix.size());
    const bool numeric = !digits.empty() && digits.size() < 10 &&
                         digits.find_first_not_of("0123456789") == std::string::npos;
    if (!numeric || std::stoll(digits) < 1) {
      throw ConfigError(ConfigErrorKind::out_of_range, path,
                        "every_messages needs a positive integer, got '" + text + "'");
    }
    return {SurveyPhase::Kind::every_messages, std::stoll(digits)};
  }
  throw ConfigError(ConfigErrorKind::out_of_range, path,
                    "unknown survey phase '" + text +
                        "' (expected pre, post, every_cycle or every_messages:k)");
}

SurveySpec parse_survey(const json& object) {
  const std::string path = "survey";
  require_object(object, path);
  reject_unknown_keys(object, {"questions", "phases"}, path);
  SurveySpec spec;
  const json& questions = require_key(object, "questions", path);
  if (!questions.is_array()) {
    throw ConfigError(ConfigErrorKind::wrong_type, "survey.questions", "expected an array");
  }
  if (questions.empty()) {
    throw ConfigError(ConfigErrorKind::constraint, "survey.questions",
                      "at least one survey question is required");
  }
  std::set<std::string> ids;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    const std::string qpath = "survey.questions[" + std::to_string(i) + "]";
    SurveyQuestion q = parse_question(questions[i], qpath);
    if (!ids.insert(q.id).second) {
      throw ConfigError(ConfigErrorKind::duplicate_name, qpath + ".id",
                        "duplicate question id '" + q.id + "'");
    }
    spec.questions.push_back(std::move(q));
  }
  if (object.contains("phases")) {
    const json& phases = object["phases"];
    if (!phases.is_array()) {
      throw ConfigError(ConfigErrorKind::wrong_type, "survey.phases", "expected an array");
    }
    for (std::size_t i = 0; i < phases.size(); ++i) {
      const std::string ppath = "survey.phases[" + std::to_string(i) + "]";
      SurveyPhase phase = parse_phase(phases[i], ppath);
      if (std::find(spec.phases.begin(), spec.phases.end(), phase) != spec.phases.end()) {
        throw ConfigError(ConfigErrorKind::constraint, ppath,
                          "duplicate survey phase '" + phase.token() + "'");
      }
      spec.phases.push_back(phase);
    }
  } else {
    spec.phases.push_back({SurveyPhase::Kind::post, 0});
  }
  return spec;
}

ClockSpec parse_clock(const json& object) {
  const std::string path = "clock";
  require_object(object, path);
  reject_unknown_keys(object, {"mode", "tick_seconds", "limit_seconds"}, path);
  ClockSpec spec;
  if (object.contains("mode")) {
    const std::string mode = require_string(object, "mode", path);
    if (mode == "virtual") {
      spec.mode = ClockMode::virtual_time;
    } else if (mode == "wall") {
      spec.mode = ClockMode::wall;
    } else {
      throw ConfigError(ConfigErrorKind::out_of_range, "clock.mode",
                        "mode must be \"virtual\" or \"wall\"");
    }
  }
  for (const char* key : {"tick_seconds", "limit_seconds"}) {
    if (!object.contains(key)) continue;
    const json& value = object[key];
    if (!value.is_number()) {
      throw ConfigError(ConfigErrorKind::wrong_type, std::string("clock.") + key,
                        std::string("'") + key + "' must be a number");
    }
    if (value.get<double>() <= 0 || seconds_to_ms(value) <= Millis{0}) {
      throw ConfigError(ConfigErrorKind::out_of_range, std::string("clock.") + key,
                        std::string("'") + key + "' must be > 0");
    }
  }
  if (object.contains("tick_seconds")) {
    if (spec.mode == ClockMode::wall) {
      throw ConfigError(ConfigErrorKind::constraint, "clock.tick_seconds",
                        "tick_seconds applies to virtual clocks only");
    }
    spec.tick = seconds_to_ms(object["tick_seconds"]);
  }
  if (spec.mode == ClockMode::wall) spec.tick = Millis{0};
  if (object.contains("limit_seconds")) spec.limit = seconds_to_ms(object["limit_seconds"]);
  return spec;
}

}  // namespace

std::string_view to_string(ConfigErrorKind kind) {
  switch (kind) {
    case ConfigErrorKind::syntax: return "syntax";
    case ConfigErrorKind::unknown_key: return "unknown_key";
    case ConfigErrorKind::unknown_class: return "unknown_class";
    case ConfigErrorKind::duplicate_name: return "duplicate_name";
    case ConfigErrorKind::missing_field: return "missing_field";
    case ConfigErrorKind::wrong_type: return "wrong_type";
    case ConfigErrorKind::out_of_range: return "out_of_range";
    case ConfigErrorKind::constraint: return "constraint";
  }
  return "unknown";
}

ConfigError::ConfigError(ConfigErrorKind kind, std::string path, const std::string& message,
                         std::optional<TextPosition> position)
    : std::runtime_error(message), kind_(kind), path_(std::move(path)), position_(position) {}

PersonProfile PersonSpec::profile() const {
  PersonProfile profile;
  profile.id = PersonId{name};
  profile.background_story = background_story;
  profile.role_class = class_name;
  for (const auto& [key, value] : params.items()) {
    if (key == "script" || key == "survey_script" || key == "backend" || key == "policy") continue;
    profile.extra[key] = value;
  }
  return profile;
}

std::string SurveyPhase::token() const {
  switch (kind) {
    case Kind::pre: return "pre";
    case Kind::post: return "post";
    case Kind::every_cycle: return "every_cycle";
    case Kind::every_messages: return "every_messages:" + std::to_string(every);
  }
  return "";
}

bool SurveySpec::has(SurveyPhase::Kind kind) const {
  return std::any_of(phases.begin(), phases.end(),
                     [&](const SurveyPhase& p) { return p.kind == kind; });
}

ClockSpec ExperimentConfig::effective_clock() const {
  ClockSpec spec = clock.value_or(ClockSpec{});
  if (!spec.limit) spec.limit = effective_time_limit();
  return spec;
}

std::optional<Millis> ExperimentConfig::effective_time_limit() const {
  if (clock && clock->limit) return clock->limit;
  std::optional<Millis> found;
  auto visit = [&](const auto& self, const json& params, const std::string& cls) -> void {
    if (cls == "end_time_limit") {
      const Millis limit = seconds_to_ms(params["limit_seconds"]);
      if (!found || limit < *found) found = limit;
    } else if (cls == "end_any_of") {
      for (const auto& member : params["conditions"]) {
        self(self, member, member["class"].get<std::string>());
      }
    }
  };
  visit(visit, end.params, end.class_name);
  return found;
}

json ExperimentConfig::to_json() const {
  json doc = json::object();
  doc["experiment"] = {{"scenario", scenario},
                       {"record_suppressed_drafts", record_suppressed_drafts}};
  json host_json = host.params;
  host_json["class"] = host.class_name;
  doc["host"] = std::move(host_json);
  json persons_json = json::array();
  for (const PersonSpec& p : persons) {
    json entry = p.params;
    entry["class"] = p.class_name;
    entry["name"] = p.name;
    entry["background_story"] = p.background_story;
    persons_json.push_back(std::move(entry));
  }
  doc["persons"] = std::move(persons_json);
  json end_json = end.params;
  end_json["class"] = end.class_name;
  doc["end_type"] = std::move(end_json);
  if (survey) {
    json questions = json::array();
    for (const SurveyQuestion& q : survey->questions) {
      json entry = {{"id", q.id}, {"prompt", q.prompt}};
      if (const auto* scale = std::get_if<IntegerScale>(&q.kind)) {
        entry["kind"] = "integer_scale";
        entry["min"] = scale->min;
        entry["max"] = scale->max;
      } else {
        entry["kind"] = "free_text";
      }
      questions.push_back(std::move(entry));
    }
    json phases = json::array();
    for (const SurveyPhase& phase : survey->phases) phases.push_back(phase.token());
    doc["survey"] = {{"questions", std::move(questions)}, {"phases", std::move(phases)}};
  }
  if (clock) {
    json c = {{"mode", clock->mode == ClockMode::wall ? "wall" : "virtual"}};
    if (clock->mode == ClockMode::virtual_time) c["tick_seconds"] = ms_to_seconds(clock->tick);
    if (clock->limit) c["limit_seconds"] = ms_to_seconds(*clock->limit);
    doc["clock"] = std::move(c);
  }
  if (seed) doc["seed"] = *seed;
  return doc;
}

ExperimentConfig parse_config(const json& doc) {
  require_object(doc, "");
  reject_unknown_keys(doc, kTopLevelKeys, "");

  ExperimentConfig config;

  const json& experiment = require_object(require_key(doc, "experiment", ""), "experiment");
  reject_unknown_keys(experiment, {"scenario", "record_suppressed_drafts"}, "experiment");
  config.scenario = require_string(experiment, "scenario", "experiment");
  if (experiment.contains("record_suppressed_drafts")) {
    if (!experiment["record_suppressed_drafts"].is_boolean()) {
      throw ConfigError(ConfigErrorKind::wrong_type, "experiment.record_suppressed_drafts",
                        "'record_suppressed_drafts' must be a boolean");
    }
    config.record_suppressed_drafts = experiment["record_suppressed_drafts"].get<bool>();
  }

  config.host = parse_class_object(require_key(doc, "host", ""), ClassCategory::host, "host");

  const json& persons = require_key(doc, "persons", "");
  if (!persons.is_array()) {
    throw ConfigError(ConfigErrorKind::wrong_type, "persons", "'persons' must be an array");
  }
  if (persons.empty()) {
    throw ConfigError(ConfigErrorKind::constraint, "persons",
                      "'persons' must list at least one person");
  }
  std::set<std::string> names;
  for (std::size_t i = 0; i < persons.size(); ++i) {
    const std::string path = "persons[" + std::to_string(i) + "]";
    ClassSpec spec = parse_class_object(persons[i], ClassCategory::person, path);
    PersonSpec person;
    person.class_name = spec.class_name;
    person.name = spec.params["name"].get<std::string>();
    person.background_story = spec.params["background_story"].get<std::string>();
    spec.params.erase("name");
    spec.params.erase("background_story");
    person.params = std::move(spec.params);
    if (person.name.empty()) {
      throw ConfigError(ConfigErrorKind::constraint, path + ".name", "person name is empty");
    }
    if (!names.insert(person.name).second) {
      throw ConfigError(ConfigErrorKind::duplicate_name, path + ".name",
                        "duplicate person name '" + person.name + "'");
    }
    config.persons.push_back(std::move(person));
  }

  const bool fig_key = doc.contains("endType");
  const bool canonical_key = doc.contains("end_type");
  if (fig_key && canonical_key) {
    throw ConfigError(ConfigErrorKind::constraint, "end_type",
                      "give either 'endType' or 'end_type', not both");
  }
  if (!fig_key && !canonical_key) {
    throw ConfigError(ConfigErrorKind::missing_field, "endType",
                      "missing required field 'endType'");
  }
  config.end = fig_key ? parse_end(doc["endType"], "endType")
                       : parse_end(doc["end_type"], "end_type");

  if (doc.contains("survey")) config.survey = parse_survey(doc["survey"]);
  if (doc.contains("clock")) config.clock = parse_clock(doc["clock"]);
  if (doc.contains("seed")) {
    const json& seed = doc["seed"];
    if (!seed.is_number_integer()) {
      throw ConfigError(ConfigErrorKind::wrong_type, "seed", "'seed' must be an integer");
    }
    if (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0) {
      throw ConfigError(ConfigErrorKind::out_of_range, "seed", "'seed' must be non-negative");
    }
    config.seed = seed.get<std::uint64_t>();
  }
  return config;
}

ExperimentConfig parse_config(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    const TextPosition pos = position_of(document, offset);
    throw ConfigError(ConfigErrorKind::syntax, "",
                      "syntax error at line " + std::to_string(pos.line) + ", column " +
                          std::to_string(pos.column) + ": " + e.what(),
                      pos);
  }
  return parse_config(doc);
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError(ConfigErrorKind::syntax, "", "cannot read config file '" + path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(std::string_view(buffer.str()));
}

bool is_human_class(std::string_view canonical_class) {
  return canonical_class == "human" || canonical_class == "async_human";
}

std::string model_id_for(const PersonSpec& person, std::string_view role) {
  const json& p = person.params;
  if (role == "scheduling") return p.value("scheduling_model_name", "");
  for (const char* key : {"generation_model_name", "model_name", "model_path"}) {
    if (p.contains(key)) return p[key].get<std::string>();
  }
  return "";
}

std::vector<Violation> validate_cross_refs(const ExperimentConfig& config,
                                           const ValidationContext& context) {
  std::vector<Violation> out;
  const auto n = static_cast<std::int64_t>(config.persons.size());

  if (config.host.class_name == "host_round_robin") {
    const auto start = config.host.params.value("start_person_index", std::int64_t{0});
    if (start >= n) {
      out.push_back({"host.start_person_index",
                     "start_person_index " + std::to_string(start) + " is out of range for " +
                         std::to_string(n) + " persons"});
    }
  }

  const bool has_limit = config.effective_time_limit().has_value();
  for (std::size_t i = 0; i < config.persons.size(); ++i) {
    const PersonSpec& person = config.persons[i];
    const std::string path = "persons[" + std::to_string(i) + "]";
    if (is_human_class(person.class_name)) {
      if (context.batch) {
        out.push_back({path, "human person '" + person.name + "' is not allowed in batch mode"});
      } else if (!context.console_input && !context.gateway_input) {
        out.push_back({path, "human person '" + person.name +
                                 "' needs an input channel (a terminal or the gateway)"});
      }
    }
    if (person.params.value("time_aware", false) && !has_limit) {
      out.push_back({path + ".time_aware",
                     "person '" + person.name +
                         "' is prompted with the remaining time but no time limit is configured"});
    }
  }

  if (config.survey && config.survey->has(SurveyPhase::Kind::every_cycle) &&
      config.host.class_name != "host_round_robin") {
    out.push_back({"survey.phases", "every_cycle surveys need a round-robin host"});
  }
  return out;
}

}  // namespace parlor
