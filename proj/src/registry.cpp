#include "parlor/registry.hpp"

#include <cctype>
#include <stdexcept>

#include "parlor/config.hpp"

namespace parlor {

namespace {

FieldSpec required(std::string name, FieldType type) { return {std::move(name), type, true, {}}; }

FieldSpec optional(std::string name, FieldType type, json default_value = nullptr) {
  return {std::move(name), type, false, std::move(default_value)};
}

void require_min(const json& params, const std::string& key, double min, bool inclusive,
                 const std::string& path) {
  if (!params.contains(key)) return;
  const double value = params.at(key).get<double>();
  if (inclusive ? value < min : value <= min) {
    throw ConfigError(ConfigErrorKind::out_of_range, path + "." + key,
                      "'" + key + "' must be " + (inclusive ? ">= " : "> ") +
                          json(min).dump());
  }
}

bool backend_is_scripted(const json& params) {
  return params.contains("backend") && params["backend"].value("class", "") == "scripted";
}

void check_script(const json& value, const std::string& path) {
  for (std::size_t i = 0; i < value.size(); ++i) {
    if (!value[i].is_string() && !value[i].is_null()) {
      throw ConfigError(ConfigErrorKind::wrong_type, path + "[" + std::to_string(i) + "]",
                        "script entries must be strings or null");
    }
  }
}

void check_backend(json& params, const std::string& path) {
  if (!params.contains("backend")) return;
  json& backend = params["backend"];
  const std::string bpath = path + ".backend";
  if (!backend.contains("class") || !backend["class"].is_string()) {
    throw ConfigError(ConfigErrorKind::missing_field, bpath + ".class",
                      "backend needs a 'class' of \"scripted\" or \"endpoint\"");
  }
  const std::string cls = backend["class"].get<std::string>();
  if (cls == "scripted") {
    for (auto& [key, value] : backend.items()) {
      if (key == "class") continue;
      if (key != "turn" && key != "schedule" && key != "survey") {
        throw ConfigError(ConfigErrorKind::unknown_key, bpath + "." + key,
                          "unknown key '" + key + "' for scripted backend");
      }
      if (!value.is_array()) {
        throw ConfigError(ConfigErrorKind::wrong_type, bpath + "." + key, "expected an array");
      }
      check_script(value, bpath + "." + key);
    }
  } else if (cls == "endpoint") {
    for (auto& [key, value] : backend.items()) {
      if (key == "class") continue;
      if (key != "base_url") {
        throw ConfigError(ConfigErrorKind::unknown_key, bpath + "." + key,
                          "unknown key '" + key + "' for endpoint backend");
      }
      if (!value.is_string()) {
        throw ConfigError(ConfigErrorKind::wrong_type, bpath + "." + key, "expected a string");
      }
    }
  } else {
    throw ConfigError(ConfigErrorKind::unknown_class, bpath + ".class",
                      "unknown backend class '" + cls + "'");
  }
}

void check_sampling(json& params, const std::string& path) {
  require_min(params, "temperature", 0.0, true, path);
  require_min(params, "max_tokens", 1.0, true, path);
}

void check_model_keys(const json& params, const std::string& path,
                      std::initializer_list<const char*> any_of) {
  if (backend_is_scripted(params)) return;
  for (const char* key : any_of) {
    if (params.contains(key)) return;
  }
  throw ConfigError(ConfigErrorKind::missing_field, path + "." + *any_of.begin(),
                    std::string("missing required field '") + *any_of.begin() + "'");
}

void check_policy(json& params, const std::string& path) {
  json& policy = params["policy"];
  const std::string ppath = path + ".policy";
  if (!policy.contains("kind") || !policy["kind"].is_string()) {
    throw ConfigError(ConfigErrorKind::missing_field, ppath + ".kind",
                      "missing required field 'kind'");
  }
  const std::string kind = policy["kind"].get<std::string>();
  for (auto& [key, value] : policy.items()) {
    if (key == "kind") continue;
    if ((key == "speak_every" && kind == "periodic") ||
        (key == "silences" && kind == "after_silences")) {
      if (!value.is_number_integer()) {
        throw ConfigError(ConfigErrorKind::wrong_type, ppath + "." + key, "expected an integer");
      }
      continue;
    }
    throw ConfigError(ConfigErrorKind::unknown_key, ppath + "." + key,
                      "unknown key '" + key + "' for policy '" + kind + "'");
  }
  if (kind == "always" || kind == "never") return;
  if (kind == "periodic") {
    if (!policy.contains("speak_every")) {
      throw ConfigError(ConfigErrorKind::missing_field, ppath + ".speak_every",
                        "missing required field 'speak_every'");
    }
    require_min(policy, "speak_every", 1, true, ppath);
    return;
  }
  if (kind == "after_silences") {
    if (!policy.contains("silences")) {
      throw ConfigError(ConfigErrorKind::missing_field, ppath + ".silences",
                        "missing required field 'silences'");
    }
    require_min(policy, "silences", 0, true, ppath);
    return;
  }
  throw ConfigError(ConfigErrorKind::out_of_range, ppath + ".kind",
                    "unknown policy kind '" + kind + "'");
}

std::vector<FieldSpec> person_fields(std::vector<FieldSpec> extra) {
  std::vector<FieldSpec> fields = {
      required("name", FieldType::string),
      optional("background_story", FieldType::string, ""),
      optional("time_aware", FieldType::boolean, false),
  };
  fields.insert(fields.end(), extra.begin(), extra.end());
  return fields;
}

std::vector<FieldSpec> sampling_fields() {
  return {optional("temperature", FieldType::number, 0.7),
          optional("max_tokens", FieldType::integer, 256),
          optional("backend", FieldType::object)};
}

template <typename... Vs>
std::vector<FieldSpec> concat(Vs... parts) {
  std::vector<FieldSpec> out;
  (out.insert(out.end(), parts.begin(), parts.end()), ...);
  return out;
}

ClassRegistry make_builtin() {
  ClassRegistry r;

  r.add({ClassCategory::host, "host_round_robin",
         {"Round Robin Host", "round_robin", "HostRoundRobin"},
         {optional("start_person_index", FieldType::integer, 0)},
         [](json& p, const std::string& path) {
           require_min(p, "start_person_index", 0, true, path);
         }});
  r.add({ClassCategory::host, "host_random", {"Random Host", "random", "HostRandom"}, {}, {}});

  r.add({ClassCategory::end, "end_num_msgs", {"iteration", "num_msgs", "EndTypeNumMsgs"},
         {required("max_num_msgs", FieldType::integer)},
         [](json& p, const std::string& path) { require_min(p, "max_num_msgs", 1, true, path); }});
  r.add({ClassCategory::end, "end_time_limit", {"time_limit", "EndTypeTimeLimit"},
         {required("limit_seconds", FieldType::number)},
         [](json& p, const std::string& path) {
           require_min(p, "limit_seconds", 0, false, path);
         }});
  r.add({ClassCategory::end, "end_turn_cap", {"turn_cap"},
         {required("max_turns", FieldType::integer)},
         [](json& p, const std::string& path) { require_min(p, "max_turns", 1, true, path); }});
  r.add({ClassCategory::end, "end_any_of", {"any_of"},
         {required("conditions", FieldType::array)}, {}});

  r.add({ClassCategory::person, "scripted", {"scripted_person"},
         person_fields({required("script", FieldType::script),
                        optional("survey_script", FieldType::script, json::array())}),
         {}});
  r.add({ClassCategory::person, "scripted_async", {"scripted_asynchronous"},
         person_fields({required("script", FieldType::script),
                        optional("survey_script", FieldType::script, json::array()),
                        required("policy", FieldType::object)}),
         [](json& p, const std::string& path) {
           for (const auto& line : p["script"]) {
             if (line.is_null()) {
               throw ConfigError(ConfigErrorKind::wrong_type, path + ".script",
                                 "scripted_async scripts cannot contain null");
             }
           }
           check_policy(p, path);
         }});
  r.add({ClassCategory::person, "person_endpoint",
         {"endpoint", "person_open_ai_completion", "PersonOpenAiCompletion",
          "person_hugging_face", "PersonHuggingFace"},
         person_fields(concat(std::vector<FieldSpec>{optional("model_path", FieldType::string),
                                                     optional("model_name", FieldType::string)},
                              sampling_fields())),
         [](json& p, const std::string& path) {
           check_backend(p, path);
           check_sampling(p, path);
           check_model_keys(p, path, {"model_name", "model_path"});
         }});
  r.add({ClassCategory::person, "fine_tuned_async",
         {"FineTunedAsynchronousPerson", "fine_tuned_asynchronous_person"},
         person_fields(concat(std::vector<FieldSpec>{optional("model_path", FieldType::string),
                                                     optional("model_name", FieldType::string),
                                                     optional("pass_token", FieldType::string,
                                                              "<pass>")},
                              sampling_fields())),
         [](json& p, const std::string& path) {
           check_backend(p, path);
           check_sampling(p, path);
           check_model_keys(p, path, {"model_name", "model_path"});
           if (p["pass_token"].get<std::string>().empty()) {
             throw ConfigError(ConfigErrorKind::out_of_range, path + ".pass_token",
                               "pass_token must be non-empty");
           }
         }});

  auto inner_scheduler_check = [](json& p, const std::string& path) {
    check_backend(p, path);
    check_sampling(p, path);
    check_model_keys(p, path, {"generation_model_name"});
    check_model_keys(p, path, {"scheduling_model_name"});
    if (p.contains("decision_order")) {
      const auto order = p["decision_order"].get<std::string>();
      if (order != "decide_then_generate" && order != "generate_then_decide") {
        throw ConfigError(ConfigErrorKind::out_of_range, path + ".decision_order",
                          "decision_order must be \"decide_then_generate\" or "
                          "\"generate_then_decide\"");
      }
    }
  };
  const std::vector<FieldSpec> model_pair = {optional("generation_model_name", FieldType::string),
                                             optional("scheduling_model_name", FieldType::string)};
  r.add({ClassCategory::person, "first_decides_then_generates", {"FirstDecidesThenGenerates"},
         person_fields(concat(model_pair, sampling_fields())), inner_scheduler_check});
  r.add({ClassCategory::person, "first_generates_then_decides", {"FirstGeneratesThenDecides"},
         person_fields(concat(model_pair, sampling_fields())), inner_scheduler_check});
  r.add({ClassCategory::person, "async_group_discussant",
         {"AsynchronousGroupDiscussant", "asynchronous_group_discussant"},
         person_fields(concat(model_pair, sampling_fields(),
                              std::vector<FieldSpec>{
                                  optional("decision_order", FieldType::string,
                                           "decide_then_generate"),
                                  optional("opinion", FieldType::string),
                                  optional("opinion_strength", FieldType::scalar)})),
         inner_scheduler_check});

  auto human_check = [](json& p, const std::string& path) {
    require_min(p, "input_timeout_seconds", 0, false, path);
  };
  r.add({ClassCategory::person, "human", {"Human"},
         person_fields({optional("input_timeout_seconds", FieldType::number, 120)}), human_check});
  r.add({ClassCategory::person, "async_human", {"AsynchronousHuman", "asynchronous_human"},
         person_fields({optional("input_timeout_seconds", FieldType::number, 120)}), human_check});
  return r;
}

}  // namespace

std::string ClassRegistry::normalize(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  for (char c : name) {
    if (c == ' ' || c == '_') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

void ClassRegistry::add(ClassDescriptor descriptor) {
  const std::size_t slot = descriptors_.size();
  std::vector<std::string> keys = {normalize(descriptor.canonical)};
  for (const auto& alias : descriptor.aliases) keys.push_back(normalize(alias));
  for (const auto& key : keys) {
    auto [it, inserted] = index_.emplace(std::make_pair(descriptor.category, key), slot);
    if (!inserted && it->second != slot) {
      throw std::logic_error("class name collision: " + key);
    }
  }
  descriptors_.push_back(std::move(descriptor));
}

const ClassDescriptor* ClassRegistry::find(ClassCategory category, std::string_view name) const {
  auto it = index_.find({category, normalize(name)});
  return it == index_.end() ? nullptr : &descriptors_[it->second];
}

std::vector<std::string> ClassRegistry::names(ClassCategory category) const {
  std::vector<std::string> out;
  for (const auto& d : descriptors_) {
    if (d.category == category) out.push_back(d.canonical);
  }
  return out;
}

const ClassRegistry& ClassRegistry::builtin() {
  static const ClassRegistry registry = make_builtin();
  return registry;
}

}  // namespace parlor
