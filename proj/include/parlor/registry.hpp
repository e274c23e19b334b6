#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace parlor {

using json = nlohmann::json;

enum class ClassCategory { host, person, end };

enum class FieldType { string, integer, number, boolean, object, array, script, scalar };

struct FieldSpec {
  std::string name;
  FieldType type = FieldType::string;
  bool required = false;
  json default_value;  // null: no default, the key stays absent
};

struct ClassDescriptor {
  ClassCategory category = ClassCategory::host;
  std::string canonical;
  std::vector<std::string> aliases;
  std::vector<FieldSpec> fields;
  // Range and relational checks on already type-checked params. Throws ConfigError.
  std::function<void(json& params, const std::string& path)> check;
};

// Maps "class" tags to descriptors. Lookup is insensitive to case, spaces and underscores.
class ClassRegistry {
 public:
  void add(ClassDescriptor descriptor);

  const ClassDescriptor* find(ClassCategory category, std::string_view name) const;
  std::vector<std::string> names(ClassCategory category) const;

  static std::string normalize(std::string_view name);

  // Built-in hosts, persons and end conditions. Built once, read-only afterwards.
  static const ClassRegistry& builtin();

 private:
  std::vector<ClassDescriptor> descriptors_;
  std::map<std::pair<ClassCategory, std::string>, std::size_t> index_;
};

}  // namespace parlor
