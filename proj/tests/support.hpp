#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "parlor/config.hpp"
#include "parlor/events.hpp"
#include "parlor/transcript.hpp"

namespace parlor::test {

inline std::filesystem::path data_dir() { return PARLOR_TEST_DATA; }

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device device;
    path_ = std::filesystem::temp_directory_path() /
            ("parlor-test-" + std::to_string(device()) + std::to_string(device()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline json scripted_person(const std::string& name, json script, json survey = json::array()) {
  return {{"class", "scripted"},
          {"name", name},
          {"background_story", "You are " + name + "."},
          {"script", std::move(script)},
          {"survey_script", std::move(survey)}};
}

inline json scripted_async(const std::string& name, json policy, json script) {
  return {{"class", "scripted_async"},
          {"name", name},
          {"policy", std::move(policy)},
          {"script", std::move(script)}};
}

// Round robin host, num_msgs end, the given persons.
inline json base_config(json persons, std::int64_t max_msgs = 20, std::uint64_t seed = 7) {
  return {{"experiment", {{"scenario", "You're discussing social welfare"}}},
          {"host", {{"class", "Round Robin Host"}, {"start_person_index", 0}}},
          {"persons", std::move(persons)},
          {"endType", {{"class", "iteration"}, {"max_num_msgs", max_msgs}}},
          {"seed", seed}};
}

inline json three_scripted(std::int64_t max_msgs = 20) {
  return base_config(json::array({scripted_person("Katya", {"I think we should help.", "Katya: Kindness matters."}),
                                  scripted_person("Victor", {"Not my problem.", "Whatever."}),
                                  scripted_person("Juliet", {"I can't decide.", "Maybe both?"})}),
                     max_msgs);
}

inline std::string random_text(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {"a", "Z", " ", "\"", "\\", "\n", "\t", "é",
                                                  "日本", "😀", "<pass>", "{", "}", ",", "0"};
  std::string out;
  const std::size_t len = rng() % 12;
  for (std::size_t i = 0; i < len; ++i) out += pieces[rng() % pieces.size()];
  return out;
}

// Valid transcript of `count` records with awkward strings in the payloads.
inline std::vector<EventRecord> random_events(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const ExperimentConfig config = parse_config(three_scripted());
  std::vector<EventRecord> out;
  std::int64_t at = 0;
  std::int64_t messages = 0;
  const char* names[] = {"Katya", "Victor", "Juliet"};
  for (std::size_t i = 0; i < count; ++i) {
    EventRecord r;
    r.seq = static_cast<std::int64_t>(i);
    r.run_id = "r1";
    at += static_cast<std::int64_t>(rng() % 3) * 1000;
    r.at_ms = at;
    if (i == 0) {
      r.kind = EventKind::session_start;
      r.payload = {{"config", config.to_json()}, {"config_hash", config_hash(config)}, {"seed", 7}};
    } else if (i + 1 == count) {
      r.kind = EventKind::session_end;
      r.payload = {{"end_reason", "num_msgs"}, {"messages", messages}};
    } else {
      switch (rng() % 4) {
        case 0:
          r.kind = EventKind::skip;
          r.payload = {{"person", names[rng() % 3]}, {"reason", "declined"}, {"turn", i}};
          break;
        case 1: {
          r.kind = EventKind::survey_answer;
          const bool has_value = rng() % 2 == 0;
          r.payload = {{"person", names[rng() % 3]}, {"question_id", "q"},
                       {"phase", "post"},             {"raw", random_text(rng)},
                       {"value", has_value ? json(static_cast<int>(rng() % 11)) : json(nullptr)},
                       {"clamped", false}};
          break;
        }
        default: {
          r.kind = EventKind::message;
          std::string content = "m" + random_text(rng);
          r.payload = {{"sender", names[rng() % 3]}, {"content", content},
                       {"turn", i}, {"message_seq", messages++}};
        }
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string serialize_all(const std::vector<EventRecord>& events) {
  std::string out;
  for (const auto& e : events) out += serialize_event(e) + "\n";
  return out;
}

template <typename F>
double seconds_of(F&& body) {
  const auto start = std::chrono::steady_clock::now();
  body();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace parlor::test
