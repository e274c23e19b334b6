#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "parlor/config.hpp"
#include "parlor/persons.hpp"

namespace parlor {

// splitmix64(base ^ run_index): one generator step.
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t run_index);

struct BatchSpec {
  ExperimentConfig config;
  std::size_t n_runs = 1;
  std::uint64_t base_seed = 0;
  std::size_t parallelism = 1;
  std::filesystem::path output_dir;
  bool golden = false;
};

struct RunSummary {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  std::string end_reason;
  std::size_t messages = 0;
  std::filesystem::path transcript;
};

// One CSV data row.
struct SurveyRow {
  std::size_t run = 0;
  std::string phase;
  std::string person;
  std::string question;
  std::optional<std::int64_t> value;
  std::string raw;
};

struct AggregateRow {
  std::string phase;
  std::string question;
  std::size_t count = 0;
  double mean = 0.0;
  std::optional<double> stddev;  // sample stddev, absent below two values
};

struct BatchSummary {
  std::vector<RunSummary> runs;
  std::vector<AggregateRow> aggregates;
  std::size_t failed_runs = 0;
  std::size_t csv_rows = 0;
  std::filesystem::path csv_path;
  std::filesystem::path summary_path;
};

// Groups by (phase, question) over parsed values, in first-seen order.
std::vector<AggregateRow> aggregate_survey(const std::vector<SurveyRow>& rows);

// RFC 4180 field quoting.
std::string csv_field(std::string_view text);

inline constexpr std::string_view kSurveyCsvHeader = "run,phase,person,question,value,raw";

// Writes run-{i}.events.jsonl, survey.csv and batch-summary.jsonl under output_dir.
// Throws ConfigError when the spec itself is invalid (e.g. human persons).
BatchSummary run_batch(const BatchSpec& spec, const PersonEnvironment& env = {});

}  // namespace parlor
