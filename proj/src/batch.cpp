#include "parlor/batch.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <thread>

#include "parlor/events.hpp"
#include "parlor/rng.hpp"
#include "parlor/session.hpp"

namespace parlor {

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t run_index) {
  return splitmix64(base_seed ^ run_index);
}

std::vector<AggregateRow> aggregate_survey(const std::vector<SurveyRow>& rows) {
  std::vector<AggregateRow> out;
  std::vector<std::vector<double>> values;
  std::map<std::pair<std::string, std::string>, std::size_t> slot;
  for (const SurveyRow& row : rows) {
    if (!row.value) continue;
    auto [it, inserted] = slot.try_emplace({row.phase, row.question}, out.size());
    if (inserted) {
      out.push_back({row.phase, row.question, 0, 0.0, std::nullopt});
      values.emplace_back();
    }
    values[it->second].push_back(static_cast<double>(*row.value));
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& v = values[i];
    double sum = 0.0;
    for (double x : v) sum += x;
    out[i].count = v.size();
    out[i].mean = sum / static_cast<double>(v.size());
    if (v.size() >= 2) {
      double sq = 0.0;
      for (double x : v) sq += (x - out[i].mean) * (x - out[i].mean);
      out[i].stddev = std::sqrt(sq / static_cast<double>(v.size() - 1));
    }
  }
  return out;
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

namespace {

struct RunOutput {
  RunSummary summary;
  std::vector<SurveyRow> rows;
};

RunOutput run_one(const BatchSpec& spec, const PersonEnvironment& env, std::size_t index) {
  RunOutput out;
  out.summary.index = index;
  out.summary.seed = derive_seed(spec.base_seed, index);
  out.summary.transcript = spec.output_dir / ("run-" + std::to_string(index) + ".events.jsonl");
  try {
    JsonlFileSink sink(out.summary.transcript);
    SessionOptions options;
    options.seed = out.summary.seed;
    options.golden = spec.golden;
    SessionResult result =
        run_session(spec.config, build_persons(spec.config, env), {&sink}, std::move(options));
    out.summary.end_reason = result.end_reason;
    out.summary.messages = result.history.size();
    if (result.aborted) {
      out.summary.failed = true;
      out.summary.error = result.error;
    }
    for (const SurveyAnswer& a : result.survey_answers) {
      out.rows.push_back({index, a.phase_label, a.person.name, a.question_id, a.parsed_value, a.raw});
    }
  } catch (const std::exception& e) {
    out.summary.failed = true;
    out.summary.error = e.what();
  }
  return out;
}

json summary_line(const RunSummary& run) {
  json line = {{"run", run.index},
               {"seed", run.seed},
               {"status", run.failed ? "failed" : "ok"},
               {"end_reason", run.end_reason},
               {"messages", run.messages},
               {"transcript", run.transcript.filename().string()}};
  if (run.failed) line["error"] = run.error;
  return line;
}

}  // namespace

BatchSummary run_batch(const BatchSpec& spec, const PersonEnvironment& env) {
  for (const PersonSpec& person : spec.config.persons) {
    if (is_human_class(person.class_name)) {
      throw ConfigError(ConfigErrorKind::constraint, "persons",
                        "'" + person.name + "' is a human person; batch runs cannot include humans");
    }
  }
  const auto violations = validate_cross_refs(spec.config, {.batch = true});
  if (!violations.empty()) {
    throw ConfigError(ConfigErrorKind::constraint, violations.front().path,
                      violations.front().message);
  }
  std::filesystem::create_directories(spec.output_dir);

  std::vector<RunOutput> outputs(spec.n_runs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < spec.n_runs; i = next++) outputs[i] = run_one(spec, env, i);
  };
  const std::size_t workers = std::clamp<std::size_t>(spec.parallelism, 1, std::max<std::size_t>(spec.n_runs, 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  BatchSummary summary;
  std::vector<SurveyRow> rows;
  for (RunOutput& out : outputs) {
    if (out.summary.failed) ++summary.failed_runs;
    summary.runs.push_back(std::move(out.summary));
    rows.insert(rows.end(), out.rows.begin(), out.rows.end());
  }
  summary.aggregates = aggregate_survey(rows);
  summary.csv_rows = rows.size();

  summary.csv_path = spec.output_dir / "survey.csv";
  std::ofstream csv(summary.csv_path, std::ios::binary | std::ios::trunc);
  if (!csv) throw IoError("cannot write '" + summary.csv_path.string() + "'");
  csv << kSurveyCsvHeader << "\r\n";
  for (const SurveyRow& row : rows) {
    csv << row.run << ',' << csv_field(row.phase) << ',' << csv_field(row.person) << ','
        << csv_field(row.question) << ',' << (row.value ? std::to_string(*row.value) : "") << ','
        << csv_field(row.raw) << "\r\n";
  }
  if (!csv.flush()) throw IoError("write failed for '" + summary.csv_path.string() + "'");

  summary.summary_path = spec.output_dir / "batch-summary.jsonl";
  std::ofstream out(summary.summary_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + summary.summary_path.string() + "'");
  for (const RunSummary& run : summary.runs) out << canonical_json(summary_line(run)) << '\n';
  json aggregates = json::array();
  for (const AggregateRow& row : summary.aggregates) {
    aggregates.push_back({{"phase", row.phase},
                          {"question", row.question},
                          {"count", row.count},
                          {"mean", row.mean},
                          {"stddev", row.stddev ? json(*row.stddev) : json(nullptr)}});
  }
  out << canonical_json({{"aggregates", aggregates},
                         {"runs", spec.n_runs},
                         {"failed_runs", summary.failed_runs}})
      << '\n';
  if (!out.flush()) throw IoError("write failed for '" + summary.summary_path.string() + "'");
  return summary;
}

}  // namespace parlor
