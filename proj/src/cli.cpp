#include "parlor/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>

#include "parlor/batch.hpp"
#include "parlor/config.hpp"
#include "parlor/gateway.hpp"
#include "parlor/session.hpp"
#include "parlor/transcript.hpp"

namespace parlor {

namespace {

void print_config_error(std::ostream& err, const ConfigError& e) {
  err << "error";
  if (!e.path().empty()) err << ": " << e.path();
  err << ": " << e.what() << "\n";
}

void print_violations(std::ostream& err, const std::vector<Violation>& violations) {
  for (const Violation& v : violations) err << "error: " << v.path << ": " << v.message << "\n";
}

bool has_humans(const ExperimentConfig& config) {
  return std::any_of(config.persons.begin(), config.persons.end(),
                     [](const PersonSpec& p) { return is_human_class(p.class_name); });
}

std::string clock_text(std::int64_t ms) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%02lld:%02lld", static_cast<long long>(ms / 60000),
                static_cast<long long>(ms / 1000 % 60));
  return buffer;
}

int cmd_validate(const std::string& path, CliStreams& io) {
  ExperimentConfig config;
  try {
    config = load_config_file(path);
  } catch (const ConfigError& e) {
    print_config_error(io.err, e);
    return kExitUserError;
  }
  const auto violations = validate_cross_refs(config, {.console_input = true, .gateway_input = true});
  if (!violations.empty()) {
    print_violations(io.err, violations);
    return kExitUserError;
  }
  io.out << "ok: " << config.persons.size() << " persons\n";
  return kExitOk;
}

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed,
            const std::filesystem::path& out_dir, bool golden, CliStreams& io) {
  ExperimentConfig config;
  try {
    config = load_config_file(path);
  } catch (const ConfigError& e) {
    print_config_error(io.err, e);
    return kExitUserError;
  }
  const auto violations = validate_cross_refs(config, {.console_input = io.stdin_is_tty});
  if (!violations.empty()) {
    print_violations(io.err, violations);
    return kExitUserError;
  }
  if (!seed && !config.seed) io.err << "warning: no seed given, using 0\n";

  try {
    std::filesystem::create_directories(out_dir);
    const auto transcript = out_dir / "run.events.jsonl";
    JsonlFileSink sink(transcript);
    PersonEnvironment env;
    if (has_humans(config)) env.input = std::make_shared<StreamInputChannel>(io.in, io.out);
    SessionOptions options;
    options.seed = seed;
    options.golden = golden;
    const SessionResult result = run_session(config, build_persons(config, env), {&sink}, options);
    if (result.aborted) {
      io.err << "error: session aborted: " << result.error << "\n";
      return kExitRuntimeError;
    }
    io.out << "ended: " << result.end_reason << ", " << result.history.size() << " messages, "
           << result.turn_count << " turns\n"
           << "transcript: " << transcript.string() << "\n";
  } catch (const ConfigError& e) {
    print_config_error(io.err, e);
    return kExitUserError;
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
  return kExitOk;
}

int cmd_batch(const std::string& path, std::size_t runs, std::uint64_t seed, std::size_t parallel,
              const std::filesystem::path& out_dir, bool golden, CliStreams& io) {
  BatchSpec spec;
  try {
    spec.config = load_config_file(path);
  } catch (const ConfigError& e) {
    print_config_error(io.err, e);
    return kExitUserError;
  }
  spec.n_runs = runs;
  spec.base_seed = seed;
  spec.parallelism = parallel;
  spec.output_dir = out_dir;
  spec.golden = golden;
  try {
    const BatchSummary summary = run_batch(spec);
    for (const RunSummary& run : summary.runs) {
      io.out << "run " << run.index << ": "
             << (run.failed ? "failed: " + run.error
                            : run.end_reason + ", " + std::to_string(run.messages) + " messages")
             << "\n";
    }
    for (const AggregateRow& row : summary.aggregates) {
      io.out << row.phase << " " << row.question << ": n=" << row.count << " mean=" << row.mean;
      if (row.stddev) io.out << " sd=" << *row.stddev;
      io.out << "\n";
    }
    io.out << summary.runs.size() - summary.failed_runs << "/" << summary.runs.size()
           << " runs ok, survey rows: " << summary.csv_rows << "\n";
    return summary.failed_runs == 0 ? kExitOk : kExitRuntimeError;
  } catch (const ConfigError& e) {
    print_config_error(io.err, e);
    return kExitUserError;
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
}

int cmd_serve(const std::string& host, int port, const std::filesystem::path& out_dir,
              CliStreams& io) {
  GatewayOptions options;
  options.output_dir = out_dir;
  Gateway gateway(std::move(options));
  io.out << "listening on http://" << host << ":" << port << "\n" << std::flush;
  if (!gateway.serve(host, port)) {
    io.err << "error: cannot listen on " << host << ":" << port << "\n";
    return kExitRuntimeError;
  }
  return kExitOk;
}

int cmd_replay(const std::string& path, const std::string& format, CliStreams& io) {
  TranscriptView view;
  try {
    view = load_transcript_file(path);
  } catch (const TranscriptError& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitUserError;
  }
  const bool table = format == "table";
  for (const EventRecord& record : view.events) {
    const json& p = record.payload;
    if (record.kind == EventKind::message) {
      const std::string sender = p["sender"];
      const std::string content = p["content"];
      if (table) {
        char prefix[64];
        std::snprintf(prefix, sizeof prefix, "%5lld  %s  ", static_cast<long long>(record.seq),
                      clock_text(record.at_ms).c_str());
        io.out << prefix << sender << ": " << content << "\n";
      } else {
        io.out << sender << ": " << content << "\n";
      }
    } else if (record.kind == EventKind::skip) {
      const std::string person = p["person"];
      if (table) {
        char prefix[64];
        std::snprintf(prefix, sizeof prefix, "%5lld  %s  ", static_cast<long long>(record.seq),
                      clock_text(record.at_ms).c_str());
        io.out << prefix << "(" << person << " passed: " << p["reason"].get<std::string>()
               << ")\n";
      } else {
        io.out << "(" << person << " passed)\n";
      }
    }
  }
  if (!view.complete) io.out << "[incomplete]\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, CliStreams streams) {
  CLI::App app{"Config-driven multi-agent conversation experiments", "parlor"};
  app.require_subcommand(1);

  std::string config_path;
  std::string transcript_path;
  std::optional<std::uint64_t> seed;
  std::uint64_t batch_seed = 0;
  std::string out_dir = ".";
  bool golden = false;
  std::size_t runs = 1;
  std::size_t parallel = 1;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string format = "text";

  auto* validate = app.add_subcommand("validate", "Check a config file");
  validate->add_option("config", config_path, "Config file")->required();

  auto* run = app.add_subcommand("run", "Run one session");
  run->add_option("config", config_path, "Config file")->required();
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--out", out_dir, "Output directory");
  run->add_flag("--golden", golden, "Zero nondeterministic metadata");

  auto* batch = app.add_subcommand("batch", "Run many sessions");
  batch->add_option("config", config_path, "Config file")->required();
  batch->add_option("--runs", runs, "Number of runs")->check(CLI::PositiveNumber);
  batch->add_option("--seed", batch_seed, "Base seed");
  batch->add_option("--parallel", parallel, "Concurrent runs")->check(CLI::PositiveNumber);
  batch->add_option("--out", out_dir, "Output directory");
  batch->add_flag("--golden", golden, "Zero nondeterministic metadata");

  auto* serve = app.add_subcommand("serve", "Host live sessions over HTTP");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port")->check(CLI::Range(1, 65535));
  serve->add_option("--out", out_dir, "Transcript directory");

  auto* replay = app.add_subcommand("replay", "Render a transcript");
  replay->add_option("transcript", transcript_path, "Transcript file")->required();
  replay->add_option("--format", format, "text or table")
      ->check(CLI::IsMember({"text", "table"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, streams.out, streams.err);
    return code == 0 ? kExitOk : kExitUserError;
  }

  if (validate->parsed()) return cmd_validate(config_path, streams);
  if (run->parsed()) return cmd_run(config_path, seed, out_dir, golden, streams);
  if (batch->parsed()) {
    return cmd_batch(config_path, runs, batch_seed, parallel, out_dir, golden, streams);
  }
  if (serve->parsed()) return cmd_serve(host, port, out_dir, streams);
  if (replay->parsed()) return cmd_replay(transcript_path, format, streams);
  return kExitUserError;
}

}  // namespace parlor
