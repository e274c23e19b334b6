#include <gtest/gtest.h>

#include <sstream>

#include "parlor/cli.hpp"
#include "support.hpp"

using namespace parlor;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli(std::vector<std::string> args, bool tty = false, const std::string& input = "") {
  // Leaked on purpose: a console reader thread may still hold it.
  auto* in = new std::istringstream(input);
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, {*in, out, err, tty});
  return {code, out.str(), err.str()};
}

std::string write_config(const test::TempDir& dir, const std::string& name, const json& doc) {
  const auto path = dir / name;
  test::write_file(path, doc.dump(2));
  return path.string();
}

}  // namespace

TEST(Cli, ValidateFigureFile) {
  const Outcome ok = cli({"validate", (test::data_dir() / "fig2.json").string()});
  EXPECT_EQ(ok.code, kExitOk) << ok.err;

  const Outcome syntax = cli({"validate", (test::data_dir() / "fig2_verbatim.json").string()});
  EXPECT_EQ(syntax.code, kExitUserError);
  EXPECT_NE(syntax.err.find("line 26, column"), std::string::npos) << syntax.err;
}

TEST(Cli, ValidateEmptyPersons) {
  test::TempDir dir;
  const Outcome r = cli({"validate", write_config(dir, "c.json", test::base_config(json::array()))});
  EXPECT_EQ(r.code, kExitUserError);
  EXPECT_NE(r.err.find("persons"), std::string::npos);
}

TEST(Cli, GoldenRunsAreIdenticalAndOutDirIsCreated) {
  test::TempDir dir;
  const std::string config = write_config(dir, "c.json", test::three_scripted());
  const auto a = dir / "a" / "nested";
  const auto b = dir / "b";
  EXPECT_EQ(cli({"run", config, "--golden", "--out", a.string()}).code, kExitOk);
  EXPECT_EQ(cli({"run", config, "--golden", "--out", b.string(), "--seed", "7"}).code, kExitOk);
  const std::string first = test::read_file(a / "run.events.jsonl");
  EXPECT_FALSE(first.empty());
  EXPECT_EQ(first, test::read_file(b / "run.events.jsonl"));
}

TEST(Cli, HumanWithoutTerminalIsRejected) {
  test::TempDir dir;
  json doc = test::base_config(json::array({{{"class", "human"}, {"name", "Victor"}}}), 1);
  const std::string config = write_config(dir, "h.json", doc);
  const Outcome r = cli({"run", config, "--out", dir.path().string()});
  EXPECT_EQ(r.code, kExitUserError);
  EXPECT_NE(r.err.find("Victor"), std::string::npos);

  const Outcome typed = cli({"run", config, "--golden", "--out", dir.path().string()}, true,
                            "Hello there\n");
  EXPECT_EQ(typed.code, kExitOk) << typed.err;
  EXPECT_NE(test::read_file(dir / "run.events.jsonl").find("Hello there"), std::string::npos);
}

TEST(Cli, BatchAndReplay) {
  test::TempDir dir;
  const std::string config = write_config(dir, "c.json", test::three_scripted());
  const auto out = dir / "batch";
  const Outcome batch = cli({"batch", config, "--runs", "3", "--seed", "5", "--parallel", "2",
                             "--golden", "--out", out.string()});
  EXPECT_EQ(batch.code, kExitOk) << batch.err;
  for (int i = 0; i < 3; ++i) {
    EXPECT_TRUE(std::filesystem::exists(out / ("run-" + std::to_string(i) + ".events.jsonl")));
  }

  const Outcome replay = cli({"replay", (out / "run-0.events.jsonl").string()});
  EXPECT_EQ(replay.code, kExitOk);
  EXPECT_EQ(std::count(replay.out.begin(), replay.out.end(), '\n'), 20);
  EXPECT_EQ(replay.out.rfind("Katya: I think we should help.\n", 0), 0u);

  const Outcome table = cli({"replay", (out / "run-0.events.jsonl").string(), "--format", "table"});
  EXPECT_NE(table.out.find("00:00"), std::string::npos);
}

TEST(Cli, BatchFailureExitsNonZero) {
  test::TempDir dir;
  const std::string config = write_config(dir, "c.json", test::three_scripted(2));
  std::filesystem::create_directories(dir / "out" / "run-0.events.jsonl");
  const Outcome r = cli({"batch", config, "--runs", "2", "--out", (dir / "out").string()});
  EXPECT_EQ(r.code, kExitRuntimeError);
  EXPECT_NE(r.out.find("failed"), std::string::npos);
}

TEST(Cli, ReplayShowsPassesAndIncompleteFiles) {
  test::TempDir dir;
  json doc = test::base_config(json::array({test::scripted_person("Katya", {"hi"}),
                                            test::scripted_async("Robert", {{"kind", "never"}}, {"x"})}),
                               2);
  const std::string config = write_config(dir, "c.json", doc);
  ASSERT_EQ(cli({"run", config, "--golden", "--out", dir.path().string()}).code, kExitOk);
  std::string text = test::read_file(dir / "run.events.jsonl");
  const Outcome full = cli({"replay", (dir / "run.events.jsonl").string()});
  EXPECT_NE(full.out.find("(Robert passed)\n"), std::string::npos);
  EXPECT_EQ(full.out.find("[incomplete]"), std::string::npos);

  text.erase(text.rfind('\n', text.size() - 2) + 1);
  test::write_file(dir / "cut.jsonl", text);
  const Outcome cut = cli({"replay", (dir / "cut.jsonl").string()});
  EXPECT_EQ(cut.code, kExitOk);
  EXPECT_NE(cut.out.find("[incomplete]\n"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({}).code, kExitUserError);
  EXPECT_EQ(cli({"dance"}).code, kExitUserError);
  EXPECT_EQ(cli({"run"}).code, kExitUserError);
  EXPECT_EQ(cli({"replay", "/nonexistent/file.jsonl"}).code, kExitUserError);
  EXPECT_EQ(cli({"--help"}).code, kExitOk);
}
