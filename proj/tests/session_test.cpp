#include <gtest/gtest.h>

#include <cmath>

#include "parlor/batch.hpp"
#include "parlor/session.hpp"
#include "parlor/transcript.hpp"
#include "support.hpp"

using namespace parlor;
using parlor::test::base_config;
using parlor::test::scripted_async;
using parlor::test::scripted_person;

namespace {

json always_skip(const std::string& name) {
  return scripted_async(name, {{"kind", "never"}}, {"unused"});
}

SessionResult run_doc(const json& doc, MemorySink* sink = nullptr, SessionOptions options = {}) {
  const ExperimentConfig config = parse_config(doc);
  std::vector<EventSink*> sinks;
  if (sink) sinks.push_back(sink);
  options.golden = true;
  return run_session(config, build_persons(config), sinks, options);
}

class FailingSink : public EventSink {
 public:
  explicit FailingSink(int after) : after_(after) {}
  void write(const EventRecord&) override {
    if (written_++ >= after_) throw IoError("disk full");
  }

 private:
  int after_;
  int written_ = 0;
};

}  // namespace

TEST(EndCondition, DidEndKinds) {
  EXPECT_TRUE(did_end(EndCondition::num_msgs(3), 3, Millis{0}, 3).ended);
  EXPECT_FALSE(did_end(EndCondition::num_msgs(3), 2, Millis{0}, 9).ended);
  EXPECT_EQ(did_end(EndCondition::time_limit(Millis{600000}), 0, Millis{600000}, 0).reason,
            "time_limit");
  const auto any = EndCondition::any_of({EndCondition::num_msgs(5), EndCondition::turn_cap(8)});
  EXPECT_EQ(did_end(any, 1, Millis{0}, 8).reason, "turn_cap");
}

TEST(EndCondition, SafetyCapIsAdded) {
  const EndCondition capped = with_safety_turn_cap(EndCondition::num_msgs(20));
  ASSERT_EQ(capped.kind, EndCondition::Kind::any_of);
  ASSERT_EQ(capped.members.size(), 2u);
  EXPECT_EQ(capped.members[1].max, 1000);
  EXPECT_EQ(with_safety_turn_cap(EndCondition::num_msgs(500)).members[1].max, 5000);
  const EndCondition explicit_cap = with_safety_turn_cap(EndCondition::turn_cap(7));
  EXPECT_EQ(explicit_cap.kind, EndCondition::Kind::turn_cap);
}

TEST(SurveyReply, FirstIntegerClamped) {
  const SurveyQuestion q{"q", "?", IntegerScale{1, 7}};
  EXPECT_EQ(parse_survey_reply("I'd say 5 out of 7", q).value, 5);
  const auto high = parse_survey_reply("12", q);
  EXPECT_EQ(high.value, 7);
  EXPECT_TRUE(high.clamped);
  EXPECT_EQ(parse_survey_reply("-3", q).value, 1);
  EXPECT_EQ(parse_survey_reply("x-3", q).value, 3);
  EXPECT_FALSE(parse_survey_reply("no idea", q).value.has_value());
  EXPECT_EQ(parse_survey_reply("99999999999999999999999", q).value, 7);
  EXPECT_FALSE(parse_survey_reply("5", SurveyQuestion{"f", "?", FreeText{}}).value.has_value());
}

TEST(Session, EndsAtExactlyMaxMessagesWithSkippers) {
  for (std::int64_t m : {1, 5, 20}) {
    for (int skippers : {0, 1, 2}) {
      json persons = json::array();
      for (int i = 0; i < 3; ++i) {
        const std::string name = "P" + std::to_string(i);
        persons.push_back(i < skippers ? always_skip(name) : scripted_person(name, {"hi " + name}));
      }
      const SessionResult r = run_doc(base_config(persons, m));
      EXPECT_EQ(r.end_reason, "num_msgs");
      EXPECT_EQ(static_cast<std::int64_t>(r.history.size()), m) << "skippers=" << skippers;
      EXPECT_GE(r.turn_count, m);
    }
  }
}

TEST(Session, AllSkippersHitTheSafetyCap) {
  const SessionResult r = run_doc(base_config(json::array({always_skip("A"), always_skip("B")}), 3));
  EXPECT_EQ(r.end_reason, "turn_cap");
  EXPECT_EQ(r.turn_count, 1000);
  EXPECT_TRUE(r.history.empty());
}

TEST(Session, EventsFollowPayloadConventions) {
  json doc = base_config(json::array(
      {scripted_person("A", {"hello"}),
       {{"class", "first_generates_then_decides"},
        {"name", "B"},
        {"backend", {{"class", "scripted"}, {"turn", {"draft"}}, {"schedule", {"NO"}}}}}}),
      2);
  MemorySink sink;
  const SessionResult r = run_doc(doc, &sink);
  const auto events = sink.records();
  ASSERT_EQ(static_cast<std::int64_t>(events.size()), r.event_count);
  EXPECT_EQ(events.front().kind, EventKind::session_start);
  EXPECT_EQ(events.front().run_id, "0000000000000000");
  EXPECT_EQ(events.front().payload["started_at_unix_ms"], 0);
  EXPECT_EQ(events.front().payload["prompt_version"], "parlor-prompt/1");
  EXPECT_EQ(events[1].kind, EventKind::message);
  EXPECT_EQ(events[1].payload["sender"], "A");
  EXPECT_EQ(events[2].kind, EventKind::skip);
  EXPECT_EQ(events[2].payload["reason"], "declined");
  EXPECT_EQ(events[3].kind, EventKind::suppressed_draft);
  EXPECT_EQ(events[3].payload["draft"], "draft");
  EXPECT_EQ(events.back().kind, EventKind::session_end);
  EXPECT_EQ(events.back().payload["end_reason"], "num_msgs");
  for (std::size_t i = 0; i < events.size(); ++i) EXPECT_EQ(events[i].seq, static_cast<std::int64_t>(i));

  doc["experiment"]["record_suppressed_drafts"] = false;
  MemorySink quiet;
  run_doc(doc, &quiet);
  for (const auto& e : quiet.records()) EXPECT_NE(e.kind, EventKind::suppressed_draft);
}

TEST(Session, GoldenRunsAreByteIdentical) {
  MemorySink a;
  MemorySink b;
  run_doc(test::three_scripted(), &a);
  run_doc(test::three_scripted(), &b);
  EXPECT_EQ(a.text(), b.text());
  std::istringstream in(a.text());
  const TranscriptView view = load_transcript(in, parse_config(test::three_scripted()));
  EXPECT_EQ(view.history.size(), 20u);
  EXPECT_EQ(view.history.messages()[1].content, "Not my problem.");
  EXPECT_EQ(view.history.messages()[3].content, "Kindness matters.");
}

TEST(Session, BackendFailureBecomesTimeoutSkip) {
  json doc = base_config(json::array(
      {{{"class", "person_endpoint"},
        {"name", "A"},
        {"backend", {{"class", "scripted"}, {"turn", {nullptr, "back again"}}}}}}),
      1);
  MemorySink sink;
  const SessionResult r = run_doc(doc, &sink);
  EXPECT_EQ(r.history.size(), 1u);
  EXPECT_EQ(sink.records()[1].payload["reason"], "timeout");
}

TEST(Session, SurveysFireAndStayOutOfHistory) {
  json doc = base_config(json::array({scripted_person("A", {"a"}, {"3"}), scripted_person("B", {"b"}, {"nine"})}), 4);
  doc["survey"] = {{"questions", {{{"id", "q"}, {"prompt", "Rate it"}, {"kind", "integer_scale"}, {"min", 0}, {"max", 10}}}},
                   {"phases", {"pre", "every_cycle", "every_messages:3", "post"}}};
  MemorySink sink;
  const SessionResult r = run_doc(doc, &sink);
  EXPECT_EQ(r.survey_phases,
            (std::vector<std::string>{"pre", "cycle-1", "messages-3", "cycle-2", "post"}));
  EXPECT_EQ(r.survey_answers.size(), 2u * 5u);
  EXPECT_EQ(r.survey_answers[0].parsed_value, 3);
  EXPECT_FALSE(r.survey_answers[1].parsed_value.has_value());
  EXPECT_EQ(r.survey_answers[1].raw, "nine");
  for (const Message& m : r.history) EXPECT_NE(m.content.find_first_of("ab"), std::string::npos);
}

TEST(Session, VirtualTimeLimit) {
  json doc = base_config(json::array({scripted_person("A", {"a"})}));
  doc["endType"] = {{"class", "time_limit"}, {"limit_seconds", 600}};
  doc["clock"] = {{"tick_seconds", 30}};
  MemorySink sink;
  const SessionResult r = run_doc(doc, &sink);
  EXPECT_EQ(r.end_reason, "time_limit");
  EXPECT_EQ(r.elapsed, Millis{600000});
  EXPECT_EQ(r.turn_count, 20);
  EXPECT_EQ(sink.records().back().at_ms, 600000);
}

TEST(Session, SinkFailureAbortsTheSession) {
  const ExperimentConfig config = parse_config(test::three_scripted());
  FailingSink failing(5);
  const SessionResult r = run_session(config, build_persons(config), {&failing}, {});
  EXPECT_TRUE(r.aborted);
  EXPECT_EQ(r.end_reason, "aborted");
  EXPECT_NE(r.error.find("disk full"), std::string::npos);
}

TEST(Session, SeedOverrideChangesRandomHostOrder) {
  json doc = test::three_scripted(10);
  doc["host"] = {{"class", "host_random"}};
  MemorySink a;
  MemorySink b;
  run_doc(doc, &a, {.seed = 1});
  run_doc(doc, &b, {.seed = 2});
  EXPECT_NE(a.text(), b.text());
}

// --- batch ----------------------------------------------------------------------

TEST(Batch, DeriveSeedMatchesOracle) {
  EXPECT_EQ(derive_seed(0, 0), 0xe220a8397b1dcdafULL);
  const std::uint64_t expected[] = {0x63cbe1e459320dd7ULL, 0xbd64a5d9adefe000ULL,
                                    0x63033b0ca389c35aULL, 0x6e73e372e2338acaULL,
                                    0x1d0b14e4db018fedULL, 0x975835de1c9756ceULL,
                                    0x910a2dec89025cc1ULL, 0xe220a8397b1dcdafULL,
                                    0x875b9307abf55005ULL, 0x6aa9d61435dbe63eULL};
  for (std::uint64_t i = 0; i < 10; ++i) EXPECT_EQ(derive_seed(7, i), expected[i]);
}

TEST(Batch, CsvQuoting) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_field("two\nlines"), "\"two\nlines\"");
}

TEST(Batch, AggregatesUseSampleStddev) {
  std::vector<SurveyRow> rows = {{0, "post", "A", "q", 4, "4"}, {0, "post", "B", "q", 6, "6"},
                                 {1, "post", "A", "q", 4, "4"}, {1, "post", "B", "q", std::nullopt, "?"},
                                 {0, "pre", "A", "q", 2, "2"}};
  const auto agg = aggregate_survey(rows);
  ASSERT_EQ(agg.size(), 2u);
  EXPECT_EQ(agg[0].phase, "post");
  EXPECT_EQ(agg[0].count, 3u);
  EXPECT_NEAR(agg[0].mean, 14.0 / 3.0, 1e-12);
  EXPECT_NEAR(*agg[0].stddev, std::sqrt(4.0 / 3.0), 1e-12);
  EXPECT_FALSE(agg[1].stddev.has_value());
}

TEST(Batch, WritesFilesAndRejectsHumans) {
  test::TempDir dir;
  json doc = test::three_scripted(6);
  doc["persons"][0]["survey_script"] = {"5"};
  doc["survey"] = {{"questions", {{{"id", "q"}, {"prompt", "Rate"}, {"kind", "integer_scale"}, {"min", 0}, {"max", 10}}}}};
  BatchSpec spec{parse_config(doc), 3, 11, 2, dir.path(), true};
  const BatchSummary s = run_batch(spec);
  EXPECT_EQ(s.failed_runs, 0u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_TRUE(std::filesystem::exists(dir / ("run-" + std::to_string(i) + ".events.jsonl")));
  }
  EXPECT_EQ(s.csv_rows, 9u);
  const std::string csv = test::read_file(s.csv_path);
  EXPECT_EQ(csv.rfind("run,phase,person,question,value,raw\r\n", 0), 0u);
  EXPECT_TRUE(std::filesystem::exists(s.summary_path));

  json human = base_config(json::array({{{"class", "human"}, {"name", "V"}}}));
  EXPECT_THROW(run_batch({parse_config(human), 1, 0, 1, dir.path(), true}), ConfigError);
}

TEST(Batch, UnwritableRunIsReportedAsFailed) {
  test::TempDir dir;
  std::filesystem::create_directories(dir / "run-1.events.jsonl");
  BatchSpec spec{parse_config(test::three_scripted(3)), 3, 0, 1, dir.path(), true};
  const BatchSummary s = run_batch(spec);
  EXPECT_EQ(s.failed_runs, 1u);
  EXPECT_TRUE(s.runs[1].failed);
  EXPECT_FALSE(s.runs[0].failed);
  EXPECT_NE(test::read_file(s.summary_path).find("\"status\":\"failed\""), std::string::npos);
}
