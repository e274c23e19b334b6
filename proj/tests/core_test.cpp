#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>
#include <sstream>

#include "parlor/clock.hpp"
#include "parlor/config.hpp"
#include "parlor/events.hpp"
#include "parlor/hosts.hpp"
#include "parlor/prompt.hpp"
#include "parlor/registry.hpp"
#include "parlor/rng.hpp"
#include "parlor/transcript.hpp"
#include "support.hpp"

using namespace parlor;
using parlor::test::base_config;
using parlor::test::scripted_person;

namespace {

std::vector<PersonId> roster(std::size_t n) {
  std::vector<PersonId> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({"p" + std::to_string(i)});
  return out;
}

Message msg(std::int64_t seq, std::string sender, std::string content, std::int64_t at = 0) {
  return Message{seq, seq, PersonId{std::move(sender)}, std::move(content), Millis{at}};
}

}  // namespace

// --- history ----------------------------------------------------------------

TEST(ChatHistory, AppendsInOrder) {
  ChatHistory h;
  h.append(msg(0, "Katya", "hello"));
  h.append(msg(1, "Victor", "hi", 5));
  ASSERT_EQ(h.size(), 2u);
  EXPECT_EQ(h.messages()[1].content, "hi");
  const auto visible = h.visible_to(PersonId{"Juliet"});
  ASSERT_EQ(visible.size(), 2u);
  EXPECT_EQ(visible[0], (LabeledLine{"Katya", "hello"}));
  EXPECT_EQ(visible, h.visible_to(PersonId{"Katya"}));
}

TEST(ChatHistory, RejectsBrokenAppends) {
  ChatHistory h;
  h.append(msg(0, "Katya", "hello", 10));
  EXPECT_THROW(h.append(msg(2, "Katya", "skip a seq", 10)), InvariantViolation);
  EXPECT_THROW(h.append(msg(1, "Katya", "back in time", 9)), InvariantViolation);
  EXPECT_THROW(h.append(msg(1, "Katya", "   ", 10)), InvariantViolation);
  EXPECT_EQ(h.size(), 1u);
}

// --- clock ------------------------------------------------------------------

TEST(SessionClock, VirtualTimeIsTickTimesTurns) {
  auto clock = SessionClock::virtual_clock(Millis{30000}, Millis{600000});
  for (int i = 0; i < 7; ++i) clock.on_turn_granted();
  EXPECT_EQ(clock.elapsed(), Millis{210000});
  EXPECT_EQ(clock.remaining(), Millis{390000});
  const auto snap = clock.snapshot();
  EXPECT_EQ(snap.mode, ClockMode::virtual_time);
  EXPECT_EQ(snap.limit, Millis{600000});
}

TEST(SessionClock, WallClockIsMonotonic) {
  std::int64_t now = 1000;
  auto clock = SessionClock::wall_clock(Millis{5000}, [&] { return Millis{now}; });
  now = 3500;
  EXPECT_EQ(clock.elapsed(), Millis{2500});
  now = 3000;  // a misbehaving source never moves the clock backwards
  EXPECT_EQ(clock.elapsed(), Millis{2500});
  now = 9000;
  EXPECT_EQ(clock.remaining(), Millis{0});  // clamped once past the limit
}

// --- rng and hosts ------------------------------------------------------------

TEST(SplitMix64, MatchesOracle) {
  // tests/oracles/splitmix64_oracle.py
  SplitMix64 zero(0);
  EXPECT_EQ(zero.next(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(zero.next(), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(zero.next(), 0x06c45d188009454fULL);

  SplitMix64 g(42);
  const std::uint64_t expected[] = {0xbdd732262feb6e95ULL, 0x28efe333b266f103ULL,
                                    0x47526757130f9f52ULL, 0x581ce1ff0e4ae394ULL,
                                    0x09bc585a244823f2ULL};
  for (std::uint64_t e : expected) EXPECT_EQ(g.next(), e);
  static_assert(splitmix64(0) == 0xe220a8397b1dcdafULL);
}

TEST(RandomHost, Seed42FirstFiveIndices) {
  RandomHost host(roster(4), 42);
  std::vector<std::size_t> got;
  for (int i = 0; i < 5; ++i) got.push_back(host.next_speaker());
  EXPECT_EQ(got, (std::vector<std::size_t>{3, 1, 3, 0, 1}));
}

TEST(RandomHost, SameSeedSameSequenceAndCloneContinues) {
  RandomHost a(roster(5), 9);
  RandomHost b(roster(5), 9);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next_speaker(), b.next_speaker());
  auto c = a.clone();
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next_speaker(), c->next_speaker());
}

TEST(RoundRobinHost, ExamplesFromStartIndex) {
  RoundRobinHost host(roster(3), 0);
  std::vector<std::size_t> got;
  for (int i = 0; i < 5; ++i) got.push_back(host.next_speaker());
  EXPECT_EQ(got, (std::vector<std::size_t>{0, 1, 2, 0, 1}));

  RoundRobinHost from_two(roster(3), 2);
  EXPECT_EQ(from_two.next_speaker(), 2u);
  EXPECT_EQ(from_two.next_speaker(), 0u);
}

TEST(RoundRobinHost, EveryWindowHoldsEachPersonOnce) {
  for (std::size_t n = 1; n <= 10; ++n) {
    for (std::size_t start = 0; start < n; ++start) {
      RoundRobinHost host(roster(n), start);
      std::vector<std::size_t> seq;
      for (std::size_t t = 0; t < 5 * n; ++t) seq.push_back(host.next_speaker());
      for (std::size_t w = 0; w + n <= seq.size(); ++w) {
        std::set<std::size_t> window(seq.begin() + w, seq.begin() + w + n);
        ASSERT_EQ(window.size(), n) << "n=" << n << " start=" << start << " window=" << w;
      }
    }
  }
}

TEST(RoundRobinHost, StartOutOfRangeThrows) {
  EXPECT_THROW(RoundRobinHost(roster(3), 3), ConfigError);
  EXPECT_THROW(RoundRobinHost(roster(0), 0), std::invalid_argument);
}

TEST(MakeHost, BuildsFromClassSpec) {
  auto rr = make_host({"host_round_robin", {{"start_person_index", 1}}}, roster(2), 0);
  EXPECT_TRUE(rr->is_round_robin());
  EXPECT_EQ(rr->next_speaker(), 1u);
  auto random = make_host({"host_random", json::object()}, roster(4), 42);
  EXPECT_FALSE(random->is_round_robin());
  EXPECT_EQ(random->next_speaker(), 3u);
}

// --- registry and config ------------------------------------------------------

TEST(ClassRegistry, AliasesResolveToOneClass) {
  const auto& r = ClassRegistry::builtin();
  const auto* a = r.find(ClassCategory::host, "Round Robin Host");
  const auto* b = r.find(ClassCategory::host, "host_round_robin");
  const auto* c = r.find(ClassCategory::host, "HostRoundRobin");
  ASSERT_NE(a, nullptr);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  EXPECT_EQ(r.find(ClassCategory::end, "iteration")->canonical, "end_num_msgs");
  EXPECT_EQ(r.find(ClassCategory::person, "Round Robin Host"), nullptr);
}

TEST(Config, LoadsTheFigureDocument) {
  const ExperimentConfig config = load_config_file(test::data_dir() / "fig2.json");
  EXPECT_EQ(config.scenario, "You're discussing social welfare");
  EXPECT_EQ(config.host.class_name, "host_round_robin");
  EXPECT_EQ(config.host.params["start_person_index"], 0);
  ASSERT_EQ(config.persons.size(), 3u);
  EXPECT_EQ(config.persons[0].name, "Katya");
  EXPECT_EQ(config.persons[0].class_name, "person_endpoint");
  EXPECT_EQ(config.persons[1].class_name, "human");
  EXPECT_EQ(config.persons[2].class_name, "async_group_discussant");
  EXPECT_EQ(model_id_for(config.persons[0]), "mistralai/Mixtral-8x7B-v0.1");
  EXPECT_EQ(model_id_for(config.persons[2]), "meta-llama/Meta-Llama-3.1-8B");
  EXPECT_EQ(model_id_for(config.persons[2], "scheduling"), "microsoft/Phi-3-mini-4k-instruct");
  EXPECT_EQ(config.end.class_name, "end_num_msgs");
  EXPECT_EQ(config.end.params["max_num_msgs"], 20);
  EXPECT_FALSE(config.seed.has_value());
}

TEST(Config, VerbatimFigureHasASyntaxErrorWithPosition) {
  try {
    load_config_file(test::data_dir() / "fig2_verbatim.json");
    FAIL() << "expected a syntax error";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.kind(), ConfigErrorKind::syntax);
    ASSERT_TRUE(e.position().has_value());
    EXPECT_EQ(e.position()->line, 26u);
    EXPECT_NE(std::string(e.what()).find("line 26"), std::string::npos);
  }
}

TEST(Config, CanonicalFormRoundTrips) {
  const ExperimentConfig config = load_config_file(test::data_dir() / "fig2.json");
  const json canonical = config.to_json();
  EXPECT_TRUE(canonical.contains("end_type"));
  EXPECT_EQ(canonical["host"]["class"], "host_round_robin");
  const ExperimentConfig again = parse_config(canonical);
  EXPECT_EQ(again, config);
  EXPECT_EQ(config_hash(again), config_hash(config));
}

TEST(Config, ErrorsCarryKindAndPath) {
  struct Case {
    json doc;
    ConfigErrorKind kind;
    std::string path;
  };
  json base = base_config(json::array({scripted_person("A", {"x"})}));
  auto with = [&](auto edit) {
    json d = base;
    edit(d);
    return d;
  };
  const std::vector<Case> cases = {
      {with([](json& d) { d["persons"] = json::array(); }), ConfigErrorKind::constraint, "persons"},
      {with([](json& d) { d["host"]["class"] = "Moderator"; }), ConfigErrorKind::unknown_class,
       "host.class"},
      {with([](json& d) { d["surprise"] = 1; }), ConfigErrorKind::unknown_key, "surprise"},
      {with([](json& d) { d["persons"].push_back(d["persons"][0]); }),
       ConfigErrorKind::duplicate_name, "persons[1].name"},
      {with([](json& d) { d["endType"]["max_num_msgs"] = 0; }), ConfigErrorKind::out_of_range,
       "endType.max_num_msgs"},
      {with([](json& d) { d["endType"]["max_num_msgs"] = "20"; }), ConfigErrorKind::wrong_type,
       "endType.max_num_msgs"},
      {with([](json& d) { d.erase("endType"); }), ConfigErrorKind::missing_field, "endType"},
      {with([](json& d) { d["end_type"] = d["endType"]; }), ConfigErrorKind::constraint, "end_type"},
  };
  for (const Case& c : cases) {
    try {
      parse_config(c.doc);
      ADD_FAILURE() << "accepted: " << c.doc.dump();
    } catch (const ConfigError& e) {
      EXPECT_EQ(e.kind(), c.kind) << e.what();
      EXPECT_EQ(e.path(), c.path) << e.what();
    }
  }
}

TEST(Config, EmptyPersonsMessageNamesPersons) {
  json doc = base_config(json::array());
  try {
    parse_config(doc);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("persons"), std::string::npos);
  }
}

TEST(Config, CrossReferenceChecks) {
  json doc = base_config(json::array({scripted_person("A", {"x"}), scripted_person("B", {"y"})}));
  doc["host"]["start_person_index"] = 2;
  auto v = validate_cross_refs(parse_config(doc));
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].path, "host.start_person_index");

  json human = base_config(json::array({{{"class", "human"}, {"name", "Victor"}}}));
  const ExperimentConfig with_human = parse_config(human);
  EXPECT_FALSE(validate_cross_refs(with_human).empty());
  EXPECT_TRUE(validate_cross_refs(with_human, {.console_input = true}).empty());
  EXPECT_TRUE(validate_cross_refs(with_human, {.gateway_input = true}).empty());
  EXPECT_FALSE(validate_cross_refs(with_human, {.batch = true, .console_input = true}).empty());

  json aware = base_config(json::array({scripted_person("A", {"x"})}));
  aware["persons"][0]["time_aware"] = true;
  EXPECT_FALSE(validate_cross_refs(parse_config(aware)).empty());
  aware["endType"] = {{"class", "time_limit"}, {"limit_seconds", 60}};
  EXPECT_TRUE(validate_cross_refs(parse_config(aware)).empty());

  json cycle = base_config(json::array({scripted_person("A", {"x"})}));
  cycle["host"] = {{"class", "host_random"}};
  cycle["survey"] = {{"questions", {{{"id", "q"}, {"prompt", "?"}}}}, {"phases", {"every_cycle"}}};
  EXPECT_FALSE(validate_cross_refs(parse_config(cycle)).empty());
}

TEST(Config, SurveyAndClockDefaults) {
  json doc = base_config(json::array({scripted_person("A", {"x"})}));
  doc["survey"] = {{"questions",
                    {{{"id", "support"}, {"prompt", "How much?"}, {"kind", "integer_scale"},
                      {"min", 1}, {"max", 7}}}}};
  doc["clock"] = {{"tick_seconds", 30}};
  const ExperimentConfig config = parse_config(doc);
  ASSERT_TRUE(config.survey);
  EXPECT_EQ(config.survey->phases, (std::vector<SurveyPhase>{{SurveyPhase::Kind::post, 0}}));
  EXPECT_EQ(std::get<IntegerScale>(config.survey->questions[0].kind), (IntegerScale{1, 7}));
  EXPECT_EQ(config.effective_clock().tick, Millis{30000});
  EXPECT_FALSE(config.effective_time_limit().has_value());
}

// --- prompt -------------------------------------------------------------------

namespace {

TurnContext sample_context() {
  TurnContext ctx;
  ctx.scenario = "You're discussing social welfare";
  ctx.history = {{"Katya", "We should help."}, {"Victor", "Why?"}};
  ctx.profile.id = {"Juliet"};
  ctx.profile.background_story = "You're an undecisive person";
  ctx.profile.extra = {{"opinion", "undecided"}, {"opinion_strength", 3}};
  ctx.turn = 2;
  return ctx;
}

}  // namespace

TEST(Prompt, AssemblyIsDeterministicAndComplete) {
  const TurnContext ctx = sample_context();
  const Prompt a = assemble_prompt(ctx);
  EXPECT_EQ(a, assemble_prompt(ctx));
  EXPECT_NE(a.system_text.find("Scenario: You're discussing social welfare"), std::string::npos);
  EXPECT_NE(a.system_text.find("Background: You're an undecisive person"), std::string::npos);
  EXPECT_NE(a.system_text.find("Your opinion: undecided"), std::string::npos);
  EXPECT_NE(a.system_text.find("Strength of your opinion: 3"), std::string::npos);
  EXPECT_EQ(a.system_text.find("remaining"), std::string::npos);
  ASSERT_EQ(a.turns.size(), 2u);
  EXPECT_EQ(a.turns[0], (PromptTurn{"Katya", "We should help."}));
}

TEST(Prompt, RemainingTimeSentence) {
  TurnContext ctx = sample_context();
  auto clock = SessionClock::virtual_clock(Millis{60000}, Millis{600000});
  for (int i = 0; i < 4; ++i) clock.on_turn_granted();
  ctx.clock = clock.snapshot();
  const Prompt p = assemble_prompt(ctx);
  EXPECT_NE(p.system_text.find("You have 6 minutes 0 seconds remaining."), std::string::npos);
  EXPECT_EQ(p.system_text.find("The discussion started"), std::string::npos);
  ctx.profile.extra["time_aware"] = true;
  EXPECT_NE(assemble_prompt(ctx).system_text.find("The discussion started 4 minutes 0 seconds ago."),
            std::string::npos);
  EXPECT_EQ(remaining_time_sentence(Millis{-5}), "You have 0 minutes 0 seconds remaining.");
}

TEST(Prompt, SurveyPromptAppendsPrivateQuestion) {
  const TurnContext ctx = sample_context();
  const SurveyQuestion q{"support", "How much do you support welfare?", IntegerScale{1, 7}};
  const Prompt p = assemble_survey_prompt(ctx, q);
  ASSERT_EQ(p.turns.size(), 3u);
  EXPECT_EQ(p.turns.back().speaker, "");
  EXPECT_NE(p.turns.back().text.find("How much do you support welfare?"), std::string::npos);
  EXPECT_NE(p.turns.back().text.find("from 1 to 7"), std::string::npos);
  EXPECT_EQ(assemble_prompt(ctx).turns.size(), 2u);
}

// --- events and transcripts ---------------------------------------------------

using test::random_events;
using test::serialize_all;

TEST(Events, SerializationHasSortedKeysAndOneLine) {
  EventRecord r{3, EventKind::skip, 1500, {{"reason", "pass_token"}, {"person", "Juliet"}}, "0"};
  EXPECT_EQ(serialize_event(r),
            R"({"at_ms":1500,"kind":"skip","payload":{"person":"Juliet","reason":"pass_token"},"run_id":"0","seq":3})");
}

TEST(Transcript, RandomEventsRoundTripByteIdentical) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const std::string text = serialize_all(random_events(1000, seed));
    std::istringstream in(text);
    const TranscriptView view = load_transcript(in);
    EXPECT_TRUE(view.complete);
    EXPECT_EQ(view.events.size(), 1000u);
    EXPECT_EQ(serialize_all(view.events), text);
  }
}

TEST(Transcript, TamperedSeqIsDetected) {
  auto events = random_events(50, 3);
  events[20].seq = 21;
  std::istringstream in(serialize_all(events));
  try {
    load_transcript(in);
    FAIL();
  } catch (const TranscriptError& e) {
    EXPECT_EQ(e.kind(), TranscriptErrorKind::ordering);
    EXPECT_EQ(e.line(), 21u);
  }
}

TEST(Transcript, RejectsStructuralDamage) {
  const auto events = random_events(20, 4);
  {
    auto swapped = events;
    std::swap(swapped[0], swapped[1]);
    swapped[0].seq = 0;
    swapped[1].seq = 1;
    std::istringstream in(serialize_all(swapped));
    EXPECT_THROW(load_transcript(in), TranscriptError);
  }
  {
    std::istringstream in(serialize_all(events) + serialize_all({events[5]}));
    EXPECT_THROW(load_transcript(in), TranscriptError);
  }
  {
    std::istringstream in("{\"seq\":0}\n");
    try {
      load_transcript(in);
      FAIL();
    } catch (const TranscriptError& e) {
      EXPECT_EQ(e.kind(), TranscriptErrorKind::malformed);
    }
  }
}

TEST(Transcript, ConfigMismatchIsReported) {
  const auto events = random_events(10, 5);
  json other = test::three_scripted(5);
  std::istringstream in(serialize_all(events));
  try {
    load_transcript(in, parse_config(other));
    FAIL();
  } catch (const TranscriptError& e) {
    EXPECT_EQ(e.kind(), TranscriptErrorKind::config_mismatch);
  }
  std::istringstream again(serialize_all(events));
  EXPECT_NO_THROW(load_transcript(again, parse_config(test::three_scripted())));
}

TEST(Transcript, IncompleteFileLoads) {
  auto events = random_events(10, 6);
  events.pop_back();
  std::istringstream in(serialize_all(events));
  const TranscriptView view = load_transcript(in);
  EXPECT_FALSE(view.complete);
}
