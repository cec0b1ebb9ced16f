#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "random_spec.hpp"
#include "mlfsm/interpreter.hpp"

using namespace mlfsm;
using namespace mlfsm::testing;

namespace {

ExecutionEnv two_clause_env() { return new_env(two_clause(), fixture_packages()); }

std::vector<ScriptStep> script_file(const std::string& name) {
  const auto path = fixture("scripts/" + name);
  return parse_script(read_text_file(path), path.string());
}

}  // namespace

TEST(NewEnv, TwoClauseInitial) {
  auto env = two_clause_env();
  EXPECT_EQ(env.current_state("a0"), "s0");
  EXPECT_EQ(env.current_state("a1"), "s0");
  EXPECT_EQ(env.value("p3", "x"), Value::integer(0));
  EXPECT_TRUE(env.trace().empty());
  EXPECT_FALSE(env.is_completed("a0"));
  EXPECT_FALSE(env.contract_completed());
}

TEST(NewEnv, VacuousCompletion) {
  auto env = new_env(load_contract_spec(R"({"C": {"states": ["done"], "transitions": []}})", "v.json"), {});
  EXPECT_TRUE(env.is_completed("a0"));
  EXPECT_TRUE(env.contract_completed());
  EXPECT_TRUE(env.trace().empty());
}

TEST(NewEnv, RejectsInvalidSpec) {
  EXPECT_THROW(new_env(load_spec_file(fixture("invalid/cycle.json")), {}), SpecNotValidated);
  try {
    new_env(load_spec_file(fixture("invalid/dup_trigger.json")), {});
    FAIL();
  } catch (const SpecNotValidated& e) {
    EXPECT_EQ(e.diagnostics().front().code, "V7");
  }
}

TEST(Fire, TwoClauseSequence) {
  auto env = two_clause_env();
  EXPECT_EQ(env.fire("a0", "trigger_x"), TransitionResult::guard_failed("package__p3_c1"));
  env.set_var("p3", "x", Value::integer(10));
  EXPECT_EQ(env.fire("a0", "trigger_x"), TransitionResult::ok());
  EXPECT_EQ(env.current_state("a0"), "s2");
  EXPECT_TRUE(env.is_completed("a0"));
  EXPECT_FALSE(env.contract_completed());
  EXPECT_EQ(env.fire("a1", "trigger_a"), TransitionResult::ok());
  EXPECT_EQ(env.current_state("a1"), "s2");
  EXPECT_TRUE(env.is_completed("a1"));
  EXPECT_TRUE(env.contract_completed());
}

TEST(Fire, PrematureAndUnknown) {
  auto env = two_clause_env();
  EXPECT_EQ(env.fire("a1", "trigger_a"), TransitionResult::guard_failed("automata__a0_iscompleted"));
  EXPECT_THROW(env.fire("a1", "trigger_zzz"), UnknownTrigger);
  EXPECT_THROW(env.fire("a7", "trigger_a"), UnknownClause);
  EXPECT_EQ(env.fire("a1", "trigger_b"), TransitionResult::no_transition());
  EXPECT_THROW(env.is_completed("a7"), UnknownClause);
}

TEST(Fire, FirstFailingGuardIsReported) {
  // a1 cannot reach s1 in the two-clause spec, so trigger_b starts from the initial state here.
  auto spec = load_contract_spec(R"({"B": {"states": ["s1","s2"], "transitions": [
      {"source":"s1","destination":"s2","trigger":"trigger_b","conditions":["package__p1_c2","package__p2_c1"]}]}})",
                                 "b.json");
  auto e2 = new_env(spec, fixture_packages());
  EXPECT_EQ(e2.fire("a0", "trigger_b"), TransitionResult::guard_failed("package__p1_c2"));
  e2.set_var("p1", "paid", Value::boolean(true));
  EXPECT_EQ(e2.fire("a0", "trigger_b"), TransitionResult::guard_failed("package__p2_c1"));
  e2.set_var("p2", "approvals", Value::integer(2));
  EXPECT_EQ(e2.fire("a0", "trigger_b"), TransitionResult::ok());
}

TEST(SetVar, Errors) {
  auto env = two_clause_env();
  EXPECT_NO_THROW(env.set_var("p3", "x", Value::integer(10)));
  EXPECT_THROW(env.set_var("p3", "x", Value::boolean(true)), TypeMismatch);
  EXPECT_THROW(env.set_var("p9", "x", Value::integer(1)), UnknownVariable);
  EXPECT_THROW(env.set_var("p3", "y", Value::integer(1)), UnknownVariable);
  EXPECT_EQ(env.trace().size(), 1u);
}

TEST(Trace, EventsAndJson) {
  auto env = two_clause_env();
  env.fire("a0", "trigger_x");
  env.set_var("p3", "x", Value::integer(10));
  env.fire("a0", "trigger_x");
  env.fire("a0", "trigger_x");
  const auto& t = env.trace();
  ASSERT_EQ(t.size(), 5u);
  EXPECT_EQ(t[0].kind, TraceKind::Rejected);
  EXPECT_EQ(t[1].kind, TraceKind::VarSet);
  EXPECT_EQ(t[2].kind, TraceKind::Fired);
  EXPECT_EQ(t[3].kind, TraceKind::Completed);
  EXPECT_EQ(t[4].kind, TraceKind::Rejected);
  EXPECT_EQ(t[4].reason, "NoSuchTransition");
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(t[i].seq, i + 1);

  std::istringstream lines(trace_to_jsonl(t));
  std::string line;
  std::vector<nlohmann::json> parsed;
  while (std::getline(lines, line)) parsed.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(parsed.size(), 5u);
  EXPECT_EQ(parsed[0]["reason"], "GuardFailed");
  EXPECT_EQ(parsed[0]["condition"], "package__p3_c1");
  EXPECT_EQ(parsed[1]["kind"], "var_set");
  EXPECT_EQ(parsed[1]["value"], 10);
  EXPECT_EQ(parsed[2]["destination"], "s2");
  EXPECT_EQ(parsed[3]["clause"], "a0");
}

TEST(RunScript, Fixtures) {
  auto env = two_clause_env();
  const auto trace = run_script(env, script_file("two_clause_happy.json"));
  EXPECT_GE(trace.size(), 5u);
  EXPECT_TRUE(env.contract_completed());

  auto env2 = two_clause_env();
  try {
    run_script(env2, script_file("two_clause_missing_set.json"));
    FAIL();
  } catch (const ScriptAssertionFailed& e) {
    EXPECT_EQ(e.step(), 1u);
  }

  auto env3 = two_clause_env();
  EXPECT_NO_THROW(run_script(env3, script_file("two_clause_rejected.json")));
  EXPECT_EQ(env3.trace().front().condition, "automata__a0_iscompleted");

  auto env4 = two_clause_env();
  EXPECT_TRUE(run_script(env4, {}).empty());
}

TEST(RunScript, AssertRejectedFailsWhenFired) {
  auto env = new_env(load_contract_spec(R"({"C": {"states": ["a","b"], "transitions": [
      {"source":"a","destination":"b","trigger":"go","conditions":[]}]}})",
                                        "c.json"),
                     {});
  EXPECT_THROW(run_script(env, {ScriptStep::assert_rejected("a0", "go")}), ScriptAssertionFailed);
}

TEST(ParseScript, SchemaAndRoundTrip) {
  EXPECT_THROW(parse_script("{", "s.json"), SyntaxError);
  EXPECT_THROW(parse_script("{}", "s.json"), SchemaError);
  EXPECT_THROW(parse_script(R"([{"cmd":"jump"}])", "s.json"), SchemaError);
  EXPECT_THROW(parse_script(R"([{"cmd":"fire","clause":"a0"}])", "s.json"), SchemaError);
  EXPECT_THROW(parse_script(R"([{"cmd":"fire","clause":"a0","trigger":"t","extra":1}])", "s.json"), SchemaError);
  EXPECT_THROW(parse_script(R"([{"cmd":"set","package":"p","var":"v","value":"x"}])", "s.json"), SchemaError);
  const auto steps = script_file("two_clause_happy.json");
  EXPECT_EQ(parse_script(script_to_json(steps), "again.json").size(), steps.size());
  EXPECT_EQ(script_to_json(parse_script(script_to_json(steps), "again.json")), script_to_json(steps));
}

// Fuzz: random event sequences on random specs keep states legal, leave the
// env untouched on rejection, and never revoke completion with default finals.
TEST(ExecutionEnvProperties, RandomEventSequences) {
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    auto rc = random_case(seed);
    auto env = new_env(rc.spec, rc.packages);
    std::mt19937_64 rng(seed);
    std::vector<ScriptStep> events;
    for (const auto& c : rc.spec.clauses)
      for (const auto& t : c.triggers()) events.push_back(ScriptStep::fire(c.id, t));
    for (const auto& v : rc.packages.at("g").variables) {
      if (v.type == ValueType::Int)
        for (const auto& d : *v.test_domain) events.push_back(ScriptStep::set("g", v.name, d));
      else
        for (bool b : {false, true}) events.push_back(ScriptStep::set("g", v.name, Value::boolean(b)));
    }
    if (events.empty()) continue;
    std::vector<bool> was_completed(rc.spec.clauses.size(), false);
    for (int step = 0; step < 40; ++step) {
      const auto& ev = events[rng() % events.size()];
      if (ev.cmd == ScriptStep::Cmd::Fire) {
        const auto before = env.snapshot();
        const auto result = env.fire(ev.clause, ev.trigger);
        if (!result.fired) {
          EXPECT_EQ(env.snapshot(), before);
        }
      } else {
        env.set_var(ev.package, ev.variable, ev.value);
      }
      for (std::size_t i = 0; i < rc.spec.clauses.size(); ++i) {
        const auto& c = rc.spec.clauses[i];
        EXPECT_TRUE(c.has_state(env.current_state(c.id)));
        const bool done = env.is_completed(c.id);
        if (!c.explicit_finals && was_completed[i]) {
          EXPECT_TRUE(done) << rc.spec_json;
        }
        was_completed[i] = was_completed[i] || done;
      }
    }
    std::map<std::string, int> completed_events;
    for (const auto& e : env.trace())
      if (e.kind == TraceKind::Completed) {
        EXPECT_EQ(++completed_events[e.clause], 1);
      }
    for (std::size_t i = 1; i < env.trace().size(); ++i) EXPECT_LT(env.trace()[i - 1].seq, env.trace()[i].seq);
  }
}
