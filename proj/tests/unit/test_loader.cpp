#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "mlfsm/loader.hpp"

using namespace mlfsm;
using namespace mlfsm::testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("mlfsm_" + tag + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  void write(const std::string& name, const std::string& content) const { std::ofstream(path / name) << content; }
};

const char* kP3 =
    R"({"id":"p3","variables":[{"name":"x","type":"int","value":0}],"functions":[{"name":"c1","returns":"bool","body":"x >= 10"}]})";

}  // namespace

TEST(LoadContractSpec, TwoClause) {
  const auto spec = two_clause();
  EXPECT_EQ(spec.name, "two_clause");
  ASSERT_EQ(spec.clauses.size(), 2u);
  const auto& a = spec.clauses[0];
  EXPECT_EQ(a.name, "Clause A");
  EXPECT_EQ(a.id, "a0");
  EXPECT_EQ(a.states, (std::vector<std::string>{"s0", "s2"}));
  EXPECT_EQ(a.transitions.size(), 1u);
  EXPECT_EQ(a.initial, "s0");
  EXPECT_EQ(a.finals, std::vector<std::string>{"s2"});
  const auto& b = spec.clauses[1];
  EXPECT_EQ(b.name, "Clause B");
  EXPECT_EQ(b.id, "a1");
  EXPECT_EQ(b.states, (std::vector<std::string>{"s0", "s1", "s2"}));
  EXPECT_EQ(b.transitions.size(), 2u);
  EXPECT_EQ(b.transitions[1].conditions.size(), 2u);
  EXPECT_EQ(b.transitions[1].conditions[1].token, "package__p2_c1");
}

// Hand-written JSON with a trailing comma and a missing comma.
TEST(LoadContractSpec, TrailingAndMissingCommaIsSyntaxError) {
  const std::string verbatim = R"({
    "Clause A": {"states": ["s0","s2"], "transitions": [
        {"source": "s0", "destination": "s2", "trigger": "trigger_x", "conditions": ["package__p3_c1"]},
    ]},
    "Clause B": {"states": ["s0","s1","s2"], "transitions": [
        {"source": "s1", "destination": "s2", "trigger": "trigger_b", "conditions": ["package__p1_c2" "package__p2_c1"]}
    ]}
  })";
  EXPECT_THROW(load_contract_spec(verbatim, "verbatim.json"), SyntaxError);
}

TEST(LoadContractSpec, EmptyObjectIsSchemaError) { EXPECT_THROW(load_contract_spec("{}", "e.json"), SchemaError); }

TEST(LoadContractSpec, UndeclaredStateLoadsStructurally) {
  const auto spec = load_contract_spec(
      R"({"C": {"states": ["s0"], "transitions": [{"source":"s9","destination":"s0","trigger":"t","conditions":[]}]}})",
      "u.json");
  EXPECT_EQ(spec.clauses[0].transitions[0].source, "s9");
}

TEST(LoadContractSpec, UnknownKeyHasPointer) {
  try {
    load_contract_spec(R"({"C": {"states": ["s0"], "transitions": [], "colour": 1}})", "k.json");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.location().file, "k.json");
    EXPECT_EQ(e.location().json_pointer, "/C/colour");
  }
}

TEST(LoadContractSpec, TransitionKeysExact) {
  EXPECT_THROW(load_contract_spec(R"({"C": {"states": ["s0"], "transitions": [{"source":"s0","destination":"s0","trigger":"t"}]}})",
                                  "t.json"),
               SchemaError);
  try {
    load_contract_spec(
        R"({"C": {"states": ["s0"], "transitions": [{"source":"s0","destination":"s0","trigger":"t","conditions":[3]}]}})",
        "t.json");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.location().json_pointer, "/C/transitions/0/conditions/0");
  }
}

TEST(LoadContractSpec, DuplicateClauseName) {
  EXPECT_THROW(load_contract_spec(R"({"C": {"states": ["s0"], "transitions": []}, "C": {"states": ["s1"], "transitions": []}})",
                                  "d.json"),
               DuplicateClause);
}

TEST(LoadContractSpec, DuplicateNestedKeyIsSchemaError) {
  try {
    load_contract_spec(R"({"C": {"states": ["s0"], "states": ["s1"], "transitions": []}})", "d.json");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.location().json_pointer, "/C/states");
  }
}

TEST(LoadContractSpec, ExplicitIdCollision) {
  EXPECT_THROW(load_contract_spec(R"({"A": {"id": "a1", "states": ["s0"], "transitions": []},
                                      "B": {"states": ["s0"], "transitions": []}})",
                                  "c.json"),
               DuplicateClause);
}

TEST(LoadContractSpec, InitialAndFinalsDefaultsAndOverrides) {
  const auto spec = load_contract_spec(R"({
    "A": {"states": ["s0","s1","s2"], "transitions": [{"source":"s0","destination":"s1","trigger":"t","conditions":[]}]},
    "B": {"states": ["x","y","z"], "initial": "y", "finals": ["z","x"], "transitions": []}
  })",
                                       "f.json");
  EXPECT_EQ(spec.clauses[0].initial, "s0");
  EXPECT_EQ(spec.clauses[0].finals, (std::vector<std::string>{"s1", "s2"}));
  EXPECT_FALSE(spec.clauses[0].explicit_finals);
  EXPECT_EQ(spec.clauses[1].initial, "y");
  EXPECT_EQ(spec.clauses[1].finals, (std::vector<std::string>{"x", "z"}));
  EXPECT_TRUE(spec.clauses[1].explicit_finals);
}

TEST(LoadContractSpec, WrongKinds) {
  EXPECT_THROW(load_contract_spec("[]", "w.json"), SchemaError);
  EXPECT_THROW(load_contract_spec(R"({"C": []})", "w.json"), SchemaError);
  EXPECT_THROW(load_contract_spec(R"({"C": {"states": "s0", "transitions": []}})", "w.json"), SchemaError);
  EXPECT_THROW(load_contract_spec(R"({"C": {"states": [], "transitions": []}})", "w.json"), SchemaError);
  EXPECT_THROW(load_contract_spec("{", "w.json"), SyntaxError);
}

TEST(LoadPackage, MinimalP3) {
  const auto pkg = load_package(kP3, "p3.pkg.json");
  EXPECT_EQ(pkg.id, "p3");
  ASSERT_EQ(pkg.variables.size(), 1u);
  EXPECT_EQ(pkg.variables[0].type, ValueType::Int);
  EXPECT_EQ(pkg.variables[0].initial, Value::integer(0));
  ASSERT_EQ(pkg.functions.size(), 1u);
  const auto& c1 = pkg.functions[0];
  EXPECT_EQ(c1.returns, ValueType::Bool);
  EXPECT_EQ(eval_expr(*c1.body, Bindings{{"x", Value::integer(0)}}), Value::boolean(false));
  EXPECT_EQ(eval_expr(*c1.body, Bindings{{"x", Value::integer(10)}}), Value::boolean(true));
}

TEST(LoadPackage, UnderscoreIdRejected) {
  EXPECT_THROW(load_package(R"({"id":"p_1"})", "p.pkg.json"), SchemaError);
}

TEST(LoadPackage, IntReturningFunctionLoads) {
  const auto pkg = load_package(R"({"id":"p","functions":[{"name":"c","returns":"int","body":"1 + 2"}]})", "p.pkg.json");
  EXPECT_EQ(pkg.functions[0].returns, ValueType::Int);
}

TEST(LoadPackage, BodyParseErrorNamesFunction) {
  try {
    load_package(R"({"id":"p","functions":[{"name":"broken","returns":"bool","body":"x >"}],
                     "variables":[{"name":"x","type":"int","value":0}]})",
                 "p.pkg.json");
    FAIL();
  } catch (const ExprParseError& e) {
    EXPECT_EQ(e.function(), "broken");
    EXPECT_EQ(e.offset(), 3u);
  }
}

TEST(LoadPackage, BodyTypeErrors) {
  EXPECT_THROW(load_package(R"({"id":"p","functions":[{"name":"c","returns":"bool","body":"1 + 2"}]})", "p.pkg.json"),
               TypeError);
  EXPECT_THROW(load_package(R"({"id":"p","functions":[{"name":"c","returns":"bool","body":"y"}]})", "p.pkg.json"),
               UnboundName);
}

TEST(LoadPackage, ParamsBindAndShadowingRejected) {
  const auto pkg = load_package(R"({"id":"p","variables":[{"name":"x","type":"int","value":1}],
      "functions":[{"name":"ge","params":[{"name":"n","type":"int"}],"returns":"bool","body":"x >= n"}]})",
                                "p.pkg.json");
  EXPECT_EQ(pkg.functions[0].params.size(), 1u);
  EXPECT_THROW(load_package(R"({"id":"p","variables":[{"name":"x","type":"int","value":1}],
      "functions":[{"name":"ge","params":[{"name":"x","type":"int"}],"returns":"bool","body":"x >= 1"}]})",
                            "p.pkg.json"),
               SchemaError);
}

TEST(LoadPackage, VariableValueMustMatchType) {
  EXPECT_THROW(load_package(R"({"id":"p","variables":[{"name":"x","type":"int","value":true}]})", "p.pkg.json"),
               SchemaError);
  EXPECT_THROW(load_package(R"({"id":"p","variables":[{"name":"x","type":"int","value":1.5}]})", "p.pkg.json"),
               SchemaError);
  EXPECT_THROW(load_package(R"({"id":"p","variables":[{"name":"x","type":"int","value":9223372036854775808}]})",
                            "p.pkg.json"),
               SchemaError);
  EXPECT_THROW(load_package(R"({"id":"p","variables":[{"name":"x","type":"string","value":"a"}]})", "p.pkg.json"),
               SchemaError);
}

TEST(LoadPackage, DuplicateTopLevelKeyIsSchemaError) {
  EXPECT_THROW(load_package(R"({"id":"p","id":"q"})", "p.pkg.json"), SchemaError);
}

TEST(LoadPackage, StructuresCarried) {
  const auto pkg = load_package(
      R"({"id":"p","structures":[{"name":"R","fields":[{"name":"a","type":"int"},{"name":"b","type":"bool"}]}]})",
      "p.pkg.json");
  ASSERT_EQ(pkg.structures.size(), 1u);
  EXPECT_EQ(pkg.structures[0].fields[1].type, ValueType::Bool);
}

TEST(LoadPackageDir, FixturesAndEdgeCases) {
  TempDir dir("pkgdir");
  for (const char* id : {"p1", "p2", "p3"})
    fs::copy_file(fixture(std::string("packages/") + id + ".pkg.json"), dir.path / (std::string(id) + ".pkg.json"));
  dir.write("notes.json", "not a package");
  const auto set = load_package_dir(dir.path);
  EXPECT_EQ(set.size(), 3u);
  EXPECT_TRUE(set.contains("p1"));

  TempDir empty("empty");
  EXPECT_TRUE(load_package_dir(empty.path).empty());

  TempDir dup("dup");
  dup.write("a.pkg.json", R"({"id":"p1"})");
  dup.write("b.pkg.json", R"({"id":"p1"})");
  EXPECT_THROW(load_package_dir(dup.path), DuplicatePackageId);

  EXPECT_THROW(load_package_dir(dir.path / "missing"), IoError);
}

TEST(LoadPackageDir, ErrorsNameTheFile) {
  TempDir dir("bad");
  dir.write("zz.pkg.json", R"({"id":"p","bogus":1})");
  try {
    load_package_dir(dir.path);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(e.location().file.find("zz.pkg.json"), std::string::npos);
  }
}

// Any schema-valid document loads, whatever its referential problems.
TEST(LoadContractSpec, PhaseSeparation) {
  const auto spec = load_contract_spec(R"({"C": {"states": ["s0","s0"], "initial": "nope", "finals": ["gone"],
      "transitions": [{"source":"s0","destination":"s0","trigger":"9bad","conditions":["junk","automata__zz_iscompleted"]}]}})",
                                       "p.json");
  EXPECT_EQ(spec.clauses[0].transitions[0].conditions.size(), 2u);
  EXPECT_FALSE(spec.clauses[0].transitions[0].conditions[0].ref.has_value());
}
