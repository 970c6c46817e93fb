#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "harness.hpp"
#include "pdexn/analysis.hpp"
#include "pdexn/parser.hpp"

using namespace pdexn;
using pdexn::testing::load;
using pdexn::testing::read_file;
using pdexn::testing::test_path;

namespace {

AnalysisResult analyze(const Program& p, const std::string& input, const std::string& policy, bool gc = false,
                       bool lra = false) {
  AnalysisConfig cfg;
  cfg.input = input;
  cfg.policy = abstract::Policy::parse(policy);
  cfg.gc = gc;
  cfg.lra = lra;
  return run_analysis(p, cfg);
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == ' ')) s.pop_back();
  return s;
}

// Accepts the subset of DOT the emitter produces; returns the first bad
// line, or an empty string.
std::string dot_syntax_error(const std::string& dot) {
  static const std::regex id(R"([A-Za-z_][A-Za-z0-9_]*)");
  static const std::string quoted = R"("(?:[^"\\]|\\.)*")";
  static const std::string attr = R"([a-z]+=(?:)" + quoted + R"(|[A-Za-z0-9_.]+))";
  static const std::string attrs = R"(\[)" + attr + R"((?:, )" + attr + R"()*\])";
  static const std::regex open(R"(\s*(?:digraph (?:[A-Za-z_]\w*|)" + quoted + R"()|subgraph \w+) \{)");
  static const std::regex node_defaults(R"(\s*node )" + attrs + ";");
  static const std::regex label(R"(\s*label=)" + quoted + ";");
  static const std::regex node(R"(\s*\w+ )" + attrs + ";");
  static const std::regex edge(R"(\s*\w+ -> \w+ )" + attrs + ";");
  static const std::regex close(R"(\s*\})");
  int depth = 0;
  std::istringstream in(dot);
  std::string line;
  while (std::getline(in, line)) {
    if (std::regex_match(line, open)) {
      ++depth;
    } else if (std::regex_match(line, close)) {
      if (--depth < 0) return line;
    } else if (depth == 0 || !(std::regex_match(line, node_defaults) || std::regex_match(line, label) ||
                               std::regex_match(line, node) || std::regex_match(line, edge))) {
      return line;
    }
  }
  return depth == 0 ? "" : "<unbalanced braces>";
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PDEXN_CLI) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("intro metrics") {
  Program p = load("fixtures/intro.sexp");
  AnalysisResult r = analyze(p, "intro.sexp", "0cfa");
  const Report& rep = r.report;
  CHECK(rep.ec_links == std::set<std::pair<std::string, std::string>>{{"Main.maybeThrow:1", "Main.main:6"}});
  REQUIRE(rep.uncaught.count("Main.maybeThrow:1"));
  CHECK(rep.uncaught.at("Main.maybeThrow:1") == std::set<std::string>{"Exception"});
  CHECK(rep.throw_points_to.at("Main.maybeThrow:1") == std::set<std::string>{"Exception"});
  CHECK(rep.nodes == 11);
  CHECK(rep.summary_edges == 3);
  CHECK_FALSE(rep.incomplete);
}

TEST_CASE("polyvariance metrics") {
  Program p = load("fixtures/polyvariance.sexp");
  Report zero = analyze(p, "polyvariance.sexp", "0cfa").report;
  CHECK(zero.var_points_to.at("Main.id:0[]/p0") == std::set<std::string>{"A", "B"});
  Report one = analyze(p, "polyvariance.sexp", "1cfa").report;
  CHECK(one.var_points_to.at("Main.id:0[Main.main:2]/p0") == std::set<std::string>{"A"});
  CHECK(one.var_points_to.at("Main.id:0[Main.main:4]/p0") == std::set<std::string>{"B"});
  CHECK_FALSE(one.var_points_to.count("Main.id:0[]/p0"));
  CHECK(one.var_points_to_mean() < zero.var_points_to_mean());
}

TEST_CASE("golden outputs") {
  struct Case {
    std::string fixture, input, policy, golden;
  };
  for (const Case& c : {Case{"fixtures/intro.sexp", "intro.sexp", "0cfa", "golden/intro"},
                        Case{"fixtures/polyvariance.sexp", "polyvariance.sexp", "1cfa", "golden/polyvariance_1cfa"}}) {
    CAPTURE(c.fixture);
    Program p = load(c.fixture);
    AnalysisResult r = analyze(p, c.input, c.policy);
    CHECK(pdexn::testing::json_without_elapsed(emit_json(r)) == trim(read_file(test_path(c.golden + ".json"))));
    CHECK(emit_dot(r) == read_file(test_path(c.golden + ".dot")));
  }
}

TEST_CASE("json schema") {
  Program p = load("fixtures/nested_handlers.sexp");
  auto j = nlohmann::json::parse(emit_json(analyze(p, "x", "1cfa", true, true)));
  for (const char* key : {"schema", "config", "nodes", "edges", "summary_edges", "var_points_to", "throw_points_to",
                          "ec_links", "uncaught", "unresolved_invocations", "incomplete", "elapsed_seconds"}) {
    CHECK_MESSAGE(j.contains(key), key);
  }
  CHECK(j["config"]["gc"] == true);
  CHECK(j["config"]["lra"] == true);
  CHECK(j["ec_links"]["count"] == j["ec_links"]["links"].size());
}

TEST_CASE("outputs are deterministic and DOT is well formed") {
  for (const auto& f : pdexn::testing::all_fixtures()) {
    Program p = load(f);
    for (const auto& policy : pdexn::testing::policies()) {
      for (const auto& mode : pdexn::testing::modes()) {
        CAPTURE(f);
        CAPTURE(policy.name());
        CAPTURE(mode.name);
        AnalysisResult a = analyze(p, f, policy.name(), mode.gc, mode.lra);
        AnalysisResult b = analyze(p, f, policy.name(), mode.gc, mode.lra);
        CHECK(pdexn::testing::json_without_elapsed(emit_json(a)) == pdexn::testing::json_without_elapsed(emit_json(b)));
        const std::string dot = emit_dot(a);
        CHECK(dot == emit_dot(b));
        CHECK(dot_syntax_error(dot) == "");
      }
    }
  }
}

TEST_CASE("dot checker rejects garbage") {
  CHECK(dot_syntax_error("digraph g {\n  a -> b;\n") != "");
  CHECK(dot_syntax_error("digraph g {\n  a -> [label=\"x\"];\n}\n") != "");
  CHECK(dot_syntax_error("digraph g {\n  a [label=\"x\"];\n}\n") == "");
}

TEST_CASE("multiple entries and errors") {
  Program p = load("fixtures/polyvariance.sexp");
  AnalysisConfig cfg;
  cfg.entries = {"Main.main", "Main.id"};
  AnalysisResult r = run_analysis(p, cfg);
  CHECK(r.graphs.size() == 2);
  CHECK(emit_dot(r).find("cluster_1") != std::string::npos);

  cfg.entries = {"Main.nope"};
  CHECK_THROWS_AS(run_analysis(p, cfg), std::invalid_argument);
  cfg.entries = {"Main.main"};
  cfg.gc = true;
  cfg.widen_store = true;
  CHECK_THROWS_AS(run_analysis(p, cfg), std::invalid_argument);
}

TEST_CASE("command line") {
  namespace fs = std::filesystem;
  const std::string intro = test_path("fixtures/intro.sexp");
  const fs::path out = fs::temp_directory_path() / "pdexn_cli_test";
  fs::create_directories(out);
  const std::string json = (out / "r.json").string();
  const std::string dot = (out / "r.dot").string();
  const std::string trace = (out / "r.ndjson").string();

  CHECK(run_cli("analyze " + intro + " --json " + json + " --dot " + dot + " --trace " + trace) == 0);
  auto j = nlohmann::json::parse(read_file(json));
  CHECK(j["ec_links"]["count"] == 1);
  CHECK(dot_syntax_error(read_file(dot)) == "");
  CHECK_FALSE(read_file(trace).empty());

  CHECK(run_cli("analyze " + intro + " --policy kcfa:2 --gc --lra") == 0);
  CHECK(run_cli("analyze " + intro + " --widen-store") == 0);
  CHECK(run_cli("analyze " + test_path("fixtures/recursion.sexp") + " --policy 1cfa --node-budget 2") == 2);
  CHECK(run_cli("analyze " + intro + " --policy 9cfa") == 1);
  CHECK(run_cli("analyze " + intro + " --gc --widen-store") == 1);
  CHECK(run_cli("analyze " + intro + " --entry Main.nope") == 1);
  CHECK(run_cli("analyze " + test_path("corpus/malformed/undefined_label.sexp")) == 1);
  CHECK(run_cli("analyze " + test_path("corpus/malformed/lexical_string.sexp")) == 1);
  CHECK(run_cli("analyze /no/such/file.sexp") == 1);
  CHECK(run_cli("") == 1);
  fs::remove_all(out);
}
