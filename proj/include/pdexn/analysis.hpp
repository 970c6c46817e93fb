#pragma once

// Orchestration: run the graph synthesis for each entry method, compute
// the points-to and exception metrics, and serialize them.

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "pdexn/abstract.hpp"
#include "pdexn/dsg.hpp"
#include "pdexn/ir.hpp"

namespace pdexn {

struct AnalysisConfig {
  std::string input;
  std::vector<std::string> entries = {"Main.main"};
  abstract::Policy policy;
  bool gc = false;
  bool lra = false;  // implies gc
  bool widen_store = false;
  std::size_t node_budget = 1'000'000;
  double time_budget = 0;  // seconds, zero for none
  std::string json_path;
  std::string dot_path;
  std::string trace_path;

  pds::DsgOptions dsg_options() const;
};

struct Report {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::size_t summary_edges = 0;
  // "context/register" -> type tokens
  std::map<std::string, std::set<std::string>> var_points_to;
  // throw statement -> class names
  std::map<std::string, std::set<std::string>> throw_points_to;
  // (throw statement, handler statement), by statement name
  std::set<std::pair<std::string, std::string>> ec_links;
  std::map<std::string, std::set<std::string>> uncaught;
  std::size_t unresolved_invocations = 0;
  bool incomplete = false;
  std::string incomplete_reason;
  double elapsed_seconds = 0;

  double var_points_to_mean() const;
  double throw_points_to_mean() const;
};

struct EntryGraph {
  MethodId entry = 0;
  std::string name;
  pds::Dsg dsg;
};

struct AnalysisResult {
  AnalysisConfig config;
  std::unique_ptr<abstract::Machine> machine;
  std::vector<EntryGraph> graphs;
  Report report;
};

// Throws std::invalid_argument for an unknown entry or an invalid option
// combination.
AnalysisResult run_analysis(const Program& p, const AnalysisConfig& cfg);

// Metrics for a set of graphs that share one machine.
Report compute_report(const Program& p, const abstract::Machine& m, const std::vector<EntryGraph>& graphs);

// Stable key order; `elapsed_seconds` is the only field that varies between
// identical runs.
std::string emit_json(const AnalysisResult& r);
std::string emit_dot(const AnalysisResult& r);

// One graph on its own, as a DOT digraph.
std::string dsg_to_dot(const Program& p, const abstract::ContextTable& contexts, const pds::Dsg& g,
                       const std::string& name);

}  // namespace pdexn
