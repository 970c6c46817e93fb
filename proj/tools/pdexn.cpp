// pdexn: pushdown exception-flow analysis for the S-expression bytecode.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "pdexn/analysis.hpp"
#include "pdexn/concrete.hpp"
#include "pdexn/parser.hpp"
#include "pdexn/validate.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitBudget = 2;

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "pdexn: cannot write '" << path << "'\n";
    return false;
  }
  out << text;
  return static_cast<bool>(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pushdown exception-flow analysis for an object-oriented bytecode"};
  app.require_subcommand(1);

  pdexn::AnalysisConfig cfg;
  std::string policy = "0cfa";
  std::vector<std::string> entries;
  auto* analyze = app.add_subcommand("analyze", "Build the Dyck state graph and report metrics");
  analyze->add_option("file", cfg.input, "Program in S-expression form")->required()->check(CLI::ExistingFile);
  analyze->add_option("--entry", entries, "Entry method as Class.method (repeatable; default Main.main)");
  analyze->add_option("--policy", policy, "Allocation policy: 0cfa, 1cfa or kcfa:K")->capture_default_str();
  analyze->add_flag("--gc", cfg.gc, "Abstract garbage collection before each transition");
  analyze->add_flag("--lra", cfg.lra, "Restrict collection roots to live registers (implies --gc)");
  analyze->add_flag("--widen-store", cfg.widen_store, "Share one global store across all states");
  analyze->add_option("--node-budget", cfg.node_budget, "Stop after this many graph nodes")->capture_default_str();
  analyze->add_option("--time-budget", cfg.time_budget, "Stop after this many seconds (0 = no limit)");
  analyze->add_option("--json", cfg.json_path, "Write the report as JSON ('-' for stdout)");
  analyze->add_option("--dot", cfg.dot_path, "Write the graph in DOT format");
  analyze->add_option("--trace", cfg.trace_path, "Run the concrete interpreter and write its step trace");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    cfg.policy = pdexn::abstract::Policy::parse(policy);
  } catch (const std::invalid_argument& e) {
    std::cerr << "pdexn: " << e.what() << "\n";
    return kExitUsage;
  }
  if (!entries.empty()) cfg.entries = entries;
  if (cfg.lra) cfg.gc = true;
  if (cfg.gc && cfg.widen_store) {
    std::cerr << "pdexn: --widen-store cannot be combined with --gc or --lra\n";
    return kExitUsage;
  }

  std::optional<pdexn::Program> program;
  try {
    program.emplace(pdexn::parse_program_file(cfg.input));
  } catch (const pdexn::ParseError& e) {
    std::cerr << cfg.input << ":" << e.loc().line << ":" << e.loc().col << ": " << e.code() << ": "
              << e.message() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "pdexn: " << e.what() << "\n";
    return kExitUsage;
  }
  auto diagnostics = pdexn::validate(*program);
  if (!diagnostics.empty()) {
    for (const auto& d : diagnostics) std::cerr << cfg.input << ":" << pdexn::format(d) << "\n";
    return kExitUsage;
  }

  pdexn::AnalysisResult result;
  try {
    result = pdexn::run_analysis(*program, cfg);
  } catch (const std::invalid_argument& e) {
    std::cerr << "pdexn: " << e.what() << "\n";
    return kExitUsage;
  }

  if (!cfg.trace_path.empty()) {
    std::ofstream trace(cfg.trace_path, std::ios::binary);
    if (!trace) {
      std::cerr << "pdexn: cannot write '" << cfg.trace_path << "'\n";
      return kExitUsage;
    }
    for (const auto& g : result.graphs) pdexn::concrete::evaluate(*program, g.entry, 10'000, &trace);
  }

  const std::string json = pdexn::emit_json(result);
  if (cfg.json_path == "-") {
    std::cout << json;
  } else if (!cfg.json_path.empty() && !write_file(cfg.json_path, json)) {
    return kExitUsage;
  }
  if (!cfg.dot_path.empty() && !write_file(cfg.dot_path, pdexn::emit_dot(result))) return kExitUsage;

  const auto& r = result.report;
  std::cerr << "nodes " << r.nodes << ", edges " << r.edges << ", summaries " << r.summary_edges
            << ", ec-links " << r.ec_links.size() << ", uncaught " << r.uncaught.size() << "\n";
  if (r.incomplete) {
    std::cerr << "pdexn: incomplete: " << r.incomplete_reason << "\n";
    return kExitBudget;
  }
  return kExitOk;
}
