#include "pdexn/analysis.hpp"

#include <chrono>
#include <stdexcept>

#include <json.hpp>

namespace pdexn {

using abstract::BaseValue;

pds::DsgOptions AnalysisConfig::dsg_options() const {
  pds::DsgOptions o;
  o.gc = gc || lra;
  o.lra = lra;
  o.widen_store = widen_store;
  o.node_budget = node_budget;
  o.time_budget = time_budget;
  return o;
}

namespace {

double mean_size(const std::map<std::string, std::set<std::string>>& m) {
  if (m.empty()) return 0;
  std::size_t total = 0;
  for (const auto& [k, v] : m) total += v.size();
  return static_cast<double>(total) / static_cast<double>(m.size());
}

}  // namespace

double Report::var_points_to_mean() const { return mean_size(var_points_to); }
double Report::throw_points_to_mean() const { return mean_size(throw_points_to); }

Report compute_report(const Program& p, const abstract::Machine& m, const std::vector<EntryGraph>& graphs) {
  Report r;
  const auto& ctx = m.contexts();
  for (const EntryGraph& eg : graphs) {
    const pds::Dsg& g = eg.dsg;
    r.nodes += g.nodes.size();
    r.edges += g.edges.size();
    r.summary_edges += g.summaries.size();
    if (g.incomplete) {
      r.incomplete = true;
      if (r.incomplete_reason.empty()) r.incomplete_reason = g.incomplete_reason;
    }
    for (pds::NodeId n = 0; n < g.nodes.size(); ++n) {
      const auto& state = g.nodes[n];
      const auto& store = g.store_of(n);
      if (!g.widened || n == 0) {
        for (const auto& [addr, val] : store) {
          if (addr.field) continue;
          auto& types = r.var_points_to[ctx.name(p, addr.base) + "/" + p.symbol_name(addr.name)];
          for (const BaseValue& b : val) types.insert(abstract::type_token(p, b));
        }
      }
      const Stmt& s = p.stmt(state.code);
      if (state.uncaught) {
        auto& classes = r.uncaught[p.stmt_name(state.code)];
        auto it = store.find(abstract::AbsAddr::reg(state.fp, kExn));
        if (it != store.end()) {
          for (const BaseValue& b : it->second) {
            if (b.kind == BaseValue::Kind::Obj) classes.insert(p.class_def(b.cls).name);
          }
        }
        continue;
      }
      if (s.kind == StmtKind::Throw) {
        auto& classes = r.throw_points_to[p.stmt_name(state.code)];
        for (const BaseValue& b : m.eval(s.value, state.fp, store)) {
          if (b.kind == BaseValue::Kind::Obj) classes.insert(p.class_def(b.cls).name);
        }
      }
    }
    for (const auto& link : g.ec_links) {
      r.ec_links.insert({p.stmt_name(link.thrower), p.stmt_name(link.handler)});
    }
  }
  r.unresolved_invocations = m.unresolved().size();
  return r;
}

AnalysisResult run_analysis(const Program& p, const AnalysisConfig& cfg) {
  if (cfg.gc && cfg.widen_store) throw std::invalid_argument("--widen-store cannot be combined with --gc or --lra");
  if (cfg.lra && cfg.widen_store) throw std::invalid_argument("--widen-store cannot be combined with --gc or --lra");
  const auto start = std::chrono::steady_clock::now();
  AnalysisResult r;
  r.config = cfg;
  r.machine = std::make_unique<abstract::Machine>(p, cfg.policy);
  std::vector<MethodId> entries;
  for (const std::string& name : cfg.entries) {
    auto id = p.find_method(name);
    if (!id) throw std::invalid_argument("unknown entry method '" + name + "'");
    if (p.method(*id).size == 0) throw std::invalid_argument("entry method '" + name + "' has no body");
    entries.push_back(*id);
  }
  const pds::DsgOptions opt = cfg.dsg_options();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    pds::DsgOptions o = opt;
    if (o.time_budget > 0) {
      std::chrono::duration<double> spent = std::chrono::steady_clock::now() - start;
      o.time_budget = std::max(o.time_budget - spent.count(), 1e-9);
    }
    r.graphs.push_back({entries[i], cfg.entries[i], pds::synthesize_dsg(*r.machine, entries[i], o)});
    if (r.graphs.back().dsg.incomplete) break;
  }
  r.report = compute_report(p, *r.machine, r.graphs);
  std::chrono::duration<double> spent = std::chrono::steady_clock::now() - start;
  r.report.elapsed_seconds = spent.count();
  return r;
}

std::string emit_json(const AnalysisResult& r) {
  using nlohmann::ordered_json;
  const Report& rep = r.report;
  ordered_json j;
  j["schema"] = 1;
  ordered_json cfg;
  cfg["input"] = r.config.input;
  cfg["entries"] = r.config.entries;
  cfg["policy"] = r.config.policy.name();
  cfg["gc"] = r.config.gc || r.config.lra;
  cfg["lra"] = r.config.lra;
  cfg["widen_store"] = r.config.widen_store;
  cfg["node_budget"] = r.config.node_budget;
  cfg["time_budget"] = r.config.time_budget;
  j["config"] = cfg;
  j["nodes"] = rep.nodes;
  j["edges"] = rep.edges;
  j["summary_edges"] = rep.summary_edges;

  ordered_json vpt;
  vpt["entries"] = rep.var_points_to.size();
  vpt["mean"] = rep.var_points_to_mean();
  ordered_json details = ordered_json::array();
  for (const auto& [addr, types] : rep.var_points_to) {
    details.push_back({{"address", addr}, {"types", types}});
  }
  vpt["details"] = details;
  j["var_points_to"] = vpt;

  ordered_json tpt;
  tpt["entries"] = rep.throw_points_to.size();
  tpt["mean"] = rep.throw_points_to_mean();
  ordered_json sites = ordered_json::array();
  for (const auto& [site, classes] : rep.throw_points_to) {
    sites.push_back({{"throw", site}, {"classes", classes}});
  }
  tpt["sites"] = sites;
  j["throw_points_to"] = tpt;

  ordered_json ec;
  ec["count"] = rep.ec_links.size();
  ordered_json links = ordered_json::array();
  for (const auto& [thrower, handler] : rep.ec_links) {
    links.push_back({{"throw", thrower}, {"handler", handler}});
  }
  ec["links"] = links;
  j["ec_links"] = ec;

  ordered_json uncaught = ordered_json::array();
  for (const auto& [site, classes] : rep.uncaught) {
    uncaught.push_back({{"throw", site}, {"classes", classes}});
  }
  j["uncaught"] = uncaught;
  j["unresolved_invocations"] = rep.unresolved_invocations;
  j["incomplete"] = rep.incomplete;
  if (rep.incomplete) j["incomplete_reason"] = rep.incomplete_reason;
  j["elapsed_seconds"] = rep.elapsed_seconds;
  return j.dump(2) + "\n";
}

}  // namespace pdexn
