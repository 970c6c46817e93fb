#include "harness.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "pdexn/parser.hpp"

#ifndef PDEXN_TEST_DIR
#error "PDEXN_TEST_DIR must point at the tests directory"
#endif

namespace pdexn::testing {

std::string test_path(const std::string& relative) { return std::string(PDEXN_TEST_DIR) + "/" + relative; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Program load(const std::string& relative) { return parse_program_file(test_path(relative)); }

std::vector<std::string> soundness_fixtures() {
  return {
      "fixtures/intro.sexp",           "fixtures/straight_line.sexp",   "fixtures/branches.sexp",
      "fixtures/loop.sexp",            "fixtures/single_call.sexp",     "fixtures/nested_calls.sexp",
      "fixtures/recursion.sexp",       "fixtures/try_catch.sexp",       "fixtures/nested_handlers.sexp",
      "fixtures/rethrow.sexp",         "fixtures/uncaught.sexp",        "fixtures/field_cycles.sexp",
      "fixtures/polyvariance.sexp",    "fixtures/virtual_dispatch.sexp", "fixtures/handler_reads_local.sexp",
  };
}

std::vector<std::string> figure_fixtures() {
  return {
      "fixtures/epsilon/fig1_intraprocedural.sexp",
      "fixtures/epsilon/fig2_locally_caught.sexp",
      "fixtures/epsilon/fig3_propagation.sexp",
      "fixtures/epsilon/fig4_return_under_handler.sexp",
      "fixtures/epsilon/fig5_uncaught.sexp",
  };
}

std::vector<std::string> dead_binding_fixtures() {
  return {
      "fixtures/dead_binding_check.sexp",
      "fixtures/dead_binding_reuse.sexp",
      "fixtures/dead_binding_nested.sexp",
  };
}

std::vector<std::string> all_fixtures() {
  auto out = soundness_fixtures();
  for (auto& f : figure_fixtures()) out.push_back(f);
  for (auto& f : dead_binding_fixtures()) out.push_back(f);
  return out;
}

std::vector<Mode> modes() { return {{"plain", false, false}, {"gc", true, false}, {"gc+lra", true, true}}; }

std::vector<abstract::Policy> policies() {
  return {abstract::Policy::parse("0cfa"), abstract::Policy::parse("1cfa"), abstract::Policy::parse("kcfa:2")};
}

pds::DsgOptions options_for(const Mode& m) {
  pds::DsgOptions o;
  o.gc = m.gc;
  o.lra = m.lra;
  return o;
}

MethodId main_of(const Program& p) {
  auto id = p.find_method("Main.main");
  if (!id) throw std::runtime_error("no Main.main");
  return *id;
}

concrete::Store live_view(const concrete::Config& c, const agc::LivenessTable* live) {
  using concrete::Addr;
  using concrete::Value;
  std::set<concrete::FramePtr> stack_fps;
  for (const auto& f : c.kont) {
    if (f.kind == concrete::Frame::Kind::Fun) stack_fps.insert(f.fp);
  }
  concrete::Store out;
  std::vector<concrete::ObjPtr> work;
  auto keep = [&](const Addr& a, const Value& v) {
    if (out.emplace(a, v).second && v.kind == Value::Kind::Obj) work.push_back(v.op);
  };
  for (const auto& [a, v] : c.store) {
    if (a.field) continue;
    bool in_stack = stack_fps.count(a.base) > 0;
    bool current = a.base == c.fp && (live == nullptr || live->is_live(c.code, a.name));
    if (in_stack || current) keep(a, v);
  }
  std::set<concrete::ObjPtr> seen;
  while (!work.empty()) {
    concrete::ObjPtr op = work.back();
    work.pop_back();
    if (!seen.insert(op).second) continue;
    for (auto it = c.store.lower_bound(Addr::fld(op, 0)); it != c.store.end() && it->first.field && it->first.base == op;
         ++it) {
      keep(it->first, it->second);
    }
  }
  return out;
}

SoundnessReport check_soundness(const Program& p, abstract::Policy policy, const Mode& mode, std::size_t fuel,
                                std::size_t depth) {
  SoundnessReport rep;
  const MethodId entry = main_of(p);
  concrete::EvalResult run = concrete::evaluate(p, entry, fuel);
  rep.configs = run.configs.size();
  rep.concrete_out_of_fuel = run.out_of_fuel;

  abstract::Machine m(p, policy);
  pds::Dsg g = pds::synthesize_dsg(m, entry, options_for(mode));
  if (g.incomplete) {
    rep.ok = false;
    rep.failure = "graph incomplete: " + g.incomplete_reason;
    return rep;
  }

  std::size_t deepest = 0;
  for (const auto& c : run.configs) deepest = std::max(deepest, c.kont.size());
  const std::size_t bound = std::min(depth, deepest + 1);
  pds::OracleResult oracle = pds::legal_paths_oracle(g, bound);
  rep.oracle_truncated = oracle.truncated;

  std::map<std::pair<StmtRef, abstract::ContextId>, std::vector<pds::NodeId>> by_control;
  for (pds::NodeId n = 0; n < g.nodes.size(); ++n) {
    if (!g.nodes[n].uncaught) by_control[{g.nodes[n].code, g.nodes[n].fp}].push_back(n);
  }

  agc::LivenessTable live;
  if (mode.lra) live = agc::live_registers(p);
  abstract::Abstraction alpha(p, m.allocator(), run.log);
  concrete::Store dead;

  auto fail = [&](std::size_t i, const std::string& why) {
    rep.ok = false;
    rep.failure = "step " + std::to_string(i) + " at " + p.stmt_name(run.configs[i].code) + ": " + why;
  };

  for (std::size_t i = 0; i < run.configs.size(); ++i) {
    const concrete::Config& c = run.configs[i];
    const abstract::ContextId fp = alpha.frame(c.fp);
    abstract::AbsStore store;
    if (mode.gc) {
      // Replay a collecting concrete machine: a binding dropped at an
      // earlier step stays dropped until it is written again.
      concrete::Config kept = c;
      for (auto d = dead.begin(); d != dead.end();) {
        auto cur = c.store.find(d->first);
        if (cur == c.store.end() || !(cur->second == d->second)) {
          d = dead.erase(d);
        } else {
          kept.store.erase(d->first);
          ++d;
        }
      }
      const Stmt& st = p.stmt(c.code);
      if (st.kind != StmtKind::Throw) {
        for (Symbol r : def_use(p, st).uses) {
          if (dead.count(concrete::Addr::reg(c.fp, r))) {
            fail(i, "reads collected register " + p.symbol_name(r));
            return rep;
          }
        }
      }
      store = alpha.store(kept.store);
      const concrete::Store view = live_view(kept, mode.lra ? &live : nullptr);
      for (const auto& [a, v] : kept.store) {
        if (!view.count(a)) dead.emplace(a, v);
      }
    } else {
      store = alpha.store(c.store);
    }
    std::vector<pds::FrameId> stack;
    bool frames_known = true;
    for (const abstract::Frame& f : alpha.stack(c.kont)) {
      auto id = g.find_frame(f);
      if (!id) {
        frames_known = false;
        break;
      }
      stack.push_back(*id);
    }
    if (!frames_known) {
      fail(i, "stack frame missing from graph");
      return rep;
    }
    auto it = by_control.find({c.code, fp});
    if (it == by_control.end()) {
      fail(i, "no node with this statement and frame pointer");
      return rep;
    }
    bool found = false;
    for (pds::NodeId n : it->second) {
      if (!abstract::leq(store, g.store_of(n))) continue;
      if (stack.size() <= bound) {
        if (oracle.reached.count({n, stack})) found = true;
      } else {
        // Deeper than the oracle looked; settle for a consistent top.
        if (g.tops[n].count(stack.front())) found = true;
      }
      if (found) break;
    }
    if (!found) {
      fail(i, "no node covers the abstracted store with this stack");
      return rep;
    }
  }

  if (run.terminal && run.terminal->kind == concrete::Terminal::Kind::Uncaught) {
    const concrete::Value& v = run.terminal->value;
    bool found = false;
    for (pds::NodeId n = 0; n < g.nodes.size() && !found; ++n) {
      const auto& s = g.nodes[n];
      if (!s.uncaught || s.code != run.terminal->at) continue;
      if (v.kind != concrete::Value::Kind::Obj) {
        found = true;
        break;
      }
      auto e = s.store.find(abstract::AbsAddr::reg(s.fp, kExn));
      if (e == s.store.end()) continue;
      for (const auto& b : e->second) {
        if (b.kind == abstract::BaseValue::Kind::Obj && b.cls == v.cls) found = true;
      }
    }
    if (!found) {
      rep.ok = false;
      rep.failure = "uncaught exception at " + p.stmt_name(run.terminal->at) + " has no sink node";
    }
  }
  return rep;
}

std::vector<std::set<Symbol>> brute_force_liveness(const Program& p, const MethodDef& m) {
  std::vector<std::set<Symbol>> live(m.size);
  std::vector<DefUse> du;
  for (StmtRef s = m.first; s < m.first + m.size; ++s) du.push_back(def_use(p, p.stmt(s)));

  for (std::uint32_t start = 0; start < m.size; ++start) {
    std::set<Symbol>& out = live[start];
    out.insert(kRet);
    out.insert(kExn);
    std::vector<bool> on_path(m.size, false);
    // killed: registers defined earlier on the current path.
    std::function<void(std::uint32_t, std::set<Symbol>)> walk = [&](std::uint32_t at, std::set<Symbol> killed) {
      for (Symbol u : du[at].uses) {
        if (!killed.count(u)) out.insert(u);
      }
      for (Symbol d : du[at].defs) killed.insert(d);
      on_path[at] = true;
      for (StmtRef n : successors(p, m.first + at)) {
        std::uint32_t k = n - m.first;
        if (!on_path[k]) walk(k, killed);
      }
      on_path[at] = false;
    };
    walk(start, {});
  }
  return live;
}

pds::ActionString rewrite_net(pds::ActionString g) {
  using pds::StackAction;
  g.erase(std::remove_if(g.begin(), g.end(), [](const StackAction& a) { return a.kind == StackAction::Kind::Eps; }),
          g.end());
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
      if (g[i].kind == StackAction::Kind::Push && g[i + 1].kind == StackAction::Kind::Pop &&
          g[i].frame == g[i + 1].frame) {
        g.erase(g.begin() + i, g.begin() + i + 2);
        changed = true;
        break;
      }
    }
  }
  return g;
}

std::optional<std::vector<pds::FrameId>> simulate_stack(const pds::ActionString& g) {
  std::vector<pds::FrameId> st;
  for (const auto& a : g) {
    if (a.kind == pds::StackAction::Kind::Push) {
      st.push_back(a.frame);
    } else if (a.kind == pds::StackAction::Kind::Pop) {
      if (st.empty() || st.back() != a.frame) return std::nullopt;
      st.pop_back();
    }
  }
  return std::vector<pds::FrameId>(st.rbegin(), st.rend());
}

pds::ActionString random_actions(std::mt19937& rng) {
  pds::ActionString g(rng() % 33);
  for (auto& a : g) {
    // Pushes slightly outnumber pops so defined stacks stay common.
    unsigned roll = rng() % 20;
    pds::FrameId f = rng() % 4;
    a = roll < 9 ? pds::StackAction::push(f) : roll < 16 ? pds::StackAction::pop(f) : pds::StackAction::eps();
  }
  return g;
}

Shape graph_shape(const std::string& fixture) {
  Program p = load(fixture);
  abstract::Machine m(p, abstract::Policy{0});
  pds::Dsg g = pds::synthesize_dsg(m, main_of(p), {});
  auto node = [&](pds::NodeId n) {
    return p.stmt_name(g.nodes[n].code) + "@" + m.contexts().name(p, g.nodes[n].fp) + (g.nodes[n].uncaught ? "!" : "");
  };
  Shape s;
  for (const pds::Edge& e : g.edges) {
    std::string act = "eps";
    if (e.action.kind != pds::StackAction::Kind::Eps) {
      act = (e.action.kind == pds::StackAction::Kind::Push ? "push " : "pop ") +
            abstract::to_string(p, m.contexts(), g.frames[e.action.frame]);
    }
    s.edges.insert(node(e.from) + " -" + act + "-> " + node(e.to));
  }
  for (const auto& [a, b] : g.summaries) s.summaries.insert(node(a) + " => " + node(b));
  return s;
}

std::map<std::string, Shape> expected_figure_shapes() {
  std::map<std::string, Shape> out;
  out["fixtures/epsilon/fig1_intraprocedural.sexp"] = {
      {
          "Main.main:0@Main.main:0[] -push handle(E,h)-> Main.main:1@Main.main:0[]",
          "Main.main:1@Main.main:0[] -pop handle(E,h)-> Main.main:2@Main.main:0[]",
      },
      {"Main.main:0@Main.main:0[] => Main.main:2@Main.main:0[]"},
  };
  out["fixtures/epsilon/fig2_locally_caught.sexp"] = {
      {
          "Main.main:0@Main.main:0[] -push fun(Main.main:0[],Main.main:1)-> Main.f:0@Main.f:0[]",
          "Main.f:0@Main.f:0[] -push handle(E,h)-> Main.f:1@Main.f:0[]",
          "Main.f:1@Main.f:0[] -eps-> Main.f:2@Main.f:0[]",
          "Main.f:2@Main.f:0[] -pop handle(E,h)-> Main.f:3@Main.f:0[]",
          "Main.f:3@Main.f:0[] -eps-> Main.f:4@Main.f:0[]",
          "Main.f:4@Main.f:0[] -pop fun(Main.main:0[],Main.main:1)-> Main.main:1@Main.main:0[]",
      },
      {
          "Main.main:0@Main.main:0[] => Main.main:1@Main.main:0[]",
          "Main.f:0@Main.f:0[] => Main.f:3@Main.f:0[]",
      },
  };
  // The thrower unwinds the call frame in place, then lands in the handler
  // still running on its own frame pointer.
  out["fixtures/epsilon/fig3_propagation.sexp"] = {
      {
          "Main.main:0@Main.main:0[] -eps-> Main.main:1@Main.main:0[]",
          "Main.main:1@Main.main:0[] -push handle(E,h)-> Main.main:2@Main.main:0[]",
          "Main.main:2@Main.main:0[] -push fun(Main.main:0[],Main.main:3)-> Main.thrower:0@Main.thrower:0[]",
          "Main.thrower:0@Main.thrower:0[] -pop fun(Main.main:0[],Main.main:3)-> Main.thrower:0@Main.thrower:0[]",
          "Main.thrower:0@Main.thrower:0[] -pop handle(E,h)-> Main.main:5@Main.thrower:0[]",
          "Main.main:5@Main.thrower:0[] -eps-> Main.main:6@Main.thrower:0[]",
      },
      {
          "Main.main:1@Main.main:0[] => Main.main:5@Main.thrower:0[]",
          "Main.main:2@Main.main:0[] => Main.thrower:0@Main.thrower:0[]",
      },
  };
  out["fixtures/epsilon/fig4_return_under_handler.sexp"] = {
      {
          "Main.main:0@Main.main:0[] -push fun(Main.main:0[],Main.main:1)-> Main.f:0@Main.f:0[]",
          "Main.f:0@Main.f:0[] -push handle(E,h)-> Main.f:1@Main.f:0[]",
          "Main.f:1@Main.f:0[] -pop handle(E,h)-> Main.f:1@Main.f:0[]",
          "Main.f:1@Main.f:0[] -pop fun(Main.main:0[],Main.main:1)-> Main.main:1@Main.main:0[]",
      },
      {
          "Main.main:0@Main.main:0[] => Main.main:1@Main.main:0[]",
          "Main.f:0@Main.f:0[] => Main.f:1@Main.f:0[]",
      },
  };
  out["fixtures/epsilon/fig5_uncaught.sexp"] = {
      {
          "Main.main:0@Main.main:0[] -eps-> Main.main:1@Main.main:0[]",
          "Main.main:1@Main.main:0[] -push fun(Main.main:0[],Main.main:2)-> Main.thrower:0@Main.thrower:0[]",
          "Main.thrower:0@Main.thrower:0[] -pop fun(Main.main:0[],Main.main:2)-> Main.thrower:0@Main.thrower:0[]",
          "Main.thrower:0@Main.thrower:0[] -eps-> Main.thrower:0@Main.thrower:0[]!",
      },
      {"Main.main:1@Main.main:0[] => Main.thrower:0@Main.thrower:0[]"},
  };
  return out;
}

std::string json_without_elapsed(const std::string& json) {
  auto j = nlohmann::ordered_json::parse(json);
  j.erase("elapsed_seconds");
  return j.dump(2);
}

}  // namespace pdexn::testing
