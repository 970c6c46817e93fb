// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when
// any criterion fails.

#include <chrono>
#include <iostream>
#include <random>
#include <sstream>

#include "harness.hpp"
#include "pdexn/analysis.hpp"

using namespace pdexn;
using namespace pdexn::testing;

namespace {

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  void fail(const std::string& why) {
    if (ok) detail << why;
    ok = false;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string tag(const std::string& fixture, const abstract::Policy& policy, const Mode& mode) {
  return fixture + " " + policy.name() + " " + mode.name;
}

Outcome soundness(bool gc_only) {
  Outcome o;
  const auto start = Clock::now();
  std::size_t runs = 0, configs = 0;
  for (const auto& f : soundness_fixtures()) {
    Program p = load(f);
    for (const auto& policy : policies()) {
      for (const auto& mode : modes()) {
        if (gc_only && !mode.gc) continue;
        auto rep = check_soundness(p, policy, mode);
        ++runs;
        configs += rep.configs;
        if (rep.concrete_out_of_fuel) o.fail(tag(f, policy, mode) + ": concrete run ran out of fuel");
        if (!rep.ok) o.fail(tag(f, policy, mode) + ": " + rep.failure);
      }
    }
  }
  const double t = seconds_since(start);
  if (!gc_only && t >= 60) o.fail("took " + std::to_string(t) + " s");
  if (o.ok) {
    o.detail << soundness_fixtures().size() << " fixtures, " << runs << " runs, " << configs
             << " concrete configurations, " << static_cast<int>(t * 1000) << " ms";
  }
  return o;
}

Outcome intro_precision() {
  Outcome o;
  Program p = load("fixtures/intro.sexp");
  AnalysisConfig cfg;
  AnalysisResult r = run_analysis(p, cfg);
  const Report& rep = r.report;
  const std::set<std::pair<std::string, std::string>> want{{"Main.maybeThrow:1", "Main.main:6"}};
  if (rep.ec_links != want) o.fail("E-C links differ: " + std::to_string(rep.ec_links.size()) + " found");

  // Both calls reach the same throw statement; tell them apart by the call
  // frame underneath the throw node.
  const pds::Dsg& g = r.graphs.at(0).dsg;
  const StmtRef call1_resume = p.method(main_of(p)).first + 2;
  const StmtRef call2_resume = p.method(main_of(p)).first + 5;
  const StmtRef handler = p.label_target(main_of(p), "handler1");
  auto oracle = pds::legal_paths_oracle(g, 16);
  bool call1_caught = false, call1_escapes = false, call2_caught = false, call2_escapes = false;
  for (const auto& sn : oracle.reached) {
    const auto& node = g.nodes[sn.node];
    if (node.uncaught || p.stmt(node.code).kind != StmtKind::Throw) continue;
    bool under1 = false, under2 = false;
    for (auto id : sn.stack) {
      const auto& f = g.frames[id];
      if (f.kind != abstract::Frame::Kind::Fun) continue;
      under1 |= f.resume == call1_resume;
      under2 |= f.resume == call2_resume;
    }
    bool catches = false, escapes = false;
    for (const auto& e : g.edges) {
      if (e.from != sn.node) continue;
      catches |= g.nodes[e.to].code == handler && !g.nodes[e.to].uncaught;
      escapes |= g.nodes[e.to].uncaught;
    }
    if (under1) call1_caught |= catches, call1_escapes |= escapes;
    if (under2) call2_caught |= catches, call2_escapes |= escapes;
  }
  if (!call1_caught) o.fail("call 1 never reaches handler 1");
  if (call1_escapes) o.fail("call 1 also escapes");
  if (call2_caught) o.fail("call 2 reaches handler 1");
  if (!call2_escapes) o.fail("call 2 not flagged uncaught");
  if (!rep.uncaught.count("Main.maybeThrow:1")) o.fail("no uncaught report");
  if (o.ok) o.detail << "1 E-C link (Main.maybeThrow:1 -> Main.main:6); call 2 uncaught";
  return o;
}

Outcome oracle_equivalence() {
  Outcome o;
  std::size_t graphs = 0, truncated = 0;
  for (const auto& f : all_fixtures()) {
    Program p = load(f);
    for (const auto& policy : policies()) {
      for (const auto& mode : modes()) {
        abstract::Machine m(p, policy);
        pds::Dsg g = pds::synthesize_dsg(m, main_of(p), options_for(mode));
        ++graphs;
        auto oracle = pds::legal_paths_oracle(g, 16);
        truncated += oracle.truncated;
        std::set<pds::NodeId> all;
        for (pds::NodeId n = 0; n < g.nodes.size(); ++n) all.insert(n);
        if (oracle.nodes() != all) o.fail(tag(f, policy, mode) + ": node sets differ");
        for (pds::NodeId n = 0; n < g.nodes.size(); ++n) {
          bool cut = false;
          if (pds::balanced_reach(g, n, 16, &cut) != g.eps_succ[n]) {
            o.fail(tag(f, policy, mode) + ": summary connectivity differs at node " + std::to_string(n));
          }
        }
        if (!mode.gc) {
          abstract::Machine fresh(p, policy);
          auto states = pds::pds_oracle(fresh, main_of(p), 16).states;
          if (std::set<abstract::ControlState>(g.nodes.begin(), g.nodes.end()) != states) {
            o.fail(tag(f, policy, mode) + ": pushdown states differ");
          }
        }
      }
    }
  }
  if (o.ok) o.detail << graphs << " graphs; " << truncated << " with stacks deeper than 16 (recursion)";
  return o;
}

Outcome figures() {
  Outcome o;
  for (const auto& [fixture, want] : expected_figure_shapes()) {
    Shape got = graph_shape(fixture);
    if (got.edges != want.edges || got.summaries != want.summaries) o.fail(fixture + ": structure differs");
  }
  if (o.ok) o.detail << expected_figure_shapes().size() << " figures match";
  return o;
}

Outcome action_algebra() {
  Outcome o;
  std::mt19937 rng(12345);
  std::size_t defined = 0;
  const int samples = 10'000;
  for (int i = 0; i < samples && o.ok; ++i) {
    pds::ActionString g = random_actions(rng);
    pds::ActionString n = pds::net(g);
    if (pds::net(n) != n) o.fail("net is not idempotent");
    if (n != rewrite_net(g)) o.fail("net disagrees with rewriting");
    auto st = pds::stackify(g);
    defined += st.has_value();
    if (st.has_value() != pds::is_push_only(n)) o.fail("stackify defined but net form pops, or the reverse");
    if (st != simulate_stack(g)) o.fail("stackify disagrees with an explicit stack");
    pds::ActionString tail = random_actions(rng);
    pds::FrameId gamma = rng() % 4;
    pds::ActionString joined = g, padded = g;
    joined.insert(joined.end(), tail.begin(), tail.end());
    padded.push_back(pds::StackAction::push(gamma));
    padded.push_back(pds::StackAction::pop(gamma));
    padded.insert(padded.end(), tail.begin(), tail.end());
    if (pds::stackify(padded) != pds::stackify(joined)) o.fail("inserted push/pop pair changed the stack");
  }
  if (o.ok) o.detail << samples << " strings, " << defined << " with a defined stack";
  return o;
}

Outcome gc_effect() {
  Outcome o;
  Outcome sound = soundness(true);
  if (!sound.ok) o.fail("soundness: " + sound.detail.str());

  std::mt19937 rng(20261016);
  std::size_t samples = 0;
  for (const auto& f : soundness_fixtures()) {
    Program p = load(f);
    agc::LivenessTable live = agc::live_registers(p);
    abstract::Machine m(p, abstract::Policy{1});
    pds::Dsg g = pds::synthesize_dsg(m, main_of(p), {});
    auto oracle = pds::legal_paths_oracle(g, 8);
    std::vector<pds::StackedNode> pool(oracle.reached.begin(), oracle.reached.end());
    for (int i = 0; i < 80; ++i) {
      const auto& pick = pool[rng() % pool.size()];
      const auto& c = g.nodes[pick.node];
      std::vector<abstract::Frame> kont;
      for (auto id : pick.stack) kont.push_back(g.frames[id]);
      const agc::LivenessTable* l = (i % 2 && !c.uncaught) ? &live : nullptr;
      auto once = agc::gc(c, kont, l);
      if (agc::gc(once, kont, l) != once) o.fail(f + ": gc not idempotent");
      ++samples;
    }
  }
  if (samples < 1000) o.fail("only " + std::to_string(samples) + " samples");

  std::ostringstream counts;
  for (const auto& f : dead_binding_fixtures()) {
    Program p = load(f);
    std::size_t n[3];
    int i = 0;
    for (const auto& mode : modes()) {
      abstract::Machine m(p, abstract::Policy{0});
      n[i++] = pds::synthesize_dsg(m, main_of(p), options_for(mode)).nodes.size();
    }
    counts << " " << f.substr(f.rfind('/') + 1) << " " << n[0] << "/" << n[1] << "/" << n[2];
    if (!(n[1] < n[0])) o.fail(f + ": gc did not shrink the graph");
    if (!(n[2] <= n[1])) o.fail(f + ": lra grew the graph");
  }
  if (o.ok) o.detail << "sound under gc and lra; " << samples << " idempotence samples; plain/gc/lra:" << counts.str();
  return o;
}

Outcome liveness() {
  Outcome o;
  std::size_t methods = 0;
  for (const auto& f : all_fixtures()) {
    Program p = load(f);
    agc::LivenessTable table = agc::live_registers(p);
    for (const MethodDef& m : p.methods()) {
      if (m.size == 0) continue;
      if (m.size > 20) o.fail(f + ": method over 20 statements");
      ++methods;
      auto brute = brute_force_liveness(p, m);
      for (std::uint32_t i = 0; i < m.size; ++i) {
        const auto& v = table.live_before(m.first + i);
        if (std::set<Symbol>(v.begin(), v.end()) != brute[i]) o.fail(p.stmt_name(m.first + i) + " in " + f);
      }
    }
  }
  if (o.ok) o.detail << methods << " methods";
  return o;
}

Outcome determinism() {
  Outcome o;
  std::size_t runs = 0;
  for (const auto& f : all_fixtures()) {
    Program p = load(f);
    for (const auto& policy : policies()) {
      std::vector<AnalysisConfig> cfgs;
      for (const auto& mode : modes()) {
        AnalysisConfig c;
        c.input = f;
        c.policy = policy;
        c.gc = mode.gc;
        c.lra = mode.lra;
        cfgs.push_back(c);
      }
      AnalysisConfig w;
      w.input = f;
      w.policy = policy;
      w.widen_store = true;
      cfgs.push_back(w);
      for (const auto& c : cfgs) {
        AnalysisResult a = run_analysis(p, c);
        AnalysisResult b = run_analysis(p, c);
        ++runs;
        if (json_without_elapsed(emit_json(a)) != json_without_elapsed(emit_json(b))) o.fail(f + ": JSON differs");
        if (emit_dot(a) != emit_dot(b)) o.fail(f + ": DOT differs");
      }
    }
  }
  if (o.ok) o.detail << runs << " configurations run twice";
  return o;
}

Outcome polyvariance() {
  Outcome o;
  Program p = load("fixtures/polyvariance.sexp");
  AnalysisConfig cfg;
  cfg.policy = abstract::Policy{0};
  Report zero = run_analysis(p, cfg).report;
  cfg.policy = abstract::Policy{1};
  Report one = run_analysis(p, cfg).report;
  auto size = [](const Report& r, const std::string& key) -> long {
    auto it = r.var_points_to.find(key);
    return it == r.var_points_to.end() ? -1 : static_cast<long>(it->second.size());
  };
  const long z = size(zero, "Main.id:0[]/p0");
  const long a = size(one, "Main.id:0[Main.main:2]/p0");
  const long b = size(one, "Main.id:0[Main.main:4]/p0");
  if (z != 2) o.fail("0cfa p0 size " + std::to_string(z));
  if (a != 1 || b != 1) o.fail("1cfa p0 sizes " + std::to_string(a) + "," + std::to_string(b));
  if (o.ok) o.detail << "0cfa p0: 2 types; 1cfa p0: 1 type in each of 2 contexts";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {1, "soundness", [] { return soundness(false); }},
      {2, "intro precision", intro_precision},
      {3, "graph/oracle equivalence", oracle_equivalence},
      {4, "exception edge structure", figures},
      {5, "stack-action algebra", action_algebra},
      {6, "gc correctness and effect", gc_effect},
      {7, "liveness oracle", liveness},
      {8, "determinism", determinism},
      {9, "polyvariance", polyvariance},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    failures += !o.ok;
    std::cout << (o.ok ? "PASS" : "FAIL") << " " << c.number << " " << c.name << ": " << o.detail.str() << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
