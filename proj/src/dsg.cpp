#include "pdexn/dsg.hpp"

#include <deque>
#include <stdexcept>

namespace pdexn::pds {

using abstract::ControlState;
using abstract::Frame;
using abstract::Transition;

const abstract::AbsStore& Dsg::store_of(NodeId n) const {
  return widened ? global_store : nodes.at(n).store;
}

std::optional<FrameId> Dsg::find_frame(const Frame& f) const {
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i] == f) return static_cast<FrameId>(i);
  }
  return std::nullopt;
}

namespace {

class BudgetExhausted {};

class Engine {
 public:
  Engine(abstract::Machine& m, const DsgOptions& opt) : m_(m), opt_(opt) {
    if (opt.gc && opt.widen_store) throw std::invalid_argument("--widen-store cannot be combined with --gc");
    if (opt.lra) live_ = agc::live_registers(m.program());
    start_ = std::chrono::steady_clock::now();
  }

  Dsg run(MethodId entry) {
    g_.widened = opt_.widen_store;
    try {
      ControlState init = m_.inject(entry);
      g_.root = intern(std::move(init));
      add_top(g_.root, kEmptyTop);
      store_grew_ = false;
      while (!work_.empty()) {
        auto item = work_.front();
        work_.pop_front();
        pending_.erase(item);
        expand(item.first, item.second);
        drain();
        if (store_grew_) {
          store_grew_ = false;
          for (const auto& e : expanded_) schedule(e.first, e.second);
        }
      }
    } catch (const BudgetExhausted&) {
      g_.incomplete = true;
    }
    return std::move(g_);
  }

 private:
  NodeId intern(ControlState s) {
    if (opt_.widen_store) {
      store_grew_ |= abstract::join_into(g_.global_store, s.store);
      s.store.clear();
    }
    auto it = index_.find(s);
    if (it != index_.end()) return it->second;
    if (g_.nodes.size() >= opt_.node_budget) {
      g_.incomplete_reason = "node budget of " + std::to_string(opt_.node_budget) + " reached";
      throw BudgetExhausted();
    }
    const auto id = static_cast<NodeId>(g_.nodes.size());
    index_.emplace(s, id);
    g_.nodes.push_back(std::move(s));
    g_.eps_succ.push_back({id});
    eps_pred_.push_back({id});
    g_.tops.emplace_back();
    push_in_.emplace_back();
    push_out_.emplace_back();
    pop_out_.emplace_back();
    stack_fps_.emplace_back();
    return id;
  }

  FrameId frame_id(const Frame& f) {
    auto [it, fresh] = frame_index_.emplace(f, static_cast<FrameId>(g_.frames.size()));
    if (fresh) g_.frames.push_back(f);
    return it->second;
  }

  bool ignores_top(NodeId n) const { return m_.ignores_top(g_.nodes[n]); }

  void schedule(NodeId n, FrameId top) {
    if (ignores_top(n)) top = kEmptyTop;
    if (pending_.insert({n, top}).second) work_.emplace_back(n, top);
  }

  void add_top(NodeId n, FrameId top) {
    if (!g_.tops[n].insert(top).second) return;
    if (ignores_top(n)) {
      if (g_.tops[n].size() == 1) schedule(n, top);
    } else {
      schedule(n, top);
    }
  }

  // Schedules every expansion of n again; used when its stack roots grow.
  void reschedule(NodeId n) {
    for (FrameId t : g_.tops[n]) schedule(n, t);
  }

  void add_stack_fps(NodeId n, const std::set<abstract::ContextId>& fps) {
    if (!opt_.gc) return;
    std::deque<std::pair<NodeId, std::set<abstract::ContextId>>> work;
    work.emplace_back(n, fps);
    while (!work.empty()) {
      auto [x, add] = std::move(work.front());
      work.pop_front();
      bool grew = false;
      for (auto fp : add) grew |= stack_fps_[x].insert(fp).second;
      if (!grew) continue;
      reschedule(x);
      for (NodeId y : g_.eps_succ[x]) {
        if (y != x) work.emplace_back(y, stack_fps_[x]);
      }
      for (const auto& [f, b] : push_out_[x]) {
        auto with = stack_fps_[x];
        if (g_.frames[f].kind == Frame::Kind::Fun) with.insert(g_.frames[f].fp);
        work.emplace_back(b, std::move(with));
      }
    }
  }

  void add_summary(NodeId w, NodeId b) {
    if (g_.summaries.insert({w, b}).second) eps_queue_.emplace_back(w, b);
  }

  void add_closure(NodeId x, NodeId y) {
    if (!g_.eps_succ[x].insert(y).second) return;
    eps_pred_[y].insert(x);
    for (const auto& [w, f] : push_in_[x]) {
      add_top(y, f);
      if (auto it = pop_out_[y].find(f); it != pop_out_[y].end()) {
        for (NodeId c : it->second) add_summary(w, c);
      }
    }
    if (x == g_.root) add_top(y, kEmptyTop);
    if (opt_.gc && !stack_fps_[x].empty()) add_stack_fps(y, stack_fps_[x]);
  }

  void drain() {
    while (!eps_queue_.empty()) {
      auto [a, b] = eps_queue_.front();
      eps_queue_.pop_front();
      const std::vector<NodeId> preds(eps_pred_[a].begin(), eps_pred_[a].end());
      const std::vector<NodeId> succs(g_.eps_succ[b].begin(), g_.eps_succ[b].end());
      for (NodeId x : preds) {
        for (NodeId y : succs) add_closure(x, y);
      }
    }
  }

  void add_edge(NodeId a, StackAction act, NodeId b) {
    if (!g_.edges.insert({a, act, b}).second) return;
    switch (act.kind) {
      case StackAction::Kind::Eps:
        eps_queue_.emplace_back(a, b);
        break;
      case StackAction::Kind::Push: {
        push_in_[b].insert({a, act.frame});
        push_out_[a].insert({act.frame, b});
        const std::vector<NodeId> succs(g_.eps_succ[b].begin(), g_.eps_succ[b].end());
        for (NodeId y : succs) {
          add_top(y, act.frame);
          if (auto it = pop_out_[y].find(act.frame); it != pop_out_[y].end()) {
            for (NodeId c : it->second) add_summary(a, c);
          }
        }
        if (opt_.gc) {
          auto with = stack_fps_[a];
          const Frame& f = g_.frames[act.frame];
          if (f.kind == Frame::Kind::Fun) with.insert(f.fp);
          add_stack_fps(b, with);
        }
        break;
      }
      case StackAction::Kind::Pop: {
        pop_out_[a][act.frame].insert(b);
        const std::vector<NodeId> preds(eps_pred_[a].begin(), eps_pred_[a].end());
        for (NodeId x : preds) {
          for (const auto& [w, f] : push_in_[x]) {
            if (f == act.frame) add_summary(w, b);
          }
        }
        break;
      }
    }
  }

  void check_time() {
    if (opt_.time_budget <= 0) return;
    std::chrono::duration<double> spent = std::chrono::steady_clock::now() - start_;
    if (spent.count() > opt_.time_budget) {
      g_.incomplete_reason = "time budget of " + std::to_string(opt_.time_budget) + " s reached";
      throw BudgetExhausted();
    }
  }

  void expand(NodeId n, FrameId top) {
    check_time();
    ++g_.expansions;
    if (opt_.widen_store) expanded_.insert({n, top});
    ControlState state = g_.nodes[n];
    if (opt_.widen_store) state.store = g_.global_store;
    if (opt_.gc) state = agc::gc(state, stack_fps_[n], opt_.lra ? &live_ : nullptr);
    const Frame* top_frame = top == kEmptyTop ? nullptr : &g_.frames[top];
    std::vector<Transition> ts = m_.step(state, top_frame);
    for (Transition& t : ts) {
      if (t.link) g_.ec_links.insert(*t.link);
      StackAction act;
      if (t.action.kind == abstract::Action::Kind::Push) act = StackAction::push(frame_id(t.action.frame));
      if (t.action.kind == abstract::Action::Kind::Pop) act = StackAction::pop(frame_id(t.action.frame));
      add_edge(n, act, intern(std::move(t.next)));
    }
  }

  abstract::Machine& m_;
  DsgOptions opt_;
  agc::LivenessTable live_;
  std::chrono::steady_clock::time_point start_;
  Dsg g_;
  std::map<ControlState, NodeId> index_;
  std::map<Frame, FrameId> frame_index_;
  std::vector<std::set<NodeId>> eps_pred_;
  std::vector<std::set<std::pair<NodeId, FrameId>>> push_in_;
  std::vector<std::set<std::pair<FrameId, NodeId>>> push_out_;
  std::vector<std::map<FrameId, std::set<NodeId>>> pop_out_;
  std::vector<std::set<abstract::ContextId>> stack_fps_;
  std::deque<std::pair<NodeId, FrameId>> work_;
  std::set<std::pair<NodeId, FrameId>> pending_;
  std::set<std::pair<NodeId, FrameId>> expanded_;
  std::deque<std::pair<NodeId, NodeId>> eps_queue_;
  bool store_grew_ = false;
};

}  // namespace

Dsg synthesize_dsg(abstract::Machine& machine, MethodId entry, const DsgOptions& options) {
  return Engine(machine, options).run(entry);
}

std::set<NodeId> OracleResult::nodes() const {
  std::set<NodeId> out;
  for (const auto& r : reached) out.insert(r.node);
  return out;
}

namespace {

// Outgoing edges per node, in edge order.
std::vector<std::vector<Edge>> adjacency(const Dsg& g) {
  std::vector<std::vector<Edge>> out(g.nodes.size());
  for (const Edge& e : g.edges) out[e.from].push_back(e);
  return out;
}

}  // namespace

OracleResult legal_paths_oracle(const Dsg& g, std::size_t depth) {
  OracleResult r;
  if (g.nodes.empty()) return r;
  const auto adj = adjacency(g);
  std::deque<StackedNode> work;
  StackedNode start{g.root, {}};
  r.reached.insert(start);
  work.push_back(start);
  while (!work.empty()) {
    StackedNode cur = std::move(work.front());
    work.pop_front();
    for (const Edge& e : adj[cur.node]) {
      StackedNode next{e.to, {}};
      switch (e.action.kind) {
        case StackAction::Kind::Eps:
          next.stack = cur.stack;
          break;
        case StackAction::Kind::Push:
          if (cur.stack.size() >= depth) {
            r.truncated = true;
            continue;
          }
          next.stack.reserve(cur.stack.size() + 1);
          next.stack.push_back(e.action.frame);
          next.stack.insert(next.stack.end(), cur.stack.begin(), cur.stack.end());
          break;
        case StackAction::Kind::Pop:
          if (cur.stack.empty() || cur.stack.front() != e.action.frame) continue;
          next.stack.assign(cur.stack.begin() + 1, cur.stack.end());
          break;
      }
      if (r.reached.insert(next).second) work.push_back(std::move(next));
    }
  }
  return r;
}

std::set<NodeId> balanced_reach(const Dsg& g, NodeId from, std::size_t depth, bool* truncated) {
  const auto adj = adjacency(g);
  std::set<StackedNode> seen;
  std::deque<StackedNode> work;
  seen.insert({from, {}});
  work.push_back({from, {}});
  std::set<NodeId> out;
  while (!work.empty()) {
    StackedNode cur = std::move(work.front());
    work.pop_front();
    if (cur.stack.empty()) out.insert(cur.node);
    for (const Edge& e : adj[cur.node]) {
      StackedNode next{e.to, {}};
      switch (e.action.kind) {
        case StackAction::Kind::Eps:
          next.stack = cur.stack;
          break;
        case StackAction::Kind::Push:
          if (cur.stack.size() >= depth) {
            if (truncated) *truncated = true;
            continue;
          }
          next.stack.push_back(e.action.frame);
          next.stack.insert(next.stack.end(), cur.stack.begin(), cur.stack.end());
          break;
        case StackAction::Kind::Pop:
          if (cur.stack.empty() || cur.stack.front() != e.action.frame) continue;
          next.stack.assign(cur.stack.begin() + 1, cur.stack.end());
          break;
      }
      if (seen.insert(next).second) work.push_back(std::move(next));
    }
  }
  return out;
}

PdsOracleResult pds_oracle(abstract::Machine& machine, MethodId entry, std::size_t depth,
                           std::size_t max_configs) {
  PdsOracleResult r;
  using Config = std::pair<ControlState, std::vector<Frame>>;
  std::deque<Config> work;
  Config start{machine.inject(entry), {}};
  r.states.insert(start.first);
  r.configs.insert(start);
  work.push_back(std::move(start));
  while (!work.empty()) {
    Config cur = std::move(work.front());
    work.pop_front();
    const Frame* top = cur.second.empty() ? nullptr : &cur.second.front();
    for (Transition& t : machine.step(cur.first, top)) {
      Config next{std::move(t.next), {}};
      switch (t.action.kind) {
        case abstract::Action::Kind::Eps:
          next.second = cur.second;
          break;
        case abstract::Action::Kind::Push:
          if (cur.second.size() >= depth) {
            r.truncated = true;
            continue;
          }
          next.second.push_back(t.action.frame);
          next.second.insert(next.second.end(), cur.second.begin(), cur.second.end());
          break;
        case abstract::Action::Kind::Pop:
          next.second.assign(cur.second.begin() + 1, cur.second.end());
          break;
      }
      if (r.configs.size() >= max_configs) {
        r.truncated = true;
        return r;
      }
      if (r.configs.insert(next).second) {
        r.states.insert(next.first);
        work.push_back(std::move(next));
      }
    }
  }
  return r;
}

}  // namespace pdexn::pds
