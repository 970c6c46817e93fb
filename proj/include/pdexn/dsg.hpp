#pragma once

// Dyck state graph synthesis over the abstract machine, with incremental
// epsilon closure, plus bounded brute-force oracles used by the tests.

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pdexn/abstract.hpp"
#include "pdexn/agc.hpp"
#include "pdexn/stack_action.hpp"

namespace pdexn::pds {

using NodeId = std::uint32_t;

// Pseudo-frame recorded in a node's top set when the empty stack is
// realizable there.
inline constexpr FrameId kEmptyTop = ~FrameId{0};

struct DsgOptions {
  bool gc = false;
  bool lra = false;
  // One global store shared by every node. Not combinable with gc.
  bool widen_store = false;
  std::size_t node_budget = 1'000'000;
  // Seconds; zero means unlimited.
  double time_budget = 0;
};

struct Edge {
  NodeId from = 0;
  StackAction action;
  NodeId to = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct Dsg {
  // In widen-store mode node stores are empty and `global_store` holds the
  // shared store.
  std::vector<abstract::ControlState> nodes;
  std::vector<abstract::Frame> frames;  // indexed by FrameId
  std::set<Edge> edges;
  // Synthesized edges (w, b): w pushes a frame that is later popped into b.
  std::set<std::pair<NodeId, NodeId>> summaries;
  // Reflexive, transitive closure of eps edges and summaries.
  std::vector<std::set<NodeId>> eps_succ;
  // Frames that can be on top at each node, kEmptyTop included.
  std::vector<std::set<FrameId>> tops;
  std::set<abstract::EcLink> ec_links;
  abstract::AbsStore global_store;
  bool widened = false;
  NodeId root = 0;
  bool incomplete = false;
  std::string incomplete_reason;
  std::size_t expansions = 0;

  const abstract::AbsStore& store_of(NodeId n) const;
  std::optional<FrameId> find_frame(const abstract::Frame& f) const;
};

// Throws std::invalid_argument for gc together with widen_store.
Dsg synthesize_dsg(abstract::Machine& machine, MethodId entry, const DsgOptions& options);

// A DSG node with an explicit stack (top first).
struct StackedNode {
  NodeId node = 0;
  std::vector<FrameId> stack;

  friend auto operator<=>(const StackedNode&, const StackedNode&) = default;
};

struct OracleResult {
  std::set<StackedNode> reached;
  bool truncated = false;  // some push was cut off by the depth bound

  std::set<NodeId> nodes() const;
};

// Breadth-first search over (node, stack) along the graph's action edges,
// from the root with an empty stack.
OracleResult legal_paths_oracle(const Dsg& g, std::size_t depth);

// Nodes reachable from `from` along paths whose net action string is
// empty, found by explicit search with a local stack of at most `depth`.
std::set<NodeId> balanced_reach(const Dsg& g, NodeId from, std::size_t depth, bool* truncated);

// Control states reachable in the pushdown system itself, by explicit
// search over (state, stack) pairs driven by Machine::step.
struct PdsOracleResult {
  std::set<abstract::ControlState> states;
  std::set<std::pair<abstract::ControlState, std::vector<abstract::Frame>>> configs;
  bool truncated = false;
};

PdsOracleResult pds_oracle(abstract::Machine& machine, MethodId entry, std::size_t depth,
                           std::size_t max_configs = 200'000);

}  // namespace pdexn::pds
