#pragma once

// Abstract garbage collection and the live-register analysis that can
// narrow its root set.

#include <set>
#include <span>
#include <vector>

#include "pdexn/abstract.hpp"
#include "pdexn/ir.hpp"

namespace pdexn::agc {

using abstract::AbsAddr;
using abstract::AbsStore;
using abstract::ContextId;
using abstract::ControlState;
using abstract::Frame;

using AddrSet = std::set<AbsAddr>;

// Registers live before each statement, for every method of a program.
// `ret` and `exn` are live everywhere.
class LivenessTable {
 public:
  LivenessTable() = default;
  explicit LivenessTable(std::vector<std::vector<Symbol>> live) : live_(std::move(live)) {}

  // Sorted.
  const std::vector<Symbol>& live_before(StmtRef s) const { return live_.at(s); }
  bool is_live(StmtRef s, Symbol r) const;
  std::size_t size() const { return live_.size(); }

 private:
  std::vector<std::vector<Symbol>> live_;  // indexed by StmtRef
};

// Backward fixpoint over the intra-procedural CFG of m. The result is
// indexed by StmtRef; entries for other methods are left empty.
std::vector<std::vector<Symbol>> live_registers(const Program& p, const MethodDef& m);
LivenessTable live_registers(const Program& p);

// Field addresses in the store of every object that a's value names.
AddrSet addr_adjacent(const AbsAddr& a, const AbsStore& store);

// All register addresses in the store under the given frame pointer.
void frame_registers(ContextId fp, const AbsStore& store, AddrSet& out);

// Registers of every fun frame on the stack; handle frames add nothing.
AddrSet stack_root(std::span<const Frame> kont, const AbsStore& store);
AddrSet stack_root(const std::set<ContextId>& frame_pointers, const AbsStore& store);

// Current-frame registers (only those live at c.code when `live` is
// given) plus the stack roots.
AddrSet root(const ControlState& c, const AddrSet& stack_roots, const LivenessTable* live);
AddrSet root(const ControlState& c, std::span<const Frame> kont, const LivenessTable* live);

AddrSet reachable(const AddrSet& roots, const AbsStore& store);

AbsStore restrict_to(const AbsStore& store, const AddrSet& keep);

// The store restricted to what is reachable from the roots.
ControlState gc(const ControlState& c, std::span<const Frame> kont, const LivenessTable* live);
// Same, with stack roots drawn from a set of frame pointers that
// over-approximates the fun frames of every realizable stack.
ControlState gc(const ControlState& c, const std::set<ContextId>& stack_fps, const LivenessTable* live);

}  // namespace pdexn::agc
