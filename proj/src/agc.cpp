#include "pdexn/agc.hpp"

#include <algorithm>
#include <deque>

namespace pdexn::agc {

using abstract::BaseValue;

bool LivenessTable::is_live(StmtRef s, Symbol r) const {
  const auto& v = live_.at(s);
  return std::binary_search(v.begin(), v.end(), r);
}

std::vector<std::vector<Symbol>> live_registers(const Program& p, const MethodDef& m) {
  std::vector<std::vector<Symbol>> live(p.stmt_count());
  if (m.size == 0) return live;
  std::vector<DefUse> du;
  std::vector<std::vector<StmtRef>> succ;
  for (StmtRef s = m.first; s < m.first + m.size; ++s) {
    du.push_back(def_use(p, p.stmt(s)));
    succ.push_back(successors(p, s));
  }
  const std::vector<Symbol> always = {kRet, kExn};
  bool changed = true;
  while (changed) {
    changed = false;
    for (StmtRef s = m.first + m.size; s-- > m.first;) {
      const DefUse& d = du[s - m.first];
      std::vector<Symbol> out;
      for (StmtRef n : succ[s - m.first]) {
        std::vector<Symbol> merged;
        std::set_union(out.begin(), out.end(), live[n].begin(), live[n].end(), std::back_inserter(merged));
        out = std::move(merged);
      }
      std::vector<Symbol> kept;
      std::set_difference(out.begin(), out.end(), d.defs.begin(), d.defs.end(), std::back_inserter(kept));
      std::vector<Symbol> in;
      std::set_union(kept.begin(), kept.end(), d.uses.begin(), d.uses.end(), std::back_inserter(in));
      std::vector<Symbol> with_always;
      std::set_union(in.begin(), in.end(), always.begin(), always.end(), std::back_inserter(with_always));
      if (with_always != live[s]) {
        live[s] = std::move(with_always);
        changed = true;
      }
    }
  }
  return live;
}

LivenessTable live_registers(const Program& p) {
  std::vector<std::vector<Symbol>> all(p.stmt_count());
  for (const MethodDef& m : p.methods()) {
    auto part = live_registers(p, m);
    for (StmtRef s = m.first; s < m.first + m.size; ++s) all[s] = std::move(part[s]);
  }
  return LivenessTable(std::move(all));
}

AddrSet addr_adjacent(const AbsAddr& a, const AbsStore& store) {
  AddrSet out;
  auto it = store.find(a);
  if (it == store.end()) return out;
  for (const BaseValue& v : it->second) {
    if (v.kind != BaseValue::Kind::Obj) continue;
    for (auto f = store.lower_bound(AbsAddr::fld(v.op, 0));
         f != store.end() && f->first.field && f->first.base == v.op; ++f) {
      out.insert(f->first);
    }
  }
  return out;
}

void frame_registers(ContextId fp, const AbsStore& store, AddrSet& out) {
  for (auto it = store.lower_bound(AbsAddr::reg(fp, 0));
       it != store.end() && !it->first.field && it->first.base == fp; ++it) {
    out.insert(it->first);
  }
}

AddrSet stack_root(std::span<const Frame> kont, const AbsStore& store) {
  AddrSet out;
  for (const Frame& f : kont) {
    if (f.kind == Frame::Kind::Fun) frame_registers(f.fp, store, out);
  }
  return out;
}

AddrSet stack_root(const std::set<ContextId>& frame_pointers, const AbsStore& store) {
  AddrSet out;
  for (ContextId fp : frame_pointers) frame_registers(fp, store, out);
  return out;
}

AddrSet root(const ControlState& c, const AddrSet& stack_roots, const LivenessTable* live) {
  AddrSet out = stack_roots;
  AddrSet current;
  frame_registers(c.fp, c.store, current);
  for (const AbsAddr& a : current) {
    if (!live || c.uncaught || live->is_live(c.code, a.name)) out.insert(a);
  }
  return out;
}

AddrSet root(const ControlState& c, std::span<const Frame> kont, const LivenessTable* live) {
  return root(c, stack_root(kont, c.store), live);
}

AddrSet reachable(const AddrSet& roots, const AbsStore& store) {
  AddrSet seen;
  std::deque<AbsAddr> work;
  for (const AbsAddr& a : roots) {
    if (store.count(a) && seen.insert(a).second) work.push_back(a);
  }
  while (!work.empty()) {
    AbsAddr a = work.front();
    work.pop_front();
    for (const AbsAddr& b : addr_adjacent(a, store)) {
      if (seen.insert(b).second) work.push_back(b);
    }
  }
  return seen;
}

AbsStore restrict_to(const AbsStore& store, const AddrSet& keep) {
  AbsStore out;
  for (const auto& [a, v] : store) {
    if (keep.count(a)) out.emplace_hint(out.end(), a, v);
  }
  return out;
}

ControlState gc(const ControlState& c, std::span<const Frame> kont, const LivenessTable* live) {
  ControlState out = c;
  out.store = restrict_to(c.store, reachable(root(c, kont, live), c.store));
  return out;
}

ControlState gc(const ControlState& c, const std::set<ContextId>& stack_fps, const LivenessTable* live) {
  ControlState out = c;
  out.store = restrict_to(c.store, reachable(root(c, stack_root(stack_fps, c.store), live), c.store));
  return out;
}

}  // namespace pdexn::agc
