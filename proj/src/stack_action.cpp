#include "pdexn/stack_action.hpp"

#include <algorithm>

namespace pdexn::pds {

ActionString net(const ActionString& g) {
  ActionString out;
  out.reserve(g.size());
  for (const StackAction& a : g) {
    if (a.kind == StackAction::Kind::Eps) continue;
    if (a.kind == StackAction::Kind::Pop && !out.empty() && out.back().kind == StackAction::Kind::Push &&
        out.back().frame == a.frame) {
      out.pop_back();
      continue;
    }
    out.push_back(a);
  }
  return out;
}

bool is_push_only(const ActionString& g) {
  return std::all_of(g.begin(), g.end(), [](const StackAction& a) { return a.kind == StackAction::Kind::Push; });
}

std::optional<std::vector<FrameId>> stackify(const ActionString& g) {
  ActionString n = net(g);
  if (!is_push_only(n)) return std::nullopt;
  std::vector<FrameId> stack;
  stack.reserve(n.size());
  for (auto it = n.rbegin(); it != n.rend(); ++it) stack.push_back(it->frame);
  return stack;
}

std::string to_string(const StackAction& a) {
  switch (a.kind) {
    case StackAction::Kind::Eps: return "eps";
    case StackAction::Kind::Push: return "+" + std::to_string(a.frame);
    case StackAction::Kind::Pop: return "-" + std::to_string(a.frame);
  }
  return "?";
}

}  // namespace pdexn::pds
