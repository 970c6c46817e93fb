#pragma once

// Stack actions over an interned frame alphabet, and the net / stackify
// operations on action strings.

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pdexn::pds {

using FrameId = std::uint32_t;

struct StackAction {
  enum class Kind : std::uint8_t { Eps, Push, Pop };

  Kind kind = Kind::Eps;
  FrameId frame = 0;

  static StackAction eps() { return {}; }
  static StackAction push(FrameId f) { return {Kind::Push, f}; }
  static StackAction pop(FrameId f) { return {Kind::Pop, f}; }

  friend auto operator<=>(const StackAction&, const StackAction&) = default;
};

using ActionString = std::vector<StackAction>;

// Drops every eps and cancels adjacent push/pop pairs of the same frame
// until none remain.
ActionString net(const ActionString& g);

bool is_push_only(const ActionString& g);

// The stack an action string leaves behind, top first. Empty optional when
// the net form still pops.
std::optional<std::vector<FrameId>> stackify(const ActionString& g);

std::string to_string(const StackAction& a);

}  // namespace pdexn::pds
