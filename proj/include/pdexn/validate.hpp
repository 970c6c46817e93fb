#pragma once

#include <string>
#include <vector>

#include "pdexn/ir.hpp"

namespace pdexn {

struct Diagnostic {
  std::string code;
  std::string message;
  SourceLoc loc;
};

// Method-level well-formedness. Empty iff every register is declared,
// every label resolves, handler pushes and pops balance, no body falls off
// its end, and every class reference names a defined class.
std::vector<Diagnostic> validate(const Program& p);

std::string format(const Diagnostic& d);

}  // namespace pdexn
