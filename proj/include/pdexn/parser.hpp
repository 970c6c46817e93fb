#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "pdexn/ir.hpp"

namespace pdexn {

// Raised for lexical, arity and keyword errors and for class-table
// problems (unknown parent, duplicate class, inheritance cycle) that make
// the program impossible to index.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string code, std::string message, SourceLoc loc);

  const std::string& code() const { return code_; }
  SourceLoc loc() const { return loc_; }
  const std::string& message() const { return message_; }

 private:
  std::string code_;
  std::string message_;
  SourceLoc loc_;
};

Program parse_program(std::string_view text);
Program parse_program_file(const std::string& path);

// Canonical text for a program; parse_program(unparse(p)) indexes the same
// program as p.
std::string unparse(const Program& p);
std::string unparse(const Program& p, const AExp& e);
std::string unparse(const Program& p, const Stmt& s);

}  // namespace pdexn
