#pragma once

// Deterministic reference interpreter. Frame and object pointers come from
// monotone counters, so every run of the same program is identical.

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "pdexn/ir.hpp"

namespace pdexn::concrete {

using FramePtr = std::uint64_t;
using ObjPtr = std::uint64_t;

inline constexpr FramePtr kRootFrame = 0;

struct Value {
  enum class Kind : std::uint8_t { Obj, Int, Str, True, False, Null, Void };

  Kind kind = Kind::Void;
  std::int64_t i = 0;
  std::string s;
  ObjPtr op = 0;
  ClassId cls = kNoClass;

  static Value obj(ObjPtr op, ClassId cls) { return {Kind::Obj, 0, {}, op, cls}; }
  static Value integer(std::int64_t v) { return {Kind::Int, v, {}, 0, kNoClass}; }
  static Value str(std::string v) { return {Kind::Str, 0, std::move(v), 0, kNoClass}; }
  static Value boolean(bool b) { return {b ? Kind::True : Kind::False, 0, {}, 0, kNoClass}; }
  static Value null() { return {Kind::Null, 0, {}, 0, kNoClass}; }
  static Value void_value() { return {Kind::Void, 0, {}, 0, kNoClass}; }

  friend bool operator==(const Value&, const Value&) = default;
};

std::string to_string(const Program& p, const Value& v);

// (fp, register) when !field, (op, field) when field.
struct Addr {
  bool field = false;
  std::uint64_t base = 0;
  Symbol name = 0;

  static Addr reg(FramePtr fp, Symbol r) { return {false, fp, r}; }
  static Addr fld(ObjPtr op, Symbol f) { return {true, op, f}; }

  friend auto operator<=>(const Addr&, const Addr&) = default;
};

using Store = std::map<Addr, Value>;

struct Frame {
  enum class Kind : std::uint8_t { Fun, Handle };

  Kind kind = Kind::Fun;
  FramePtr fp = 0;            // Fun
  StmtRef resume = kNoStmt;   // Fun: caller's statements after the invoke
  ClassId cls = kNoClass;     // Handle
  StmtRef handler = kNoStmt;  // Handle: resolved label

  static Frame fun(FramePtr fp, StmtRef resume) { return {Kind::Fun, fp, resume, kNoClass, kNoStmt}; }
  static Frame handle(ClassId cls, StmtRef handler) { return {Kind::Handle, 0, kNoStmt, cls, handler}; }

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct Config {
  StmtRef code = kNoStmt;
  FramePtr fp = kRootFrame;
  Store store;
  std::vector<Frame> kont;  // top first

  friend bool operator==(const Config&, const Config&) = default;
};

struct Terminal {
  enum class Kind : std::uint8_t { Normal, Uncaught, Fault };

  Kind kind = Kind::Normal;
  Value value;               // returned value or uncaught exception
  std::string description;   // fault message
  StmtRef at = kNoStmt;
};

std::string_view to_string(Terminal::Kind kind);

// How one step changed the continuation.
enum class StackEffect : std::uint8_t { None, PushFun, PushHandle, PopFun, PopHandle };

std::string_view to_string(StackEffect e);

struct Step {
  std::variant<Config, Terminal> next;
  StackEffect effect = StackEffect::None;
};

// Where each pointer came from; the abstraction map uses this to replay the
// allocation policy over a concrete run.
struct AllocationLog {
  struct FrameInfo {
    StmtRef entry = kNoStmt;      // first statement of the callee
    StmtRef call_site = kNoStmt;  // kNoStmt for the root frame
    FramePtr parent = kRootFrame;
  };
  struct ObjectInfo {
    StmtRef site = kNoStmt;
    FramePtr fp = kRootFrame;  // frame that executed the new
  };
  std::map<FramePtr, FrameInfo> frames;
  std::map<ObjPtr, ObjectInfo> objects;
};

class MachineFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Interpreter {
 public:
  explicit Interpreter(const Program& p) : p_(p) {}

  Config inject(StmtRef entry);
  Step step(const Config& c);

  // Throw MachineFault on unbound registers, type errors and division by
  // zero.
  Value atomic_eval(const AExp& e, FramePtr fp, const Store& store) const;
  Value field_eval(const AExp& e, FramePtr fp, const Store& store, Symbol field) const;

  const AllocationLog& log() const { return log_; }

 private:
  Config apply_method(const Config& c, const Stmt& s);
  void init_object(Store& store, ObjPtr op, ClassId cls) const;

  const Program& p_;
  FramePtr next_fp_ = 1;
  ObjPtr next_op_ = 1;
  AllocationLog log_;
};

struct EvalResult {
  std::vector<Config> configs;  // in execution order, starting with inject
  std::optional<Terminal> terminal;
  bool out_of_fuel = false;
  AllocationLog log;
};

// Runs from the first statement of `entry` for at most `fuel` steps. When
// `trace` is given, one JSON object per step is written to it.
EvalResult evaluate(const Program& p, MethodId entry, std::size_t fuel, std::ostream* trace = nullptr);

// Truthiness used by the conditional: fall through unless the value is false.
bool falls_through(const Value& v);

}  // namespace pdexn::concrete
