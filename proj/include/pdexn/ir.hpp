#pragma once

// In-memory form of the register bytecode: classes, methods, statements and
// atomic expressions, plus the indexes both interpreters query (label
// targets, class hierarchy, method resolution).

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pdexn {

struct SourceLoc {
  int line = 0;
  int col = 0;
};

// Interned register and field names.
using Symbol = std::uint32_t;
inline constexpr Symbol kThis = 0;
inline constexpr Symbol kRet = 1;
inline constexpr Symbol kExn = 2;

// Index of a statement in the program-wide statement table. Since every
// method body is stored contiguously, a StmtRef also denotes the statement
// sequence (suffix of the body) that starts at it.
using StmtRef = std::uint32_t;
inline constexpr StmtRef kNoStmt = ~StmtRef{0};

using ClassId = std::uint32_t;
inline constexpr ClassId kObjectClass = 0;
inline constexpr ClassId kNoClass = ~ClassId{0};

using MethodId = std::uint32_t;

enum class InvokeKind : std::uint8_t { Static, Direct, Virtual, Interface, Super };

enum class AtomicOp : std::uint8_t {
  Add, Sub, Mul, Div, Mod, Eq, Lt, Le, Not, And, Or, StringConcat
};

std::string_view to_string(InvokeKind kind);
std::string_view to_string(AtomicOp op);
std::optional<AtomicOp> atomic_op_from_name(std::string_view name);
std::optional<InvokeKind> invoke_kind_from_name(std::string_view name);
int arity(AtomicOp op);

struct AExp {
  enum class Kind : std::uint8_t { This, True, False, Null, Void, Reg, Int, Str, Op, InstanceOf };

  Kind kind = Kind::Void;
  Symbol reg = 0;           // Reg, and kThis for This
  std::int64_t int_value = 0;
  std::string text;         // Str payload, or the class name of InstanceOf
  ClassId cls = kNoClass;   // InstanceOf, resolved at parse time when known
  AtomicOp op = AtomicOp::Add;
  std::vector<AExp> args;   // Op operands, InstanceOf subject
};

enum class StmtKind : std::uint8_t {
  Label, Nop, Line, Goto, If, Assign, New, Invoke, Return,
  FieldPut, FieldGet, PushHandler, PopHandler, Throw
};

std::string_view to_string(StmtKind kind);

struct Stmt {
  StmtKind kind = StmtKind::Nop;
  StmtRef id = kNoStmt;
  MethodId method = 0;
  std::uint32_t ordinal = 0;
  SourceLoc loc;
  // Number carried by the closest preceding (line n) in the same body.
  std::optional<std::int64_t> line;

  Symbol reg = 0;           // Assign / New / FieldGet destination
  Symbol field = 0;         // FieldPut / FieldGet
  std::string label;        // Label, Goto, If, PushHandler
  StmtRef target = kNoStmt; // resolved label for Goto, If, PushHandler
  std::string class_name;   // New, PushHandler, Invoke
  ClassId cls = kNoClass;
  std::string method_name;  // Invoke
  InvokeKind invoke_kind = InvokeKind::Static;
  std::vector<AExp> args;   // Invoke
  std::vector<std::string> arg_types;
  AExp value;               // Assign, Return, Throw, If condition, FieldPut value
  AExp object;              // FieldPut / FieldGet receiver
  std::int64_t line_number = 0;
};

struct FieldDef {
  std::vector<std::string> attributes;
  Symbol name = 0;
  std::string type;
  SourceLoc loc;
};

struct MethodDef {
  std::vector<std::string> attributes;
  std::string name;
  std::vector<std::string> param_types;
  std::string return_type;
  std::vector<std::string> throws;
  std::uint32_t limit = 0;
  ClassId owner = kNoClass;
  MethodId id = 0;
  StmtRef first = 0;
  std::uint32_t size = 0;
  SourceLoc loc;

  std::size_t arity() const { return param_types.size(); }
  bool has_attribute(std::string_view attr) const;
  StmtRef entry() const { return first; }
  bool contains(StmtRef s) const { return s >= first && s < first + size; }
};

struct ClassDef {
  std::vector<std::string> attributes;
  std::string name;
  std::string parent_name;
  ClassId id = kNoClass;
  ClassId parent = kNoClass;  // kNoClass only for Object
  std::vector<FieldDef> fields;
  std::vector<MethodId> methods;
  SourceLoc loc;
  bool implicit = false;      // the built-in root class
};

// An immutable, indexed program. Built by parse_program; move-only because
// the indexes refer into its own tables.
class Program {
 public:
  Program();
  Program(Program&&) = default;
  Program& operator=(Program&&) = default;
  Program(const Program&) = delete;
  Program& operator=(const Program&) = delete;

  std::span<const ClassDef> classes() const { return classes_; }
  const ClassDef& class_def(ClassId id) const { return classes_.at(id); }
  std::optional<ClassId> find_class(std::string_view name) const;
  // Throws std::out_of_range for an unknown class.
  ClassId class_id(std::string_view name) const;

  std::span<const MethodDef> methods() const { return methods_; }
  const MethodDef& method(MethodId id) const { return methods_.at(id); }
  // "Class.method" lookup; also accepts a bare method name when unique.
  std::optional<MethodId> find_method(std::string_view qualified) const;

  std::size_t stmt_count() const { return stmts_.size(); }
  const Stmt& stmt(StmtRef ref) const { return stmts_.at(ref); }
  const MethodDef& method_of(StmtRef ref) const { return methods_.at(stmts_.at(ref).method); }
  std::span<const Stmt> body(const MethodDef& m) const;
  // The statement sequence starting at ref, through the end of its body.
  std::span<const Stmt> suffix(StmtRef ref) const;
  // Successor in program order, or kNoStmt past the end of the body.
  StmtRef next(StmtRef ref) const;

  // The label table: statement sequence beginning at (label name) inside m.
  // Throws std::out_of_range for an unknown label.
  StmtRef label_target(MethodId m, std::string_view label) const;
  std::span<const Stmt> stmt_seq(MethodId m, std::string_view label) const;

  bool is_subclass(ClassId sub, ClassId super) const;
  bool is_subclass(std::string_view sub, std::string_view super) const;

  // Nearest applicable definition: walks the parent chain from `start` for
  // virtual, interface and super invokes, looks only at `start` for static
  // and direct ones. Abstract (bodiless) methods never resolve.
  const MethodDef* resolve_method(ClassId start, std::string_view name, std::size_t arity,
                                  InvokeKind kind) const;

  // Every field declared on cls or an ancestor, nearest class first.
  std::vector<Symbol> all_fields(ClassId cls) const;

  const std::string& symbol_name(Symbol s) const { return symbols_.at(s); }
  std::optional<Symbol> find_symbol(std::string_view name) const;

  // "Class.method:ordinal", used in reports, traces and graph labels.
  std::string stmt_name(StmtRef ref) const;

 private:
  friend class ProgramBuilder;

  Symbol intern(std::string_view name);

  std::vector<ClassDef> classes_;
  std::unordered_map<std::string, ClassId> class_index_;
  std::vector<MethodDef> methods_;
  std::vector<Stmt> stmts_;
  std::vector<std::unordered_map<std::string, StmtRef>> labels_;  // per method
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, Symbol> symbol_index_;
};

// Registers a statement reads and writes, as used by liveness.
struct DefUse {
  std::vector<Symbol> defs;
  std::vector<Symbol> uses;
};

void collect_registers(const AExp& e, std::vector<Symbol>& out);
DefUse def_use(const Program& p, const Stmt& s);
// Every register a method can touch: this, ret, exn, p0..pk, and every
// register named in its body. Sorted, unique.
std::vector<Symbol> method_registers(const Program& p, const MethodDef& m);
// Intra-procedural successors (fall-through, goto and if edges).
std::vector<StmtRef> successors(const Program& p, StmtRef ref);

// Name of the register bound to the i-th declared parameter.
std::string param_register_name(std::size_t i);

}  // namespace pdexn
