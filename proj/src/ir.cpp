#include "pdexn/ir.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace pdexn {

namespace {

constexpr std::array<std::string_view, 12> kOpNames = {
    "add", "sub", "mul", "div", "mod", "eq", "lt", "le", "not", "and", "or", "string-concat"};

constexpr std::array<std::string_view, 5> kInvokeNames = {
    "invoke-static", "invoke-direct", "invoke-virtual", "invoke-interface", "invoke-super"};

}  // namespace

std::string_view to_string(InvokeKind kind) { return kInvokeNames[static_cast<int>(kind)]; }

std::string_view to_string(AtomicOp op) { return kOpNames[static_cast<int>(op)]; }

std::optional<AtomicOp> atomic_op_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kOpNames.size(); ++i) {
    if (kOpNames[i] == name) return static_cast<AtomicOp>(i);
  }
  return std::nullopt;
}

std::optional<InvokeKind> invoke_kind_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kInvokeNames.size(); ++i) {
    if (kInvokeNames[i] == name) return static_cast<InvokeKind>(i);
  }
  return std::nullopt;
}

int arity(AtomicOp op) { return op == AtomicOp::Not ? 1 : 2; }

std::string_view to_string(StmtKind kind) {
  switch (kind) {
    case StmtKind::Label: return "label";
    case StmtKind::Nop: return "nop";
    case StmtKind::Line: return "line";
    case StmtKind::Goto: return "goto";
    case StmtKind::If: return "if";
    case StmtKind::Assign: return "assign";
    case StmtKind::New: return "new";
    case StmtKind::Invoke: return "invoke";
    case StmtKind::Return: return "return";
    case StmtKind::FieldPut: return "field-put";
    case StmtKind::FieldGet: return "field-get";
    case StmtKind::PushHandler: return "push-handler";
    case StmtKind::PopHandler: return "pop-handler";
    case StmtKind::Throw: return "throw";
  }
  return "?";
}

bool MethodDef::has_attribute(std::string_view attr) const {
  return std::find(attributes.begin(), attributes.end(), attr) != attributes.end();
}

Program::Program() {
  intern("this");
  intern("ret");
  intern("exn");
  ClassDef object;
  object.name = "Object";
  object.id = kObjectClass;
  object.implicit = true;
  classes_.push_back(std::move(object));
  class_index_.emplace("Object", kObjectClass);
}

Symbol Program::intern(std::string_view name) {
  auto it = symbol_index_.find(std::string(name));
  if (it != symbol_index_.end()) return it->second;
  auto s = static_cast<Symbol>(symbols_.size());
  symbols_.emplace_back(name);
  symbol_index_.emplace(std::string(name), s);
  return s;
}

std::optional<Symbol> Program::find_symbol(std::string_view name) const {
  auto it = symbol_index_.find(std::string(name));
  if (it == symbol_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<ClassId> Program::find_class(std::string_view name) const {
  auto it = class_index_.find(std::string(name));
  if (it == class_index_.end()) return std::nullopt;
  return it->second;
}

ClassId Program::class_id(std::string_view name) const {
  auto id = find_class(name);
  if (!id) throw std::out_of_range("unknown class '" + std::string(name) + "'");
  return *id;
}

std::optional<MethodId> Program::find_method(std::string_view qualified) const {
  auto dot = qualified.rfind('.');
  std::optional<MethodId> found;
  for (const MethodDef& m : methods_) {
    if (dot == std::string_view::npos) {
      if (m.name != qualified) continue;
      if (found) return std::nullopt;  // ambiguous
      found = m.id;
    } else if (classes_[m.owner].name == qualified.substr(0, dot) &&
               m.name == qualified.substr(dot + 1)) {
      return m.id;
    }
  }
  return found;
}

std::span<const Stmt> Program::body(const MethodDef& m) const {
  return std::span<const Stmt>(stmts_).subspan(m.first, m.size);
}

std::span<const Stmt> Program::suffix(StmtRef ref) const {
  const MethodDef& m = method_of(ref);
  return std::span<const Stmt>(stmts_).subspan(ref, m.first + m.size - ref);
}

StmtRef Program::next(StmtRef ref) const {
  const MethodDef& m = method_of(ref);
  return ref + 1 < m.first + m.size ? ref + 1 : kNoStmt;
}

StmtRef Program::label_target(MethodId m, std::string_view label) const {
  const auto& table = labels_.at(m);
  auto it = table.find(std::string(label));
  if (it == table.end()) {
    throw std::out_of_range("unknown label '" + std::string(label) + "' in " +
                            classes_[methods_[m].owner].name + "." + methods_[m].name);
  }
  return it->second;
}

std::span<const Stmt> Program::stmt_seq(MethodId m, std::string_view label) const {
  return suffix(label_target(m, label));
}

bool Program::is_subclass(ClassId sub, ClassId super) const {
  if (sub >= classes_.size() || super >= classes_.size()) {
    throw std::out_of_range("unknown class id");
  }
  for (ClassId c = sub; c != kNoClass; c = classes_[c].parent) {
    if (c == super) return true;
  }
  return false;
}

bool Program::is_subclass(std::string_view sub, std::string_view super) const {
  return is_subclass(class_id(sub), class_id(super));
}

const MethodDef* Program::resolve_method(ClassId start, std::string_view name, std::size_t arity,
                                         InvokeKind kind) const {
  if (start >= classes_.size()) throw std::out_of_range("unknown class id");
  const bool walk = kind == InvokeKind::Virtual || kind == InvokeKind::Interface ||
                    kind == InvokeKind::Super;
  for (ClassId c = start; c != kNoClass; c = classes_[c].parent) {
    for (MethodId id : classes_[c].methods) {
      const MethodDef& m = methods_[id];
      if (m.name == name && m.arity() == arity && m.size > 0) return &m;
    }
    if (!walk) break;
  }
  return nullptr;
}

std::vector<Symbol> Program::all_fields(ClassId cls) const {
  std::vector<Symbol> out;
  for (ClassId c = cls; c != kNoClass; c = classes_.at(c).parent) {
    for (const FieldDef& f : classes_[c].fields) {
      if (std::find(out.begin(), out.end(), f.name) == out.end()) out.push_back(f.name);
    }
  }
  return out;
}

std::string Program::stmt_name(StmtRef ref) const {
  if (ref == kNoStmt) return "<none>";
  const Stmt& s = stmts_.at(ref);
  const MethodDef& m = methods_[s.method];
  return classes_[m.owner].name + "." + m.name + ":" + std::to_string(s.ordinal);
}

std::string param_register_name(std::size_t i) { return "p" + std::to_string(i); }

void collect_registers(const AExp& e, std::vector<Symbol>& out) {
  switch (e.kind) {
    case AExp::Kind::This:
    case AExp::Kind::Reg:
      out.push_back(e.reg);
      break;
    case AExp::Kind::Op:
    case AExp::Kind::InstanceOf:
      for (const AExp& a : e.args) collect_registers(a, out);
      break;
    default:
      break;
  }
}

namespace {

void sort_unique(std::vector<Symbol>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

std::vector<Symbol> method_registers(const Program& p, const MethodDef& m) {
  std::vector<Symbol> regs = {kThis, kRet, kExn};
  for (std::size_t i = 0; i < m.arity(); ++i) {
    if (auto s = p.find_symbol(param_register_name(i))) regs.push_back(*s);
  }
  for (const Stmt& s : p.body(m)) {
    switch (s.kind) {
      case StmtKind::Assign:
      case StmtKind::New:
      case StmtKind::FieldGet:
        regs.push_back(s.reg);
        break;
      default:
        break;
    }
    collect_registers(s.value, regs);
    collect_registers(s.object, regs);
    for (const AExp& a : s.args) collect_registers(a, regs);
  }
  sort_unique(regs);
  return regs;
}

DefUse def_use(const Program& p, const Stmt& s) {
  DefUse du;
  switch (s.kind) {
    case StmtKind::Assign:
      du.defs.push_back(s.reg);
      collect_registers(s.value, du.uses);
      break;
    case StmtKind::New:
      du.defs.push_back(s.reg);
      break;
    case StmtKind::FieldGet:
      du.defs.push_back(s.reg);
      collect_registers(s.object, du.uses);
      break;
    case StmtKind::FieldPut:
      collect_registers(s.object, du.uses);
      collect_registers(s.value, du.uses);
      break;
    case StmtKind::Invoke:
      du.defs.push_back(kRet);
      for (const AExp& a : s.args) collect_registers(a, du.uses);
      break;
    case StmtKind::If:
    case StmtKind::Return:
      collect_registers(s.value, du.uses);
      break;
    case StmtKind::Throw:
      // A caught exception resumes at the handler with the thrower's frame
      // pointer, so anything in this frame may still be read.
      du.uses = method_registers(p, p.method(s.method));
      break;
    default:
      break;
  }
  sort_unique(du.defs);
  sort_unique(du.uses);
  return du;
}

std::vector<StmtRef> successors(const Program& p, StmtRef ref) {
  const Stmt& s = p.stmt(ref);
  std::vector<StmtRef> out;
  switch (s.kind) {
    case StmtKind::Return:
    case StmtKind::Throw:
      break;
    case StmtKind::Goto:
      if (s.target != kNoStmt) out.push_back(s.target);
      break;
    case StmtKind::If:
      if (StmtRef n = p.next(ref); n != kNoStmt) out.push_back(n);
      if (s.target != kNoStmt && (out.empty() || out.front() != s.target)) {
        out.push_back(s.target);
      }
      break;
    default:
      if (StmtRef n = p.next(ref); n != kNoStmt) out.push_back(n);
      break;
  }
  return out;
}

}  // namespace pdexn
