#include "pdexn/validate.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

namespace pdexn {

namespace {

// Handler-stack depths beyond this are not tracked; a loop that keeps
// installing handlers saturates here instead of diverging.
constexpr int kMaxDepth = 64;

class Validator {
 public:
  explicit Validator(const Program& p) : p_(p) {}

  std::vector<Diagnostic> run() {
    for (const ClassDef& c : p_.classes()) {
      if (c.implicit) continue;
      check_class(c);
      for (MethodId id : c.methods) check_method(p_.method(id));
    }
    return std::move(out_);
  }

 private:
  void report(std::string code, std::string message, SourceLoc loc) {
    out_.push_back({std::move(code), std::move(message), loc});
  }

  std::string where(const MethodDef& m) const {
    return p_.class_def(m.owner).name + "." + m.name;
  }

  void check_class(const ClassDef& c) {
    std::set<Symbol> fields;
    for (const FieldDef& f : c.fields) {
      if (!fields.insert(f.name).second) {
        report("duplicate-field", "field '" + p_.symbol_name(f.name) + "' declared twice in " + c.name,
               f.loc);
      }
    }
    std::set<std::pair<std::string, std::size_t>> methods;
    for (MethodId id : c.methods) {
      const MethodDef& m = p_.method(id);
      if (!methods.insert({m.name, m.arity()}).second) {
        report("duplicate-method",
               "method '" + m.name + "/" + std::to_string(m.arity()) + "' declared twice in " + c.name,
               m.loc);
      }
    }
  }

  void check_class_ref(const std::string& name, ClassId id, SourceLoc loc) {
    if (id == kNoClass) report("unknown-class", "unknown class '" + name + "'", loc);
  }

  void check_aexp_classes(const AExp& e, SourceLoc loc) {
    if (e.kind == AExp::Kind::InstanceOf) check_class_ref(e.text, e.cls, loc);
    for (const AExp& a : e.args) check_aexp_classes(a, loc);
  }

  void check_registers(const MethodDef& m) {
    std::set<Symbol> params;
    for (std::size_t i = 0; i < m.arity(); ++i) {
      if (auto s = p_.find_symbol(param_register_name(i))) params.insert(*s);
    }
    std::set<Symbol> locals;
    std::set<Symbol> reported;
    for (const Stmt& s : p_.body(m)) {
      std::vector<Symbol> named;
      collect_registers(s.value, named);
      collect_registers(s.object, named);
      for (const AExp& a : s.args) collect_registers(a, named);
      const bool writes =
          s.kind == StmtKind::Assign || s.kind == StmtKind::New || s.kind == StmtKind::FieldGet;
      if (writes) {
        if (s.reg == kRet || s.reg == kExn || s.reg == kThis) {
          report("reserved-register",
                 "'" + p_.symbol_name(s.reg) + "' cannot be assigned in " + where(m), s.loc);
        } else {
          named.push_back(s.reg);
        }
      }
      for (Symbol r : named) {
        if (r == kThis || r == kRet || r == kExn || params.count(r)) continue;
        const std::string& name = p_.symbol_name(r);
        if (is_param_name(name)) {
          if (reported.insert(r).second) {
            report("unknown-register",
                   "'" + name + "' is not a parameter of " + where(m) + " (arity " +
                       std::to_string(m.arity()) + ")",
                   s.loc);
          }
          continue;
        }
        locals.insert(r);
      }
    }
    if (locals.size() > m.limit) {
      report("register-limit",
             where(m) + " names " + std::to_string(locals.size()) + " registers but declares (limit " +
                 std::to_string(m.limit) + ")",
             m.loc);
    }
  }

  static bool is_param_name(const std::string& name) {
    return name.size() > 1 && name[0] == 'p' &&
           std::all_of(name.begin() + 1, name.end(), [](char c) { return c >= '0' && c <= '9'; });
  }

  void check_labels(const MethodDef& m) {
    std::map<std::string, StmtRef> seen;
    for (const Stmt& s : p_.body(m)) {
      if (s.kind == StmtKind::Label && !seen.emplace(s.label, s.id).second) {
        report("duplicate-label", "label '" + s.label + "' defined twice in " + where(m), s.loc);
      }
      const bool jumps =
          s.kind == StmtKind::Goto || s.kind == StmtKind::If || s.kind == StmtKind::PushHandler;
      if (jumps && s.target == kNoStmt) {
        report("undefined-label", "label '" + s.label + "' is not defined in " + where(m), s.loc);
      }
    }
  }

  // Forward dataflow over the set of handler-stack depths reaching each
  // statement. A handler label is entered with the depth before the push.
  void check_handler_balance(const MethodDef& m) {
    if (m.size == 0) return;
    std::vector<std::set<int>> depths(m.size);
    std::deque<std::pair<StmtRef, int>> work;
    auto flow = [&](StmtRef to, int d) {
      if (to == kNoStmt) return;
      d = std::min(d, kMaxDepth);
      if (depths[to - m.first].insert(d).second) work.emplace_back(to, d);
    };
    flow(m.entry(), 0);
    std::set<StmtRef> bad;
    while (!work.empty()) {
      auto [ref, d] = work.front();
      work.pop_front();
      const Stmt& s = p_.stmt(ref);
      switch (s.kind) {
        case StmtKind::PushHandler:
          flow(p_.next(ref), d + 1);
          flow(s.target, d);
          break;
        case StmtKind::PopHandler:
          if (d == 0) {
            bad.insert(ref);
          } else {
            flow(p_.next(ref), d - 1);
          }
          break;
        default:
          for (StmtRef n : successors(p_, ref)) flow(n, d);
          break;
      }
    }
    for (StmtRef ref : bad) {
      report("unbalanced-pop-handler",
             "pop-handler at " + p_.stmt_name(ref) + " can run with no installed handler",
             p_.stmt(ref).loc);
    }
  }

  void check_method(const MethodDef& m) {
    for (const std::string& t : m.throws) {
      check_class_ref(t, p_.find_class(t).value_or(kNoClass), m.loc);
    }
    check_registers(m);
    check_labels(m);
    if (m.size == 0) {
      if (!m.has_attribute("abstract")) {
        report("falls-off-end", where(m) + " has an empty body", m.loc);
      }
      return;
    }
    for (const Stmt& s : p_.body(m)) {
      if (s.kind == StmtKind::New || s.kind == StmtKind::PushHandler ||
          s.kind == StmtKind::Invoke) {
        check_class_ref(s.class_name, s.cls, s.loc);
      }
      check_aexp_classes(s.value, s.loc);
      check_aexp_classes(s.object, s.loc);
      for (const AExp& a : s.args) check_aexp_classes(a, s.loc);
    }
    const Stmt& last = p_.stmt(m.first + m.size - 1);
    if (last.kind != StmtKind::Return && last.kind != StmtKind::Throw &&
        last.kind != StmtKind::Goto) {
      report("falls-off-end", "control can run past the last statement of " + where(m), last.loc);
    }
    check_handler_balance(m);
  }

  const Program& p_;
  std::vector<Diagnostic> out_;
};

}  // namespace

std::vector<Diagnostic> validate(const Program& p) { return Validator(p).run(); }

std::string format(const Diagnostic& d) {
  return std::to_string(d.loc.line) + ":" + std::to_string(d.loc.col) + ": " + d.code + ": " +
         d.message;
}

}  // namespace pdexn
