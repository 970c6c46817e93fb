#include "pdexn/concrete.hpp"

#include <ostream>

#include <json.hpp>

namespace pdexn::concrete {

namespace {

[[noreturn]] void fault(const std::string& what) { throw MachineFault(what); }

std::int64_t as_int(const Value& v, std::string_view op) {
  if (v.kind != Value::Kind::Int) fault(std::string(op) + " expects integers");
  return v.i;
}

bool as_bool(const Value& v, std::string_view op) {
  if (v.kind == Value::Kind::True) return true;
  if (v.kind == Value::Kind::False) return false;
  fault(std::string(op) + " expects booleans");
}

bool values_equal(const Value& a, const Value& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Value::Kind::Obj: return a.op == b.op;
    case Value::Kind::Int: return a.i == b.i;
    case Value::Kind::Str: return a.s == b.s;
    default: return true;
  }
}

StmtRef advance(const Program& p, StmtRef ref) {
  StmtRef n = p.next(ref);
  if (n == kNoStmt) fault("control fell off the end of " + p.stmt_name(ref));
  return n;
}

}  // namespace

std::string to_string(const Program& p, const Value& v) {
  switch (v.kind) {
    case Value::Kind::Obj: return "(#" + std::to_string(v.op) + ", " + p.class_def(v.cls).name + ")";
    case Value::Kind::Int: return std::to_string(v.i);
    case Value::Kind::Str: return "\"" + v.s + "\"";
    case Value::Kind::True: return "true";
    case Value::Kind::False: return "false";
    case Value::Kind::Null: return "null";
    case Value::Kind::Void: return "void";
  }
  return "?";
}

std::string_view to_string(Terminal::Kind kind) {
  switch (kind) {
    case Terminal::Kind::Normal: return "normal";
    case Terminal::Kind::Uncaught: return "uncaught";
    case Terminal::Kind::Fault: return "fault";
  }
  return "?";
}

std::string_view to_string(StackEffect e) {
  switch (e) {
    case StackEffect::None: return "none";
    case StackEffect::PushFun: return "push-fun";
    case StackEffect::PushHandle: return "push-handle";
    case StackEffect::PopFun: return "pop-fun";
    case StackEffect::PopHandle: return "pop-handle";
  }
  return "?";
}

bool falls_through(const Value& v) { return v.kind != Value::Kind::False; }

Config Interpreter::inject(StmtRef entry) {
  log_.frames[kRootFrame] = {entry, kNoStmt, kRootFrame};
  Config c;
  c.code = entry;
  c.fp = kRootFrame;
  return c;
}

Value Interpreter::atomic_eval(const AExp& e, FramePtr fp, const Store& store) const {
  switch (e.kind) {
    case AExp::Kind::True: return Value::boolean(true);
    case AExp::Kind::False: return Value::boolean(false);
    case AExp::Kind::Null: return Value::null();
    case AExp::Kind::Void: return Value::void_value();
    case AExp::Kind::Int: return Value::integer(e.int_value);
    case AExp::Kind::Str: return Value::str(e.text);
    case AExp::Kind::This:
    case AExp::Kind::Reg: {
      auto it = store.find(Addr::reg(fp, e.reg));
      if (it == store.end()) fault("unbound register '" + p_.symbol_name(e.reg) + "'");
      return it->second;
    }
    case AExp::Kind::InstanceOf: {
      Value v = atomic_eval(e.args.at(0), fp, store);
      if (e.cls == kNoClass) fault("unknown class '" + e.text + "'");
      return Value::boolean(v.kind == Value::Kind::Obj && p_.is_subclass(v.cls, e.cls));
    }
    case AExp::Kind::Op:
      break;
  }
  Value a = atomic_eval(e.args.at(0), fp, store);
  const auto name = to_string(e.op);
  if (e.op == AtomicOp::Not) return Value::boolean(!as_bool(a, name));
  Value b = atomic_eval(e.args.at(1), fp, store);
  switch (e.op) {
    case AtomicOp::Add: return Value::integer(as_int(a, name) + as_int(b, name));
    case AtomicOp::Sub: return Value::integer(as_int(a, name) - as_int(b, name));
    case AtomicOp::Mul: return Value::integer(as_int(a, name) * as_int(b, name));
    case AtomicOp::Div:
    case AtomicOp::Mod: {
      std::int64_t x = as_int(a, name);
      std::int64_t y = as_int(b, name);
      if (y == 0) fault("division by zero");
      return Value::integer(e.op == AtomicOp::Div ? x / y : x % y);
    }
    case AtomicOp::Eq: return Value::boolean(values_equal(a, b));
    case AtomicOp::Lt: return Value::boolean(as_int(a, name) < as_int(b, name));
    case AtomicOp::Le: return Value::boolean(as_int(a, name) <= as_int(b, name));
    case AtomicOp::And: return Value::boolean(as_bool(a, name) && as_bool(b, name));
    case AtomicOp::Or: return Value::boolean(as_bool(a, name) || as_bool(b, name));
    case AtomicOp::StringConcat:
      if (a.kind != Value::Kind::Str || b.kind != Value::Kind::Str) fault("string-concat expects strings");
      return Value::str(a.s + b.s);
    case AtomicOp::Not: break;
  }
  fault("bad atomic operation");
}

Value Interpreter::field_eval(const AExp& e, FramePtr fp, const Store& store, Symbol field) const {
  Value recv = atomic_eval(e, fp, store);
  if (recv.kind == Value::Kind::Null) fault("null dereference");
  if (recv.kind != Value::Kind::Obj) fault("field access on a non-object");
  auto it = store.find(Addr::fld(recv.op, field));
  if (it == store.end()) fault("unbound field '" + p_.symbol_name(field) + "'");
  return it->second;
}

void Interpreter::init_object(Store& store, ObjPtr op, ClassId cls) const {
  for (Symbol f : p_.all_fields(cls)) store[Addr::fld(op, f)] = Value::null();
}

Config Interpreter::apply_method(const Config& c, const Stmt& s) {
  std::vector<Value> args;
  args.reserve(s.args.size());
  for (const AExp& a : s.args) args.push_back(atomic_eval(a, c.fp, c.store));

  const bool is_static = s.invoke_kind == InvokeKind::Static;
  if (!is_static && args.empty()) fault("instance invoke without a receiver");
  ClassId start = s.cls;
  if (s.invoke_kind == InvokeKind::Virtual || s.invoke_kind == InvokeKind::Interface) {
    if (args[0].kind == Value::Kind::Null) fault("null dereference");
    if (args[0].kind != Value::Kind::Obj) fault("invoke on a non-object");
    start = args[0].cls;
  }
  if (start == kNoClass) fault("unknown class '" + s.class_name + "'");
  const std::size_t arity = args.size() - (is_static ? 0 : 1);
  const MethodDef* m = p_.resolve_method(start, s.method_name, arity, s.invoke_kind);
  if (!m) fault("method not found: " + s.class_name + "." + s.method_name);

  const FramePtr fp = next_fp_++;
  log_.frames[fp] = {m->entry(), s.id, c.fp};
  Config out;
  out.code = m->entry();
  out.fp = fp;
  out.store = c.store;
  std::size_t first = 0;
  if (!is_static) {
    out.store[Addr::reg(fp, kThis)] = args[0];
    first = 1;
  }
  for (std::size_t i = first; i < args.size(); ++i) {
    auto param = p_.find_symbol(param_register_name(i - first));
    if (!param) fault("parameter register missing");
    out.store[Addr::reg(fp, *param)] = args[i];
  }
  out.kont.reserve(c.kont.size() + 1);
  out.kont.push_back(Frame::fun(c.fp, p_.next(s.id)));
  out.kont.insert(out.kont.end(), c.kont.begin(), c.kont.end());
  return out;
}

Step Interpreter::step(const Config& c) {
  const Stmt& s = p_.stmt(c.code);
  Config n;
  n.fp = c.fp;
  n.code = c.code;
  auto popped = [&c]() {
    return std::vector<Frame>(c.kont.begin() + 1, c.kont.end());
  };
  try {
    switch (s.kind) {
      case StmtKind::Label:
      case StmtKind::Nop:
      case StmtKind::Line:
        n.code = advance(p_, c.code);
        n.store = c.store;
        n.kont = c.kont;
        return {std::move(n), StackEffect::None};
      case StmtKind::Goto:
        n.code = s.target;
        n.store = c.store;
        n.kont = c.kont;
        return {std::move(n), StackEffect::None};
      case StmtKind::If: {
        Value v = atomic_eval(s.value, c.fp, c.store);
        n.code = falls_through(v) ? advance(p_, c.code) : s.target;
        n.store = c.store;
        n.kont = c.kont;
        return {std::move(n), StackEffect::None};
      }
      case StmtKind::Assign: {
        Value v = atomic_eval(s.value, c.fp, c.store);
        n.code = advance(p_, c.code);
        n.store = c.store;
        n.store[Addr::reg(c.fp, s.reg)] = std::move(v);
        n.kont = c.kont;
        return {std::move(n), StackEffect::None};
      }
      case StmtKind::New: {
        if (s.cls == kNoClass) fault("unknown class '" + s.class_name + "'");
        n.code = advance(p_, c.code);
        const ObjPtr op = next_op_++;
        log_.objects[op] = {s.id, c.fp};
        n.store = c.store;
        n.store[Addr::reg(c.fp, s.reg)] = Value::obj(op, s.cls);
        init_object(n.store, op, s.cls);
        n.kont = c.kont;
        return {std::move(n), StackEffect::None};
      }
      case StmtKind::FieldGet: {
        Value v = field_eval(s.object, c.fp, c.store, s.field);
        n.code = advance(p_, c.code);
        n.store = c.store;
        n.store[Addr::reg(c.fp, s.reg)] = std::move(v);
        n.kont = c.kont;
        return {std::move(n), StackEffect::None};
      }
      case StmtKind::FieldPut: {
        Value recv = atomic_eval(s.object, c.fp, c.store);
        if (recv.kind == Value::Kind::Null) fault("null dereference");
        if (recv.kind != Value::Kind::Obj) fault("field access on a non-object");
        Value v = atomic_eval(s.value, c.fp, c.store);
        const Addr a = Addr::fld(recv.op, s.field);
        if (!c.store.count(a)) fault("unbound field '" + p_.symbol_name(s.field) + "'");
        n.code = advance(p_, c.code);
        n.store = c.store;
        n.store[a] = std::move(v);
        n.kont = c.kont;
        return {std::move(n), StackEffect::None};
      }
      case StmtKind::Invoke:
        return {apply_method(c, s), StackEffect::PushFun};
      case StmtKind::Return: {
        Value v = atomic_eval(s.value, c.fp, c.store);
        if (c.kont.empty()) return {Terminal{Terminal::Kind::Normal, std::move(v), {}, c.code}, StackEffect::None};
        const Frame& top = c.kont.front();
        n.store = c.store;
        n.kont = popped();
        if (top.kind == Frame::Kind::Handle) return {std::move(n), StackEffect::PopHandle};
        if (top.resume == kNoStmt) fault("return to a call with no following statement");
        n.code = top.resume;
        n.fp = top.fp;
        n.store[Addr::reg(top.fp, kRet)] = std::move(v);
        return {std::move(n), StackEffect::PopFun};
      }
      case StmtKind::PushHandler:
        if (s.cls == kNoClass) fault("unknown class '" + s.class_name + "'");
        n.code = advance(p_, c.code);
        n.store = c.store;
        n.kont.reserve(c.kont.size() + 1);
        n.kont.push_back(Frame::handle(s.cls, s.target));
        n.kont.insert(n.kont.end(), c.kont.begin(), c.kont.end());
        return {std::move(n), StackEffect::PushHandle};
      case StmtKind::PopHandler:
        if (c.kont.empty() || c.kont.front().kind != Frame::Kind::Handle) {
          fault("pop-handler without an installed handler");
        }
        n.code = advance(p_, c.code);
        n.store = c.store;
        n.kont = popped();
        return {std::move(n), StackEffect::PopHandle};
      case StmtKind::Throw: {
        Value v = atomic_eval(s.value, c.fp, c.store);
        if (v.kind == Value::Kind::Null) fault("null dereference");
        if (v.kind != Value::Kind::Obj) fault("throw of a non-object");
        if (c.kont.empty()) {
          return {Terminal{Terminal::Kind::Uncaught, std::move(v), {}, c.code}, StackEffect::None};
        }
        const Frame& top = c.kont.front();
        n.store = c.store;
        n.kont = popped();
        if (top.kind == Frame::Kind::Fun) return {std::move(n), StackEffect::PopFun};
        if (p_.is_subclass(v.cls, top.cls)) {
          n.code = top.handler;
          n.store[Addr::reg(c.fp, kExn)] = std::move(v);
        }
        return {std::move(n), StackEffect::PopHandle};
      }
    }
  } catch (const MachineFault& f) {
    return {Terminal{Terminal::Kind::Fault, Value::void_value(), f.what(), c.code}, StackEffect::None};
  }
  return {Terminal{Terminal::Kind::Fault, Value::void_value(), "unknown statement", c.code},
          StackEffect::None};
}

EvalResult evaluate(const Program& p, MethodId entry, std::size_t fuel, std::ostream* trace) {
  Interpreter interp(p);
  EvalResult r;
  const MethodDef& m = p.method(entry);
  if (m.size == 0) {
    r.terminal = Terminal{Terminal::Kind::Fault, Value::void_value(), "empty entry body", kNoStmt};
    return r;
  }
  r.configs.push_back(interp.inject(m.entry()));
  for (std::size_t n = 0;; ++n) {
    if (n == fuel) {
      r.out_of_fuel = true;
      break;
    }
    const Config& cur = r.configs.back();
    Step st = interp.step(cur);
    if (trace) {
      nlohmann::ordered_json rec;
      rec["step"] = n;
      rec["stmt"] = p.stmt_name(cur.code);
      rec["fp"] = cur.fp;
      rec["depth"] = cur.kont.size();
      rec["action"] = to_string(st.effect);
      if (auto* t = std::get_if<Terminal>(&st.next)) rec["terminal"] = to_string(t->kind);
      *trace << rec.dump() << '\n';
    }
    if (auto* t = std::get_if<Terminal>(&st.next)) {
      r.terminal = std::move(*t);
      break;
    }
    r.configs.push_back(std::move(std::get<Config>(st.next)));
  }
  r.log = interp.log();
  return r;
}

}  // namespace pdexn::concrete
