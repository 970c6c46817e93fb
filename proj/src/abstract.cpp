#include "pdexn/abstract.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace pdexn::abstract {

Policy Policy::parse(std::string_view text) {
  if (text == "0cfa") return {0};
  if (text == "1cfa") return {1};
  if (text.substr(0, 5) == "kcfa:") {
    auto digits = text.substr(5);
    unsigned k = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && !digits.empty()) return {k};
  }
  throw std::invalid_argument("unknown policy '" + std::string(text) + "' (expected 0cfa, 1cfa or kcfa:K)");
}

std::string Policy::name() const {
  if (k == 0) return "0cfa";
  if (k == 1) return "1cfa";
  return "kcfa:" + std::to_string(k);
}

ContextId ContextTable::intern(const AllocContext& c) {
  auto [it, fresh] = index_.emplace(c, static_cast<ContextId>(contexts_.size()));
  if (fresh) contexts_.push_back(c);
  return it->second;
}

std::string ContextTable::name(const Program& p, ContextId id) const {
  const AllocContext& c = get(id);
  std::string out = p.stmt_name(c.site);
  out += "[";
  for (std::size_t i = 0; i < c.history.size(); ++i) {
    if (i) out += ",";
    out += p.stmt_name(c.history[i]);
  }
  return out + "]";
}

ContextId Allocator::root(StmtRef entry) { return table_.intern({entry, {}}); }

ContextId Allocator::alloc_fp(StmtRef callee_entry, StmtRef call_site, ContextId caller) {
  AllocContext c{callee_entry, {}};
  if (policy_.k > 0) {
    c.history.push_back(call_site);
    const auto& prev = table_.get(caller).history;
    for (std::size_t i = 0; i < prev.size() && c.history.size() < policy_.k; ++i) {
      c.history.push_back(prev[i]);
    }
  }
  return table_.intern(c);
}

ContextId Allocator::alloc_op(StmtRef site, ContextId fp) {
  AllocContext c{site, {}};
  const auto& prev = table_.get(fp).history;
  for (std::size_t i = 0; i < prev.size() && c.history.size() < policy_.k; ++i) {
    c.history.push_back(prev[i]);
  }
  return table_.intern(c);
}

bool join_into(AbsVal& into, const AbsVal& from) {
  if (from.empty()) return false;
  if (into.empty()) {
    into = from;
    return true;
  }
  AbsVal merged;
  merged.reserve(into.size() + from.size());
  std::set_union(into.begin(), into.end(), from.begin(), from.end(), std::back_inserter(merged));
  if (merged.size() == into.size()) return false;
  into = std::move(merged);
  return true;
}

AbsVal make_val(std::initializer_list<BaseValue> values) {
  AbsVal v(values);
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

bool contains(const AbsVal& v, const BaseValue& b) { return std::binary_search(v.begin(), v.end(), b); }

bool subset(const AbsVal& a, const AbsVal& b) { return std::includes(b.begin(), b.end(), a.begin(), a.end()); }

void join_into(AbsStore& into, const AbsAddr& a, const AbsVal& v) {
  if (v.empty()) return;
  join_into(into[a], v);
}

bool join_into(AbsStore& into, const AbsStore& from) {
  bool grew = false;
  for (const auto& [a, v] : from) {
    auto it = into.find(a);
    if (it == into.end()) {
      into.emplace(a, v);
      grew = true;
    } else {
      grew |= join_into(it->second, v);
    }
  }
  return grew;
}

bool leq(const AbsStore& a, const AbsStore& b) {
  for (const auto& [addr, v] : a) {
    auto it = b.find(addr);
    if (it == b.end() || !subset(v, it->second)) return false;
  }
  return true;
}

bool may_fall_through(const AbsVal& v) {
  return std::any_of(v.begin(), v.end(), [](const BaseValue& b) { return b.kind != BaseValue::Kind::False; });
}

bool may_jump(const AbsVal& v) { return contains(v, BaseValue::of(BaseValue::Kind::False)); }

namespace {

using K = BaseValue::Kind;

const BaseValue kTrue = BaseValue::of(K::True);
const BaseValue kFalse = BaseValue::of(K::False);
const BaseValue kInt = BaseValue::of(K::Int);
const BaseValue kStr = BaseValue::of(K::Str);

void add(AbsVal& out, const BaseValue& b) {
  auto it = std::lower_bound(out.begin(), out.end(), b);
  if (it == out.end() || *it != b) out.insert(it, b);
}

// Possible results of a binary operation on one pair of base values.
void apply_binary(AtomicOp op, const BaseValue& a, const BaseValue& b, AbsVal& out) {
  switch (op) {
    case AtomicOp::Add:
    case AtomicOp::Sub:
    case AtomicOp::Mul:
    case AtomicOp::Div:
    case AtomicOp::Mod:
      if (a.kind == K::Int && b.kind == K::Int) add(out, kInt);
      return;
    case AtomicOp::Lt:
    case AtomicOp::Le:
      if (a.kind == K::Int && b.kind == K::Int) {
        add(out, kTrue);
        add(out, kFalse);
      }
      return;
    case AtomicOp::Eq:
      if (a.kind != b.kind) {
        add(out, kFalse);
      } else if (a.kind == K::Int || a.kind == K::Str || (a.kind == K::Obj && a == b)) {
        add(out, kTrue);
        add(out, kFalse);
      } else if (a.kind == K::Obj) {
        add(out, kFalse);
      } else {
        add(out, kTrue);
      }
      return;
    case AtomicOp::And:
    case AtomicOp::Or: {
      const bool ab = a.kind == K::True || a.kind == K::False;
      const bool bb = b.kind == K::True || b.kind == K::False;
      if (!ab || !bb) return;
      const bool x = a.kind == K::True;
      const bool y = b.kind == K::True;
      add(out, (op == AtomicOp::And ? (x && y) : (x || y)) ? kTrue : kFalse);
      return;
    }
    case AtomicOp::StringConcat:
      if (a.kind == K::Str && b.kind == K::Str) add(out, kStr);
      return;
    case AtomicOp::Not:
      return;
  }
}

}  // namespace

Machine::Machine(const Program& p, Policy policy) : p_(p), alloc_(policy, contexts_) {}

ControlState Machine::inject(MethodId entry) {
  ControlState c;
  c.code = p_.method(entry).entry();
  c.fp = alloc_.root(c.code);
  return c;
}

AbsVal Machine::eval(const AExp& e, ContextId fp, const AbsStore& store) const {
  switch (e.kind) {
    case AExp::Kind::True: return {kTrue};
    case AExp::Kind::False: return {kFalse};
    case AExp::Kind::Null: return {BaseValue::of(K::Null)};
    case AExp::Kind::Void: return {BaseValue::of(K::Void)};
    case AExp::Kind::Int: return {kInt};
    case AExp::Kind::Str: return {kStr};
    case AExp::Kind::This:
    case AExp::Kind::Reg: {
      auto it = store.find(AbsAddr::reg(fp, e.reg));
      return it == store.end() ? AbsVal{} : it->second;
    }
    case AExp::Kind::InstanceOf: {
      AbsVal out;
      if (e.cls == kNoClass) return out;
      for (const BaseValue& b : eval(e.args.at(0), fp, store)) {
        add(out, b.kind == K::Obj && p_.is_subclass(b.cls, e.cls) ? kTrue : kFalse);
      }
      return out;
    }
    case AExp::Kind::Op:
      break;
  }
  AbsVal a = eval(e.args.at(0), fp, store);
  AbsVal out;
  if (e.op == AtomicOp::Not) {
    for (const BaseValue& b : a) {
      if (b.kind == K::True) add(out, kFalse);
      if (b.kind == K::False) add(out, kTrue);
    }
    return out;
  }
  AbsVal b = eval(e.args.at(1), fp, store);
  for (const BaseValue& x : a) {
    for (const BaseValue& y : b) apply_binary(e.op, x, y, out);
  }
  return out;
}

AbsVal Machine::field_eval(const AExp& e, ContextId fp, const AbsStore& store, Symbol field) const {
  AbsVal out;
  for (const BaseValue& b : eval(e, fp, store)) {
    if (b.kind != K::Obj) continue;
    auto it = store.find(AbsAddr::fld(b.op, field));
    if (it != store.end()) join_into(out, it->second);
  }
  return out;
}

bool Machine::ignores_top(const ControlState& c) const {
  if (c.uncaught) return true;
  switch (p_.stmt(c.code).kind) {
    case StmtKind::Return:
    case StmtKind::PopHandler:
    case StmtKind::Throw:
      return false;
    default:
      return true;
  }
}

void Machine::invoke(const ControlState& c, const Stmt& s, std::vector<Transition>& out) {
  std::vector<AbsVal> args;
  for (const AExp& a : s.args) {
    args.push_back(eval(a, c.fp, c.store));
    if (args.back().empty()) return;
  }
  const bool is_static = s.invoke_kind == InvokeKind::Static;
  if (!is_static && args.empty()) return;
  const std::size_t arity = args.size() - (is_static ? 0 : 1);

  // Callee and the receivers it is invoked on.
  std::map<const MethodDef*, AbsVal> targets;
  if (s.invoke_kind == InvokeKind::Virtual || s.invoke_kind == InvokeKind::Interface) {
    for (const BaseValue& r : args[0]) {
      if (r.kind != K::Obj) continue;
      const MethodDef* m = p_.resolve_method(r.cls, s.method_name, arity, s.invoke_kind);
      if (!m) {
        unresolved_.insert({s.id, r.cls});
        continue;
      }
      add(targets[m], r);
    }
  } else {
    if (s.cls == kNoClass) return;
    const MethodDef* m = p_.resolve_method(s.cls, s.method_name, arity, s.invoke_kind);
    if (!m) {
      unresolved_.insert({s.id, s.cls});
      return;
    }
    targets[m] = is_static ? AbsVal{} : args[0];
  }

  // Iterate in method-id order so successor order is stable.
  std::vector<std::pair<const MethodDef*, AbsVal>> ordered(targets.begin(), targets.end());
  std::sort(ordered.begin(), ordered.end(),
            [](const auto& x, const auto& y) { return x.first->id < y.first->id; });
  const Frame frame = Frame::fun(c.fp, p_.next(s.id));
  for (const auto& [m, receivers] : ordered) {
    Transition t;
    t.action = Action::push(frame);
    t.next.code = m->entry();
    t.next.fp = alloc_.alloc_fp(m->entry(), s.id, c.fp);
    t.next.store = c.store;
    std::size_t first = 0;
    if (!is_static) {
      join_into(t.next.store, AbsAddr::reg(t.next.fp, kThis), receivers);
      first = 1;
    }
    for (std::size_t i = first; i < args.size(); ++i) {
      auto param = p_.find_symbol(param_register_name(i - first));
      if (param) join_into(t.next.store, AbsAddr::reg(t.next.fp, *param), args[i]);
    }
    out.push_back(std::move(t));
  }
}

std::vector<Transition> Machine::step(const ControlState& c, const Frame* top) {
  std::vector<Transition> out;
  if (c.uncaught) return out;
  const Stmt& s = p_.stmt(c.code);
  auto advance = [&](AbsStore store) {
    StmtRef n = p_.next(c.code);
    if (n == kNoStmt) return;
    Transition t;
    t.next.code = n;
    t.next.fp = c.fp;
    t.next.store = std::move(store);
    out.push_back(std::move(t));
  };
  auto pop_in_place = [&]() {
    Transition t;
    t.action = Action::pop(*top);
    t.next = c;
    out.push_back(std::move(t));
  };

  switch (s.kind) {
    case StmtKind::Label:
    case StmtKind::Nop:
    case StmtKind::Line:
      advance(c.store);
      break;
    case StmtKind::Goto:
      if (s.target != kNoStmt) {
        Transition t;
        t.next = c;
        t.next.code = s.target;
        out.push_back(std::move(t));
      }
      break;
    case StmtKind::If: {
      AbsVal v = eval(s.value, c.fp, c.store);
      if (may_fall_through(v)) advance(c.store);
      if (may_jump(v) && s.target != kNoStmt) {
        Transition t;
        t.next = c;
        t.next.code = s.target;
        out.push_back(std::move(t));
      }
      break;
    }
    case StmtKind::Assign: {
      AbsVal v = eval(s.value, c.fp, c.store);
      if (v.empty()) break;
      AbsStore store = c.store;
      join_into(store, AbsAddr::reg(c.fp, s.reg), v);
      advance(std::move(store));
      break;
    }
    case StmtKind::New: {
      if (s.cls == kNoClass) break;
      const ContextId op = alloc_.alloc_op(s.id, c.fp);
      AbsStore store = c.store;
      join_into(store, AbsAddr::reg(c.fp, s.reg), {BaseValue::obj(op, s.cls)});
      for (Symbol f : p_.all_fields(s.cls)) {
        join_into(store, AbsAddr::fld(op, f), {BaseValue::of(K::Null)});
      }
      advance(std::move(store));
      break;
    }
    case StmtKind::FieldGet: {
      AbsVal v = field_eval(s.object, c.fp, c.store, s.field);
      if (v.empty()) break;
      AbsStore store = c.store;
      join_into(store, AbsAddr::reg(c.fp, s.reg), v);
      advance(std::move(store));
      break;
    }
    case StmtKind::FieldPut: {
      AbsVal recv = eval(s.object, c.fp, c.store);
      AbsVal v = eval(s.value, c.fp, c.store);
      if (v.empty()) break;
      AbsStore store = c.store;
      bool any = false;
      for (const BaseValue& r : recv) {
        if (r.kind != K::Obj) continue;
        const AbsAddr a = AbsAddr::fld(r.op, s.field);
        if (!c.store.count(a)) continue;
        join_into(store, a, v);
        any = true;
      }
      if (any) advance(std::move(store));
      break;
    }
    case StmtKind::Invoke:
      invoke(c, s, out);
      break;
    case StmtKind::Return: {
      AbsVal v = eval(s.value, c.fp, c.store);
      if (v.empty() || !top) break;
      if (top->kind == Frame::Kind::Handle) {
        pop_in_place();
        break;
      }
      if (top->resume == kNoStmt) break;
      Transition t;
      t.action = Action::pop(*top);
      t.next.code = top->resume;
      t.next.fp = top->fp;
      t.next.store = c.store;
      join_into(t.next.store, AbsAddr::reg(top->fp, kRet), v);
      out.push_back(std::move(t));
      break;
    }
    case StmtKind::PushHandler: {
      if (s.cls == kNoClass || s.target == kNoStmt) break;
      StmtRef n = p_.next(c.code);
      if (n == kNoStmt) break;
      Transition t;
      t.action = Action::push(Frame::handle(s.cls, s.target));
      t.next = c;
      t.next.code = n;
      out.push_back(std::move(t));
      break;
    }
    case StmtKind::PopHandler: {
      if (!top || top->kind != Frame::Kind::Handle) break;
      StmtRef n = p_.next(c.code);
      if (n == kNoStmt) break;
      Transition t;
      t.action = Action::pop(*top);
      t.next = c;
      t.next.code = n;
      out.push_back(std::move(t));
      break;
    }
    case StmtKind::Throw: {
      AbsVal thrown;
      for (const BaseValue& b : eval(s.value, c.fp, c.store)) {
        if (b.kind == K::Obj) thrown.push_back(b);
      }
      if (thrown.empty()) break;
      if (!top) {
        Transition t;
        t.next.code = c.code;
        t.next.fp = c.fp;
        t.next.uncaught = true;
        t.next.store[AbsAddr::reg(c.fp, kExn)] = thrown;
        out.push_back(std::move(t));
        break;
      }
      if (top->kind == Frame::Kind::Fun) {
        pop_in_place();
        break;
      }
      AbsVal caught;
      bool escapes = false;
      for (const BaseValue& b : thrown) {
        if (p_.is_subclass(b.cls, top->cls)) {
          caught.push_back(b);
        } else {
          escapes = true;
        }
      }
      if (!caught.empty()) {
        Transition t;
        t.action = Action::pop(*top);
        t.next.code = top->handler;
        t.next.fp = c.fp;
        t.next.store = c.store;
        join_into(t.next.store, AbsAddr::reg(c.fp, kExn), caught);
        t.link = EcLink{c.code, c.fp, top->handler};
        out.push_back(std::move(t));
      }
      if (escapes) pop_in_place();
      break;
    }
  }
  return out;
}

ContextId Abstraction::frame(concrete::FramePtr fp) {
  if (auto it = frames_.find(fp); it != frames_.end()) return it->second;
  const auto& info = log_.frames.at(fp);
  ContextId id = info.call_site == kNoStmt
                     ? alloc_.root(info.entry)
                     : alloc_.alloc_fp(info.entry, info.call_site, frame(info.parent));
  frames_.emplace(fp, id);
  return id;
}

ContextId Abstraction::object(concrete::ObjPtr op) {
  if (auto it = objects_.find(op); it != objects_.end()) return it->second;
  const auto& info = log_.objects.at(op);
  ContextId id = alloc_.alloc_op(info.site, frame(info.fp));
  objects_.emplace(op, id);
  return id;
}

BaseValue Abstraction::value(const concrete::Value& v) {
  using CK = concrete::Value::Kind;
  switch (v.kind) {
    case CK::Obj: return BaseValue::obj(object(v.op), v.cls);
    case CK::Int: return BaseValue::of(K::Int);
    case CK::Str: return BaseValue::of(K::Str);
    case CK::True: return BaseValue::of(K::True);
    case CK::False: return BaseValue::of(K::False);
    case CK::Null: return BaseValue::of(K::Null);
    case CK::Void: return BaseValue::of(K::Void);
  }
  return BaseValue::of(K::Void);
}

AbsAddr Abstraction::addr(const concrete::Addr& a) {
  return a.field ? AbsAddr::fld(object(a.base), a.name) : AbsAddr::reg(frame(a.base), a.name);
}

AbsStore Abstraction::store(const concrete::Store& s) {
  AbsStore out;
  for (const auto& [a, v] : s) join_into(out, addr(a), AbsVal{value(v)});
  return out;
}

Frame Abstraction::frame_value(const concrete::Frame& f) {
  if (f.kind == concrete::Frame::Kind::Handle) return Frame::handle(f.cls, f.handler);
  return Frame::fun(frame(f.fp), f.resume);
}

std::vector<Frame> Abstraction::stack(const std::vector<concrete::Frame>& kont) {
  std::vector<Frame> out;
  out.reserve(kont.size());
  for (const auto& f : kont) out.push_back(frame_value(f));
  return out;
}

ControlState Abstraction::control(const concrete::Config& c) {
  ControlState out;
  out.code = c.code;
  out.fp = frame(c.fp);
  out.store = store(c.store);
  return out;
}

std::string to_string(const Program& p, const ContextTable& t, const BaseValue& v) {
  switch (v.kind) {
    case K::Obj: return "(" + t.name(p, v.op) + ", " + p.class_def(v.cls).name + ")";
    case K::Int: return "INT";
    case K::Str: return "STR";
    case K::True: return "true";
    case K::False: return "false";
    case K::Null: return "null";
    case K::Void: return "void";
  }
  return "?";
}

std::string to_string(const Program& p, const ContextTable& t, const Frame& f) {
  if (f.kind == Frame::Kind::Handle) {
    return "handle(" + p.class_def(f.cls).name + "," + p.stmt(f.handler).label + ")";
  }
  return "fun(" + t.name(p, f.fp) + "," + p.stmt_name(f.resume) + ")";
}

std::string type_token(const Program& p, const BaseValue& v) {
  switch (v.kind) {
    case K::Obj: return p.class_def(v.cls).name;
    case K::Int: return "int";
    case K::Str: return "String";
    case K::True:
    case K::False: return "boolean";
    case K::Null: return "null";
    case K::Void: return "void";
  }
  return "?";
}

}  // namespace pdexn::abstract
