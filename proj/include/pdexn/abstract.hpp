#pragma once

// Abstract machine: finite frame and object pointers drawn from k-limited
// call strings, power-set values, and a stepper that takes the top of the
// stack as an input instead of owning the stack.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pdexn/concrete.hpp"
#include "pdexn/ir.hpp"

namespace pdexn::abstract {

// Allocation policy: k = 0 is 0CFA, k = 1 is 1CFA.
struct Policy {
  unsigned k = 0;

  // "0cfa", "1cfa" or "kcfa:K". Throws std::invalid_argument.
  static Policy parse(std::string_view text);
  std::string name() const;
};

// An abstract pointer: the statement that created it plus up to k call
// sites. Frame pointers use the callee's entry statement as the site,
// object pointers the new statement.
struct AllocContext {
  StmtRef site = kNoStmt;
  std::vector<StmtRef> history;  // most recent call site first

  friend auto operator<=>(const AllocContext&, const AllocContext&) = default;
};

using ContextId = std::uint32_t;

class ContextTable {
 public:
  ContextId intern(const AllocContext& c);
  const AllocContext& get(ContextId id) const { return contexts_.at(id); }
  std::size_t size() const { return contexts_.size(); }

  // "Class.method:n" for the site, followed by the call sites in brackets.
  std::string name(const Program& p, ContextId id) const;

 private:
  std::vector<AllocContext> contexts_;
  std::map<AllocContext, ContextId> index_;
};

class Allocator {
 public:
  Allocator(Policy policy, ContextTable& table) : policy_(policy), table_(table) {}

  ContextId root(StmtRef entry);
  ContextId alloc_fp(StmtRef callee_entry, StmtRef call_site, ContextId caller);
  ContextId alloc_op(StmtRef site, ContextId fp);

  Policy policy() const { return policy_; }

 private:
  Policy policy_;
  ContextTable& table_;
};

struct BaseValue {
  enum class Kind : std::uint8_t { Obj, Int, Str, True, False, Null, Void };

  Kind kind = Kind::Void;
  ContextId op = 0;       // Obj only
  ClassId cls = kNoClass; // Obj only

  static BaseValue obj(ContextId op, ClassId cls) { return {Kind::Obj, op, cls}; }
  static BaseValue of(Kind k) { return {k, 0, kNoClass}; }

  friend auto operator<=>(const BaseValue&, const BaseValue&) = default;
};

// Sorted, duplicate-free.
using AbsVal = std::vector<BaseValue>;

// Returns true when `into` grew.
bool join_into(AbsVal& into, const AbsVal& from);
AbsVal make_val(std::initializer_list<BaseValue> values);
bool contains(const AbsVal& v, const BaseValue& b);
bool subset(const AbsVal& a, const AbsVal& b);

struct AbsAddr {
  bool field = false;
  ContextId base = 0;
  Symbol name = 0;

  static AbsAddr reg(ContextId fp, Symbol r) { return {false, fp, r}; }
  static AbsAddr fld(ContextId op, Symbol f) { return {true, op, f}; }

  friend auto operator<=>(const AbsAddr&, const AbsAddr&) = default;
};

// Absent keys stand for the empty set; no key maps to an empty set.
using AbsStore = std::map<AbsAddr, AbsVal>;

void join_into(AbsStore& into, const AbsAddr& a, const AbsVal& v);
bool join_into(AbsStore& into, const AbsStore& from);
// Pointwise inclusion.
bool leq(const AbsStore& a, const AbsStore& b);

struct Frame {
  enum class Kind : std::uint8_t { Fun, Handle };

  Kind kind = Kind::Fun;
  ContextId fp = 0;
  StmtRef resume = kNoStmt;
  ClassId cls = kNoClass;
  StmtRef handler = kNoStmt;

  static Frame fun(ContextId fp, StmtRef resume) { return {Kind::Fun, fp, resume, kNoClass, kNoStmt}; }
  static Frame handle(ClassId cls, StmtRef handler) { return {Kind::Handle, 0, kNoStmt, cls, handler}; }

  friend auto operator<=>(const Frame&, const Frame&) = default;
};

// The finite part of a configuration. `uncaught` marks the sink that a
// throw on an empty stack moves to; its store holds only the thrown value
// under (fp, exn).
struct ControlState {
  StmtRef code = kNoStmt;
  ContextId fp = 0;
  AbsStore store;
  bool uncaught = false;

  friend auto operator<=>(const ControlState&, const ControlState&) = default;
};

struct Action {
  enum class Kind : std::uint8_t { Eps, Push, Pop };

  Kind kind = Kind::Eps;
  Frame frame;

  static Action eps() { return {}; }
  static Action push(Frame f) { return {Kind::Push, f}; }
  static Action pop(Frame f) { return {Kind::Pop, f}; }

  friend auto operator<=>(const Action&, const Action&) = default;
};

// A throw dispatched to a handler.
struct EcLink {
  StmtRef thrower = kNoStmt;
  ContextId fp = 0;
  StmtRef handler = kNoStmt;

  friend auto operator<=>(const EcLink&, const EcLink&) = default;
};

struct Transition {
  Action action;
  ControlState next;
  std::optional<EcLink> link;
};

class Machine {
 public:
  Machine(const Program& p, Policy policy);

  const Program& program() const { return p_; }
  Policy policy() const { return alloc_.policy(); }
  ContextTable& contexts() { return contexts_; }
  const ContextTable& contexts() const { return contexts_; }
  Allocator& allocator() { return alloc_; }

  ControlState inject(MethodId entry);

  // Successors of `c` when `top` is the top frame, or the stack is empty
  // when top is null. Only return, pop-handler and throw look at `top`.
  std::vector<Transition> step(const ControlState& c, const Frame* top);

  // True when step's result cannot depend on the top frame.
  bool ignores_top(const ControlState& c) const;

  AbsVal eval(const AExp& e, ContextId fp, const AbsStore& store) const;
  AbsVal field_eval(const AExp& e, ContextId fp, const AbsStore& store, Symbol field) const;

  // (invoke statement, receiver class) pairs that resolved to no method.
  const std::set<std::pair<StmtRef, ClassId>>& unresolved() const { return unresolved_; }

 private:
  void invoke(const ControlState& c, const Stmt& s, std::vector<Transition>& out);

  const Program& p_;
  ContextTable contexts_;
  Allocator alloc_;
  std::set<std::pair<StmtRef, ClassId>> unresolved_;
};

// Conditional polarity, shared with the concrete machine: fall through on
// any non-false value, jump on false.
bool may_fall_through(const AbsVal& v);
bool may_jump(const AbsVal& v);

// Abstraction of concrete runs. Pointers are mapped by replaying the
// allocation policy over the recorded allocation log.
class Abstraction {
 public:
  Abstraction(const Program& p, Allocator& alloc, const concrete::AllocationLog& log)
      : p_(p), alloc_(alloc), log_(log) {}

  ContextId frame(concrete::FramePtr fp);
  ContextId object(concrete::ObjPtr op);
  // Empty for values with no abstract counterpart (never happens for
  // well-formed values).
  BaseValue value(const concrete::Value& v);
  AbsAddr addr(const concrete::Addr& a);
  AbsStore store(const concrete::Store& s);
  Frame frame_value(const concrete::Frame& f);
  std::vector<Frame> stack(const std::vector<concrete::Frame>& kont);
  ControlState control(const concrete::Config& c);

 private:
  const Program& p_;
  Allocator& alloc_;
  const concrete::AllocationLog& log_;
  std::map<concrete::FramePtr, ContextId> frames_;
  std::map<concrete::ObjPtr, ContextId> objects_;
};

std::string to_string(const Program& p, const ContextTable& t, const BaseValue& v);
std::string to_string(const Program& p, const ContextTable& t, const Frame& f);
// Type token used by the points-to metrics: class name, int, String,
// boolean, null or void.
std::string type_token(const Program& p, const BaseValue& v);

}  // namespace pdexn::abstract
