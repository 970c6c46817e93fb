#include "pdexn/parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace pdexn {

ParseError::ParseError(std::string code, std::string message, SourceLoc loc)
    : std::runtime_error(std::to_string(loc.line) + ":" + std::to_string(loc.col) + ": " + message +
                         " [" + code + "]"),
      code_(std::move(code)),
      message_(std::move(message)),
      loc_(loc) {}

namespace {

struct SExp {
  enum class Kind { Symbol, Int, String, List };
  Kind kind = Kind::List;
  std::string text;
  std::int64_t value = 0;
  std::vector<SExp> items;
  SourceLoc loc;

  bool is_symbol() const { return kind == Kind::Symbol; }
  bool is_symbol(std::string_view s) const { return kind == Kind::Symbol && text == s; }
  bool is_list() const { return kind == Kind::List; }
  const SExp* head() const { return is_list() && !items.empty() ? &items.front() : nullptr; }
};

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  std::vector<SExp> read_all() {
    std::vector<SExp> out;
    for (;;) {
      skip_space();
      if (pos_ >= text_.size()) break;
      out.push_back(read());
    }
    return out;
  }

 private:
  SourceLoc here() const { return {line_, col_}; }

  char advance() {
    char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  SExp read() {
    skip_space();
    SourceLoc loc = here();
    if (pos_ >= text_.size()) throw ParseError("lexical", "unexpected end of input", loc);
    char c = text_[pos_];
    if (c == ')') throw ParseError("lexical", "unexpected ')'", loc);
    if (c == '(') {
      advance();
      SExp list;
      list.kind = SExp::Kind::List;
      list.loc = loc;
      for (;;) {
        skip_space();
        if (pos_ >= text_.size()) throw ParseError("lexical", "unterminated list", loc);
        if (text_[pos_] == ')') {
          advance();
          return list;
        }
        list.items.push_back(read());
      }
    }
    if (c == '"') return read_string(loc);
    return read_atom(loc);
  }

  SExp read_string(SourceLoc loc) {
    advance();
    SExp s;
    s.kind = SExp::Kind::String;
    s.loc = loc;
    for (;;) {
      if (pos_ >= text_.size()) throw ParseError("lexical", "unterminated string literal", loc);
      char c = advance();
      if (c == '"') return s;
      if (c == '\\') {
        if (pos_ >= text_.size()) throw ParseError("lexical", "unterminated string literal", loc);
        char e = advance();
        switch (e) {
          case 'n': s.text += '\n'; break;
          case 't': s.text += '\t'; break;
          case '"': s.text += '"'; break;
          case '\\': s.text += '\\'; break;
          default:
            throw ParseError("lexical", std::string("unknown escape '\\") + e + "'", here());
        }
      } else {
        s.text += c;
      }
    }
  }

  SExp read_atom(SourceLoc loc) {
    std::size_t start = pos_;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == ';' || c == '"') {
        break;
      }
      advance();
    }
    SExp a;
    a.loc = loc;
    a.text = std::string(text_.substr(start, pos_ - start));
    const char* first = a.text.data();
    const char* last = first + a.text.size();
    bool numeric = !a.text.empty() &&
                   (std::isdigit(static_cast<unsigned char>(a.text[0])) ||
                    (a.text[0] == '-' && a.text.size() > 1 &&
                     std::isdigit(static_cast<unsigned char>(a.text[1]))));
    if (numeric) {
      auto [ptr, ec] = std::from_chars(first, last, a.value);
      if (ec != std::errc() || ptr != last) {
        throw ParseError("lexical", "malformed integer literal '" + a.text + "'", loc);
      }
      a.kind = SExp::Kind::Int;
    } else {
      a.kind = SExp::Kind::Symbol;
    }
    return a;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

const std::set<std::string, std::less<>> kAttributes = {
    "public", "private", "protected", "final", "abstract", "static"};

const std::set<std::string, std::less<>> kReservedAtoms = {"this", "true", "false", "null", "void"};

bool is_attribute(const SExp& e) { return e.is_symbol() && kAttributes.count(e.text) > 0; }

[[noreturn]] void arity_error(const SExp& form, std::string_view what) {
  throw ParseError("arity", "wrong number of operands in " + std::string(what), form.loc);
}

const std::string& expect_symbol(const SExp& e, std::string_view what) {
  if (!e.is_symbol()) throw ParseError("syntax", "expected " + std::string(what), e.loc);
  return e.text;
}

const SExp& expect_list(const SExp& e, std::string_view what) {
  if (!e.is_list()) throw ParseError("syntax", "expected " + std::string(what), e.loc);
  return e;
}

std::string strip_sigil(std::string_view name) {
  if (name.size() > 1 && name.front() == '$') name.remove_prefix(1);
  return std::string(name);
}

}  // namespace

// Builds and indexes a Program from parsed S-expressions.
class ProgramBuilder {
 public:
  Program build(const std::vector<SExp>& forms) {
    struct PendingClass {
      const SExp* form;
      std::size_t name_at;
    };
    std::vector<PendingClass> pending;
    for (const SExp& form : forms) {
      if (!form.is_list()) throw ParseError("syntax", "expected a class definition", form.loc);
      std::size_t i = 0;
      while (i < form.items.size() && is_attribute(form.items[i])) ++i;
      if (i >= form.items.size() || !form.items[i].is_symbol("class")) {
        const SExp& bad = i < form.items.size() ? form.items[i] : form;
        throw ParseError("unknown-keyword", "expected 'class'", bad.loc);
      }
      if (form.items.size() != i + 6) arity_error(form, "class definition");
      if (!form.items[i + 2].is_symbol("extends")) {
        throw ParseError("unknown-keyword", "expected 'extends'", form.items[i + 2].loc);
      }
      ClassDef c;
      for (std::size_t a = 0; a < i; ++a) c.attributes.push_back(form.items[a].text);
      c.name = expect_symbol(form.items[i + 1], "class name");
      c.parent_name = expect_symbol(form.items[i + 3], "parent class name");
      c.loc = form.loc;
      if (p_.class_index_.count(c.name)) {
        throw ParseError("duplicate-class", "duplicate class '" + c.name + "'", form.loc);
      }
      c.id = static_cast<ClassId>(p_.classes_.size());
      p_.class_index_.emplace(c.name, c.id);
      p_.classes_.push_back(std::move(c));
      pending.push_back({&form, i});
    }

    for (ClassDef& c : p_.classes_) {
      if (c.implicit) continue;
      auto parent = p_.find_class(c.parent_name);
      if (!parent) {
        throw ParseError("unknown-parent-class", "unknown parent class '" + c.parent_name + "'",
                         c.loc);
      }
      c.parent = *parent;
    }
    for (const ClassDef& c : p_.classes_) {
      std::size_t steps = 0;
      for (ClassId k = c.id; k != kNoClass; k = p_.classes_[k].parent) {
        if (++steps > p_.classes_.size()) {
          throw ParseError("inheritance-cycle", "inheritance cycle through '" + c.name + "'", c.loc);
        }
      }
    }

    for (std::size_t k = 0; k < pending.size(); ++k) {
      ClassId id = static_cast<ClassId>(k + 1);
      const SExp& form = *pending[k].form;
      std::size_t at = pending[k].name_at;
      const SExp& fields = expect_list(form.items[at + 4], "field list");
      for (const SExp& f : fields.items) add_field(id, f);
      const SExp& methods = expect_list(form.items[at + 5], "method list");
      for (const SExp& m : methods.items) add_method(id, m);
    }
    return std::move(p_);
  }

 private:
  void add_field(ClassId cls, const SExp& form) {
    if (!form.is_list() || form.items.empty() || !form.items[0].is_symbol("field")) {
      throw ParseError("unknown-keyword", "expected (field ...)", form.loc);
    }
    std::size_t i = 1;
    FieldDef f;
    while (i < form.items.size() && is_attribute(form.items[i])) {
      f.attributes.push_back(form.items[i].text);
      ++i;
    }
    if (form.items.size() != i + 2) arity_error(form, "field definition");
    f.name = p_.intern(expect_symbol(form.items[i], "field name"));
    f.type = expect_symbol(form.items[i + 1], "field type");
    f.loc = form.loc;
    p_.classes_[cls].fields.push_back(std::move(f));
  }

  void add_method(ClassId cls, const SExp& form) {
    if (!form.is_list() || form.items.empty() || !form.items[0].is_symbol("method")) {
      throw ParseError("unknown-keyword", "expected (method ...)", form.loc);
    }
    const auto& items = form.items;
    std::size_t i = 1;
    MethodDef m;
    while (i < items.size() && is_attribute(items[i])) m.attributes.push_back(items[i++].text);
    if (items.size() < i + 5) arity_error(form, "method definition");
    m.name = expect_symbol(items[i], "method name");
    for (const SExp& t : expect_list(items[i + 1], "parameter types").items) {
      m.param_types.push_back(expect_symbol(t, "type"));
    }
    m.return_type = expect_symbol(items[i + 2], "return type");
    const SExp& throws = expect_list(items[i + 3], "(throws ...)");
    if (!throws.head() || !throws.head()->is_symbol("throws")) {
      throw ParseError("unknown-keyword", "expected (throws ...)", throws.loc);
    }
    for (std::size_t t = 1; t < throws.items.size(); ++t) {
      m.throws.push_back(expect_symbol(throws.items[t], "class name"));
    }
    const SExp& limit = expect_list(items[i + 4], "(limit n)");
    if (!limit.head() || !limit.head()->is_symbol("limit")) {
      throw ParseError("unknown-keyword", "expected (limit n)", limit.loc);
    }
    if (limit.items.size() != 2 || limit.items[1].kind != SExp::Kind::Int ||
        limit.items[1].value < 0) {
      throw ParseError("arity", "(limit n) takes one natural number", limit.loc);
    }
    m.limit = static_cast<std::uint32_t>(limit.items[1].value);
    m.owner = cls;
    m.id = static_cast<MethodId>(p_.methods_.size());
    m.first = static_cast<StmtRef>(p_.stmts_.size());
    m.loc = form.loc;
    for (std::size_t k = 0; k < m.param_types.size(); ++k) p_.intern(param_register_name(k));

    std::optional<std::int64_t> line;
    std::uint32_t ordinal = 0;
    for (std::size_t k = i + 5; k < items.size(); ++k) {
      Stmt s = parse_stmt(items[k]);
      s.id = static_cast<StmtRef>(p_.stmts_.size());
      s.method = m.id;
      s.ordinal = ordinal++;
      s.line = line;
      if (s.kind == StmtKind::Line) line = s.line_number;
      p_.stmts_.push_back(std::move(s));
    }
    m.size = ordinal;

    std::unordered_map<std::string, StmtRef> labels;
    for (StmtRef r = m.first; r < m.first + m.size; ++r) {
      if (p_.stmts_[r].kind == StmtKind::Label) labels.emplace(p_.stmts_[r].label, r);
    }
    for (StmtRef r = m.first; r < m.first + m.size; ++r) {
      Stmt& s = p_.stmts_[r];
      if (s.kind == StmtKind::Goto || s.kind == StmtKind::If || s.kind == StmtKind::PushHandler) {
        auto it = labels.find(s.label);
        if (it != labels.end()) s.target = it->second;
      }
    }
    p_.labels_.push_back(std::move(labels));
    p_.classes_[cls].methods.push_back(m.id);
    p_.methods_.push_back(std::move(m));
  }

  Symbol reg(const SExp& e) {
    const std::string& name = expect_symbol(e, "register name");
    std::string bare = strip_sigil(name);
    if (kReservedAtoms.count(bare) && bare != "this") {
      throw ParseError("syntax", "'" + bare + "' is not a register", e.loc);
    }
    return p_.intern(bare);
  }

  ClassId class_ref(const std::string& name) {
    auto id = p_.find_class(name);
    return id ? *id : kNoClass;
  }

  AExp parse_aexp(const SExp& e) {
    AExp a;
    switch (e.kind) {
      case SExp::Kind::Int:
        a.kind = AExp::Kind::Int;
        a.int_value = e.value;
        return a;
      case SExp::Kind::String:
        a.kind = AExp::Kind::Str;
        a.text = e.text;
        return a;
      case SExp::Kind::Symbol: {
        std::string bare = strip_sigil(e.text);
        if (bare == "this") {
          a.kind = AExp::Kind::This;
          a.reg = kThis;
        } else if (bare == "true") {
          a.kind = AExp::Kind::True;
        } else if (bare == "false") {
          a.kind = AExp::Kind::False;
        } else if (bare == "null") {
          a.kind = AExp::Kind::Null;
        } else if (bare == "void") {
          a.kind = AExp::Kind::Void;
        } else {
          a.kind = AExp::Kind::Reg;
          a.reg = p_.intern(bare);
        }
        return a;
      }
      case SExp::Kind::List:
        break;
    }
    const SExp* head = e.head();
    if (!head || !head->is_symbol()) {
      throw ParseError("syntax", "expected an atomic expression", e.loc);
    }
    if (head->text == "instance-of") {
      if (e.items.size() != 3) arity_error(e, "instance-of");
      a.kind = AExp::Kind::InstanceOf;
      a.args.push_back(parse_aexp(e.items[1]));
      a.text = expect_symbol(e.items[2], "class name");
      a.cls = class_ref(a.text);
      return a;
    }
    auto op = atomic_op_from_name(head->text);
    if (!op) throw ParseError("unknown-keyword", "unknown atomic operation '" + head->text + "'", e.loc);
    if (static_cast<int>(e.items.size()) - 1 != arity(*op)) {
      throw ParseError("op-arity",
                       "'" + head->text + "' takes " + std::to_string(arity(*op)) + " operand(s)", e.loc);
    }
    a.kind = AExp::Kind::Op;
    a.op = *op;
    for (std::size_t i = 1; i < e.items.size(); ++i) a.args.push_back(parse_aexp(e.items[i]));
    return a;
  }

  Stmt parse_stmt(const SExp& e) {
    const SExp* head = e.head();
    if (!head || !head->is_symbol()) throw ParseError("syntax", "expected a statement", e.loc);
    const std::string& kw = head->text;
    const auto n = e.items.size();
    Stmt s;
    s.loc = e.loc;
    auto need = [&](std::size_t count) {
      if (n != count) arity_error(e, kw);
    };
    if (kw == "label") {
      need(2);
      s.kind = StmtKind::Label;
      s.label = expect_symbol(e.items[1], "label");
    } else if (kw == "nop") {
      need(1);
      s.kind = StmtKind::Nop;
    } else if (kw == "line") {
      need(2);
      if (e.items[1].kind != SExp::Kind::Int) throw ParseError("syntax", "expected a line number", e.items[1].loc);
      s.kind = StmtKind::Line;
      s.line_number = e.items[1].value;
    } else if (kw == "goto") {
      need(2);
      s.kind = StmtKind::Goto;
      s.label = expect_symbol(e.items[1], "label");
    } else if (kw == "if") {
      need(3);
      const SExp& jump = e.items[2];
      if (!jump.is_list() || !jump.head() || !jump.head()->is_symbol("goto")) {
        throw ParseError("unknown-keyword", "expected (goto label) in if", jump.loc);
      }
      if (jump.items.size() != 2) arity_error(jump, "goto");
      s.kind = StmtKind::If;
      s.value = parse_aexp(e.items[1]);
      s.label = expect_symbol(jump.items[1], "label");
    } else if (kw == "assign") {
      need(3);
      s.reg = reg(e.items[1]);
      const SExp& rhs = e.items[2];
      const SExp* rh = rhs.head();
      if (rh && rh->is_symbol("new")) {
        if (rhs.items.size() != 2) arity_error(rhs, "new");
        s.kind = StmtKind::New;
        s.class_name = expect_symbol(rhs.items[1], "class name");
        s.cls = class_ref(s.class_name);
      } else if (rh && rh->is_symbol() && invoke_kind_from_name(rh->text)) {
        throw ParseError("invoke-in-assign",
                         "invoke is a statement; read its result from 'ret' with (assign x ret)",
                         rhs.loc);
      } else {
        s.kind = StmtKind::Assign;
        s.value = parse_aexp(rhs);
      }
    } else if (auto ik = invoke_kind_from_name(kw)) {
      need(5);
      s.kind = StmtKind::Invoke;
      s.invoke_kind = *ik;
      s.class_name = expect_symbol(e.items[1], "class name");
      s.cls = class_ref(s.class_name);
      s.method_name = expect_symbol(e.items[2], "method name");
      for (const SExp& a : expect_list(e.items[3], "argument list").items) s.args.push_back(parse_aexp(a));
      for (const SExp& t : expect_list(e.items[4], "type list").items) {
        s.arg_types.push_back(expect_symbol(t, "type"));
      }
    } else if (kw == "return") {
      need(2);
      s.kind = StmtKind::Return;
      s.value = parse_aexp(e.items[1]);
    } else if (kw == "field-put") {
      need(4);
      s.kind = StmtKind::FieldPut;
      s.object = parse_aexp(e.items[1]);
      s.field = p_.intern(expect_symbol(e.items[2], "field name"));
      s.value = parse_aexp(e.items[3]);
    } else if (kw == "field-get") {
      need(4);
      s.kind = StmtKind::FieldGet;
      s.reg = reg(e.items[1]);
      s.object = parse_aexp(e.items[2]);
      s.field = p_.intern(expect_symbol(e.items[3], "field name"));
    } else if (kw == "push-handler") {
      need(3);
      s.kind = StmtKind::PushHandler;
      s.class_name = expect_symbol(e.items[1], "class name");
      s.cls = class_ref(s.class_name);
      s.label = expect_symbol(e.items[2], "label");
    } else if (kw == "pop-handler") {
      need(1);
      s.kind = StmtKind::PopHandler;
    } else if (kw == "throw") {
      need(2);
      s.kind = StmtKind::Throw;
      s.value = parse_aexp(e.items[1]);
    } else {
      throw ParseError("unknown-keyword", "unknown statement '" + kw + "'", e.loc);
    }
    return s;
  }

  Program p_;
};

Program parse_program(std::string_view text) {
  Reader reader(text);
  return ProgramBuilder().build(reader.read_all());
}

Program parse_program_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_program(buf.str());
}

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

}  // namespace

std::string unparse(const Program& p, const AExp& e) {
  switch (e.kind) {
    case AExp::Kind::This: return "this";
    case AExp::Kind::True: return "true";
    case AExp::Kind::False: return "false";
    case AExp::Kind::Null: return "null";
    case AExp::Kind::Void: return "void";
    case AExp::Kind::Reg: return p.symbol_name(e.reg);
    case AExp::Kind::Int: return std::to_string(e.int_value);
    case AExp::Kind::Str: return quote(e.text);
    case AExp::Kind::InstanceOf: return "(instance-of " + unparse(p, e.args.at(0)) + " " + e.text + ")";
    case AExp::Kind::Op: {
      std::string out = "(" + std::string(to_string(e.op));
      for (const AExp& a : e.args) out += " " + unparse(p, a);
      return out + ")";
    }
  }
  return "?";
}

std::string unparse(const Program& p, const Stmt& s) {
  switch (s.kind) {
    case StmtKind::Label: return "(label " + s.label + ")";
    case StmtKind::Nop: return "(nop)";
    case StmtKind::Line: return "(line " + std::to_string(s.line_number) + ")";
    case StmtKind::Goto: return "(goto " + s.label + ")";
    case StmtKind::If: return "(if " + unparse(p, s.value) + " (goto " + s.label + "))";
    case StmtKind::Assign: return "(assign " + p.symbol_name(s.reg) + " " + unparse(p, s.value) + ")";
    case StmtKind::New: return "(assign " + p.symbol_name(s.reg) + " (new " + s.class_name + "))";
    case StmtKind::Invoke: {
      std::string args;
      for (const AExp& a : s.args) args += (args.empty() ? "" : " ") + unparse(p, a);
      return "(" + std::string(to_string(s.invoke_kind)) + " " + s.class_name + " " + s.method_name +
             " (" + args + ") (" + join_words(s.arg_types) + "))";
    }
    case StmtKind::Return: return "(return " + unparse(p, s.value) + ")";
    case StmtKind::FieldPut:
      return "(field-put " + unparse(p, s.object) + " " + p.symbol_name(s.field) + " " +
             unparse(p, s.value) + ")";
    case StmtKind::FieldGet:
      return "(field-get " + p.symbol_name(s.reg) + " " + unparse(p, s.object) + " " +
             p.symbol_name(s.field) + ")";
    case StmtKind::PushHandler: return "(push-handler " + s.class_name + " " + s.label + ")";
    case StmtKind::PopHandler: return "(pop-handler)";
    case StmtKind::Throw: return "(throw " + unparse(p, s.value) + ")";
  }
  return "?";
}

std::string unparse(const Program& p) {
  std::string out;
  for (const ClassDef& c : p.classes()) {
    if (c.implicit) continue;
    out += "(";
    for (const auto& a : c.attributes) out += a + " ";
    out += "class " + c.name + " extends " + c.parent_name + "\n  (";
    for (std::size_t i = 0; i < c.fields.size(); ++i) {
      const FieldDef& f = c.fields[i];
      if (i) out += "\n   ";
      out += "(field ";
      for (const auto& a : f.attributes) out += a + " ";
      out += p.symbol_name(f.name) + " " + f.type + ")";
    }
    out += ")\n  (";
    for (std::size_t i = 0; i < c.methods.size(); ++i) {
      const MethodDef& m = p.method(c.methods[i]);
      if (i) out += "\n   ";
      out += "(method ";
      for (const auto& a : m.attributes) out += a + " ";
      out += m.name + " (" + join_words(m.param_types) + ") " + m.return_type + " (throws";
      for (const auto& t : m.throws) out += " " + t;
      out += ") (limit " + std::to_string(m.limit) + ")";
      for (const Stmt& s : p.body(m)) out += "\n    " + unparse(p, s);
      out += ")";
    }
    out += "))\n";
  }
  return out;
}

}  // namespace pdexn
