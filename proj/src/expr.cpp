#include "bta/expr.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <set>

namespace bta {

struct Expr::Node {
  Kind kind;
  std::string name;
  std::optional<Expr> lhs;
  std::optional<Expr> rhs;
  SourceSpan span;
};

Expr Expr::var(std::string name, SourceSpan span) {
  return Expr(std::make_shared<const Node>(Node{Kind::Var, std::move(name), std::nullopt, std::nullopt, span}));
}

Expr Expr::one(SourceSpan span) {
  return Expr(std::make_shared<const Node>(Node{Kind::One, {}, std::nullopt, std::nullopt, span}));
}

Expr Expr::zero(SourceSpan span) {
  return Expr(std::make_shared<const Node>(Node{Kind::Zero, {}, std::nullopt, std::nullopt, span}));
}

Expr Expr::negate(Expr operand, SourceSpan span) {
  return Expr(std::make_shared<const Node>(Node{Kind::Not, {}, std::move(operand), std::nullopt, span}));
}

Expr Expr::binary(Kind kind, Expr lhs, Expr rhs, SourceSpan span) {
  if (kind != Kind::And && kind != Kind::Or && kind != Kind::Xor && kind != Kind::Nor) {
    throw ContractViolation("Expr::binary needs a binary operator kind");
  }
  return Expr(std::make_shared<const Node>(Node{kind, {}, std::move(lhs), std::move(rhs), span}));
}

Expr::Kind Expr::kind() const { return node_->kind; }
const std::string& Expr::name() const { return node_->name; }
const Expr& Expr::lhs() const { return *node_->lhs; }
const Expr& Expr::rhs() const { return *node_->rhs; }
SourceSpan Expr::span() const { return node_->span; }

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Expr::Kind::Var: return a.name() == b.name();
    case Expr::Kind::One:
    case Expr::Kind::Zero: return true;
    case Expr::Kind::Not: return a.lhs() == b.lhs();
    default: return a.lhs() == b.lhs() && a.rhs() == b.rhs();
  }
}

namespace {

enum class Tok { Ident, One, Zero, Not, And, Or, Xor, Nor, LParen, RParen, End };

struct Token {
  Tok type;
  std::string_view text;
  std::size_t offset;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<Token> tokenize(std::string_view text) {
  struct Alias {
    std::string_view utf8;
    Tok type;
  };
  static constexpr Alias kAliases[] = {
      {"\xC2\xAC", Tok::Not}, {"\xE2\x88\xA7", Tok::And}, {"\xE2\x88\xA8", Tok::Or}, {"\xE2\x8A\xBB", Tok::Xor}};

  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    auto single = [&](Tok t) {
      out.push_back({t, text.substr(i, 1), i});
      ++i;
    };
    switch (c) {
      case '~': single(Tok::Not); continue;
      case '&': single(Tok::And); continue;
      case '|': single(Tok::Or); continue;
      case '^': single(Tok::Xor); continue;
      case '(': single(Tok::LParen); continue;
      case ')': single(Tok::RParen); continue;
      case '0': single(Tok::Zero); continue;
      case '1': single(Tok::One); continue;
      default: break;
    }
    if (ident_start(c)) {
      std::size_t j = i + 1;
      while (j < text.size() && ident_char(text[j])) ++j;
      const auto word = text.substr(i, j - i);
      out.push_back({word == "nor" ? Tok::Nor : Tok::Ident, word, i});
      i = j;
      continue;
    }
    bool matched = false;
    for (const auto& alias : kAliases) {
      if (text.substr(i).starts_with(alias.utf8)) {
        out.push_back({alias.type, text.substr(i, alias.utf8.size()), i});
        i += alias.utf8.size();
        matched = true;
        break;
      }
    }
    if (!matched) throw ParseError("unexpected character '" + std::string(1, c) + "'", i);
  }
  out.push_back({Tok::End, {}, text.size()});
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : tokens_(tokenize(text)) {}

  Expr parse() {
    if (peek().type == Tok::End) throw ParseError("empty expression", peek().offset);
    Expr e = parse_or();
    if (peek().type == Tok::RParen) throw ParseError("unbalanced ')'", peek().offset);
    if (peek().type != Tok::End) unexpected();
    return e;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& next() { return tokens_[pos_++]; }

  [[noreturn]] void unexpected() const {
    const auto& t = peek();
    if (t.type == Tok::End) throw ParseError("unexpected end of expression", t.offset);
    throw ParseError("unexpected token '" + std::string(t.text) + "'", t.offset);
  }

  SourceSpan span_from(std::size_t start) const {
    const std::size_t end = pos_ > 0 ? tokens_[pos_ - 1].offset + tokens_[pos_ - 1].text.size() : start;
    return {start, end - start};
  }

  Expr parse_or() {
    const std::size_t start = peek().offset;
    Expr lhs = parse_xor();
    while (peek().type == Tok::Or) {
      next();
      Expr rhs = parse_xor();
      lhs = Expr::binary(Expr::Kind::Or, lhs, rhs, span_from(start));
    }
    return lhs;
  }

  Expr parse_xor() {
    const std::size_t start = peek().offset;
    Expr lhs = parse_and();
    while (peek().type == Tok::Xor || peek().type == Tok::Nor) {
      const auto kind = next().type == Tok::Xor ? Expr::Kind::Xor : Expr::Kind::Nor;
      Expr rhs = parse_and();
      lhs = Expr::binary(kind, lhs, rhs, span_from(start));
    }
    return lhs;
  }

  Expr parse_and() {
    const std::size_t start = peek().offset;
    Expr lhs = parse_unary();
    while (peek().type == Tok::And) {
      next();
      Expr rhs = parse_unary();
      lhs = Expr::binary(Expr::Kind::And, lhs, rhs, span_from(start));
    }
    return lhs;
  }

  Expr parse_unary() {
    const std::size_t start = peek().offset;
    if (peek().type == Tok::Not) {
      next();
      Expr operand = parse_unary();
      return Expr::negate(operand, span_from(start));
    }
    return parse_primary();
  }

  Expr parse_primary() {
    const Token& t = peek();
    switch (t.type) {
      case Tok::Ident:
        next();
        return Expr::var(std::string(t.text), {t.offset, t.text.size()});
      case Tok::One:
        next();
        return Expr::one({t.offset, 1});
      case Tok::Zero:
        next();
        return Expr::zero({t.offset, 1});
      case Tok::LParen: {
        next();
        Expr inner = parse_or();
        if (peek().type != Tok::RParen) {
          if (peek().type == Tok::End) throw ParseError("unbalanced '(' opened here", t.offset);
          unexpected();
        }
        next();
        return inner;
      }
      default:
        unexpected();
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

int precedence(Expr::Kind k) {
  switch (k) {
    case Expr::Kind::Or: return 1;
    case Expr::Kind::Xor:
    case Expr::Kind::Nor: return 2;
    case Expr::Kind::And: return 3;
    case Expr::Kind::Not: return 4;
    default: return 5;
  }
}

void print(const Expr& e, std::string& out) {
  auto child = [&](const Expr& c, bool parens) {
    if (parens) out += '(';
    print(c, out);
    if (parens) out += ')';
  };
  const int p = precedence(e.kind());
  switch (e.kind()) {
    case Expr::Kind::Var: out += e.name(); return;
    case Expr::Kind::One: out += '1'; return;
    case Expr::Kind::Zero: out += '0'; return;
    case Expr::Kind::Not:
      out += '~';
      child(e.lhs(), precedence(e.lhs().kind()) < p);
      return;
    default: break;
  }
  child(e.lhs(), precedence(e.lhs().kind()) < p);
  switch (e.kind()) {
    case Expr::Kind::And: out += " & "; break;
    case Expr::Kind::Or: out += " | "; break;
    case Expr::Kind::Xor: out += " ^ "; break;
    default: out += " nor "; break;
  }
  child(e.rhs(), precedence(e.rhs().kind()) <= p);
}

void collect(const Expr& e, std::set<std::string>& names) {
  switch (e.kind()) {
    case Expr::Kind::Var: names.insert(e.name()); return;
    case Expr::Kind::One:
    case Expr::Kind::Zero: return;
    case Expr::Kind::Not: collect(e.lhs(), names); return;
    default:
      collect(e.lhs(), names);
      collect(e.rhs(), names);
  }
}

}  // namespace

Expr parse(std::string_view text) { return Parser(text).parse(); }

std::string to_string(const Expr& e) {
  std::string out;
  print(e, out);
  return out;
}

Expr lower(const Expr& e) {
  using K = Expr::Kind;
  switch (e.kind()) {
    case K::Var:
    case K::One:
    case K::Zero: return e;
    case K::Not: return Expr::negate(lower(e.lhs()), e.span());
    case K::And:
    case K::Or: return Expr::binary(e.kind(), lower(e.lhs()), lower(e.rhs()), e.span());
    case K::Xor: {
      Expr a = lower(e.lhs());
      Expr b = lower(e.rhs());
      return Expr::binary(K::And, Expr::binary(K::Or, a, b), Expr::negate(Expr::binary(K::And, a, b)), e.span());
    }
    case K::Nor:
      return Expr::negate(Expr::binary(K::Or, lower(e.lhs()), lower(e.rhs())), e.span());
  }
  return e;
}

std::vector<std::string> variables(const Expr& e) {
  std::set<std::string> names;
  collect(e, names);
  return {names.begin(), names.end()};
}

bool eval_bool(const Expr& e, const std::map<std::string, bool, std::less<>>& assignment) {
  using K = Expr::Kind;
  switch (e.kind()) {
    case K::Var: {
      auto it = assignment.find(e.name());
      if (it == assignment.end()) throw UnboundName(e.name(), e.span());
      return it->second;
    }
    case K::One: return true;
    case K::Zero: return false;
    case K::Not: return !eval_bool(e.lhs(), assignment);
    case K::And: return eval_bool(e.lhs(), assignment) && eval_bool(e.rhs(), assignment);
    case K::Or: return eval_bool(e.lhs(), assignment) || eval_bool(e.rhs(), assignment);
    case K::Xor: return eval_bool(e.lhs(), assignment) != eval_bool(e.rhs(), assignment);
    case K::Nor: return !(eval_bool(e.lhs(), assignment) || eval_bool(e.rhs(), assignment));
  }
  return false;
}

namespace {

Task eval_lowered(const Expr& e, const TaskBindings& bindings, const TaskAlgebra& alg) {
  using K = Expr::Kind;
  switch (e.kind()) {
    case K::Var: {
      auto it = bindings.find(e.name());
      if (it == bindings.end()) throw UnboundName(e.name(), e.span());
      return it->second;
    }
    case K::One: return alg.universal();
    case K::Zero: return alg.empty();
    case K::Not: return alg.negate(eval_lowered(e.lhs(), bindings, alg));
    case K::And: return alg.conjoin(eval_lowered(e.lhs(), bindings, alg), eval_lowered(e.rhs(), bindings, alg));
    case K::Or: return alg.disjoin(eval_lowered(e.lhs(), bindings, alg), eval_lowered(e.rhs(), bindings, alg));
    default: throw ContractViolation("expression was not lowered");
  }
}

}  // namespace

Task eval_task(const Expr& e, const TaskBindings& bindings, const TaskAlgebra& alg) {
  Task t = eval_lowered(lower(e), bindings, alg);
  t.name = to_string(e);
  return t;
}

std::vector<Task> GoalLabeling::tasks(const TaskAlgebra& alg) const {
  std::vector<Task> out;
  for (std::size_t j = 0; j < columns.size(); ++j) out.push_back(alg.task(columns[j], names[j]));
  return out;
}

TaskBindings GoalLabeling::bindings(const TaskAlgebra& alg) const {
  TaskBindings out;
  for (auto& t : tasks(alg)) out.emplace(t.name, t);
  return out;
}

int min_label_bits(int num_goals) {
  if (num_goals < 1) throw ValidationError("need at least one goal");
  int k = 1;
  while ((std::uint64_t{1} << k) < static_cast<std::uint64_t>(num_goals)) ++k;
  return k;
}

GoalLabeling select_base_tasks(const GridWorld& world, std::optional<int> num_bits, std::vector<std::string> names) {
  const int n = world.num_goals();
  const int k = num_bits.value_or(min_label_bits(n));
  if (k < 1 || k > 63) throw ValidationError("label width must lie in [1, 63], got " + std::to_string(k));
  if ((std::uint64_t{1} << k) < static_cast<std::uint64_t>(n)) {
    throw ValidationError(std::to_string(k) + " label bits cannot distinguish " + std::to_string(n) + " goals");
  }
  if (names.empty()) {
    for (int j = 0; j < k; ++j) names.push_back("x" + std::to_string(j + 1));
  }
  if (static_cast<int>(names.size()) != k) {
    throw ValidationError("expected " + std::to_string(k) + " base task names, got " + std::to_string(names.size()));
  }

  GoalLabeling lab;
  lab.num_bits = k;
  lab.names = std::move(names);
  const std::uint64_t top = (k == 63 ? ~std::uint64_t{0} >> 1 : (std::uint64_t{1} << k) - 1);
  for (int g = 0; g < n; ++g) lab.labels.push_back(top - static_cast<std::uint64_t>(g));
  for (int j = 0; j < k; ++j) {
    GoalSet col(n);
    for (int g = 0; g < n; ++g)
      if ((lab.labels[g] >> lab.bit_of_column(j)) & 1U) col.insert(g);
    lab.columns.push_back(std::move(col));
  }
  return lab;
}

Expr minterm(std::uint64_t label, const GoalLabeling& labeling) {
  std::optional<Expr> acc;
  for (int j = 0; j < labeling.num_bits; ++j) {
    Expr lit = Expr::var(labeling.names[j]);
    if (!((label >> labeling.bit_of_column(j)) & 1U)) lit = Expr::negate(lit);
    acc = acc ? Expr::binary(Expr::Kind::And, *acc, lit) : lit;
  }
  return *acc;
}

std::vector<EnumeratedTask> enumerate_boolean_tasks(int num_bits, const GoalLabeling& labeling) {
  if (num_bits < 1 || num_bits > 4) {
    throw ValidationError("enumeration supports 1 to 4 base tasks, got " + std::to_string(num_bits));
  }
  if (num_bits != labeling.num_bits) throw ValidationError("labeling width does not match K");
  const std::size_t rows = std::size_t{1} << num_bits;
  const std::uint64_t functions = std::uint64_t{1} << rows;
  std::vector<EnumeratedTask> out;
  out.reserve(functions);
  for (std::uint64_t f = 0; f < functions; ++f) {
    EnumeratedTask t{std::vector<bool>(rows), Expr::zero()};
    std::optional<Expr> acc;
    for (std::size_t r = 0; r < rows; ++r) {
      t.truth_table[r] = (f >> r) & 1U;
      if (!t.truth_table[r]) continue;
      Expr m = minterm(r, labeling);
      acc = acc ? Expr::binary(Expr::Kind::Or, *acc, m) : m;
    }
    if (f == functions - 1) {
      t.expr = Expr::one();
    } else if (acc) {
      t.expr = *acc;
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace bta
