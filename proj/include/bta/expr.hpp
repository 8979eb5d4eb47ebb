#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bta/task_algebra.hpp"

namespace bta {

struct SourceSpan {
  std::size_t offset = 0;
  std::size_t length = 0;
};

class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : ValidationError("syntax error at offset " + std::to_string(offset) + ": " + what), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class UnboundName : public ValidationError {
 public:
  UnboundName(const std::string& name, SourceSpan span)
      : ValidationError("unbound name '" + name + "' at offset " + std::to_string(span.offset)), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

/// Immutable Boolean expression over named base tasks. Nodes share
/// structure, so copies are cheap.
class Expr {
 public:
  enum class Kind { Var, Not, And, Or, Xor, Nor, One, Zero };

  static Expr var(std::string name, SourceSpan span = {});
  static Expr one(SourceSpan span = {});
  static Expr zero(SourceSpan span = {});
  static Expr negate(Expr operand, SourceSpan span = {});
  static Expr binary(Kind kind, Expr lhs, Expr rhs, SourceSpan span = {});

  Kind kind() const;
  const std::string& name() const;
  const Expr& lhs() const;
  const Expr& rhs() const;
  SourceSpan span() const;

  /// Structural equality; spans are ignored.
  friend bool operator==(const Expr& a, const Expr& b);

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// Precedence, tightest first: `~`, `&`, `^` and `nor`, `|`. Binary operators
/// are left-associative. Unicode ¬ ∧ ∨ ⊻ are accepted as aliases.
Expr parse(std::string_view text);

/// Minimal-parenthesis rendering that reparses to the same tree.
std::string to_string(const Expr& e);

/// Rewrites xor and nor into not/and/or:
/// a ^ b = (a | b) & ~(a & b), a nor b = ~(a | b).
Expr lower(const Expr& e);

/// Names of the variables, sorted and unique.
std::vector<std::string> variables(const Expr& e);

bool eval_bool(const Expr& e, const std::map<std::string, bool, std::less<>>& assignment);

using TaskBindings = std::map<std::string, Task, std::less<>>;

/// Evaluates the expression in the task algebra; 1 is M_U, 0 is M_0.
Task eval_task(const Expr& e, const TaskBindings& bindings, const TaskAlgebra& alg);

/// Boolean labels for goals; column j of the label table is base task j.
struct GoalLabeling {
  int num_bits = 0;
  std::vector<std::uint64_t> labels;  // per goal
  std::vector<std::string> names;     // per base task
  std::vector<GoalSet> columns;       // desired goals of each base task

  /// Bit of `label` that column `j` reads.
  int bit_of_column(int j) const { return num_bits - 1 - j; }
  std::vector<Task> tasks(const TaskAlgebra& alg) const;
  TaskBindings bindings(const TaskAlgebra& alg) const;
};

/// Smallest K with 2^K >= n, at least 1.
int min_label_bits(int num_goals);

/// Goal i (row-major order) gets label 2^K - 1 - i, so with four goals the
/// first goal carries all ones and the last all zeros. Column j reads bit
/// K - 1 - j. Names default to x1..xK.
GoalLabeling select_base_tasks(const GridWorld& world, std::optional<int> num_bits = std::nullopt,
                               std::vector<std::string> names = {});

struct EnumeratedTask {
  std::vector<bool> truth_table;  // row r = the label whose column bits are r's bits
  Expr expr;
};

/// All 2^(2^K) Boolean functions of the labeling's K base tasks as minterm
/// disjunctions, with 0 and 1 for the constant tables. K is capped at 4.
std::vector<EnumeratedTask> enumerate_boolean_tasks(int num_bits, const GoalLabeling& labeling);

/// Minterm selecting exactly the goals labelled `label`.
Expr minterm(std::uint64_t label, const GoalLabeling& labeling);

}  // namespace bta
