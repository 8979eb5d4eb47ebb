#pragma once

#include <map>
#include <string>

#include <Eigen/Core>

#include "bta/evf.hpp"
#include "bta/expr.hpp"

namespace bta {

// Pointwise kernels over any Eigen array expression. They return lazy
// expressions, so nested compositions fuse into a single pass.

template <typename U, typename E, typename Q>
auto evf_not(const Eigen::ArrayBase<U>& universal, const Eigen::ArrayBase<E>& empty,
             const Eigen::ArrayBase<Q>& q) {
  return (universal + empty) - q;
}

template <typename A, typename B>
auto evf_or(const Eigen::ArrayBase<A>& a, const Eigen::ArrayBase<B>& b) {
  return a.max(b);
}

template <typename A, typename B>
auto evf_and(const Eigen::ArrayBase<A>& a, const Eigen::ArrayBase<B>& b) {
  return a.min(b);
}

/// Bounds of the value-function algebra: the optimal EVFs of M_U and M_0.
template <typename Scalar>
class EvfAlgebra {
 public:
  EvfAlgebra(ExtendedQ<Scalar> universal, ExtendedQ<Scalar> empty)
      : universal_(std::move(universal)), empty_(std::move(empty)) {
    require_same_shape(universal_, empty_);
  }

  const ExtendedQ<Scalar>& universal() const { return universal_; }
  const ExtendedQ<Scalar>& empty() const { return empty_; }

  ExtendedQ<Scalar> negate(const ExtendedQ<Scalar>& q) const {
    require_same_shape(universal_, q);
    return {evf_not(universal_.values(), empty_.values(), q.values()), q.goals(), q.rbar_min()};
  }

 private:
  ExtendedQ<Scalar> universal_;
  ExtendedQ<Scalar> empty_;
};

template <typename Scalar>
ExtendedQ<Scalar> evf_not(const ExtendedQ<Scalar>& q, const EvfAlgebra<Scalar>& alg) {
  return alg.negate(q);
}

template <typename Scalar>
ExtendedQ<Scalar> evf_or(const ExtendedQ<Scalar>& a, const ExtendedQ<Scalar>& b) {
  require_same_shape(a, b);
  return {evf_or(a.values(), b.values()), a.goals(), std::min(a.rbar_min(), b.rbar_min())};
}

template <typename Scalar>
ExtendedQ<Scalar> evf_and(const ExtendedQ<Scalar>& a, const ExtendedQ<Scalar>& b) {
  require_same_shape(a, b);
  return {evf_and(a.values(), b.values()), a.goals(), std::min(a.rbar_min(), b.rbar_min())};
}

template <typename Scalar>
using EvfBindings = std::map<std::string, ExtendedQ<Scalar>, std::less<>>;

namespace detail {

template <typename Scalar>
typename ExtendedQ<Scalar>::Table compose_values(const Expr& e, const EvfBindings<Scalar>& bindings,
                                                 const EvfAlgebra<Scalar>& alg) {
  switch (e.kind()) {
    case Expr::Kind::One:
      return alg.universal().values();
    case Expr::Kind::Zero:
      return alg.empty().values();
    case Expr::Kind::Var: {
      auto it = bindings.find(e.name());
      if (it == bindings.end()) throw UnboundName(e.name(), e.span());
      require_same_shape(alg.universal(), it->second);
      return it->second.values();
    }
    case Expr::Kind::Not:
      return evf_not(alg.universal().values(), alg.empty().values(), compose_values(e.lhs(), bindings, alg));
    case Expr::Kind::And:
      return evf_and(compose_values(e.lhs(), bindings, alg), compose_values(e.rhs(), bindings, alg));
    case Expr::Kind::Or:
      return evf_or(compose_values(e.lhs(), bindings, alg), compose_values(e.rhs(), bindings, alg));
    case Expr::Kind::Xor:
    case Expr::Kind::Nor:
      return compose_values(lower(e), bindings, alg);
  }
  throw ContractViolation("unknown expression node");
}

}  // namespace detail

/// Zero-shot composition: evaluates `e` over bound EVFs with the pointwise
/// operators; 1 and 0 map to the algebra's bounds. Xor and nor are lowered to
/// the three primitive operators first.
template <typename Scalar>
ExtendedQ<Scalar> compose(const Expr& e, const EvfBindings<Scalar>& bindings, const EvfAlgebra<Scalar>& alg) {
  if (e.kind() == Expr::Kind::Var) {
    auto it = bindings.find(e.name());
    if (it == bindings.end()) throw UnboundName(e.name(), e.span());
    require_same_shape(alg.universal(), it->second);
    return it->second;
  }
  return {detail::compose_values(e, bindings, alg), alg.universal().goals(), alg.universal().rbar_min()};
}

}  // namespace bta
