#pragma once

#include <string>
#include <string_view>

namespace mtmkl {

enum class LossKind { kHinge, kLogistic };

/// Margin loss l(a), a = y * f(x), together with its convex conjugate l*.
/// Both catalog entries have conjugate domain [-1, 0].
class Loss {
 public:
  explicit Loss(LossKind kind = LossKind::kHinge) : kind_(kind) {}

  static Loss parse(std::string_view name);

  LossKind kind() const { return kind_; }
  std::string name() const;

  double eval(double a) const;
  /// +infinity outside [-1, 0]. Logistic uses 0*log(0) = 0 at both endpoints.
  double conjugate(double a) const;

  /// -C * l*(-alpha / C): the per-example contribution to the dual objective.
  double dual_term(double alpha, double C) const;

 private:
  LossKind kind_;
};

double loss_eval(const Loss& loss, double a);
double loss_conjugate(const Loss& loss, double a);

}  // namespace mtmkl
