#include "mtmkl/loss.hpp"

#include <cmath>
#include <limits>

#include "mtmkl/error.hpp"

namespace mtmkl {

namespace {

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace

Loss Loss::parse(std::string_view name) {
  if (name == "hinge") return Loss(LossKind::kHinge);
  if (name == "logistic") return Loss(LossKind::kLogistic);
  throw ParseError("unknown loss '" + std::string(name) + "' (expected hinge or logistic)");
}

std::string Loss::name() const { return kind_ == LossKind::kHinge ? "hinge" : "logistic"; }

double Loss::eval(double a) const {
  if (kind_ == LossKind::kHinge) return a < 1.0 ? 1.0 - a : 0.0;
  // log(1 + exp(-a)) without overflow for large |a|.
  if (a > 0.0) return std::log1p(std::exp(-a));
  return -a + std::log1p(std::exp(a));
}

double Loss::conjugate(double a) const {
  if (a < -1.0 || a > 0.0) return std::numeric_limits<double>::infinity();
  if (kind_ == LossKind::kHinge) return a;
  return xlogx(-a) + xlogx(1.0 + a);
}

double Loss::dual_term(double alpha, double C) const {
  if (kind_ == LossKind::kHinge) {
    return (alpha < 0.0 || alpha > C) ? -std::numeric_limits<double>::infinity() : alpha;
  }
  const double c = conjugate(-alpha / C);
  return std::isinf(c) ? -std::numeric_limits<double>::infinity() : -C * c;
}

double loss_eval(const Loss& loss, double a) { return loss.eval(a); }
double loss_conjugate(const Loss& loss, double a) { return loss.conjugate(a); }

}  // namespace mtmkl
