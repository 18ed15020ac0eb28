#include "mtmkl/kernel_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mtmkl/error.hpp"
#include "mtmkl/rng.hpp"

namespace mtmkl {

namespace {

constexpr double kThetaFloor = 1e-12;

double dual_norm(const std::vector<double>& x, double p) {
  if (p == 1.0) return *std::max_element(x.begin(), x.end());
  const double q = p / (p - 1.0);
  double s = 0.0;
  for (double v : x) s += std::pow(std::abs(v), q);
  return std::pow(s, 1.0 / q);
}

Matrix combined_kernel(const MultitaskKernelSet& kernels, std::span<const double> theta) {
  const auto n = static_cast<Eigen::Index>(kernels.size());
  Matrix kappa = Matrix::Zero(n, n);
  for (std::size_t m = 0; m < kernels.kernels.size(); ++m) kappa += theta[m] * kernels.kernels[m];
  return kappa;
}

Vector signed_alpha(const MultitaskKernelSet& kernels, std::span<const double> alpha) {
  Vector u(static_cast<Eigen::Index>(kernels.size()));
  for (std::size_t i = 0; i < kernels.size(); ++i) u(static_cast<Eigen::Index>(i)) = alpha[i] * kernels.labels[i];
  return u;
}

/// argmax over d of  -C phi((alpha+d)/C) - d*yg - d^2 k / 2  with
/// phi(a) = a log a + (1-a) log(1-a). Returns the new alpha.
double logistic_coordinate(double alpha, double yg, double k, double C) {
  auto slope = [&](double a) { return -std::log(a / (1.0 - a)) - yg - (a * C - alpha) * k; };
  double lo = 0.0, hi = 1.0;
  double a = std::clamp(alpha / C, 1e-12, 1.0 - 1e-12);
  for (int iter = 0; iter < 100; ++iter) {
    const double s = slope(a);
    if (s > 0.0) {
      lo = a;
    } else {
      hi = a;
    }
    const double derivative = -1.0 / (a * (1.0 - a)) - C * k;
    double next = a - s / derivative;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - a) <= 1e-15 * std::max(1.0, a)) {
      a = next;
      break;
    }
    a = next;
  }
  return a * C;
}

}  // namespace

Matrix linear_kernel(const View& view) {
  const auto n = static_cast<Eigen::Index>(view.rows.size());
  Matrix K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      K(i, j) = K(j, i) = dot(view.rows[static_cast<std::size_t>(i)], view.rows[static_cast<std::size_t>(j)]);
    }
  }
  return K;
}

MultitaskKernelSet build_multitask_kernels(std::span<const Matrix> base_kernels, std::span<const Matrix> qinvs,
                                           std::span<const int> labels, std::span<const std::size_t> tasks) {
  if (base_kernels.size() != qinvs.size() || base_kernels.empty()) {
    throw InfeasibleConfig("need one task kernel per base kernel");
  }
  if (labels.size() != tasks.size()) throw InfeasibleConfig("labels and tasks differ in length");
  const auto n = static_cast<Eigen::Index>(labels.size());
  MultitaskKernelSet set;
  set.labels.assign(labels.begin(), labels.end());
  set.tasks.assign(tasks.begin(), tasks.end());
  for (std::size_t m = 0; m < base_kernels.size(); ++m) {
    const Matrix& K = base_kernels[m];
    const Matrix& Qinv = qinvs[m];
    if (K.rows() != n || K.cols() != n) {
      throw InfeasibleConfig("base kernel " + std::to_string(m) + " is not " + std::to_string(n) + "x" +
                             std::to_string(n));
    }
    for (std::size_t t : tasks) {
      if (static_cast<Eigen::Index>(t) >= Qinv.rows() || Qinv.rows() != Qinv.cols()) {
        throw InfeasibleConfig("task kernel " + std::to_string(m) + " does not cover task " + std::to_string(t));
      }
    }
    Matrix Kt(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        Kt(i, j) = Qinv(static_cast<Eigen::Index>(tasks[i]), static_cast<Eigen::Index>(tasks[j])) * K(i, j);
      }
    }
    set.kernels.push_back(std::move(Kt));
  }
  return set;
}

MultitaskKernelSet build_multitask_kernels(const Problem& problem) {
  std::vector<Matrix> base, qinvs;
  for (std::size_t m = 0; m < problem.num_kernels(); ++m) {
    base.push_back(linear_kernel(problem.data().view(problem.kernels()[m].view)));
    qinvs.push_back(problem.Qinv(m));
  }
  return build_multitask_kernels(base, qinvs, problem.data().labels(), problem.data().tasks());
}

double norm_term(const MultitaskKernelSet& kernels, std::size_t m, std::span<const double> alpha) {
  const Vector u = signed_alpha(kernels, alpha);
  return u.dot(kernels.kernels.at(m) * u);
}

OracleResult oracle_evaluate(const MultitaskKernelSet& kernels, std::span<const double> alpha,
                             std::span<const double> theta, const SolverConfig& config) {
  const std::size_t M = kernels.kernels.size();
  const Vector u = signed_alpha(kernels, alpha);
  std::vector<double> norms(M);
  Vector g = Vector::Zero(static_cast<Eigen::Index>(kernels.size()));
  double reg = 0.0;
  for (std::size_t m = 0; m < M; ++m) {
    const Vector Ku = kernels.kernels[m] * u;
    norms[m] = u.dot(Ku);
    g += theta[m] * Ku;
    reg += theta[m] * norms[m];
  }
  double loss = 0.0, dual_loss = 0.0;
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    loss += config.loss.eval(kernels.labels[i] * g(static_cast<Eigen::Index>(i)));
    dual_loss += config.loss.dual_term(alpha[i], config.C);
  }
  OracleResult r;
  r.alpha.assign(alpha.begin(), alpha.end());
  r.theta.assign(theta.begin(), theta.end());
  r.objective = 0.5 * reg + config.C * loss;
  r.dual_partial = dual_loss - 0.5 * reg;
  r.dual_complete = dual_loss - 0.5 * dual_norm(norms, config.p);
  return r;
}

OracleResult oracle_train(const MultitaskKernelSet& kernels, const SolverConfig& config) {
  config.validate();
  const std::size_t n = kernels.size();
  const std::size_t M = kernels.kernels.size();
  if (n == 0 || M == 0) throw InfeasibleConfig("oracle needs a non-empty kernel set");

  std::vector<double> theta(M, std::pow(1.0 / static_cast<double>(M), 1.0 / config.p));
  std::vector<double> alpha(n, 0.0);
  Matrix kappa = combined_kernel(kernels, theta);
  Vector g = Vector::Zero(static_cast<Eigen::Index>(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(config.seed);
  const bool hinge = config.loss.kind() == LossKind::kHinge;

  double previous = oracle_evaluate(kernels, alpha, theta, config).objective;
  OracleResult result;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    if (config.sweep_order == SweepOrder::kShuffled) rng.shuffle(order.begin(), order.end());
    const double scale = std::max(1.0, kappa.diagonal().cwiseAbs().maxCoeff());
    for (std::size_t i : order) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double k = kappa(ii, ii);
      if (k < -1e-12 * scale) {
        throw NumericalError("combined kernel has negative curvature at example " + std::to_string(i));
      }
      const double y = kernels.labels[i];
      const double yg = y * g(ii);
      double updated;
      if (hinge) {
        if (k <= 0.0) continue;
        updated = std::clamp(alpha[i] + (1.0 - yg) / k, 0.0, config.C);
      } else {
        updated = logistic_coordinate(alpha[i], yg, std::max(k, 0.0), config.C);
      }
      const double d = updated - alpha[i];
      if (d == 0.0) continue;
      alpha[i] = updated;
      g += (d * y) * kappa.col(ii);
    }

    if (config.learn_theta) {
      std::vector<double> r(M);
      for (std::size_t m = 0; m < M; ++m) r[m] = theta[m] * theta[m] * norm_term(kernels, m, alpha);
      theta = theta_step(r, config.p);
      double norm = 0.0;
      for (double& t : theta) {
        t = std::max(t, kThetaFloor);
        norm += std::pow(t, config.p);
      }
      norm = std::pow(norm, 1.0 / config.p);
      for (double& t : theta) t /= norm;
      kappa = combined_kernel(kernels, theta);
      g = kappa * signed_alpha(kernels, alpha);
    }

    result = oracle_evaluate(kernels, alpha, theta, config);
    result.epochs = epoch;
    if (!std::isfinite(result.objective)) throw NumericalError("oracle objective is not finite");
    const double relative = std::abs(previous - result.objective) / std::max(std::abs(previous), 1e-300);
    previous = result.objective;
    const bool gap_hit = config.stop_rule != StopRule::kRelativeChange &&
                         result.gap() <= config.epsilon * (1.0 + std::abs(result.objective));
    const bool relative_hit = config.stop_rule != StopRule::kDualityGap && relative < config.epsilon;
    if (gap_hit || relative_hit) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace mtmkl
