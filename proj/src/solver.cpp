#include "mtmkl/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "mtmkl/error.hpp"
#include "mtmkl/rng.hpp"

namespace mtmkl {

namespace {

constexpr double kThetaFloor = 1e-12;
constexpr double kNegativeNormTolerance = 1e-8;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::span<double> column(Matrix& W, std::size_t t) {
  return {W.col(static_cast<Eigen::Index>(t)).data(), static_cast<std::size_t>(W.rows())};
}

std::span<const double> column(const Matrix& W, std::size_t t) {
  return {W.col(static_cast<Eigen::Index>(t)).data(), static_cast<std::size_t>(W.rows())};
}

double p_norm(std::span<const double> x, double p) {
  double s = 0.0;
  for (double v : x) s += std::pow(std::abs(v), p);
  return std::pow(s, 1.0 / p);
}

/// Conjugate-exponent norm ||x||_{p*}, p* = p/(p-1); p = 1 gives the max norm.
double dual_norm(std::span<const double> x, double p) {
  if (p == 1.0) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
  }
  return p_norm(x, p / (p - 1.0));
}

}  // namespace

void SolverConfig::validate() const {
  if (!(C > 0.0) || !std::isfinite(C)) throw InfeasibleConfig("C must be a positive finite number");
  if (!(p >= 1.0) || !std::isfinite(p)) throw InfeasibleConfig("p must be >= 1");
  if (!(epsilon > 0.0)) throw InfeasibleConfig("epsilon must be > 0");
  if (max_epochs == 0) throw InfeasibleConfig("max_epochs must be >= 1");
  if (gap_check_interval == 0) throw InfeasibleConfig("gap_check_interval must be >= 1");
}

SweepOrder parse_sweep_order(const std::string& name) {
  if (name == "sequential") return SweepOrder::kSequential;
  if (name == "shuffled") return SweepOrder::kShuffled;
  throw ParseError("unknown sweep order '" + name + "' (sequential|shuffled)");
}

StopRule parse_stop_rule(const std::string& name) {
  if (name == "relative") return StopRule::kRelativeChange;
  if (name == "gap") return StopRule::kDualityGap;
  if (name == "either") return StopRule::kEither;
  throw ParseError("unknown stop rule '" + name + "' (relative|gap|either)");
}

std::string to_string(SweepOrder order) { return order == SweepOrder::kSequential ? "sequential" : "shuffled"; }

std::string to_string(StopRule rule) {
  switch (rule) {
    case StopRule::kRelativeChange: return "relative";
    case StopRule::kDualityGap: return "gap";
    case StopRule::kEither: return "either";
  }
  return "either";
}

std::string to_string(TrainStatus status) {
  switch (status) {
    case TrainStatus::kConvergedGap: return "converged_gap";
    case TrainStatus::kConvergedRelativeChange: return "converged_relative_change";
    case TrainStatus::kMaxEpochs: return "max_epochs";
  }
  return "max_epochs";
}

std::vector<KernelTerm> assign_kernels(std::vector<TaskSimilarity> similarities, std::size_t num_views) {
  if (similarities.empty()) throw InfeasibleConfig("no task similarity given");
  if (num_views == 0) throw InfeasibleConfig("dataset has no feature view");
  std::vector<KernelTerm> kernels;
  if (num_views == 1) {
    for (auto& s : similarities) kernels.push_back({0, std::move(s)});
  } else if (similarities.size() == num_views) {
    for (std::size_t m = 0; m < num_views; ++m) kernels.push_back({m, std::move(similarities[m])});
  } else if (similarities.size() == 1) {
    for (std::size_t m = 0; m < num_views; ++m) kernels.push_back({m, similarities.front()});
  } else {
    throw InfeasibleConfig(std::to_string(similarities.size()) + " task similarities cannot be paired with " +
                           std::to_string(num_views) + " views");
  }
  return kernels;
}

// --- Problem --------------------------------------------------------------

Problem::Problem(const MultiTaskDataset& data, std::vector<KernelTerm> kernels)
    : data_(&data), kernels_(std::move(kernels)) {
  if (kernels_.empty()) throw InfeasibleConfig("problem needs at least one kernel");
  const std::size_t n = data.size();
  const std::size_t T = data.num_tasks();
  const auto Ti = static_cast<Eigen::Index>(T);
  for (std::size_t m = 0; m < kernels_.size(); ++m) {
    const auto& k = kernels_[m];
    if (k.view >= data.num_views()) {
      throw InfeasibleConfig("kernel " + std::to_string(m) + " refers to missing view " + std::to_string(k.view));
    }
    if (k.similarity.Q.rows() != Ti || k.similarity.Q.cols() != Ti || k.similarity.Qinv.rows() != Ti ||
        k.similarity.Qinv.cols() != Ti) {
      throw InfeasibleConfig("kernel " + std::to_string(m) + " similarity is not " + std::to_string(T) + "x" +
                             std::to_string(T));
    }
  }
  diagonal_.resize(kernels_.size() * n);
  coupled_.resize(kernels_.size() * T);
  for (std::size_t m = 0; m < kernels_.size(); ++m) {
    const Matrix& qinv = kernels_[m].similarity.Qinv;
    for (std::size_t s = 0; s < T; ++s) {
      for (std::size_t t = 0; t < T; ++t) {
        const double q = qinv(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t));
        if (q != 0.0) coupled_[m * T + s].push_back({t, q});
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto tau = static_cast<Eigen::Index>(data.task(i));
      diagonal_[m * n + i] = qinv(tau, tau) * features(m, i).squared_norm();
    }
  }
}

// --- state and theta ------------------------------------------------------

ModelState initial_state(const Problem& problem, const SolverConfig& config) {
  const std::size_t M = problem.num_kernels();
  ModelState state;
  state.theta.assign(M, std::pow(1.0 / static_cast<double>(M), 1.0 / config.p));
  state.alpha.assign(problem.size(), 0.0);
  state.W.reserve(M);
  for (std::size_t m = 0; m < M; ++m) {
    state.W.push_back(Matrix::Zero(static_cast<Eigen::Index>(problem.dimension(m)),
                                   static_cast<Eigen::Index>(problem.num_tasks())));
  }
  double loss0 = 0.0;
  for (std::size_t i = 0; i < problem.size(); ++i) loss0 += config.loss.eval(0.0);
  state.primal_objective = config.C * loss0;
  return state;
}

std::vector<double> theta_step(std::span<const double> r, double p) {
  const std::size_t M = r.size();
  if (M == 0) return {};
  std::vector<double> clean(M);
  for (std::size_t m = 0; m < M; ++m) {
    if (!(r[m] >= -kNegativeNormTolerance)) {
      throw NumericalError("regularizer term r_" + std::to_string(m) + " = " + std::to_string(r[m]) +
                           " is negative; task similarity is not PSD on the current weights");
    }
    clean[m] = std::max(0.0, r[m]);
  }
  double denom = 0.0;
  for (double v : clean) denom += std::pow(v, p / (p + 1.0));
  std::vector<double> theta(M);
  if (denom == 0.0) {
    std::fill(theta.begin(), theta.end(), std::pow(1.0 / static_cast<double>(M), 1.0 / p));
    return theta;
  }
  denom = std::pow(denom, 1.0 / p);
  for (std::size_t m = 0; m < M; ++m) theta[m] = std::pow(clean[m], 1.0 / (p + 1.0)) / denom;
  return theta;
}

std::vector<double> regularizer_terms(const ModelState& state, const Problem& problem) {
  std::vector<double> r(problem.num_kernels());
  for (std::size_t m = 0; m < r.size(); ++m) {
    const Matrix gram = state.W[m].transpose() * state.W[m];
    r[m] = gram.cwiseProduct(problem.Q(m)).sum();
  }
  return r;
}

std::vector<double> theta_step(const ModelState& state, const Problem& problem, double p) {
  return theta_step(regularizer_terms(state, problem), p);
}

// --- coordinate ascent ----------------------------------------------------

double decision_value(const ModelState& state, const Problem& problem, std::size_t i) {
  const std::size_t tau = problem.data().task(i);
  double f = 0.0;
  for (std::size_t m = 0; m < problem.num_kernels(); ++m) {
    f += problem.features(m, i).dot(column(state.W[m], tau));
  }
  return f;
}

double coordinate_update(std::size_t i, const ModelState& state, const Problem& problem,
                         const SolverConfig& config) {
  const std::size_t tau = problem.data().task(i);
  const double y = problem.data().label(i);
  double f = 0.0;
  double curvature = 0.0;
  for (std::size_t m = 0; m < problem.num_kernels(); ++m) {
    const double inner = problem.features(m, i).dot(column(state.W[m], tau));
    f += config.literal_numerator ? state.theta[m] * inner : inner;
    curvature += state.theta[m] * problem.kernel_diagonal(m, i);
  }
  if (!(curvature > 0.0)) return 0.0;
  const double alpha = state.alpha[i];
  const double step = (1.0 - y * f) / curvature;
  return std::max(-alpha, std::min(config.C - alpha, step));
}

void apply_alpha_update(ModelState& state, std::size_t i, double d, const Problem& problem) {
  if (d == 0.0) return;
  state.alpha[i] += d;
  const std::size_t tau = problem.data().task(i);
  const double y = problem.data().label(i);
  for (std::size_t m = 0; m < problem.num_kernels(); ++m) {
    const double scale = d * state.theta[m] * y;
    const FeatureVector& phi = problem.features(m, i);
    for (const auto& [t, q] : problem.coupled_tasks(m, tau)) phi.add_to(column(state.W[m], t), scale * q);
  }
}

void apply_theta_rescale(ModelState& state, std::span<const double> theta_new) {
  if (theta_new.size() != state.theta.size()) throw NumericalError("theta size mismatch in rescale");
  for (std::size_t m = 0; m < state.theta.size(); ++m) {
    if (!(state.theta[m] > 0.0)) {
      throw NumericalError("theta_" + std::to_string(m) + " = " + std::to_string(state.theta[m]) +
                           " is not positive; cannot rescale weights");
    }
  }
  for (std::size_t m = 0; m < state.theta.size(); ++m) {
    state.W[m] *= theta_new[m] / state.theta[m];
    state.theta[m] = theta_new[m];
  }
}

// --- objectives -----------------------------------------------------------

Objectives evaluate_objectives(const ModelState& state, const Problem& problem, const SolverConfig& config) {
  Objectives o;
  o.r = regularizer_terms(state, problem);
  const std::size_t M = problem.num_kernels();
  o.norms.resize(M);
  double reg = 0.0;
  for (std::size_t m = 0; m < M; ++m) {
    const double theta = state.theta[m];
    const double r = std::max(0.0, o.r[m]);
    if (theta > 0.0) {
      reg += r / theta;
      o.norms[m] = r / (theta * theta);
    } else {
      // 0/0 := 0, r/0 := infinity.
      reg += r == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
      o.norms[m] = 0.0;
    }
  }
  double dual_loss = 0.0;
  for (std::size_t i = 0; i < problem.size(); ++i) {
    o.loss_sum += config.loss.eval(problem.data().label(i) * decision_value(state, problem, i));
    dual_loss += config.loss.dual_term(state.alpha[i], config.C);
  }
  o.primal = 0.5 * reg + config.C * o.loss_sum;
  o.dual_partial = dual_loss - 0.5 * reg;
  o.dual_complete = dual_loss - 0.5 * dual_norm(o.norms, config.p);
  return o;
}

double primal_objective(const ModelState& state, const Problem& problem, const SolverConfig& config) {
  return evaluate_objectives(state, problem, config).primal;
}

double dual_objective_partial(const ModelState& state, const Problem& problem, const SolverConfig& config) {
  return evaluate_objectives(state, problem, config).dual_partial;
}

double dual_objective_complete(const ModelState& state, const Problem& problem, const SolverConfig& config) {
  return evaluate_objectives(state, problem, config).dual_complete;
}

double duality_gap_complete(const ModelState& state, const Problem& problem, const SolverConfig& config) {
  return evaluate_objectives(state, problem, config).gap();
}

std::vector<Matrix> rebuild_weights(std::span<const double> alpha, std::span<const double> theta,
                                    const Problem& problem) {
  std::vector<Matrix> W;
  for (std::size_t m = 0; m < problem.num_kernels(); ++m) {
    W.push_back(Matrix::Zero(static_cast<Eigen::Index>(problem.dimension(m)),
                             static_cast<Eigen::Index>(problem.num_tasks())));
  }
  for (std::size_t i = 0; i < problem.size(); ++i) {
    if (alpha[i] == 0.0) continue;
    const std::size_t tau = problem.data().task(i);
    const double y = problem.data().label(i);
    for (std::size_t m = 0; m < problem.num_kernels(); ++m) {
      for (const auto& [t, q] : problem.coupled_tasks(m, tau)) {
        problem.features(m, i).add_to(column(W[m], t), theta[m] * q * alpha[i] * y);
      }
    }
  }
  return W;
}

// --- training -------------------------------------------------------------

bool theta_steps_gated(const TrainReport& report) {
  double previous = report.initial_primal;
  for (const auto& e : report.trajectory) {
    if (e.theta_step && !(e.primal < previous)) return false;
    previous = e.primal;
  }
  return true;
}

TrainResult train(const Problem& problem, const SolverConfig& config) {
  config.validate();
  if (config.loss.kind() != LossKind::kHinge) {
    throw InfeasibleConfig("the coordinate step is closed-form for the hinge loss only; use the kernel oracle for " +
                           config.loss.name());
  }
  if (problem.size() == 0) throw InfeasibleConfig("training set is empty");

  TrainResult result{initial_state(problem, config), {}};
  ModelState& state = result.state;
  TrainReport& report = result.report;
  report.initial_primal = state.primal_objective;
  report.theta_trajectory.push_back(state.theta);

  const std::size_t n = problem.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(config.seed);

  double objective = state.primal_objective;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    auto start = Clock::now();
    if (config.sweep_order == SweepOrder::kShuffled) rng.shuffle(order.begin(), order.end());
    for (std::size_t i : order) apply_alpha_update(state, i, coordinate_update(i, state, problem, config), problem);
    report.sweep_seconds += seconds_since(start);

    start = Clock::now();
    const double previous = objective;
    Objectives obj = evaluate_objectives(state, problem, config);
    objective = obj.primal;
    report.objective_seconds += seconds_since(start);
    if (!std::isfinite(objective)) {
      throw NumericalError("non-finite primal objective at epoch " + std::to_string(epoch));
    }

    EpochRecord record{epoch, objective, false, std::numeric_limits<double>::quiet_NaN()};
    if (config.learn_theta && objective < previous) {
      start = Clock::now();
      std::vector<double> theta = theta_step(obj.r, config.p);
      for (double& t : theta) t = std::max(t, kThetaFloor);
      const double norm = p_norm(theta, config.p);
      for (double& t : theta) t /= norm;
      apply_theta_rescale(state, theta);
      report.theta_trajectory.push_back(state.theta);
      record.theta_step = true;
      report.theta_seconds += seconds_since(start);
    }

    const double relative_change = std::abs(previous - objective) / std::max(std::abs(previous), 1e-300);
    const bool relative_hit = config.stop_rule != StopRule::kDualityGap && relative_change < config.epsilon;
    const bool check_gap = relative_hit || epoch % config.gap_check_interval == 0 || epoch == config.max_epochs;
    bool gap_hit = false;
    if (check_gap) {
      start = Clock::now();
      if (record.theta_step) obj = evaluate_objectives(state, problem, config);
      record.gap = obj.gap();
      report.objective_seconds += seconds_since(start);
      gap_hit = config.stop_rule != StopRule::kRelativeChange &&
                record.gap <= config.epsilon * (1.0 + std::abs(obj.primal));
    }
    report.trajectory.push_back(record);
    report.epochs = epoch;
    if (gap_hit) {
      report.status = TrainStatus::kConvergedGap;
      break;
    }
    if (relative_hit) {
      report.status = TrainStatus::kConvergedRelativeChange;
      break;
    }
  }

  const Objectives final_obj = evaluate_objectives(state, problem, config);
  state.primal_objective = final_obj.primal;
  report.primal = final_obj.primal;
  report.dual_partial = final_obj.dual_partial;
  report.dual_complete = final_obj.dual_complete;
  report.gap = final_obj.gap();
  return result;
}

}  // namespace mtmkl
