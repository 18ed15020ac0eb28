// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mtmkl/eval.hpp"
#include "mtmkl/kernel_oracle.hpp"
#include "mtmkl/synthetic.hpp"
#include "oracles.hpp"

using namespace mtmkl;

namespace {

struct Run {
  TrainReport report;
  double epsilon = 0.0;
};

/// Every training run of the suite, for the certificate and gating checks.
std::vector<Run> g_runs;

int g_failures = 0;

void verdict(bool ok, const std::string& name, const std::string& detail, double seconds) {
  std::printf("%s  %-28s %s  (%.1fs)\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string sci(double x) {
  std::ostringstream s;
  s.precision(2);
  s << std::scientific << x;
  return s.str();
}

SolverConfig tight(double C, double p, std::uint64_t seed) {
  SolverConfig c;
  c.C = C;
  c.p = p;
  c.epsilon = 1e-10;
  c.stop_rule = StopRule::kDualityGap;
  c.gap_check_interval = 1;
  c.max_epochs = 200000;
  c.seed = seed;
  return c;
}

TrainResult train_logged(const Problem& problem, const SolverConfig& config) {
  TrainResult result = train(problem, config);
  g_runs.push_back({result.report, config.epsilon});
  return result;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// ---------------------------------------------------------------- criteria

void frustratingly_easy() {
  Stopwatch clock;
  const TaskSimilarity fe = q_frustratingly_easy();
  Matrix qinv(2, 2), q(2, 2);
  qinv << 2, 1, 1, 2;
  q << 2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0;
  const double err = std::max(max_abs(fe.Qinv - qinv), max_abs(fe.Q - q));
  verdict(err <= 1e-12, "frustratingly-easy", "max entry error " + sci(err) + " <= 1e-12", clock.seconds());
}

void theta_step_correctness() {
  Stopwatch clock;
  Rng rng(101);
  double worst_objective = 0.0, worst_norm = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t M = 1 + rng.below(5);
    const double p = 1.0 + static_cast<double>(trial % 3);
    const auto T = static_cast<Eigen::Index>(1 + rng.below(6));
    const auto dim = static_cast<Eigen::Index>(1 + rng.below(8));
    std::vector<double> r(M);
    for (std::size_t m = 0; m < M; ++m) {
      const Matrix W = oracle::random_matrix(rng, dim, T) * std::exp(rng.normal());
      const Matrix Q = oracle::random_psd(rng, T, T) + 0.1 * Matrix::Identity(T, T);
      r[m] = (W * Q * W.transpose()).trace();
    }
    const auto theta = theta_step(r, p);
    const double closed = oracle::theta_objective(r, theta);
    const double numeric = oracle::theta_objective(r, oracle::numeric_theta(r, p));
    worst_objective = std::max(worst_objective, std::abs(closed - numeric) / std::max(1.0, numeric));
    worst_norm = std::max(worst_norm, std::abs(oracle::p_norm(theta, p) - 1.0));
  }
  verdict(worst_objective <= 1e-5 && worst_norm <= 1e-10, "theta-step",
          "100 instances, objective " + sci(worst_objective) + " <= 1e-5, |norm-1| " + sci(worst_norm) +
              " <= 1e-10",
          clock.seconds());
}

/// Solver against kernel oracle on one problem; returns the scaled objective gap
/// or +inf when either side misses the 1e-7 duality-gap requirement.
double solver_oracle_gap(const Problem& problem, const SolverConfig& config, std::string* note) {
  const TrainResult s = train_logged(problem, config);
  const OracleResult o = oracle_train(build_multitask_kernels(problem), config);
  if (!s.report.converged() || !o.converged || s.report.gap >= 1e-7 || o.gap() >= 1e-7) {
    *note = "gap not reached: solver " + sci(s.report.gap) + ", oracle " + sci(o.gap());
    return INFINITY;
  }
  return std::abs(o.objective - s.report.primal) / (1.0 + std::abs(o.objective));
}

void solver_oracle_equivalence() {
  Stopwatch clock;
  Rng rng(202);
  double worst = 0.0;
  std::string note;
  std::size_t largest = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 20 + rng.below(181);
    const std::size_t T = 1 + rng.below(8);
    const std::size_t M = 1 + rng.below(4);
    const std::size_t dim = 2 + rng.below(7);
    const double p = 1.0 + static_cast<double>(trial % 3);
    const double C = 0.1 + 1.9 * rng.uniform();
    largest = std::max(largest, n);
    const auto data = oracle::random_dataset(rng, n, T, M, dim);
    std::vector<TaskSimilarity> sims;
    for (std::size_t m = 0; m < M; ++m) sims.push_back(oracle::random_pd_similarity(rng, T));
    const Problem problem(data, assign_kernels(std::move(sims), M));
    worst = std::max(worst, solver_oracle_gap(problem, tight(C, p, 1 + trial), &note));
  }
  verdict(worst <= 1e-5, "solver-oracle",
          "30 instances (n <= " + std::to_string(largest) + "), |dP|/(1+|P|) " + sci(worst) +
              " <= 1e-5 at gap < 1e-7" + (note.empty() ? "" : "; " + note),
          clock.seconds());
}

void svm_reduction() {
  Stopwatch clock;
  Rng rng(303);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 10 + rng.below(41);
    const auto data = oracle::random_dataset(rng, n, 1, 1, 2 + rng.below(6));
    const Problem problem(data, {{0, q_identity(1)}});
    const double C = 0.05 + 2.0 * rng.uniform();
    const TrainResult result = train_logged(problem, tight(C, 2.0, 1 + trial));
    const Matrix X = oracle::view_matrix(data.view(0));
    const auto qp = oracle::box_qp_svm(X * X.transpose(), data.labels(), C);
    worst = std::max(worst, std::abs(result.report.primal - qp.value) / std::abs(qp.value));
  }
  verdict(worst <= 1e-6, "svm-reduction", "20 instances (n <= 50), relative objective " + sci(worst) + " <= 1e-6",
          clock.seconds());
}

void penrose_suite() {
  Stopwatch clock;
  Rng rng(404);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto T = static_cast<Eigen::Index>(1 + rng.below(32));
    const auto rank = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(T) + 1));
    const Matrix A = rank == 0 ? Matrix::Zero(T, T) : Matrix(oracle::random_psd(rng, T, rank) / static_cast<double>(T));
    const Matrix P = pseudo_inverse(A).inverse;
    worst = std::max({worst, max_abs(A * P * A - A), max_abs(P * A * P - P)});
  }
  verdict(worst <= 1e-8, "penrose", "100 PSD matrices (T <= 32), max residual " + sci(worst) + " <= 1e-8",
          clock.seconds());
}

void benchmark_ordering() {
  Stopwatch clock;
  const SyntheticSpec spec;  // dim 100, sigma 20, 5 flips, 32 tasks, 10 train per class
  BaselineConfig config;
  config.jobs = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::uint64_t> seeds(10);
  std::iota(seeds.begin(), seeds.end(), std::uint64_t{1});
  const BenchmarkResult result = run_benchmark(spec, seeds, config);
  for (const auto& reports : result.per_seed) {
    for (const auto& report : reports) {
      for (const auto& run : report.runs) g_runs.push_back({run, config.solver.epsilon});
    }
  }
  std::vector<double> mean(config.methods.size());
  std::ostringstream table;
  table.precision(4);
  table << std::fixed;
  for (std::size_t k = 0; k < mean.size(); ++k) {
    mean[k] = result.mean_auc(k);
    table << (k ? " " : "") << config.methods[k].label() << "=" << mean[k];
  }
  const double individual = mean[0], union_ = mean[1], vanilla = mean[2], p2 = mean[4], p3 = mean[5];
  const bool ok = individual < union_ && union_ <= p2 + 0.01 && p2 >= vanilla - 0.01 && p3 >= vanilla - 0.01;
  verdict(ok, "synthetic-ordering", "10 seeds: " + table.str(), clock.seconds());
}

void spectrum_path() {
  Stopwatch clock;
  Rng rng(505);
  double worst_eigen = 0.0, worst_gap = 0.0;
  std::string note;
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 60 + 35 * static_cast<std::size_t>(trial);
    const std::size_t T = 1 + rng.below(4);
    const auto seqs = random_sequences(n, 30 + rng.below(40), 505 + trial);
    RawDataset raw;
    for (std::size_t i = 0; i < n; ++i) {
      RawExample e;
      e.label = (i % 2 == 0) ? 1 : -1;
      e.task = (i / 2) % T;
      e.cells.emplace_back(seqs[i]);
      raw.examples.push_back(std::move(e));
    }
    const std::vector<FeatureMap> maps{FeatureMap::hashed_spectrum(3, 6)};
    const MultiTaskDataset data = featurize(raw, maps, T);
    const Matrix K = linear_kernel(data.view(0));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(K, Eigen::EigenvaluesOnly);
    worst_eigen = std::min(worst_eigen, eig.eigenvalues().minCoeff() / eig.eigenvalues().maxCoeff());
    std::vector<TaskSimilarity> sims{q_identity(T), oracle::random_pd_similarity(rng, T)};
    const Problem problem(data, assign_kernels(std::move(sims), 1));
    worst_gap = std::max(worst_gap, solver_oracle_gap(problem, tight(0.5, 2.0, 1 + trial), &note));
  }
  verdict(worst_eigen >= -1e-10 && worst_gap <= 1e-5, "spectrum-path",
          "5 DNA sets (n <= 200): Gram min eig/max " + sci(worst_eigen) + " >= -1e-10, solver-oracle " +
              sci(worst_gap) + " <= 1e-5" + (note.empty() ? "" : "; " + note),
          clock.seconds());
}

void gap_certificate() {
  Stopwatch clock;
  std::size_t certified = 0, violations = 0;
  double lowest = INFINITY;
  for (const auto& run : g_runs) {
    const TrainReport& r = run.report;
    const double scale = 1.0 + std::abs(r.primal);
    lowest = std::min(lowest, r.gap);
    // weak duality for both duals and at every evaluated epoch
    if (r.gap < -1e-8 || r.primal - r.dual_partial < -1e-8) ++violations;
    for (const auto& e : r.trajectory) {
      if (!std::isnan(e.gap) && e.gap < -1e-8) ++violations;
    }
    if (r.status == TrainStatus::kConvergedGap) {
      ++certified;
      if (r.gap > run.epsilon * scale) ++violations;
    }
  }
  verdict(violations == 0, "gap-certificate",
          std::to_string(g_runs.size()) + " runs (" + std::to_string(certified) + " gap-certified), " +
              std::to_string(violations) + " violations, lowest gap " + sci(lowest),
          clock.seconds());
}

void gating() {
  Stopwatch clock;
  std::size_t bad = 0, steps = 0;
  for (const auto& run : g_runs) {
    bad += !theta_steps_gated(run.report);
    for (const auto& e : run.report.trajectory) steps += e.theta_step;
  }
  verdict(bad == 0, "theta-step-gating",
          std::to_string(g_runs.size()) + " runs, " + std::to_string(steps) + " theta steps, " +
              std::to_string(bad) + " ungated",
          clock.seconds());
}

}  // namespace

int main() {
  try {
    frustratingly_easy();
    theta_step_correctness();
    solver_oracle_equivalence();
    svm_reduction();
    penrose_suite();
    benchmark_ordering();
    spectrum_path();
    gap_certificate();
    gating();
  } catch (const std::exception& e) {
    std::printf("FAIL  aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
