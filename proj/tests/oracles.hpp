#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls the solver, the kernel oracle or the closed forms it
// checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mtmkl/dataset.hpp"
#include "mtmkl/loss.hpp"
#include "mtmkl/rng.hpp"
#include "mtmkl/task_similarity.hpp"

namespace oracle {

using mtmkl::Matrix;
using mtmkl::Vector;

/// Maximizer of a unimodal function on [lo, hi].
inline double golden_max(const std::function<double(double)>& f, double lo, double hi, int iterations = 200) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int k = 0; k < iterations; ++k) {
    if (fc < fd) {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    } else {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    }
  }
  return 0.5 * (a + b);
}

/// sup_b (a b - l(b)) by golden section over a wide bracket (the supremand
/// is concave in b).
inline double numeric_conjugate(const mtmkl::Loss& loss, double a, double bracket = 60.0) {
  auto f = [&](double b) { return a * b - loss.eval(b); };
  return f(golden_max(f, -bracket, bracket, 300));
}

/// min over the unit p-sphere of sum_m r_m / theta_m, parametrized as
/// theta_m = u_m^(1/p) with u on the simplex (convex in u), solved by
/// repeated pairwise golden-section redistribution of mass.
inline std::vector<double> numeric_theta(const std::vector<double>& r, double p, int rounds = 300) {
  const std::size_t M = r.size();
  std::vector<double> u(M, 1.0 / static_cast<double>(M));
  auto term = [&](double rm, double um) {
    if (rm == 0.0) return 0.0;
    if (um <= 0.0) return std::numeric_limits<double>::infinity();
    return rm * std::pow(um, -1.0 / p);
  };
  for (int round = 0; round < rounds; ++round) {
    for (std::size_t a = 0; a < M; ++a) {
      for (std::size_t b = a + 1; b < M; ++b) {
        const double s = u[a] + u[b];
        if (s <= 0.0) continue;
        auto f = [&](double x) { return -(term(r[a], x * s) + term(r[b], (1.0 - x) * s)); };
        const double x = golden_max(f, 0.0, 1.0, 120);
        u[a] = x * s;
        u[b] = (1.0 - x) * s;
      }
    }
  }
  std::vector<double> theta(M);
  for (std::size_t m = 0; m < M; ++m) theta[m] = std::pow(std::max(u[m], 0.0), 1.0 / p);
  return theta;
}

inline double theta_objective(const std::vector<double>& r, const std::vector<double>& theta) {
  double s = 0.0;
  for (std::size_t m = 0; m < r.size(); ++m) {
    if (r[m] == 0.0) continue;
    s += theta[m] > 0.0 ? r[m] / theta[m] : std::numeric_limits<double>::infinity();
  }
  return s;
}

inline double p_norm(const std::vector<double>& x, double p) {
  double s = 0.0;
  for (double v : x) s += std::pow(std::abs(v), p);
  return std::pow(s, 1.0 / p);
}

/// Bias-free hinge SVM dual max_{0<=a<=C} 1'a - a'Ha/2, H = (yy') .* K,
/// by accelerated projected gradient. Returns the optimal dual value.
struct BoxQpResult {
  Vector alpha;
  double value = 0.0;
};

inline BoxQpResult box_qp_svm(const Matrix& K, const std::vector<int>& y, double C, int iterations = 200000) {
  const auto n = K.rows();
  Matrix H(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) H(i, j) = y[i] * y[j] * K(i, j);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(H, Eigen::EigenvaluesOnly);
  const double L = std::max(eig.eigenvalues().maxCoeff(), 1e-12);
  Vector a = Vector::Zero(n), z = a, prev = a;
  double t = 1.0;
  auto value = [&](const Vector& v) { return v.sum() - 0.5 * v.dot(H * v); };
  for (int k = 0; k < iterations; ++k) {
    const Vector grad = Vector::Ones(n) - H * z;
    a = (z + grad / L).cwiseMax(0.0).cwiseMin(C);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = a + ((t - 1.0) / t_next) * (a - prev);
    // restart when momentum stops helping
    if (value(a) < value(prev)) {
      z = a;
      t = 1.0;
    } else {
      t = t_next;
    }
    if ((a - prev).lpNorm<Eigen::Infinity>() < 1e-15 && k > 100) break;
    prev = a;
  }
  return {a, value(a)};
}

/// Primal of the bias-free hinge SVM at w.
inline double svm_primal(const Vector& w, const Matrix& X, const std::vector<int>& y, double C) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) loss += std::max(0.0, 1.0 - y[i] * X.row(i).dot(w));
  return 0.5 * w.squaredNorm() + C * loss;
}

/// Textbook single-task dual coordinate descent step on (w, alpha).
inline void dcd_step(Vector& w, std::vector<double>& alpha, const Matrix& X, const std::vector<int>& y, double C,
                     Eigen::Index i) {
  const double q = X.row(i).squaredNorm();
  if (q <= 0.0) return;
  const double grad = y[i] * X.row(i).dot(w) - 1.0;
  const double next = std::clamp(alpha[i] - grad / q, 0.0, C);
  w += (next - alpha[i]) * y[i] * X.row(i).transpose();
  alpha[i] = next;
}

/// AUC by enumerating every positive/negative pair.
inline double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] <= 0) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] > 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

/// w_mt = theta_m sum_i qinv(tau_i, t) alpha_i y_i x_i, by explicit loops.
inline Matrix representer_weights(const mtmkl::View& view, const std::vector<int>& y,
                                  const std::vector<std::size_t>& tau, const Matrix& qinv, double theta,
                                  const std::vector<double>& alpha) {
  Matrix W = Matrix::Zero(static_cast<Eigen::Index>(view.dim), qinv.rows());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto& x = view.rows[i];
    for (Eigen::Index t = 0; t < qinv.rows(); ++t) {
      const double c = theta * qinv(static_cast<Eigen::Index>(tau[i]), t) * alpha[i] * y[i];
      if (c == 0.0) continue;
      for (std::size_t k = 0; k < x.stored(); ++k) W(x.index_at(k), t) += c * x.value_at(k);
    }
  }
  return W;
}

// ------------------------------------------------------------ random instances

inline Matrix random_matrix(mtmkl::Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix A(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) A(i, j) = rng.normal();
  }
  return A;
}

/// Random symmetric PSD matrix of the given rank.
inline Matrix random_psd(mtmkl::Rng& rng, Eigen::Index size, Eigen::Index rank) {
  const Matrix B = random_matrix(rng, size, rank);
  return B * B.transpose();
}

/// Random positive definite task similarity with an explicit inverse.
inline mtmkl::TaskSimilarity random_pd_similarity(mtmkl::Rng& rng, std::size_t tasks) {
  const auto T = static_cast<Eigen::Index>(tasks);
  const Matrix Q = random_psd(rng, T, T) / static_cast<double>(T) + 0.5 * Matrix::Identity(T, T);
  Matrix Qinv = Q.llt().solve(Matrix::Identity(T, T));
  Qinv = 0.5 * (Qinv + Qinv.transpose()).eval();
  return mtmkl::TaskSimilarity{Q, Qinv, tasks, "random-pd"};
}

/// n examples, tasks round-robin, labels random but both classes present,
/// `views` dense views of the given dimension with a weak class signal.
inline mtmkl::MultiTaskDataset random_dataset(mtmkl::Rng& rng, std::size_t n, std::size_t tasks, std::size_t views,
                                              std::size_t dim) {
  std::vector<int> labels(n);
  std::vector<std::size_t> task_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = (i % 2 == 0) ? 1 : -1;
    task_of[i] = (i / 2) % tasks;
  }
  std::vector<mtmkl::View> vs;
  for (std::size_t v = 0; v < views; ++v) {
    mtmkl::View view;
    view.dim = dim;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> x(dim);
      for (std::size_t k = 0; k < dim; ++k) x[k] = rng.normal() + (k == v % dim ? 0.7 * labels[i] : 0.0);
      view.rows.push_back(mtmkl::FeatureVector::dense(std::move(x)));
    }
    vs.push_back(std::move(view));
  }
  return mtmkl::MultiTaskDataset(std::move(labels), std::move(task_of), tasks, std::move(vs));
}

/// Dense n x dim matrix of one view.
inline Matrix view_matrix(const mtmkl::View& view) {
  Matrix X = Matrix::Zero(static_cast<Eigen::Index>(view.rows.size()), static_cast<Eigen::Index>(view.dim));
  for (std::size_t i = 0; i < view.rows.size(); ++i) {
    const auto& x = view.rows[i];
    for (std::size_t k = 0; k < x.stored(); ++k) X(static_cast<Eigen::Index>(i), x.index_at(k)) = x.value_at(k);
  }
  return X;
}

}  // namespace oracle
