#include "mtmkl/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "mtmkl/error.hpp"
#include "mtmkl/model.hpp"
#include "mtmkl/rng.hpp"

namespace mtmkl {

namespace {

void check_scored(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw InfeasibleConfig("scores and labels differ in length");
  for (double s : scores) {
    if (std::isnan(s)) throw NumericalError("NaN score");
  }
}

std::vector<std::size_t> descending_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& body) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t k = 0; k < count; ++k) body(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t k = next++; k < count; k = next++) {
        try {
          body(k);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct Fit {
  std::vector<double> scores;
  std::vector<double> theta;
  std::vector<TrainReport> runs;
};

/// Trains on `fit` and scores `target` with the task ids of `target`.
Fit fit_and_score(const MultiTaskDataset& fit, const MultiTaskDataset& target,
                  std::vector<TaskSimilarity> similarities, const SolverConfig& config) {
  Problem problem(fit, assign_kernels(std::move(similarities), fit.num_views()));
  TrainResult result = train(problem, config);
  std::vector<FeatureMap> maps;
  for (std::size_t v = 0; v < fit.num_views(); ++v) maps.push_back(FeatureMap::passthrough(fit.view(v).dim));
  const Model model = make_model(result.state, problem, config, std::move(maps));
  Fit out;
  out.scores = predict_dataset(model, target);
  out.theta = result.state.theta;
  out.runs.push_back(std::move(result.report));
  return out;
}

Fit run_method(const MethodSpec& method, double C, const MultiTaskDataset& fit, const MultiTaskDataset& target,
               const TaskTree& tree, const BaselineConfig& config) {
  SolverConfig solver = config.solver;
  solver.C = C;
  solver.p = method.p;
  switch (method.kind) {
    case Method::kIndividual: {
      solver.learn_theta = false;
      Fit out;
      out.scores.assign(target.size(), 0.0);
      for (std::size_t t = 0; t < fit.num_tasks(); ++t) {
        const auto& rows = target.task_indices(t);
        if (rows.empty()) continue;
        const MultiTaskDataset local_fit = fit.single_task(t);
        const MultiTaskDataset local_target = target.single_task(t);
        Fit part = fit_and_score(local_fit, local_target, {q_identity(1)}, solver);
        for (std::size_t k = 0; k < rows.size(); ++k) out.scores[rows[k]] = part.scores[k];
        out.runs.push_back(std::move(part.runs.front()));
      }
      return out;
    }
    case Method::kUnion:
      solver.learn_theta = false;
      return fit_and_score(fit.collapse_tasks(), target.collapse_tasks(), {q_identity(1)}, solver);
    case Method::kVanillaMtl:
      solver.learn_theta = false;
      return fit_and_score(fit, target, q_hierarchical(tree, config.rho, config.coupling), solver);
    case Method::kMtMkl:
      solver.learn_theta = true;
      return fit_and_score(fit, target, q_hierarchical(tree, config.rho, config.coupling), solver);
  }
  throw InfeasibleConfig("unknown method");
}

double mean(std::span<const double> xs) {
  return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

std::string format_double(double x) {
  std::ostringstream s;
  s.precision(10);
  s << x;
  return s.str();
}

}  // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
  check_scored(scores, labels);
  const auto order = descending_order(scores);
  double positives = 0.0, negatives = 0.0;
  for (int y : labels) (y > 0 ? positives : negatives) += 1.0;
  if (positives == 0.0 || negatives == 0.0) throw InfeasibleConfig("AUC needs both classes");

  // walk tie groups from the top: each positive beats the negatives below it
  double wins = 0.0;
  double negatives_above = 0.0;
  for (std::size_t k = 0; k < order.size();) {
    std::size_t end = k;
    double group_pos = 0.0, group_neg = 0.0;
    while (end < order.size() && scores[order[end]] == scores[order[k]]) {
      (labels[order[end]] > 0 ? group_pos : group_neg) += 1.0;
      ++end;
    }
    wins += group_pos * (negatives - negatives_above - group_neg) + 0.5 * group_pos * group_neg;
    negatives_above += group_neg;
    k = end;
  }
  return wins / (positives * negatives);
}

std::vector<RocPoint> roc_points(std::span<const double> scores, std::span<const int> labels) {
  check_scored(scores, labels);
  const auto order = descending_order(scores);
  double positives = 0.0, negatives = 0.0;
  for (int y : labels) (y > 0 ? positives : negatives) += 1.0;
  if (positives == 0.0 || negatives == 0.0) throw InfeasibleConfig("ROC needs both classes");
  std::vector<RocPoint> points{{0.0, 0.0}};
  double tp = 0.0, fp = 0.0;
  for (std::size_t k = 0; k < order.size();) {
    std::size_t end = k;
    while (end < order.size() && scores[order[end]] == scores[order[k]]) {
      (labels[order[end]] > 0 ? tp : fp) += 1.0;
      ++end;
    }
    points.push_back({fp / negatives, tp / positives});
    k = end;
  }
  return points;
}

std::string MethodSpec::label() const {
  switch (kind) {
    case Method::kIndividual:
      return "individual";
    case Method::kUnion:
      return "union";
    case Method::kVanillaMtl:
      return "vanilla_mtl";
    case Method::kMtMkl: {
      std::ostringstream s;
      s << "mtmkl_p" << p;
      return s.str();
    }
  }
  return "unknown";
}

std::vector<MethodSpec> default_methods() {
  return {{Method::kIndividual, 2.0}, {Method::kUnion, 2.0}, {Method::kVanillaMtl, 2.0},
          {Method::kMtMkl, 1.0},      {Method::kMtMkl, 2.0}, {Method::kMtMkl, 3.0}};
}

EvalReport evaluate_scores(const std::string& method, const MultiTaskDataset& data, std::span<const double> scores) {
  if (scores.size() != data.size()) throw InfeasibleConfig("one score per example required");
  EvalReport report;
  report.method = method;
  for (std::size_t t = 0; t < data.num_tasks(); ++t) {
    const auto& rows = data.task_indices(t);
    std::vector<double> s;
    std::vector<int> y;
    for (std::size_t i : rows) {
      s.push_back(scores[i]);
      y.push_back(data.label(i));
    }
    report.task_auc.push_back(auc(s, y));
    report.task_roc.push_back(roc_points(s, y));
  }
  report.mean_auc = mean(report.task_auc);
  return report;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(const MultiTaskDataset& data,
                                                                               double fraction,
                                                                               std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InfeasibleConfig("validation fraction must lie in (0, 1)");
  std::vector<std::size_t> fit, validation;
  for (std::size_t t = 0; t < data.num_tasks(); ++t) {
    for (int label : {+1, -1}) {
      std::vector<std::size_t> rows;
      for (std::size_t i : data.task_indices(t)) {
        if (data.label(i) == label) rows.push_back(i);
      }
      if (rows.size() < 2) {
        throw InfeasibleConfig("task " + std::to_string(t) + " needs two examples per class for validation");
      }
      Rng rng(Rng::derive(seed, 2 * t + (label > 0 ? 0 : 1)));
      rng.shuffle(rows.begin(), rows.end());
      const auto wanted = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(rows.size())));
      const std::size_t held = std::clamp<std::size_t>(wanted, 1, rows.size() - 1);
      fit.insert(fit.end(), rows.begin(), rows.end() - static_cast<std::ptrdiff_t>(held));
      validation.insert(validation.end(), rows.end() - static_cast<std::ptrdiff_t>(held), rows.end());
    }
  }
  std::sort(fit.begin(), fit.end());
  std::sort(validation.begin(), validation.end());
  return {fit, validation};
}

std::vector<EvalReport> run_baselines(const MultiTaskDataset& train, const MultiTaskDataset& test,
                                      const TaskTree& tree, const BaselineConfig& config) {
  if (train.num_tasks() != test.num_tasks() || train.num_views() != test.num_views()) {
    throw InfeasibleConfig("train and test differ in tasks or views");
  }
  if (tree.num_tasks() != train.num_tasks()) throw InfeasibleConfig("tree leaves do not match the task count");
  if (config.C_grid.empty()) throw InfeasibleConfig("empty C grid");
  config.solver.validate();

  const auto [fit_rows, validation_rows] = stratified_split(train, config.validation_fraction, config.seed);
  const MultiTaskDataset fit = train.subset(fit_rows);
  const MultiTaskDataset validation = train.subset(validation_rows);
  const std::size_t methods = config.methods.size();
  const std::size_t grid = config.C_grid.size();

  std::vector<Fit> selection(methods * grid);
  std::vector<double> selection_auc(methods * grid);
  parallel_for(methods * grid, config.jobs, [&](std::size_t k) {
    const MethodSpec& method = config.methods[k / grid];
    selection[k] = run_method(method, config.C_grid[k % grid], fit, validation, tree, config);
    selection_auc[k] = evaluate_scores(method.label(), validation, selection[k].scores).mean_auc;
  });

  std::vector<double> chosen(methods);
  for (std::size_t j = 0; j < methods; ++j) {
    std::vector<std::size_t> by_c(grid);
    std::iota(by_c.begin(), by_c.end(), std::size_t{0});
    std::stable_sort(by_c.begin(), by_c.end(),
                     [&](std::size_t a, std::size_t b) { return config.C_grid[a] < config.C_grid[b]; });
    std::size_t best = by_c.front();
    for (std::size_t c : by_c) {
      if (selection_auc[j * grid + c] > selection_auc[j * grid + best]) best = c;
    }
    chosen[j] = config.C_grid[best];
  }

  std::vector<EvalReport> reports(methods);
  parallel_for(methods, config.jobs, [&](std::size_t j) {
    const MethodSpec& method = config.methods[j];
    Fit final_fit = run_method(method, chosen[j], train, test, tree, config);
    EvalReport report = evaluate_scores(method.label(), test, final_fit.scores);
    report.p = method.p;
    report.C = chosen[j];
    if (method.kind != Method::kIndividual) report.theta = final_fit.theta;
    for (std::size_t c = 0; c < grid; ++c) {
      auto& runs = selection[j * grid + c].runs;
      report.runs.insert(report.runs.end(), runs.begin(), runs.end());
    }
    report.runs.insert(report.runs.end(), final_fit.runs.begin(), final_fit.runs.end());
    std::ostringstream c_grid;
    for (std::size_t c = 0; c < grid; ++c) c_grid << (c ? "," : "") << config.C_grid[c];
    report.config = {{"C_grid", c_grid.str()},
                     {"validation_fraction", format_double(config.validation_fraction)},
                     {"rho", format_double(config.rho)},
                     {"coupling", config.coupling == HierarchyCoupling::kRidge ? "ridge" : "pseudo_inverse"},
                     {"epsilon", format_double(config.solver.epsilon)},
                     {"max_epochs", std::to_string(config.solver.max_epochs)},
                     {"stop_rule", to_string(config.solver.stop_rule)},
                     {"seed", std::to_string(config.seed)}};
    reports[j] = std::move(report);
  });
  return reports;
}

double BenchmarkResult::mean_auc(std::size_t method) const {
  std::vector<double> values;
  for (const auto& reports : per_seed) values.push_back(reports.at(method).mean_auc);
  return mean(values);
}

BenchmarkResult run_benchmark(const SyntheticSpec& spec, std::span<const std::uint64_t> seeds,
                              const BaselineConfig& config) {
  BenchmarkResult result;
  for (std::uint64_t seed : seeds) {
    SyntheticSpec local = spec;
    local.seed = seed;
    const SyntheticData data = generate(local);
    BaselineConfig run = config;
    run.seed = seed;
    run.solver.seed = seed;
    result.seeds.push_back(seed);
    result.per_seed.push_back(run_baselines(data.train, data.test, data.tree, run));
  }
  return result;
}

void write_summary_tsv(std::ostream& out, std::span<const EvalReport> reports) {
  out << "method\tp\tC\tmean_auc\n";
  for (const auto& r : reports) {
    out << r.method << '\t' << format_double(r.p) << '\t' << format_double(r.C) << '\t' << format_double(r.mean_auc)
        << '\n';
  }
}

void write_task_tsv(std::ostream& out, std::span<const EvalReport> reports) {
  out << "method\ttask\tmetric\tvalue\n";
  for (const auto& r : reports) {
    for (std::size_t t = 0; t < r.task_auc.size(); ++t) {
      out << r.method << '\t' << t << "\tauc\t" << format_double(r.task_auc[t]) << '\n';
    }
    out << r.method << "\tall\tmean_auc\t" << format_double(r.mean_auc) << '\n';
  }
}

void write_roc_tsv(std::ostream& out, std::span<const EvalReport> reports) {
  out << "method\ttask\tfpr\ttpr\n";
  for (const auto& r : reports) {
    for (std::size_t t = 0; t < r.task_roc.size(); ++t) {
      for (const auto& point : r.task_roc[t]) {
        out << r.method << '\t' << t << '\t' << format_double(point.fpr) << '\t' << format_double(point.tpr) << '\n';
      }
    }
  }
}

void write_benchmark_summary_tsv(std::ostream& out, const BenchmarkResult& result) {
  out << "method\tmean_auc\tstd_auc\tseeds\n";
  if (result.per_seed.empty()) return;
  for (std::size_t k = 0; k < result.per_seed.front().size(); ++k) {
    std::vector<double> values;
    for (const auto& reports : result.per_seed) values.push_back(reports[k].mean_auc);
    const double m = mean(values);
    double var = 0.0;
    for (double v : values) var += (v - m) * (v - m);
    const double sd = values.size() > 1 ? std::sqrt(var / static_cast<double>(values.size() - 1)) : 0.0;
    out << result.per_seed.front()[k].method << '\t' << format_double(m) << '\t' << format_double(sd) << '\t'
        << values.size() << '\n';
  }
}

}  // namespace mtmkl
