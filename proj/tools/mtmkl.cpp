// mtmkl: command-line front end.
//
// Exit codes:
//   0  success (training converged)
//   1  usage error (bad flags)
//   2  configuration, parse or I/O error
//   3  training stopped at max-epochs without converging
//   4  infeasible configuration (precondition violated)
//   5  numerical abort

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mtmkl/dataset.hpp"
#include "mtmkl/error.hpp"
#include "mtmkl/eval.hpp"
#include "mtmkl/kernel_oracle.hpp"
#include "mtmkl/model.hpp"
#include "mtmkl/solver.hpp"
#include "mtmkl/synthetic.hpp"
#include "mtmkl/task_similarity.hpp"

namespace fs = std::filesystem;
using namespace mtmkl;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kConfig = 2, kMaxEpochs = 3, kInfeasible = 4, kNumerical = 5 };

std::size_t default_jobs() {
  if (const char* env = std::getenv("MTMKL_JOBS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<std::size_t>(n);
  }
  return 1;
}

std::string default_output_dir(const std::string& fallback) {
  const char* env = std::getenv("MTMKL_OUTPUT_DIR");
  return env && *env ? env : fallback;
}

/// Writes through a temporary file in the same directory, then renames.
void write_atomic(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    body(out);
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw Error("write failed: " + path.string());
    }
  }
  fs::rename(tmp, path);
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error("cannot create output directory " + dir.string());
  const fs::path probe = dir / (".mtmkl-probe." + std::to_string(::getpid()));
  std::ofstream out(probe);
  if (!out) throw Error("output directory not writable: " + dir.string());
  out.close();
  fs::remove(probe);
}

void ensure_parent_writable(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  ensure_directory(parent.empty() ? fs::path(".") : parent);
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw ParseError("missing " + what + " path");
  if (!fs::is_regular_file(path)) throw ParseError(what + " file not found: " + path);
}

std::string join(const std::vector<double>& xs) {
  std::ostringstream s;
  s.precision(17);
  for (std::size_t k = 0; k < xs.size(); ++k) s << (k ? "," : "") << xs[k];
  return s.str();
}

struct SolverFlags {
  SolverConfig config;
  std::string sweep = "shuffled";
  std::string stop = "either";
  std::string loss = "hinge";
  bool fixed_theta = false;

  void add_to(CLI::App* app) {
    app->add_option("-C,--C", config.C, "Loss trade-off C > 0")->capture_default_str();
    app->add_option("-p,--p", config.p, "Kernel-weight norm exponent p >= 1")->capture_default_str();
    app->add_option("--epsilon", config.epsilon, "Stopping tolerance")->capture_default_str();
    app->add_option("--max-epochs", config.max_epochs, "Cap on alpha sweeps")->capture_default_str();
    app->add_option("--sweep-order", sweep, "sequential | shuffled")->capture_default_str();
    app->add_option("--gap-check-interval", config.gap_check_interval, "Epochs between duality-gap checks")
        ->capture_default_str();
    app->add_option("--stop-rule", stop, "relative | gap | either")->capture_default_str();
    app->add_option("--loss", loss, "hinge | logistic (logistic: oracle only)")->capture_default_str();
    app->add_flag("--fixed-theta", fixed_theta, "Freeze theta at the uniform start (Vanilla MTL)");
    app->add_flag("--literal-numerator", config.literal_numerator,
                  "Debug: extra theta_m factor in the coordinate-step numerator");
    app->add_option("--seed", config.seed, "Seed of the sweep order")->capture_default_str();
  }

  SolverConfig resolve() const {
    SolverConfig c = config;
    c.sweep_order = parse_sweep_order(sweep);
    c.stop_rule = parse_stop_rule(stop);
    c.loss = Loss::parse(loss);
    c.learn_theta = !fixed_theta;
    c.validate();
    return c;
  }
};

struct DataFlags {
  std::string data;
  std::vector<std::string> maps;

  void add_to(CLI::App* app) {
    app->add_option("-d,--data", data, "Dataset file")->required();
    app->add_option("--map", maps,
                    "Feature map per view, e.g. 'passthrough dim=100' or 'spectrum k=3 bits=16 alphabet=ACGT' "
                    "(default: passthrough with inferred dimension)");
  }

  std::vector<FeatureMap> resolve(std::size_t views) const {
    std::vector<FeatureMap> out;
    for (const auto& m : maps) out.push_back(FeatureMap::parse(m));
    if (out.empty()) out.assign(views, FeatureMap::passthrough());
    if (out.size() != views) {
      throw InfeasibleConfig(std::to_string(out.size()) + " feature maps given for " + std::to_string(views) +
                             " views");
    }
    return out;
  }
};

// ---------------------------------------------------------------- generate

struct GenerateCmd {
  SyntheticSpec spec;
  std::string out_dir = default_output_dir("synthetic");
  double rho = 1.0;
  std::string coupling = "pseudo_inverse";

  void add_to(CLI::App* app) {
    app->add_option("-o,--out-dir", out_dir, "Output directory (env MTMKL_OUTPUT_DIR)")->capture_default_str();
    app->add_option("--dim", spec.dim, "Feature dimension")->capture_default_str();
    app->add_option("--sigma", spec.sigma, "Isotropic standard deviation")->capture_default_str();
    app->add_option("--flips", spec.flips, "Sign flips per tree edge")->capture_default_str();
    app->add_option("--depth", spec.depth, "Tree depth (2^depth tasks)")->capture_default_str();
    app->add_option("--train-per-class", spec.n_train_per_class, "Training examples per class and task")
        ->capture_default_str();
    app->add_option("--test-per-class", spec.n_test_per_class, "Test examples per class and task")
        ->capture_default_str();
    app->add_option("--seed", spec.seed, "Generator seed")->capture_default_str();
    app->add_option("--rho", rho, "Cluster-center regularizer of the emitted hierarchy config")
        ->capture_default_str();
    app->add_option("--coupling", coupling, "pseudo_inverse | ridge, for the emitted hierarchy config")
        ->capture_default_str();
  }

  int run() const {
    spec.validate();
    ensure_directory(out_dir);
    const SyntheticData data = generate(spec);
    const fs::path dir(out_dir);
    write_atomic(dir / "train.txt", [&](std::ostream& o) { write_raw_dataset(o, to_raw(data.train)); });
    write_atomic(dir / "test.txt", [&](std::ostream& o) { write_raw_dataset(o, to_raw(data.test)); });
    write_atomic(dir / "similarity.txt", [&](std::ostream& o) { write_dense_matrix(o, data.true_similarity); });
    write_atomic(dir / "tree.txt", [&](std::ostream& o) { write_tree(o, data.tree); });
    write_atomic(dir / "tasks.json", [&](std::ostream& o) {
      o << "{\"kind\": \"hierarchy\", \"rho\": " << rho << ", \"coupling\": \"" << coupling << "\", \"parents\": [";
      const auto& parents = data.tree.parents();
      for (std::size_t k = 0; k < parents.size(); ++k) o << (k ? ", " : "") << parents[k];
      o << "]}\n";
    });
    std::cout << "wrote " << data.train.size() << " train and " << data.test.size() << " test examples over "
              << data.train.num_tasks() << " tasks to " << out_dir << '\n';
    return kOk;
  }
};

// ---------------------------------------------------------------- train

struct TrainCmd {
  DataFlags data;
  SolverFlags solver;
  std::string tasks;
  std::string model_path = "model.txt";
  std::string report_path;
  std::string trajectory_path;

  void add_to(CLI::App* app) {
    data.add_to(app);
    app->add_option("-t,--tasks", tasks, "Task-structure config (JSON)")->required();
    app->add_option("-m,--model", model_path, "Output model file")->capture_default_str();
    app->add_option("-r,--report", report_path, "Output training report (TSV)");
    app->add_option("--trajectory", trajectory_path, "Output per-epoch trajectory (TSV)");
    solver.add_to(app);
  }

  int run() const {
    const SolverConfig config = solver.resolve();
    require_file(data.data, "dataset");
    require_file(tasks, "task-structure");
    ensure_parent_writable(model_path);
    if (!report_path.empty()) ensure_parent_writable(report_path);
    if (!trajectory_path.empty()) ensure_parent_writable(trajectory_path);

    const RawDataset raw = read_raw_dataset_file(data.data);
    auto similarities = load_task_structure_file(tasks);
    const auto maps = data.resolve(raw.num_views());
    const MultiTaskDataset dataset = featurize(raw, maps, similarities.front().Q.rows());
    const Problem problem(dataset, assign_kernels(std::move(similarities), dataset.num_views()));
    const TrainResult result = train(problem, config);
    const Model model = make_model(result.state, problem, config, maps);

    write_atomic(model_path, [&](std::ostream& o) { write_model(o, model); });
    const TrainReport& r = result.report;
    if (!report_path.empty()) {
      write_atomic(report_path, [&](std::ostream& o) {
        o.precision(17);
        o << "key\tvalue\n";
        o << "status\t" << to_string(r.status) << '\n';
        o << "epochs\t" << r.epochs << '\n';
        o << "initial_primal\t" << r.initial_primal << '\n';
        o << "primal\t" << r.primal << '\n';
        o << "dual_partial\t" << r.dual_partial << '\n';
        o << "dual_complete\t" << r.dual_complete << '\n';
        o << "gap\t" << r.gap << '\n';
        o << "theta\t" << join(result.state.theta) << '\n';
        o << "theta_steps\t" << (r.theta_trajectory.empty() ? 0 : r.theta_trajectory.size() - 1) << '\n';
        o << "sweep_seconds\t" << r.sweep_seconds << '\n';
        o << "objective_seconds\t" << r.objective_seconds << '\n';
        o << "theta_seconds\t" << r.theta_seconds << '\n';
      });
    }
    if (!trajectory_path.empty()) {
      write_atomic(trajectory_path, [&](std::ostream& o) {
        o.precision(17);
        o << "epoch\tprimal\ttheta_step\tgap\n";
        for (const auto& e : r.trajectory) {
          o << e.epoch << '\t' << e.primal << '\t' << (e.theta_step ? 1 : 0) << '\t' << e.gap << '\n';
        }
      });
    }
    std::cout << to_string(r.status) << " after " << r.epochs << " epochs: primal " << r.primal << ", gap "
              << r.gap << '\n';
    return r.converged() ? kOk : kMaxEpochs;
  }
};

// ---------------------------------------------------------------- predict / evaluate / plot-data

struct Scored {
  MultiTaskDataset data;
  std::vector<double> scores;
};

Scored score_with_model(const std::string& model_path, const std::string& data_path) {
  require_file(model_path, "model");
  require_file(data_path, "dataset");
  std::ifstream in(model_path);
  const Model model = read_model(in);
  const RawDataset raw = read_raw_dataset_file(data_path);
  if (raw.num_views() != model.maps.size()) {
    throw InfeasibleConfig("dataset has " + std::to_string(raw.num_views()) + " views, model expects " +
                           std::to_string(model.maps.size()));
  }
  Scored out{featurize(raw, model.maps, model.num_tasks), {}};
  out.scores = predict_dataset(model, out.data);
  return out;
}

struct PredictCmd {
  std::string model_path = "model.txt";
  std::string data;
  std::string out = "scores.tsv";

  void add_to(CLI::App* app) {
    app->add_option("-m,--model", model_path, "Model file")->capture_default_str();
    app->add_option("-d,--data", data, "Dataset file")->required();
    app->add_option("-o,--out", out, "Output scores (TSV: index task label score)")->capture_default_str();
  }

  int run() const {
    ensure_parent_writable(out);
    const Scored s = score_with_model(model_path, data);
    write_atomic(out, [&](std::ostream& o) {
      o.precision(17);
      o << "index\ttask\tlabel\tscore\n";
      for (std::size_t i = 0; i < s.scores.size(); ++i) {
        o << i << '\t' << s.data.task(i) << '\t' << s.data.label(i) << '\t' << s.scores[i] << '\n';
      }
    });
    return kOk;
  }
};

struct EvaluateCmd {
  std::string model_path = "model.txt";
  std::string data;
  std::string out;
  std::string roc_out;
  std::string label = "model";
  bool with_roc = false;

  void add_to(CLI::App* app, bool plot) {
    with_roc = plot;
    app->add_option("-m,--model", model_path, "Model file")->capture_default_str();
    app->add_option("-d,--data", data, "Labelled dataset file")->required();
    app->add_option("--label", label, "Method label written into the report")->capture_default_str();
    if (plot) {
      out = "tasks.tsv";
      roc_out = "roc.tsv";
      app->add_option("-o,--out", out, "Per-task metrics (TSV)")->capture_default_str();
      app->add_option("--roc", roc_out, "ROC points (TSV)")->capture_default_str();
    } else {
      app->add_option("-o,--out", out, "Per-task metrics (TSV); default prints to stdout");
    }
  }

  int run() const {
    if (!out.empty()) ensure_parent_writable(out);
    if (with_roc) ensure_parent_writable(roc_out);
    const Scored s = score_with_model(model_path, data);
    const std::vector<EvalReport> reports{evaluate_scores(label, s.data, s.scores)};
    if (out.empty()) {
      write_task_tsv(std::cout, reports);
    } else {
      write_atomic(out, [&](std::ostream& o) { write_task_tsv(o, reports); });
    }
    if (with_roc) write_atomic(roc_out, [&](std::ostream& o) { write_roc_tsv(o, reports); });
    if (!out.empty()) std::cout << "mean AUC " << reports.front().mean_auc << '\n';
    return kOk;
  }
};

// ---------------------------------------------------------------- benchmark

struct BenchmarkCmd {
  SyntheticSpec spec;
  BaselineConfig baseline;
  SolverFlags solver;
  std::string out_dir = default_output_dir("benchmark");
  std::size_t seeds = 10;
  std::vector<std::uint64_t> seed_list;
  std::string coupling = "pseudo_inverse";

  void add_to(CLI::App* app) {
    spec.n_test_per_class = 1000;
    baseline.jobs = default_jobs();
    app->add_option("-o,--out-dir", out_dir, "Report directory (env MTMKL_OUTPUT_DIR)")->capture_default_str();
    app->add_option("--seeds", seeds, "Number of replicates, seeds 1..N")->capture_default_str();
    app->add_option("--seed-list", seed_list, "Explicit replicate seeds (overrides --seeds)");
    app->add_option("-j,--jobs", baseline.jobs, "Parallel training runs (env MTMKL_JOBS)")->capture_default_str();
    app->add_option("--dim", spec.dim, "Feature dimension")->capture_default_str();
    app->add_option("--sigma", spec.sigma, "Isotropic standard deviation")->capture_default_str();
    app->add_option("--flips", spec.flips, "Sign flips per tree edge")->capture_default_str();
    app->add_option("--depth", spec.depth, "Tree depth (2^depth tasks)")->capture_default_str();
    app->add_option("--train-per-class", spec.n_train_per_class, "Training examples per class and task")
        ->capture_default_str();
    app->add_option("--test-per-class", spec.n_test_per_class, "Test examples per class and task")
        ->capture_default_str();
    app->add_option("--c-grid", baseline.C_grid, "Candidate C values")->capture_default_str();
    app->add_option("--validation-fraction", baseline.validation_fraction, "Held-out share per task and class")
        ->capture_default_str();
    app->add_option("--rho", baseline.rho, "Cluster-center regularizer")->capture_default_str();
    app->add_option("--coupling", coupling, "Hierarchy coupling: pseudo_inverse | ridge")->capture_default_str();
    solver.add_to(app);
  }

  int run() {
    baseline.solver = solver.resolve();
    if (coupling == "ridge") {
      baseline.coupling = HierarchyCoupling::kRidge;
    } else if (coupling == "pseudo_inverse") {
      baseline.coupling = HierarchyCoupling::kPseudoInverse;
    } else {
      throw ParseError("unknown coupling '" + coupling + "'");
    }
    spec.validate();
    std::vector<std::uint64_t> list = seed_list;
    if (list.empty()) {
      for (std::size_t s = 1; s <= seeds; ++s) list.push_back(s);
    }
    if (list.empty()) throw InfeasibleConfig("no seeds to run");
    const fs::path dir(out_dir);
    ensure_directory(dir);

    const BenchmarkResult result = run_benchmark(spec, list, baseline);
    for (std::size_t k = 0; k < result.seeds.size(); ++k) {
      const fs::path sub = dir / ("seed_" + std::to_string(result.seeds[k]));
      ensure_directory(sub);
      const auto& reports = result.per_seed[k];
      write_atomic(sub / "summary.tsv", [&](std::ostream& o) { write_summary_tsv(o, reports); });
      write_atomic(sub / "tasks.tsv", [&](std::ostream& o) { write_task_tsv(o, reports); });
      write_atomic(sub / "roc.tsv", [&](std::ostream& o) { write_roc_tsv(o, reports); });
      write_atomic(sub / "runs.tsv", [&](std::ostream& o) {
        o.precision(17);
        o << "method\trun\tstatus\tepochs\tprimal\tgap\ttheta_gated\n";
        for (const auto& r : reports) {
          for (std::size_t j = 0; j < r.runs.size(); ++j) {
            const auto& run = r.runs[j];
            o << r.method << '\t' << j << '\t' << to_string(run.status) << '\t' << run.epochs << '\t' << run.primal
              << '\t' << run.gap << '\t' << (theta_steps_gated(run) ? 1 : 0) << '\n';
          }
        }
      });
    }
    write_atomic(dir / "summary.tsv", [&](std::ostream& o) { write_benchmark_summary_tsv(o, result); });
    write_benchmark_summary_tsv(std::cout, result);
    return kOk;
  }
};

// ---------------------------------------------------------------- oracle

struct OracleCmd {
  DataFlags data;
  SolverFlags solver;
  std::string tasks;
  std::vector<std::string> kernel_files;

  void add_to(CLI::App* app) {
    data.add_to(app);
    app->add_option("-t,--tasks", tasks, "Task-structure config (JSON)")->required();
    app->add_option("--kernel", kernel_files,
                    "Precomputed base kernel per kernel term (dense rows); default: linear kernels of the views");
    solver.add_to(app);
  }

  int run() const {
    const SolverConfig config = solver.resolve();
    require_file(data.data, "dataset");
    require_file(tasks, "task-structure");
    for (const auto& k : kernel_files) require_file(k, "kernel");
    const RawDataset raw = read_raw_dataset_file(data.data);
    auto similarities = load_task_structure_file(tasks);
    const MultiTaskDataset dataset = featurize(raw, data.resolve(raw.num_views()), similarities.front().Q.rows());
    const Problem problem(dataset, assign_kernels(similarities, dataset.num_views()));

    MultitaskKernelSet kernels;
    if (kernel_files.empty()) {
      kernels = build_multitask_kernels(problem);
    } else {
      if (kernel_files.size() != problem.num_kernels()) {
        throw InfeasibleConfig(std::to_string(kernel_files.size()) + " kernel files for " +
                               std::to_string(problem.num_kernels()) + " kernel terms");
      }
      std::vector<Matrix> base, qinvs;
      for (std::size_t m = 0; m < kernel_files.size(); ++m) {
        base.push_back(read_dense_matrix_file(kernel_files[m]));
        qinvs.push_back(problem.Qinv(m));
      }
      kernels = build_multitask_kernels(base, qinvs, dataset.labels(), dataset.tasks());
    }
    const OracleResult r = oracle_train(kernels, config);
    std::cout.precision(17);
    std::cout << "key\tvalue\n"
              << "converged\t" << (r.converged ? 1 : 0) << '\n'
              << "epochs\t" << r.epochs << '\n'
              << "primal\t" << r.objective << '\n'
              << "dual_partial\t" << r.dual_partial << '\n'
              << "dual_complete\t" << r.dual_complete << '\n'
              << "gap\t" << r.gap() << '\n'
              << "theta\t" << join(r.theta) << '\n';
    return r.converged ? kOk : kMaxEpochs;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-task multiple kernel learning: training, evaluation and the synthetic benchmark"};
  app.set_config("--config", "", "INI/TOML file with flag values; command-line flags take precedence");
  app.require_subcommand(1);
  app.set_version_flag("--version", "mtmkl 1.0");

  GenerateCmd generate_cmd;
  TrainCmd train_cmd;
  PredictCmd predict_cmd;
  EvaluateCmd evaluate_cmd;
  EvaluateCmd plot_cmd;
  BenchmarkCmd benchmark_cmd;
  OracleCmd oracle_cmd;

  generate_cmd.add_to(app.add_subcommand("generate", "Write the hierarchical synthetic dataset and its sidecars"));
  train_cmd.add_to(app.add_subcommand("train", "Train a model by dual coordinate ascent"));
  predict_cmd.add_to(app.add_subcommand("predict", "Score a dataset with a model"));
  evaluate_cmd.add_to(app.add_subcommand("evaluate", "Per-task AUC of a model on a labelled dataset"), false);
  plot_cmd.add_to(app.add_subcommand("plot-data", "Dump per-task metrics and ROC points for plotting"), true);
  benchmark_cmd.add_to(app.add_subcommand("benchmark", "Baseline comparison on generated data over seeds"));
  oracle_cmd.add_to(app.add_subcommand("oracle", "Kernel-space reference solver on the same problem"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::FileError& e) {
    std::cerr << "mtmkl: " << e.what() << '\n';
    return kConfig;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (app.got_subcommand("generate")) return generate_cmd.run();
    if (app.got_subcommand("train")) return train_cmd.run();
    if (app.got_subcommand("predict")) return predict_cmd.run();
    if (app.got_subcommand("evaluate")) return evaluate_cmd.run();
    if (app.got_subcommand("plot-data")) return plot_cmd.run();
    if (app.got_subcommand("benchmark")) return benchmark_cmd.run();
    if (app.got_subcommand("oracle")) return oracle_cmd.run();
  } catch (const InfeasibleConfig& e) {
    std::cerr << "mtmkl: infeasible configuration: " << e.what() << '\n';
    return kInfeasible;
  } catch (const NumericalError& e) {
    std::cerr << "mtmkl: numerical abort: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "mtmkl: " << e.what() << '\n';
    return kConfig;
  }
  return kUsage;
}
