#include "mtmkl/model.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "mtmkl/error.hpp"

namespace mtmkl {

namespace {

constexpr const char* kModelMagic = "mtmkl-model";
constexpr int kModelVersion = 1;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string next_line(std::istream& in, const char* what) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.front() != '#') return line;
  }
  throw ParseError(std::string("model file truncated before ") + what);
}

std::istringstream keyed(std::istream& in, const std::string& key) {
  const std::string line = next_line(in, key.c_str());
  std::istringstream fields(line);
  std::string found;
  fields >> found;
  if (found != key) throw ParseError("model file: expected '" + key + "', found '" + found + "'");
  return fields;
}

double parse_double(const std::string& token) {
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used == token.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw ParseError("model file: bad number '" + token + "'");
}

}  // namespace

Model make_model(const ModelState& state, const Problem& problem, const SolverConfig& config,
                 std::vector<FeatureMap> maps) {
  Model model;
  model.p = config.p;
  model.C = config.C;
  model.num_tasks = problem.num_tasks();
  model.theta = state.theta;
  for (const auto& k : problem.kernels()) {
    model.kernel_views.push_back(k.view);
    model.kernel_labels.push_back(k.similarity.label.empty() ? "unnamed" : k.similarity.label);
  }
  if (maps.size() != problem.data().num_views()) {
    throw InfeasibleConfig("model needs one feature map per view");
  }
  model.maps = std::move(maps);
  model.weights = state.W;
  return model;
}

double predict(const Model& model, const std::vector<FeatureVector>& views, std::size_t task) {
  if (task >= model.num_tasks) {
    throw InfeasibleConfig("task " + std::to_string(task) + " unknown to model with " +
                           std::to_string(model.num_tasks) + " tasks");
  }
  double f = 0.0;
  for (std::size_t m = 0; m < model.weights.size(); ++m) {
    const Matrix& W = model.weights[m];
    f += views.at(model.kernel_views[m])
             .dot({W.col(static_cast<Eigen::Index>(task)).data(), static_cast<std::size_t>(W.rows())});
  }
  return f;
}

double predict(const Model& model, const std::vector<RawInput>& raw, std::size_t task) {
  if (raw.size() != model.maps.size()) throw InfeasibleConfig("input has the wrong number of views");
  std::vector<FeatureVector> views;
  views.reserve(raw.size());
  for (std::size_t v = 0; v < raw.size(); ++v) views.push_back(model.maps[v].apply(raw[v]));
  return predict(model, views, task);
}

double predict(const ModelState& state, const Problem& problem, std::size_t i) {
  return decision_value(state, problem, i);
}

std::vector<double> predict_dataset(const Model& model, const MultiTaskDataset& data) {
  if (data.num_views() != model.maps.size()) throw InfeasibleConfig("dataset has the wrong number of views");
  std::vector<double> scores(data.size());
  std::vector<FeatureVector> views(data.num_views());
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t v = 0; v < data.num_views(); ++v) views[v] = data.features(v, i);
    scores[i] = predict(model, views, data.task(i));
  }
  return scores;
}

void write_model(std::ostream& out, const Model& model) {
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << "p " << fmt17(model.p) << '\n';
  out << "C " << fmt17(model.C) << '\n';
  out << "tasks " << model.num_tasks << '\n';
  out << "views " << model.maps.size() << '\n';
  out << "kernels " << model.weights.size() << '\n';
  out << "theta";
  for (double t : model.theta) out << ' ' << fmt17(t);
  out << '\n';
  for (std::size_t v = 0; v < model.maps.size(); ++v) out << "map " << v << ' ' << model.maps[v].describe() << '\n';
  for (std::size_t m = 0; m < model.weights.size(); ++m) {
    out << "kernel " << m << " view " << model.kernel_views[m] << " dim " << model.weights[m].rows() << " label "
        << model.kernel_labels[m] << '\n';
  }
  for (std::size_t m = 0; m < model.weights.size(); ++m) {
    const Matrix& W = model.weights[m];
    for (Eigen::Index t = 0; t < W.cols(); ++t) {
      out << "w " << m << ' ' << t;
      for (Eigen::Index k = 0; k < W.rows(); ++k) {
        if (W(k, t) != 0.0) out << ' ' << k << ':' << fmt17(W(k, t));
      }
      out << '\n';
    }
  }
}

Model read_model(std::istream& in) {
  Model model;
  {
    std::istringstream header(next_line(in, "header"));
    std::string magic;
    int version = 0;
    header >> magic >> version;
    if (magic != kModelMagic) throw ParseError("not a model file");
    if (version != kModelVersion) throw ParseError("unsupported model version " + std::to_string(version));
  }
  std::string token;
  keyed(in, "p") >> token;
  model.p = parse_double(token);
  keyed(in, "C") >> token;
  model.C = parse_double(token);
  keyed(in, "tasks") >> model.num_tasks;
  std::size_t views = 0, kernels = 0;
  keyed(in, "views") >> views;
  keyed(in, "kernels") >> kernels;
  {
    auto fields = keyed(in, "theta");
    while (fields >> token) model.theta.push_back(parse_double(token));
  }
  if (model.theta.size() != kernels) throw ParseError("model file: theta has the wrong length");
  for (std::size_t v = 0; v < views; ++v) {
    auto fields = keyed(in, "map");
    std::size_t index = 0;
    fields >> index;
    std::string descriptor;
    std::getline(fields, descriptor);
    model.maps.push_back(FeatureMap::parse(descriptor));
  }
  for (std::size_t m = 0; m < kernels; ++m) {
    auto fields = keyed(in, "kernel");
    std::size_t index = 0, view = 0;
    Eigen::Index dim = 0;
    std::string key_view, key_dim, key_label, label;
    fields >> index >> key_view >> view >> key_dim >> dim >> key_label >> label;
    if (!fields || index != m || view >= views) throw ParseError("model file: bad kernel line");
    model.kernel_views.push_back(view);
    model.kernel_labels.push_back(label);
    model.weights.push_back(Matrix::Zero(dim, static_cast<Eigen::Index>(model.num_tasks)));
  }
  for (std::size_t line = 0; line < kernels * model.num_tasks; ++line) {
    auto fields = keyed(in, "w");
    std::size_t m = 0;
    Eigen::Index t = 0;
    fields >> m >> t;
    if (!fields || m >= kernels || t >= static_cast<Eigen::Index>(model.num_tasks)) {
      throw ParseError("model file: bad weight line");
    }
    while (fields >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos) throw ParseError("model file: bad weight entry '" + token + "'");
      const auto k = static_cast<Eigen::Index>(std::stoul(token.substr(0, colon)));
      if (k >= model.weights[m].rows()) throw ParseError("model file: weight index out of range");
      model.weights[m](k, t) = parse_double(token.substr(colon + 1));
    }
  }
  return model;
}

}  // namespace mtmkl
