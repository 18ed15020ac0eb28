#include "mtmkl/task_similarity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mtmkl/error.hpp"

namespace mtmkl {

namespace {

constexpr double kSymmetryTolerance = 1e-10;

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

void require_square_symmetric(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw InfeasibleConfig(std::string(what) + " must be a non-empty square matrix");
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (max_asymmetry(m) > kSymmetryTolerance * scale) {
    throw InfeasibleConfig(std::string(what) + " is not symmetric");
  }
}

std::string format_double(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

}  // namespace

PseudoInverse pseudo_inverse(const Matrix& symmetric) {
  if (symmetric.rows() != symmetric.cols()) throw InfeasibleConfig("pseudo_inverse needs a square matrix");
  const Eigen::Index n = symmetric.rows();
  PseudoInverse out{Matrix::Zero(n, n), 0};
  if (n == 0) return out;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(symmetric));
  const Vector& values = eig.eigenvalues();
  const Matrix& vectors = eig.eigenvectors();
  const double largest = values.cwiseAbs().maxCoeff();
  if (largest == 0.0) return out;
  const double cutoff = kRankTolerance * largest;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(values(i)) <= cutoff) continue;
    out.inverse.noalias() += (1.0 / values(i)) * vectors.col(i) * vectors.col(i).transpose();
    ++out.rank;
  }
  out.inverse = symmetrized(out.inverse);
  return out;
}

// --- TaskTree -------------------------------------------------------------

TaskTree::TaskTree(std::vector<long> parents) : parents_(std::move(parents)) {
  const std::size_t n = parents_.size();
  if (n == 0) throw InfeasibleConfig("task tree has no nodes");
  children_.assign(n, {});
  std::size_t roots = 0;
  for (std::size_t v = 0; v < n; ++v) {
    const long p = parents_[v];
    if (p == -1) {
      ++roots;
      root_ = v;
    } else if (p < 0 || static_cast<std::size_t>(p) >= n || static_cast<std::size_t>(p) == v) {
      throw InfeasibleConfig("task tree node " + std::to_string(v) + " has invalid parent " +
                             std::to_string(p));
    } else {
      children_[static_cast<std::size_t>(p)].push_back(v);
    }
  }
  if (roots != 1) throw InfeasibleConfig("task tree needs exactly one root, found " + std::to_string(roots));
  // Every node must reach the root in at most n steps.
  for (std::size_t v = 0; v < n; ++v) {
    std::size_t steps = 0;
    long cur = static_cast<long>(v);
    while (cur != -1 && steps <= n) {
      cur = parents_[static_cast<std::size_t>(cur)];
      ++steps;
    }
    if (cur != -1) throw InfeasibleConfig("task tree contains a cycle through node " + std::to_string(v));
  }
  leaf_task_.assign(n, -1);
  for (std::size_t v = 0; v < n; ++v) {
    if (children_[v].empty()) {
      leaf_task_[v] = static_cast<long>(leaves_.size());
      leaves_.push_back(v);
    } else {
      inner_.push_back(v);
    }
  }
}

TaskTree TaskTree::complete_binary(unsigned depth) {
  if (depth > 20) throw InfeasibleConfig("tree depth too large");
  const std::size_t nodes = (std::size_t{2} << depth) - 1;
  std::vector<long> parents(nodes);
  parents[0] = -1;
  for (std::size_t k = 1; k < nodes; ++k) parents[k] = static_cast<long>((k - 1) / 2);
  return TaskTree(std::move(parents));
}

std::vector<std::size_t> TaskTree::descendant_tasks(std::size_t node) const {
  std::vector<std::size_t> tasks;
  std::vector<std::size_t> stack{node};
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    if (children_[v].empty()) {
      tasks.push_back(static_cast<std::size_t>(leaf_task_[v]));
    } else {
      stack.insert(stack.end(), children_[v].begin(), children_[v].end());
    }
  }
  std::sort(tasks.begin(), tasks.end());
  return tasks;
}

std::size_t TaskTree::task_of_leaf(std::size_t node) const {
  if (node >= leaf_task_.size() || leaf_task_[node] < 0) {
    throw InfeasibleConfig("node " + std::to_string(node) + " is not a leaf");
  }
  return static_cast<std::size_t>(leaf_task_[node]);
}

// --- constructors ---------------------------------------------------------

TaskSimilarity q_identity(std::size_t tasks) {
  if (tasks == 0) throw InfeasibleConfig("identity similarity needs T >= 1");
  const auto n = static_cast<Eigen::Index>(tasks);
  return {Matrix::Identity(n, n), Matrix::Identity(n, n), tasks, "identity"};
}

TaskSimilarity q_uniform(std::size_t tasks) {
  if (tasks == 0) throw InfeasibleConfig("uniform similarity needs T >= 1");
  const auto n = static_cast<Eigen::Index>(tasks);
  const double t = static_cast<double>(tasks);
  return {Matrix::Constant(n, n, 1.0 / (t * t)), Matrix::Ones(n, n), 1, "uniform"};
}

TaskSimilarity q_frustratingly_easy() {
  Matrix qinv(2, 2);
  qinv << 2.0, 1.0, 1.0, 2.0;
  Matrix q(2, 2);
  q << 2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0;
  return {q, qinv, 2, "frustratingly_easy"};
}

Matrix graph_laplacian(const Matrix& adjacency) {
  Matrix L = -adjacency;
  L.diagonal().setZero();
  for (Eigen::Index i = 0; i < adjacency.rows(); ++i) {
    double degree = 0.0;
    for (Eigen::Index k = 0; k < adjacency.cols(); ++k) {
      if (k != i) degree += adjacency(i, k);
    }
    L(i, i) = degree;
  }
  return L;
}

std::size_t connected_components(const Matrix& adjacency) {
  const auto n = static_cast<std::size_t>(adjacency.rows());
  std::vector<bool> seen(n, false);
  std::size_t components = 0;
  for (std::size_t start = 0; start < n; ++start) {
    if (seen[start]) continue;
    ++components;
    std::vector<std::size_t> stack{start};
    seen[start] = true;
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      for (std::size_t u = 0; u < n; ++u) {
        if (!seen[u] && u != v && adjacency(v, u) > 0.0) {
          seen[u] = true;
          stack.push_back(u);
        }
      }
    }
  }
  return components;
}

TaskSimilarity q_graph_laplacian(const Matrix& adjacency) {
  require_square_symmetric(adjacency, "adjacency");
  if ((adjacency.array() < 0.0).any()) throw InfeasibleConfig("adjacency has negative entries");
  const Eigen::Index n = adjacency.rows();
  Matrix Q = Matrix::Identity(n, n) + graph_laplacian(adjacency);
  Matrix Qinv = symmetrized(Q.llt().solve(Matrix::Identity(n, n)));
  return {std::move(Q), std::move(Qinv), static_cast<std::size_t>(n), "graph"};
}

Matrix cluster_coupling(const Matrix& assignments, double rho) {
  const Eigen::Index T = assignments.cols();
  Matrix G = Matrix::Zero(T, T);
  for (Eigen::Index m = 0; m < assignments.rows(); ++m) {
    const auto r = assignments.row(m);
    const double denom = rho + r.sum();
    G.diagonal() += r.transpose();
    G.noalias() -= (r.transpose() * r) / denom;
  }
  return symmetrized(G);
}

TaskSimilarity q_clustering(const ClusterSpec& spec, std::size_t tasks) {
  const auto T = static_cast<Eigen::Index>(tasks);
  if (tasks == 0 || spec.assignments.cols() != T || spec.assignments.rows() == 0) {
    throw InfeasibleConfig("cluster assignments must be (clusters x " + std::to_string(tasks) + ")");
  }
  if (!(spec.rho > 0.0)) throw InfeasibleConfig("cluster center regularizer rho must be > 0");
  if (spec.lambda < 0.0) throw InfeasibleConfig("cluster ridge lambda must be >= 0");
  if ((spec.assignments.array() < 0.0).any()) throw InfeasibleConfig("cluster assignments must be >= 0");
  if ((spec.assignments.array() == 0.0).all()) {
    throw InfeasibleConfig("cluster spec assigns no task to any cluster");
  }
  if (spec.lambda == 0.0) {
    for (Eigen::Index t = 0; t < T; ++t) {
      if ((spec.assignments.col(t).array() <= 0.0).all()) {
        throw InfeasibleConfig("task " + std::to_string(t) +
                               " belongs to no cluster and lambda = 0; Q would be singular");
      }
    }
  }
  Matrix Q = spec.lambda * Matrix::Identity(T, T) + cluster_coupling(spec.assignments, spec.rho);
  PseudoInverse pinv = pseudo_inverse(Q);
  return {std::move(Q), std::move(pinv.inverse), pinv.rank, "clustering"};
}

std::vector<TaskSimilarity> q_hierarchical(const TaskTree& tree, double rho, HierarchyCoupling coupling) {
  if (!(rho > 0.0)) throw InfeasibleConfig("hierarchy rho must be > 0");
  if (tree.inner_nodes().empty()) throw InfeasibleConfig("task tree has no inner node");
  const auto T = static_cast<Eigen::Index>(tree.num_tasks());
  std::vector<TaskSimilarity> out;
  out.reserve(tree.inner_nodes().size());
  for (std::size_t node : tree.inner_nodes()) {
    Matrix assignment = Matrix::Zero(1, T);
    for (std::size_t t : tree.descendant_tasks(node)) assignment(0, static_cast<Eigen::Index>(t)) = 1.0;
    Matrix G = cluster_coupling(assignment, rho);
    TaskSimilarity s;
    s.label = "hierarchy_node_" + std::to_string(node);
    if (coupling == HierarchyCoupling::kPseudoInverse) {
      PseudoInverse pinv = pseudo_inverse(G);
      s.Q = std::move(G);
      s.Qinv = std::move(pinv.inverse);
      s.rank = pinv.rank;
    } else {
      s.Q = Matrix::Identity(T, T) + G;
      s.Qinv = symmetrized(s.Q.llt().solve(Matrix::Identity(T, T)));
      s.rank = static_cast<std::size_t>(T);
      s.label += "_ridge";
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<TaskSimilarity> q_smooth(const Matrix& similarity, const std::vector<double>& sigmas) {
  require_square_symmetric(similarity, "smooth similarity");
  if (sigmas.empty()) throw InfeasibleConfig("smooth similarity needs at least one sigma");
  std::vector<TaskSimilarity> out;
  for (double sigma : sigmas) {
    if (!(sigma > 0.0)) throw InfeasibleConfig("smooth similarity length scales must be > 0");
    const Matrix raw = symmetrized((similarity.array() / sigma).exp().matrix());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(raw);
    Vector values = eig.eigenvalues();
    double clipped = 0.0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      if (values(i) < 0.0) {
        clipped += -values(i);
        values(i) = 0.0;
      }
    }
    TaskSimilarity s;
    s.Qinv = clipped > 0.0
                 ? symmetrized(eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose())
                 : raw;
    PseudoInverse pinv = pseudo_inverse(s.Qinv);
    s.Q = std::move(pinv.inverse);
    s.rank = pinv.rank;
    s.label = "smooth_sigma_" + format_double(sigma) + "_clipped_" + format_double(clipped);
    out.push_back(std::move(s));
  }
  return out;
}

SimilarityCheck check_similarity(const TaskSimilarity& s) {
  SimilarityCheck c;
  c.asymmetry = std::max(max_asymmetry(s.Q), max_asymmetry(s.Qinv));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(s.Qinv), Eigen::EigenvaluesOnly);
  const double norm = eig.eigenvalues().cwiseAbs().maxCoeff();
  c.min_qinv_eigen = norm > 0.0 ? eig.eigenvalues().minCoeff() / norm : 0.0;
  const auto T = s.Q.rows();
  if (s.rank == static_cast<std::size_t>(T)) {
    c.penrose_residual = (s.Q * s.Qinv - Matrix::Identity(T, T)).cwiseAbs().maxCoeff();
  } else {
    c.penrose_residual = (s.Q * s.Qinv * s.Q - s.Q).cwiseAbs().maxCoeff();
  }
  return c;
}

// --- config ---------------------------------------------------------------

namespace {

using nlohmann::json;

Matrix matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw ParseError(std::string(what) + " must be a list of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j.front().size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ParseError(std::string(what) + " rows differ in length");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

void append(std::vector<TaskSimilarity>& out, std::vector<TaskSimilarity> more) {
  for (auto& s : more) out.push_back(std::move(s));
}

std::vector<TaskSimilarity> parse_component(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "identity") return {q_identity(j.at("tasks").get<std::size_t>())};
  if (kind == "uniform") return {q_uniform(j.at("tasks").get<std::size_t>())};
  if (kind == "frustratingly_easy") return {q_frustratingly_easy()};
  if (kind == "graph") {
    if (j.contains("adjacencies")) {
      std::vector<TaskSimilarity> out;
      for (const auto& a : j.at("adjacencies")) out.push_back(q_graph_laplacian(matrix_from_json(a, "adjacency")));
      return out;
    }
    return {q_graph_laplacian(matrix_from_json(j.at("adjacency"), "adjacency"))};
  }
  if (kind == "clustering") {
    ClusterSpec spec;
    spec.assignments = matrix_from_json(j.at("assignments"), "assignments");
    spec.rho = j.value("rho", 1.0);
    spec.lambda = j.value("lambda", 0.0);
    return {q_clustering(spec, static_cast<std::size_t>(spec.assignments.cols()))};
  }
  if (kind == "hierarchy") {
    TaskTree tree(j.at("parents").get<std::vector<long>>());
    const std::string coupling = j.value("coupling", std::string("pseudo_inverse"));
    HierarchyCoupling mode;
    if (coupling == "pseudo_inverse") {
      mode = HierarchyCoupling::kPseudoInverse;
    } else if (coupling == "ridge") {
      mode = HierarchyCoupling::kRidge;
    } else {
      throw ParseError("unknown hierarchy coupling '" + coupling + "'");
    }
    return q_hierarchical(tree, j.value("rho", 1.0), mode);
  }
  if (kind == "smooth") {
    return q_smooth(matrix_from_json(j.at("similarity"), "similarity"), j.at("sigmas").get<std::vector<double>>());
  }
  throw ParseError("unknown task-structure kind '" + kind + "'");
}

}  // namespace

std::vector<TaskSimilarity> load_task_structure(const std::string& json_text) {
  std::vector<TaskSimilarity> out;
  try {
    const json config = json::parse(json_text, nullptr, true, true);
    if (config.contains("components")) {
      for (const auto& c : config.at("components")) append(out, parse_component(c));
    } else {
      out = parse_component(config);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("task-structure config: ") + e.what());
  }
  if (out.empty()) throw InfeasibleConfig("task-structure config yields no similarity matrix");
  for (const auto& s : out) {
    if (s.num_tasks() != out.front().num_tasks()) {
      throw InfeasibleConfig("task-structure components disagree on the number of tasks");
    }
  }
  return out;
}

std::vector<TaskSimilarity> load_task_structure_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open task-structure file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_task_structure(buffer.str());
}

}  // namespace mtmkl
