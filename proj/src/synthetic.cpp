#include "mtmkl/synthetic.hpp"

#include <fstream>
#include <numeric>
#include <sstream>

#include "mtmkl/error.hpp"
#include "mtmkl/rng.hpp"

namespace mtmkl {

namespace {

constexpr std::uint64_t kEdgeStream = 1;
constexpr std::uint64_t kTrainStream = 2;
constexpr std::uint64_t kTestStream = 3;

void sample_task(const std::vector<double>& mu, std::size_t task, std::size_t per_class, double sigma, Rng& rng,
                 std::vector<int>& labels, std::vector<std::size_t>& tasks, std::vector<FeatureVector>& rows) {
  for (int label : {+1, -1}) {
    for (std::size_t k = 0; k < per_class; ++k) {
      std::vector<double> x(mu.size());
      for (std::size_t d = 0; d < mu.size(); ++d) x[d] = 0.5 * label * mu[d] + sigma * rng.normal();
      labels.push_back(label);
      tasks.push_back(task);
      rows.push_back(FeatureVector::dense(std::move(x)));
    }
  }
}

MultiTaskDataset sample_split(const SyntheticSpec& spec, const std::vector<std::vector<double>>& mu,
                              std::size_t per_class, std::uint64_t stream) {
  std::vector<int> labels;
  std::vector<std::size_t> tasks;
  View view;
  view.dim = spec.dim;
  const std::uint64_t split_seed = Rng::derive(spec.seed, stream);
  for (std::size_t t = 0; t < mu.size(); ++t) {
    Rng rng(Rng::derive(split_seed, t));
    sample_task(mu[t], t, per_class, spec.sigma, rng, labels, tasks, view.rows);
  }
  std::vector<View> views;
  views.push_back(std::move(view));
  return MultiTaskDataset(std::move(labels), std::move(tasks), mu.size(), std::move(views));
}

}  // namespace

void SyntheticSpec::validate() const {
  if (flips < 1 || flips > dim) throw InfeasibleConfig("flips must lie in [1, dim]");
  if (depth < 1) throw InfeasibleConfig("depth must be at least 1");
  if (depth > 20) throw InfeasibleConfig("depth above 20 is not supported");
  if (!(sigma > 0.0)) throw InfeasibleConfig("sigma must be positive");
  if (n_train_per_class < 1 || n_test_per_class < 1) throw InfeasibleConfig("need at least one example per class");
}

TaskTree similarity_to_tree_clusters(unsigned depth) {
  if (depth < 1) throw InfeasibleConfig("depth must be at least 1");
  return TaskTree::complete_binary(depth);
}

std::vector<std::vector<double>> mutate_means(const SyntheticSpec& spec, const TaskTree& tree) {
  const std::size_t nodes = tree.num_nodes();
  std::vector<std::vector<double>> mu(nodes);
  const std::uint64_t edge_seed = Rng::derive(spec.seed, kEdgeStream);
  std::vector<std::size_t> order{tree.root()};
  mu[tree.root()].assign(spec.dim, 1.0);
  std::vector<std::size_t> coords(spec.dim);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t node = order[k];
    for (std::size_t child : tree.children(node)) {
      Rng rng(Rng::derive(edge_seed, child));
      std::iota(coords.begin(), coords.end(), std::size_t{0});
      // partial Fisher-Yates: the first `flips` slots are a uniform draw without replacement
      for (std::size_t j = 0; j < spec.flips; ++j) {
        std::swap(coords[j], coords[j + rng.below(spec.dim - j)]);
      }
      mu[child] = mu[node];
      for (std::size_t j = 0; j < spec.flips; ++j) mu[child][coords[j]] = -mu[child][coords[j]];
      order.push_back(child);
    }
  }
  return mu;
}

SyntheticData generate(const SyntheticSpec& spec) {
  spec.validate();
  TaskTree tree = similarity_to_tree_clusters(spec.depth);
  const auto node_mu = mutate_means(spec, tree);
  std::vector<std::vector<double>> mu;
  for (std::size_t leaf : tree.leaves()) mu.push_back(node_mu[leaf]);

  const auto T = static_cast<Eigen::Index>(mu.size());
  Matrix similarity(T, T);
  for (Eigen::Index s = 0; s < T; ++s) {
    for (Eigen::Index t = 0; t < T; ++t) {
      similarity(s, t) = std::inner_product(mu[s].begin(), mu[s].end(), mu[t].begin(), 0.0);
    }
  }
  MultiTaskDataset train = sample_split(spec, mu, spec.n_train_per_class, kTrainStream);
  MultiTaskDataset test = sample_split(spec, mu, spec.n_test_per_class, kTestStream);
  return SyntheticData{std::move(train), std::move(test), std::move(mu), std::move(similarity), std::move(tree)};
}

void write_tree(std::ostream& out, const TaskTree& tree) {
  out << "# parent of each node, -1 marks the root; leaves in node order are tasks\n";
  const auto& parents = tree.parents();
  for (std::size_t k = 0; k < parents.size(); ++k) out << (k ? " " : "") << parents[k];
  out << '\n';
}

TaskTree read_tree_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open tree file " + path);
  std::vector<long> parents;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string token;
    while (fields >> token) {
      std::size_t used = 0;
      long value = 0;
      try {
        value = std::stol(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size()) throw ParseError(path + ": bad parent index '" + token + "'");
      parents.push_back(value);
    }
  }
  return TaskTree(std::move(parents));
}

std::vector<std::string> random_sequences(std::size_t count, std::size_t length, std::uint64_t seed,
                                          const std::string& alphabet) {
  if (alphabet.empty()) throw InfeasibleConfig("empty alphabet");
  Rng rng(seed);
  std::vector<std::string> out(count);
  for (auto& s : out) {
    s.resize(length);
    for (auto& c : s) c = alphabet[rng.below(alphabet.size())];
  }
  return out;
}

}  // namespace mtmkl
