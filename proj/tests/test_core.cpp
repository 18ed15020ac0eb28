#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "mtmkl/dataset.hpp"
#include "mtmkl/error.hpp"
#include "mtmkl/feature_map.hpp"
#include "mtmkl/loss.hpp"
#include "mtmkl/matrix_io.hpp"
#include "mtmkl/synthetic.hpp"
#include "oracles.hpp"

using namespace mtmkl;

namespace {

const Loss kHinge{LossKind::kHinge};
const Loss kLogistic{LossKind::kLogistic};
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST(Loss, HingeValues) {
  EXPECT_DOUBLE_EQ(loss_eval(kHinge, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(loss_eval(kHinge, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(loss_eval(kHinge, -1.5), 2.5);
}

TEST(Loss, LogisticValues) {
  EXPECT_NEAR(loss_eval(kLogistic, 0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(loss_eval(kLogistic, 3.0), std::log1p(std::exp(-3.0)), 1e-15);
  // no overflow far out in either direction
  EXPECT_NEAR(loss_eval(kLogistic, -800.0), 800.0, 1e-9);
  EXPECT_NEAR(loss_eval(kLogistic, 800.0), 0.0, 1e-300);
}

TEST(Loss, HingeConjugate) {
  EXPECT_DOUBLE_EQ(loss_conjugate(kHinge, -0.5), -0.5);
  EXPECT_DOUBLE_EQ(loss_conjugate(kHinge, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(loss_conjugate(kHinge, -1.0), -1.0);
  EXPECT_EQ(loss_conjugate(kHinge, 0.5), kInf);
  EXPECT_EQ(loss_conjugate(kHinge, -1.5), kInf);
}

TEST(Loss, LogisticConjugateMatchesNumericSupremum) {
  for (double a : {-0.99, -0.9, -0.75, -0.5, -0.3, -0.1, -0.01}) {
    EXPECT_NEAR(loss_conjugate(kLogistic, a), oracle::numeric_conjugate(kLogistic, a), 1e-9) << "a=" << a;
  }
  // the supremum at a = -1/2 is attained at b = 0: value -log 2
  EXPECT_NEAR(loss_conjugate(kLogistic, -0.5), -std::log(2.0), 1e-14);
}

TEST(Loss, HingeConjugateMatchesNumericSupremum) {
  for (double a : {-1.0, -0.8, -0.5, -0.2, 0.0}) {
    EXPECT_NEAR(loss_conjugate(kHinge, a), oracle::numeric_conjugate(kHinge, a), 1e-9) << "a=" << a;
  }
}

TEST(Loss, LogisticConjugateEndpoints) {
  EXPECT_EQ(loss_conjugate(kLogistic, 0.0), 0.0);
  EXPECT_EQ(loss_conjugate(kLogistic, -1.0), 0.0);
  EXPECT_EQ(loss_conjugate(kLogistic, 1e-9), kInf);
  EXPECT_EQ(loss_conjugate(kLogistic, -1.0 - 1e-9), kInf);
}

TEST(Loss, FenchelYoungInequalityWithAttainedEquality) {
  Rng rng(7);
  for (const Loss& loss : {kHinge, kLogistic}) {
    for (int trial = 0; trial < 200; ++trial) {
      const double a = 6.0 * rng.uniform() - 3.0;
      const double b = -rng.uniform();
      EXPECT_GE(loss.eval(a) + loss.conjugate(b), a * b - 1e-12);
    }
    for (double b : {-0.9, -0.5, -0.1}) {
      auto f = [&](double a) { return a * b - loss.eval(a); };
      const double a_star = oracle::golden_max(f, -40.0, 40.0, 300);
      EXPECT_NEAR(loss.eval(a_star) + loss.conjugate(b), a_star * b, 1e-8) << loss.name() << " b=" << b;
    }
  }
}

TEST(Loss, DualTerm) {
  EXPECT_DOUBLE_EQ(kHinge.dual_term(0.3, 1.0), 0.3);
  EXPECT_EQ(kHinge.dual_term(1.5, 1.0), -kInf);
  EXPECT_EQ(kHinge.dual_term(-0.1, 1.0), -kInf);
  // C * (entropy of alpha/C)
  const double a = 0.25;
  EXPECT_NEAR(kLogistic.dual_term(a, 1.0), -(a * std::log(a) + (1 - a) * std::log(1 - a)), 1e-14);
}

TEST(Loss, ParseNames) {
  EXPECT_EQ(Loss::parse("hinge").kind(), LossKind::kHinge);
  EXPECT_EQ(Loss::parse("logistic").kind(), LossKind::kLogistic);
  EXPECT_THROW(Loss::parse("squared"), ParseError);
}

TEST(FeatureMap, PassthroughIsIdentity) {
  const auto fv = FeatureMap::passthrough(2).apply(NumericInput{{0, 1.0}, {1, 2.0}});
  ASSERT_TRUE(fv.is_dense());
  ASSERT_EQ(fv.stored(), 2u);
  EXPECT_EQ(fv.value_at(0), 1.0);
  EXPECT_EQ(fv.value_at(1), 2.0);
}

TEST(FeatureMap, PassthroughRejectsOutOfRangeIndex) {
  EXPECT_THROW(FeatureMap::passthrough(2).apply(NumericInput{{2, 1.0}}), ParseError);
  EXPECT_THROW(FeatureMap::passthrough(2).apply(std::string("ACGT")), ParseError);
}

TEST(FeatureMap, SpectrumOverlappingKmers) {
  const auto map = FeatureMap::hashed_spectrum(2, 16);
  const auto fv = feature_map_apply(map, std::string("AAA"));
  ASSERT_EQ(fv.stored(), 1u);
  EXPECT_EQ(fv.index_at(0), fnv1a64("AA") & 0xffff);
  EXPECT_EQ(fv.value_at(0), 2.0);
}

TEST(FeatureMap, SpectrumSingleSymbols) {
  const auto map = FeatureMap::hashed_spectrum(1, 20);
  const auto fv = map.apply(std::string("ACGT"));
  EXPECT_EQ(fv.stored(), 4u);
  for (std::size_t k = 0; k < fv.stored(); ++k) EXPECT_EQ(fv.value_at(k), 1.0);
  EXPECT_DOUBLE_EQ(fv.squared_norm(), 4.0);
}

TEST(FeatureMap, SpectrumRejectsForeignSymbol) {
  const auto map = FeatureMap::hashed_spectrum(3, 10);
  try {
    map.apply(std::string("ACGNT"));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("position 3"), std::string::npos) << e.what();
  }
}

TEST(FeatureMap, SpectrumShorterThanK) {
  const auto fv = FeatureMap::hashed_spectrum(5, 8).apply(std::string("ACG"));
  EXPECT_EQ(fv.stored(), 0u);
}

TEST(FeatureMap, Fnv1aReferenceValues) {
  // published FNV-1a 64 test vectors
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
}

TEST(FeatureMap, DescriptorRoundTrip) {
  for (const auto& map : {FeatureMap::passthrough(0), FeatureMap::passthrough(17),
                          FeatureMap::hashed_spectrum(4, 12, "ACGU")}) {
    EXPECT_EQ(FeatureMap::parse(map.describe()), map) << map.describe();
  }
  EXPECT_THROW(FeatureMap::parse("gaussian"), ParseError);
}

TEST(FeatureMap, SpectrumGramIsSymmetricPsd) {
  const auto seqs = random_sequences(60, 40, 11);
  const auto map = FeatureMap::hashed_spectrum(3, 6);  // small space: plenty of collisions
  std::vector<FeatureVector> rows;
  for (const auto& s : seqs) rows.push_back(map.apply(s));
  Matrix K(60, 60);
  for (int i = 0; i < 60; ++i) {
    for (int j = 0; j < 60; ++j) K(i, j) = dot(rows[i], rows[j]);
  }
  EXPECT_EQ(max_asymmetry(K), 0.0);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(K);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-9 * eig.eigenvalues().cwiseAbs().maxCoeff());
}

TEST(FeatureVector, SparseNormalizesEntries) {
  const auto fv = FeatureVector::sparse({{5, 1.0}, {2, 3.0}, {5, 2.0}});
  ASSERT_EQ(fv.stored(), 2u);
  EXPECT_EQ(fv.index_at(0), 2u);
  EXPECT_EQ(fv.value_at(1), 3.0);
  EXPECT_EQ(fv.extent(), 6u);
}

TEST(FeatureVector, MixedDotProducts) {
  const auto dense = FeatureVector::dense({1.0, 2.0, 0.0, 4.0});
  const auto sparse = FeatureVector::sparse({{1, 3.0}, {3, -1.0}});
  EXPECT_DOUBLE_EQ(dot(dense, sparse), 2.0);
  EXPECT_DOUBLE_EQ(dot(sparse, dense), 2.0);
  EXPECT_DOUBLE_EQ(dot(sparse, sparse), 10.0);
  std::vector<double> acc(4, 0.0);
  sparse.add_to(acc, 2.0);
  EXPECT_EQ(acc[1], 6.0);
  EXPECT_EQ(acc[3], -2.0);
}

TEST(Dataset, ParsesMixedViews) {
  std::istringstream in(
      "# comment line\n"
      "+1 0 | 0:1.5 3:-2 | ACGT\n"
      "-1 1 | 1:0.25 | GGA  # trailing comment\n");
  const RawDataset raw = read_raw_dataset(in);
  ASSERT_EQ(raw.examples.size(), 2u);
  EXPECT_EQ(raw.num_views(), 2u);
  EXPECT_EQ(raw.examples[1].label, -1);
  EXPECT_EQ(raw.examples[1].task, 1u);
  EXPECT_EQ(std::get<std::string>(raw.examples[1].cells[1]), "GGA");
  EXPECT_EQ(std::get<NumericInput>(raw.examples[0].cells[0]).size(), 2u);
}

TEST(Dataset, RejectsMalformedLines) {
  for (const char* text : {"2 0 | 0:1\n", "+1 | 0:1\n", "+1 0 | 0:x\n", "+1 0 | 1\n0:1\n",
                           "+1 0 | 0:1\n-1 0 | 0:1 | 1:1\n", "+1 -3 | 0:1\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(read_raw_dataset(in), ParseError) << text;
  }
}

TEST(Dataset, RoundTripIsBitExact) {
  Rng rng(3);
  RawDataset raw;
  for (int i = 0; i < 50; ++i) {
    RawExample ex;
    ex.label = rng.uniform() < 0.5 ? 1 : -1;
    ex.task = rng.below(4);
    NumericInput cell;
    for (FeatureIndex k = 0; k < 6; ++k) cell.emplace_back(k * 3, rng.normal() * std::pow(10.0, rng.below(20) - 10.0));
    ex.cells.emplace_back(std::move(cell));
    ex.cells.emplace_back(random_sequences(1, 10, rng.next()).front());
    raw.examples.push_back(std::move(ex));
  }
  std::ostringstream first;
  write_raw_dataset(first, raw);
  std::istringstream in(first.str());
  const RawDataset again = read_raw_dataset(in);
  EXPECT_EQ(again, raw);
  std::ostringstream second;
  write_raw_dataset(second, again);
  EXPECT_EQ(second.str(), first.str());
}

TEST(Dataset, FeaturizeAndInvariants) {
  std::istringstream in("+1 0 | 0:1 | AC\n-1 2 | 2:1 | CA\n+1 2 | 1:1 | \n");
  const RawDataset raw = read_raw_dataset(in);
  const std::vector<FeatureMap> maps{FeatureMap::passthrough(), FeatureMap::hashed_spectrum(1, 4)};
  const MultiTaskDataset data = featurize(raw, maps);
  EXPECT_EQ(data.size(), 3u);
  EXPECT_EQ(data.num_tasks(), 3u);
  EXPECT_EQ(data.view(0).dim, 3u);
  EXPECT_EQ(data.view(1).dim, 16u);
  EXPECT_TRUE(data.task_indices(1).empty());
  EXPECT_EQ(data.task_indices(2), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(data.features(1, 2).stored(), 0u);

  // index sets partition the examples
  std::size_t total = 0;
  for (std::size_t t = 0; t < data.num_tasks(); ++t) total += data.task_indices(t).size();
  EXPECT_EQ(total, data.size());
}

TEST(Dataset, ConstructorValidates) {
  auto view = [](std::size_t n) {
    View v;
    v.dim = 1;
    v.rows.assign(n, FeatureVector::dense({1.0}));
    return std::vector<View>{v};
  };
  EXPECT_THROW(MultiTaskDataset({1, 0}, {0, 0}, 1, view(2)), ParseError);
  EXPECT_THROW(MultiTaskDataset({1, -1}, {0, 3}, 2, view(2)), ParseError);
  EXPECT_THROW(MultiTaskDataset({1, -1}, {0, 0}, 1, view(3)), ParseError);
  View wide;
  wide.dim = 1;
  wide.rows = {FeatureVector::dense({1.0, 2.0})};
  EXPECT_THROW(MultiTaskDataset({1}, {0}, 1, {wide}), ParseError);
}

TEST(Dataset, SubsetCollapseAndSingleTask) {
  Rng rng(5);
  const auto data = oracle::random_dataset(rng, 12, 3, 2, 4);
  const auto single = data.single_task(1);
  EXPECT_EQ(single.num_tasks(), 1u);
  EXPECT_EQ(single.size(), data.task_indices(1).size());
  const auto pooled = data.collapse_tasks();
  EXPECT_EQ(pooled.num_tasks(), 1u);
  EXPECT_EQ(pooled.size(), data.size());
  const std::vector<std::size_t> rows{5, 0, 7};
  const auto sub = data.subset(rows);
  EXPECT_EQ(sub.num_tasks(), 3u);
  EXPECT_EQ(sub.task(0), data.task(5));
  EXPECT_EQ(sub.features(1, 2), data.features(1, 7));
}

TEST(Dataset, ToRawRoundTrip) {
  Rng rng(9);
  const auto data = oracle::random_dataset(rng, 10, 2, 1, 3);
  const RawDataset raw = to_raw(data);
  const std::vector<FeatureMap> maps{FeatureMap::passthrough(3)};
  const auto again = featurize(raw, maps, 2);
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(again.features(0, i), data.features(0, i));
    EXPECT_EQ(again.label(i), data.label(i));
  }
}

TEST(MatrixIo, RoundTripAndErrors) {
  Rng rng(2);
  const Matrix A = oracle::random_matrix(rng, 4, 3) * 1e-7;
  std::stringstream s;
  write_dense_matrix(s, A);
  const Matrix B = read_dense_matrix(s);
  EXPECT_EQ(A, B);
  std::istringstream ragged("1 2 3\n4 5\n");
  EXPECT_THROW(read_dense_matrix(ragged), ParseError);
  std::istringstream bad("1 x\n");
  EXPECT_THROW(read_dense_matrix(bad), ParseError);
}
