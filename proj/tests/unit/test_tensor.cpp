#include "oracles.hpp"

#include "tncond/errors.hpp"
#include "tncond/tensor.hpp"

#include <gtest/gtest.h>

using namespace tncond;

namespace {

DenseTensor iota(std::vector<Leg> legs) {
  DenseTensor t = DenseTensor::zeros(std::move(legs));
  for (std::size_t k = 0; k < t.size(); ++k)
    t[k] = static_cast<double>(k);
  return t;
}

} // namespace

TEST(Tensor, ZerosAndScalar) {
  const auto z = DenseTensor::zeros({{"a", 2}, {"b", 3}});
  EXPECT_EQ(z.size(), 6u);
  EXPECT_EQ(z.order(), 2u);
  EXPECT_EQ(DenseTensor::scalar(2.5)[0], 2.5);
  EXPECT_EQ(DenseTensor().order(), 0u);
}

TEST(Tensor, RejectsWrongDataLength) {
  EXPECT_THROW(DenseTensor({{"a", 2}}, {1.0, 2.0, 3.0}), DimensionError);
}

TEST(Tensor, PermutedMovesEntries) {
  const auto t = iota({{"a", 2}, {"b", 3}, {"c", 4}});
  const std::vector<LegId> order = {"c", "a", "b"};
  const auto p = t.permuted(order);
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      for (std::size_t c = 0; c < 4; ++c) {
        const std::size_t src[] = {a, b, c};
        const std::size_t dst[] = {c, a, b};
        EXPECT_EQ(t.at(src), p.at(dst));
      }
}

TEST(Tensor, UnknownLegThrows) {
  const auto t = iota({{"a", 2}});
  EXPECT_THROW(t.leg_index("zz"), LegNotFound);
}

TEST(Tensor, ArithmeticAlignsByLegId) {
  const auto a = iota({{"a", 2}, {"b", 3}});
  const std::vector<LegId> order = {"b", "a"};
  const auto b = a.permuted(order);
  const auto s = a + b;
  for (std::size_t k = 0; k < a.size(); ++k)
    EXPECT_DOUBLE_EQ(s[k], 2.0 * a[k]);
  EXPECT_NEAR(frobenius_norm(a - b), 0.0, 0.0);
}

TEST(Tensor, ContractPairMatchesLoops) {
  const auto a = random_tensor({{"i", 3}, {"k", 4}, {"m", 2}}, UniformDist{}, 1);
  const auto b = random_tensor({{"m", 2}, {"j", 5}, {"k", 4}}, UniformDist{}, 2);
  const auto c = contract_pair(a, b, {{"k", "k"}, {"m", "m"}});
  ASSERT_EQ(c.leg_ids(), (std::vector<LegId>{"i", "j"}));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t m = 0; m < 2; ++m)
          s += a[(i * 4 + k) * 2 + m] * b[(m * 5 + j) * 4 + k];
      EXPECT_NEAR(c[i * 5 + j], s, 1e-13);
    }
}

TEST(Tensor, MatricizeRoundTrip) {
  const auto t = random_tensor({{"a", 2}, {"b", 3}, {"c", 4}}, UniformDist{}, 3);
  const std::vector<LegId> rows = {"c", "a"}, cols = {"b"};
  const auto m = matricize(t, rows, cols);
  EXPECT_EQ(m.rows(), 8);
  EXPECT_EQ(m.cols(), 3);
  const auto back = dematricize(m);
  EXPECT_NEAR(frobenius_norm(back - t), 0.0, 0.0);
  const std::vector<LegId> bad = {"a"};
  EXPECT_THROW(matricize(t, bad, cols), PartitionError);
}

TEST(Tensor, SpectralNormMatchesSvd) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto t = random_tensor({{"r", 3 + s % 4}, {"c", 2 + s % 5}}, UniformDist{}, 100 + s);
    const std::vector<LegId> r = {"r"}, c = {"c"};
    const auto m = matricize(t, r, c);
    Eigen::MatrixXd dense = m.matrix;
    EXPECT_NEAR(spectral_norm(m), oracle::dense_spectral_norm(dense), 1e-8 * oracle::dense_spectral_norm(dense));
  }
}

TEST(Tensor, KronEntries) {
  const auto a = random_tensor({{"i", 2}, {"j", 3}}, UniformDist{}, 5);
  const auto b = random_tensor({{"k", 2}, {"l", 2}}, UniformDist{}, 6);
  const std::vector<LegId> ri = {"i"}, cj = {"j"}, rk = {"k"}, cl = {"l"};
  const auto k = kron(matricize(a, ri, cj), matricize(b, rk, cl));
  ASSERT_EQ(k.rows(), 4);
  ASSERT_EQ(k.cols(), 6);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j)
      for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q)
          EXPECT_DOUBLE_EQ(k.matrix(i * 2 + p, j * 2 + q), a[i * 3 + j] * b[p * 2 + q]);
}

TEST(Tensor, RandomTensorDeterministic) {
  const auto a = random_tensor({{"x", 5}}, UniformDist{0.0, 1.0}, 42);
  const auto b = random_tensor({{"x", 5}}, UniformDist{0.0, 1.0}, 42);
  const auto c = random_tensor({{"x", 5}}, UniformDist{0.0, 1.0}, 43);
  EXPECT_EQ(oracle::flat(a), oracle::flat(b));
  EXPECT_NE(oracle::flat(a), oracle::flat(c));
  for (double v : a.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Tensor, CenteredUniformVariance) {
  const auto t = random_tensor({{"x", 200000}}, CenteredUniformDist{0.5}, 9);
  double s = 0.0, s2 = 0.0;
  for (double v : t.data()) {
    s += v;
    s2 += v * v;
  }
  const double n = static_cast<double>(t.size());
  EXPECT_NEAR(s / n, 0.0, 5e-3);
  EXPECT_NEAR(s2 / n, 0.25, 5e-3);
}

TEST(Tensor, CheckedVolumeOverflow) {
  const std::vector<Leg> legs = {{"a", std::size_t{1} << 40}, {"b", std::size_t{1} << 40}};
  EXPECT_THROW(checked_volume(legs), Error);
}
