#include "oracles.hpp"

#include "tncond/errors.hpp"
#include "tncond/peps.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace tncond;

TEST(Peps, BoundaryBondsValidated) {
  auto p = random_peps(2, 2, 2, 2, 1);
  auto sites = p.sites();
  sites[0] = DenseTensor::zeros({{"u", 2}, {"d", 2}, {"l", 1}, {"r", 2}, {"p", 2}});
  EXPECT_THROW(Peps(2, 2, sites), ShapeError);
}

TEST(Peps, ColumnsToMpsSameState) {
  const auto p = random_peps(2, 3, 2, 2, 3);
  const auto a = oracle::flat(contract_network(p.to_network()));
  const auto m = columns_to_mps(p);
  const auto b = oracle::mps_state(m);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k)
    EXPECT_NEAR(a[k], b[k], 1e-12);
  EXPECT_NEAR(oracle::norm2(a), oracle::norm2(oracle::brute_force_contract(p.to_network())), 1e-12);
}

TEST(Peps, SingleRowReducesToMps) {
  const auto p = random_peps(1, 4, 3, 2, 4);
  const auto m = columns_to_mps(p);
  EXPECT_NEAR(peps_bound_general(p, 1e-3, 1e-3), all_site_bound_general(m, 1e-3), 1e-12);
}

TEST(Peps, GeneralBoundDominatesSamples) {
  const auto p = random_peps(2, 3, 2, 2, 5);
  const double b = peps_bound_general(p, 1e-4, 2e-4);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto pert = sample_mixed_perturbation(p, 1e-4, 2e-4, s);
    EXPECT_LE(mixed_error(p, pert).rel, b * (1 + 1e-7));
  }
}

TEST(Peps, CanonicalConstruction) {
  const auto p = canonical_peps(2, 2, 2, 2, 6);
  EXPECT_TRUE(is_canonical(p.to_network(), Peps::vertex_id(1, 1), 1e-10));
  const auto b = peps_bound_canonical(p, 1e-4, 1e-4);
  EXPECT_LE(b.exact_sum, b.simple * (1 + 1e-12));
  EXPECT_NEAR(b.exact_sum, peps_bound_general(p, 1e-4, 1e-4), 1e-9 * b.exact_sum);
  for (std::uint64_t s = 0; s < 20; ++s)
    EXPECT_LE(mixed_error(p, sample_mixed_perturbation(p, 1e-4, 1e-4, s)).rel, b.exact_sum * (1 + 1e-7));
}

TEST(Peps, CanonicalRejectsRandom) {
  EXPECT_THROW(peps_bound_canonical(random_peps(2, 2, 2, 2, 7), 1e-4, 1e-4), NotCanonical);
}

TEST(Peps, ComparisonFactor) {
  EXPECT_DOUBLE_EQ(comparison_factor_peps(2, 3, 4.0, 1.0, 1.0), 3.0);
  EXPECT_THROW(comparison_factor_peps(1, 1, 4.0, 1.0, 0.0), InvalidPerturbationBudget);
}

TEST(Peps, VerticalColumnView) {
  const auto p = random_peps(3, 2, 2, 2, 8);
  const auto col = column_as_vertical_mps(p, 1);
  EXPECT_EQ(col.size(), 3u);
  EXPECT_EQ(col.phys_dim(0), p.dim(0, 1, "l") * p.dim(0, 1, "r") * p.dim(0, 1, "p"));
}
