#include "oracles.hpp"

#include "tncond/conditioning.hpp"
#include "tncond/errors.hpp"
#include "tncond/mps.hpp"
#include "tncond/perturb.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace tncond;

namespace {

double dist(const std::vector<double> &a, const std::vector<double> &b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

std::vector<double> vec(const Vector &v) { return {v.data(), v.data() + v.size()}; }

} // namespace

TEST(Mps, EnvelopeBonds) {
  EXPECT_EQ(envelope_bonds(6, 100, 2), (std::vector<std::size_t>{2, 4, 8, 4, 2}));
  EXPECT_EQ(envelope_bonds(6, 3, 2), (std::vector<std::size_t>{2, 3, 3, 3, 2}));
}

TEST(Mps, ToVectorMatchesOracle) {
  const Mps m = random_mps(5, 3, 2, 1);
  EXPECT_LT(dist(vec(m.to_vector()), oracle::mps_state(m)), 1e-13);
  const auto net = oracle::flat(contract_network(m.to_network()));
  EXPECT_LT(dist(net, oracle::mps_state(m)), 1e-13);
}

TEST(Mps, NormalizedHasUnitNorm) {
  const Mps m = normalized(random_mps(6, 4, 2, 2));
  EXPECT_NEAR(frobenius_norm(m), 1.0, 1e-12);
  EXPECT_NEAR(oracle::norm2(oracle::mps_state(m)), 1.0, 1e-12);
}

TEST(Mps, InnerProductMatchesDense) {
  const Mps a = random_mps(5, 4, 2, 3), b = random_mps(5, 4, 2, 4);
  const auto va = oracle::mps_state(a), vb = oracle::mps_state(b);
  double d = 0.0;
  for (std::size_t k = 0; k < va.size(); ++k)
    d += va[k] * vb[k];
  EXPECT_NEAR(inner_product(a, b), d, 1e-12 * std::abs(d) + 1e-14);
}

TEST(Mps, CanonicalizePreservesStateAndIsCanonical) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const std::size_t n = 3 + s % 5;
    const Mps m = random_mps(n, 2 + s % 4, 2, 100 + s);
    for (std::size_t c = 0; c < n; ++c) {
      const Mps cm = canonicalize(m, c);
      EXPECT_LT(dist(oracle::mps_state(cm), oracle::mps_state(m)), 1e-12 * oracle::norm2(oracle::mps_state(m)));
      EXPECT_TRUE(is_canonical(cm, c, 1e-10));
      EXPECT_TRUE(is_canonical(cm.to_network(), Mps::vertex_id(c), 1e-10));
      EXPECT_EQ(cm.center(), c);
    }
    EXPECT_FALSE(is_canonical(m, 0, 1e-10));
  }
}

TEST(Mps, BlockNormsMatchNetworkEnvironments) {
  const Mps m = random_mps(6, 3, 2, 7);
  const auto b = block_norms(m);
  const auto norms = site_environment_norms(m.to_network());
  EXPECT_NEAR(b.frob, frobenius_norm(contract_network(m.to_network())), 1e-12 * b.frob);
  for (std::size_t j = 0; j < m.size(); ++j) {
    const double site = b.env_left(j) * b.env_right(j);
    EXPECT_NEAR(site, norms[j], 1e-8 * norms[j]) << "site " << j;
  }
}

TEST(Mps, SingleSiteBoundIsEpsAtCenter) {
  const Mps c = canonicalize(random_mps(6, 4, 2, 8), 2);
  EXPECT_EQ(single_site_bound(c, 2, 1e-3), 1e-3);
  // Without the metadata the computed value still collapses to ε.
  EXPECT_NEAR(single_site_bound(Mps(c.sites()), 2, 1e-3), 1e-3, 1e-14);
}

TEST(Mps, SingleSiteBoundDominatesSamples) {
  const Mps m = normalized(random_mps(6, 4, 2, 9));
  for (std::size_t j = 0; j < m.size(); ++j) {
    const double bound = single_site_bound(m, j, 1e-4);
    for (std::uint64_t s = 0; s < 10; ++s) {
      auto d = sample_site_perturbation(m, 1e-4, s);
      for (std::size_t k = 0; k < d.size(); ++k)
        if (k != j)
          d[k] = DenseTensor();
      EXPECT_LE(mps_error(m, perturbed(m, d)).rel, bound * (1 + 1e-9));
    }
  }
}

TEST(Mps, AllSiteBoundBondOneIsN) {
  std::vector<Vector> f;
  for (int k = 0; k < 5; ++k)
    f.push_back(Vector::Random(3));
  const Mps m = product_mps(f);
  EXPECT_NEAR(all_site_bound_general(m, 1e-3), 5e-3, 1e-15);
  const auto cb = all_site_bound_canonical(canonicalize(m, 4), 1e-3);
  EXPECT_NEAR(cb.simple, 5e-3, 1e-15);
  EXPECT_NEAR(cb.exact_sum, 5e-3, 1e-15);
}

TEST(Mps, CanonicalBoundOrdering) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Mps m = normalized(random_mps(6, 4, 2, 200 + s));
    for (std::size_t c : {std::size_t{0}, std::size_t{5}}) {
      const Mps cm = canonicalize(m, c);
      const auto b = all_site_bound_canonical(cm, 1e-4);
      EXPECT_LE(b.exact_sum, b.simple * (1 + 1e-12));
      EXPECT_NEAR(b.exact_sum, all_site_bound_general(Mps(cm.sites()), 1e-4), 1e-9 * b.exact_sum);
      for (std::uint64_t k = 0; k < 10; ++k) {
        const auto d = sample_site_perturbation(cm, 1e-4, k);
        EXPECT_LE(mps_error(cm, perturbed(cm, d)).rel, b.exact_sum * (1 + 1e-7));
      }
    }
    EXPECT_THROW(all_site_bound_canonical(canonicalize(m, 2), 1e-4), NotCanonical);
    EXPECT_THROW(all_site_bound_canonical(m, 1e-4), NotCanonical);
  }
}

TEST(Mps, ComparisonFactor) {
  EXPECT_DOUBLE_EQ(comparison_factor_mps(1, 9.0), 1.0);
  EXPECT_DOUBLE_EQ(comparison_factor_mps(4, 4.0), 7.0 / 4.0);
}

TEST(Mps, TruncationWithinBudget) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Mps m = normalized(random_mps(8, 16, 2, 300 + s));
    const auto r = truncate_all_with_canonicalization(m, std::vector<double>(8, 1e-3));
    EXPECT_LE(r.relative_error, 8e-3);
    EXPECT_NEAR(r.relative_error, mps_error(m, r.mps).rel, 1e-12);
    for (std::size_t j = 0; j + 1 < m.size(); ++j)
      EXPECT_LE(r.bonds_after[j], m.bond_dims()[j]);
  }
}

TEST(Mps, TruncationTrivialCases) {
  const Mps m = random_mps(6, 4, 2, 5);
  const auto zero = truncate_all_with_canonicalization(m, std::vector<double>(6, 0.0));
  EXPECT_EQ(zero.relative_error, 0.0);
  std::vector<Vector> f(5, Vector::Constant(2, 0.5));
  const auto prod = truncate_all_with_canonicalization(product_mps(f), std::vector<double>(5, 1e-3));
  EXPECT_NEAR(prod.relative_error, 0.0, 1e-14);
}

TEST(Mps, WorstCaseConstructionAttainsBound) {
  const auto inst = worst_case_construction(3, 2, 2, 1e-6, 1);
  EXPECT_TRUE(is_canonical(inst.mps, 2, 1e-10));
  const double eps = 1e-5;
  const auto e = measure_error(inst.mps.to_network(), inst.direction.scaled(eps));
  EXPECT_NEAR(e.rel / eps, 1.0 + 2.0 * std::sqrt(2.0), 1e-3);
  const auto b = all_site_bound_canonical(inst.mps, eps);
  EXPECT_NEAR(b.simple / eps, 1.0 + 2.0 * std::sqrt(2.0), 1e-9);
  EXPECT_THROW(worst_case_construction(3, 4, 2, 1e-6, 1), ShapeError);
}

TEST(Mps, ErrorMethodsAgree) {
  const Mps a = normalized(random_mps(6, 4, 2, 10));
  const Mps b = perturbed(a, sample_site_perturbation(a, 1e-2, 3));
  const auto dense = mps_error(a, b);
  const auto ip = mps_error(a, b, 8);
  EXPECT_EQ(dense.method, ErrorMethod::Dense);
  EXPECT_EQ(ip.method, ErrorMethod::InnerProduct);
  EXPECT_NEAR(dense.rel, ip.rel, 1e-6 * dense.rel);
}

TEST(Mps, ReversedKeepsState) {
  const Mps m = random_mps(4, 3, 2, 12);
  const auto a = oracle::mps_state(m), b = oracle::mps_state(m.reversed());
  // Site order flips, so entry (i0 i1 i2 i3) maps to (i3 i2 i1 i0).
  for (std::size_t f = 0; f < 16; ++f) {
    const std::size_t g = ((f & 1) << 3) | ((f & 2) << 1) | ((f & 4) >> 1) | ((f & 8) >> 3);
    EXPECT_NEAR(a[f], b[g], 1e-14);
  }
}

TEST(Mps, SitePerturbationMatchesNetworkSampler) {
  const Mps m = random_mps(5, 3, 2, 13);
  const auto sites = sample_site_perturbation(m, 1e-3, 21);
  const auto net = sample_eps_perturbation(m.to_network(), 1e-3, 21);
  for (std::size_t j = 0; j < m.size(); ++j) {
    const auto &v = net.entries.at(Mps::vertex_id(j));
    EXPECT_EQ(oracle::flat(m.to_vertex_tensor(j, sites[j])), oracle::flat(v));
  }
}
