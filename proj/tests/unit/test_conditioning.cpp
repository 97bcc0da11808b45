#include "oracles.hpp"

#include "tncond/conditioning.hpp"
#include "tncond/errors.hpp"
#include "tncond/perturb.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace tncond;

TEST(Perturb, SaturatedRatiosEqualEps) {
  const auto tn = oracle::random_network(11);
  const auto p = sample_eps_perturbation(tn, 1e-3, 5);
  for (const auto &v : tn.vertices())
    EXPECT_NEAR(frobenius_norm(p.entries.at(v.id)) / frobenius_norm(v.tensor), 1e-3, 1e-12);
  EXPECT_NO_THROW(validate_perturbation(tn, p));
}

TEST(Perturb, UnsaturatedStaysInside) {
  const auto tn = oracle::random_network(12);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto p = sample_eps_perturbation(tn, 1e-2, s, false);
    for (const auto &v : tn.vertices())
      EXPECT_LE(frobenius_norm(p.entries.at(v.id)), 1e-2 * frobenius_norm(v.tensor) * (1 + 1e-12));
  }
}

TEST(Perturb, ZeroEpsGivesZeroSet) {
  const auto tn = oracle::random_network(13);
  const auto p = sample_eps_perturbation(tn, 0.0, 1);
  for (const auto &[id, t] : p.entries)
    EXPECT_EQ(frobenius_norm(t), 0.0);
  EXPECT_EQ(measure_error(tn, p).abs, 0.0);
}

TEST(Perturb, SameSeedSameSet) {
  const auto tn = oracle::random_network(14);
  const auto a = sample_eps_perturbation(tn, 1e-3, 99);
  const auto b = sample_eps_perturbation(tn, 1e-3, 99);
  for (const auto &[id, t] : a.entries)
    EXPECT_EQ(oracle::flat(t), oracle::flat(b.entries.at(id)));
}

TEST(Perturb, ValidationErrors) {
  const auto tn = oracle::random_network(15);
  auto p = sample_eps_perturbation(tn, 1e-3, 1);
  auto over = p;
  over.model = EpsRelativeModel{1e-4};
  EXPECT_THROW(validate_perturbation(tn, over), InvalidPerturbationBudget);
  auto wrong = p;
  wrong.entries.begin()->second = DenseTensor::zeros({{"zz", 1}});
  EXPECT_THROW(validate_perturbation(tn, wrong), DimensionError);
}

TEST(Perturb, MeasureErrorMatchesBruteForce) {
  const auto tn = oracle::random_network(16, {3, 3, 1, false});
  const auto p = sample_eps_perturbation(tn, 1e-2, 3);
  const auto a = oracle::brute_force_contract(tn);
  const auto b = oracle::brute_force_contract(apply_perturbation(tn, p));
  std::vector<double> d(a.size());
  for (std::size_t k = 0; k < a.size(); ++k)
    d[k] = b[k] - a[k];
  const auto e = measure_error(tn, p);
  EXPECT_NEAR(e.abs, oracle::norm2(d), 1e-12);
  EXPECT_NEAR(e.rel, oracle::norm2(d) / oracle::norm2(a), 1e-12);
}

TEST(Conditioning, KappaMatchesJacobianOracle) {
  for (std::uint64_t s = 0; s < 15; ++s) {
    const auto tn = oracle::random_network(5000 + s);
    const auto c = condition_numbers(tn);
    double want = 0.0, frob_sum = 0.0;
    for (std::size_t v = 0; v < tn.size(); ++v) {
      want = std::max(want, oracle::site_kappa(tn, v));
      frob_sum += frobenius_norm(tn.vertices()[v].tensor);
    }
    EXPECT_NEAR(c.kappa_abs, want, 1e-8 * want);
    const double tnorm = oracle::norm2(oracle::brute_force_contract(tn));
    EXPECT_NEAR(c.kappa_rel, frob_sum / tnorm * want, 1e-8 * c.kappa_rel);
  }
}

TEST(Conditioning, FirstOrderErrorBelowBound) {
  for (std::uint64_t s = 0; s < 15; ++s) {
    const auto tn = oracle::random_network(6000 + s);
    const double eps = 1e-6;
    std::vector<double> radii;
    for (const auto &v : tn.vertices())
      radii.push_back(eps * frobenius_norm(v.tensor));
    const double bound = worst_case_bound(tn, radii);
    // Terms of order ≥ 2 are bounded by Π‖T⁽ⁱ⁾‖_F ((1+ε)ⁿ − 1 − nε), since the
    // Frobenius norm of a contraction is at most the product of site norms.
    double prod = 1.0;
    for (const auto &v : tn.vertices())
      prod *= frobenius_norm(v.tensor);
    const double n = static_cast<double>(tn.size());
    const double higher = prod * (std::pow(1 + eps, n) - 1 - n * eps);
    for (std::uint64_t k = 0; k < 20; ++k) {
      const auto p = sample_eps_perturbation(tn, eps, k);
      EXPECT_LE(measure_error(tn, p).abs, bound + higher * 1.01);
    }
  }
}

TEST(Conditioning, WorstCaseBoundArgumentChecks) {
  const auto tn = oracle::random_network(17);
  EXPECT_THROW(worst_case_bound(tn, {1.0}), InvalidArgument);
  std::vector<double> neg(tn.size(), 1.0);
  neg[0] = -1.0;
  EXPECT_THROW(worst_case_bound(tn, neg), Error);
}

TEST(Conditioning, SolverBelowBoundAndStationary) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto tn = oracle::random_network(7000 + s);
    std::vector<double> radii;
    for (const auto &v : tn.vertices())
      radii.push_back(1e-3 * frobenius_norm(v.tensor));
    WorstCaseOptions o;
    o.seed = s;
    const auto rep = worst_case_solve(tn, radii, o);
    EXPECT_LE(rep.solved_value, rep.bound * (1 + 1e-12));
    // Σ μᵢ εᵢ² equals the squared objective at a stationary point.
    double lhs = 0.0;
    for (std::size_t i = 0; i < radii.size(); ++i)
      lhs += rep.multipliers[i] * radii[i] * radii[i];
    EXPECT_NEAR(lhs, rep.solved_value * rep.solved_value, 1e-6 * rep.solved_value * rep.solved_value);
    EXPECT_LT(rep.kkt_residual, 1e-4);
    for (std::size_t i = 0; i < radii.size(); ++i)
      EXPECT_NEAR(frobenius_norm(rep.argmax_perturbation.entries.at(tn.vertices()[i].id)), radii[i],
                  1e-10 * radii[i]);
    // The reported value is the linearized error of the argmax.
    const auto small = rep.argmax_perturbation.scaled(1e-4);
    EXPECT_NEAR(measure_error(tn, small).abs / 1e-4, rep.solved_value, 1e-3 * rep.solved_value);
  }
}

TEST(Conditioning, SolverTightForScalarOutput) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto tn = oracle::random_network(8000 + s, {4, 4, 0, true});
    std::vector<double> radii;
    for (const auto &v : tn.vertices())
      radii.push_back(1e-3 * frobenius_norm(v.tensor));
    const auto rep = worst_case_solve(tn, radii);
    EXPECT_NEAR(rep.solved_value, rep.bound, 1e-6 * rep.bound);
  }
}

TEST(Conditioning, DependentPairsRejected) {
  const auto tn = oracle::random_network(18);
  WorstCaseOptions o;
  o.dependent = {{"A", "B"}};
  EXPECT_THROW(worst_case_solve(tn, std::vector<double>(tn.size(), 1.0), o), InvalidArgument);
}

TEST(Conditioning, AverageCaseZeroSigma) {
  const auto tn = oracle::random_network(19);
  EXPECT_EQ(average_case_error(tn, UniformVarianceMode{0.0}), 0.0);
  EXPECT_EQ(average_case_error(tn, EpsRelativeMode{0.0}), 0.0);
}

TEST(Conditioning, TotalEnvironmentFrobeniusMatchesJacobians) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto tn = oracle::random_network(9000 + s);
    double want = 0.0;
    for (std::size_t v = 0; v < tn.size(); ++v)
      want += oracle::site_jacobian(tn, v).squaredNorm();
    EXPECT_NEAR(total_environment_frobenius_sq(tn), want, 1e-10 * want);
  }
}

TEST(Conditioning, EpsModeUsesNormalizedSites) {
  const auto tn = oracle::random_network(20);
  const auto nt = entrywise_normalize(tn);
  for (const auto &v : nt.vertices())
    EXPECT_NEAR(frobenius_norm(v.tensor), std::sqrt(static_cast<double>(v.tensor.size())), 1e-12);
  const double t2 = std::pow(frobenius_norm(contract_network(nt)), 2);
  EXPECT_NEAR(average_case_error(tn, EpsRelativeMode{1e-3}), 1e-6 * total_environment_frobenius_sq(nt) / t2,
              1e-12);
}

TEST(Conditioning, DegenerateSiteRejected) {
  auto tn = oracle::random_network(21);
  const auto id = tn.vertices()[0].id;
  tn = tn.with_tensor(id, DenseTensor::zeros(tn.tensor(id).legs()));
  EXPECT_THROW(entrywise_normalize(tn), DegenerateSite);
}
