#pragma once

#include "tncond/network.hpp"
#include "tncond/perturb.hpp"

#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

namespace tncond {

struct ConditionNumbers {
  double kappa_abs = 0.0;
  double kappa_rel = 0.0;
  VertexId site_norm_argmax;
  /// ‖M_{T⁽ⁱ⁾}‖₂ in vertex order.
  std::vector<double> site_norms;
};

/// κ_a = maxᵢ ‖M_{T⁽ⁱ⁾}‖₂ and κ_r = (Σᵢ‖T⁽ⁱ⁾‖_F / ‖T‖_F) κ_a.
ConditionNumbers condition_numbers(const TensorNetwork &tn, std::size_t cap = kDefaultMaterializationCap,
                                   const PowerIterationOptions &power = {});

/// ‖M_{T⁽ⁱ⁾}‖₂ for every vertex, in vertex order.
std::vector<double> site_environment_norms(const TensorNetwork &tn,
                                           std::size_t cap = kDefaultMaterializationCap,
                                           const PowerIterationOptions &power = {});

/// Σᵢ εᵢ ‖M_{T⁽ⁱ⁾}‖₂ with absolute per-site radii εᵢ (vertex order).
double worst_case_bound(const TensorNetwork &tn, const std::vector<double> &eps,
                        std::size_t cap = kDefaultMaterializationCap);

struct WorstCaseOptions {
  double tol = 1e-12;
  int max_iter = 10000;
  int restarts = 5;
  std::uint64_t seed = 0;
  std::size_t cap = kDefaultMaterializationCap;
  /// Pairs of vertices whose perturbations are tied together. Not supported;
  /// a non-empty list is rejected.
  std::vector<std::pair<VertexId, VertexId>> dependent;
};

struct WorstCaseReport {
  double bound = 0.0;
  double solved_value = 0.0;
  std::vector<double> per_site_norms;
  std::vector<double> multipliers;
  PerturbationSet argmax_perturbation;
  /// ‖M_Tᵀ M_T a − diag(μ) a‖ / ‖M_Tᵀ M_T a‖ at the returned point.
  double kkt_residual = 0.0;
  /// Vertices whose gradient block vanished and were held at a random
  /// direction in the best run.
  std::vector<VertexId> frozen_blocks;
  int iterations = 0;
  int best_restart = 0;
};

/// Stationary point of max ‖M_T a‖₂ subject to ‖aᵢ‖ = εᵢ by alternating
/// block maximization with seeded restarts; the best run is returned.
WorstCaseReport worst_case_solve(const TensorNetwork &tn, const std::vector<double> &eps,
                                 const WorstCaseOptions &opts = {});

/// T̄⁽ʲ⁾ = √Nⱼ T⁽ʲ⁾ / ‖T⁽ʲ⁾‖_F. Throws DegenerateSite on a zero site.
TensorNetwork entrywise_normalize(const TensorNetwork &tn);

struct EpsRelativeMode {
  double eps = 0.0;
};
struct UniformVarianceMode {
  double sigma = 0.0;
};
using AverageCaseMode = std::variant<EpsRelativeMode, UniformVarianceMode>;

/// ‖M_T‖_F² = Σᵢ ‖M_{T⁽ⁱ⁾}‖_F².
double total_environment_frobenius_sq(const TensorNetwork &tn,
                                      std::size_t cap = kDefaultMaterializationCap);

/// Leading-order E ℰ_r²: σ²‖M_T‖_F²/‖T‖_F² or ε²‖M_T̄‖_F²/‖T̄‖_F².
double average_case_error(const TensorNetwork &tn, const AverageCaseMode &mode,
                          std::size_t cap = kDefaultMaterializationCap);

} // namespace tncond
