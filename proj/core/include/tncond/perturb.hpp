#pragma once

#include "tncond/network.hpp"

#include <cstdint>
#include <map>
#include <variant>

namespace tncond {

/// ‖δ⁽ⁱ⁾‖_F ≤ ε‖T⁽ⁱ⁾‖_F at every site.
struct EpsRelativeModel {
  double eps = 0.0;
};
/// Independent entries, mean 0, variance σ².
struct EntryVarianceModel {
  double sigma2 = 0.0;
};
struct ExplicitModel {};

using PerturbationModel = std::variant<ExplicitModel, EpsRelativeModel, EntryVarianceModel>;

/// One tensor per perturbed site (missing sites are unperturbed).
struct PerturbationSet {
  std::map<VertexId, DenseTensor> entries;
  PerturbationModel model = ExplicitModel{};

  PerturbationSet scaled(double t) const;
};

/// Per-site random direction (uniform entries, normalized). With `saturate`
/// every site gets norm exactly ε‖T⁽ⁱ⁾‖_F; otherwise the radius is drawn
/// uniformly from [0, ε‖T⁽ⁱ⁾‖_F].
PerturbationSet sample_eps_perturbation(const TensorNetwork &tn, double eps, std::uint64_t seed,
                                        bool saturate = true);

/// I.i.d. centered-uniform entries of standard deviation σ at every site.
PerturbationSet sample_variance_perturbation(const TensorNetwork &tn, double sigma, std::uint64_t seed);

/// Checks shapes against the network and the ε-relative invariant.
void validate_perturbation(const TensorNetwork &tn, const PerturbationSet &pset);

/// Network with T⁽ⁱ⁾ + δ⁽ⁱ⁾ at every perturbed site.
TensorNetwork apply_perturbation(const TensorNetwork &tn, const PerturbationSet &pset);

struct ErrorMeasure {
  double abs = 0.0;
  double rel = 0.0;
};

/// Exact ‖T̂ − T‖_F and ‖T̂ − T‖_F/‖T‖_F by full contraction.
ErrorMeasure measure_error(const TensorNetwork &tn, const PerturbationSet &pset,
                           std::size_t cap = kDefaultMaterializationCap);

} // namespace tncond
