#pragma once

#include "tncond/network.hpp"
#include "tncond/perturb.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace tncond {

/// Open chain of order-3 site tensors with legs ("l", "p", "r"). The outer
/// bonds of the first and last site are stored with dimension 1; they are
/// dropped when the chain is exported as a TensorNetwork.
///
/// Network export ids: vertices "s000", "s001", …; bonds "b000" (between
/// sites 0 and 1), …; physical legs "p000", ….
class Mps {
public:
  Mps() = default;
  /// Sites may carry legs l, p, r in any order. Throws ShapeError on a
  /// bond mismatch or non-unit outer bond.
  explicit Mps(std::vector<DenseTensor> sites, std::optional<std::size_t> center = std::nullopt);

  std::size_t size() const noexcept { return sites_.size(); }
  const DenseTensor &site(std::size_t j) const { return sites_.at(j); }
  const std::vector<DenseTensor> &sites() const noexcept { return sites_; }
  std::size_t left_dim(std::size_t j) const { return sites_.at(j).legs()[0].dim; }
  std::size_t phys_dim(std::size_t j) const { return sites_.at(j).legs()[1].dim; }
  std::size_t right_dim(std::size_t j) const { return sites_.at(j).legs()[2].dim; }
  /// D_1 … D_{n-1}.
  std::vector<std::size_t> bond_dims() const;
  std::vector<std::size_t> phys_dims() const;
  std::size_t max_bond() const;
  std::size_t state_size() const;

  /// Canonical centre, when the chain is known to be canonical.
  std::optional<std::size_t> center() const noexcept { return center_; }

  TensorNetwork to_network() const;
  static VertexId vertex_id(std::size_t j);
  static EdgeId bond_id(std::size_t j);
  static EdgeId phys_id(std::size_t j);
  /// Site-layout (l, p, r) tensor → the corresponding network vertex tensor.
  DenseTensor to_vertex_tensor(std::size_t j, const DenseTensor &site_layout) const;
  /// Inverse of to_vertex_tensor.
  DenseTensor from_vertex_tensor(std::size_t j, const DenseTensor &vertex_tensor) const;

  /// Dense state, physical legs in site order (site 0 slowest).
  Vector to_vector(std::size_t cap = kDefaultMaterializationCap) const;

  Mps with_site(std::size_t j, DenseTensor site) const;
  Mps scaled(double alpha) const;
  /// Same state on the mirrored chain (site j ↦ n-1-j, l ↔ r).
  Mps reversed() const;

private:
  std::vector<DenseTensor> sites_;
  std::optional<std::size_t> center_;
};

/// Bond j (between sites j and j+1) has dim min(p^{j+1}, p^{n-j-1}, D).
std::vector<std::size_t> envelope_bonds(std::size_t n, std::size_t max_bond, std::size_t phys);

Mps random_mps(std::size_t n, std::size_t max_bond, std::size_t phys, std::uint64_t seed,
               const Distribution &dist = UniformDist{-1.0, 1.0});
/// Random chain with the given bonds (n-1 entries) and physical dims (n entries).
Mps random_mps(const std::vector<std::size_t> &bonds, const std::vector<std::size_t> &phys,
               std::uint64_t seed, const Distribution &dist = UniformDist{-1.0, 1.0});

/// Product state from one vector per site.
Mps product_mps(const std::vector<Vector> &factors);

/// ⟨a, b⟩ by transfer contraction.
double inner_product(const Mps &a, const Mps &b);
double frobenius_norm(const Mps &m);
/// Scales every site equally so that ‖T‖_F = 1.
Mps normalized(const Mps &m);

/// QR sweeps: sites left of `c` left-orthogonal, right of `c`
/// right-orthogonal. The represented state is unchanged.
Mps canonicalize(const Mps &m, std::size_t c);

/// Sites 0..c-1 left-orthogonal and c+1..n-1 right-orthogonal within tol.
bool is_canonical(const Mps &m, std::size_t c, double tol = 1e-8);

struct BlockNorms {
  /// ‖T^{[0,j]}_→‖₂ for j = 0 … n-2.
  std::vector<double> right_going;
  /// ‖T^{[j,n-1]}_←‖₂ for j = 1 … n-1.
  std::vector<double> left_going;
  double frob = 0.0;

  /// ‖T^{[0,j-1]}_→‖₂, 1 for j = 0.
  double env_left(std::size_t j) const { return j == 0 ? 1.0 : right_going[j - 1]; }
  /// ‖T^{[j+1,n-1]}_←‖₂, 1 for the last site.
  double env_right(std::size_t j) const { return j >= left_going.size() ? 1.0 : left_going[j]; }
};

/// Block norms from Gram transfer contraction; nothing exponential is formed.
BlockNorms block_norms(const Mps &m, const PowerIterationOptions &power = {});

/// ε · ‖T^{[0,j-1]}_→‖₂ ‖T⁽ʲ⁾‖_F ‖T^{[j+1,n-1]}_←‖₂ / ‖T‖_F; exactly ε at a
/// canonical centre.
double single_site_bound(const Mps &m, std::size_t j, double eps);
double single_site_bound(const Mps &m, const BlockNorms &b, std::size_t j, double eps);

/// ε · Σⱼ ‖T^{[0,j-1]}_→‖₂ ‖T⁽ʲ⁾‖_F ‖T^{[j+1,n-1]}_←‖₂ / ‖T‖_F.
double all_site_bound_general(const Mps &m, double eps);
double all_site_bound_general(const Mps &m, const BlockNorms &b, double eps);

struct CanonicalBound {
  double exact_sum = 0.0;
  double simple = 0.0;
};

/// Requires the centre on the last site (or the first, handled by
/// mirroring). D_j is the right bond of site j, so ‖C⁽ʲ⁾‖_F = √D_j.
/// Throws NotCanonical for any other centre.
CanonicalBound all_site_bound_canonical(const Mps &m, double eps);

/// (1 + (n-1)√D) / n.
double comparison_factor_mps(std::size_t n, double d);

struct TruncationResult {
  Mps mps;
  double relative_error = 0.0;
  std::vector<std::size_t> bonds_after;
};

/// For each site in turn: move the centre there, then drop the smallest
/// singular values of its right bond (left bond on the last site) while
/// the discarded tail stays within εᵢ‖site‖_F.
TruncationResult truncate_all_with_canonicalization(const Mps &m, const std::vector<double> &eps,
                                                    std::size_t cap = kDefaultMaterializationCap);

struct WorstCaseInstance {
  /// Canonical, centred on the last site.
  Mps mps;
  /// Equality-achieving direction with ‖δ⁽ⁱ⁾‖_F = ‖C⁽ⁱ⁾‖_F (scale by ε).
  PerturbationSet direction;
  /// Same direction in site layout.
  std::vector<DenseTensor> site_direction;
};

/// Near-rank-one canonical chain with uniform bond D on which the
/// canonical all-site bound is attained to first order. Needs p ≥ D for
/// the first site; throws ShapeError otherwise.
WorstCaseInstance worst_case_construction(std::size_t n, std::size_t d, std::size_t p, double delta,
                                          std::uint64_t seed);

enum class ErrorMethod { Dense, InnerProduct };

struct MpsErrorMeasure {
  double abs = 0.0;
  double rel = 0.0;
  ErrorMethod method = ErrorMethod::Dense;
  /// Inner-product path at a relative error below 1e-6: digits lost to
  /// cancellation.
  bool cancellation_warning = false;
};

/// ‖b − a‖_F and ‖b − a‖_F/‖a‖_F. Dense when the state fits under `cap`,
/// otherwise ‖b‖² + ‖a‖² − 2⟨a,b⟩.
MpsErrorMeasure mps_error(const Mps &a, const Mps &b, std::size_t cap = kDefaultMaterializationCap);

/// Adds site-layout perturbations (empty tensors are skipped).
Mps perturbed(const Mps &m, const std::vector<DenseTensor> &deltas);

/// One uniform random direction per site, scaled to ε‖site‖_F.
std::vector<DenseTensor> sample_site_perturbation(const Mps &m, double eps, std::uint64_t seed);

} // namespace tncond
