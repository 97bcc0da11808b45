#pragma once

#include "tncond/mps.hpp"

#include <cstdint>
#include <vector>

namespace tncond {

/// m × n grid of order-5 site tensors with legs ("u", "d", "l", "r", "p").
/// Boundary bonds are stored with dimension 1 and dropped on export.
///
/// Network export ids: vertices "t003_001" (row 3, column 1); horizontal
/// bonds "h{row}_{col}" to the right neighbour; vertical bonds
/// "v{row}_{col}" to the neighbour below; physical legs "p{col}_{row}", so
/// that the sorted output order is column-major.
class Peps {
public:
  Peps() = default;
  /// `sites` in row-major order. Throws ShapeError on any bond mismatch.
  Peps(std::size_t rows, std::size_t cols, std::vector<DenseTensor> sites);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  const DenseTensor &site(std::size_t i, std::size_t j) const { return sites_.at(i * cols_ + j); }
  const std::vector<DenseTensor> &sites() const noexcept { return sites_; }
  std::size_t dim(std::size_t i, std::size_t j, const LegId &leg) const { return site(i, j).dim(leg); }
  std::size_t max_bond() const;

  Peps with_site(std::size_t i, std::size_t j, DenseTensor t) const;

  TensorNetwork to_network() const;
  static VertexId vertex_id(std::size_t i, std::size_t j);
  static EdgeId phys_id(std::size_t i, std::size_t j);
  DenseTensor to_vertex_tensor(std::size_t i, std::size_t j, const DenseTensor &site_layout) const;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<DenseTensor> sites_;
};

Peps random_peps(std::size_t rows, std::size_t cols, std::size_t bond, std::size_t phys, std::uint64_t seed,
                 const Distribution &dist = UniformDist{-1.0, 1.0});

/// Column j contracted into one tensor: MPS site with fused left bonds,
/// fused physical legs (top to bottom) and fused right bonds.
DenseTensor fused_column(const Peps &p, std::size_t j, std::size_t cap = kDefaultMaterializationCap);
Mps columns_to_mps(const Peps &p, std::size_t cap = kDefaultMaterializationCap);

/// Column j read top to bottom as an MPS: bonds are the vertical bonds,
/// the physical leg fuses (l, r, p) of each site.
Mps column_as_vertical_mps(const Peps &p, std::size_t j);

/// ε₁ Σ_{i<n} (column terms)/‖T‖_F + E_col · ‖T^{(·,[1,n-1])}_→‖₂ ‖T^{(·,n)}‖_F / ‖T‖_F,
/// with E_col the general all-site bound of the last column at ε₂.
double peps_bound_general(const Peps &p, double eps1, double eps2,
                          std::size_t cap = kDefaultMaterializationCap);

struct PepsCanonicalBound {
  double exact_sum = 0.0;
  double simple = 0.0;
};

/// Requires the corner (last row, last column) environment to be an
/// isometry and the last column to be canonical towards its bottom site;
/// throws NotCanonical otherwise. D_ij is the right bond of site (i, j).
PepsCanonicalBound peps_bound_canonical(const Peps &p, double eps1, double eps2, double tol = 1e-8,
                                        std::size_t cap = kDefaultMaterializationCap);

/// (ε₁(1 + (n-1)D^{m/2}) + ε₂(1 + (m-1)√D)) / (ε₁(n-1) + ε₂m).
double comparison_factor_peps(std::size_t m, std::size_t n, double d, double eps1, double eps2);

/// Canonical PEPS centred at the corner, built from isometries flowing
/// left and up. Physical dims are raised where an isometry needs room.
Peps canonical_peps(std::size_t rows, std::size_t cols, std::size_t bond, std::size_t phys,
                    std::uint64_t seed);

/// Columnwise perturbations on columns 0..n-2 (fused column layout) and
/// sitewise perturbations on the last column (site layout, top to bottom).
struct MixedPerturbation {
  std::vector<DenseTensor> column_deltas;
  std::vector<DenseTensor> site_deltas;
};

/// Saturated: ‖Δ⁽ʲ⁾‖_F = ε₁‖T^{(·,j)}‖_F and ‖δ⁽ⁱ⁾‖_F = ε₂‖T^{(i,n)}‖_F.
MixedPerturbation sample_mixed_perturbation(const Peps &p, double eps1, double eps2, std::uint64_t seed,
                                            std::size_t cap = kDefaultMaterializationCap);

/// Exact ℰ_a, ℰ_r of the (Δ, δ)-perturbed PEPS.
MpsErrorMeasure mixed_error(const Peps &p, const MixedPerturbation &pert,
                            std::size_t cap = kDefaultMaterializationCap);

} // namespace tncond
