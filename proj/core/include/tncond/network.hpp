#pragma once

#include "tncond/tensor.hpp"

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace tncond {

using VertexId = std::string;
using EdgeId = std::string;
using VertexSet = std::set<VertexId>;

struct Endpoint {
  VertexId vertex;
  LegId leg;
};

struct Vertex {
  VertexId id;
  DenseTensor tensor;
};

/// Edge between two distinct vertices; its index is summed over.
struct ContractedEdge {
  EdgeId id;
  Endpoint a;
  Endpoint b;
};

/// Uncontracted leg (a self-loop in graph terms); becomes an output mode.
struct OpenLeg {
  EdgeId id;
  VertexId vertex;
  LegId leg;
};

/// Graph of vertex tensors. Several edges may join the same pair of
/// vertices; edges are identified by id only.
///
/// Flattening convention used everywhere downstream: a network's output
/// legs, environment rows, environment columns and every vec() are ordered
/// by ascending edge id.
class TensorNetwork {
public:
  TensorNetwork() = default;
  /// Throws NetworkInvalid unless every vertex leg is covered by exactly one
  /// edge or open leg, endpoint dims agree and ids are unique.
  TensorNetwork(std::vector<Vertex> vertices, std::vector<ContractedEdge> edges,
                std::vector<OpenLeg> open_legs);

  const std::vector<Vertex> &vertices() const noexcept { return vertices_; }
  const std::vector<ContractedEdge> &edges() const noexcept { return edges_; }
  const std::vector<OpenLeg> &open_legs() const noexcept { return open_; }
  std::size_t size() const noexcept { return vertices_.size(); }

  bool has_vertex(const VertexId &id) const noexcept;
  std::size_t vertex_index(const VertexId &id) const;
  const DenseTensor &tensor(const VertexId &id) const { return vertices_[vertex_index(id)].tensor; }
  std::vector<VertexId> vertex_ids() const;

  /// Copy with one vertex tensor replaced; the new tensor must carry the same
  /// legs (it is aligned by leg id).
  TensorNetwork with_tensor(const VertexId &id, DenseTensor tensor) const;

  /// Vertex tensor with every leg renamed to the id of the edge it sits on.
  DenseTensor edge_labeled(std::size_t vertex_index) const;
  /// Inverse of edge_labeled: renames edge ids back to the vertex's own leg
  /// names and restores its leg order.
  DenseTensor vertex_labeled(std::size_t vertex_index, const DenseTensor &edge_labeled) const;

  /// Output legs as (edge id, dim), ascending edge id.
  std::vector<Leg> sorted_open_legs() const;
  /// Open legs belonging to vertices in `vset`, ascending edge id.
  std::vector<Leg> sorted_open_legs(const VertexSet &vset) const;

private:
  std::vector<Vertex> vertices_;
  std::vector<ContractedEdge> edges_;
  std::vector<OpenLeg> open_;
};

struct ContractionOptions {
  std::size_t cap = kDefaultMaterializationCap;
  /// When set, vertices are folded in this order instead of greedily.
  std::optional<std::vector<VertexId>> order;
};

/// Full contraction. Output legs are the open legs in ascending edge-id
/// order. Throws TooLargeToMaterialize if any intermediate exceeds the cap.
DenseTensor contract_network(const TensorNetwork &tn, const ContractionOptions &opts = {});

/// Induced sub-network on `vset`; edges leaving `vset` become open legs that
/// keep their edge ids.
TensorNetwork sub_network(const TensorNetwork &tn, const VertexSet &vset);

/// Environment matrix M = N ⊗ I kept in factored form.
struct EnvironmentMatrix {
  /// Contracted complement; legs = row edges then column edges.
  DenseTensor environment;
  /// environment matricized: rows = complement open legs, columns = edges
  /// cut between the complement and the vertex set.
  Matricization n_block;
  /// Open legs of the vertex set itself (the identity factor).
  std::vector<Leg> identity_legs;

  std::size_t identity_dim() const;
  std::size_t rows() const { return static_cast<std::size_t>(n_block.rows()) * identity_dim(); }
  std::size_t cols() const { return static_cast<std::size_t>(n_block.cols()) * identity_dim(); }

  /// ‖N ⊗ I‖₂ = ‖N‖₂.
  double spectral_norm(const PowerIterationOptions &opts = {}) const;
  /// ‖N ⊗ I‖_F = ‖N‖_F · sqrt(dim I).
  double frobenius_norm() const;
  /// Dense N ⊗ I, subject to the cap.
  Matricization materialize(std::size_t cap = kDefaultMaterializationCap) const;

  /// M · x for x carrying legs {column edges ∪ identity legs} (edge ids, any
  /// order). Result legs: row edges then identity legs.
  DenseTensor apply(const DenseTensor &x) const;
  /// Mᵀ · y for y carrying legs {row edges ∪ identity legs}. Result legs:
  /// column edges then identity legs.
  DenseTensor apply_adjoint(const DenseTensor &y) const;

  std::vector<LegId> row_ids() const;
  std::vector<LegId> col_ids() const;
  std::vector<LegId> identity_ids() const;
};

EnvironmentMatrix environment_matrix(const TensorNetwork &tn, const VertexSet &vset,
                                     std::size_t cap = kDefaultMaterializationCap);

struct MatvecCheck {
  bool holds = false;
  double relative_deviation = 0.0;
  explicit operator bool() const noexcept { return holds; }
};

/// Checks vec(T) = M · vec(T_sub) with M = N ⊗ I materialized. vec(T) is
/// flattened as (complement open legs, vset open legs), vec(T_sub) as (cut
/// edges, vset open legs), each group in ascending edge id.
MatvecCheck verify_matvec_identity(const TensorNetwork &tn, const VertexSet &vset, double tol,
                                   std::size_t cap = kDefaultMaterializationCap);
/// Same check against a caller-supplied environment matrix.
MatvecCheck verify_matvec_identity(const TensorNetwork &tn, const VertexSet &vset,
                                   const EnvironmentMatrix &env, double tol,
                                   std::size_t cap = kDefaultMaterializationCap);

/// True iff the environment of `center` is an isometry: NᵀN = I entrywise
/// within `tol` (the identity factor never needs materializing).
bool is_canonical(const TensorNetwork &tn, const VertexId &center, double tol,
                  std::size_t cap = kDefaultMaterializationCap);

} // namespace tncond
