#pragma once

#include "tncond/errors.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace tncond {

using LegId = std::string;

struct Leg {
  LegId id;
  std::size_t dim = 1;

  friend bool operator==(const Leg &, const Leg &) = default;
};

/// Row-major dense matrix. Matricizations use the same flattening rule as
/// DenseTensor, so a tensor's data buffer is directly a matrix buffer.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Default cap on the number of entries any operation will materialize.
inline constexpr std::size_t kDefaultMaterializationCap = std::size_t{1} << 26;

/// Real multiway array with named legs, stored row-major over the leg list
/// (the last leg varies fastest).
class DenseTensor {
public:
  /// Order-0 tensor holding 0.
  DenseTensor();
  DenseTensor(std::vector<Leg> legs, std::vector<double> data);

  static DenseTensor zeros(std::vector<Leg> legs);
  static DenseTensor scalar(double value);

  const std::vector<Leg> &legs() const noexcept { return legs_; }
  std::size_t order() const noexcept { return legs_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::vector<std::size_t> dims() const;
  std::vector<LegId> leg_ids() const;

  bool has_leg(const LegId &id) const noexcept;
  /// Position of `id` in the leg list; throws LegNotFound.
  std::size_t leg_index(const LegId &id) const;
  std::size_t dim(const LegId &id) const { return legs_[leg_index(id)].dim; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  double operator[](std::size_t flat) const { return data_[flat]; }
  double &operator[](std::size_t flat) { return data_[flat]; }
  /// Entry at a full multi-index given in leg order.
  double at(std::span<const std::size_t> index) const;

  /// Same values with the legs reordered to `order` (a permutation of the
  /// current leg ids).
  DenseTensor permuted(std::span<const LegId> order) const;
  /// Renames legs; ids absent from `renames` are kept.
  DenseTensor relabeled(const std::map<LegId, LegId> &renames) const;
  /// Replaces all leg ids positionally.
  DenseTensor with_leg_ids(const std::vector<LegId> &ids) const;
  /// Same data, new leg structure with identical total size.
  DenseTensor reshaped(std::vector<Leg> legs) const;

  /// Elementwise ops require the same leg set; `other` is aligned by leg id.
  DenseTensor &operator+=(const DenseTensor &other);
  DenseTensor &operator-=(const DenseTensor &other);
  DenseTensor &operator*=(double alpha);

  friend DenseTensor operator+(DenseTensor a, const DenseTensor &b) { return a += b; }
  friend DenseTensor operator-(DenseTensor a, const DenseTensor &b) { return a -= b; }
  friend DenseTensor operator*(double alpha, DenseTensor a) { return a *= alpha; }

  bool same_shape(const DenseTensor &other) const noexcept { return legs_ == other.legs_; }

private:
  const DenseTensor &aligned(const DenseTensor &other, DenseTensor &scratch) const;

  std::vector<Leg> legs_;
  std::vector<double> data_;
};

/// A tensor viewed as a matrix: rows flatten `row_legs`, columns flatten
/// `col_legs`, both row-major in the given leg order.
struct Matricization {
  std::vector<Leg> row_legs;
  std::vector<Leg> col_legs;
  Matrix matrix;

  Eigen::Index rows() const noexcept { return matrix.rows(); }
  Eigen::Index cols() const noexcept { return matrix.cols(); }
};

using LegPairs = std::vector<std::pair<LegId, LegId>>;

/// Sums over each (leg of a, leg of b) pair. Output legs: unpaired legs of
/// `a` in order, then unpaired legs of `b`.
DenseTensor contract_pair(const DenseTensor &a, const DenseTensor &b, const LegPairs &pairs);

/// Throws PartitionError unless rows ∪ cols is exactly the leg set.
Matricization matricize(const DenseTensor &t, std::span<const LegId> row_legs,
                        std::span<const LegId> col_legs);
/// Inverse of matricize: legs are row_legs followed by col_legs.
DenseTensor dematricize(const Matricization &m);

double frobenius_norm(const DenseTensor &t);
double frobenius_norm(const Matricization &m);

struct PowerIterationOptions {
  double tol = 1e-10;
  int max_iter = 10000;
  std::uint64_t restart_seed = 0x7e57ab1e5eedULL;
};

/// Largest singular value by power iteration on the smaller Gram operator.
/// Throws ConvergenceError (with the best estimate) after max_iter.
double spectral_norm(const Eigen::Ref<const Matrix> &m, const PowerIterationOptions &opts = {});
double spectral_norm(const Matricization &m, const PowerIterationOptions &opts = {});

/// Largest eigenvalue of a symmetric positive semidefinite matrix, same
/// iteration and stopping rule as spectral_norm.
double top_eigenvalue_psd(const Eigen::Ref<const Matrix> &gram,
                          const PowerIterationOptions &opts = {});

/// Kronecker product a ⊗ b. Leg lists are concatenated (a first).
Matricization kron(const Matricization &a, const Matricization &b,
                   std::size_t max_entries = kDefaultMaterializationCap);

struct UniformDist {
  double lo = -1.0;
  double hi = 1.0;
};
/// Uniform on [-σ√3, σ√3]: mean 0, variance σ².
struct CenteredUniformDist {
  double sigma = 1.0;
};
using Distribution = std::variant<UniformDist, CenteredUniformDist>;

DenseTensor random_tensor(std::vector<Leg> legs, const Distribution &dist, std::uint64_t seed);

/// Product of leg dims, guarding against overflow.
std::size_t checked_volume(std::span<const Leg> legs);

} // namespace tncond
