#include "tncond/tensor.hpp"

#include "tncond/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace tncond {

namespace {

std::vector<std::size_t> row_major_strides(const std::vector<std::size_t> &dims) {
  std::vector<std::size_t> strides(dims.size(), 1);
  for (std::size_t k = dims.size(); k-- > 1;)
    strides[k - 1] = strides[k] * dims[k];
  return strides;
}

// out[dst] = in[src] where the destination leg k is source leg perm[k].
std::vector<double> transpose_data(std::span<const double> in, const std::vector<std::size_t> &src_dims,
                                   const std::vector<std::size_t> &perm) {
  const std::size_t order = perm.size();
  std::vector<double> out(in.size());
  if (in.empty())
    return out;
  bool identity = true;
  for (std::size_t k = 0; k < order; ++k)
    identity = identity && perm[k] == k;
  if (identity) {
    std::copy(in.begin(), in.end(), out.begin());
    return out;
  }
  const auto src_strides = row_major_strides(src_dims);
  std::vector<std::size_t> dst_dims(order), step(order);
  for (std::size_t k = 0; k < order; ++k) {
    dst_dims[k] = src_dims[perm[k]];
    step[k] = src_strides[perm[k]];
  }
  std::vector<std::size_t> idx(order, 0);
  std::size_t src = 0;
  for (std::size_t dst = 0; dst < out.size(); ++dst) {
    out[dst] = in[src];
    for (std::size_t k = order; k-- > 0;) {
      if (++idx[k] < dst_dims[k]) {
        src += step[k];
        break;
      }
      src -= step[k] * (dst_dims[k] - 1);
      idx[k] = 0;
    }
  }
  return out;
}

std::string describe(std::span<const Leg> legs) {
  std::ostringstream os;
  os << '(';
  for (std::size_t k = 0; k < legs.size(); ++k)
    os << (k ? "," : "") << legs[k].id << ':' << legs[k].dim;
  os << ')';
  return os.str();
}

} // namespace

std::size_t checked_volume(std::span<const Leg> legs) {
  std::size_t v = 1;
  for (const auto &l : legs) {
    if (l.dim == 0)
      throw DimensionError("leg '" + l.id + "' has zero dimension");
    if (v > std::numeric_limits<std::size_t>::max() / l.dim)
      throw TooLargeToMaterialize("tensor volume overflows size_t");
    v *= l.dim;
  }
  return v;
}

DenseTensor::DenseTensor() : data_(1, 0.0) {}

DenseTensor::DenseTensor(std::vector<Leg> legs, std::vector<double> data)
    : legs_(std::move(legs)), data_(std::move(data)) {
  std::set<LegId> seen;
  for (const auto &l : legs_)
    if (!seen.insert(l.id).second)
      throw InvalidArgument("duplicate leg id '" + l.id + "'");
  const auto volume = checked_volume(legs_);
  if (volume != data_.size())
    throw DimensionError("data length " + std::to_string(data_.size()) + " does not match legs " +
                         describe(legs_));
}

DenseTensor DenseTensor::zeros(std::vector<Leg> legs) {
  const auto volume = checked_volume(legs);
  return DenseTensor(std::move(legs), std::vector<double>(volume, 0.0));
}

DenseTensor DenseTensor::scalar(double value) { return DenseTensor({}, {value}); }

std::vector<std::size_t> DenseTensor::dims() const {
  std::vector<std::size_t> d;
  d.reserve(legs_.size());
  for (const auto &l : legs_)
    d.push_back(l.dim);
  return d;
}

std::vector<LegId> DenseTensor::leg_ids() const {
  std::vector<LegId> ids;
  ids.reserve(legs_.size());
  for (const auto &l : legs_)
    ids.push_back(l.id);
  return ids;
}

bool DenseTensor::has_leg(const LegId &id) const noexcept {
  return std::any_of(legs_.begin(), legs_.end(), [&](const Leg &l) { return l.id == id; });
}

std::size_t DenseTensor::leg_index(const LegId &id) const {
  for (std::size_t k = 0; k < legs_.size(); ++k)
    if (legs_[k].id == id)
      return k;
  throw LegNotFound("leg '" + id + "' not in tensor " + describe(legs_));
}

double DenseTensor::at(std::span<const std::size_t> index) const {
  if (index.size() != legs_.size())
    throw DimensionError("index arity does not match tensor order");
  std::size_t flat = 0;
  for (std::size_t k = 0; k < legs_.size(); ++k) {
    if (index[k] >= legs_[k].dim)
      throw DimensionError("index out of range on leg '" + legs_[k].id + "'");
    flat = flat * legs_[k].dim + index[k];
  }
  return data_[flat];
}

DenseTensor DenseTensor::permuted(std::span<const LegId> order) const {
  if (order.size() != legs_.size())
    throw PartitionError("permutation must list every leg exactly once");
  std::vector<std::size_t> perm(order.size());
  std::vector<bool> used(order.size(), false);
  std::vector<Leg> legs(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    perm[k] = leg_index(order[k]);
    if (used[perm[k]])
      throw PartitionError("leg '" + order[k] + "' listed twice");
    used[perm[k]] = true;
    legs[k] = legs_[perm[k]];
  }
  return DenseTensor(std::move(legs), transpose_data(data_, dims(), perm));
}

DenseTensor DenseTensor::relabeled(const std::map<LegId, LegId> &renames) const {
  auto legs = legs_;
  for (auto &l : legs)
    if (auto it = renames.find(l.id); it != renames.end())
      l.id = it->second;
  return DenseTensor(std::move(legs), data_);
}

DenseTensor DenseTensor::with_leg_ids(const std::vector<LegId> &ids) const {
  if (ids.size() != legs_.size())
    throw InvalidArgument("with_leg_ids: arity mismatch");
  auto legs = legs_;
  for (std::size_t k = 0; k < legs.size(); ++k)
    legs[k].id = ids[k];
  return DenseTensor(std::move(legs), data_);
}

DenseTensor DenseTensor::reshaped(std::vector<Leg> legs) const {
  return DenseTensor(std::move(legs), data_);
}

const DenseTensor &DenseTensor::aligned(const DenseTensor &other, DenseTensor &scratch) const {
  if (other.legs_ == legs_)
    return other;
  if (other.order() != order())
    throw DimensionError("elementwise op on tensors " + describe(legs_) + " and " +
                         describe(other.legs_));
  scratch = other.permuted(leg_ids());
  if (scratch.legs_ != legs_)
    throw DimensionError("elementwise op on tensors " + describe(legs_) + " and " +
                         describe(other.legs_));
  return scratch;
}

DenseTensor &DenseTensor::operator+=(const DenseTensor &other) {
  DenseTensor scratch;
  const auto &b = aligned(other, scratch);
  for (std::size_t i = 0; i < data_.size(); ++i)
    data_[i] += b.data_[i];
  return *this;
}

DenseTensor &DenseTensor::operator-=(const DenseTensor &other) {
  DenseTensor scratch;
  const auto &b = aligned(other, scratch);
  for (std::size_t i = 0; i < data_.size(); ++i)
    data_[i] -= b.data_[i];
  return *this;
}

DenseTensor &DenseTensor::operator*=(double alpha) {
  for (auto &x : data_)
    x *= alpha;
  return *this;
}

DenseTensor contract_pair(const DenseTensor &a, const DenseTensor &b, const LegPairs &pairs) {
  std::vector<bool> a_paired(a.order(), false), b_paired(b.order(), false);
  std::vector<LegId> a_order, b_order;
  std::size_t shared = 1;
  for (const auto &[la, lb] : pairs) {
    const auto ia = a.leg_index(la);
    const auto ib = b.leg_index(lb);
    if (a_paired[ia] || b_paired[ib])
      throw InvalidArgument("leg paired twice in contraction");
    if (a.legs()[ia].dim != b.legs()[ib].dim)
      throw DimensionError("contracting '" + la + "' (dim " + std::to_string(a.legs()[ia].dim) +
                           ") with '" + lb + "' (dim " + std::to_string(b.legs()[ib].dim) + ")");
    a_paired[ia] = b_paired[ib] = true;
    shared *= a.legs()[ia].dim;
  }
  std::vector<Leg> out_legs;
  std::vector<LegId> a_free, b_free;
  std::size_t rows = 1, cols = 1;
  for (std::size_t k = 0; k < a.order(); ++k)
    if (!a_paired[k]) {
      a_free.push_back(a.legs()[k].id);
      out_legs.push_back(a.legs()[k]);
      rows *= a.legs()[k].dim;
    }
  for (std::size_t k = 0; k < b.order(); ++k)
    if (!b_paired[k]) {
      b_free.push_back(b.legs()[k].id);
      out_legs.push_back(b.legs()[k]);
      cols *= b.legs()[k].dim;
    }
  a_order = a_free;
  for (const auto &p : pairs) {
    a_order.push_back(p.first);
    b_order.push_back(p.second);
  }
  b_order.insert(b_order.end(), b_free.begin(), b_free.end());

  const auto ap = a.permuted(a_order);
  const auto bp = b.permuted(b_order);
  using MapC = Eigen::Map<const Matrix>;
  MapC am(ap.data().data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(shared));
  MapC bm(bp.data().data(), static_cast<Eigen::Index>(shared), static_cast<Eigen::Index>(cols));
  std::vector<double> out(rows * cols, 0.0);
  Eigen::Map<Matrix> om(out.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  if (shared > 0)
    om.noalias() = am * bm;
  return DenseTensor(std::move(out_legs), std::move(out));
}

Matricization matricize(const DenseTensor &t, std::span<const LegId> row_legs,
                        std::span<const LegId> col_legs) {
  std::set<LegId> listed;
  for (const auto &id : row_legs)
    if (!listed.insert(id).second)
      throw PartitionError("leg '" + id + "' listed twice");
  for (const auto &id : col_legs)
    if (!listed.insert(id).second)
      throw PartitionError("leg '" + id + "' listed twice");
  for (const auto &id : listed)
    if (!t.has_leg(id))
      throw PartitionError("leg '" + id + "' is not a leg of the tensor");
  if (listed.size() != t.order())
    throw PartitionError("row and column legs do not cover every tensor leg");

  std::vector<LegId> order(row_legs.begin(), row_legs.end());
  order.insert(order.end(), col_legs.begin(), col_legs.end());
  const auto p = t.permuted(order);
  Matricization m;
  std::size_t rows = 1, cols = 1;
  for (std::size_t k = 0; k < p.order(); ++k) {
    if (k < row_legs.size()) {
      m.row_legs.push_back(p.legs()[k]);
      rows *= p.legs()[k].dim;
    } else {
      m.col_legs.push_back(p.legs()[k]);
      cols *= p.legs()[k].dim;
    }
  }
  m.matrix = Eigen::Map<const Matrix>(p.data().data(), static_cast<Eigen::Index>(rows),
                                      static_cast<Eigen::Index>(cols));
  return m;
}

DenseTensor dematricize(const Matricization &m) {
  std::vector<Leg> legs = m.row_legs;
  legs.insert(legs.end(), m.col_legs.begin(), m.col_legs.end());
  std::vector<double> data(m.matrix.data(), m.matrix.data() + m.matrix.size());
  return DenseTensor(std::move(legs), std::move(data));
}

double frobenius_norm(const DenseTensor &t) {
  double s = 0.0;
  for (double x : t.data())
    s += x * x;
  return std::sqrt(s);
}

double frobenius_norm(const Matricization &m) { return m.matrix.norm(); }

namespace {

// Power iteration for the top eigenvalue of a PSD operator given by `apply`.
template <class Apply>
double power_iterate(Eigen::Index n, Apply &&apply, const PowerIterationOptions &opts) {
  if (n == 0)
    return 0.0;
  auto run = [&](Vector v, double &best) -> std::pair<bool, double> {
    v.normalize();
    double prev = -1.0;
    for (int it = 0; it < opts.max_iter; ++it) {
      Vector w = apply(v);
      const double lambda = v.dot(w);
      best = std::max(best, lambda);
      const double wn = w.norm();
      if (wn == 0.0)
        return {true, 0.0};
      if (prev >= 0.0 && std::abs(lambda - prev) <= opts.tol * std::abs(lambda))
        return {true, lambda};
      prev = lambda;
      v = w / wn;
    }
    return {false, best};
  };

  double best = 0.0;
  Vector start = Vector::Ones(n);
  Vector g0 = apply(start / std::sqrt(static_cast<double>(n)));
  Rng rng(opts.restart_seed);
  auto random_start = [&] {
    Vector r(n);
    for (Eigen::Index i = 0; i < n; ++i)
      r[i] = rng.uniform(-1.0, 1.0);
    return r;
  };

  std::pair<bool, double> result;
  if (g0.norm() == 0.0)
    result = run(random_start(), best); // start vector in the null space
  else
    result = run(start, best);
  if (!result.first)
    throw ConvergenceError("power iteration did not converge in " + std::to_string(opts.max_iter) +
                               " iterations",
                           best);

  // Guard against a start vector orthogonal to the top eigenspace: a short
  // seeded probe must not beat the converged value.
  if (n > 1 && result.second > 0.0) {
    Vector probe = random_start();
    probe.normalize();
    double q = 0.0;
    for (int k = 0; k < 8; ++k) {
      Vector w = apply(probe);
      q = probe.dot(w);
      const double wn = w.norm();
      if (wn == 0.0)
        break;
      probe = w / wn;
    }
    if (q > result.second * (1.0 + 1e3 * opts.tol)) {
      double best2 = 0.0;
      auto second = run(probe, best2);
      if (!second.first)
        throw ConvergenceError("power iteration restart did not converge", std::max(best, best2));
      return std::max(result.second, second.second);
    }
  }
  return result.second;
}

} // namespace

double top_eigenvalue_psd(const Eigen::Ref<const Matrix> &gram, const PowerIterationOptions &opts) {
  if (gram.rows() != gram.cols())
    throw DimensionError("Gram matrix must be square");
  return std::max(0.0, power_iterate(gram.rows(), [&](const Vector &v) -> Vector { return gram * v; },
                                     opts));
}

double spectral_norm(const Eigen::Ref<const Matrix> &m, const PowerIterationOptions &opts) {
  if (m.size() == 0)
    throw InvalidArgument("spectral_norm of an empty matrix");
  double lambda = 0.0;
  try {
    if (m.rows() < m.cols())
      lambda = power_iterate(m.rows(),
                             [&](const Vector &v) -> Vector { return m * (m.transpose() * v); }, opts);
    else
      lambda = power_iterate(m.cols(),
                             [&](const Vector &v) -> Vector { return m.transpose() * (m * v); }, opts);
  } catch (const ConvergenceError &e) {
    throw ConvergenceError(e.what(), std::sqrt(std::max(0.0, e.best_estimate())));
  }
  return std::sqrt(std::max(0.0, lambda));
}

double spectral_norm(const Matricization &m, const PowerIterationOptions &opts) {
  return spectral_norm(m.matrix, opts);
}

Matricization kron(const Matricization &a, const Matricization &b, std::size_t max_entries) {
  const auto rows = static_cast<std::size_t>(a.rows()) * static_cast<std::size_t>(b.rows());
  const auto cols = static_cast<std::size_t>(a.cols()) * static_cast<std::size_t>(b.cols());
  if (cols != 0 && rows > max_entries / cols)
    throw TooLargeToMaterialize("Kronecker product of " + std::to_string(rows) + "x" +
                                std::to_string(cols) + " exceeds the materialization cap");
  Matricization out;
  out.row_legs = a.row_legs;
  out.row_legs.insert(out.row_legs.end(), b.row_legs.begin(), b.row_legs.end());
  out.col_legs = a.col_legs;
  out.col_legs.insert(out.col_legs.end(), b.col_legs.begin(), b.col_legs.end());
  out.matrix.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.matrix.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a.matrix(i, j) * b.matrix;
  return out;
}

DenseTensor random_tensor(std::vector<Leg> legs, const Distribution &dist, std::uint64_t seed) {
  const auto volume = checked_volume(legs);
  double lo = 0.0, hi = 0.0;
  if (const auto *u = std::get_if<UniformDist>(&dist)) {
    if (!(u->hi >= u->lo))
      throw InvalidArgument("uniform distribution needs lo <= hi");
    lo = u->lo;
    hi = u->hi;
  } else {
    const auto &c = std::get<CenteredUniformDist>(dist);
    if (!(c.sigma >= 0.0))
      throw InvalidArgument("centered-uniform sigma must be nonnegative");
    hi = c.sigma * std::sqrt(3.0);
    lo = -hi;
  }
  Rng rng(seed);
  std::vector<double> data(volume);
  for (auto &x : data)
    x = rng.uniform(lo, hi);
  return DenseTensor(std::move(legs), std::move(data));
}

} // namespace tncond
