#include "tncond/mps.hpp"

#include "tncond/rng.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace tncond {

namespace {

using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;

const std::vector<LegId> kSiteLegs{"l", "p", "r"};

DenseTensor site_tensor(std::size_t dl, std::size_t p, std::size_t dr, std::vector<double> data) {
  return DenseTensor({{"l", dl}, {"p", p}, {"r", dr}}, std::move(data));
}

DenseTensor site_from_matrix(const Matrix &m, std::size_t dl, std::size_t p, std::size_t dr) {
  std::vector<double> data(m.data(), m.data() + m.size());
  return site_tensor(dl, p, dr, std::move(data));
}

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

/// (Dl·p × Dr) view.
ConstMap left_mat(const DenseTensor &s) {
  const auto &l = s.legs();
  return ConstMap(s.data().data(), idx(l[0].dim * l[1].dim), idx(l[2].dim));
}
/// (Dl × p·Dr) view.
ConstMap right_mat(const DenseTensor &s) {
  const auto &l = s.legs();
  return ConstMap(s.data().data(), idx(l[0].dim), idx(l[1].dim * l[2].dim));
}

/// Thin QR: a = q·r with q having min(rows, cols) orthonormal columns and diag(r) ≥ 0.
void thin_qr(const Matrix &a, Matrix &q, Matrix &r) {
  const Eigen::Index k = std::min(a.rows(), a.cols());
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd qfull = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), k);
  q = qfull;
  r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < k; ++j)
    if (r(j, j) < 0) {
      q.col(j) *= -1;
      r.row(j) *= -1;
    }
}

/// Left Gram step: Σ_s A_sᵀ L A_s.
Matrix left_gram_step(const Matrix &lg, const DenseTensor &s) {
  const auto &l = s.legs();
  Matrix y = lg * right_mat(s);
  ConstMap yl(y.data(), idx(l[0].dim * l[1].dim), idx(l[2].dim));
  return left_mat(s).transpose() * yl;
}

/// Right Gram step: Σ_s A_s R A_sᵀ.
Matrix right_gram_step(const Matrix &rg, const DenseTensor &s) {
  const auto &l = s.legs();
  Matrix z = left_mat(s) * rg;
  ConstMap zr(z.data(), idx(l[0].dim), idx(l[1].dim * l[2].dim));
  return right_mat(s) * zr.transpose();
}

/// Gram normalized by its trace, with the log of the dropped scale.
struct ScaledGram {
  Matrix g;
  double log_scale = 0.0;

  void renormalize() {
    const double t = g.trace();
    if (t > 0.0 && std::isfinite(t)) {
      g /= t;
      log_scale += std::log(t);
    }
  }
};

double gram_norm(const ScaledGram &s, const PowerIterationOptions &power) {
  const double lam = s.g.size() == 1 ? s.g(0, 0) : top_eigenvalue_psd(s.g, power);
  return std::sqrt(std::max(lam, 0.0)) * std::exp(0.5 * s.log_scale);
}

std::string padded(char prefix, std::size_t j) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%03zu", prefix, j);
  return buf;
}

Matrix random_orthogonal_with_first(const Vector &first, std::uint64_t seed) {
  const Eigen::Index m = first.size();
  const auto r = random_tensor({{"a", static_cast<std::size_t>(m)}, {"b", static_cast<std::size_t>(m)}},
                               UniformDist{-1.0, 1.0}, seed);
  Matrix x = ConstMap(r.data().data(), m, m);
  x.col(0) = first.normalized();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  Matrix q = qr.householderQ();
  if (q.col(0).dot(first) < 0.0)
    q.col(0) *= -1.0;
  return q;
}

Vector random_unit(std::size_t n, std::uint64_t seed) {
  const auto t = random_tensor({{"a", n}}, UniformDist{-1.0, 1.0}, seed);
  Vector v = Eigen::Map<const Vector>(t.data().data(), idx(n));
  const double nv = v.norm();
  if (nv == 0.0) {
    v = Vector::Zero(idx(n));
    v(0) = 1.0;
    return v;
  }
  return v / nv;
}

} // namespace

Mps::Mps(std::vector<DenseTensor> sites, std::optional<std::size_t> center) : center_(center) {
  if (sites.empty())
    throw ShapeError("an MPS needs at least one site");
  sites_.reserve(sites.size());
  for (auto &s : sites) {
    if (s.order() != 3 || !s.has_leg("l") || !s.has_leg("p") || !s.has_leg("r"))
      throw ShapeError("MPS sites must carry exactly the legs l, p, r");
    sites_.push_back(s.leg_ids() == kSiteLegs ? std::move(s) : s.permuted(kSiteLegs));
  }
  if (left_dim(0) != 1 || right_dim(size() - 1) != 1)
    throw ShapeError("outer bonds of an MPS must have dimension 1");
  for (std::size_t j = 0; j + 1 < size(); ++j)
    if (right_dim(j) != left_dim(j + 1))
      throw ShapeError("bond " + std::to_string(j) + " dims disagree (" + std::to_string(right_dim(j)) +
                       " vs " + std::to_string(left_dim(j + 1)) + ")");
  if (center_ && *center_ >= size())
    throw ShapeError("canonical centre out of range");
}

std::vector<std::size_t> Mps::bond_dims() const {
  std::vector<std::size_t> b;
  for (std::size_t j = 0; j + 1 < size(); ++j)
    b.push_back(right_dim(j));
  return b;
}

std::vector<std::size_t> Mps::phys_dims() const {
  std::vector<std::size_t> p;
  for (std::size_t j = 0; j < size(); ++j)
    p.push_back(phys_dim(j));
  return p;
}

std::size_t Mps::max_bond() const {
  std::size_t d = 1;
  for (auto b : bond_dims())
    d = std::max(d, b);
  return d;
}

std::size_t Mps::state_size() const {
  std::vector<Leg> legs;
  for (std::size_t j = 0; j < size(); ++j)
    legs.push_back({"", phys_dim(j)});
  return checked_volume(legs);
}

VertexId Mps::vertex_id(std::size_t j) { return padded('s', j); }
EdgeId Mps::bond_id(std::size_t j) { return padded('b', j); }
EdgeId Mps::phys_id(std::size_t j) { return padded('p', j); }

DenseTensor Mps::to_vertex_tensor(std::size_t j, const DenseTensor &t) const {
  const DenseTensor s = t.leg_ids() == kSiteLegs ? t : t.permuted(kSiteLegs);
  std::vector<Leg> legs;
  if (j > 0)
    legs.push_back(s.legs()[0]);
  legs.push_back(s.legs()[1]);
  if (j + 1 < size())
    legs.push_back(s.legs()[2]);
  return s.reshaped(std::move(legs));
}

DenseTensor Mps::from_vertex_tensor(std::size_t j, const DenseTensor &t) const {
  std::vector<LegId> order;
  if (j > 0)
    order.push_back("l");
  order.push_back("p");
  if (j + 1 < size())
    order.push_back("r");
  const DenseTensor s = t.leg_ids() == order ? t : t.permuted(order);
  return s.reshaped({{"l", left_dim(j)}, {"p", phys_dim(j)}, {"r", right_dim(j)}});
}

TensorNetwork Mps::to_network() const {
  std::vector<Vertex> vertices;
  std::vector<ContractedEdge> edges;
  std::vector<OpenLeg> open;
  for (std::size_t j = 0; j < size(); ++j) {
    vertices.push_back({vertex_id(j), to_vertex_tensor(j, sites_[j])});
    open.push_back({phys_id(j), vertex_id(j), "p"});
    if (j + 1 < size())
      edges.push_back({bond_id(j), {vertex_id(j), "r"}, {vertex_id(j + 1), "l"}});
  }
  return TensorNetwork(std::move(vertices), std::move(edges), std::move(open));
}

Vector Mps::to_vector(std::size_t cap) const {
  if (state_size() > cap)
    throw TooLargeToMaterialize("MPS state of " + std::to_string(state_size()) + " entries exceeds cap");
  Matrix v = Matrix::Ones(1, 1);
  for (const auto &s : sites_) {
    const auto &l = s.legs();
    Matrix next = v * right_mat(s);
    v = ConstMap(next.data(), next.rows() * idx(l[1].dim), idx(l[2].dim));
  }
  return Eigen::Map<const Vector>(v.data(), v.size());
}

Mps Mps::with_site(std::size_t j, DenseTensor site) const {
  auto sites = sites_;
  sites.at(j) = std::move(site);
  return Mps(std::move(sites));
}

Mps Mps::scaled(double alpha) const {
  auto sites = sites_;
  if (!sites.empty()) {
    const std::size_t j = center_.value_or(0);
    sites[j] *= alpha;
  }
  return Mps(std::move(sites), center_);
}

Mps Mps::reversed() const {
  std::vector<DenseTensor> sites;
  for (std::size_t k = size(); k-- > 0;) {
    const auto swapped = sites_[k].permuted(std::vector<LegId>{"r", "p", "l"});
    sites.push_back(swapped.with_leg_ids(kSiteLegs));
  }
  std::optional<std::size_t> c;
  if (center_)
    c = size() - 1 - *center_;
  return Mps(std::move(sites), c);
}

std::vector<std::size_t> envelope_bonds(std::size_t n, std::size_t max_bond, std::size_t phys) {
  if (n < 1 || max_bond < 1 || phys < 1)
    throw InvalidArgument("MPS dimensions must be positive");
  auto capped_pow = [&](std::size_t e) {
    std::size_t v = 1;
    for (std::size_t k = 0; k < e && v < max_bond; ++k)
      v *= phys;
    return std::min(v, max_bond);
  };
  std::vector<std::size_t> b;
  for (std::size_t j = 0; j + 1 < n; ++j)
    b.push_back(std::min(capped_pow(j + 1), capped_pow(n - j - 1)));
  return b;
}

Mps random_mps(std::size_t n, std::size_t max_bond, std::size_t phys, std::uint64_t seed,
               const Distribution &dist) {
  if (n < 2)
    throw InvalidArgument("random_mps needs n >= 2");
  return random_mps(envelope_bonds(n, max_bond, phys), std::vector<std::size_t>(n, phys), seed, dist);
}

Mps random_mps(const std::vector<std::size_t> &bonds, const std::vector<std::size_t> &phys,
               std::uint64_t seed, const Distribution &dist) {
  if (phys.empty() || bonds.size() + 1 != phys.size())
    throw InvalidArgument("need n physical dims and n-1 bonds");
  std::vector<DenseTensor> sites;
  for (std::size_t j = 0; j < phys.size(); ++j) {
    const std::size_t dl = j == 0 ? 1 : bonds[j - 1];
    const std::size_t dr = j + 1 == phys.size() ? 1 : bonds[j];
    if (dl == 0 || dr == 0 || phys[j] == 0)
      throw InvalidArgument("MPS dimensions must be positive");
    sites.push_back(random_tensor({{"l", dl}, {"p", phys[j]}, {"r", dr}}, dist, derive_seed(seed, {j})));
  }
  return Mps(std::move(sites));
}

Mps product_mps(const std::vector<Vector> &factors) {
  std::vector<DenseTensor> sites;
  for (const auto &f : factors) {
    std::vector<double> d(f.data(), f.data() + f.size());
    sites.push_back(site_tensor(1, static_cast<std::size_t>(f.size()), 1, std::move(d)));
  }
  return Mps(std::move(sites));
}

double inner_product(const Mps &a, const Mps &b) {
  if (a.size() != b.size())
    throw ShapeError("inner product of chains of different length");
  Matrix e = Matrix::Ones(1, 1);
  for (std::size_t j = 0; j < a.size(); ++j) {
    const auto &sa = a.site(j);
    const auto &sb = b.site(j);
    if (sa.legs()[1].dim != sb.legs()[1].dim)
      throw ShapeError("physical dims differ at site " + std::to_string(j));
    Matrix y = e * right_mat(sb);
    ConstMap yl(y.data(), idx(sa.legs()[0].dim * sa.legs()[1].dim), idx(sb.legs()[2].dim));
    e = left_mat(sa).transpose() * yl;
  }
  return e(0, 0);
}

double frobenius_norm(const Mps &m) {
  ScaledGram s{Matrix::Ones(1, 1)};
  for (const auto &site : m.sites()) {
    s.g = left_gram_step(s.g, site);
    s.renormalize();
  }
  return std::sqrt(std::max(s.g(0, 0), 0.0)) * std::exp(0.5 * s.log_scale);
}

Mps normalized(const Mps &m) {
  const double nrm = frobenius_norm(m);
  if (!(nrm > 0.0))
    throw DegenerateSite("cannot normalize a zero MPS");
  const double f = std::pow(nrm, -1.0 / static_cast<double>(m.size()));
  std::vector<DenseTensor> sites;
  for (const auto &s : m.sites())
    sites.push_back(f * s);
  return Mps(std::move(sites));
}

Mps canonicalize(const Mps &m, std::size_t c) {
  if (c >= m.size())
    throw InvalidArgument("canonical centre out of range");
  std::vector<DenseTensor> sites = m.sites();
  for (std::size_t j = 0; j < c; ++j) {
    const auto &s = sites[j];
    const std::size_t dl = s.legs()[0].dim, p = s.legs()[1].dim;
    Matrix q, r;
    thin_qr(left_mat(s), q, r);
    const auto k = static_cast<std::size_t>(q.cols());
    sites[j] = site_from_matrix(q, dl, p, k);
    const auto &nx = sites[j + 1];
    const std::size_t np = nx.legs()[1].dim, ndr = nx.legs()[2].dim;
    Matrix merged = r * right_mat(nx);
    sites[j + 1] = site_from_matrix(merged, k, np, ndr);
  }
  for (std::size_t j = m.size() - 1; j > c; --j) {
    const auto &s = sites[j];
    const std::size_t p = s.legs()[1].dim, dr = s.legs()[2].dim;
    Matrix q, r;
    thin_qr(right_mat(s).transpose(), q, r);
    const auto k = static_cast<std::size_t>(q.cols());
    Matrix qt = q.transpose();
    sites[j] = site_from_matrix(qt, k, p, dr);
    const auto &pv = sites[j - 1];
    const std::size_t pdl = pv.legs()[0].dim, pp = pv.legs()[1].dim;
    Matrix merged = left_mat(pv) * r.transpose();
    sites[j - 1] = site_from_matrix(merged, pdl, pp, k);
  }
  return Mps(std::move(sites), c);
}

bool is_canonical(const Mps &m, std::size_t c, double tol) {
  if (c >= m.size())
    return false;
  for (std::size_t j = 0; j < c; ++j) {
    const auto a = left_mat(m.site(j));
    if (a.rows() < a.cols())
      return false;
    const Matrix g = a.transpose() * a;
    if ((g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() > tol)
      return false;
  }
  for (std::size_t j = c + 1; j < m.size(); ++j) {
    const auto a = right_mat(m.site(j));
    if (a.cols() < a.rows())
      return false;
    const Matrix g = a * a.transpose();
    if ((g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() > tol)
      return false;
  }
  return true;
}

BlockNorms block_norms(const Mps &m, const PowerIterationOptions &power) {
  BlockNorms b;
  const std::size_t n = m.size();
  ScaledGram left{Matrix::Ones(1, 1)};
  for (std::size_t j = 0; j < n; ++j) {
    left.g = left_gram_step(left.g, m.site(j));
    left.renormalize();
    if (j + 1 < n)
      b.right_going.push_back(gram_norm(left, power));
  }
  b.frob = std::sqrt(std::max(left.g(0, 0), 0.0)) * std::exp(0.5 * left.log_scale);
  std::vector<double> lg(n > 0 ? n - 1 : 0);
  ScaledGram right{Matrix::Ones(1, 1)};
  for (std::size_t j = n; j-- > 1;) {
    right.g = right_gram_step(right.g, m.site(j));
    right.renormalize();
    lg[j - 1] = gram_norm(right, power);
  }
  b.left_going = std::move(lg);
  return b;
}

double single_site_bound(const Mps &m, const BlockNorms &b, std::size_t j, double eps) {
  if (j >= m.size())
    throw InvalidArgument("site index out of range");
  if (m.center() && *m.center() == j)
    return eps;
  return eps * b.env_left(j) * frobenius_norm(m.site(j)) * b.env_right(j) / b.frob;
}

double single_site_bound(const Mps &m, std::size_t j, double eps) {
  if (m.center() && *m.center() == j)
    return eps;
  return single_site_bound(m, block_norms(m), j, eps);
}

double all_site_bound_general(const Mps &m, const BlockNorms &b, double eps) {
  double s = 0.0;
  for (std::size_t j = 0; j < m.size(); ++j)
    s += b.env_left(j) * frobenius_norm(m.site(j)) * b.env_right(j);
  return eps * s / b.frob;
}

double all_site_bound_general(const Mps &m, double eps) {
  return all_site_bound_general(m, block_norms(m), eps);
}

CanonicalBound all_site_bound_canonical(const Mps &m, double eps) {
  const std::size_t n = m.size();
  if (!m.center())
    throw NotCanonical("MPS carries no canonical centre");
  if (*m.center() != n - 1) {
    if (*m.center() == 0)
      return all_site_bound_canonical(m.reversed(), eps);
    throw NotCanonical("canonical bound needs the centre on the first or last site");
  }
  const auto b = block_norms(m);
  const double cf = frobenius_norm(m.site(n - 1));
  double s = 1.0;
  for (std::size_t j = 0; j + 1 < n; ++j)
    s += std::sqrt(static_cast<double>(m.right_dim(j))) * b.env_right(j) / cf;
  CanonicalBound out;
  out.exact_sum = eps * s;
  out.simple = eps * (1.0 + static_cast<double>(n - 1) * std::sqrt(static_cast<double>(m.max_bond())));
  return out;
}

double comparison_factor_mps(std::size_t n, double d) {
  if (n == 0 || !(d >= 1.0))
    throw InvalidArgument("comparison factor needs n >= 1 and D >= 1");
  return (1.0 + static_cast<double>(n - 1) * std::sqrt(d)) / static_cast<double>(n);
}

MpsErrorMeasure mps_error(const Mps &a, const Mps &b, std::size_t cap) {
  MpsErrorMeasure e;
  if (a.state_size() <= cap) {
    const Vector va = a.to_vector(cap);
    const Vector vb = b.to_vector(cap);
    e.abs = (vb - va).norm();
    const double na = va.norm();
    e.rel = na > 0.0 ? e.abs / na : (e.abs == 0.0 ? 0.0 : INFINITY);
    e.method = ErrorMethod::Dense;
    return e;
  }
  const double aa = inner_product(a, a);
  const double bb = inner_product(b, b);
  const double ab = inner_product(a, b);
  e.abs = std::sqrt(std::max(aa + bb - 2.0 * ab, 0.0));
  e.rel = aa > 0.0 ? e.abs / std::sqrt(aa) : INFINITY;
  e.method = ErrorMethod::InnerProduct;
  e.cancellation_warning = e.rel < 1e-6;
  return e;
}

Mps perturbed(const Mps &m, const std::vector<DenseTensor> &deltas) {
  if (deltas.size() != m.size())
    throw DimensionError("need one perturbation slot per site");
  std::vector<DenseTensor> sites = m.sites();
  for (std::size_t j = 0; j < m.size(); ++j)
    if (deltas[j].size() > 0 && deltas[j].order() > 0)
      sites[j] += deltas[j];
  return Mps(std::move(sites));
}

std::vector<DenseTensor> sample_site_perturbation(const Mps &m, double eps, std::uint64_t seed) {
  std::vector<DenseTensor> out;
  for (std::size_t j = 0; j < m.size(); ++j) {
    Rng rng(derive_seed(seed, {j}));
    auto d = random_tensor(m.site(j).legs(), UniformDist{-1.0, 1.0}, rng.next());
    const double dn = frobenius_norm(d);
    d *= dn > 0.0 ? eps * frobenius_norm(m.site(j)) / dn : 0.0;
    out.push_back(std::move(d));
  }
  return out;
}

TruncationResult truncate_all_with_canonicalization(const Mps &m, const std::vector<double> &eps,
                                                    std::size_t cap) {
  const std::size_t n = m.size();
  if (eps.size() != n)
    throw InvalidArgument("need one truncation tolerance per site");
  for (double e : eps)
    if (!(e >= 0.0 && e < 1.0))
      throw InvalidPerturbationBudget("truncation tolerances must lie in [0, 1)");
  TruncationResult out;
  if (std::all_of(eps.begin(), eps.end(), [](double e) { return e == 0.0; })) {
    out.mps = m;
    out.bonds_after = m.bond_dims();
    return out;
  }

  auto keep_count = [](const Eigen::VectorXd &s, double budget) {
    // Smallest k whose discarded tail norm stays within budget; equal
    // singular values are resolved in favour of the earlier index.
    double tail2 = 0.0;
    Eigen::Index k = s.size();
    while (k > 1 && tail2 + s(k - 1) * s(k - 1) <= budget * budget) {
      tail2 += s(k - 1) * s(k - 1);
      --k;
    }
    return k;
  };

  Mps cur = canonicalize(m, 0);
  std::vector<DenseTensor> sites = cur.sites();
  for (std::size_t i = 0; i < n; ++i) {
    const auto &s = sites[i];
    const std::size_t dl = s.legs()[0].dim, p = s.legs()[1].dim, dr = s.legs()[2].dim;
    const double budget = eps[i] * frobenius_norm(s);
    if (i + 1 < n) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(left_mat(s)),
                                            Eigen::ComputeThinU | Eigen::ComputeThinV);
      const auto sv = svd.singularValues();
      const Eigen::Index k = eps[i] > 0.0 ? keep_count(sv, budget) : sv.size();
      const auto ku = static_cast<std::size_t>(k);
      Matrix u = svd.matrixU().leftCols(k);
      Matrix svt = sv.head(k).asDiagonal() * svd.matrixV().leftCols(k).transpose();
      sites[i] = site_from_matrix(u, dl, p, ku);
      const auto &nx = sites[i + 1];
      Matrix merged = svt * right_mat(nx);
      sites[i + 1] = site_from_matrix(merged, ku, nx.legs()[1].dim, nx.legs()[2].dim);
    } else if (eps[i] > 0.0 && dl > 1) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(right_mat(s)),
                                            Eigen::ComputeThinU | Eigen::ComputeThinV);
      const auto sv = svd.singularValues();
      const Eigen::Index k = keep_count(sv, budget);
      const auto ku = static_cast<std::size_t>(k);
      Matrix us = svd.matrixU().leftCols(k);
      Matrix svt = sv.head(k).asDiagonal() * svd.matrixV().leftCols(k).transpose();
      sites[i] = site_from_matrix(svt, ku, p, dr);
      const auto &pv = sites[i - 1];
      Matrix merged = left_mat(pv) * us;
      sites[i - 1] = site_from_matrix(merged, pv.legs()[0].dim, pv.legs()[1].dim, ku);
    }
  }
  out.mps = Mps(std::move(sites), n - 1);
  out.bonds_after = out.mps.bond_dims();
  out.relative_error = mps_error(m, out.mps, cap).rel;
  return out;
}

WorstCaseInstance worst_case_construction(std::size_t n, std::size_t d, std::size_t p, double delta,
                                          std::uint64_t seed) {
  if (n < 2)
    throw ShapeError("construction needs at least two sites");
  if (d < 1 || p < 1)
    throw ShapeError("dimensions must be positive");
  if (p < d)
    throw ShapeError("construction needs p >= D so that the first site is an isometry");
  const auto D = idx(d), P = idx(p);

  // u[k] lives on the left bond of site k (k >= 1); v[k] on physical leg k.
  std::vector<Vector> u(n), v(n);
  u[n - 1] = random_unit(d, derive_seed(seed, {1, n - 1}));
  v[n - 1] = random_unit(p, derive_seed(seed, {2, n - 1}));

  std::vector<DenseTensor> sites(n);

  // Last site: u vᵀ + Δ with Δ ⟂ u vᵀ and ‖Δ‖_F = delta.
  {
    Matrix mn = u[n - 1] * v[n - 1].transpose();
    const auto r = random_tensor({{"a", d}, {"b", p}}, UniformDist{-1.0, 1.0}, derive_seed(seed, {3}));
    Matrix dlt = ConstMap(r.data().data(), D, P);
    dlt -= (dlt.cwiseProduct(mn).sum()) * mn;
    const double dn = dlt.norm();
    if (dn > 0.0)
      dlt *= delta / dn;
    mn += dlt;
    sites[n - 1] = site_from_matrix(mn, d, p, 1);
  }

  // Middle sites: isometries (D·p × D) with M_k u_{k+1} = u_k ⊗ v_k.
  for (std::size_t k = n - 1; k-- > 1;) {
    u[k] = random_unit(d, derive_seed(seed, {1, k}));
    v[k] = random_unit(p, derive_seed(seed, {2, k}));
    Vector target(D * P);
    for (Eigen::Index a = 0; a < D; ++a)
      target.segment(a * P, P) = u[k](a) * v[k];
    const Matrix qout = random_orthogonal_with_first(target, derive_seed(seed, {4, k}));
    const Matrix qin = random_orthogonal_with_first(u[k + 1], derive_seed(seed, {5, k}));
    Matrix mk = qout.leftCols(D) * qin.transpose();
    sites[k] = site_from_matrix(mk, d, p, d);
  }

  // First site: any (p × D) isometry; v_1 = M_1 u_2.
  {
    const Matrix q = random_orthogonal_with_first(random_unit(p, derive_seed(seed, {6})), derive_seed(seed, {7}));
    Matrix m1 = q.leftCols(D);
    v[0] = m1 * u[1];
    sites[0] = site_from_matrix(m1, 1, p, d);
  }

  WorstCaseInstance inst;
  inst.mps = Mps(sites, n - 1);
  const double sd = std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < n; ++i) {
    DenseTensor dir;
    if (i + 1 == n) {
      dir = sites[n - 1];
    } else {
      const std::size_t dl = i == 0 ? 1 : d;
      std::vector<double> data;
      data.reserve(dl * p * d);
      for (std::size_t a = 0; a < dl; ++a)
        for (Eigen::Index s = 0; s < P; ++s)
          for (Eigen::Index b = 0; b < D; ++b) {
            const double left = i == 0 ? 1.0 : u[i](idx(a));
            data.push_back(sd * left * v[i](s) * u[i + 1](b));
          }
      dir = site_tensor(dl, p, d, std::move(data));
    }
    inst.direction.entries.emplace(Mps::vertex_id(i), inst.mps.to_vertex_tensor(i, dir));
    inst.site_direction.push_back(std::move(dir));
  }
  inst.direction.model = EpsRelativeModel{1.0};
  return inst;
}

} // namespace tncond
