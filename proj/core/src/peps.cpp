#include "tncond/peps.hpp"

#include "tncond/rng.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace tncond {

namespace {

const std::vector<LegId> kPepsLegs{"u", "d", "l", "r", "p"};

std::string grid_id(char prefix, std::size_t a, std::size_t b) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%c%03zu_%03zu", prefix, a, b);
  return buf;
}

std::string indexed(const char *prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03zu", prefix, i);
  return buf;
}

DenseTensor random_direction(const std::vector<Leg> &legs, double radius, std::uint64_t seed) {
  auto d = random_tensor(legs, UniformDist{-1.0, 1.0}, seed);
  const double n = frobenius_norm(d);
  d *= n > 0.0 ? radius / n : 0.0;
  return d;
}

} // namespace

Peps::Peps(std::size_t rows, std::size_t cols, std::vector<DenseTensor> sites) : rows_(rows), cols_(cols) {
  if (rows == 0 || cols == 0)
    throw ShapeError("a PEPS needs at least one row and one column");
  if (sites.size() != rows * cols)
    throw ShapeError("expected " + std::to_string(rows * cols) + " PEPS sites, got " +
                     std::to_string(sites.size()));
  sites_.reserve(sites.size());
  for (auto &s : sites) {
    if (s.order() != 5)
      throw ShapeError("PEPS sites must carry exactly the legs u, d, l, r, p");
    for (const auto &id : kPepsLegs)
      if (!s.has_leg(id))
        throw ShapeError("PEPS site is missing leg '" + id + "'");
    sites_.push_back(s.leg_ids() == kPepsLegs ? std::move(s) : s.permuted(kPepsLegs));
  }
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const auto where = " at (" + std::to_string(i) + ", " + std::to_string(j) + ")";
      if (i == 0 && dim(i, j, "u") != 1)
        throw ShapeError("top boundary bond must have dimension 1" + where);
      if (i + 1 == rows && dim(i, j, "d") != 1)
        throw ShapeError("bottom boundary bond must have dimension 1" + where);
      if (j == 0 && dim(i, j, "l") != 1)
        throw ShapeError("left boundary bond must have dimension 1" + where);
      if (j + 1 == cols && dim(i, j, "r") != 1)
        throw ShapeError("right boundary bond must have dimension 1" + where);
      if (i + 1 < rows && dim(i, j, "d") != dim(i + 1, j, "u"))
        throw ShapeError("vertical bond dims disagree" + where);
      if (j + 1 < cols && dim(i, j, "r") != dim(i, j + 1, "l"))
        throw ShapeError("horizontal bond dims disagree" + where);
    }
}

std::size_t Peps::max_bond() const {
  std::size_t d = 1;
  for (const auto &s : sites_)
    for (const auto &id : {"d", "r"})
      d = std::max(d, s.dim(id));
  return d;
}

Peps Peps::with_site(std::size_t i, std::size_t j, DenseTensor t) const {
  auto sites = sites_;
  sites.at(i * cols_ + j) = std::move(t);
  return Peps(rows_, cols_, std::move(sites));
}

VertexId Peps::vertex_id(std::size_t i, std::size_t j) { return grid_id('t', i, j); }
EdgeId Peps::phys_id(std::size_t i, std::size_t j) { return grid_id('p', j, i); }

DenseTensor Peps::to_vertex_tensor(std::size_t i, std::size_t j, const DenseTensor &t) const {
  const DenseTensor s = t.leg_ids() == kPepsLegs ? t : t.permuted(kPepsLegs);
  std::vector<Leg> legs;
  if (i > 0)
    legs.push_back(s.legs()[0]);
  if (i + 1 < rows_)
    legs.push_back(s.legs()[1]);
  if (j > 0)
    legs.push_back(s.legs()[2]);
  if (j + 1 < cols_)
    legs.push_back(s.legs()[3]);
  legs.push_back(s.legs()[4]);
  return s.reshaped(std::move(legs));
}

TensorNetwork Peps::to_network() const {
  std::vector<Vertex> vertices;
  std::vector<ContractedEdge> edges;
  std::vector<OpenLeg> open;
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) {
      vertices.push_back({vertex_id(i, j), to_vertex_tensor(i, j, site(i, j))});
      open.push_back({phys_id(i, j), vertex_id(i, j), "p"});
      if (j + 1 < cols_)
        edges.push_back({grid_id('h', i, j), {vertex_id(i, j), "r"}, {vertex_id(i, j + 1), "l"}});
      if (i + 1 < rows_)
        edges.push_back({grid_id('v', i, j), {vertex_id(i, j), "d"}, {vertex_id(i + 1, j), "u"}});
    }
  return TensorNetwork(std::move(vertices), std::move(edges), std::move(open));
}

Peps random_peps(std::size_t rows, std::size_t cols, std::size_t bond, std::size_t phys, std::uint64_t seed,
                 const Distribution &dist) {
  if (rows == 0 || cols == 0 || bond == 0 || phys == 0)
    throw InvalidArgument("PEPS dimensions must be positive");
  std::vector<DenseTensor> sites;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      std::vector<Leg> legs{{"u", i == 0 ? 1 : bond},
                            {"d", i + 1 == rows ? 1 : bond},
                            {"l", j == 0 ? 1 : bond},
                            {"r", j + 1 == cols ? 1 : bond},
                            {"p", phys}};
      sites.push_back(random_tensor(std::move(legs), dist, derive_seed(seed, {i, j})));
    }
  return Peps(rows, cols, std::move(sites));
}

DenseTensor fused_column(const Peps &p, std::size_t j, std::size_t cap) {
  const std::size_t m = p.rows();
  auto rename = [&](std::size_t i) {
    std::map<LegId, LegId> r{{"l", indexed("L", i)}, {"r", indexed("R", i)}, {"p", indexed("P", i)},
                             {"d", indexed("D", i)}};
    r["u"] = i == 0 ? "U" : indexed("D", i - 1);
    return p.site(i, j).relabeled(r);
  };
  DenseTensor acc = rename(0);
  for (std::size_t i = 1; i < m; ++i) {
    const auto next = rename(i);
    std::vector<Leg> out;
    for (const auto &l : acc.legs())
      if (l.id != indexed("D", i - 1))
        out.push_back(l);
    for (const auto &l : next.legs())
      if (l.id != indexed("D", i - 1))
        out.push_back(l);
    if (checked_volume(out) > cap)
      throw TooLargeToMaterialize("column " + std::to_string(j) + " exceeds the materialization cap");
    acc = contract_pair(acc, next, {{indexed("D", i - 1), indexed("D", i - 1)}});
  }
  std::vector<LegId> order{"U"};
  std::size_t dl = 1, dp = 1, dr = 1;
  for (std::size_t i = 0; i < m; ++i) {
    order.push_back(indexed("L", i));
    dl *= p.dim(i, j, "l");
  }
  for (std::size_t i = 0; i < m; ++i) {
    order.push_back(indexed("P", i));
    dp *= p.dim(i, j, "p");
  }
  for (std::size_t i = 0; i < m; ++i) {
    order.push_back(indexed("R", i));
    dr *= p.dim(i, j, "r");
  }
  order.push_back(indexed("D", m - 1));
  return acc.permuted(order).reshaped({{"l", dl}, {"p", dp}, {"r", dr}});
}

Mps columns_to_mps(const Peps &p, std::size_t cap) {
  std::vector<DenseTensor> sites;
  for (std::size_t j = 0; j < p.cols(); ++j)
    sites.push_back(fused_column(p, j, cap));
  return Mps(std::move(sites));
}

Mps column_as_vertical_mps(const Peps &p, std::size_t j) {
  std::vector<DenseTensor> sites;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    const auto &s = p.site(i, j);
    const std::size_t phys = s.dim("l") * s.dim("r") * s.dim("p");
    sites.push_back(s.permuted(std::vector<LegId>{"u", "l", "r", "p", "d"})
                        .reshaped({{"l", s.dim("u")}, {"p", phys}, {"r", s.dim("d")}}));
  }
  return Mps(std::move(sites));
}

double peps_bound_general(const Peps &p, double eps1, double eps2, std::size_t cap) {
  if (!(eps1 >= 0.0) || !(eps2 >= 0.0))
    throw InvalidPerturbationBudget("eps1 and eps2 must be nonnegative");
  const auto b = columns_to_mps(p, cap);
  const auto norms = block_norms(b);
  const std::size_t n = b.size();
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i)
    s += norms.env_left(i) * frobenius_norm(b.site(i)) * norms.env_right(i);
  const double col = all_site_bound_general(column_as_vertical_mps(p, n - 1), eps2);
  const double last = norms.env_left(n - 1) * frobenius_norm(b.site(n - 1));
  return (eps1 * s + col * last) / norms.frob;
}

PepsCanonicalBound peps_bound_canonical(const Peps &p, double eps1, double eps2, double tol, std::size_t cap) {
  if (!(eps1 >= 0.0) || !(eps2 >= 0.0))
    throw InvalidPerturbationBudget("eps1 and eps2 must be nonnegative");
  const std::size_t m = p.rows(), n = p.cols();
  if (!is_canonical(p.to_network(), Peps::vertex_id(m - 1, n - 1), tol, cap))
    throw NotCanonical("corner environment is not an isometry");
  const auto colv = column_as_vertical_mps(p, n - 1);
  if (!is_canonical(colv, m - 1, tol))
    throw NotCanonical("last column is not canonical towards its bottom site");

  const auto b = columns_to_mps(p, cap);
  const auto norms = block_norms(b);
  double s = 0.0;
  for (std::size_t j = 0; j + 1 < n; ++j) {
    double f = 1.0;
    for (std::size_t i = 0; i < m; ++i)
      f *= std::sqrt(static_cast<double>(p.dim(i, j, "r")));
    s += f * norms.env_right(j);
  }
  const auto col = all_site_bound_canonical(Mps(colv.sites(), m - 1), eps2);
  const double d = static_cast<double>(p.max_bond());
  PepsCanonicalBound out;
  out.exact_sum = eps1 * s / norms.frob + col.exact_sum;
  out.simple = eps1 * (1.0 + static_cast<double>(n - 1) * std::pow(d, 0.5 * static_cast<double>(m))) +
               eps2 * (1.0 + static_cast<double>(m - 1) * std::sqrt(d));
  return out;
}

double comparison_factor_peps(std::size_t m, std::size_t n, double d, double eps1, double eps2) {
  if (m == 0 || n == 0 || !(d >= 1.0))
    throw InvalidArgument("comparison factor needs m, n >= 1 and D >= 1");
  const double den = eps1 * static_cast<double>(n - 1) + eps2 * static_cast<double>(m);
  if (!(den > 0.0))
    throw InvalidPerturbationBudget("eps1 (n-1) + eps2 m must be positive");
  const double num = eps1 * (1.0 + static_cast<double>(n - 1) * std::pow(d, 0.5 * static_cast<double>(m))) +
                     eps2 * (1.0 + static_cast<double>(m - 1) * std::sqrt(d));
  return num / den;
}

Peps canonical_peps(std::size_t rows, std::size_t cols, std::size_t bond, std::size_t phys, std::uint64_t seed) {
  if (rows == 0 || cols == 0 || bond == 0 || phys == 0)
    throw InvalidArgument("PEPS dimensions must be positive");
  std::vector<DenseTensor> sites;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const std::size_t u = i == 0 ? 1 : bond, d = i + 1 == rows ? 1 : bond;
      const std::size_t l = j == 0 ? 1 : bond, r = j + 1 == cols ? 1 : bond;
      const std::uint64_t s = derive_seed(seed, {i, j});
      if (i + 1 == rows && j + 1 == cols) {
        sites.push_back(random_tensor({{"u", u}, {"d", d}, {"l", l}, {"r", r}, {"p", phys}},
                                      UniformDist{-1.0, 1.0}, s));
        continue;
      }
      // Isometry from (r, d) into (l, u, p).
      const std::size_t in = r * d;
      const std::size_t p = std::max(phys, (in + l * u - 1) / (l * u));
      const std::size_t out = l * u * p;
      const auto x = random_tensor({{"a", out}, {"b", in}}, UniformDist{-1.0, 1.0}, s);
      Eigen::MatrixXd a = Eigen::Map<const Matrix>(x.data().data(), static_cast<Eigen::Index>(out),
                                                   static_cast<Eigen::Index>(in));
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
      const Matrix q = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
      DenseTensor t({{"l", l}, {"u", u}, {"p", p}, {"r", r}, {"d", d}},
                    std::vector<double>(q.data(), q.data() + q.size()));
      sites.push_back(t.permuted(kPepsLegs));
    }
  return Peps(rows, cols, std::move(sites));
}

MixedPerturbation sample_mixed_perturbation(const Peps &p, double eps1, double eps2, std::uint64_t seed,
                                            std::size_t cap) {
  if (!(eps1 >= 0.0) || !(eps2 >= 0.0))
    throw InvalidPerturbationBudget("eps1 and eps2 must be nonnegative");
  MixedPerturbation out;
  for (std::size_t j = 0; j + 1 < p.cols(); ++j) {
    const auto col = fused_column(p, j, cap);
    out.column_deltas.push_back(random_direction(col.legs(), eps1 * frobenius_norm(col), derive_seed(seed, {0, j})));
  }
  for (std::size_t i = 0; i < p.rows(); ++i) {
    const auto &s = p.site(i, p.cols() - 1);
    out.site_deltas.push_back(random_direction(s.legs(), eps2 * frobenius_norm(s), derive_seed(seed, {1, i})));
  }
  return out;
}

MpsErrorMeasure mixed_error(const Peps &p, const MixedPerturbation &pert, std::size_t cap) {
  const std::size_t n = p.cols();
  if (pert.column_deltas.size() + 1 != n || pert.site_deltas.size() != p.rows())
    throw DimensionError("mixed perturbation does not match the PEPS grid");
  const auto b = columns_to_mps(p, cap);
  std::vector<DenseTensor> deltas(n);
  for (std::size_t j = 0; j + 1 < n; ++j)
    deltas[j] = pert.column_deltas[j];
  Peps last = p;
  for (std::size_t i = 0; i < p.rows(); ++i)
    last = last.with_site(i, n - 1, p.site(i, n - 1) + pert.site_deltas[i]);
  deltas[n - 1] = fused_column(last, n - 1, cap);
  deltas[n - 1] -= b.site(n - 1);
  return mps_error(b, perturbed(b, deltas), cap);
}

} // namespace tncond
