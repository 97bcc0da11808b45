#pragma once

// Independent reference computations and random generators for tests.
// Nothing here calls the environment or bound code under test.

#include "tncond/mps.hpp"
#include "tncond/network.hpp"
#include "tncond/rng.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace tncond::oracle {

/// Contraction by summing over every joint index assignment. Output is
/// flattened over open legs in ascending edge id.
inline std::vector<double> brute_force_contract(const TensorNetwork &tn) {
  std::vector<std::string> ids;
  std::map<std::string, std::size_t> dim;
  for (const auto &e : tn.edges()) {
    ids.push_back(e.id);
    dim[e.id] = tn.tensor(e.a.vertex).dim(e.a.leg);
  }
  std::vector<std::string> open_ids;
  for (const auto &o : tn.open_legs()) {
    open_ids.push_back(o.id);
    dim[o.id] = tn.tensor(o.vertex).dim(o.leg);
  }
  std::sort(open_ids.begin(), open_ids.end());
  ids.insert(ids.end(), open_ids.begin(), open_ids.end());

  // For each vertex leg: which global index drives it.
  std::vector<std::vector<std::size_t>> drive(tn.size());
  std::map<std::string, std::size_t> pos;
  for (std::size_t k = 0; k < ids.size(); ++k)
    pos[ids[k]] = k;
  for (std::size_t v = 0; v < tn.size(); ++v) {
    const auto &t = tn.vertices()[v].tensor;
    drive[v].resize(t.order());
    for (std::size_t l = 0; l < t.order(); ++l) {
      const auto &leg = t.legs()[l].id;
      const auto &vid = tn.vertices()[v].id;
      for (const auto &e : tn.edges())
        if ((e.a.vertex == vid && e.a.leg == leg) || (e.b.vertex == vid && e.b.leg == leg))
          drive[v][l] = pos[e.id];
      for (const auto &o : tn.open_legs())
        if (o.vertex == vid && o.leg == leg)
          drive[v][l] = pos[o.id];
    }
  }

  std::size_t out_size = 1;
  for (const auto &id : open_ids)
    out_size *= dim[id];
  std::vector<double> out(out_size, 0.0);
  std::vector<std::size_t> idx(ids.size(), 0);
  const std::size_t n_edges = tn.edges().size();
  while (true) {
    double prod = 1.0;
    for (std::size_t v = 0; v < tn.size() && prod != 0.0; ++v) {
      const auto &t = tn.vertices()[v].tensor;
      std::size_t flat = 0;
      for (std::size_t l = 0; l < t.order(); ++l)
        flat = flat * t.legs()[l].dim + idx[drive[v][l]];
      prod *= t[flat];
    }
    std::size_t of = 0;
    for (std::size_t k = n_edges; k < ids.size(); ++k)
      of = of * dim[ids[k]] + idx[k];
    out[of] += prod;
    bool done = true;
    for (std::size_t k = ids.size(); k-- > 0;) {
      if (++idx[k] < dim[ids[k]]) {
        done = false;
        break;
      }
      idx[k] = 0;
    }
    if (done)
      return out;
  }
}

inline double dense_spectral_norm(const Eigen::MatrixXd &m) {
  if (m.size() == 0)
    return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

inline std::vector<double> flat(const DenseTensor &t) { return {t.data().begin(), t.data().end()}; }

/// Jacobian of vec(T) with respect to the entries of vertex v, built
/// column by column from unit perturbations (T is linear in each site).
inline Eigen::MatrixXd site_jacobian(const TensorNetwork &tn, std::size_t v) {
  const auto &t = tn.vertices()[v].tensor;
  const VertexId id = tn.vertices()[v].id;
  Eigen::MatrixXd j;
  for (std::size_t k = 0; k < t.size(); ++k) {
    DenseTensor e = DenseTensor::zeros(t.legs());
    e[k] = 1.0;
    const DenseTensor col = contract_network(tn.with_tensor(id, e));
    if (j.size() == 0)
      j.resize(static_cast<Eigen::Index>(col.size()), static_cast<Eigen::Index>(t.size()));
    for (std::size_t r = 0; r < col.size(); ++r)
      j(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = col[r];
  }
  return j;
}

inline double site_kappa(const TensorNetwork &tn, std::size_t v) { return dense_spectral_norm(site_jacobian(tn, v)); }

inline double norm2(const std::vector<double> &a) {
  double s = 0.0;
  for (double x : a)
    s += x * x;
  return std::sqrt(s);
}

/// Finite-difference estimate of max over unit single-site directions of
/// ‖T(T_v + hδ) − T‖/h: random directions, then a (1+1)-ES with the 1/5th
/// success rule from the best one. `budget` counts directional evaluations.
inline double fd_kappa_search(const TensorNetwork &tn, std::size_t v, std::size_t budget, std::uint64_t seed,
                              double h = 1e-6) {
  const auto &t = tn.vertices()[v].tensor;
  const VertexId id = tn.vertices()[v].id;
  const auto base = flat(contract_network(tn));
  Rng rng(seed);
  auto gauss = [&] {
    const double u1 = std::max(rng.uniform(), 1e-300), u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  };
  auto evaluate = [&](std::vector<double> d) {
    const double n = norm2(d);
    for (auto &x : d)
      x /= n;
    DenseTensor pt = t;
    for (std::size_t k = 0; k < t.size(); ++k)
      pt[k] += h * d[k];
    const auto out = flat(contract_network(tn.with_tensor(id, pt)));
    std::vector<double> diff(out.size());
    for (std::size_t k = 0; k < out.size(); ++k)
      diff[k] = out[k] - base[k];
    return std::make_pair(norm2(diff) / h, d);
  };
  auto random_dir = [&] {
    std::vector<double> d(t.size());
    for (auto &x : d)
      x = gauss();
    return d;
  };
  const std::size_t explore = budget / 2;
  auto [best, dir] = evaluate(random_dir());
  for (std::size_t k = 1; k < explore; ++k) {
    auto [val, d] = evaluate(random_dir());
    if (val > best) {
      best = val;
      dir = d;
    }
  }
  double sigma = 0.3;
  for (std::size_t k = explore; k < budget; ++k) {
    std::vector<double> cand = dir;
    for (auto &x : cand)
      x += sigma * gauss();
    auto [val, d] = evaluate(cand);
    if (val > best) {
      best = val;
      dir = d;
      sigma *= 1.5;
    } else {
      sigma *= std::pow(1.5, -0.25);
    }
    sigma = std::clamp(sigma, 1e-6, 2.0);
  }
  return best;
}

struct NetworkShape {
  std::size_t max_vertices = 4;
  std::size_t max_dim = 4;
  std::size_t max_open_per_vertex = 1;
  bool scalar_output = false;
};

/// Connected random network: spanning tree, a few extra (possibly
/// parallel) edges, random open legs; entries uniform on [-1, 1].
inline TensorNetwork random_network(std::uint64_t seed, const NetworkShape &shape = {}) {
  Rng rng(seed);
  const std::size_t n = 2 + rng.index(shape.max_vertices - 1);
  std::vector<std::vector<Leg>> legs(n);
  std::vector<ContractedEdge> edges;
  std::vector<OpenLeg> open;
  std::size_t next_edge = 0;
  auto vid = [](std::size_t v) { return std::string(1, static_cast<char>('A' + v)); };
  auto add_edge = [&](std::size_t a, std::size_t b) {
    const std::size_t d = 1 + rng.index(shape.max_dim);
    const std::string la = "x" + std::to_string(legs[a].size());
    legs[a].push_back({la, d});
    const std::string lb = "x" + std::to_string(legs[b].size());
    legs[b].push_back({lb, d});
    edges.push_back({"e" + std::to_string(next_edge++), {vid(a), la}, {vid(b), lb}});
  };
  for (std::size_t v = 1; v < n; ++v)
    add_edge(rng.index(v), v);
  const std::size_t extra = rng.index(3);
  for (std::size_t k = 0; k < extra; ++k) {
    const std::size_t a = rng.index(n);
    std::size_t b = rng.index(n - 1);
    if (b >= a)
      ++b;
    add_edge(a, b);
  }
  if (!shape.scalar_output)
    for (std::size_t v = 0; v < n; ++v) {
      const std::size_t k = rng.index(shape.max_open_per_vertex + 1);
      for (std::size_t q = 0; q < k; ++q) {
        const std::string l = "o" + std::to_string(q);
        legs[v].push_back({l, 1 + rng.index(shape.max_dim)});
        open.push_back({"p" + vid(v) + std::to_string(q), vid(v), l});
      }
    }
  std::vector<Vertex> vs;
  for (std::size_t v = 0; v < n; ++v)
    vs.push_back({vid(v), random_tensor(legs[v], UniformDist{-1.0, 1.0}, derive_seed(seed, {v}))});
  return TensorNetwork(std::move(vs), std::move(edges), std::move(open));
}

/// Dense state of an MPS by explicit summation over bond indices.
inline std::vector<double> mps_state(const Mps &m) {
  std::vector<double> out(m.state_size(), 0.0);
  const std::size_t n = m.size();
  std::vector<std::size_t> phys(n, 0);
  for (std::size_t f = 0; f < out.size(); ++f) {
    std::size_t rem = f;
    for (std::size_t j = n; j-- > 0;) {
      phys[j] = rem % m.phys_dim(j);
      rem /= m.phys_dim(j);
    }
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Ones(1);
    for (std::size_t j = 0; j < n; ++j) {
      const auto &s = m.site(j);
      const std::size_t dl = m.left_dim(j), p = m.phys_dim(j), dr = m.right_dim(j);
      Eigen::MatrixXd a(dl, dr);
      for (std::size_t l = 0; l < dl; ++l)
        for (std::size_t r = 0; r < dr; ++r)
          a(l, r) = s[(l * p + phys[j]) * dr + r];
      row = row * a;
    }
    out[f] = row(0);
  }
  return out;
}

} // namespace tncond::oracle
