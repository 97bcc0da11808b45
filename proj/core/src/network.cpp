#include "tncond/network.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace tncond {

namespace {

bool by_id(const Leg &a, const Leg &b) { return a.id < b.id; }

std::vector<LegId> ids_of(const std::vector<Leg> &legs) {
  std::vector<LegId> ids;
  ids.reserve(legs.size());
  for (const auto &l : legs)
    ids.push_back(l.id);
  return ids;
}

std::size_t volume_of(const DenseTensor &t) { return t.size(); }

// Leg pairs shared between two edge-labeled tensors.
LegPairs shared_legs(const DenseTensor &a, const DenseTensor &b) {
  LegPairs pairs;
  for (const auto &l : a.legs())
    if (b.has_leg(l.id))
      pairs.emplace_back(l.id, l.id);
  return pairs;
}

std::size_t result_volume(const DenseTensor &a, const DenseTensor &b, const LegPairs &pairs) {
  std::size_t shared = 1;
  for (const auto &p : pairs)
    shared *= a.dim(p.first);
  // vol(a)/shared * vol(b)/shared, computed without overflow where possible
  const double v = static_cast<double>(volume_of(a) / shared) * static_cast<double>(volume_of(b) / shared);
  return v > 1.8e19 ? static_cast<std::size_t>(-1) : static_cast<std::size_t>(v);
}

DenseTensor contract_checked(const DenseTensor &a, const DenseTensor &b, std::size_t cap) {
  const auto pairs = shared_legs(a, b);
  if (result_volume(a, b, pairs) > cap)
    throw TooLargeToMaterialize("intermediate of " + std::to_string(result_volume(a, b, pairs)) +
                                " entries exceeds the cap of " + std::to_string(cap));
  return contract_pair(a, b, pairs);
}

} // namespace

TensorNetwork::TensorNetwork(std::vector<Vertex> vertices, std::vector<ContractedEdge> edges,
                             std::vector<OpenLeg> open_legs)
    : vertices_(std::move(vertices)), edges_(std::move(edges)), open_(std::move(open_legs)) {
  std::map<VertexId, std::size_t> vindex;
  for (std::size_t i = 0; i < vertices_.size(); ++i)
    if (!vindex.emplace(vertices_[i].id, i).second)
      throw NetworkInvalid("duplicate vertex id '" + vertices_[i].id + "'");

  std::set<EdgeId> edge_ids;
  std::map<std::pair<VertexId, LegId>, EdgeId> covered;
  auto cover = [&](const EdgeId &eid, const VertexId &v, const LegId &leg) -> std::size_t {
    auto it = vindex.find(v);
    if (it == vindex.end())
      throw NetworkInvalid("edge '" + eid + "' references unknown vertex '" + v + "'");
    const auto &t = vertices_[it->second].tensor;
    if (!t.has_leg(leg))
      throw NetworkInvalid("edge '" + eid + "' references unknown leg '" + leg + "' of vertex '" + v + "'");
    if (!covered.emplace(std::make_pair(v, leg), eid).second)
      throw NetworkInvalid("leg '" + leg + "' of vertex '" + v + "' is used by more than one edge");
    return t.dim(leg);
  };

  for (const auto &e : edges_) {
    if (!edge_ids.insert(e.id).second)
      throw NetworkInvalid("duplicate edge id '" + e.id + "'");
    if (e.a.vertex == e.b.vertex)
      throw NetworkInvalid("edge '" + e.id + "' joins vertex '" + e.a.vertex +
                           "' to itself; use an open leg instead");
    const auto da = cover(e.id, e.a.vertex, e.a.leg);
    const auto db = cover(e.id, e.b.vertex, e.b.leg);
    if (da != db)
      throw NetworkInvalid("edge '" + e.id + "' joins legs of dims " + std::to_string(da) + " and " +
                           std::to_string(db));
  }
  for (const auto &o : open_) {
    if (!edge_ids.insert(o.id).second)
      throw NetworkInvalid("duplicate edge id '" + o.id + "'");
    cover(o.id, o.vertex, o.leg);
  }
  for (const auto &v : vertices_)
    for (const auto &l : v.tensor.legs())
      if (!covered.count({v.id, l.id}))
        throw NetworkInvalid("leg '" + l.id + "' of vertex '" + v.id + "' is not attached to any edge");
}

bool TensorNetwork::has_vertex(const VertexId &id) const noexcept {
  return std::any_of(vertices_.begin(), vertices_.end(), [&](const Vertex &v) { return v.id == id; });
}

std::size_t TensorNetwork::vertex_index(const VertexId &id) const {
  for (std::size_t i = 0; i < vertices_.size(); ++i)
    if (vertices_[i].id == id)
      return i;
  throw VertexNotFound("vertex '" + id + "' not in network");
}

std::vector<VertexId> TensorNetwork::vertex_ids() const {
  std::vector<VertexId> ids;
  for (const auto &v : vertices_)
    ids.push_back(v.id);
  return ids;
}

TensorNetwork TensorNetwork::with_tensor(const VertexId &id, DenseTensor tensor) const {
  const auto i = vertex_index(id);
  const auto &old = vertices_[i].tensor;
  if (tensor.order() != old.order())
    throw DimensionError("replacement tensor for vertex '" + id + "' has a different leg set");
  auto aligned = tensor.permuted(old.leg_ids());
  if (!aligned.same_shape(old))
    throw DimensionError("replacement tensor for vertex '" + id + "' has different leg dims");
  TensorNetwork copy = *this;
  copy.vertices_[i].tensor = std::move(aligned);
  return copy;
}

DenseTensor TensorNetwork::edge_labeled(std::size_t vertex_index) const {
  const auto &v = vertices_.at(vertex_index);
  std::map<LegId, LegId> renames;
  for (const auto &e : edges_) {
    if (e.a.vertex == v.id)
      renames[e.a.leg] = e.id;
    if (e.b.vertex == v.id)
      renames[e.b.leg] = e.id;
  }
  for (const auto &o : open_)
    if (o.vertex == v.id)
      renames[o.leg] = o.id;
  // Rename through temporaries so that a leg named like another edge id
  // cannot collide mid-way.
  std::map<LegId, LegId> to_tmp, from_tmp;
  for (const auto &[leg, edge] : renames) {
    const auto tmp = "\x01" + leg;
    to_tmp[leg] = tmp;
    from_tmp[tmp] = edge;
  }
  return v.tensor.relabeled(to_tmp).relabeled(from_tmp);
}

DenseTensor TensorNetwork::vertex_labeled(std::size_t vertex_index, const DenseTensor &t) const {
  const auto &v = vertices_.at(vertex_index);
  std::map<LegId, LegId> to_tmp, from_tmp;
  auto add = [&](const EdgeId &edge, const LegId &leg) {
    const auto tmp = "\x01" + edge;
    to_tmp[edge] = tmp;
    from_tmp[tmp] = leg;
  };
  for (const auto &e : edges_) {
    if (e.a.vertex == v.id)
      add(e.id, e.a.leg);
    if (e.b.vertex == v.id)
      add(e.id, e.b.leg);
  }
  for (const auto &o : open_)
    if (o.vertex == v.id)
      add(o.id, o.leg);
  return t.relabeled(to_tmp).relabeled(from_tmp).permuted(v.tensor.leg_ids());
}

std::vector<Leg> TensorNetwork::sorted_open_legs() const {
  std::vector<Leg> legs;
  for (const auto &o : open_)
    legs.push_back({o.id, tensor(o.vertex).dim(o.leg)});
  std::sort(legs.begin(), legs.end(), by_id);
  return legs;
}

std::vector<Leg> TensorNetwork::sorted_open_legs(const VertexSet &vset) const {
  std::vector<Leg> legs;
  for (const auto &o : open_)
    if (vset.count(o.vertex))
      legs.push_back({o.id, tensor(o.vertex).dim(o.leg)});
  std::sort(legs.begin(), legs.end(), by_id);
  return legs;
}

DenseTensor contract_network(const TensorNetwork &tn, const ContractionOptions &opts) {
  const auto out_legs = tn.sorted_open_legs();
  if (checked_volume(out_legs) > opts.cap)
    throw TooLargeToMaterialize("network output of " + std::to_string(checked_volume(out_legs)) +
                                " entries exceeds the cap of " + std::to_string(opts.cap));
  if (tn.size() == 0)
    return DenseTensor::scalar(1.0);

  std::vector<DenseTensor> pool;
  pool.reserve(tn.size());
  if (opts.order) {
    if (opts.order->size() != tn.size())
      throw InvalidArgument("contraction order must list every vertex once");
    VertexSet seen;
    for (const auto &id : *opts.order) {
      if (!seen.insert(id).second)
        throw InvalidArgument("vertex '" + id + "' listed twice in contraction order");
      pool.push_back(tn.edge_labeled(tn.vertex_index(id)));
    }
    DenseTensor acc = pool.front();
    for (std::size_t k = 1; k < pool.size(); ++k)
      acc = contract_checked(acc, pool[k], opts.cap);
    return acc.permuted(ids_of(out_legs));
  }

  for (std::size_t i = 0; i < tn.size(); ++i)
    pool.push_back(tn.edge_labeled(i));

  // Greedy: contract the connected pair with the smallest result; fall back
  // to an outer product of the two smallest tensors when nothing is shared.
  while (pool.size() > 1) {
    std::size_t bi = 0, bj = 1;
    std::size_t best = static_cast<std::size_t>(-1);
    bool connected = false;
    for (std::size_t i = 0; i < pool.size(); ++i)
      for (std::size_t j = i + 1; j < pool.size(); ++j) {
        const auto pairs = shared_legs(pool[i], pool[j]);
        if (pairs.empty())
          continue;
        const auto v = result_volume(pool[i], pool[j], pairs);
        if (!connected || v < best) {
          best = v;
          bi = i;
          bj = j;
          connected = true;
        }
      }
    if (!connected) {
      std::vector<std::size_t> idx(pool.size());
      for (std::size_t k = 0; k < idx.size(); ++k)
        idx[k] = k;
      std::stable_sort(idx.begin(), idx.end(),
                       [&](std::size_t x, std::size_t y) { return pool[x].size() < pool[y].size(); });
      bi = std::min(idx[0], idx[1]);
      bj = std::max(idx[0], idx[1]);
    }
    auto merged = contract_checked(pool[bi], pool[bj], opts.cap);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(bj));
    pool[bi] = std::move(merged);
  }
  return pool.front().permuted(ids_of(out_legs));
}

TensorNetwork sub_network(const TensorNetwork &tn, const VertexSet &vset) {
  if (vset.empty())
    throw InvalidArgument("sub_network needs a nonempty vertex set");
  for (const auto &v : vset)
    if (!tn.has_vertex(v))
      throw VertexNotFound("vertex '" + v + "' not in network");

  std::vector<Vertex> vertices;
  for (const auto &v : tn.vertices())
    if (vset.count(v.id))
      vertices.push_back(v);
  std::vector<ContractedEdge> edges;
  std::vector<OpenLeg> open;
  for (const auto &e : tn.edges()) {
    const bool ina = vset.count(e.a.vertex) > 0;
    const bool inb = vset.count(e.b.vertex) > 0;
    if (ina && inb)
      edges.push_back(e);
    else if (ina)
      open.push_back({e.id, e.a.vertex, e.a.leg});
    else if (inb)
      open.push_back({e.id, e.b.vertex, e.b.leg});
  }
  for (const auto &o : tn.open_legs())
    if (vset.count(o.vertex))
      open.push_back(o);
  return TensorNetwork(std::move(vertices), std::move(edges), std::move(open));
}

std::size_t EnvironmentMatrix::identity_dim() const {
  std::size_t d = 1;
  for (const auto &l : identity_legs)
    d *= l.dim;
  return d;
}

double EnvironmentMatrix::spectral_norm(const PowerIterationOptions &opts) const {
  return tncond::spectral_norm(n_block, opts);
}

double EnvironmentMatrix::frobenius_norm() const {
  return n_block.matrix.norm() * std::sqrt(static_cast<double>(identity_dim()));
}

Matricization EnvironmentMatrix::materialize(std::size_t cap) const {
  Matricization eye;
  eye.row_legs = identity_legs;
  eye.col_legs = identity_legs;
  const auto d = static_cast<Eigen::Index>(identity_dim());
  eye.matrix = Matrix::Identity(d, d);
  return kron(n_block, eye, cap);
}

std::vector<LegId> EnvironmentMatrix::row_ids() const { return ids_of(n_block.row_legs); }
std::vector<LegId> EnvironmentMatrix::col_ids() const { return ids_of(n_block.col_legs); }
std::vector<LegId> EnvironmentMatrix::identity_ids() const { return ids_of(identity_legs); }

DenseTensor EnvironmentMatrix::apply(const DenseTensor &x) const {
  LegPairs pairs;
  for (const auto &id : col_ids())
    pairs.emplace_back(id, id);
  auto y = contract_pair(environment, x, pairs);
  auto order = row_ids();
  const auto ids = identity_ids();
  order.insert(order.end(), ids.begin(), ids.end());
  return y.permuted(order);
}

DenseTensor EnvironmentMatrix::apply_adjoint(const DenseTensor &y) const {
  LegPairs pairs;
  for (const auto &id : row_ids())
    pairs.emplace_back(id, id);
  auto x = contract_pair(environment, y, pairs);
  auto order = col_ids();
  const auto ids = identity_ids();
  order.insert(order.end(), ids.begin(), ids.end());
  return x.permuted(order);
}

EnvironmentMatrix environment_matrix(const TensorNetwork &tn, const VertexSet &vset, std::size_t cap) {
  if (vset.empty())
    throw InvalidArgument("environment of an empty vertex set");
  VertexSet complement;
  for (const auto &v : tn.vertices())
    if (!vset.count(v.id))
      complement.insert(v.id);
  for (const auto &v : vset)
    if (!tn.has_vertex(v))
      throw VertexNotFound("vertex '" + v + "' not in network");

  EnvironmentMatrix env;
  env.identity_legs = tn.sorted_open_legs(vset);

  std::vector<Leg> rows, cols;
  if (complement.empty()) {
    env.environment = DenseTensor::scalar(1.0);
  } else {
    const auto rest = sub_network(tn, complement);
    rows = tn.sorted_open_legs(complement);
    std::set<EdgeId> row_ids;
    for (const auto &l : rows)
      row_ids.insert(l.id);
    for (const auto &l : rest.sorted_open_legs())
      if (!row_ids.count(l.id))
        cols.push_back(l);
    const auto t = contract_network(rest, {cap, std::nullopt});
    auto order = ids_of(rows);
    const auto cids = ids_of(cols);
    order.insert(order.end(), cids.begin(), cids.end());
    env.environment = t.permuted(order);
  }
  const auto rids = ids_of(rows);
  const auto cids = ids_of(cols);
  env.n_block = matricize(env.environment, rids, cids);
  return env;
}

MatvecCheck verify_matvec_identity(const TensorNetwork &tn, const VertexSet &vset, double tol,
                                   std::size_t cap) {
  return verify_matvec_identity(tn, vset, environment_matrix(tn, vset, cap), tol, cap);
}

MatvecCheck verify_matvec_identity(const TensorNetwork &tn, const VertexSet &vset,
                                   const EnvironmentMatrix &env, double tol, std::size_t cap) {
  const auto full = contract_network(tn, {cap, std::nullopt});
  const auto sub = contract_network(sub_network(tn, vset), {cap, std::nullopt});

  auto full_order = env.row_ids();
  auto sub_order = env.col_ids();
  for (const auto &id : env.identity_ids()) {
    full_order.push_back(id);
    sub_order.push_back(id);
  }
  MatvecCheck check;
  DenseTensor lhs, rhs_in;
  try {
    lhs = full.permuted(full_order);
    rhs_in = sub.permuted(sub_order);
  } catch (const Error &) {
    return check; // leg sets disagree with the supplied environment
  }
  const auto m = env.materialize(cap);
  if (static_cast<std::size_t>(m.cols()) != rhs_in.size() || static_cast<std::size_t>(m.rows()) != lhs.size())
    return check;
  const Vector x = Eigen::Map<const Vector>(rhs_in.data().data(), static_cast<Eigen::Index>(rhs_in.size()));
  const Vector want = Eigen::Map<const Vector>(lhs.data().data(), static_cast<Eigen::Index>(lhs.size()));
  const Vector got = m.matrix * x;
  const double scale = std::max(want.norm(), std::numeric_limits<double>::min());
  check.relative_deviation = (got - want).norm() / scale;
  check.holds = check.relative_deviation <= tol;
  return check;
}

bool is_canonical(const TensorNetwork &tn, const VertexId &center, double tol, std::size_t cap) {
  const auto env = environment_matrix(tn, {center}, cap);
  const auto &n = env.n_block.matrix;
  if (n.rows() < n.cols())
    return false;
  const Matrix gram = n.transpose() * n;
  const Matrix diff = gram - Matrix::Identity(gram.rows(), gram.cols());
  return diff.size() == 0 || diff.cwiseAbs().maxCoeff() <= tol;
}

} // namespace tncond
