#include "tncond/io.hpp"

#include "tncond/rng.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace tncond {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string &context, const std::string &msg) { throw IoError(context + ": " + msg); }

json parse_json(std::string_view text, const std::string &context) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error &e) {
    fail(context, std::string("malformed JSON: ") + e.what());
  }
}

template <class T> T get(const json &j, const char *key, const std::string &context) {
  if (!j.is_object() || !j.contains(key))
    fail(context, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception &) {
    fail(context, std::string("field '") + key + "' has the wrong type");
  }
}

std::vector<Leg> parse_legs(const json &arr, const std::string &context) {
  if (!arr.is_array())
    fail(context, "'legs' must be an array");
  std::vector<Leg> legs;
  for (const auto &l : arr) {
    const auto id = get<std::string>(l, "leg", context);
    const auto dim = get<long long>(l, "dim", context);
    if (dim <= 0)
      fail(context, "leg '" + id + "' must have a positive dimension");
    legs.push_back({id, static_cast<std::size_t>(dim)});
  }
  return legs;
}

std::vector<double> parse_values(const json &arr, std::size_t expected, const std::string &context) {
  if (!arr.is_array())
    fail(context, "data must be an array of numbers");
  std::vector<double> v;
  v.reserve(arr.size());
  for (const auto &x : arr) {
    if (!x.is_number())
      fail(context, "data entries must be numbers");
    v.push_back(x.get<double>());
  }
  if (v.size() != expected)
    fail(context, "expected " + std::to_string(expected) + " data entries, got " + std::to_string(v.size()));
  return v;
}

DenseTensor parse_tensor_data(const json &vj, std::vector<Leg> legs, const std::string &context) {
  std::size_t volume = 0;
  try {
    volume = checked_volume(legs);
  } catch (const Error &e) {
    fail(context, e.what());
  }
  if (!vj.contains("data"))
    fail(context, "missing field 'data'");
  const json &data = vj.at("data");
  if (data.is_array())
    return DenseTensor(std::move(legs), parse_values(data, volume, context));
  if (data.is_string()) {
    if (data.get<std::string>() != "inline")
      fail(context, "string data must be \"inline\"");
    if (!vj.contains("values"))
      fail(context, "\"inline\" data needs a sibling 'values' array");
    return DenseTensor(std::move(legs), parse_values(vj.at("values"), volume, context));
  }
  if (data.is_object() && data.contains("random")) {
    const json &r = data.at("random");
    const auto seed = get<std::uint64_t>(r, "seed", context);
    const std::string dist = r.contains("dist") ? get<std::string>(r, "dist", context) : "uniform";
    Distribution d;
    if (dist == "uniform")
      d = UniformDist{r.value("lo", -1.0), r.value("hi", 1.0)};
    else if (dist == "centered")
      d = CenteredUniformDist{r.value("sigma", 1.0)};
    else
      fail(context, "unknown distribution '" + dist + "'");
    return random_tensor(std::move(legs), d, seed);
  }
  fail(context, "data must be a number array, \"inline\" or {\"random\": ...}");
}

json legs_json(const DenseTensor &t) {
  json legs = json::array();
  for (const auto &l : t.legs())
    legs.push_back({{"leg", l.id}, {"dim", l.dim}});
  return legs;
}

json data_json(const DenseTensor &t) {
  json data = json::array();
  for (double x : t.data())
    data.push_back(x);
  return data;
}

json network_json(const TensorNetwork &tn) {
  json j;
  j["vertices"] = json::array();
  for (const auto &v : tn.vertices())
    j["vertices"].push_back({{"id", v.id}, {"legs", legs_json(v.tensor)}, {"data", data_json(v.tensor)}});
  j["edges"] = json::array();
  for (const auto &e : tn.edges())
    j["edges"].push_back({{"id", e.id}, {"a", {e.a.vertex, e.a.leg}}, {"b", {e.b.vertex, e.b.leg}}});
  j["open"] = json::array();
  for (const auto &o : tn.open_legs())
    j["open"].push_back({{"id", o.id}, {"v", o.vertex}, {"leg", o.leg}});
  return j;
}

Endpoint parse_endpoint(const json &e, const char *key, const std::string &context) {
  if (!e.contains(key) || !e.at(key).is_array() || e.at(key).size() != 2 || !e.at(key)[0].is_string() ||
      !e.at(key)[1].is_string())
    fail(context, std::string("edge field '") + key + "' must be [vertex, leg]");
  return {e.at(key)[0].get<std::string>(), e.at(key)[1].get<std::string>()};
}

TensorNetwork network_from_json(const json &j, const std::string &context) {
  if (!j.is_object())
    fail(context, "top level must be an object");
  if (!j.contains("vertices") || !j.at("vertices").is_array())
    fail(context, "missing 'vertices' array");
  std::vector<Vertex> vertices;
  for (const auto &vj : j.at("vertices")) {
    const auto id = get<std::string>(vj, "id", context);
    const std::string where = context + ": vertex '" + id + "'";
    if (!vj.contains("legs"))
      fail(where, "missing field 'legs'");
    vertices.push_back({id, parse_tensor_data(vj, parse_legs(vj.at("legs"), where), where)});
  }
  std::vector<ContractedEdge> edges;
  if (j.contains("edges")) {
    if (!j.at("edges").is_array())
      fail(context, "'edges' must be an array");
    for (const auto &ej : j.at("edges"))
      edges.push_back(
          {get<std::string>(ej, "id", context), parse_endpoint(ej, "a", context), parse_endpoint(ej, "b", context)});
  }
  std::vector<OpenLeg> open;
  if (j.contains("open")) {
    if (!j.at("open").is_array())
      fail(context, "'open' must be an array");
    for (const auto &oj : j.at("open"))
      open.push_back(
          {get<std::string>(oj, "id", context), get<std::string>(oj, "v", context), get<std::string>(oj, "leg", context)});
  }
  try {
    return TensorNetwork(std::move(vertices), std::move(edges), std::move(open));
  } catch (const Error &e) {
    fail(context, std::string(e.kind()) + ": " + e.what());
  }
}

// Adds any of `order` the tensor lacks as dimension-1 legs, then permutes.
DenseTensor pad_legs(const DenseTensor &t, const std::vector<LegId> &order) {
  std::vector<Leg> legs = t.legs();
  for (const auto &id : order)
    if (!t.has_leg(id))
      legs.push_back({id, 1});
  return t.reshaped(std::move(legs)).permuted(order);
}

const json &topology(const json &j, const char *kind, const std::string &context) {
  if (!j.contains("topology") || !j.at("topology").is_object())
    fail(context, "missing 'topology' object");
  const json &t = j.at("topology");
  if (get<std::string>(t, "kind", context) != kind)
    fail(context, std::string("topology kind must be '") + kind + "'");
  return t;
}

std::string dump(const json &j, int indent) { return j.dump(indent) + "\n"; }

} // namespace

std::string read_text_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError(path + ": cannot open file (not found or unreadable)");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad())
    throw IoError(path + ": read failed");
  return ss.str();
}

void write_text_file(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError(path + ": cannot open file for writing");
  out << text;
  if (!out)
    throw IoError(path + ": write failed");
}

TensorNetwork parse_network(std::string_view text, const std::string &context) {
  return network_from_json(parse_json(text, context), context);
}

TensorNetwork load_network(const std::string &path) { return parse_network(read_text_file(path), path); }

std::string network_to_json(const TensorNetwork &tn, int indent) { return dump(network_json(tn), indent); }

void save_network(const TensorNetwork &tn, const std::string &path) { write_text_file(path, network_to_json(tn)); }

std::string mps_to_json(const Mps &m, int indent) {
  json j = network_json(m.to_network());
  j["topology"] = {{"kind", "mps"}, {"n", m.size()}};
  if (m.center())
    j["topology"]["center"] = *m.center();
  return dump(j, indent);
}

Mps mps_from_network(const TensorNetwork &tn, std::optional<std::size_t> center) {
  std::vector<DenseTensor> sites;
  for (std::size_t j = 0; j < tn.size(); ++j) {
    const auto id = Mps::vertex_id(j);
    if (!tn.has_vertex(id))
      throw IoError("chain vertex '" + id + "' is missing");
    sites.push_back(pad_legs(tn.tensor(id), {"l", "p", "r"}));
  }
  try {
    return Mps(std::move(sites), center);
  } catch (const Error &e) {
    throw IoError(std::string("invalid chain: ") + e.kind() + ": " + e.what());
  }
}

Mps parse_mps(std::string_view text, const std::string &context) {
  const json j = parse_json(text, context);
  const json &t = topology(j, "mps", context);
  const TensorNetwork tn = network_from_json(j, context);
  if (get<std::size_t>(t, "n", context) != tn.size())
    fail(context, "topology n disagrees with the vertex count");
  std::optional<std::size_t> center;
  if (t.contains("center"))
    center = get<std::size_t>(t, "center", context);
  try {
    return mps_from_network(tn, center);
  } catch (const IoError &e) {
    fail(context, e.what());
  }
}

Mps load_mps(const std::string &path) { return parse_mps(read_text_file(path), path); }

std::string peps_to_json(const Peps &p, int indent) {
  json j = network_json(p.to_network());
  j["topology"] = {{"kind", "peps"}, {"rows", p.rows()}, {"cols", p.cols()}};
  return dump(j, indent);
}

Peps parse_peps(std::string_view text, const std::string &context) {
  const json j = parse_json(text, context);
  const json &t = topology(j, "peps", context);
  const TensorNetwork tn = network_from_json(j, context);
  const auto rows = get<std::size_t>(t, "rows", context);
  const auto cols = get<std::size_t>(t, "cols", context);
  std::vector<DenseTensor> sites;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t c = 0; c < cols; ++c) {
      const auto id = Peps::vertex_id(i, c);
      if (!tn.has_vertex(id))
        fail(context, "grid vertex '" + id + "' is missing");
      sites.push_back(pad_legs(tn.tensor(id), {"u", "d", "l", "r", "p"}));
    }
  if (tn.size() != rows * cols)
    fail(context, "topology size disagrees with the vertex count");
  try {
    return Peps(rows, cols, std::move(sites));
  } catch (const Error &e) {
    fail(context, std::string(e.kind()) + ": " + e.what());
  }
}

Peps load_peps(const std::string &path) { return parse_peps(read_text_file(path), path); }

std::string perturbation_to_json(const PerturbationSet &p, int indent) {
  json j;
  std::visit(
      [&](const auto &m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, EpsRelativeModel>)
          j["model"] = {{"kind", "eps"}, {"eps", m.eps}};
        else if constexpr (std::is_same_v<M, EntryVarianceModel>)
          j["model"] = {{"kind", "variance"}, {"sigma2", m.sigma2}};
        else
          j["model"] = {{"kind", "explicit"}};
      },
      p.model);
  j["entries"] = json::array();
  for (const auto &[v, t] : p.entries)
    j["entries"].push_back({{"v", v}, {"legs", legs_json(t)}, {"data", data_json(t)}});
  return dump(j, indent);
}

PerturbationSet parse_perturbation(std::string_view text, const std::string &context) {
  const json j = parse_json(text, context);
  PerturbationSet p;
  if (j.contains("model")) {
    const json &m = j.at("model");
    const auto kind = get<std::string>(m, "kind", context);
    if (kind == "eps")
      p.model = EpsRelativeModel{get<double>(m, "eps", context)};
    else if (kind == "variance")
      p.model = EntryVarianceModel{get<double>(m, "sigma2", context)};
    else if (kind == "explicit")
      p.model = ExplicitModel{};
    else
      fail(context, "unknown perturbation model '" + kind + "'");
  }
  if (!j.contains("entries") || !j.at("entries").is_array())
    fail(context, "missing 'entries' array");
  for (const auto &e : j.at("entries")) {
    const auto v = get<std::string>(e, "v", context);
    const std::string where = context + ": entry '" + v + "'";
    if (!e.contains("legs"))
      fail(where, "missing field 'legs'");
    if (!p.entries.emplace(v, parse_tensor_data(e, parse_legs(e.at("legs"), where), where)).second)
      fail(where, "duplicate entry");
  }
  return p;
}

PerturbationSet load_perturbation(const std::string &path) { return parse_perturbation(read_text_file(path), path); }

ExperimentConfig parse_experiment_config(std::string_view text, const std::string &context) {
  const json j = parse_json(text, context);
  if (!j.is_object())
    fail(context, "config must be an object");
  Study study;
  try {
    study = parse_study(get<std::string>(j, "study", context));
  } catch (const InvalidArgument &e) {
    fail(context, e.what());
  }
  ExperimentConfig c = default_config(study, j.value("paper_scale", false));
  auto sizes = [&](const char *key, std::vector<std::size_t> &out) {
    if (j.contains(key))
      out = get<std::vector<std::size_t>>(j, key, context);
  };
  sizes("N", c.n_list);
  sizes("D", c.d_list);
  if (j.contains("p"))
    c.phys = get<std::size_t>(j, "p", context);
  if (j.contains("samples"))
    c.samples = get<std::size_t>(j, "samples", context);
  if (j.contains("perturbations"))
    c.perturbations = get<std::size_t>(j, "perturbations", context);
  if (j.contains("eps"))
    c.eps = get<double>(j, "eps", context);
  if (j.contains("sigma"))
    c.sigma = get<double>(j, "sigma", context);
  if (j.contains("seed"))
    c.seed = get<std::uint64_t>(j, "seed", context);
  if (j.contains("keep_raw"))
    c.keep_raw = get<bool>(j, "keep_raw", context);
  try {
    c.validate();
  } catch (const InvalidArgument &e) {
    fail(context, e.what());
  }
  return c;
}

ExperimentConfig load_experiment_config(const std::string &path) {
  return parse_experiment_config(read_text_file(path), path);
}

} // namespace tncond
