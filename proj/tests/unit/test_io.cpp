#include "oracles.hpp"

#include "tncond/errors.hpp"
#include "tncond/io.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

using namespace tncond;

namespace {

std::string temp_path(const std::string &name) {
  return (std::filesystem::temp_directory_path() / ("tncond_io_" + name)).string();
}

} // namespace

TEST(Io, NetworkRoundTrip) {
  const auto tn = oracle::random_network(1);
  const auto back = parse_network(network_to_json(tn));
  ASSERT_EQ(back.size(), tn.size());
  for (const auto &v : tn.vertices())
    EXPECT_EQ(oracle::flat(back.tensor(v.id)), oracle::flat(v.tensor));
  EXPECT_EQ(oracle::flat(contract_network(back)), oracle::flat(contract_network(tn)));
}

TEST(Io, DataForms) {
  const std::string text = R"({
    "vertices": [
      {"id": "A", "legs": [{"leg": "k", "dim": 2}], "data": [1, 2]},
      {"id": "B", "legs": [{"leg": "k", "dim": 2}], "data": "inline", "values": [3, 4]},
      {"id": "C", "legs": [{"leg": "q", "dim": 3}], "data": {"random": {"dist": "uniform", "seed": 5}}}
    ],
    "edges": [{"id": "e", "a": ["A", "k"], "b": ["B", "k"]}],
    "open": [{"id": "o", "v": "C", "leg": "q"}]
  })";
  const auto tn = parse_network(text);
  EXPECT_EQ(oracle::flat(tn.tensor("B")), (std::vector<double>{3, 4}));
  EXPECT_EQ(oracle::flat(tn.tensor("C")),
            oracle::flat(random_tensor({{"q", 3}}, UniformDist{-1.0, 1.0}, 5)));
}

TEST(Io, LoaderValidatesInvariants) {
  const std::string dim_mismatch = R"({"vertices": [
      {"id": "A", "legs": [{"leg": "k", "dim": 2}], "data": [1, 2]},
      {"id": "B", "legs": [{"leg": "k", "dim": 3}], "data": [1, 2, 3]}],
    "edges": [{"id": "e", "a": ["A", "k"], "b": ["B", "k"]}]})";
  EXPECT_THROW(parse_network(dim_mismatch, "x.json"), IoError);
  const std::string short_data =
      R"({"vertices": [{"id": "A", "legs": [{"leg": "k", "dim": 2}], "data": [1]}], "open": [{"id": "o", "v": "A", "leg": "k"}]})";
  EXPECT_THROW(parse_network(short_data), IoError);
  EXPECT_THROW(parse_network("{not json"), IoError);
  EXPECT_THROW(parse_network(R"({"vertices": [{"id": "A", "legs": [{"leg": "k", "dim": 0}], "data": []}]})"),
               IoError);
}

TEST(Io, ErrorsCarryPath) {
  try {
    load_network("/nonexistent/dir/net.json");
    FAIL() << "expected IoError";
  } catch (const IoError &e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/net.json"), std::string::npos);
  }
}

TEST(Io, MpsRoundTripKeepsCenter) {
  const Mps m = canonicalize(random_mps(5, 3, 2, 2), 3);
  const Mps back = parse_mps(mps_to_json(m));
  EXPECT_EQ(back.center(), 3u);
  EXPECT_EQ(oracle::mps_state(back), oracle::mps_state(m));
  EXPECT_THROW(parse_mps(network_to_json(m.to_network())), IoError);
}

TEST(Io, PepsRoundTrip) {
  const Peps p = random_peps(2, 3, 2, 2, 3);
  const Peps back = parse_peps(peps_to_json(p));
  for (std::size_t k = 0; k < p.sites().size(); ++k)
    EXPECT_EQ(oracle::flat(back.sites()[k]), oracle::flat(p.sites()[k]));
}

TEST(Io, PerturbationRoundTrip) {
  const auto tn = oracle::random_network(4);
  const auto p = sample_eps_perturbation(tn, 1e-3, 9);
  const auto back = parse_perturbation(perturbation_to_json(p));
  ASSERT_TRUE(std::holds_alternative<EpsRelativeModel>(back.model));
  EXPECT_EQ(std::get<EpsRelativeModel>(back.model).eps, 1e-3);
  for (const auto &[id, t] : p.entries)
    EXPECT_EQ(oracle::flat(back.entries.at(id)), oracle::flat(t));
}

TEST(Io, FileRoundTrip) {
  const auto path = temp_path("net.json");
  const auto tn = oracle::random_network(5);
  save_network(tn, path);
  EXPECT_EQ(network_to_json(load_network(path)), network_to_json(tn));
  std::remove(path.c_str());
}

TEST(Io, ExperimentConfig) {
  const auto c = parse_experiment_config(R"({"study": "average-case", "D": [2, 4], "samples": 10, "seed": 3})");
  EXPECT_EQ(c.study, Study::AverageCase);
  EXPECT_EQ(c.d_list, (std::vector<std::size_t>{2, 4}));
  EXPECT_EQ(c.samples, 10u);
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.sigma, 1e-3);
  EXPECT_THROW(parse_experiment_config(R"({"study": "nope"})"), IoError);
  EXPECT_THROW(parse_experiment_config(R"({"study": "truncation", "samples": 0})"), IoError);
}
