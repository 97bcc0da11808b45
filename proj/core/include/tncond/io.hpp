#pragma once

#include "tncond/experiments.hpp"
#include "tncond/mps.hpp"
#include "tncond/peps.hpp"
#include "tncond/perturb.hpp"

#include <string>
#include <string_view>

namespace tncond {

/// Network description:
///
///   {"vertices": [{"id": "A", "legs": [{"leg": "i", "dim": 2}, ...],
///                  "data": [..] | "inline" | {"random": {"dist": "uniform", "seed": 1}}}],
///    "edges": [{"id": "e", "a": ["A", "i"], "b": ["B", "j"]}],
///    "open":  [{"id": "o", "v": "A", "leg": "k"}],
///    "topology": {"kind": "mps", ...}}                      (optional)
///
/// "inline" reads the numbers from a sibling "values" array. Random dists:
/// "uniform" (with optional "lo", "hi") and "centered" (with "sigma").
/// Every failure is an IoError whose message starts with `context`.
TensorNetwork parse_network(std::string_view text, const std::string &context = "<string>");
TensorNetwork load_network(const std::string &path);
std::string network_to_json(const TensorNetwork &tn, int indent = 2);
void save_network(const TensorNetwork &tn, const std::string &path);

/// Chain embedded in the network format with
/// "topology": {"kind": "mps", "n": .., "center": ..}.
std::string mps_to_json(const Mps &m, int indent = 2);
Mps parse_mps(std::string_view text, const std::string &context = "<string>");
Mps load_mps(const std::string &path);
/// Rebuilds a chain from network vertices named as Mps::vertex_id.
Mps mps_from_network(const TensorNetwork &tn, std::optional<std::size_t> center = std::nullopt);

/// Grid embedded with "topology": {"kind": "peps", "rows": .., "cols": ..}.
std::string peps_to_json(const Peps &p, int indent = 2);
Peps parse_peps(std::string_view text, const std::string &context = "<string>");
Peps load_peps(const std::string &path);

/// {"model": {"kind": "eps", "eps": ..} | {"kind": "variance", "sigma2": ..} | {"kind": "explicit"},
///  "entries": [{"v": "A", "legs": [...], "data": [...]}]}
std::string perturbation_to_json(const PerturbationSet &p, int indent = 2);
PerturbationSet parse_perturbation(std::string_view text, const std::string &context = "<string>");
PerturbationSet load_perturbation(const std::string &path);

/// Keys: study, N, D, p, samples, perturbations, eps, sigma, seed,
/// keep_raw, paper_scale. Missing keys take the study's defaults.
ExperimentConfig parse_experiment_config(std::string_view text, const std::string &context = "<string>");
ExperimentConfig load_experiment_config(const std::string &path);

/// Whole file; IoError names the path on failure.
std::string read_text_file(const std::string &path);
void write_text_file(const std::string &path, const std::string &text);

} // namespace tncond
