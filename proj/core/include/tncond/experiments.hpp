#pragma once

#include "tncond/errors.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tncond {

enum class Study {
  CenterPerturb,
  CenterPerturbUncapped,
  AllSite,
  AllSiteUncapped,
  AverageCase,
  Truncation,
  EnergyQuadratic,
};

std::string_view study_name(Study s);
/// Throws InvalidArgument for an unknown name.
Study parse_study(std::string_view name);
std::vector<Study> all_studies();

/// Grid and sampling parameters of one study.
///
/// For energy-quadratic, `n_list` holds matrix sizes and `d_list` the
/// exponents k of the perturbation norms t = 10^-k. Uncapped studies
/// ignore `d_list`.
struct ExperimentConfig {
  Study study = Study::CenterPerturb;
  std::vector<std::size_t> n_list;
  std::vector<std::size_t> d_list;
  std::size_t phys = 2;
  std::size_t samples = 50;
  std::size_t perturbations = 100;
  double eps = 1e-4;
  double sigma = 1e-3;
  std::uint64_t seed = 0;
  bool keep_raw = false;

  /// Throws InvalidArgument on an empty grid or non-positive size.
  void validate() const;
};

/// Desk-scale defaults; `paper_scale` selects the long-running grid.
ExperimentConfig default_config(Study s, bool paper_scale = false);

struct Summary {
  double mean = 0.0;
  double q025 = 0.0;
  double q10 = 0.0;
  double q90 = 0.0;
  double q975 = 0.0;
};

/// Mean and linearly interpolated quantiles. Empty input gives NaNs.
Summary summarize(std::vector<double> values);

struct StudyRow {
  std::size_t n = 0;
  std::size_t d = 0;
  std::string statistic;
  Summary summary;
  std::size_t count = 0;
  std::map<std::string, double> extras;
  std::vector<double> raw;
};

struct StudyResult {
  Study study = Study::CenterPerturb;
  std::vector<StudyRow> rows;
  std::size_t dropped = 0;
  std::size_t bound_checks = 0;
  std::size_t bound_violations = 0;
  /// max over checks of (measured − bound) / bound.
  double worst_bound_excess = -1.0;
  std::map<std::string, double> extras;

  const StudyRow *find(std::size_t n, std::size_t d, std::string_view statistic) const;
};

StudyResult run_center_perturb(const ExperimentConfig &cfg);
StudyResult run_all_site(const ExperimentConfig &cfg);
StudyResult run_average_case(const ExperimentConfig &cfg);
StudyResult run_truncation(const ExperimentConfig &cfg);
StudyResult run_energy_quadratic(const ExperimentConfig &cfg);
StudyResult run_study(const ExperimentConfig &cfg);

/// Long format, header `study,N,D,stat,value`. Row stats are named
/// "<statistic>.<field>"; study-level counters use N = D = 0 and the
/// statistic "study".
std::string to_csv(const StudyResult &r);
StudyResult parse_csv(std::string_view text);
void emit_csv(const StudyResult &r, const std::string &path);

/// Line chart: one series per N (or per statistic), mean markers with
/// 80% and 95% quantile bars.
std::string to_svg(const StudyResult &r);
void emit_svg(const StudyResult &r, const std::string &path);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

} // namespace tncond
