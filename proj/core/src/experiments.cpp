#include "tncond/experiments.hpp"

#include "tncond/conditioning.hpp"
#include "tncond/mps.hpp"
#include "tncond/parallel.hpp"
#include "tncond/perturb.hpp"
#include "tncond/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace tncond {

namespace {

constexpr std::pair<Study, std::string_view> kStudyNames[] = {
    {Study::CenterPerturb, "center-perturb"},
    {Study::CenterPerturbUncapped, "center-perturb-uncapped"},
    {Study::AllSite, "all-site"},
    {Study::AllSiteUncapped, "all-site-uncapped"},
    {Study::AverageCase, "average-case"},
    {Study::Truncation, "truncation"},
    {Study::EnergyQuadratic, "energy-quadratic"},
};

constexpr std::string_view kSummaryFields[] = {"mean", "q025", "q10", "q90", "q975", "count"};

bool is_uncapped(Study s) { return s == Study::CenterPerturbUncapped || s == Study::AllSiteUncapped; }

std::size_t uncapped_bond(std::size_t n, std::size_t p) {
  std::size_t d = 1;
  for (std::size_t k = 0; k < n / 2; ++k)
    d *= p;
  return d;
}

struct BoundTally {
  std::size_t checks = 0;
  std::size_t violations = 0;
  double worst = -1.0;

  // Pass when measured ≤ bound + 10ε²·bound.
  void check(double measured, double bound, double eps) {
    ++checks;
    const double excess = bound > 0.0 ? (measured - bound) / bound : (measured > 0.0 ? 1.0 : -1.0);
    worst = std::max(worst, excess);
    if (measured > bound * (1.0 + 10.0 * eps * eps))
      ++violations;
  }
  void merge(const BoundTally &o) {
    checks += o.checks;
    violations += o.violations;
    worst = std::max(worst, o.worst);
  }
};

StudyRow make_row(std::size_t n, std::size_t d, std::string statistic, std::vector<double> values, bool keep_raw) {
  StudyRow row;
  row.n = n;
  row.d = d;
  row.statistic = std::move(statistic);
  row.count = values.size();
  if (keep_raw)
    row.raw = values;
  row.summary = summarize(std::move(values));
  return row;
}

void finish(StudyResult &r, const BoundTally &t) {
  r.bound_checks = t.checks;
  r.bound_violations = t.violations;
  r.worst_bound_excess = t.worst;
}

// Per-sample outcome; `ok == false` marks a dropped sample.
struct SampleOut {
  bool ok = false;
  std::vector<double> values;
  BoundTally tally;
  double extra = 0.0;
};

Mps strip_center(const Mps &m) { return Mps(m.sites()); }

std::vector<DenseTensor> only_site(std::vector<DenseTensor> deltas, std::size_t keep) {
  for (std::size_t j = 0; j < deltas.size(); ++j)
    if (j != keep)
      deltas[j] = DenseTensor();
  return deltas;
}

// R for centre c, plus the measured single-site checks at ε.
SampleOut center_sample(const Mps &m, const std::vector<std::size_t> &centers, double eps, std::uint64_t seed) {
  SampleOut out;
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const std::size_t c = centers[k];
    const double eg = single_site_bound(m, c, 1.0);
    const Mps canon = canonicalize(m, c);
    const double ec = single_site_bound(strip_center(canon), c, 1.0);
    out.values.push_back(eg);
    out.extra = std::max(out.extra, std::abs(ec - 1.0));

    const auto dt = only_site(sample_site_perturbation(m, eps, derive_seed(seed, {k, 0})), c);
    out.tally.check(mps_error(m, perturbed(m, dt)).rel, eg * eps, eps);
    const auto dc = only_site(sample_site_perturbation(canon, eps, derive_seed(seed, {k, 1})), c);
    out.tally.check(mps_error(canon, perturbed(canon, dc)).rel, eps, eps);
  }
  out.ok = true;
  return out;
}

template <class Sampler>
std::vector<SampleOut> run_samples(std::size_t count, Sampler &&sampler) {
  std::vector<SampleOut> outs(count);
  parallel_for(count, [&](std::size_t s) {
    try {
      outs[s] = sampler(s);
    } catch (const ConvergenceError &) {
      outs[s].ok = false;
    }
  });
  return outs;
}

// Gathers value k of every kept sample; counts drops and tallies bounds.
std::vector<double> collect(const std::vector<SampleOut> &outs, std::size_t k) {
  std::vector<double> v;
  for (const auto &o : outs)
    if (o.ok)
      v.push_back(o.values.at(k));
  return v;
}

void absorb(StudyResult &r, BoundTally &tally, const std::vector<SampleOut> &outs) {
  for (const auto &o : outs) {
    if (o.ok)
      tally.merge(o.tally);
    else
      ++r.dropped;
  }
}

double max_extra(const std::vector<SampleOut> &outs) {
  double e = 0.0;
  for (const auto &o : outs)
    if (o.ok)
      e = std::max(e, o.extra);
  return e;
}

TensorNetwork triangle(std::size_t d, std::uint64_t seed) {
  std::vector<Vertex> vs;
  const char *names[] = {"A", "B", "C"};
  for (std::size_t v = 0; v < 3; ++v)
    vs.push_back({names[v], random_tensor({{"l", d}, {"r", d}}, UniformDist{0.0, 1.0}, derive_seed(seed, {v}))});
  std::vector<ContractedEdge> es = {
      {"e0", {"A", "r"}, {"B", "l"}},
      {"e1", {"B", "r"}, {"C", "l"}},
      {"e2", {"C", "r"}, {"A", "l"}},
  };
  return TensorNetwork(std::move(vs), std::move(es), {});
}

double quantile_sorted(const std::vector<double> &v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return v[lo] + w * (v[hi] - v[lo]);
}

} // namespace

std::string_view study_name(Study s) {
  for (const auto &[k, name] : kStudyNames)
    if (k == s)
      return name;
  return "unknown";
}

Study parse_study(std::string_view name) {
  for (const auto &[k, n] : kStudyNames)
    if (n == name)
      return k;
  throw InvalidArgument("unknown study '" + std::string(name) + "'");
}

std::vector<Study> all_studies() {
  std::vector<Study> out;
  for (const auto &[k, name] : kStudyNames)
    out.push_back(k);
  return out;
}

void ExperimentConfig::validate() const {
  if (samples < 1)
    throw InvalidArgument("samples must be >= 1");
  if (n_list.empty())
    throw InvalidArgument("N list is empty");
  if (!is_uncapped(study) && d_list.empty())
    throw InvalidArgument("D list is empty");
  for (auto n : n_list)
    if (n == 0)
      throw InvalidArgument("N values must be positive");
  for (auto d : d_list)
    if (d == 0)
      throw InvalidArgument("D values must be positive");
  if (phys == 0)
    throw InvalidArgument("p must be positive");
  if ((study == Study::AllSite || study == Study::AllSiteUncapped || study == Study::AverageCase ||
       study == Study::EnergyQuadratic) &&
      perturbations < 1)
    throw InvalidArgument("perturbations must be >= 1");
  if (!(eps >= 0.0) || !(sigma >= 0.0))
    throw InvalidArgument("eps and sigma must be non-negative");
  if (study == Study::CenterPerturb || study == Study::CenterPerturbUncapped || study == Study::AllSite ||
      study == Study::AllSiteUncapped || study == Study::Truncation)
    for (auto n : n_list)
      if (n < 2)
        throw InvalidArgument("MPS studies need N >= 2");
  if (study == Study::CenterPerturbUncapped)
    for (auto n : n_list)
      if (n < 3)
        throw InvalidArgument("uncapped centre study needs N >= 3");
}

ExperimentConfig default_config(Study s, bool paper_scale) {
  ExperimentConfig c;
  c.study = s;
  switch (s) {
  case Study::CenterPerturb:
    c.n_list = paper_scale ? std::vector<std::size_t>{32, 48, 64, 80} : std::vector<std::size_t>{16};
    c.d_list = paper_scale ? std::vector<std::size_t>{8, 16, 32, 64, 128} : std::vector<std::size_t>{8, 16, 32};
    c.samples = paper_scale ? 300 : 50;
    break;
  case Study::CenterPerturbUncapped:
    c.n_list = paper_scale ? std::vector<std::size_t>{4, 6, 8, 10, 12, 14, 16}
                           : std::vector<std::size_t>{4, 6, 8, 10, 12};
    c.samples = paper_scale ? 300 : 50;
    break;
  case Study::AllSite:
    c.n_list = paper_scale ? std::vector<std::size_t>{8, 12, 16} : std::vector<std::size_t>{8, 12};
    c.d_list = paper_scale ? std::vector<std::size_t>{4, 8, 16, 32, 64} : std::vector<std::size_t>{4, 8};
    c.samples = paper_scale ? 100 : 30;
    c.perturbations = paper_scale ? 200 : 100;
    break;
  case Study::AllSiteUncapped:
    c.n_list = paper_scale ? std::vector<std::size_t>{4, 6, 8, 10, 12, 14, 16}
                           : std::vector<std::size_t>{4, 6, 8, 10, 12};
    c.samples = paper_scale ? 100 : 30;
    c.perturbations = paper_scale ? 200 : 100;
    break;
  case Study::AverageCase:
    c.n_list = {3};
    c.d_list = {2, 4, 8, 16};
    c.samples = 2000;
    c.perturbations = 2000;
    c.sigma = 1e-3;
    break;
  case Study::Truncation:
    c.n_list = paper_scale ? std::vector<std::size_t>{8, 12, 16} : std::vector<std::size_t>{8};
    c.d_list = paper_scale ? std::vector<std::size_t>{8, 16, 32} : std::vector<std::size_t>{16};
    c.samples = 20;
    break;
  case Study::EnergyQuadratic:
    c.n_list = {8, 16, 32, 64};
    c.d_list = {2, 3, 4};
    c.samples = 25;
    c.perturbations = 100;
    break;
  }
  return c;
}

Summary summarize(std::vector<double> values) {
  Summary s;
  if (values.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, nan, nan, nan};
  }
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values)
    sum += v;
  s.mean = sum / static_cast<double>(values.size());
  s.q025 = quantile_sorted(values, 0.025);
  s.q10 = quantile_sorted(values, 0.10);
  s.q90 = quantile_sorted(values, 0.90);
  s.q975 = quantile_sorted(values, 0.975);
  return s;
}

const StudyRow *StudyResult::find(std::size_t n, std::size_t d, std::string_view statistic) const {
  for (const auto &row : rows)
    if (row.n == n && row.d == d && row.statistic == statistic)
      return &row;
  return nullptr;
}

StudyResult run_center_perturb(const ExperimentConfig &cfg) {
  cfg.validate();
  StudyResult r;
  r.study = cfg.study;
  BoundTally tally;
  const bool uncapped = cfg.study == Study::CenterPerturbUncapped;
  for (std::size_t n : cfg.n_list) {
    const std::vector<std::size_t> bonds =
        uncapped ? std::vector<std::size_t>{uncapped_bond(n, cfg.phys)} : cfg.d_list;
    for (std::size_t d : bonds) {
      const std::size_t mid = n / 2 - 1;
      const std::vector<std::size_t> centers = uncapped ? std::vector<std::size_t>{mid, 1}
                                                        : std::vector<std::size_t>{mid};
      const auto outs = run_samples(cfg.samples, [&](std::size_t s) {
        const std::uint64_t seed = derive_seed(cfg.seed, {n, d, s});
        const Mps m = normalized(random_mps(n, d, cfg.phys, derive_seed(seed, {0})));
        return center_sample(m, centers, cfg.eps, derive_seed(seed, {1}));
      });
      absorb(r, tally, outs);
      auto row = make_row(n, d, uncapped ? "R_mid" : "R", collect(outs, 0), cfg.keep_raw);
      row.extras["ec_dev"] = max_extra(outs);
      r.rows.push_back(std::move(row));
      if (uncapped)
        r.rows.push_back(make_row(n, d, "R_second", collect(outs, 1), cfg.keep_raw));
    }
  }
  finish(r, tally);
  return r;
}

StudyResult run_all_site(const ExperimentConfig &cfg) {
  cfg.validate();
  StudyResult r;
  r.study = cfg.study;
  BoundTally tally;
  const bool uncapped = cfg.study == Study::AllSiteUncapped;
  for (std::size_t n : cfg.n_list) {
    const std::vector<std::size_t> bonds =
        uncapped ? std::vector<std::size_t>{uncapped_bond(n, cfg.phys)} : cfg.d_list;
    for (std::size_t d : bonds) {
      const auto outs = run_samples(cfg.samples, [&](std::size_t s) {
        const std::uint64_t seed = derive_seed(cfg.seed, {n, d, s});
        const Mps m = normalized(random_mps(n, d, cfg.phys, derive_seed(seed, {0})));
        const Mps c = canonicalize(m, n / 2 - 1);
        const double bound_t = all_site_bound_general(m, cfg.eps);
        const double bound_c = all_site_bound_general(strip_center(c), cfg.eps);
        SampleOut out;
        double worst = 0.0;
        double mean_ratio = 0.0;
        for (std::size_t k = 0; k < cfg.perturbations; ++k) {
          const std::uint64_t ks = derive_seed(seed, {1, k});
          const double et = mps_error(m, perturbed(m, sample_site_perturbation(m, cfg.eps, ks))).rel;
          const double ec = mps_error(c, perturbed(c, sample_site_perturbation(c, cfg.eps, ks))).rel;
          out.tally.check(et, bound_t, cfg.eps);
          out.tally.check(ec, bound_c, cfg.eps);
          const double ratio = et / ec;
          worst = std::max(worst, ratio);
          mean_ratio += ratio;
        }
        out.values = {worst};
        out.extra = mean_ratio / static_cast<double>(cfg.perturbations);
        out.ok = true;
        return out;
      });
      absorb(r, tally, outs);
      auto row = make_row(n, d, "R", collect(outs, 0), cfg.keep_raw);
      double mean_ratio = 0.0;
      std::size_t kept = 0;
      for (const auto &o : outs)
        if (o.ok) {
          mean_ratio += o.extra;
          ++kept;
        }
      row.extras["mean_pair_ratio"] = kept ? mean_ratio / static_cast<double>(kept) : 0.0;
      r.rows.push_back(std::move(row));
    }
  }
  finish(r, tally);
  return r;
}

StudyResult run_average_case(const ExperimentConfig &cfg) {
  cfg.validate();
  StudyResult r;
  r.study = cfg.study;
  BoundTally tally;
  for (std::size_t d : cfg.d_list) {
    const std::uint64_t seed = derive_seed(cfg.seed, {d});
    const TensorNetwork tn = triangle(d, derive_seed(seed, {0}));
    const double theory = average_case_error(tn, UniformVarianceMode{cfg.sigma});
    const auto norms = site_environment_norms(tn);
    const auto outs = run_samples(cfg.samples, [&](std::size_t s) {
      SampleOut out;
      const auto pset = sample_variance_perturbation(tn, cfg.sigma, derive_seed(seed, {1, s}));
      const ErrorMeasure e = measure_error(tn, pset);
      double bound = 0.0;
      double eps_eff = 0.0;
      for (std::size_t i = 0; i < tn.size(); ++i) {
        const auto &v = tn.vertices()[i];
        const auto it = pset.entries.find(v.id);
        if (it == pset.entries.end())
          continue;
        const double dn = frobenius_norm(it->second);
        bound += dn * norms[i];
        eps_eff = std::max(eps_eff, dn / frobenius_norm(v.tensor));
      }
      out.tally.check(e.abs, bound, eps_eff);
      out.values = {e.rel * e.rel};
      out.ok = true;
      return out;
    });
    absorb(r, tally, outs);
    auto row = make_row(tn.size(), d, "Er2", collect(outs, 0), cfg.keep_raw);
    row.extras["theory"] = theory;
    row.extras["rel_gap"] = theory > 0.0 ? std::abs(row.summary.mean - theory) / theory : std::abs(row.summary.mean);
    r.rows.push_back(std::move(row));
  }
  finish(r, tally);
  return r;
}

StudyResult run_truncation(const ExperimentConfig &cfg) {
  cfg.validate();
  StudyResult r;
  r.study = cfg.study;
  BoundTally tally;
  for (std::size_t n : cfg.n_list)
    for (std::size_t d : cfg.d_list) {
      const auto outs = run_samples(cfg.samples, [&](std::size_t s) {
        SampleOut out;
        const std::uint64_t seed = derive_seed(cfg.seed, {n, d, s});
        const Mps m = normalized(random_mps(n, d, cfg.phys, seed));
        const auto res = truncate_all_with_canonicalization(m, std::vector<double>(n, cfg.eps));
        const double bound = static_cast<double>(n) * cfg.eps;
        out.tally.check(res.relative_error, bound, cfg.eps);
        out.values = {bound > 0.0 ? res.relative_error / bound : 0.0};
        std::size_t kept = 0;
        for (auto b : res.bonds_after)
          kept += b;
        out.extra = static_cast<double>(kept);
        out.ok = true;
        return out;
      });
      absorb(r, tally, outs);
      auto row = make_row(n, d, "ratio", collect(outs, 0), cfg.keep_raw);
      double total = 0.0;
      std::size_t cnt = 0;
      for (const auto &o : outs)
        if (o.ok) {
          total += o.extra;
          ++cnt;
        }
      row.extras["mean_bond_sum"] = cnt ? total / static_cast<double>(cnt) : 0.0;
      r.rows.push_back(std::move(row));
    }
  finish(r, tally);
  return r;
}

StudyResult run_energy_quadratic(const ExperimentConfig &cfg) {
  cfg.validate();
  StudyResult r;
  r.study = cfg.study;
  BoundTally tally;
  const std::size_t nt = cfg.d_list.size();
  for (std::size_t dim : cfg.n_list) {
    const auto outs = run_samples(cfg.samples, [&](std::size_t s) {
      SampleOut out;
      const std::uint64_t seed = derive_seed(cfg.seed, {dim, s});
      Rng rng(derive_seed(seed, {0}));
      Eigen::MatrixXd h(dim, dim);
      for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j <= i; ++j)
          h(i, j) = h(j, i) = rng.uniform(-1.0, 1.0);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
      const double energy = es.eigenvalues()(0);
      const Eigen::VectorXd x = es.eigenvectors().col(0);
      const double hnorm = es.eigenvalues().cwiseAbs().maxCoeff();
      // values laid out [k][perturbation]
      out.values.assign(nt * cfg.perturbations, 0.0);
      for (std::size_t q = 0; q < cfg.perturbations; ++q) {
        Rng dr(derive_seed(seed, {1, q}));
        Eigen::VectorXd dir(dim);
        for (std::size_t i = 0; i < dim; ++i)
          dir(i) = dr.uniform(-1.0, 1.0);
        dir.normalize();
        for (std::size_t k = 0; k < nt; ++k) {
          const double t = std::pow(10.0, -static_cast<double>(cfg.d_list[k]));
          Eigen::VectorXd y = x + t * dir;
          y.normalize();
          const double err = std::abs(y.dot(h * y) - energy);
          ++out.tally.checks;
          const double bound = t * t * (std::abs(energy) + hnorm);
          out.tally.worst = std::max(out.tally.worst, (err - bound) / bound);
          if (err > bound)
            ++out.tally.violations;
          out.values[k * cfg.perturbations + q] = err;
        }
      }
      out.ok = true;
      return out;
    });
    absorb(r, tally, outs);
    // Slope of mean log error against log t.
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < nt; ++k) {
      std::vector<double> errs;
      for (const auto &o : outs)
        if (o.ok)
          errs.insert(errs.end(), o.values.begin() + static_cast<std::ptrdiff_t>(k * cfg.perturbations),
                      o.values.begin() + static_cast<std::ptrdiff_t>((k + 1) * cfg.perturbations));
      double logs = 0.0;
      std::size_t pos = 0;
      for (double e : errs)
        if (e > 0.0) {
          logs += std::log10(e);
          ++pos;
        }
      if (pos > 0) {
        lx.push_back(-static_cast<double>(cfg.d_list[k]));
        ly.push_back(logs / static_cast<double>(pos));
      }
      r.rows.push_back(make_row(dim, cfg.d_list[k], "err", std::move(errs), cfg.keep_raw));
    }
    double slope = std::numeric_limits<double>::quiet_NaN();
    if (lx.size() >= 2) {
      double mx = 0.0, my = 0.0;
      for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
      }
      mx /= static_cast<double>(lx.size());
      my /= static_cast<double>(lx.size());
      double sxy = 0.0, sxx = 0.0;
      for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
      }
      slope = sxy / sxx;
    }
    r.rows.push_back(make_row(dim, 0, "slope", {slope}, cfg.keep_raw));
  }
  finish(r, tally);
  return r;
}

StudyResult run_study(const ExperimentConfig &cfg) {
  switch (cfg.study) {
  case Study::CenterPerturb:
  case Study::CenterPerturbUncapped:
    return run_center_perturb(cfg);
  case Study::AllSite:
  case Study::AllSiteUncapped:
    return run_all_site(cfg);
  case Study::AverageCase:
    return run_average_case(cfg);
  case Study::Truncation:
    return run_truncation(cfg);
  case Study::EnergyQuadratic:
    return run_energy_quadratic(cfg);
  }
  throw InvalidArgument("unknown study");
}

std::string format_double(double v) {
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view s) {
  if (s == "nan")
    return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf")
    return std::numeric_limits<double>::infinity();
  if (s == "-inf")
    return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw IoError("bad number '" + std::string(s) + "' in CSV");
  return v;
}

std::size_t parse_size(std::string_view s) {
  std::size_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw IoError("bad integer '" + std::string(s) + "' in CSV");
  return v;
}

void write_file(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out)
    throw IoError("write failed for '" + path + "'");
}

} // namespace

std::string to_csv(const StudyResult &r) {
  std::ostringstream os;
  os << "study,N,D,stat,value\n";
  const std::string name(study_name(r.study));
  auto line = [&](std::size_t n, std::size_t d, const std::string &stat, const std::string &value) {
    os << name << ',' << n << ',' << d << ',' << stat << ',' << value << '\n';
  };
  for (const auto &row : r.rows) {
    const std::string p = row.statistic + ".";
    line(row.n, row.d, p + "mean", format_double(row.summary.mean));
    line(row.n, row.d, p + "q025", format_double(row.summary.q025));
    line(row.n, row.d, p + "q10", format_double(row.summary.q10));
    line(row.n, row.d, p + "q90", format_double(row.summary.q90));
    line(row.n, row.d, p + "q975", format_double(row.summary.q975));
    line(row.n, row.d, p + "count", std::to_string(row.count));
    for (const auto &[k, v] : row.extras)
      line(row.n, row.d, p + k, format_double(v));
  }
  if (r.rows.empty() && r.extras.empty() && r.dropped == 0 && r.bound_checks == 0)
    return os.str();
  line(0, 0, "study.dropped", std::to_string(r.dropped));
  line(0, 0, "study.bound_checks", std::to_string(r.bound_checks));
  line(0, 0, "study.bound_violations", std::to_string(r.bound_violations));
  line(0, 0, "study.worst_bound_excess", format_double(r.worst_bound_excess));
  for (const auto &[k, v] : r.extras)
    line(0, 0, "study." + k, format_double(v));
  return os.str();
}

StudyResult parse_csv(std::string_view text) {
  StudyResult r;
  std::istringstream in{std::string(text)};
  std::string ln;
  if (!std::getline(in, ln) || ln != "study,N,D,stat,value")
    throw IoError("CSV header must be 'study,N,D,stat,value'");
  bool have_study = false;
  std::size_t lineno = 1;
  while (std::getline(in, ln)) {
    ++lineno;
    if (ln.empty())
      continue;
    std::vector<std::string> f;
    std::stringstream ls(ln);
    std::string cell;
    while (std::getline(ls, cell, ','))
      f.push_back(cell);
    if (f.size() != 5)
      throw IoError("CSV line " + std::to_string(lineno) + ": expected 5 fields");
    const Study s = parse_study(f[0]);
    if (have_study && s != r.study)
      throw IoError("CSV line " + std::to_string(lineno) + ": mixed studies");
    r.study = s;
    have_study = true;
    const std::size_t n = parse_size(f[1]);
    const std::size_t d = parse_size(f[2]);
    const auto dot = f[3].find('.');
    if (dot == std::string::npos)
      throw IoError("CSV line " + std::to_string(lineno) + ": stat must be '<statistic>.<field>'");
    const std::string stat = f[3].substr(0, dot);
    const std::string field = f[3].substr(dot + 1);
    if (stat == "study" && n == 0 && d == 0) {
      if (field == "dropped")
        r.dropped = parse_size(f[4]);
      else if (field == "bound_checks")
        r.bound_checks = parse_size(f[4]);
      else if (field == "bound_violations")
        r.bound_violations = parse_size(f[4]);
      else if (field == "worst_bound_excess")
        r.worst_bound_excess = parse_double(f[4]);
      else
        r.extras[field] = parse_double(f[4]);
      continue;
    }
    StudyRow *row = nullptr;
    for (auto &existing : r.rows)
      if (existing.n == n && existing.d == d && existing.statistic == stat)
        row = &existing;
    if (!row) {
      r.rows.push_back(StudyRow{n, d, stat, {}, 0, {}, {}});
      row = &r.rows.back();
    }
    if (field == "mean")
      row->summary.mean = parse_double(f[4]);
    else if (field == "q025")
      row->summary.q025 = parse_double(f[4]);
    else if (field == "q10")
      row->summary.q10 = parse_double(f[4]);
    else if (field == "q90")
      row->summary.q90 = parse_double(f[4]);
    else if (field == "q975")
      row->summary.q975 = parse_double(f[4]);
    else if (field == "count")
      row->count = parse_size(f[4]);
    else
      row->extras[field] = parse_double(f[4]);
  }
  return r;
}

void emit_csv(const StudyResult &r, const std::string &path) { write_file(path, to_csv(r)); }

namespace {

struct Series {
  std::string label;
  std::vector<const StudyRow *> points;
};

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
    case '<': out += "&lt;"; break;
    case '>': out += "&gt;"; break;
    case '&': out += "&amp;"; break;
    case '"': out += "&quot;"; break;
    default: out += c;
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

} // namespace

std::string to_svg(const StudyResult &r) {
  const Study s = r.study;
  const bool x_is_n = is_uncapped(s);
  const bool x_log2 = s == Study::CenterPerturb || s == Study::AllSite || s == Study::AverageCase ||
                      s == Study::Truncation;
  const bool y_log10 = s == Study::AverageCase || s == Study::EnergyQuadratic;

  std::vector<Series> series;
  auto series_for = [&](const std::string &label) -> Series & {
    for (auto &se : series)
      if (se.label == label)
        return se;
    series.push_back({label, {}});
    return series.back();
  };
  for (const auto &row : r.rows) {
    if (row.statistic == "slope" || row.count == 0 || std::isnan(row.summary.mean))
      continue;
    std::string label;
    if (x_is_n)
      label = row.statistic;
    else if (s == Study::AverageCase)
      label = "Monte Carlo";
    else if (s == Study::EnergyQuadratic)
      label = "dim " + std::to_string(row.n);
    else
      label = "N=" + std::to_string(row.n);
    series_for(label).points.push_back(&row);
  }

  auto xval = [&](const StudyRow &row) {
    const double x = static_cast<double>(x_is_n ? row.n : row.d);
    if (s == Study::EnergyQuadratic)
      return -x;
    return x_log2 ? std::log2(x) : x;
  };
  auto yval = [&](double y) { return y_log10 ? std::log10(std::max(y, 1e-300)) : y; };

  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  auto grow = [&](double x, double y) {
    if (first) {
      xmin = xmax = x;
      ymin = ymax = y;
      first = false;
    }
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  };
  for (const auto &se : series)
    for (const auto *p : se.points) {
      grow(xval(*p), yval(p->summary.q025));
      grow(xval(*p), yval(p->summary.q975));
      grow(xval(*p), yval(p->summary.mean));
      if (auto it = p->extras.find("theory"); it != p->extras.end())
        grow(xval(*p), yval(it->second));
    }
  if (xmax - xmin < 1e-12) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax - ymin < 1e-12) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const double w = 640, h = 420, left = 70, right = 150, top = 40, bottom = 60;
  const double pw = w - left - right, ph = h - top - bottom;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

  static const char *colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"};

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
     << ' ' << h << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\" font-family=\"sans-serif\">"
     << xml_escape(study_name(s)) << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";

  // Axis ticks at the distinct x positions and five y levels.
  std::set<double> xs;
  for (const auto &se : series)
    for (const auto *p : se.points)
      xs.insert(xval(*p));
  for (double x : xs) {
    double shown = x;
    if (s == Study::EnergyQuadratic)
      shown = std::pow(10.0, x);
    else if (x_log2)
      shown = std::exp2(x);
    os << "<line x1=\"" << fmt(px(x)) << "\" y1=\"" << fmt(top + ph) << "\" x2=\"" << fmt(px(x)) << "\" y2=\""
       << fmt(top + ph + 5) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fmt(px(x)) << "\" y=\"" << fmt(top + ph + 18)
       << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << tick_label(shown)
       << "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double y = ymin + (ymax - ymin) * i / 4.0;
    const double shown = y_log10 ? std::pow(10.0, y) : y;
    os << "<line x1=\"" << fmt(left - 5) << "\" y1=\"" << fmt(py(y)) << "\" x2=\"" << fmt(left) << "\" y2=\""
       << fmt(py(y)) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fmt(left - 8) << "\" y=\"" << fmt(py(y) + 4)
       << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << tick_label(shown) << "</text>\n";
  }
  std::string xlabel = x_is_n ? "N" : (s == Study::EnergyQuadratic ? "t" : "D");
  if (x_log2)
    xlabel += " (log2 scale)";
  if (s == Study::EnergyQuadratic)
    xlabel += " (log10 scale)";
  os << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(h - 15)
     << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">" << xml_escape(xlabel)
     << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto &se = series[k];
    const char *col = colors[k % std::size(colors)];
    std::string pts;
    for (const auto *p : se.points) {
      const double x = px(xval(*p));
      os << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(py(yval(p->summary.q025))) << "\" x2=\"" << fmt(x)
         << "\" y2=\"" << fmt(py(yval(p->summary.q975))) << "\" stroke=\"" << col << "\" stroke-width=\"1\"/>\n";
      os << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(py(yval(p->summary.q10))) << "\" x2=\"" << fmt(x)
         << "\" y2=\"" << fmt(py(yval(p->summary.q90))) << "\" stroke=\"" << col << "\" stroke-width=\"4\"/>\n";
      os << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(py(yval(p->summary.mean))) << "\" r=\"3.5\" fill=\""
         << col << "\"/>\n";
      pts += fmt(x) + "," + fmt(py(yval(p->summary.mean))) + " ";
    }
    os << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\"/>\n";
    const double ly = top + 15 + 18.0 * static_cast<double>(k);
    os << "<line x1=\"" << fmt(left + pw + 12) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(left + pw + 32)
       << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << col << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << fmt(left + pw + 38) << "\" y=\"" << fmt(ly + 4)
       << "\" font-size=\"12\" font-family=\"sans-serif\">" << xml_escape(se.label) << "</text>\n";
  }

  if (s == Study::AverageCase) {
    std::string pts;
    for (const auto &row : r.rows)
      if (auto it = row.extras.find("theory"); it != row.extras.end())
        pts += fmt(px(xval(row))) + "," + fmt(py(yval(it->second))) + " ";
    const double ly = top + 15 + 18.0 * static_cast<double>(series.size());
    os << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\"black\" stroke-dasharray=\"5,3\"/>\n";
    os << "<line x1=\"" << fmt(left + pw + 12) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(left + pw + 32)
       << "\" y2=\"" << fmt(ly) << "\" stroke=\"black\" stroke-dasharray=\"5,3\"/>\n";
    os << "<text x=\"" << fmt(left + pw + 38) << "\" y=\"" << fmt(ly + 4)
       << "\" font-size=\"12\" font-family=\"sans-serif\">theory</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void emit_svg(const StudyResult &r, const std::string &path) { write_file(path, to_svg(r)); }

} // namespace tncond
