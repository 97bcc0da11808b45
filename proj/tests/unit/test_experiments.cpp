#include "tncond/errors.hpp"
#include "tncond/experiments.hpp"
#include "tncond/parallel.hpp"
#include "tncond/rng.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>

using namespace tncond;

namespace {

ExperimentConfig small(Study s) {
  ExperimentConfig c = default_config(s);
  c.seed = 3;
  switch (s) {
  case Study::CenterPerturb:
    c.n_list = {6};
    c.d_list = {2, 4};
    c.samples = 4;
    break;
  case Study::CenterPerturbUncapped:
  case Study::AllSiteUncapped:
    c.n_list = {4, 6};
    c.samples = 3;
    c.perturbations = 5;
    break;
  case Study::AllSite:
    c.n_list = {5};
    c.d_list = {2};
    c.samples = 3;
    c.perturbations = 5;
    break;
  case Study::AverageCase:
    c.d_list = {2, 3};
    c.samples = 50;
    break;
  case Study::Truncation:
    c.n_list = {5};
    c.d_list = {4};
    c.samples = 3;
    break;
  case Study::EnergyQuadratic:
    c.n_list = {6};
    c.samples = 3;
    c.perturbations = 5;
    break;
  }
  return c;
}

struct ThreadsEnv {
  explicit ThreadsEnv(const char *v) { setenv("TNCOND_THREADS", v, 1); }
  ~ThreadsEnv() { unsetenv("TNCOND_THREADS"); }
};

} // namespace

TEST(Experiments, StudyNamesRoundTrip) {
  for (auto s : all_studies())
    EXPECT_EQ(parse_study(study_name(s)), s);
  EXPECT_THROW(parse_study("bogus"), InvalidArgument);
}

TEST(Experiments, SummaryQuantileOrdering) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + rng.index(50));
    for (auto &x : v)
      x = rng.uniform(-5.0, 5.0) * (trial % 3 == 0 ? 1e-9 : 1.0);
    const auto s = summarize(v);
    EXPECT_LE(s.q025, s.q10);
    EXPECT_LE(s.q10, s.q90);
    EXPECT_LE(s.q90, s.q975);
    EXPECT_LE(s.q025, s.mean + 1e-12);
    EXPECT_LE(s.mean, s.q975 + 1e-12);
  }
  EXPECT_TRUE(std::isnan(summarize({}).mean));
}

TEST(Experiments, ConfigValidation) {
  auto c = small(Study::Truncation);
  c.samples = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = small(Study::Truncation);
  c.d_list = {0};
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Experiments, EmptyResultIsHeaderOnly) {
  StudyResult r;
  EXPECT_EQ(to_csv(r), "study,N,D,stat,value\n");
  EXPECT_TRUE(parse_csv(to_csv(r)).rows.empty());
}

TEST(Experiments, CsvRoundTripEveryStudy) {
  for (auto s : all_studies()) {
    const auto r = run_study(small(s));
    const auto csv = to_csv(r);
    const auto back = parse_csv(csv);
    EXPECT_EQ(to_csv(back), csv) << study_name(s);
    ASSERT_EQ(back.rows.size(), r.rows.size());
    for (std::size_t k = 0; k < r.rows.size(); ++k) {
      EXPECT_EQ(back.rows[k].summary.mean, r.rows[k].summary.mean);
      EXPECT_EQ(back.rows[k].count, r.rows[k].count);
      EXPECT_EQ(back.rows[k].extras, r.rows[k].extras);
    }
    EXPECT_EQ(back.bound_checks, r.bound_checks);
  }
}

TEST(Experiments, FormatDoubleRoundTrips) {
  Rng rng(2);
  for (int k = 0; k < 1000; ++k) {
    const double v = std::ldexp(rng.uniform(-1.0, 1.0), static_cast<int>(rng.index(200)) - 100);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(Experiments, SvgShape) {
  for (auto s : all_studies()) {
    const auto svg = to_svg(run_study(small(s)));
    EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
    EXPECT_NE(svg.find("<svg"), std::string::npos);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    EXPECT_EQ(svg.find("nan"), std::string::npos) << study_name(s);
  }
}

TEST(Experiments, DeterministicAcrossThreadCounts) {
  for (auto s : all_studies()) {
    std::string one, four;
    {
      ThreadsEnv env("1");
      one = to_csv(run_study(small(s)));
    }
    {
      ThreadsEnv env("4");
      four = to_csv(run_study(small(s)));
    }
    EXPECT_EQ(one, four) << study_name(s);
  }
}

TEST(Experiments, ProductStateCenterRatioIsOne) {
  auto c = small(Study::CenterPerturb);
  c.d_list = {1};
  const auto r = run_center_perturb(c);
  EXPECT_NEAR(r.rows.at(0).summary.mean, 1.0, 1e-12);
}

TEST(Experiments, BondOneAllSiteRatiosNearOne) {
  auto c = small(Study::AllSite);
  c.d_list = {1};
  const auto r = run_all_site(c);
  EXPECT_NEAR(r.rows.at(0).summary.mean, 1.0, 1e-6);
}

TEST(Experiments, AverageCaseZeroSigma) {
  auto c = small(Study::AverageCase);
  c.sigma = 0.0;
  const auto r = run_average_case(c);
  for (const auto &row : r.rows) {
    EXPECT_EQ(row.summary.mean, 0.0);
    EXPECT_EQ(row.extras.at("theory"), 0.0);
  }
}

TEST(Experiments, TruncationZeroEps) {
  auto c = small(Study::Truncation);
  c.eps = 0.0;
  EXPECT_EQ(run_truncation(c).rows.at(0).summary.mean, 0.0);
}

TEST(Experiments, BoundChecksHold) {
  for (auto s : all_studies()) {
    const auto r = run_study(small(s));
    EXPECT_GT(r.bound_checks, 0u) << study_name(s);
    EXPECT_EQ(r.bound_violations, 0u) << study_name(s);
    EXPECT_EQ(r.dropped, 0u);
  }
}

TEST(Experiments, KeepRaw) {
  auto c = small(Study::Truncation);
  c.keep_raw = true;
  const auto r = run_truncation(c);
  EXPECT_EQ(r.rows.at(0).raw.size(), c.samples);
}

TEST(Parallel, CoversEveryIndexOnce) {
  ThreadsEnv env("3");
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), [&](std::size_t i) { ++hits[i]; });
  for (const auto &h : hits)
    EXPECT_EQ(h.load(), 1);
}

TEST(Parallel, RethrowsLowestFailure) {
  ThreadsEnv env("4");
  try {
    parallel_for(100, [](std::size_t i) {
      if (i == 17 || i == 60)
        throw InvalidArgument(std::to_string(i));
    });
    FAIL();
  } catch (const InvalidArgument &e) {
    EXPECT_STREQ(e.what(), "17");
  }
}
