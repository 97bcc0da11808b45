#include "tncond/conditioning.hpp"

#include "tncond/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tncond {

namespace {

double dot(const DenseTensor &a, const DenseTensor &b) {
  const auto ids = a.leg_ids();
  const DenseTensor bb = b.leg_ids() == ids ? b : b.permuted(ids);
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    s += a[k] * bb[k];
  return s;
}

std::vector<EnvironmentMatrix> single_site_environments(const TensorNetwork &tn, std::size_t cap) {
  std::vector<EnvironmentMatrix> envs;
  envs.reserve(tn.size());
  for (const auto &v : tn.vertices())
    envs.push_back(environment_matrix(tn, {v.id}, cap));
  return envs;
}

DenseTensor normalized(DenseTensor t) {
  const double n = frobenius_norm(t);
  if (n > 0.0)
    t *= 1.0 / n;
  return t;
}

struct Run {
  double value = 0.0;
  std::vector<DenseTensor> a;
  std::vector<bool> frozen;
  int iterations = 0;
  bool converged = false;
};

class Solver {
public:
  Solver(const TensorNetwork &tn, const std::vector<double> &eps, const WorstCaseOptions &opts)
      : tn_(tn), eps_(eps), opts_(opts), envs_(single_site_environments(tn, opts.cap)) {
    out_legs_ = tn.sorted_open_legs();
    for (const auto &l : out_legs_)
      out_ids_.push_back(l.id);
    for (std::size_t i = 0; i < tn.size(); ++i) {
      block_legs_.push_back(tn.edge_labeled(i).legs());
      norms_.push_back(envs_[i].spectral_norm());
    }
  }

  const std::vector<double> &norms() const { return norms_; }

  DenseTensor forward(const std::vector<DenseTensor> &a) const {
    auto y = DenseTensor::zeros(out_legs_);
    for (std::size_t i = 0; i < a.size(); ++i)
      if (eps_[i] > 0.0)
        y += envs_[i].apply(a[i]).permuted(out_ids_);
    return y;
  }

  DenseTensor adjoint(std::size_t i, const DenseTensor &r) const {
    return envs_[i].apply_adjoint(r);
  }

  /// aᵢ ← εᵢ Mᵢᵀr / ‖Mᵢᵀr‖ for every block.
  void step(const DenseTensor &r, Run &run, std::size_t restart) const {
    for (std::size_t i = 0; i < tn_.size(); ++i) {
      if (eps_[i] == 0.0) {
        run.a[i] = DenseTensor::zeros(block_legs_[i]);
        continue;
      }
      auto g = adjoint(i, r);
      const double gn = frobenius_norm(g);
      if (gn <= 1e-14 * std::max(norms_[i], std::numeric_limits<double>::min())) {
        if (!run.frozen[i]) {
          run.frozen[i] = true;
          run.a[i] = eps_[i] * normalized(random_tensor(block_legs_[i], UniformDist{},
                                                        derive_seed(opts_.seed, {restart, i, 1})));
        }
        continue;
      }
      run.frozen[i] = false;
      g *= eps_[i] / gn;
      run.a[i] = std::move(g);
    }
  }

  Run solve(std::size_t restart) const {
    Run run;
    run.a.resize(tn_.size());
    run.frozen.assign(tn_.size(), false);
    DenseTensor r = DenseTensor::zeros(out_legs_);
    if (restart == 0) {
      for (auto &x : r.data())
        x = 1.0;
      r = normalized(std::move(r));
    } else {
      r = normalized(random_tensor(out_legs_, UniformDist{}, derive_seed(opts_.seed, {restart, 0})));
    }
    step(r, run, restart);
    auto y = forward(run.a);
    run.value = frobenius_norm(y);
    for (int it = 1; it <= opts_.max_iter; ++it) {
      run.iterations = it;
      if (run.value == 0.0) {
        run.converged = true;
        return run;
      }
      y *= 1.0 / run.value;
      Run next = run;
      step(y, next, restart);
      auto y_next = forward(next.a);
      const double v = frobenius_norm(y_next);
      if (v < run.value) {
        // Monotone in exact arithmetic; a decrease is rounding noise at the optimum.
        run.converged = run.value - v <= 1e-12 * run.value;
        return run;
      }
      const bool done = v - run.value <= opts_.tol * v;
      next.iterations = it;
      run = std::move(next);
      run.value = v;
      y = std::move(y_next);
      if (done) {
        run.converged = true;
        return run;
      }
    }
    return run;
  }

  void finish(const Run &run, WorstCaseReport &rep) const {
    const auto y = forward(run.a);
    rep.multipliers.assign(tn_.size(), 0.0);
    double res2 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < tn_.size(); ++i) {
      if (eps_[i] == 0.0)
        continue;
      auto g = adjoint(i, y);
      const double mu = dot(run.a[i], g) / (eps_[i] * eps_[i]);
      rep.multipliers[i] = mu;
      g2 += std::pow(frobenius_norm(g), 2);
      auto resid = g;
      resid -= mu * run.a[i];
      res2 += std::pow(frobenius_norm(resid), 2);
    }
    rep.kkt_residual = g2 > 0.0 ? std::sqrt(res2 / g2) : 0.0;
    rep.argmax_perturbation.model = ExplicitModel{};
    for (std::size_t i = 0; i < tn_.size(); ++i) {
      const auto &id = tn_.vertices()[i].id;
      rep.argmax_perturbation.entries.emplace(id, tn_.vertex_labeled(i, run.a[i]));
      if (run.frozen[i])
        rep.frozen_blocks.push_back(id);
    }
  }

private:
  const TensorNetwork &tn_;
  const std::vector<double> &eps_;
  const WorstCaseOptions &opts_;
  std::vector<EnvironmentMatrix> envs_;
  std::vector<Leg> out_legs_;
  std::vector<LegId> out_ids_;
  std::vector<std::vector<Leg>> block_legs_;
  std::vector<double> norms_;
};

void check_eps(const TensorNetwork &tn, const std::vector<double> &eps) {
  if (eps.size() != tn.size())
    throw InvalidArgument("expected " + std::to_string(tn.size()) + " per-site radii, got " +
                          std::to_string(eps.size()));
  for (double e : eps)
    if (!(e >= 0.0) || !std::isfinite(e))
      throw InvalidPerturbationBudget("per-site radii must be finite and nonnegative");
}

} // namespace

std::vector<double> site_environment_norms(const TensorNetwork &tn, std::size_t cap,
                                           const PowerIterationOptions &power) {
  std::vector<double> out;
  out.reserve(tn.size());
  for (const auto &v : tn.vertices())
    out.push_back(environment_matrix(tn, {v.id}, cap).spectral_norm(power));
  return out;
}

ConditionNumbers condition_numbers(const TensorNetwork &tn, std::size_t cap,
                                   const PowerIterationOptions &power) {
  if (tn.size() == 0)
    throw InvalidArgument("condition numbers of an empty network");
  ConditionNumbers c;
  c.site_norms = site_environment_norms(tn, cap, power);
  const auto it = std::max_element(c.site_norms.begin(), c.site_norms.end());
  c.kappa_abs = *it;
  c.site_norm_argmax = tn.vertices()[static_cast<std::size_t>(it - c.site_norms.begin())].id;
  double site_sum = 0.0;
  for (const auto &v : tn.vertices())
    site_sum += frobenius_norm(v.tensor);
  const double total = frobenius_norm(contract_network(tn, {cap, std::nullopt}));
  c.kappa_rel = total > 0.0 ? site_sum / total * c.kappa_abs : INFINITY;
  return c;
}

double worst_case_bound(const TensorNetwork &tn, const std::vector<double> &eps, std::size_t cap) {
  check_eps(tn, eps);
  double s = 0.0;
  for (std::size_t i = 0; i < tn.size(); ++i)
    if (eps[i] > 0.0)
      s += eps[i] * environment_matrix(tn, {tn.vertices()[i].id}, cap).spectral_norm();
  return s;
}

WorstCaseReport worst_case_solve(const TensorNetwork &tn, const std::vector<double> &eps,
                                 const WorstCaseOptions &opts) {
  check_eps(tn, eps);
  if (!opts.dependent.empty())
    throw InvalidArgument("perturbation sets with dependent vertices are not supported");
  if (opts.restarts < 1 || opts.max_iter < 1)
    throw InvalidArgument("restarts and max_iter must be positive");

  const Solver solver(tn, eps, opts);
  WorstCaseReport rep;
  rep.per_site_norms = solver.norms();
  for (std::size_t i = 0; i < tn.size(); ++i)
    rep.bound += eps[i] * rep.per_site_norms[i];

  Run best;
  bool any_converged = false;
  for (int k = 0; k < opts.restarts; ++k) {
    auto run = solver.solve(static_cast<std::size_t>(k));
    any_converged = any_converged || run.converged;
    if (k == 0 || run.value > best.value) {
      best = std::move(run);
      rep.best_restart = k;
    }
  }
  if (!any_converged)
    throw ConvergenceError("worst-case solver did not converge in " + std::to_string(opts.max_iter) +
                               " iterations",
                           best.value);
  rep.solved_value = best.value;
  rep.iterations = best.iterations;
  solver.finish(best, rep);
  return rep;
}

TensorNetwork entrywise_normalize(const TensorNetwork &tn) {
  TensorNetwork out = tn;
  for (const auto &v : tn.vertices()) {
    const double n = frobenius_norm(v.tensor);
    if (!(n > 0.0))
      throw DegenerateSite("vertex '" + v.id + "' has zero norm");
    const double scale = std::sqrt(static_cast<double>(v.tensor.size())) / n;
    out = out.with_tensor(v.id, scale * v.tensor);
  }
  return out;
}

double total_environment_frobenius_sq(const TensorNetwork &tn, std::size_t cap) {
  double s = 0.0;
  for (const auto &v : tn.vertices())
    s += std::pow(environment_matrix(tn, {v.id}, cap).frobenius_norm(), 2);
  return s;
}

double average_case_error(const TensorNetwork &tn, const AverageCaseMode &mode, std::size_t cap) {
  double scale2 = 0.0;
  const TensorNetwork *net = &tn;
  TensorNetwork normalized_tn;
  if (const auto *m = std::get_if<UniformVarianceMode>(&mode)) {
    scale2 = m->sigma * m->sigma;
  } else {
    const double e = std::get<EpsRelativeMode>(mode).eps;
    scale2 = e * e;
    normalized_tn = entrywise_normalize(tn);
    net = &normalized_tn;
  }
  if (scale2 == 0.0)
    return 0.0;
  const double t2 = std::pow(frobenius_norm(contract_network(*net, {cap, std::nullopt})), 2);
  if (!(t2 > 0.0))
    throw DegenerateSite("network contracts to zero");
  return scale2 * total_environment_frobenius_sq(*net, cap) / t2;
}

} // namespace tncond
