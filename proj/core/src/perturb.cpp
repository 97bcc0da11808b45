#include "tncond/perturb.hpp"

#include "tncond/rng.hpp"

#include <cmath>

namespace tncond {

PerturbationSet PerturbationSet::scaled(double t) const {
  PerturbationSet out;
  out.model = ExplicitModel{};
  for (const auto &[id, d] : entries)
    out.entries.emplace(id, t * d);
  return out;
}

PerturbationSet sample_eps_perturbation(const TensorNetwork &tn, double eps, std::uint64_t seed,
                                        bool saturate) {
  if (!(eps >= 0.0))
    throw InvalidArgument("eps must be nonnegative");
  PerturbationSet pset;
  pset.model = EpsRelativeModel{eps};
  for (std::size_t i = 0; i < tn.size(); ++i) {
    const auto &v = tn.vertices()[i];
    Rng rng(derive_seed(seed, {i}));
    auto d = random_tensor(v.tensor.legs(), UniformDist{-1.0, 1.0}, rng.next());
    const double dn = frobenius_norm(d);
    double radius = eps * frobenius_norm(v.tensor);
    if (!saturate)
      radius *= rng.uniform();
    d *= dn > 0.0 ? radius / dn : 0.0;
    pset.entries.emplace(v.id, std::move(d));
  }
  return pset;
}

PerturbationSet sample_variance_perturbation(const TensorNetwork &tn, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0))
    throw InvalidArgument("sigma must be nonnegative");
  PerturbationSet pset;
  pset.model = EntryVarianceModel{sigma * sigma};
  for (std::size_t i = 0; i < tn.size(); ++i) {
    const auto &v = tn.vertices()[i];
    pset.entries.emplace(v.id, random_tensor(v.tensor.legs(), CenteredUniformDist{sigma},
                                             derive_seed(seed, {i})));
  }
  return pset;
}

void validate_perturbation(const TensorNetwork &tn, const PerturbationSet &pset) {
  for (const auto &[id, d] : pset.entries) {
    const auto &t = tn.tensor(id);
    if (d.order() != t.order())
      throw DimensionError("perturbation of vertex '" + id + "' has the wrong order");
    for (const auto &l : t.legs())
      if (!d.has_leg(l.id) || d.dim(l.id) != l.dim)
        throw DimensionError("perturbation of vertex '" + id + "' does not match leg '" + l.id + "'");
    if (const auto *m = std::get_if<EpsRelativeModel>(&pset.model)) {
      const double limit = m->eps * frobenius_norm(t);
      if (frobenius_norm(d) > limit * (1.0 + 1e-12) + 1e-300)
        throw InvalidPerturbationBudget("perturbation of vertex '" + id + "' exceeds eps-relative radius");
    }
  }
}

TensorNetwork apply_perturbation(const TensorNetwork &tn, const PerturbationSet &pset) {
  validate_perturbation(tn, pset);
  TensorNetwork out = tn;
  for (const auto &[id, d] : pset.entries)
    out = out.with_tensor(id, tn.tensor(id) + d);
  return out;
}

ErrorMeasure measure_error(const TensorNetwork &tn, const PerturbationSet &pset, std::size_t cap) {
  const auto t = contract_network(tn, {cap, std::nullopt});
  auto diff = contract_network(apply_perturbation(tn, pset), {cap, std::nullopt});
  diff -= t;
  ErrorMeasure e;
  e.abs = frobenius_norm(diff);
  const double tn_norm = frobenius_norm(t);
  e.rel = tn_norm > 0.0 ? e.abs / tn_norm : (e.abs == 0.0 ? 0.0 : INFINITY);
  return e;
}

} // namespace tncond
