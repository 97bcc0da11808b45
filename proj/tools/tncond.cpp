// tncond: command-line front end for contraction, condition numbers,
// perturbation bounds and the numerical studies.

#include "tncond/conditioning.hpp"
#include "tncond/experiments.hpp"
#include "tncond/io.hpp"
#include "tncond/mps.hpp"
#include "tncond/network.hpp"
#include "tncond/peps.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using nlohmann::json;
using namespace tncond;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitConvergence = 3;

struct Globals {
  std::uint64_t seed = 0;
  CLI::Option *seed_opt = nullptr;
  double tol = 0.0;
  CLI::Option *tol_opt = nullptr;
  std::size_t cap = kDefaultMaterializationCap;
  std::string out;
  std::string format;
};

std::uint64_t require_seed(const Globals &g, const std::string &cmd) {
  if (g.seed_opt->count() == 0)
    throw InvalidArgument("'" + cmd + "' is randomized and needs --seed");
  return g.seed;
}

double tol_or(const Globals &g, double fallback) { return g.tol_opt->count() ? g.tol : fallback; }

void require_format(const Globals &g, const std::string &allowed_default, std::initializer_list<const char *> ok) {
  if (g.format.empty())
    return;
  for (const char *f : ok)
    if (g.format == f)
      return;
  throw InvalidArgument("--format " + g.format + " is not available here (use " + allowed_default + ")");
}

void emit(const Globals &g, const std::string &text) {
  if (g.out.empty()) {
    std::cout << text;
    return;
  }
  write_text_file(g.out, text);
}

void emit_json(const Globals &g, const json &j) {
  require_format(g, "json", {"json"});
  emit(g, j.dump(2) + "\n");
}

std::string topology_kind(const std::string &path) {
  const std::string text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error &e) {
    throw IoError(path + ": malformed JSON: " + e.what());
  }
  if (j.is_object() && j.contains("topology") && j["topology"].is_object() && j["topology"].contains("kind") &&
      j["topology"]["kind"].is_string())
    return j["topology"]["kind"].get<std::string>();
  return "network";
}

std::vector<std::string> split_csv(const std::string &s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty())
      out.push_back(item);
  return out;
}

json legs_json(const std::vector<Leg> &legs) {
  json arr = json::array();
  for (const auto &l : legs)
    arr.push_back({{"leg", l.id}, {"dim", l.dim}});
  return arr;
}

// ε-relative radii ε‖T⁽ⁱ⁾‖_F in vertex order.
std::vector<double> relative_radii(const TensorNetwork &tn, double eps) {
  std::vector<double> r;
  for (const auto &v : tn.vertices())
    r.push_back(eps * frobenius_norm(v.tensor));
  return r;
}

std::string one_line(std::string s) {
  for (auto &c : s)
    if (c == '\n' || c == '\r')
      c = ' ';
  return s;
}

std::string describe_all(CLI::App &app) {
  std::ostringstream os;
  os << "\nCommand reference:\n";
  auto list_opts = [&](const CLI::App *sub, const std::string &prefix) {
    os << "  " << prefix;
    for (const auto *o : sub->get_options()) {
      if (o->get_name() == "--help" || o->get_name() == "-h,--help")
        continue;
      const std::string name = o->get_name(false, true);
      os << (o->get_positional() ? " <" + name + ">" : " [" + name + "]");
    }
    os << "\n";
  };
  for (const auto *sub : app.get_subcommands({})) {
    const auto nested = sub->get_subcommands({});
    if (nested.empty()) {
      list_opts(sub, sub->get_name());
      continue;
    }
    for (const auto *n : nested)
      list_opts(n, sub->get_name() + " " + n->get_name());
  }
  os << "\nGlobal flags: --seed --tol --cap --out --format {csv|json|svg}\n"
     << "Exit codes: 0 success, 2 validation error, 3 convergence failure.\n"
     << "TNCOND_THREADS caps worker threads for experiments.\n";
  return os.str();
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Tensor network condition numbers and perturbation bounds", "tncond"};
  app.require_subcommand(1);
  Globals g;
  g.seed_opt = app.add_option("--seed", g.seed, "Root seed (required by randomized commands)");
  g.tol_opt = app.add_option("--tol", g.tol, "Tolerance of the iterative method or check");
  app.add_option("--cap", g.cap, "Largest number of entries any step may materialize")->capture_default_str();
  app.add_option("--out", g.out, "Write the result here instead of standard output");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json", "svg"}));

  std::string file;
  std::function<void()> action;

  auto *contract = app.add_subcommand("contract", "Contract a network and print the output tensor");
  contract->add_option("file", file, "Network JSON")->required();
  contract->callback([&] {
    action = [&] {
      const TensorNetwork tn = load_network(file);
      const DenseTensor t = contract_network(tn, {g.cap, std::nullopt});
      json j;
      j["legs"] = legs_json(t.legs());
      j["frobenius_norm"] = frobenius_norm(t);
      j["data"] = std::vector<double>(t.data().begin(), t.data().end());
      emit_json(g, j);
    };
  });

  auto *cond = app.add_subcommand("cond", "Absolute and relative condition numbers");
  cond->add_option("file", file, "Network JSON")->required();
  cond->callback([&] {
    action = [&] {
      const std::uint64_t seed = require_seed(g, "cond");
      const TensorNetwork tn = load_network(file);
      PowerIterationOptions power;
      power.tol = tol_or(g, power.tol);
      power.restart_seed = seed;
      const ConditionNumbers c = condition_numbers(tn, g.cap, power);
      json j;
      j["kappa_abs"] = c.kappa_abs;
      j["kappa_rel"] = c.kappa_rel;
      j["argmax_vertex"] = c.site_norm_argmax;
      j["site_norms"] = json::object();
      for (std::size_t i = 0; i < tn.size(); ++i)
        j["site_norms"][tn.vertices()[i].id] = c.site_norms[i];
      emit_json(g, j);
    };
  });

  auto *bound = app.add_subcommand("bound", "First-order perturbation bounds");
  bound->require_subcommand(1);
  double eps = 0.0;
  double eps2 = 0.0;
  std::size_t site = 0;
  std::optional<std::size_t> center;

  auto *bgen = bound->add_subcommand("general", "Sitewise bound in the given gauge (MPS or any network)");
  bgen->add_option("file", file, "MPS or network JSON")->required();
  bgen->add_option("--eps", eps, "Relative per-site radius")->required()->check(CLI::NonNegativeNumber);
  bgen->callback([&] {
    action = [&] {
      json j;
      if (topology_kind(file) == "mps") {
        j["kind"] = "mps";
        j["bound"] = all_site_bound_general(load_mps(file), eps);
      } else {
        const TensorNetwork tn = load_network(file);
        const double nrm = frobenius_norm(contract_network(tn, {g.cap, std::nullopt}));
        if (!(nrm > 0.0))
          throw DegenerateSite("network contracts to zero; relative bound undefined");
        j["kind"] = "network";
        j["bound"] = worst_case_bound(tn, relative_radii(tn, eps), g.cap) / nrm;
      }
      j["eps"] = eps;
      emit_json(g, j);
    };
  });

  auto *bcan = bound->add_subcommand("canonical", "All-site bound of a canonical MPS");
  bcan->add_option("file", file, "MPS JSON")->required();
  bcan->add_option("--eps", eps, "Relative per-site radius")->required()->check(CLI::NonNegativeNumber);
  bcan->add_option("--center", center, "Check the chain is canonical at this site and use it");
  bcan->callback([&] {
    action = [&] {
      Mps m = load_mps(file);
      if (center) {
        if (!is_canonical(m, *center, tol_or(g, 1e-8)))
          throw NotCanonical("chain is not canonical at site " + std::to_string(*center));
        m = Mps(m.sites(), *center);
      }
      const CanonicalBound b = all_site_bound_canonical(m, eps);
      emit_json(g, {{"exact_sum", b.exact_sum}, {"simple", b.simple}, {"eps", eps}});
    };
  });

  auto *bsingle = bound->add_subcommand("single-site", "Bound for a perturbation of one MPS site");
  bsingle->add_option("file", file, "MPS JSON")->required();
  bsingle->add_option("--site", site, "Perturbed site (0-based)")->required();
  bsingle->add_option("--eps", eps, "Relative radius")->required()->check(CLI::NonNegativeNumber);
  bsingle->callback([&] {
    action = [&] {
      const Mps m = load_mps(file);
      if (site >= m.size())
        throw InvalidArgument("site " + std::to_string(site) + " is out of range");
      emit_json(g, {{"bound", single_site_bound(m, site, eps)}, {"site", site}, {"eps", eps}});
    };
  });

  bool canonical_too = false;
  auto *bpeps = bound->add_subcommand("peps", "Columnwise PEPS bound");
  bpeps->add_option("file", file, "PEPS JSON")->required();
  bpeps->add_option("--eps1", eps, "Relative radius of each fused column")->required()->check(CLI::NonNegativeNumber);
  bpeps->add_option("--eps2", eps2, "Relative radius of each last-column site")
      ->required()
      ->check(CLI::NonNegativeNumber);
  bpeps->add_flag("--canonical", canonical_too, "Also report the canonical-form bound");
  bpeps->callback([&] {
    action = [&] {
      const Peps p = load_peps(file);
      json j;
      j["general"] = peps_bound_general(p, eps, eps2, g.cap);
      if (canonical_too) {
        const PepsCanonicalBound b = peps_bound_canonical(p, eps, eps2, tol_or(g, 1e-8), g.cap);
        j["canonical_exact_sum"] = b.exact_sum;
        j["canonical_simple"] = b.simple;
      }
      emit_json(g, j);
    };
  });

  std::string radii;
  int restarts = 5;
  int max_iter = 10000;
  auto *solve = app.add_subcommand("solve-worst", "Worst-case sitewise perturbation by alternating maximization");
  solve->add_option("file", file, "Network JSON")->required();
  auto *solve_eps = solve->add_option("--eps", eps, "Relative per-site radius")->check(CLI::NonNegativeNumber);
  auto *solve_radii = solve->add_option("--radii", radii, "Absolute radii, comma separated, vertex order");
  solve_eps->excludes(solve_radii);
  solve->add_option("--restarts", restarts, "Number of seeded restarts")->capture_default_str();
  solve->add_option("--max-iter", max_iter, "Iterations per restart")->capture_default_str();
  solve->callback([&] {
    action = [&] {
      WorstCaseOptions opts;
      opts.seed = require_seed(g, "solve-worst");
      opts.tol = tol_or(g, opts.tol);
      opts.cap = g.cap;
      opts.restarts = restarts;
      opts.max_iter = max_iter;
      const TensorNetwork tn = load_network(file);
      std::vector<double> r;
      if (solve_radii->count()) {
        for (const auto &s : split_csv(radii)) {
          try {
            r.push_back(std::stod(s));
          } catch (const std::exception &) {
            throw InvalidArgument("bad radius '" + s + "'");
          }
        }
      } else if (solve_eps->count()) {
        r = relative_radii(tn, eps);
      } else {
        throw InvalidArgument("solve-worst needs --eps or --radii");
      }
      const WorstCaseReport rep = worst_case_solve(tn, r, opts);
      json j;
      j["bound"] = rep.bound;
      j["solved_value"] = rep.solved_value;
      j["kkt_residual"] = rep.kkt_residual;
      j["iterations"] = rep.iterations;
      j["best_restart"] = rep.best_restart;
      j["frozen_blocks"] = rep.frozen_blocks;
      j["per_site_norms"] = json::object();
      j["multipliers"] = json::object();
      for (std::size_t i = 0; i < tn.size(); ++i) {
        j["per_site_norms"][tn.vertices()[i].id] = rep.per_site_norms[i];
        j["multipliers"][tn.vertices()[i].id] = rep.multipliers[i];
      }
      j["argmax_perturbation"] = json::parse(perturbation_to_json(rep.argmax_perturbation));
      emit_json(g, j);
    };
  });

  std::size_t canon_center = 0;
  auto *canon = app.add_subcommand("canonicalize", "Move an MPS into canonical form");
  canon->add_option("file", file, "MPS JSON")->required();
  canon->add_option("--center", canon_center, "Canonical centre (0-based site)")->required();
  canon->callback([&] {
    action = [&] {
      const Mps m = load_mps(file);
      if (canon_center >= m.size())
        throw InvalidArgument("centre " + std::to_string(canon_center) + " is out of range");
      require_format(g, "json", {"json"});
      emit(g, mps_to_json(canonicalize(m, canon_center)));
    };
  });

  auto *verify = app.add_subcommand("verify", "Structural checks");
  verify->require_subcommand(1);
  std::string vertex;
  auto *vcan = verify->add_subcommand("canonical", "Is the environment of a vertex an isometry?");
  vcan->add_option("file", file, "Network or MPS JSON")->required();
  vcan->add_option("--center", vertex, "Vertex id, or site index for an MPS")->required();
  vcan->callback([&] {
    action = [&] {
      const double tol = tol_or(g, 1e-8);
      bool ok = false;
      if (topology_kind(file) == "mps") {
        const Mps m = load_mps(file);
        std::size_t c = 0;
        try {
          c = std::stoul(vertex);
        } catch (const std::exception &) {
          throw InvalidArgument("MPS centre must be a site index, got '" + vertex + "'");
        }
        if (c >= m.size())
          throw InvalidArgument("centre " + vertex + " is out of range");
        ok = is_canonical(m, c, tol);
      } else {
        ok = is_canonical(load_network(file), vertex, tol, g.cap);
      }
      emit_json(g, {{"canonical", ok}, {"center", vertex}, {"tol", tol}});
    };
  });

  std::string vset;
  auto *vmat = verify->add_subcommand("matvec", "Check vec(T) = M vec(T_sub) for a vertex set");
  vmat->add_option("file", file, "Network JSON")->required();
  vmat->add_option("--vset", vset, "Comma-separated vertex ids")->required();
  vmat->callback([&] {
    action = [&] {
      const double tol = tol_or(g, 1e-10);
      const TensorNetwork tn = load_network(file);
      const auto ids = split_csv(vset);
      const VertexSet vs(ids.begin(), ids.end());
      const MatvecCheck c = verify_matvec_identity(tn, vs, tol, g.cap);
      emit_json(g, {{"holds", c.holds}, {"relative_deviation", c.relative_deviation}, {"tol", tol}});
    };
  });

  std::string study;
  std::string config_path;
  std::string n_list, d_list;
  std::size_t phys = 0, samples = 0, perturbations = 0;
  double sigma = 0.0;
  bool paper_scale = false, keep_raw = false;
  std::vector<std::string> study_names;
  for (auto s : all_studies())
    study_names.emplace_back(study_name(s));
  auto *exp = app.add_subcommand("experiment", "Run a numerical study and write CSV or SVG");
  exp->add_option("study", study, "Study name")->required()->check(CLI::IsMember(study_names));
  exp->add_option("--config", config_path, "JSON config; flags override its values");
  auto *o_n = exp->add_option("--N", n_list, "Comma-separated chain lengths (matrix sizes for energy-quadratic)");
  auto *o_d = exp->add_option("--D", d_list, "Comma-separated bond dims (exponents k for energy-quadratic)");
  auto *o_p = exp->add_option("--p", phys, "Physical dimension");
  auto *o_s = exp->add_option("--samples", samples, "Samples per grid point");
  auto *o_k = exp->add_option("--perturbations", perturbations, "Perturbations per sample");
  auto *o_e = exp->add_option("--eps", eps, "Relative perturbation radius");
  auto *o_sig = exp->add_option("--sigma", sigma, "Entry standard deviation");
  exp->add_flag("--paper-scale", paper_scale, "Use the long-running full grid as the base config");
  exp->add_flag("--keep-raw", keep_raw, "Retain raw samples in memory (not written)");
  exp->callback([&] {
    action = [&] {
      const std::uint64_t seed = require_seed(g, "experiment");
      ExperimentConfig cfg = config_path.empty() ? default_config(parse_study(study), paper_scale)
                                                 : load_experiment_config(config_path);
      if (!config_path.empty() && cfg.study != parse_study(study))
        throw InvalidArgument("config file is for study '" + std::string(study_name(cfg.study)) + "'");
      auto sizes = [](const std::string &s) {
        std::vector<std::size_t> v;
        for (const auto &x : split_csv(s)) {
          try {
            std::size_t pos = 0;
            const long long n = std::stoll(x, &pos);
            if (pos != x.size() || n <= 0)
              throw std::invalid_argument(x);
            v.push_back(static_cast<std::size_t>(n));
          } catch (const std::exception &) {
            throw InvalidArgument("bad list entry '" + x + "'");
          }
        }
        return v;
      };
      if (o_n->count())
        cfg.n_list = sizes(n_list);
      if (o_d->count())
        cfg.d_list = sizes(d_list);
      if (o_p->count())
        cfg.phys = phys;
      if (o_s->count())
        cfg.samples = samples;
      if (o_k->count())
        cfg.perturbations = perturbations;
      if (o_e->count())
        cfg.eps = eps;
      if (o_sig->count())
        cfg.sigma = sigma;
      cfg.keep_raw = keep_raw;
      cfg.seed = seed;
      require_format(g, "csv or svg", {"csv", "svg"});
      const StudyResult r = run_study(cfg);
      emit(g, g.format == "svg" ? to_svg(r) : to_csv(r));
    };
  });

  for (auto *sub : app.get_subcommands({})) {
    sub->fallthrough();
    for (auto *n : sub->get_subcommands({}))
      n->fallthrough();
  }
  app.footer(describe_all(app));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::cerr << "error: UsageError: " << one_line(e.what()) << "\n";
    return kExitValidation;
  }

  try {
    if (action)
      action();
    return kExitOk;
  } catch (const ConvergenceError &e) {
    std::cerr << "error: " << e.kind() << ": " << one_line(e.what()) << " (best estimate "
              << format_double(e.best_estimate()) << ")\n";
    return kExitConvergence;
  } catch (const Error &e) {
    std::cerr << "error: " << e.kind() << ": " << one_line(e.what()) << "\n";
    return kExitValidation;
  } catch (const std::exception &e) {
    std::cerr << "error: Internal: " << one_line(e.what()) << "\n";
    return kExitValidation;
  }
}
