#include <Eigen/Core>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "parisi/cascade.hpp"
#include "parisi/conjugate.hpp"
#include "parisi/io.hpp"
#include "parisi/parisi.hpp"
#include "parisi/rng.hpp"
#include "parisi/simulate.hpp"
#include "parisi/verify.hpp"

using namespace parisi;
using nlohmann::json;

namespace {

struct Common {
  std::string model;
  double t = -1.0;  // negative: keep the model's t
  std::uint64_t seed = 0;
  int threads = 1;
  std::string format = "human";
  std::string out;
  int nodes = 0;  // 0: library default
  std::string mode = "auto";
  long mc_samples = 100000;
};

struct Emitted {
  json result;
  std::string csv;  // command-specific table; empty if the command has none
  int exit_code = 0;
};

QuadratureConfig quad_from(const Common& c, int default_nodes) {
  QuadratureConfig q;
  q.hermite_nodes = c.nodes > 0 ? c.nodes : default_nodes;
  q.threads = c.threads;
  q.mc_samples = c.mc_samples;
  q.rng_seed = derive_seed(c.seed, "cli.quadrature");
  if (c.mode == "tensor") q.mode = QuadratureMode::Tensor;
  else if (c.mode == "mc") q.mode = QuadratureMode::MonteCarlo;
  else if (c.mode != "auto") throw ConfigError("--mode must be auto, tensor or mc");
  q.validate();
  return q;
}

ModelInstance model_from(const Common& c) {
  if (c.model.empty()) throw ConfigError("--model is required");
  ModelInstance m = load_model(c.model);
  if (c.t >= 0.0) m.t = c.t;
  return m;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + item + "' in list '" + s + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (double v : parse_list(s)) {
    if (v != static_cast<int>(v) || v < 1) throw ConfigError("expected positive integers in '" + s + "'");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

json cascade_json(const CascadeResult& r) {
  return {{"value", r.value},
          {"error_estimate", r.error_estimate},
          {"mode", r.mode == QuadratureMode::Tensor ? "tensor" : "mc"},
          {"nodes", r.nodes},
          {"gaussian_dims", r.gaussian_dims}};
}

json optimize_json(const OptimizeResult& r) {
  json atoms = json::array();
  for (const auto& a : r.induced_measure) {
    json v = json::array();
    for (Eigen::Index i = 0; i < a.value.size(); ++i) v.push_back(a.value(i));
    atoms.push_back({{"weight", a.weight}, {"value", v}});
  }
  json restarts = json::array();
  for (const auto& x : r.restarts)
    restarts.push_back({{"levels", x.levels}, {"value", x.value}, {"evaluations", x.evaluations}, {"converged", x.converged}, {"seed", x.seed}});
  json trace = json::array();
  for (const auto& t : r.trace) trace.push_back({{"levels", t.levels}, {"best_value", t.best_value}, {"evaluations", t.evaluations}});
  return {{"value", r.value},
          {"error_estimate", r.error_estimate},
          {"path", path_to_json(r.best_path)},
          {"induced_measure", atoms},
          {"spread", r.spread},
          {"restarts", restarts},
          {"trace", trace}};
}

std::string fe_csv(const std::vector<FreeEnergyEstimate>& es, const std::vector<double>& bound) {
  std::ostringstream out;
  out.precision(12);
  out << "N,t,mean,stderr,bound,gap\n";
  for (std::size_t i = 0; i < es.size(); ++i) {
    out << es[i].N << ',' << es[i].t << ',' << es[i].mean << ',' << es[i].std_error << ',';
    if (i < bound.size()) out << bound[i] << ',' << bound[i] - es[i].mean;
    else out << ',';
    out << '\n';
  }
  return out.str();
}

json fe_json(const FreeEnergyEstimate& e) {
  return {{"N", e.N}, {"t", e.t}, {"mean", e.mean}, {"stderr", e.std_error}, {"n_disorder", e.n_disorder}, {"seed", e.seed}};
}

void render_human(std::ostream& os, const json& j, const std::string& indent = "") {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it->is_object()) {
      os << indent << it.key() << ":\n";
      render_human(os, *it, indent + "  ");
    } else if (it->is_array() && !it->empty() && it->front().is_object()) {
      os << indent << it.key() << ": (" << it->size() << " entries)\n";
      for (const auto& e : *it) os << indent << "  - " << e.dump() << '\n';
    } else {
      os << indent << it.key() << ": " << (it->is_string() ? it->get<std::string>() : it->dump()) << '\n';
    }
  }
}

void render_verify_human(std::ostream& os, const json& checks) {
  for (const auto& c : checks) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-8s %-32s tol=%-9.2g margin=%-10.3g ", c["status"].get<std::string>().c_str(),
                  c["name"].get<std::string>().c_str(), c["tolerance"].get<double>(), c["margin"].get<double>());
    os << buf << c["detail"].get<std::string>() << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parisi-type variational formulas for permutation-invariant vector spin glasses"};
  app.require_subcommand(1);
  Common c;
  auto add_common = [&](CLI::App* s, bool needs_model) {
    auto* m = s->add_option("--model", c.model, "model file (JSON) or preset: potts(D), sk, bp_sk(alpha), ising_diag(D,c1,..), counterexample");
    if (needs_model) m->required();
    s->add_option("--t", c.t, "temperature parameter t (overrides the model file)")->check(CLI::NonNegativeNumber);
    s->add_option("--seed", c.seed, "master seed");
    s->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
    s->add_option("--format", c.format, "human | json | csv")->check(CLI::IsMember({"human", "json", "csv"}));
    s->add_option("--out", c.out, "write output to this file");
    s->add_option("--nodes", c.nodes, "Gauss-Hermite nodes per dimension");
    s->add_option("--mode", c.mode, "quadrature: auto | tensor | mc");
    s->add_option("--mc-samples", c.mc_samples, "samples per level in mc mode");
  };

  int samples = 20;
  auto* verify = app.add_subcommand("verify", "run the structural check suite on a model");
  add_common(verify, true);
  verify->add_option("--samples", samples, "random trials per check");

  std::string path_file, reduction = "scalar";
  auto* psi_cmd = app.add_subcommand("psi", "cascade transform of a path (zero path by default)");
  add_common(psi_cmd, true);
  psi_cmd->add_option("--path", path_file, "path document {cone, grid, values}");
  psi_cmd->add_option("--reduction", reduction, "cone of the zero path: scalar | pair | matrix");

  std::string point;
  auto* conj = app.add_subcommand("conjugate", "monotone conjugate at a point");
  add_common(conj, true);
  conj->add_option("--point", point, "lambda (scaled dagger) | lambda1,lambda2 (pair) | m11,m22,m12 (dense D=2)")->required();

  std::string levels = "3";
  int restarts = 8;
  bool escalate = false;
  std::string path_csv;
  auto add_opt = [&](CLI::App* s, bool with_reduction) {
    if (with_reduction) s->add_option("--reduction", reduction, "scalar | pair | matrix");
    s->add_option("--levels", levels, "levels K, or a schedule such as 2,4,8");
    s->add_option("--restarts", restarts, "random restarts per K");
    s->add_flag("--escalate", escalate, "double K while the value improves");
    s->add_option("--path-csv", path_csv, "also export the optimal path as CSV");
  };
  auto* opt = app.add_subcommand("optimize", "maximize the variational objective");
  add_common(opt, true);
  add_opt(opt, true);
  auto* ub = app.add_subcommand("upper-bound", "scalar upper bound with xi replaced by Xi (no convexity needed)");
  add_common(ub, true);
  add_opt(ub, false);

  std::string Ns = "8";
  int disorder = 200;
  bool no_cv = false;
  auto add_sim = [&](CLI::App* s) {
    s->add_option("--N", Ns, "system sizes, comma separated");
    s->add_option("--disorder", disorder, "disorder samples")->check(CLI::PositiveNumber);
    s->add_flag("--no-control-variate", no_cv, "plain disorder average");
  };
  auto* sim = app.add_subcommand("simulate", "exact-enumeration free energy at small N");
  add_common(sim, true);
  add_sim(sim);
  auto* cmp = app.add_subcommand("compare", "free energy estimate against the variational value or bound");
  add_common(cmp, true);
  add_sim(cmp);
  cmp->add_option("--levels", levels, "levels K of the variational problem");
  cmp->add_option("--restarts", restarts, "random restarts");

  int dimension = 0;
  auto* red = app.add_subcommand("reduce", "psd path to eigenvalue pair path, or pair path to its psd lift");
  add_common(red, false);
  red->add_option("--path", path_file, "path document")->required();
  red->add_option("--dimension", dimension, "D for lifting a pair path (default: model dimension)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    Emitted em;
    json repro;
    repro["schema_version"] = kResultSchema;
    repro["version"] = kVersion;
    repro["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                     std::to_string(EIGEN_MINOR_VERSION);
    repro["compiler"] = __VERSION__;
    repro["master_seed"] = c.seed;
    repro["threads"] = c.threads;
    repro["seed_derivation"] = "splitmix64(splitmix64(seed ^ fnv1a64(tag)) + index*0x9e3779b97f4a7c15)";
    json seeds;
    std::optional<ModelInstance> model;
    if (!c.model.empty()) {
      model = model_from(c);
      repro["model"] = model->name;
      repro["model_hash"] = model_hash(*model);
      repro["t"] = model->t;
    }
    ConjugateConfig conj_cfg;

    auto* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    if (name == "verify") {
      VerifyOptions vo;
      vo.seed = c.seed;
      vo.samples = samples;
      vo.quad = quad_from(c, 6);
      seeds["checks"] = "derive(seed, \"verify.<check>\")";
      const VerifyReport rep = verify_model(*model, vo);
      json checks = json::array();
      std::ostringstream csv;
      csv << "name,status,tolerance,margin,detail\n";
      for (const auto& ch : rep.checks) {
        checks.push_back({{"name", ch.name}, {"status", to_string(ch.status)}, {"tolerance", ch.tolerance}, {"margin", ch.margin}, {"detail", ch.detail}});
        csv << ch.name << ',' << to_string(ch.status) << ',' << ch.tolerance << ',' << ch.margin << ",\"" << ch.detail << "\"\n";
      }
      em.result = {{"checks", checks},
                   {"passed", rep.count(CheckStatus::Pass)},
                   {"failed", rep.count(CheckStatus::Fail)},
                   {"skipped", rep.count(CheckStatus::Skip)},
                   {"rejected", rep.count(CheckStatus::Rejected)},
                   {"ok", rep.ok()}};
      em.csv = csv.str();
      em.exit_code = rep.ok() ? 0 : 1;
    } else if (name == "psi") {
      AnyPath p = path_file.empty() ? AnyPath(constant_path(0.0)) : load_path(path_file);
      if (path_file.empty()) {
        const Reduction r = parse_reduction(reduction);
        if (r == Reduction::Pair) p = constant_path(Vector2(Vector2::Zero()));
        if (r == Reduction::Matrix) p = constant_path(Matrix(Matrix::Zero(model->measure.dimension(), model->measure.dimension())));
      }
      const QuadratureConfig q = quad_from(c, 16);
      seeds["quadrature"] = q.rng_seed;
      CascadeResult r;
      if (auto s = std::get_if<ScalarPath>(&p)) r = psi_scalar(*s, model->measure, q);
      else if (auto s = std::get_if<PairPath>(&p)) r = psi_pair(*s, model->measure, q);
      else r = psi(std::get<PsdPath>(p), model->measure, q);
      em.result = cascade_json(r);
      em.result["path"] = path_to_json(p);
    } else if (name == "conjugate") {
      const auto v = parse_list(point);
      ConjugateResult r;
      std::string kind;
      if (v.size() == 1) {
        r = xi_dagger_scaled_star(model->covariance, v[0], conj_cfg);
        kind = "scaled_dagger";
      } else if (v.size() == 2) {
        r = xi_perp_star(model->covariance, v[0], v[1], conj_cfg);
        kind = "pair";
      } else if (v.size() == 3) {
        Matrix m(2, 2);
        m << v[0], v[2], v[2], v[1];
        r = xi_star_psd(model->covariance, m, conj_cfg);
        kind = "dense";
      } else {
        throw ConfigError("--point takes 1, 2 or 3 numbers");
      }
      json arg = json::array();
      for (Eigen::Index i = 0; i < r.argmax.size(); ++i) arg.push_back(r.argmax(i));
      em.result = {{"kind", kind}, {"value", r.value}, {"argmax", arg}, {"radius", r.radius}, {"iterations", r.iterations}};
    } else if (name == "optimize" || name == "upper-bound") {
      const std::vector<int> sched = parse_int_list(levels);
      OptimizeOptions oo;
      oo.restarts = restarts;
      oo.K_schedule = sched;
      oo.escalate = escalate;
      oo.rng_seed = c.seed;
      oo.threads = c.threads;
      seeds["restarts"] = "derive(seed, \"parisi.optimize\", K*100000 + r)";
      const QuadratureConfig q = quad_from(c, 8);
      OptimizeResult r;
      if (name == "optimize") {
        ObjectiveSpec spec;
        spec.model = *model;
        spec.reduction = parse_reduction(reduction);
        spec.levels = sched.front();
        spec.quad = q;
        r = optimize(spec, oo);
        em.result["reduction"] = reduction;
      } else {
        r = upper_bound_nonconvex(*model, sched.front(), q, conj_cfg, oo);
        em.result["reduction"] = "scalar";
      }
      for (auto& [k, v] : optimize_json(r).items()) em.result[k] = v;
      em.csv = path_to_csv(r.best_path);
      if (!path_csv.empty()) {
        std::ofstream f(path_csv);
        if (!f) throw ConfigError("cannot write '" + path_csv + "'");
        f << em.csv;
      }
    } else if (name == "simulate" || name == "compare") {
      SimulateOptions so;
      so.threads = c.threads;
      so.control_variate = !no_cv;
      seeds["disorder"] = "derive(seed, \"simulate.disorder\", k)";
      std::vector<FreeEnergyEstimate> es;
      std::vector<double> bounds;
      json rows = json::array();
      bool all_pass = true;
      for (int N : parse_int_list(Ns)) {
        if (name == "simulate") {
          es.push_back(free_energy_mc(*model, N, disorder, c.seed, so));
          rows.push_back(fe_json(es.back()));
        } else {
          CompareOptions co;
          co.n_disorder = disorder;
          co.seed = c.seed;
          co.levels = parse_int_list(levels).front();
          co.restarts = restarts;
          co.threads = c.threads;
          co.quad = quad_from(c, 8);
          co.simulate = so;
          seeds["bound_restarts"] = "derive(derive(seed, \"compare.optimize\"), \"parisi.optimize\", K*100000 + r)";
          const CompareReport cr = compare_bound(*model, N, co);
          es.push_back(cr.estimate);
          bounds.push_back(cr.bound);
          json row = fe_json(cr.estimate);
          row["bound"] = cr.bound;
          row["bound_kind"] = cr.convex ? "variational" : "upper-bound";
          row["gap"] = cr.gap;
          row["slack"] = cr.slack;
          row["passed"] = cr.passed;
          rows.push_back(row);
          all_pass = all_pass && cr.passed;
        }
      }
      em.result["rows"] = rows;
      em.result["control_variate"] = !no_cv;
      em.csv = fe_csv(es, bounds);
      if (!all_pass) em.exit_code = 1;
    } else if (name == "reduce") {
      const AnyPath p = load_path(path_file);
      AnyPath out;
      if (auto q = std::get_if<PsdPath>(&p)) {
        out = reduce_invariant(*q);
      } else if (auto q = std::get_if<PairPath>(&p)) {
        const int D = dimension > 0 ? dimension : model ? model->covariance.dimension() : 0;
        if (D < 2) throw ConfigError("lifting a pair path needs --dimension >= 2 or a model");
        out = perp_lift(*q, D);
      } else {
        throw ConfigError("reduce takes a psd or pair path");
      }
      em.result["path"] = path_to_json(out);
      em.csv = path_to_csv(out);
    }
    repro["seeds"] = seeds;

    json doc = {{"schema", kResultSchema}, {"command", name}, {"result", em.result}, {"reproducibility", repro}};
    std::ofstream file;
    if (!c.out.empty()) {
      file.open(c.out);
      if (!file) throw ConfigError("cannot write '" + c.out + "'");
    }
    std::ostream& os = c.out.empty() ? std::cout : file;
    os.precision(12);
    if (c.format == "json") {
      os << doc.dump(2) << '\n';
    } else if (c.format == "csv") {
      if (em.csv.empty()) throw ConfigError("command '" + name + "' has no CSV form");
      os << em.csv;
    } else {
      os << "command: " << name << '\n';
      if (name == "verify") {
        render_verify_human(os, em.result["checks"]);
        json summary = em.result;
        summary.erase("checks");
        render_human(os, summary);
      } else {
        render_human(os, em.result);
      }
      os << "reproducibility:\n";
      render_human(os, repro, "  ");
    }
    return em.exit_code;
  } catch (const Error& e) {
    std::cerr << "error: " << e.name() << ": " << e.what() << '\n';
    return e.is_config_error() ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
