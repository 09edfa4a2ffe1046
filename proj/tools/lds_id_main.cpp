#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "ldsid/dynamics.hpp"
#include "ldsid/errors.hpp"
#include "ldsid/estimators.hpp"
#include "ldsid/experiments.hpp"
#include "ldsid/geometry.hpp"
#include "ldsid/io.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitParameter = 2;   // parameter/domain errors
constexpr int kExitSchema = 3;      // schema/input errors
constexpr int kExitDivergence = 4;  // solver divergence
constexpr int kExitSweepFailure = 5;  // every trial failed at some grid point

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  const json parsed = json::parse(ldsid::read_text_file(path), nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    throw ldsid::SchemaError("config file must hold a JSON object: " + path);
  }
  return parsed;
}

// Flags beat config-file values; config values beat defaults.
template <typename T>
void merge(const CLI::Option* opt, const json& cfg, const char* key, T& target) {
  if (opt && opt->count() > 0) return;
  if (!cfg.contains(key)) return;
  try {
    target = cfg.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ldsid::SchemaError(std::string("config key \"") + key + "\": " + e.what());
  }
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

double parse_double_strict(const std::string& text, const char* what) {
  try {
    std::size_t pos = 0;
    const double value = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw ldsid::ParameterError(std::string("cannot parse ") + what + ": " + text);
  }
}

ldsid::StepRule parse_step_rule(const std::string& spec) {
  if (spec == "lipschitz") return ldsid::LipschitzStep{};
  if (spec.rfind("fixed:", 0) == 0) {
    ldsid::FixedStep step;
    step.eta = parse_double_strict(spec.substr(6), "fixed step size");
    if (!(step.eta > 0.0)) throw ldsid::ParameterError("fixed step size must be positive");
    return step;
  }
  if (spec.rfind("backtracking:", 0) == 0) {
    const std::string rest = spec.substr(13);
    const auto comma = rest.find(',');
    if (comma == std::string::npos) {
      throw ldsid::ParameterError("expected backtracking:<beta>,<c>");
    }
    ldsid::BacktrackingStep step;
    step.beta = parse_double_strict(rest.substr(0, comma), "backtracking beta");
    step.c = parse_double_strict(rest.substr(comma + 1), "backtracking c");
    if (!(step.beta > 0.0 && step.beta < 1.0 && step.c > 0.0 && step.c < 1.0)) {
      throw ldsid::ParameterError("backtracking parameters must lie in (0, 1)");
    }
    return step;
  }
  throw ldsid::ParameterError("unknown step rule: " + spec);
}

struct SimulateArgs {
  int n = 5;
  long long T = 100;
  std::uint64_t seed = 0;
  std::string noise = "gaussian";
  double spec_norm = 0.7;
  int sparsity = 0;  // 0 = dense
  std::string a_file;
  std::string out = "trajectory.json";
  std::string config;
};

int run_simulate(const SimulateArgs& args) {
  Eigen::MatrixXd A;
  if (!args.a_file.empty()) {
    A = ldsid::model_from_json(ldsid::read_text_file(args.a_file));
  } else {
    std::optional<int> k;
    if (args.sparsity > 0) k = args.sparsity;
    A = ldsid::random_stable_matrix(args.n, args.spec_norm, k,
                                    ldsid::derive_seed(args.seed, {0xA57A12ULL}));
  }
  const ldsid::LdsModel model(A);
  const ldsid::NoiseSpec noise{ldsid::noise_family_from_string(args.noise)};
  const ldsid::Trajectory traj = ldsid::simulate(model, noise, args.T, args.seed);

  std::string echo = "{";
  echo += "\"command\":\"simulate\"";
  echo += ",\"n\":" + std::to_string(model.n());
  echo += ",\"T\":" + std::to_string(args.T);
  echo += ",\"seed\":" + std::to_string(args.seed);
  echo += ",\"noise\":" + quote(args.noise);
  if (args.a_file.empty()) {
    echo += ",\"spec_norm\":" + ldsid::format_double(args.spec_norm);
    if (args.sparsity > 0) echo += ",\"sparsity\":" + std::to_string(args.sparsity);
  } else {
    echo += ",\"a_file\":" + quote(args.a_file);
  }
  echo += '}';

  ldsid::write_text_file(args.out, ldsid::trajectory_to_json(model, traj, echo));
  std::cout << "n=" << model.n() << " T=" << traj.T
            << " rho=" << ldsid::format_double(model.spectral_radius())
            << " J=" << ldsid::format_double(model.J()) << " out=" << args.out
            << "\n";
  return kExitOk;
}

struct EstimateArgs {
  std::string traj_file;
  std::string constraint = "ols";
  std::string out = "estimate.json";
  long long max_iters = 50000;
  double grad_map_tol = 0.0;  // 0 = scale-aware default
  std::string step = "lipschitz";
  std::string config;
};

int run_estimate(const EstimateArgs& args) {
  const ldsid::LoadedTrajectory loaded =
      ldsid::trajectory_from_json(ldsid::read_text_file(args.traj_file));
  const ldsid::DataMatrices data = ldsid::build_data_matrices(loaded.trajectory);

  ldsid::SolverConfig cfg;
  cfg.max_iters = args.max_iters;
  if (args.grad_map_tol > 0.0) cfg.grad_map_tol = args.grad_map_tol;
  cfg.step_rule = parse_step_rule(args.step);

  ldsid::EstimateResult result;
  if (args.constraint == "ols") {
    result = ldsid::ols(data);
  } else if (args.constraint.rfind("subspace:", 0) == 0) {
    const std::string basis_path = args.constraint.substr(9);
    const ldsid::LoadedBasis basis =
        ldsid::basis_from_json(ldsid::read_text_file(basis_path));
    const ldsid::ConstraintSet K =
        ldsid::ConstraintSet::subspace(basis.basis, basis.offset);
    if (K.basis_condition_warning()) {
      std::cerr << "warning: basis nearly dependent, re-orthonormalized\n";
    }
    result = ldsid::constrained_ls(data, K, cfg);
  } else if (args.constraint.rfind("l1:", 0) == 0) {
    const std::string radius_spec = args.constraint.substr(3);
    double radius = 0.0;
    if (radius_spec == "oracle") {
      if (!loaded.A_star) {
        throw ldsid::SchemaError(
            "l1:oracle requires the trajectory file to carry the system matrix \"A\"");
      }
      radius = loaded.A_star->lpNorm<1>();
    } else {
      radius = parse_double_strict(radius_spec, "l1 radius");
    }
    result = ldsid::constrained_ls(data, ldsid::ConstraintSet::l1_ball(radius), cfg);
  } else {
    throw ldsid::ParameterError("unknown constraint spec: " + args.constraint);
  }

  std::optional<double> err;
  std::optional<ldsid::FirstOrderReport> lemma;
  if (loaded.A_star) {
    err = (result.A_hat - *loaded.A_star).norm();
    if (data.E) {
      lemma = ldsid::check_first_order_inequality(result.A_hat, *loaded.A_star,
                                                  *loaded.A_star, data);
    }
  }

  std::string echo = "{";
  echo += "\"command\":\"estimate\"";
  echo += ",\"traj\":" + quote(args.traj_file);
  echo += ",\"constraint\":" + quote(args.constraint);
  echo += ",\"max_iters\":" + std::to_string(args.max_iters);
  echo += ",\"grad_map_tol\":";
  echo += args.grad_map_tol > 0.0 ? ldsid::format_double(args.grad_map_tol)
                                  : std::string("null");
  echo += ",\"step\":" + quote(args.step);
  echo += '}';

  ldsid::write_text_file(
      args.out, ldsid::estimate_to_json(result, args.constraint, err, lemma, echo));

  std::cout << "converged=" << (result.converged ? "true" : "false")
            << " iterations=" << result.iterations
            << " objective=" << ldsid::format_double(result.objective)
            << " grad_map_norm=" << ldsid::format_double(result.grad_map_norm)
            << "\n";
  if (err) {
    std::cout << "err_frobenius=" << ldsid::format_double(*err) << "\n";
  }
  if (lemma) {
    std::cout << "lemma1_slack=" << ldsid::format_double(lemma->slack)
              << " lemma1_lhs=" << ldsid::format_double(lemma->lhs)
              << " lemma1_rhs=" << ldsid::format_double(lemma->rhs) << "\n";
  }
  std::cout << "out=" << args.out << "\n";
  return kExitOk;
}

struct ComplexityArgs {
  int n = 0;
  int d = 0;
  int k = 0;
  double delta = 0.1;
  std::vector<long long> T_list;
  std::string a_file;
  double J = 1.0;
  long long width_samples = 0;
  std::uint64_t seed = 0;
  std::string out = "complexity.json";
  std::string config;
};

int run_complexity(const ComplexityArgs& args) {
  if (!(args.delta > 0.0 && args.delta < 1.0)) {
    throw ldsid::ParameterError("delta must lie in (0, 1)");
  }
  if ((args.d > 0) == (args.k > 0)) {
    throw ldsid::ParameterError("give exactly one of --d (subspace) or --k (sparse)");
  }

  int n = args.n;
  double J = args.J;
  if (!args.a_file.empty()) {
    const Eigen::MatrixXd A = ldsid::model_from_json(ldsid::read_text_file(args.a_file));
    n = static_cast<int>(A.rows());
    J = ldsid::stability_param_J(A);  // throws InstabilityError when rho >= 1
  }
  if (n < 1) throw ldsid::ParameterError("n must be positive (give --n or --A-file)");
  if (J < 0.0) throw ldsid::ParameterError("J must be nonnegative");

  ldsid::ComplexityReport report =
      args.d > 0
          ? ldsid::subspace_complexity_report(n, args.d, args.delta, args.T_list, J)
          : ldsid::sparse_complexity_report(n, args.k, args.delta, args.T_list, J);

  if (args.width_samples > 0) {
    const ldsid::TangentConeDescriptor cone =
        args.d > 0 ? ldsid::TangentConeDescriptor(ldsid::make_subspace_cone(args.d))
                   : ldsid::TangentConeDescriptor(
                         ldsid::canonical_l1_descent_cone(n, args.k));
    report.width_mc = ldsid::gaussian_width_mc(cone, args.width_samples, args.seed);
  }

  std::string echo = "{";
  echo += "\"command\":\"complexity\"";
  echo += ",\"n\":" + std::to_string(n);
  echo += args.d > 0 ? ",\"d\":" + std::to_string(args.d)
                     : ",\"k\":" + std::to_string(args.k);
  echo += ",\"delta\":" + ldsid::format_double(args.delta);
  echo += ",\"J\":" + ldsid::format_double(J);
  if (!args.a_file.empty()) echo += ",\"a_file\":" + quote(args.a_file);
  if (args.width_samples > 0) {
    echo += ",\"width_samples\":" + std::to_string(args.width_samples);
    echo += ",\"seed\":" + std::to_string(args.seed);
  }
  echo += '}';

  ldsid::write_text_file(args.out, ldsid::complexity_report_to_json(report, echo));
  std::cout << "scenario=" << report.scenario << " n=" << n
            << " d_or_k=" << report.d_or_k
            << " J=" << ldsid::format_double(J)
            << " T_min=" << ldsid::format_double(report.T_min) << " out=" << args.out
            << "\n";
  for (const auto& [T, bound] : report.error_bounds) {
    std::cout << "T=" << T << " bound=" << ldsid::format_double(bound) << "\n";
  }
  return kExitOk;
}

struct ExperimentArgs {
  std::string plan_file;
  std::string out_prefix = "experiment";
  bool has_seed_override = false;
  std::uint64_t seed = 0;
};

int run_experiment(const ExperimentArgs& args) {
  ldsid::ExperimentPlan plan = ldsid::plan_from_json(ldsid::read_text_file(args.plan_file));
  if (args.has_seed_override) plan.base_seed = args.seed;

  const std::vector<ldsid::ExperimentRecord> records = ldsid::run_plan(plan);
  const std::string plan_echo = ldsid::plan_to_json(plan);

  ldsid::write_text_file(args.out_prefix + ".csv", ldsid::records_to_csv(records));
  ldsid::write_text_file(args.out_prefix + ".jsonl", ldsid::records_to_jsonl(records));

  // Per grid point medians and failure counts.
  struct GroupStats {
    std::vector<double> err, err_ols;
    int failures = 0;
    int total = 0;
  };
  std::map<std::tuple<int, int, long long>, GroupStats> groups;
  long long failures = 0;
  for (const auto& rec : records) {
    auto& g = groups[{rec.n, rec.d_or_k, rec.T}];
    ++g.total;
    if (rec.failed) {
      ++g.failures;
      ++failures;
    } else {
      g.err.push_back(rec.err_fro);
      g.err_ols.push_back(rec.err_ols_fro);
    }
  }
  bool total_failure_somewhere = false;
  std::string groups_json = "[";
  bool first = true;
  for (auto& [key, g] : groups) {
    if (g.failures == g.total) total_failure_somewhere = true;
    if (!first) groups_json += ',';
    first = false;
    groups_json += "{\"n\":" + std::to_string(std::get<0>(key));
    groups_json += ",\"d_or_k\":" + std::to_string(std::get<1>(key));
    groups_json += ",\"T\":" + std::to_string(std::get<2>(key));
    groups_json += ",\"trials\":" + std::to_string(g.total);
    groups_json += ",\"failures\":" + std::to_string(g.failures);
    if (!g.err.empty()) {
      groups_json += ",\"median_err_fro\":" + ldsid::format_double(ldsid::median(g.err));
      groups_json +=
          ",\"median_err_ols_fro\":" + ldsid::format_double(ldsid::median(g.err_ols));
    }
    groups_json += '}';
  }
  groups_json += ']';

  const auto fits_json = [](const std::map<std::string, ldsid::SlopeFit>& fits) {
    std::string out = "[";
    bool first_fit = true;
    for (const auto& [group, fit] : fits) {
      if (!first_fit) out += ',';
      first_fit = false;
      out += "{\"group\":" + quote(group);
      out += ",\"slope\":" + ldsid::format_double(fit.slope);
      out += ",\"intercept\":" + ldsid::format_double(fit.intercept);
      out += ",\"r_squared\":" + ldsid::format_double(fit.r_squared);
      out += ",\"points\":" + std::to_string(fit.points);
      out += '}';
    }
    out += ']';
    return out;
  };

  std::string summary = "{";
  summary += "\"config\":" + plan_echo;
  summary += ",\"records\":" + std::to_string(records.size());
  summary += ",\"failures\":" + std::to_string(failures);
  summary += ",\"groups\":" + groups_json;
  std::map<std::string, ldsid::SlopeFit> fits_T;
  if (plan.T_grid.size() >= 2 && failures < static_cast<long long>(records.size())) {
    fits_T = ldsid::fit_loglog_slope(
        records, ldsid::RecordField::T, ldsid::RecordField::err_fro,
        {ldsid::RecordField::n, ldsid::RecordField::d_or_k});
    summary += ",\"slopes_vs_T\":" + fits_json(fits_T);
  }
  if (plan.scenario != ldsid::Scenario::unconstrained &&
      plan.structure_grid.size() >= 2 &&
      failures < static_cast<long long>(records.size())) {
    const auto fits = ldsid::fit_loglog_slope(
        records, ldsid::RecordField::d_or_k, ldsid::RecordField::err_fro,
        {ldsid::RecordField::n, ldsid::RecordField::T});
    summary += ",\"slopes_vs_structure\":" + fits_json(fits);
  }
  summary += '}';
  ldsid::write_text_file(args.out_prefix + "_summary.json", summary);

  std::cout << "records=" << records.size() << " failures=" << failures << "\n";
  for (const auto& [group, fit] : fits_T) {
    std::cout << "slope_vs_T " << group << " slope=" << ldsid::format_double(fit.slope)
              << " r2=" << ldsid::format_double(fit.r_squared) << "\n";
  }
  std::cout << "out=" << args.out_prefix << ".csv," << args.out_prefix << ".jsonl,"
            << args.out_prefix << "_summary.json\n";
  return total_failure_somewhere ? kExitSweepFailure : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lds-id: constrained least-squares identification of stable linear systems"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand("simulate", "simulate one trajectory");
  auto* sim_n = simulate->add_option("--n", sim.n, "state dimension");
  auto* sim_T = simulate->add_option("--T", sim.T, "horizon (writes T+2 states)");
  auto* sim_seed = simulate->add_option("--seed", sim.seed, "rng seed");
  auto* sim_noise = simulate->add_option("--noise", sim.noise, "gaussian|rademacher|uniform");
  auto* sim_spec = simulate->add_option("--spec-norm", sim.spec_norm, "target ||A||_2 for a random model");
  auto* sim_k = simulate->add_option("--sparsity", sim.sparsity, "nonzero entries of the random model");
  auto* sim_a = simulate->add_option("--A-file", sim.a_file, "JSON file with the system matrix");
  auto* sim_out = simulate->add_option("--out", sim.out, "output trajectory file");
  simulate->add_option("--config", sim.config, "JSON config file (flags override)");

  EstimateArgs est;
  CLI::App* estimate = app.add_subcommand("estimate", "solve the constrained least-squares program");
  auto* est_traj = estimate->add_option("--traj", est.traj_file, "trajectory file");
  auto* est_con = estimate->add_option("--constraint", est.constraint,
                                       "ols | subspace:<basisfile> | l1:<radius|oracle>");
  auto* est_out = estimate->add_option("--out", est.out, "output estimate file");
  auto* est_iters = estimate->add_option("--max-iters", est.max_iters, "iteration cap");
  auto* est_tol = estimate->add_option("--grad-map-tol", est.grad_map_tol,
                                       "gradient-mapping tolerance (0 = scale-aware default)");
  auto* est_step = estimate->add_option("--step", est.step,
                                        "lipschitz | fixed:<eta> | backtracking:<beta>,<c>");
  estimate->add_option("--config", est.config, "JSON config file (flags override)");

  ComplexityArgs cx;
  CLI::App* complexity = app.add_subcommand("complexity", "tabulate the theoretical bounds");
  auto* cx_n = complexity->add_option("--n", cx.n, "state dimension");
  auto* cx_d = complexity->add_option("--d", cx.d, "subspace dimension");
  auto* cx_k = complexity->add_option("--k", cx.k, "sparsity");
  auto* cx_delta = complexity->add_option("--delta", cx.delta, "failure probability, in (0,1)");
  auto* cx_T = complexity->add_option("--T", cx.T_list, "horizons to tabulate");
  auto* cx_a = complexity->add_option("--A-file", cx.a_file, "system matrix file for an exact J");
  auto* cx_J = complexity->add_option("--J", cx.J, "stability parameter when no matrix is given");
  auto* cx_w = complexity->add_option("--width-samples", cx.width_samples,
                                      "Monte-Carlo samples for the tangent-cone width");
  auto* cx_seed = complexity->add_option("--seed", cx.seed, "rng seed for the width estimate");
  auto* cx_out = complexity->add_option("--out", cx.out, "output report file");
  complexity->add_option("--config", cx.config, "JSON config file (flags override)");

  ExperimentArgs ex;
  CLI::App* experiment = app.add_subcommand("experiment", "run a Monte-Carlo sweep");
  auto* ex_plan = experiment->add_option("--plan", ex.plan_file, "plan file");
  auto* ex_out = experiment->add_option("--out", ex.out_prefix, "output prefix");
  auto* ex_seed = experiment->add_option("--seed", ex.seed, "override the plan base_seed");
  auto* ex_config = experiment->add_option("--config", ex.plan_file, "alias for --plan");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (simulate->parsed()) {
      const json cfg = load_config(sim.config);
      merge(sim_n, cfg, "n", sim.n);
      merge(sim_T, cfg, "T", sim.T);
      merge(sim_seed, cfg, "seed", sim.seed);
      merge(sim_noise, cfg, "noise", sim.noise);
      merge(sim_spec, cfg, "spec_norm", sim.spec_norm);
      merge(sim_k, cfg, "sparsity", sim.sparsity);
      merge(sim_a, cfg, "a_file", sim.a_file);
      merge(sim_out, cfg, "out", sim.out);
      return run_simulate(sim);
    }
    if (estimate->parsed()) {
      const json cfg = load_config(est.config);
      merge(est_traj, cfg, "traj", est.traj_file);
      merge(est_con, cfg, "constraint", est.constraint);
      merge(est_out, cfg, "out", est.out);
      merge(est_iters, cfg, "max_iters", est.max_iters);
      merge(est_tol, cfg, "grad_map_tol", est.grad_map_tol);
      merge(est_step, cfg, "step", est.step);
      if (est.traj_file.empty()) {
        throw ldsid::ParameterError("estimate: --traj is required");
      }
      return run_estimate(est);
    }
    if (complexity->parsed()) {
      const json cfg = load_config(cx.config);
      merge(cx_n, cfg, "n", cx.n);
      merge(cx_d, cfg, "d", cx.d);
      merge(cx_k, cfg, "k", cx.k);
      merge(cx_delta, cfg, "delta", cx.delta);
      merge(cx_T, cfg, "T", cx.T_list);
      merge(cx_a, cfg, "a_file", cx.a_file);
      merge(cx_J, cfg, "J", cx.J);
      merge(cx_w, cfg, "width_samples", cx.width_samples);
      merge(cx_seed, cfg, "seed", cx.seed);
      merge(cx_out, cfg, "out", cx.out);
      return run_complexity(cx);
    }
    if (experiment->parsed()) {
      if (ex.plan_file.empty()) {
        throw ldsid::ParameterError("experiment: --plan is required");
      }
      ex.has_seed_override = ex_seed->count() > 0;
      (void)ex_plan;
      (void)ex_config;
      (void)ex_out;
      return run_experiment(ex);
    }
  } catch (const ldsid::ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParameter;
  } catch (const ldsid::InstabilityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParameter;
  } catch (const ldsid::IntegrationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParameter;
  } catch (const ldsid::DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const ldsid::SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const ldsid::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
