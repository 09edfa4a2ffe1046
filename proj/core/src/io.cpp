#include "ldsid/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ldsid/errors.hpp"

namespace ldsid {

using nlohmann::json;

std::string format_double(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string matrix_to_json_array(const Eigen::MatrixXd& A) {
  std::string out = "[";
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    for (Eigen::Index c = 0; c < A.cols(); ++c) {
      if (r != 0 || c != 0) out += ',';
      out += format_double(A(r, c));
    }
  }
  out += ']';
  return out;
}

Eigen::MatrixXd matrix_from_json_array(const std::vector<double>& values,
                                       int rows, int cols) {
  if (static_cast<int>(values.size()) != rows * cols) {
    throw SchemaError("matrix array has " + std::to_string(values.size()) +
                      " entries, expected " + std::to_string(rows * cols));
  }
  Eigen::MatrixXd A(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      A(r, c) = values[static_cast<std::size_t>(r) * cols + c];
    }
  }
  return A;
}

namespace {

std::string vector_list_to_json(const std::vector<Eigen::VectorXd>& vectors) {
  std::string out = "[";
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (i) out += ',';
    out += '[';
    for (Eigen::Index j = 0; j < vectors[i].size(); ++j) {
      if (j) out += ',';
      out += format_double(vectors[i][j]);
    }
    out += ']';
  }
  out += ']';
  return out;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
}

const json& require_key(const json& j, const char* key) {
  if (!j.contains(key)) {
    throw SchemaError(std::string("missing required key \"") + key + "\"");
  }
  return j.at(key);
}

std::vector<double> as_double_array(const json& j, const char* key) {
  if (!j.is_array()) throw SchemaError(std::string("\"") + key + "\" must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw SchemaError(std::string("\"") + key + "\" must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<Eigen::VectorXd> as_vector_list(const json& j, const char* key, int n) {
  if (!j.is_array()) throw SchemaError(std::string("\"") + key + "\" must be an array");
  std::vector<Eigen::VectorXd> out;
  out.reserve(j.size());
  for (const auto& row : j) {
    const auto values = as_double_array(row, key);
    if (static_cast<int>(values.size()) != n) {
      throw SchemaError(std::string("\"") + key + "\" rows must have length n");
    }
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = values[static_cast<std::size_t>(i)];
    out.push_back(std::move(v));
  }
  return out;
}

void append_config_echo(std::string& out, const std::string& config_echo) {
  if (!config_echo.empty()) {
    out += ",\"config\":";
    out += config_echo;
  }
}

}  // namespace

std::string trajectory_to_json(const LdsModel& model, const Trajectory& traj,
                               const std::string& config_echo) {
  std::string out = "{";
  out += "\"n\":" + std::to_string(model.n());
  out += ",\"A\":" + matrix_to_json_array(model.A_star());
  out += ",\"T\":" + std::to_string(traj.T);
  out += ",\"states\":" + vector_list_to_json(traj.states);
  out += ",\"noises\":" + vector_list_to_json(traj.noises);
  out += ",\"seed\":" + std::to_string(traj.seed);
  out += std::string(",\"noise_family\":\"") + to_string(traj.noise_family) + "\"";
  append_config_echo(out, config_echo);
  out += '}';
  return out;
}

LoadedTrajectory trajectory_from_json(const std::string& text) {
  const json j = parse_json(text);
  try {
  const int n = require_key(j, "n").get<int>();
  if (n < 1) throw SchemaError("\"n\" must be positive");
  const long long T = require_key(j, "T").get<long long>();

  LoadedTrajectory loaded;
  loaded.trajectory.T = T;
  loaded.trajectory.states = as_vector_list(require_key(j, "states"), "states", n);
  loaded.trajectory.noises = as_vector_list(require_key(j, "noises"), "noises", n);
  loaded.trajectory.seed = require_key(j, "seed").get<std::uint64_t>();
  loaded.trajectory.noise_family =
      noise_family_from_string(require_key(j, "noise_family").get<std::string>());

  if (static_cast<long long>(loaded.trajectory.states.size()) != T + 2) {
    throw SchemaError("\"states\" must hold T+2 vectors");
  }
  if (static_cast<long long>(loaded.trajectory.noises.size()) != T + 1) {
    throw SchemaError("\"noises\" must hold T+1 vectors");
  }
  if (j.contains("A")) {
    loaded.A_star = matrix_from_json_array(as_double_array(j.at("A"), "A"), n, n);
  }
  return loaded;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("trajectory file: ") + e.what());
  }
}

std::string model_to_json(const Eigen::MatrixXd& A) {
  std::string out = "{";
  out += "\"n\":" + std::to_string(A.rows());
  out += ",\"A\":" + matrix_to_json_array(A);
  out += '}';
  return out;
}

Eigen::MatrixXd model_from_json(const std::string& text) {
  const json j = parse_json(text);
  try {
    const int n = require_key(j, "n").get<int>();
    if (n < 1) throw SchemaError("\"n\" must be positive");
    return matrix_from_json_array(as_double_array(require_key(j, "A"), "A"), n, n);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model file: ") + e.what());
  }
}

LoadedBasis basis_from_json(const std::string& text) {
  const json j = parse_json(text);
  try {
  const int n = require_key(j, "n").get<int>();
  if (n < 1) throw SchemaError("\"n\" must be positive");
  const json& basis_json = require_key(j, "basis");
  if (!basis_json.is_array() || basis_json.empty()) {
    throw SchemaError("\"basis\" must be a nonempty array of matrices");
  }
  LoadedBasis loaded;
  for (const auto& entry : basis_json) {
    loaded.basis.push_back(
        matrix_from_json_array(as_double_array(entry, "basis"), n, n));
  }
  if (j.contains("offset")) {
    loaded.offset =
        matrix_from_json_array(as_double_array(j.at("offset"), "offset"), n, n);
  } else {
    loaded.offset = Eigen::MatrixXd::Zero(n, n);
  }
  return loaded;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("basis file: ") + e.what());
  }
}

std::string basis_to_json(const std::vector<Eigen::MatrixXd>& basis,
                          const Eigen::MatrixXd& offset) {
  std::string out = "{";
  out += "\"n\":" + std::to_string(offset.rows());
  out += ",\"basis\":[";
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (i) out += ',';
    out += matrix_to_json_array(basis[i]);
  }
  out += ']';
  out += ",\"offset\":" + matrix_to_json_array(offset);
  out += '}';
  return out;
}

std::string estimate_to_json(const EstimateResult& result,
                             const std::string& constraint_desc,
                             std::optional<double> err_frobenius,
                             const std::optional<FirstOrderReport>& lemma_check,
                             const std::string& config_echo) {
  std::string out = "{";
  out += "\"n\":" + std::to_string(result.A_hat.rows());
  out += ",\"A_hat\":" + matrix_to_json_array(result.A_hat);
  out += ",\"objective\":" + format_double(result.objective);
  out += ",\"grad_map_norm\":" + format_double(result.grad_map_norm);
  out += ",\"iterations\":" + std::to_string(result.iterations);
  out += std::string(",\"converged\":") + (result.converged ? "true" : "false");
  out += ",\"step_size\":" + format_double(result.step_size);
  out += ",\"constraint\":\"" + constraint_desc + "\"";
  if (err_frobenius) {
    out += ",\"err_frobenius\":" + format_double(*err_frobenius);
  }
  if (lemma_check) {
    out += ",\"first_order_check\":{";
    out += "\"lhs\":" + format_double(lemma_check->lhs);
    out += ",\"rhs\":" + format_double(lemma_check->rhs);
    out += ",\"slack\":" + format_double(lemma_check->slack);
    out += std::string(",\"violated\":") + (lemma_check->violated ? "true" : "false");
    out += '}';
  }
  append_config_echo(out, config_echo);
  out += '}';
  return out;
}

std::string complexity_report_to_json(const ComplexityReport& report,
                                      const std::string& config_echo) {
  const auto approx_field = [](double v) {
    return "{\"value\":" + format_double(v) + ",\"approx\":true}";
  };
  std::string out = "{";
  out += "\"scenario\":\"" + report.scenario + "\"";
  out += ",\"n\":" + std::to_string(report.n);
  out += ",\"d_or_k\":" + std::to_string(report.d_or_k);
  out += ",\"delta\":" + format_double(report.delta);
  out += ",\"J\":" + format_double(report.J);
  out += ",\"gamma2_frob_bound\":" + approx_field(report.gamma2_frob_bound);
  out += ",\"gamma2_spec_bound\":" + approx_field(report.gamma2_spec_bound);
  out += ",\"gamma1_spec_bound\":" + approx_field(report.gamma1_spec_bound);
  if (report.beta_value) {
    out += ",\"beta\":" + format_double(*report.beta_value);
  }
  if (report.width_mc) {
    out += ",\"width_mc\":{";
    out += "\"mean\":" + format_double(report.width_mc->mean);
    out += ",\"std_err\":" + format_double(report.width_mc->std_err);
    out += ",\"samples\":" + std::to_string(report.width_mc->samples);
    out += '}';
  }
  out += ",\"T_min\":" + approx_field(report.T_min);
  out += ",\"error_bounds\":[";
  for (std::size_t i = 0; i < report.error_bounds.size(); ++i) {
    if (i) out += ',';
    out += "{\"T\":" + std::to_string(report.error_bounds[i].first);
    out += ",\"bound\":" + format_double(report.error_bounds[i].second);
    out += ",\"approx\":true}";
  }
  out += ']';
  append_config_echo(out, config_echo);
  out += '}';
  return out;
}

namespace {

StepRule step_rule_from_json(const json& j) {
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    if (name == "lipschitz") return LipschitzStep{};
    throw SchemaError("unknown step_rule: " + name);
  }
  if (j.is_object()) {
    if (j.contains("fixed")) {
      FixedStep step;
      step.eta = j.at("fixed").get<double>();
      if (!(step.eta > 0.0)) throw SchemaError("fixed step size must be positive");
      return step;
    }
    if (j.contains("backtracking")) {
      const json& params = j.at("backtracking");
      BacktrackingStep step;
      step.beta = require_key(params, "beta").get<double>();
      step.c = require_key(params, "c").get<double>();
      if (!(step.beta > 0.0 && step.beta < 1.0 && step.c > 0.0 && step.c < 1.0)) {
        throw SchemaError("backtracking parameters must lie in (0, 1)");
      }
      return step;
    }
  }
  throw SchemaError("step_rule must be \"lipschitz\", {\"fixed\": eta} or {\"backtracking\": {...}}");
}

std::string step_rule_to_json(const StepRule& rule) {
  if (std::holds_alternative<LipschitzStep>(rule)) return "\"lipschitz\"";
  if (const auto* fixed = std::get_if<FixedStep>(&rule)) {
    return "{\"fixed\":" + format_double(fixed->eta) + "}";
  }
  const auto& bt = std::get<BacktrackingStep>(rule);
  return "{\"backtracking\":{\"beta\":" + format_double(bt.beta) +
         ",\"c\":" + format_double(bt.c) + "}}";
}

SolverConfig solver_config_from_json(const json& j) {
  SolverConfig cfg;
  if (j.contains("max_iters")) cfg.max_iters = j.at("max_iters").get<long long>();
  if (j.contains("grad_map_tol") && !j.at("grad_map_tol").is_null()) {
    cfg.grad_map_tol = j.at("grad_map_tol").get<double>();
    if (!(*cfg.grad_map_tol > 0.0)) throw SchemaError("grad_map_tol must be positive");
  }
  if (j.contains("step_rule")) cfg.step_rule = step_rule_from_json(j.at("step_rule"));
  if (j.contains("record_objectives")) {
    cfg.record_objectives = j.at("record_objectives").get<bool>();
  }
  return cfg;
}

std::string solver_config_to_json(const SolverConfig& cfg) {
  std::string out = "{\"max_iters\":" + std::to_string(cfg.max_iters);
  out += ",\"grad_map_tol\":";
  out += cfg.grad_map_tol ? format_double(*cfg.grad_map_tol) : std::string("null");
  out += ",\"step_rule\":" + step_rule_to_json(cfg.step_rule);
  out += '}';
  return out;
}

template <typename T>
std::vector<T> grid_from_json(const json& j, const char* key) {
  if (!j.is_array() || j.empty()) {
    throw SchemaError(std::string("\"") + key + "\" must be a nonempty array");
  }
  std::vector<T> out;
  for (const auto& v : j) {
    if (!v.is_number_integer() && !v.is_number_unsigned()) {
      throw SchemaError(std::string("\"") + key + "\" must hold integers");
    }
    out.push_back(v.get<T>());
  }
  return out;
}

}  // namespace

ExperimentPlan plan_from_json(const std::string& text) {
  const json j = parse_json(text);
  if (!j.is_object()) throw SchemaError("plan must be a JSON object");

  ExperimentPlan plan;
  try {
  try {
    plan.scenario = scenario_from_string(require_key(j, "scenario").get<std::string>());
  } catch (const ParameterError& e) {
    throw SchemaError(e.what());
  }
  plan.n_grid = grid_from_json<int>(require_key(j, "n_grid"), "n_grid");
  plan.T_grid = grid_from_json<long long>(require_key(j, "T_grid"), "T_grid");
  if (plan.scenario == Scenario::subspace) {
    plan.structure_grid = grid_from_json<int>(require_key(j, "d_grid"), "d_grid");
  } else if (plan.scenario == Scenario::sparse) {
    plan.structure_grid = grid_from_json<int>(require_key(j, "k_grid"), "k_grid");
  }
  plan.trials = require_key(j, "trials").get<int>();
  if (j.contains("noise")) {
    try {
      plan.noise.family = noise_family_from_string(j.at("noise").get<std::string>());
    } catch (const ParameterError& e) {
      throw SchemaError(e.what());
    }
  }
  if (j.contains("target_spec_norm")) {
    plan.target_spec_norm = j.at("target_spec_norm").get<double>();
  }
  if (j.contains("base_seed")) plan.base_seed = j.at("base_seed").get<std::uint64_t>();
  if (j.contains("solver")) plan.solver = solver_config_from_json(j.at("solver"));
  if (j.contains("record_timings")) {
    plan.record_timings = j.at("record_timings").get<bool>();
  }

  try {
    validate_plan(plan);
  } catch (const ParameterError& e) {
    throw SchemaError(std::string("invalid plan: ") + e.what());
  }
  return plan;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("plan file: ") + e.what());
  }
}

std::string plan_to_json(const ExperimentPlan& plan) {
  const auto int_array = [](const auto& values) {
    std::string out = "[";
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(values[i]);
    }
    out += ']';
    return out;
  };
  std::string out = "{";
  out += std::string("\"scenario\":\"") + to_string(plan.scenario) + "\"";
  out += ",\"n_grid\":" + int_array(plan.n_grid);
  out += ",\"T_grid\":" + int_array(plan.T_grid);
  if (plan.scenario == Scenario::subspace) {
    out += ",\"d_grid\":" + int_array(plan.structure_grid);
  } else if (plan.scenario == Scenario::sparse) {
    out += ",\"k_grid\":" + int_array(plan.structure_grid);
  }
  out += ",\"trials\":" + std::to_string(plan.trials);
  out += std::string(",\"noise\":\"") + to_string(plan.noise.family) + "\"";
  out += ",\"target_spec_norm\":" + format_double(plan.target_spec_norm);
  out += ",\"base_seed\":" + std::to_string(plan.base_seed);
  out += ",\"solver\":" + solver_config_to_json(plan.solver);
  out += std::string(",\"record_timings\":") + (plan.record_timings ? "true" : "false");
  out += '}';
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace ldsid
