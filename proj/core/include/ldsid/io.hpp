#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "ldsid/dynamics.hpp"
#include "ldsid/estimators.hpp"
#include "ldsid/experiments.hpp"
#include "ldsid/geometry.hpp"

namespace ldsid {

// Doubles in every emitted file carry 17 significant digits so values
// round-trip bit-exactly.
std::string format_double(double x);

// RFC-4180 field quoting: fields containing commas, quotes or line breaks are
// quoted, with embedded quotes doubled.
std::string csv_escape(const std::string& field);

std::string matrix_to_json_array(const Eigen::MatrixXd& A);  // row-major flat
Eigen::MatrixXd matrix_from_json_array(const std::vector<double>& values,
                                       int rows, int cols);  // row-major flat

// Trajectory file: {"n", "A", "T", "states", "noises", "seed",
// "noise_family"} with matrices row-major and states/noises as arrays of
// n-vectors. An optional "config" object echoes the resolved CLI config.
std::string trajectory_to_json(const LdsModel& model, const Trajectory& traj,
                               const std::string& config_echo = "");

struct LoadedTrajectory {
  Trajectory trajectory;
  std::optional<Eigen::MatrixXd> A_star;  // present when the file carries "A"
};
LoadedTrajectory trajectory_from_json(const std::string& text);

// Model file: {"n", "A"} row-major. Trajectory files qualify too.
std::string model_to_json(const Eigen::MatrixXd& A);
Eigen::MatrixXd model_from_json(const std::string& text);

// Basis file: {"n", "basis": [flat row-major matrices], "offset"?}.
struct LoadedBasis {
  std::vector<Eigen::MatrixXd> basis;
  Eigen::MatrixXd offset;  // zero matrix when absent
};
LoadedBasis basis_from_json(const std::string& text);
std::string basis_to_json(const std::vector<Eigen::MatrixXd>& basis,
                          const Eigen::MatrixXd& offset);

std::string estimate_to_json(const EstimateResult& result,
                             const std::string& constraint_desc,
                             std::optional<double> err_frobenius,
                             const std::optional<FirstOrderReport>& lemma_check,
                             const std::string& config_echo = "");

// Up-to-constant fields are emitted as {"value": v, "approx": true}.
std::string complexity_report_to_json(const ComplexityReport& report,
                                      const std::string& config_echo = "");

// Plan file schema: {"scenario", "n_grid", "T_grid", "d_grid"|"k_grid",
// "trials", "noise"?, "target_spec_norm"?, "base_seed"?, "solver"?,
// "record_timings"?}. Invalid plans throw SchemaError.
ExperimentPlan plan_from_json(const std::string& text);
std::string plan_to_json(const ExperimentPlan& plan);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace ldsid
