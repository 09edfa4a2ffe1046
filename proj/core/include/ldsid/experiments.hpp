#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ldsid/dynamics.hpp"
#include "ldsid/estimators.hpp"

namespace ldsid {

enum class Scenario { subspace, sparse, unconstrained };

const char* to_string(Scenario scenario);
Scenario scenario_from_string(const std::string& name);

struct ExperimentPlan {
  Scenario scenario = Scenario::subspace;
  std::vector<int> n_grid;
  std::vector<long long> T_grid;
  // d values (subspace) or k values (sparse); ignored when unconstrained.
  std::vector<int> structure_grid;
  int trials = 1;
  NoiseSpec noise;
  double target_spec_norm = 0.7;
  std::uint64_t base_seed = 0;
  SolverConfig solver;
  // Wall-clock timing is off by default so reruns of a plan are byte-identical.
  bool record_timings = false;
};

void validate_plan(const ExperimentPlan& plan);

struct ExperimentRecord {
  Scenario scenario = Scenario::subspace;
  int n = 0;
  long long T = 0;
  int d_or_k = 0;
  std::uint64_t trial_seed = 0;
  double err_fro = 0.0;
  double err_spec = 0.0;
  double err_ols_fro = 0.0;
  double objective = 0.0;
  long long iterations = 0;
  double wall_time_ms = 0.0;
  bool failed = false;
};

// Runs every (grid point, trial) task: draw A*, simulate one trajectory,
// solve both the constrained program and the OLS baseline on it, and emit one
// record. Trials run in a worker pool; records land in canonical
// (n, structure, T, trial) order regardless of scheduling. A solver
// divergence marks the record failed instead of aborting the sweep.
std::vector<ExperimentRecord> run_plan(const ExperimentPlan& plan);

enum class RecordField {
  n,
  T,
  d_or_k,
  err_fro,
  err_spec,
  err_ols_fro,
  objective,
  iterations
};

const char* to_string(RecordField field);
RecordField record_field_from_string(const std::string& name);
double record_value(const ExperimentRecord& record, RecordField field);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int points = 0;  // distinct x values entering the fit
};

// Per group: medians of y over trials at each distinct x, then ordinary least
// squares on (ln x, ln median). Failed records are excluded.
std::map<std::string, SlopeFit> fit_loglog_slope(
    const std::vector<ExperimentRecord>& records, RecordField x_field,
    RecordField y_field, const std::vector<RecordField>& group_by);

double median(std::vector<double> values);

// Worker count for trial pools: LDS_ID_THREADS when set, otherwise the
// logical core count.
int worker_count();

// Runs fn(0 .. count-1) on a pool of worker_count() threads. The first
// exception thrown by any task is rethrown on the caller after the pool
// drains. fn must be safe to call concurrently for distinct indices.
void parallel_for(long long count, const std::function<void(long long)>& fn);

std::string records_to_csv(const std::vector<ExperimentRecord>& records);
std::string records_to_jsonl(const std::vector<ExperimentRecord>& records);

}  // namespace ldsid
