#include "ldsid/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "ldsid/errors.hpp"
#include "ldsid/io.hpp"

namespace ldsid {

const char* to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::subspace: return "subspace";
    case Scenario::sparse: return "sparse";
    case Scenario::unconstrained: return "unconstrained";
  }
  return "subspace";
}

Scenario scenario_from_string(const std::string& name) {
  if (name == "subspace") return Scenario::subspace;
  if (name == "sparse") return Scenario::sparse;
  if (name == "unconstrained") return Scenario::unconstrained;
  throw ParameterError("unknown scenario: " + name);
}

namespace {

void require_strictly_increasing(const std::vector<int>& grid, const char* name) {
  if (grid.empty()) throw ParameterError(std::string(name) + " must be nonempty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (grid[i] <= grid[i - 1]) {
      throw ParameterError(std::string(name) + " must be strictly increasing");
    }
  }
}

void require_strictly_increasing(const std::vector<long long>& grid, const char* name) {
  if (grid.empty()) throw ParameterError(std::string(name) + " must be nonempty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (grid[i] <= grid[i - 1]) {
      throw ParameterError(std::string(name) + " must be strictly increasing");
    }
  }
}

}  // namespace

void validate_plan(const ExperimentPlan& plan) {
  require_strictly_increasing(plan.n_grid, "n_grid");
  require_strictly_increasing(plan.T_grid, "T_grid");
  for (int n : plan.n_grid) {
    if (n < 1) throw ParameterError("n_grid entries must be positive");
  }
  for (long long T : plan.T_grid) {
    if (T < 1) throw ParameterError("T_grid entries must be positive");
  }
  if (plan.scenario != Scenario::unconstrained) {
    const char* name = plan.scenario == Scenario::subspace ? "d_grid" : "k_grid";
    require_strictly_increasing(plan.structure_grid, name);
    const int n_min = plan.n_grid.front();
    for (int s : plan.structure_grid) {
      if (s < 1 || s > n_min * n_min) {
        throw ParameterError(std::string(name) + " entries must lie in [1, n^2] for every n in n_grid");
      }
    }
  }
  if (plan.trials < 1) throw ParameterError("trials must be >= 1");
  if (!(plan.target_spec_norm > 0.0 && plan.target_spec_norm < 1.0)) {
    throw ParameterError("target_spec_norm must lie in (0, 1)");
  }
}

int worker_count() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("LDS_ID_THREADS")) {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != env && value >= 1) return static_cast<int>(std::min<long>(value, 1024));
  }
  return static_cast<int>(hw);
}

// Runs fn(0..count-1) on a pool of workers; the first thrown exception is
// rethrown on the caller after all workers join.
void parallel_for(long long count, const std::function<void(long long)>& fn) {
  const int workers =
      static_cast<int>(std::min<long long>(worker_count(), count));
  if (workers <= 1) {
    for (long long i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<long long> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto body = [&]() {
    for (;;) {
      const long long i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) threads.emplace_back(body);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

std::vector<Eigen::MatrixXd> draw_orthonormal_basis(int n, int d, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<Eigen::MatrixXd> basis;
  basis.reserve(static_cast<std::size_t>(d));
  while (static_cast<int>(basis.size()) < d) {
    Eigen::MatrixXd V(n, n);
    for (Eigen::Index i = 0; i < V.size(); ++i) V.data()[i] = rng.next_gaussian();
    // Modified Gram-Schmidt against the accepted matrices.
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& U : basis) V -= U.cwiseProduct(V).sum() * U;
    }
    const double norm = V.norm();
    if (norm < 1e-8) continue;  // resample a degenerate draw
    basis.push_back(V / norm);
  }
  return basis;
}

Eigen::MatrixXd draw_in_span(const std::vector<Eigen::MatrixXd>& basis,
                             double target_spec_norm, SplitMix64& rng) {
  const Eigen::Index n = basis.front().rows();
  for (;;) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (const auto& V : basis) A += rng.next_gaussian() * V;
    const double sigma = spectral_norm(A);
    if (sigma > 0.0) return A * (target_spec_norm / sigma);
  }
}

}  // namespace

std::vector<ExperimentRecord> run_plan(const ExperimentPlan& plan) {
  validate_plan(plan);

  const bool structured = plan.scenario != Scenario::unconstrained;
  const std::size_t n_count = plan.n_grid.size();
  const std::size_t s_count = structured ? plan.structure_grid.size() : 1;
  const std::size_t t_count = plan.T_grid.size();
  const std::size_t trials = static_cast<std::size_t>(plan.trials);
  const long long total =
      static_cast<long long>(n_count * s_count * t_count * trials);

  // Subspace bases (and their constraint sets) are fixed per (n, d) so the
  // T-sweep and all trials at a grid point share one constraint set.
  std::vector<std::vector<Eigen::MatrixXd>> bases(n_count * s_count);
  std::vector<ConstraintSet> subspace_sets;
  if (plan.scenario == Scenario::subspace) {
    subspace_sets.reserve(n_count * s_count);
    for (std::size_t in = 0; in < n_count; ++in) {
      for (std::size_t is = 0; is < s_count; ++is) {
        const std::uint64_t basis_seed = derive_seed(
            plan.base_seed, {0xBA515ULL, static_cast<std::uint64_t>(in),
                             static_cast<std::uint64_t>(is)});
        bases[in * s_count + is] = draw_orthonormal_basis(
            plan.n_grid[in], plan.structure_grid[is], basis_seed);
        subspace_sets.push_back(ConstraintSet::subspace(bases[in * s_count + is]));
      }
    }
  }
  const ConstraintSet unconstrained_set = ConstraintSet::unconstrained();

  std::vector<ExperimentRecord> records(static_cast<std::size_t>(total));
  parallel_for(total, [&](long long task) {
    std::size_t rest = static_cast<std::size_t>(task);
    const std::size_t trial = rest % trials;
    rest /= trials;
    const std::size_t it = rest % t_count;
    rest /= t_count;
    const std::size_t is = rest % s_count;
    const std::size_t in = rest / s_count;

    const int n = plan.n_grid[in];
    const long long T = plan.T_grid[it];
    const int structure = structured ? plan.structure_grid[is] : n * n;
    const std::uint64_t trial_seed = derive_seed(
        plan.base_seed,
        {static_cast<std::uint64_t>(in), static_cast<std::uint64_t>(is),
         static_cast<std::uint64_t>(it), static_cast<std::uint64_t>(trial)});

    ExperimentRecord rec;
    rec.scenario = plan.scenario;
    rec.n = n;
    rec.T = T;
    rec.d_or_k = structure;
    rec.trial_seed = trial_seed;

    const auto start = std::chrono::steady_clock::now();
    try {
      SplitMix64 model_rng(derive_seed(trial_seed, {1}));
      Eigen::MatrixXd A_star;
      const ConstraintSet* K = nullptr;
      ConstraintSet local_set = unconstrained_set;
      switch (plan.scenario) {
        case Scenario::subspace:
          A_star = draw_in_span(bases[in * s_count + is], plan.target_spec_norm,
                                model_rng);
          K = &subspace_sets[in * s_count + is];
          break;
        case Scenario::sparse:
          A_star = random_stable_matrix(n, plan.target_spec_norm, structure,
                                        derive_seed(trial_seed, {2}));
          local_set = ConstraintSet::l1_ball(A_star.lpNorm<1>());  // oracle radius
          K = &local_set;
          break;
        case Scenario::unconstrained:
          A_star = random_stable_matrix(n, plan.target_spec_norm, std::nullopt,
                                        derive_seed(trial_seed, {2}));
          K = &local_set;
          break;
      }

      const LdsModel model(A_star);
      const Trajectory traj =
          simulate(model, plan.noise, T, derive_seed(trial_seed, {3}));
      const DataMatrices data = build_data_matrices(traj);

      const EstimateResult baseline = ols(data);
      const EstimateResult estimate = constrained_ls(data, *K, plan.solver);

      rec.err_fro = (estimate.A_hat - A_star).norm();
      rec.err_spec = spectral_norm(estimate.A_hat - A_star);
      rec.err_ols_fro = (baseline.A_hat - A_star).norm();
      rec.objective = estimate.objective;
      rec.iterations = estimate.iterations;
    } catch (const DivergenceError&) {
      rec.failed = true;
      rec.err_fro = rec.err_spec = rec.err_ols_fro = rec.objective = 0.0;
      rec.iterations = 0;
    }
    if (plan.record_timings) {
      rec.wall_time_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                    start)
              .count();
    }
    records[static_cast<std::size_t>(task)] = std::move(rec);
  });

  return records;
}

const char* to_string(RecordField field) {
  switch (field) {
    case RecordField::n: return "n";
    case RecordField::T: return "T";
    case RecordField::d_or_k: return "d_or_k";
    case RecordField::err_fro: return "err_fro";
    case RecordField::err_spec: return "err_spec";
    case RecordField::err_ols_fro: return "err_ols_fro";
    case RecordField::objective: return "objective";
    case RecordField::iterations: return "iterations";
  }
  return "n";
}

RecordField record_field_from_string(const std::string& name) {
  if (name == "n") return RecordField::n;
  if (name == "T") return RecordField::T;
  if (name == "d_or_k") return RecordField::d_or_k;
  if (name == "err_fro") return RecordField::err_fro;
  if (name == "err_spec") return RecordField::err_spec;
  if (name == "err_ols_fro") return RecordField::err_ols_fro;
  if (name == "objective") return RecordField::objective;
  if (name == "iterations") return RecordField::iterations;
  throw ParameterError("unknown record field: " + name);
}

double record_value(const ExperimentRecord& record, RecordField field) {
  switch (field) {
    case RecordField::n: return static_cast<double>(record.n);
    case RecordField::T: return static_cast<double>(record.T);
    case RecordField::d_or_k: return static_cast<double>(record.d_or_k);
    case RecordField::err_fro: return record.err_fro;
    case RecordField::err_spec: return record.err_spec;
    case RecordField::err_ols_fro: return record.err_ols_fro;
    case RecordField::objective: return record.objective;
    case RecordField::iterations: return static_cast<double>(record.iterations);
  }
  return 0.0;
}

double median(std::vector<double> values) {
  if (values.empty()) throw InsufficientDataError("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

std::map<std::string, SlopeFit> fit_loglog_slope(
    const std::vector<ExperimentRecord>& records, RecordField x_field,
    RecordField y_field, const std::vector<RecordField>& group_by) {
  // group key -> (x -> y samples); diverged trials are excluded from fits.
  std::map<std::string, std::map<double, std::vector<double>>> grouped;
  for (const auto& rec : records) {
    if (rec.failed) continue;
    std::string key;
    for (const auto& field : group_by) {
      if (!key.empty()) key += ',';
      key += to_string(field);
      key += '=';
      std::ostringstream ss;
      ss << record_value(rec, field);
      key += ss.str();
    }
    grouped[key][record_value(rec, x_field)].push_back(record_value(rec, y_field));
  }
  if (grouped.empty()) {
    throw InsufficientDataError("fit_loglog_slope: no usable records");
  }

  std::map<std::string, SlopeFit> fits;
  for (auto& [key, by_x] : grouped) {
    if (by_x.size() < 2) {
      throw InsufficientDataError(
          "fit_loglog_slope: fewer than 2 distinct x values in group \"" + key + "\"");
    }
    std::vector<double> lx, ly;
    for (auto& [x, ys] : by_x) {
      const double med = median(std::move(ys));
      if (!(x > 0.0) || !(med > 0.0)) {
        throw ParameterError(
            "fit_loglog_slope: x values and medians must be positive for a log-log fit");
      }
      lx.push_back(std::log(x));
      ly.push_back(std::log(med));
    }
    const std::size_t m = lx.size();
    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      mean_x += lx[i];
      mean_y += ly[i];
    }
    mean_x /= static_cast<double>(m);
    mean_y /= static_cast<double>(m);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      sxx += (lx[i] - mean_x) * (lx[i] - mean_x);
      sxy += (lx[i] - mean_x) * (ly[i] - mean_y);
      syy += (ly[i] - mean_y) * (ly[i] - mean_y);
    }
    SlopeFit fit;
    fit.points = static_cast<int>(m);
    fit.slope = sxy / sxx;
    fit.intercept = mean_y - fit.slope * mean_x;
    if (syy > 0.0) {
      double ss_res = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
        ss_res += r * r;
      }
      fit.r_squared = 1.0 - ss_res / syy;
    } else {
      fit.r_squared = 1.0;  // constant medians are fitted exactly by slope 0
    }
    fits[key] = fit;
  }
  return fits;
}

std::string records_to_csv(const std::vector<ExperimentRecord>& records) {
  std::string out =
      "scenario,n,T,d_or_k,trial_seed,err_fro,err_spec,err_ols_fro,objective,"
      "iterations,wall_time_ms,failed\n";
  for (const auto& rec : records) {
    out += csv_escape(to_string(rec.scenario));
    out += ',' + std::to_string(rec.n);
    out += ',' + std::to_string(rec.T);
    out += ',' + std::to_string(rec.d_or_k);
    out += ',' + std::to_string(rec.trial_seed);
    out += ',' + format_double(rec.err_fro);
    out += ',' + format_double(rec.err_spec);
    out += ',' + format_double(rec.err_ols_fro);
    out += ',' + format_double(rec.objective);
    out += ',' + std::to_string(rec.iterations);
    out += ',' + format_double(rec.wall_time_ms);
    out += rec.failed ? ",1\n" : ",0\n";
  }
  return out;
}

std::string records_to_jsonl(const std::vector<ExperimentRecord>& records) {
  std::string out;
  for (const auto& rec : records) {
    out += "{\"scenario\":\"";
    out += to_string(rec.scenario);
    out += "\",\"n\":" + std::to_string(rec.n);
    out += ",\"T\":" + std::to_string(rec.T);
    out += ",\"d_or_k\":" + std::to_string(rec.d_or_k);
    out += ",\"trial_seed\":" + std::to_string(rec.trial_seed);
    out += ",\"err_fro\":" + format_double(rec.err_fro);
    out += ",\"err_spec\":" + format_double(rec.err_spec);
    out += ",\"err_ols_fro\":" + format_double(rec.err_ols_fro);
    out += ",\"objective\":" + format_double(rec.objective);
    out += ",\"iterations\":" + std::to_string(rec.iterations);
    out += ",\"wall_time_ms\":" + format_double(rec.wall_time_ms);
    out += rec.failed ? ",\"failed\":true}\n" : ",\"failed\":false}\n";
  }
  return out;
}

}  // namespace ldsid
