#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "ldsid/dynamics.hpp"
#include "ldsid/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string output;
};

CmdResult run_cli(const std::string& args) {
  const std::string cmd = std::string(LDSID_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  CmdResult result;
  if (!pipe) return result;
  char buf[4096];
  std::size_t got = 0;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) result.output.append(buf, got);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

fs::path fresh_dir(const std::string& tag) {
  static int counter = 0;
  const fs::path dir =
      fs::temp_directory_path() / ("ldsid_cli_" + tag + "_" + std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) { return ldsid::read_text_file(path.string()); }

// Extracts the numeric value following "key=" on any output line.
double parse_metric(const std::string& output, const std::string& key) {
  const auto pos = output.find(key + "=");
  REQUIRE(pos != std::string::npos);
  return std::strtod(output.c_str() + pos + key.size() + 1, nullptr);
}

}  // namespace

TEST_CASE("cli simulate") {
  const fs::path dir = fresh_dir("simulate");

  SUBCASE("writes T+2 states and reports the stability numbers") {
    const CmdResult r = run_cli("simulate --n 5 --T 100 --seed 7 --spec-norm 0.8 --out " +
                                (dir / "t.json").string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("n=5 T=100") != std::string::npos);
    CHECK(parse_metric(r.output, "rho") < 1.0);
    CHECK(parse_metric(r.output, "J") >= 1.0);
    const json traj = json::parse(slurp(dir / "t.json"));
    CHECK(traj.at("states").size() == 102);
    CHECK(traj.at("noises").size() == 101);
    CHECK(traj.at("config").at("command").get<std::string>() == "simulate");
  }

  SUBCASE("identical flags give identical files") {
    const std::string flags = "simulate --n 4 --T 50 --seed 9 --spec-norm 0.6 --out ";
    CHECK(run_cli(flags + (dir / "a.json").string()).exit_code == 0);
    CHECK(run_cli(flags + (dir / "b.json").string()).exit_code == 0);
    CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
  }

  SUBCASE("an unstable matrix is rejected with exit 2") {
    ldsid::write_text_file((dir / "unstable.json").string(),
                           "{\"n\":2,\"A\":[1.1,0.0,0.0,1.1]}");
    const CmdResult r = run_cli("simulate --T 20 --A-file " +
                                (dir / "unstable.json").string() + " --out " +
                                (dir / "t.json").string());
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("1.1") != std::string::npos);  // names the spectral radius
  }

  SUBCASE("config file values are overridden by flags") {
    ldsid::write_text_file((dir / "cfg.json").string(),
                           "{\"n\":3,\"T\":30,\"seed\":5,\"spec_norm\":0.5}");
    const CmdResult r =
        run_cli("simulate --config " + (dir / "cfg.json").string() + " --T 10 --out " +
                (dir / "c.json").string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("n=3 T=10") != std::string::npos);
  }
}

TEST_CASE("cli estimate") {
  const fs::path dir = fresh_dir("estimate");

  SUBCASE("closed-form fit recovers a noise-free trajectory") {
    // One kick of noise, then pure propagation: exact interpolation.
    const Eigen::MatrixXd A = ldsid::random_stable_matrix(3, 0.8, std::nullopt, 101);
    const ldsid::LdsModel model(A);
    std::vector<Eigen::VectorXd> noises(12, Eigen::VectorXd::Zero(3));
    ldsid::SplitMix64 rng(102);
    for (int i = 0; i < 3; ++i) noises[0][i] = rng.next_gaussian();
    const ldsid::Trajectory traj = ldsid::trajectory_from_noises(model, noises);
    ldsid::write_text_file((dir / "noiseless.json").string(),
                           ldsid::trajectory_to_json(model, traj));

    const CmdResult r = run_cli("estimate --traj " + (dir / "noiseless.json").string() +
                                " --constraint ols --out " + (dir / "est.json").string());
    CHECK(r.exit_code == 0);
    CHECK(parse_metric(r.output, "err_frobenius") <= 1e-8);
  }

  SUBCASE("oracle radius requires the system matrix, and the slack prints") {
    CHECK(run_cli("simulate --n 6 --T 300 --seed 3 --spec-norm 0.7 --sparsity 6 --out " +
                  (dir / "t.json").string())
              .exit_code == 0);
    const CmdResult r = run_cli("estimate --traj " + (dir / "t.json").string() +
                                " --constraint l1:oracle --out " +
                                (dir / "est.json").string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("converged=true") != std::string::npos);
    CHECK(parse_metric(r.output, "lemma1_slack") >=
          -1e-6 * std::max(1.0, parse_metric(r.output, "lemma1_lhs")));
    const json est = json::parse(slurp(dir / "est.json"));
    CHECK(est.at("first_order_check").contains("slack"));
    CHECK(est.at("config").at("constraint").get<std::string>() == "l1:oracle");

    // Strip the system matrix: the oracle radius is no longer available.
    json traj = json::parse(slurp(dir / "t.json"));
    traj.erase("A");
    ldsid::write_text_file((dir / "noA.json").string(), traj.dump());
    CHECK(run_cli("estimate --traj " + (dir / "noA.json").string() +
                  " --constraint l1:oracle --out " + (dir / "e.json").string())
              .exit_code == 3);
  }

  SUBCASE("subspace constraint and malformed basis files") {
    CHECK(run_cli("simulate --n 2 --T 60 --seed 4 --spec-norm 0.5 --out " +
                  (dir / "t2.json").string())
              .exit_code == 0);
    ldsid::write_text_file((dir / "basis.json").string(),
                           "{\"n\":2,\"basis\":[[1,0,0,0],[0,0,0,1]]}");
    const CmdResult r = run_cli("estimate --traj " + (dir / "t2.json").string() +
                                " --constraint subspace:" + (dir / "basis.json").string() +
                                " --out " + (dir / "est2.json").string());
    CHECK(r.exit_code == 0);
    const json est = json::parse(slurp(dir / "est2.json"));
    CHECK(std::abs(est.at("A_hat")[1].get<double>()) <= 1e-12);  // off-diagonal zeroed
    CHECK(std::abs(est.at("A_hat")[2].get<double>()) <= 1e-12);

    ldsid::write_text_file((dir / "bad.json").string(), "{\"n\":2,\"basis\":[[1,0]]}");
    CHECK(run_cli("estimate --traj " + (dir / "t2.json").string() +
                  " --constraint subspace:" + (dir / "bad.json").string() + " --out " +
                  (dir / "x.json").string())
              .exit_code == 3);
  }

  SUBCASE("a diverging fixed step exits with code 4") {
    // The feasible set must be unbounded for the iterates to blow up; a
    // one-dimensional subspace does.
    CHECK(run_cli("simulate --n 2 --T 50 --seed 5 --spec-norm 0.6 --out " +
                  (dir / "t3.json").string())
              .exit_code == 0);
    ldsid::write_text_file((dir / "line.json").string(),
                           "{\"n\":2,\"basis\":[[1,0,0,1]]}");
    CHECK(run_cli("estimate --traj " + (dir / "t3.json").string() +
                  " --constraint subspace:" + (dir / "line.json").string() +
                  " --step fixed:1e12 --out " + (dir / "y.json").string())
              .exit_code == 4);
  }
}

TEST_CASE("cli complexity") {
  const fs::path dir = fresh_dir("complexity");

  SUBCASE("subspace table matches the closed-form rate") {
    const CmdResult r = run_cli("complexity --n 4 --d 16 --delta 0.1 --T 100 --T 400 --out " +
                                (dir / "c.json").string());
    CHECK(r.exit_code == 0);
    const json report = json::parse(slurp(dir / "c.json"));
    REQUIRE(report.at("error_bounds").size() == 2);
    const double expected_100 = (std::log(10.0) + 4.0) / 10.0;
    CHECK(report.at("error_bounds")[0].at("bound").get<double>() ==
          doctest::Approx(expected_100).epsilon(1e-15));
    CHECK(report.at("error_bounds")[0].at("approx").get<bool>());
    CHECK(report.at("T_min").at("value").get<double>() == 16.0);
  }

  SUBCASE("sparse scenario with a width estimate") {
    const CmdResult r = run_cli(
        "complexity --n 10 --k 10 --delta 0.1 --T 1000 --width-samples 2000 --seed 1 --out " +
        (dir / "s.json").string());
    CHECK(r.exit_code == 0);
    const json report = json::parse(slurp(dir / "s.json"));
    CHECK(report.at("scenario").get<std::string>() == "sparse");
    CHECK(report.at("width_mc").at("samples").get<int>() == 2000);
    CHECK(report.at("width_mc").at("mean").get<double>() <=
          3.0 * report.at("beta").get<double>());
  }

  SUBCASE("domain gates") {
    CHECK(run_cli("complexity --n 4 --d 16 --delta 1.5 --T 100 --out " +
                  (dir / "x.json").string())
              .exit_code == 2);
    CHECK(run_cli("complexity --n 4 --d 16 --k 4 --delta 0.1 --T 100 --out " +
                  (dir / "y.json").string())
              .exit_code == 2);
    CHECK(run_cli("complexity --n 4 --delta 0.1 --T 100 --out " +
                  (dir / "z.json").string())
              .exit_code == 2);
  }
}

TEST_CASE("cli experiment") {
  const fs::path dir = fresh_dir("experiment");
  const std::string plan_path = (dir / "plan.json").string();
  ldsid::write_text_file(plan_path,
                         "{\"scenario\":\"sparse\",\"n_grid\":[6],\"T_grid\":[80],"
                         "\"k_grid\":[6],\"trials\":1,\"base_seed\":7}");

  SUBCASE("one-point plan yields a one-row csv, byte-stable across reruns") {
    const std::string out1 = (dir / "run1").string();
    const std::string out2 = (dir / "run2").string();
    CHECK(run_cli("experiment --plan " + plan_path + " --out " + out1).exit_code == 0);
    CHECK(run_cli("experiment --plan " + plan_path + " --out " + out2).exit_code == 0);

    const std::string csv = slurp(out1 + ".csv");
    CHECK(csv == slurp(out2 + ".csv"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);  // header + 1 row
    CHECK(csv.rfind("scenario,n,T,d_or_k,trial_seed,err_fro,err_spec,err_ols_fro,"
                    "objective,iterations,wall_time_ms,failed\n",
                    0) == 0);
    CHECK(slurp(out1 + ".jsonl") == slurp(out2 + ".jsonl"));

    const json summary = json::parse(slurp(out1 + "_summary.json"));
    CHECK(summary.at("records").get<int>() == 1);
    CHECK(summary.at("failures").get<int>() == 0);
    CHECK(summary.at("config").at("scenario").get<std::string>() == "sparse");
  }

  SUBCASE("bundled plan files run end to end") {
    const std::string bundled = std::string(LDSID_CONFIG_DIR) + "/sparse_vs_ols.json";
    const std::string out = (dir / "bundled").string();
    CHECK(run_cli("experiment --plan " + bundled + " --out " + out).exit_code == 0);
    const json summary = json::parse(slurp(out + "_summary.json"));
    CHECK(summary.at("records").get<int>() == 30);
    REQUIRE(summary.at("groups").size() == 1);
    // The structured fit beats the baseline at this grid point.
    CHECK(summary.at("groups")[0].at("median_err_fro").get<double>() <
          summary.at("groups")[0].at("median_err_ols_fro").get<double>());
  }

  SUBCASE("invalid plan schema exits with 3") {
    ldsid::write_text_file((dir / "bad.json").string(), "{\"scenario\":\"sparse\"}");
    CHECK(run_cli("experiment --plan " + (dir / "bad.json").string() + " --out " +
                  (dir / "bad").string())
              .exit_code == 3);
    CHECK(run_cli("experiment --plan " + (dir / "missing.json").string() + " --out " +
                  (dir / "m").string())
              .exit_code == 3);
  }

  SUBCASE("a grid point whose trials all diverge exits with 5") {
    ldsid::write_text_file(
        (dir / "diverge.json").string(),
        "{\"scenario\":\"unconstrained\",\"n_grid\":[6],\"T_grid\":[80],"
        "\"trials\":2,\"base_seed\":7,"
        "\"solver\":{\"step_rule\":{\"fixed\":1e12},\"max_iters\":200}}");
    const CmdResult r = run_cli("experiment --plan " + (dir / "diverge.json").string() +
                                " --out " + (dir / "div").string());
    CHECK(r.exit_code == 5);
    const std::string csv = slurp((dir / "div").string() + ".csv");
    CHECK(csv.find(",1\n") != std::string::npos);  // failed flag set
  }
}
