/*
 Copyright 2026 The pilambda Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

// Command-line front end: run experiment sweeps, verify tables, and print
// theory bounds or LQR oracle solutions.

#include "pilambda/benchmarks.hpp"
#include "pilambda/evaluation.hpp"
#include "pilambda/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>

using namespace pilambda;

namespace {

struct RunOptions {
  std::string config_path;
  std::vector<double> mu;
  std::vector<int> trajectories;
  std::vector<int> train_steps;
  std::vector<std::uint64_t> seeds;
  int iterations = 0;
  int workers = -1;
  std::string out_dir;
  std::string problem;
};

int cmd_run(const RunOptions& o) {
  ExperimentConfig config = o.config_path.empty() ? ExperimentConfig{} : ExperimentConfig::load(o.config_path);
  if (!o.problem.empty()) config.problem = o.problem;
  if (!o.mu.empty()) config.mu_values = o.mu;
  if (!o.trajectories.empty()) config.trajectory_counts = o.trajectories;
  if (!o.train_steps.empty()) config.train_step_counts = o.train_steps;
  if (!o.seeds.empty()) config.seeds = o.seeds;
  if (o.iterations > 0) config.pi.n_iterations = o.iterations;
  if (o.workers >= 0) config.pi.par.workers = o.workers;
  if (!o.out_dir.empty()) config.out_dir = o.out_dir;
  run_experiment(config, std::cout);
  std::cout << "wrote " << config.out_dir << "/{records.csv,summary.csv,run.json}\n";
  return 0;
}

int cmd_verify(const std::string& summary_path, const std::string& reference_path) {
  const auto rows = read_summary_csv(summary_path);
  nlohmann::json reference;
  if (reference_path.ends_with(".csv")) {
    reference = reference_from_summary(read_summary_csv(reference_path));
  } else {
    std::ifstream in(reference_path);
    if (!in) throw ContractViolation("verify: cannot open '" + reference_path + "'");
    reference = nlohmann::json::parse(in, nullptr, true, true);
  }
  int failures = 0;
  for (const auto& line : verify_tables(rows, reference)) {
    std::cout << (line.pass ? "PASS " : "FAIL ") << line.label << ": " << line.detail << '\n';
    failures += line.pass ? 0 : 1;
  }
  std::cout << (failures == 0 ? "all cells pass" : std::to_string(failures) + " cell(s) failed") << '\n';
  return failures == 0 ? 0 : 1;
}

int cmd_bounds(const AssumptionConstants& c, double alpha, const std::vector<double>& rhos, int iterate) {
  const BoundReport r = theory_bounds(c, alpha);
  std::cout << std::setprecision(10) << "C1   " << r.C1 << "\nC2   " << r.C2 << "\nC3   " << r.C3 << "\nC4   " << r.C4
            << "\nrho1 " << r.rho1 << "\nrho2 " << r.rho2 << '\n';
  for (double rho : rhos) {
    std::cout << "eta(" << rho << ") ";
    try {
      std::cout << r.eta(rho) << '\n';
    } catch (const BoundInapplicable& e) {
      std::cout << "inapplicable: " << e.what() << '\n';
    }
    if (iterate > 0) {
      BoundState s = induced_bound_state(c, 0.0, 0.0);
      try {
        for (int k = 1; k <= iterate; ++k) s = bound_recurrence_step(c, rho, s);
        std::cout << "  after " << iterate << " steps: lam " << s.lam << "  lam' " << s.lam_prime << "  a " << s.a
                  << "  a' " << s.a_prime << '\n';
      } catch (const BoundInapplicable& e) {
        std::cout << "  recurrence: " << e.what() << '\n';
      }
    }
  }
  return 0;
}

int cmd_oracle(int test, int dim, std::uint64_t seed, double discount, double gain) {
  LqrSpec spec = lqr_test_spec(test, dim, seed);
  if (discount > 0.0) spec.discount = discount;
  const Eigen::IOFormat fmt(Eigen::FullPrecision, 0, " ", "\n", "  ");
  std::cout << "A =\n" << spec.A.format(fmt) << "\nrho = " << spec.discount << '\n';
  const Matrix P = riccati_oracle(spec);
  std::cout << "Riccati P =\n" << P.format(fmt) << "\nresidual " << riccati_residual(spec, P) << '\n';
  if (gain >= 0.0) {
    const Matrix K = gain * Matrix::Identity(spec.B.cols(), spec.A.rows());
    std::cout << "Lyapunov P_K for K = " << gain << " I =\n" << lyapunov_policy_oracle(spec, K).format(fmt) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PI-lambda: policy iteration on value-gradient characteristics"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Execute an experiment sweep");
  run_cmd->add_option("--config", run.config_path, "JSON experiment config")->check(CLI::ExistingFile);
  run_cmd->add_option("--problem", run.problem, "lqr | cartpole | advertising");
  run_cmd->add_option("--mu", run.mu, "Loss weights to sweep");
  run_cmd->add_option("--trajectories", run.trajectories, "Trajectory counts N to sweep");
  run_cmd->add_option("--train-steps", run.train_steps, "ADAM step budgets to sweep");
  run_cmd->add_option("--seed", run.seeds, "Seeds to sweep");
  run_cmd->add_option("--iterations", run.iterations, "Policy iterations per cell");
  run_cmd->add_option("--workers", run.workers, "OpenMP workers (1 = serial reference, 0 = default)");
  run_cmd->add_option("--out-dir", run.out_dir, "Output directory");

  std::string summary_path, reference_path;
  auto* verify_cmd = app.add_subcommand("verify", "Compare a summary.csv against reference table cells");
  verify_cmd->add_option("summary", summary_path, "summary.csv to check")->required()->check(CLI::ExistingFile);
  verify_cmd->add_option("reference", reference_path, "reference JSON, or another summary.csv")
      ->required()
      ->check(CLI::ExistingFile);

  AssumptionConstants constants;
  double alpha = 2.0;
  std::vector<double> rhos;
  int iterate = 0;
  auto* bounds_cmd = app.add_subcommand("bounds", "Print the bound constants and discount thresholds");
  bounds_cmd->add_option("--g-bar", constants.g_bar);
  bounds_cmd->add_option("--g2-bar", constants.g2_bar);
  bounds_cmd->add_option("--l-bar", constants.l_bar);
  bounds_cmd->add_option("--l1-bar", constants.l1_bar);
  bounds_cmd->add_option("--l2-bar", constants.l2_bar);
  bounds_cmd->add_option("--c0", constants.c0);
  bounds_cmd->add_option("--c-s", constants.c_s);
  bounds_cmd->add_option("--c-bar", constants.c_bar);
  bounds_cmd->add_option("--alpha", alpha, "Weight exponent (> 1)");
  bounds_cmd->add_option("--rho", rhos, "Discounts at which to evaluate the contraction factor");
  bounds_cmd->add_option("--iterate", iterate, "Also step the bound recurrences this many times at each rho");

  int test = 1, dim = 5;
  std::uint64_t seed = 7;
  double discount = 0.0, gain = -1.0;
  auto* oracle_cmd = app.add_subcommand("oracle", "Print the Riccati (and optionally Lyapunov) oracle solution");
  oracle_cmd->add_option("--test", test, "LQR test 1, 2 or 3")->check(CLI::Range(1, 3));
  oracle_cmd->add_option("--dim", dim, "State dimension");
  oracle_cmd->add_option("--seed", seed, "Seed of the random drift matrix");
  oracle_cmd->add_option("--discount", discount, "Override the discount");
  oracle_cmd->add_option("--gain", gain, "Also evaluate the fixed policy a = -gain x");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return cmd_run(run);
    if (*verify_cmd) return cmd_verify(summary_path, reference_path);
    if (*bounds_cmd) return cmd_bounds(constants, alpha, rhos, iterate);
    if (*oracle_cmd) return cmd_oracle(test, dim, seed, discount, gain);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
