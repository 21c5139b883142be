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

#include "pilambda/experiment.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace pilambda;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pilambda_test_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig small_lqr(const fs::path& out) {
  ExperimentConfig c = ExperimentConfig::from_json(nlohmann::json::parse(R"({
    "problem": "lqr", "lqr_test": 1, "lqr_dim": 2, "init_q_scale": 2.0,
    "iterations": 3, "residual_points": 500, "mu_values": [0.2, 1.0],
    "trajectory_counts": [3], "train_step_counts": [50], "seeds": [1, 2]
  })"));
  c.out_dir = out.string();
  return c;
}

SummaryRow row(double mu, int n, std::uint64_t seed, double residual, bool diverged = false) {
  SummaryRow r;
  r.problem = "lqr";
  r.mu = mu;
  r.n_traj = n;
  r.train_steps = 1000;
  r.seed = seed;
  r.iterations = 30;
  r.diverged = diverged;
  r.mean_residual = residual;
  return r;
}

nlohmann::json cell_ref(double mu, int n, nlohmann::json expect) {
  return {{"problem", "lqr"}, {"mu", mu}, {"n_traj", n}, {"train_steps", 1000}, {"expect", expect}};
}

}  // namespace

TEST(Config, ParsesFlatKeysAndDefaults) {
  const auto c = ExperimentConfig::from_json(nlohmann::json::parse(R"({
    "description": "x", "_note": 1, "problem": "cartpole", "model": "rbf", "rbf_modes": 7,
    "rollup": true, "gravity": 9.81, "learning_rate": 0.005, "mu_values": [0.8]
  })"));
  EXPECT_EQ(c.problem, "cartpole");
  EXPECT_EQ(c.rbf_modes, 7);
  EXPECT_TRUE(c.pi.rollup.has_value());
  EXPECT_DOUBLE_EQ(c.cartpole.gravity, 9.81);
  EXPECT_DOUBLE_EQ(c.pi.train.learning_rate, 0.005);
  EXPECT_NO_THROW(c.validate());
  const Box d = default_domain(c);
  EXPECT_DOUBLE_EQ(d.upper[3], 2.4);
}

TEST(Config, RejectsUnknownKeysAndNamesTheField) {
  try {
    ExperimentConfig::from_json(nlohmann::json::parse(R"({"mu_value": [0.2]})"));
    FAIL();
  } catch (const ContractViolation& e) {
    EXPECT_NE(std::string(e.what()).find("mu_value"), std::string::npos);
  }
  try {
    ExperimentConfig::from_json(nlohmann::json::parse(R"({"iterations": "many"})"));
    FAIL();
  } catch (const ContractViolation& e) {
    EXPECT_NE(std::string(e.what()).find("iterations"), std::string::npos);
  }
}

TEST(Config, EmptySweepListFailsBeforeRunning) {
  const fs::path out = scratch_dir("empty");
  ExperimentConfig c = small_lqr(out);
  c.seeds.clear();
  std::ostringstream log;
  EXPECT_THROW(run_experiment(c, log), ContractViolation);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Config, JsonRoundTrip) {
  const auto c = small_lqr("/tmp/x");
  const auto back = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
}

TEST(Sweep, CartesianProductAndKeys) {
  auto c = small_lqr("/tmp/x");
  c.trajectory_counts = {2, 4};
  const auto cells = sweep_cells(c);
  EXPECT_EQ(cells.size(), 2u * 2u * 1u * 2u);
  EXPECT_EQ((Cell{0.2, 10, 1000, 1}).key(), "mu0.2_N10_steps1000_seed1");
}

TEST(Sweep, SixByFiveGridHasThirtyCells) {
  ExperimentConfig c;
  c.mu_values = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  c.trajectory_counts = {2, 4, 6, 8, 10};
  c.train_step_counts = {1000};
  c.seeds = {1};
  EXPECT_EQ(sweep_cells(c).size(), 30u);
}

TEST(RunExperiment, WritesArtifactsAndReproducesBitwise) {
  const fs::path a = scratch_dir("repro_a"), b = scratch_dir("repro_b");
  std::ostringstream log;
  run_experiment(small_lqr(a), log);
  run_experiment(small_lqr(b), log);
  for (const char* f : {"records.csv", "summary.csv", "run.json"}) ASSERT_TRUE(fs::exists(a / f)) << f;
  EXPECT_TRUE(fs::exists(a / "checkpoints" / "mu0.2_N3_steps50_seed1.ckpt"));
  EXPECT_EQ(slurp(a / "records.csv"), slurp(b / "records.csv"));
  auto without_wall = [](const fs::path& f) {
    auto rows = read_summary_csv(f.string());
    for (auto& r : rows) r.wall_seconds = 0.0;
    std::ostringstream out;
    write_summary_csv(out, rows);
    return out.str();
  };
  EXPECT_EQ(without_wall(a / "summary.csv"), without_wall(b / "summary.csv"));

  std::istringstream records(slurp(a / "records.csv"));
  std::string header;
  std::getline(records, header);
  EXPECT_EQ(header, kRecordsHeader);
  const auto rows = read_summary_csv((a / "summary.csv").string());
  EXPECT_EQ(rows.size(), 4u);
}

TEST(RunExperiment, CellsAreIndependent) {
  const fs::path full = scratch_dir("indep_full"), part = scratch_dir("indep_part");
  std::ostringstream log;
  run_experiment(small_lqr(full), log);
  auto c = small_lqr(part);
  c.mu_values = {1.0};
  c.seeds = {2};
  run_experiment(c, log);
  const auto all = read_summary_csv((full / "summary.csv").string());
  const auto one = read_summary_csv((part / "summary.csv").string());
  ASSERT_EQ(one.size(), 1u);
  bool found = false;
  for (const auto& r : all) {
    if (r.mu == 1.0 && r.seed == 2) {
      found = true;
      EXPECT_EQ(r.mean_residual, one[0].mean_residual);
      EXPECT_EQ(r.diverged, one[0].diverged);
    }
  }
  EXPECT_TRUE(found);
}

TEST(SummaryCsv, RoundTripAndSchema) {
  std::vector<SummaryRow> rows{row(0.2, 6, 1, 0.00123456789012345), row(1.0, 2, 1, 0.5, true)};
  rows[1].mean_rollups = 12.5;
  std::stringstream buf;
  write_summary_csv(buf, rows);
  const auto back = read_summary_csv(buf);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].mean_residual, rows[0].mean_residual);
  EXPECT_TRUE(back[1].diverged);
  EXPECT_EQ(back[1].mean_rollups, 12.5);
  EXPECT_FALSE(back[0].mean_rollups.has_value());
  std::istringstream wrong("problem,mu\nlqr,0.2\n");
  EXPECT_THROW(read_summary_csv(wrong), ContractViolation);
}

TEST(Aggregate, MeansOverSeeds) {
  const auto agg = aggregate_by_cell({row(0.2, 6, 1, 0.001), row(0.2, 6, 2, 0.003), row(1.0, 6, 1, 0.5, true)});
  ASSERT_EQ(agg.size(), 2u);
  EXPECT_EQ(agg[0].seeds, 2);
  EXPECT_DOUBLE_EQ(agg[0].mean_residual, 0.002);
  EXPECT_TRUE(agg[1].any_diverged);
}

TEST(Verify, ToleranceFactorOnNumericCells) {
  const nlohmann::json ref = {{"tolerance_factor", 3}, {"cells", {cell_ref(0.2, 6, 0.0015)}}};
  EXPECT_TRUE(verify_tables({row(0.2, 6, 1, 0.0045)}, ref)[0].pass);
  EXPECT_FALSE(verify_tables({row(0.2, 6, 1, 0.0046)}, ref)[0].pass);
  EXPECT_FALSE(verify_tables({row(0.2, 6, 1, 0.001, true)}, ref)[0].pass);
}

TEST(Verify, DivergeCells) {
  const nlohmann::json ref = {{"diverge_threshold", 0.02}, {"cells", {cell_ref(1.0, 2, "Diverge")}}};
  EXPECT_TRUE(verify_tables({row(1.0, 2, 1, 0.001, true)}, ref)[0].pass);
  EXPECT_TRUE(verify_tables({row(1.0, 2, 1, 0.021)}, ref)[0].pass);
  EXPECT_FALSE(verify_tables({row(1.0, 2, 1, 0.019)}, ref)[0].pass);
}

TEST(Verify, MissingCellsFail) {
  const nlohmann::json ref = {{"cells", {cell_ref(0.4, 8, 0.0016)}}};
  const auto lines = verify_tables({row(0.2, 6, 1, 0.001)}, ref);
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_FALSE(lines[0].pass);
}

TEST(Verify, Orderings) {
  const nlohmann::json better = {{"problem", "lqr"}, {"mu", 0.8}, {"n_traj", 5}, {"train_steps", 1000}};
  const nlohmann::json worse = {{"problem", "lqr"}, {"mu", 1.0}, {"n_traj", 5}, {"train_steps", 1000}};
  const nlohmann::json ref = {{"orderings", {{{"better", better}, {"worse", worse}, {"metric", "residual"}, {"factor", 10}}}}};
  EXPECT_TRUE(verify_tables({row(0.8, 5, 1, 1e-4), row(1.0, 5, 1, 2e-3)}, ref)[0].pass);
  EXPECT_FALSE(verify_tables({row(0.8, 5, 1, 1e-4), row(1.0, 5, 1, 5e-4)}, ref)[0].pass);
  EXPECT_TRUE(verify_tables({row(0.8, 5, 1, 1e-4), row(1.0, 5, 1, 5e-4, true)}, ref)[0].pass);
}

TEST(Verify, SummaryAgainstItselfPasses) {
  const std::vector<SummaryRow> rows{row(0.2, 6, 1, 0.001), row(0.2, 6, 2, 0.002), row(1.0, 2, 1, 0.3, true)};
  for (const auto& line : verify_tables(rows, reference_from_summary(rows))) EXPECT_TRUE(line.pass) << line.label;
}
