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

#ifndef PILAMBDA_EXPERIMENT_HPP
#define PILAMBDA_EXPERIMENT_HPP

#include "pilambda/benchmarks.hpp"
#include "pilambda/driver.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pilambda {

/**
 * Flat experiment description. Every key of the JSON document maps to one
 * field; unknown keys are rejected so typos surface before any run starts.
 * The sweep is the cartesian product mu_values × trajectory_counts ×
 * train_step_counts × seeds.
 */
struct ExperimentConfig {
  std::string problem = "lqr";  // lqr | cartpole | advertising

  // LQR: test 1..3 from the standard drift matrices, or 0 for explicit A/B.
  int lqr_test = 1;
  int lqr_dim = 5;
  std::uint64_t lqr_seed = 7;
  std::optional<Matrix> lqr_A;
  std::optional<Matrix> lqr_B;

  CartPoleSpec cartpole;
  AdvertisingSpec advertising;
  /// Overrides the problem's own discount when set.
  std::optional<double> discount;

  std::string model = "quadratic";  // quadratic | rbf
  int rbf_modes = 50;
  /// Initial quadratic model Q0 = init_q_scale · I + init_q_noise · G with G
  /// standard normal, drawn from the cell seed (shared across μ and budgets).
  double init_q_scale = 0.0;
  double init_q_noise = 0.0;

  /// Unset fields fall back to the problem's default domain.
  std::optional<Box> domain;
  /// Template for every cell; n_trajectories, seed and train.mu/max_steps
  /// are overwritten from the sweep coordinates.
  PiConfig pi;

  std::vector<double> mu_values{0.5};
  std::vector<int> trajectory_counts{10};
  std::vector<int> train_step_counts{1000};
  std::vector<std::uint64_t> seeds{1};

  std::string out_dir = "out";
  bool write_checkpoints = true;

  static ExperimentConfig from_json(const nlohmann::json& doc);
  static ExperimentConfig load(const std::string& path);
  nlohmann::json to_json() const;
  /// Throws ContractViolation naming the offending field.
  void validate() const;
};

/// Coordinates of one sweep cell.
struct Cell {
  double mu = 0.5;
  int n_trajectories = 10;
  int train_steps = 1000;
  std::uint64_t seed = 1;

  std::string key() const;
};

std::vector<Cell> sweep_cells(const ExperimentConfig& config);

ControlProblem build_problem(const ExperimentConfig& config);
Box default_domain(const ExperimentConfig& config);
ValueModel build_initial_model(const ExperimentConfig& config, const ControlProblem& problem, const Cell& cell);
PiConfig build_pi_config(const ExperimentConfig& config, const ControlProblem& problem, const Cell& cell);

struct CellOutcome {
  Cell cell;
  PiResult result;
  double wall_seconds = 0.0;
};

CellOutcome run_cell(const ExperimentConfig& config, const Cell& cell, const RecordCallback& on_record = {});

/// Runs the full sweep and writes records.csv, summary.csv, run.json and
/// per-cell checkpoints under config.out_dir. Progress lines go to `log`.
std::vector<CellOutcome> run_experiment(const ExperimentConfig& config, std::ostream& log);

/// One row of summary.csv.
struct SummaryRow {
  std::string problem;
  double mu = 0.0;
  int n_traj = 0;
  int train_steps = 0;
  std::uint64_t seed = 0;
  int iterations = 0;
  bool diverged = false;
  double mean_residual = 0.0;
  std::optional<double> mean_rollups;
  double wall_seconds = 0.0;
};

extern const char* const kRecordsHeader;
extern const char* const kSummaryHeader;

SummaryRow summary_row(const std::string& problem, const CellOutcome& outcome);
void write_records_csv(std::ostream& out, const std::string& problem, const std::vector<CellOutcome>& outcomes);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> read_summary_csv(std::istream& in);
std::vector<SummaryRow> read_summary_csv(const std::string& path);

/// Seed-aggregated view of one (problem, mu, n_traj, train_steps) group.
struct CellAggregate {
  std::string problem;
  double mu = 0.0;
  int n_traj = 0;
  int train_steps = 0;
  int seeds = 0;
  bool any_diverged = false;
  double mean_residual = 0.0;  // over non-diverged seeds; +inf if none
  std::optional<double> mean_rollups;
};

std::vector<CellAggregate> aggregate_by_cell(const std::vector<SummaryRow>& rows);

struct VerifyLine {
  std::string label;
  bool pass = false;
  std::string detail;
};

/**
 * Compares aggregated cells to a reference document:
 *
 *   { "tolerance_factor": 3, "diverge_threshold": 0.02,
 *     "cells": [ {"problem": "lqr", "mu": 0.2, "n_traj": 6, "train_steps": 1000,
 *                 "expect": 0.0015 | "Diverge", "factor": 3, "metric": "residual"} ],
 *     "orderings": [ {"better": {...cell...}, "worse": {...cell...},
 *                     "metric": "residual" | "rollups", "factor": 1} ] }
 *
 * A numeric residual cell passes iff no seed diverged and the mean residual
 * is at most factor × expect; a rollups cell passes iff the mean count is at
 * least expect / factor. "Diverge" passes iff a seed diverged or the mean
 * residual exceeds diverge_threshold. Orderings are strict: the better cell's
 * metric times factor must beat the worse one's.
 */
std::vector<VerifyLine> verify_tables(const std::vector<SummaryRow>& rows, const nlohmann::json& reference);

/// Reference built from a summary itself: every aggregated cell must match
/// its own residual with factor 1.
nlohmann::json reference_from_summary(const std::vector<SummaryRow>& rows);

}  // namespace pilambda

#endif  // PILAMBDA_EXPERIMENT_HPP
